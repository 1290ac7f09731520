def unused(x):
    y = x + 1
    return y


def used():
    return 42


print(used())
