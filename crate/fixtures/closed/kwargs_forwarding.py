def inner(a, b=0, *, c=1):
    return a + b + c


def outer(*args, **kwargs):
    return inner(*args, **kwargs)


print(outer(1), outer(1, 2), outer(1, b=2, c=3))
