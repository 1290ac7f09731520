def area(w, h=2):
    return w * h


def describe(*args, **kwargs):
    return len(args), sorted(kwargs)


print(area(3), area(3, h=4))
print(describe(1, 2, x=3, y=4))
