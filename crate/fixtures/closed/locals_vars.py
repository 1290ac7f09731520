def snapshot(a, b):
    c = a + b
    return sorted(locals())


class Box:
    size = 3


print(snapshot(1, 2), vars(Box)["size"], "size" in dir(Box))
