def outer(items):
    def inner(v):
        return v.upper()

    return [inner(i) for i in items]


print(outer(["a"]))
print(outer([1]))
