def outer(items):
    def inner(x):
        return x * factor
    return [inner(i) for i in items]


print(outer(numbers))
