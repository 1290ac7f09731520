import functools


def trace(fn):
    @functools.wraps(fn)
    def wrapper(*a):
        return fn(*a)
    return wrapper


@trace
def square(x):
    return x * x


@trace
def cube(x):
    return x ** 3


print(square(4))
