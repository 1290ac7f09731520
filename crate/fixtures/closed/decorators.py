import functools


def logged(fn):
    @functools.wraps(fn)
    def wrapper(*args):
        print("call", fn.__name__, args)
        return fn(*args)

    return wrapper


@logged
def double(x):
    return 2 * x


print(double(21))
