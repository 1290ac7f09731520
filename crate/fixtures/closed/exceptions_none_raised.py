def safe_div(a, b):
    try:
        result = a / b
    except ZeroDivisionError:
        result = None
    return result


def also_safe(a, b):
    try:
        return a / b
    except ZeroDivisionError:
        return None


print(safe_div(6, 3), also_safe(1, 4))
print(safe_div(1, 0), also_safe(2, 0))
