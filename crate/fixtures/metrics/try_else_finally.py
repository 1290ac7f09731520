def check(v):
    try:
        r = 10 / v
    except ZeroDivisionError:
        r = None
    else:
        r = r + 1
    finally:
        print("checked", v)
    return r


print(check(5))
