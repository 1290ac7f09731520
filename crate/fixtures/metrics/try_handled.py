try:
    value = int("abc")
except ValueError:
    value = 0
except TypeError:
    value = -1
print(value)
