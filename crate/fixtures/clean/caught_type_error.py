try:
    value = int(raw) + offset
except TypeError:
    value = 0
print(value)
