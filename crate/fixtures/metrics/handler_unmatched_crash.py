items = {}
try:
    x = items["missing"]
except IndexError:
    x = None
print(x)
