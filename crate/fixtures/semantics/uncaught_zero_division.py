values = [3, 0]
print("start")
ratio = values[0] / values[1]
print("unreachable", ratio)
