first, *rest = [1, 2, 3, 4]
a, (b, c) = 5, (6, 7)
print(first, rest, a, b, c)
merged = {**{"x": 1}, **{"y": 2}}
print([*range(3), *rest], merged)
