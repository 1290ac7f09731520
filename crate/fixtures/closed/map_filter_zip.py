a = [1, 2, 3]
b = ["x", "y", "z"]
print(list(map(str, a)), list(filter(lambda v: v > 1, a)))
print(dict(zip(b, a)), list(enumerate(b, start=1)))
