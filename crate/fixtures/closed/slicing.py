data = list(range(20))
print(data[2:10:3], data[::-5])
data[1:3] = ["x", "y"]
del data[4]
print(data[:6])
