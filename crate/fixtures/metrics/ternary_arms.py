values = [1, 2, 3]
labels = ["odd" if v % 2 else "even" for v in values]
flag = "yes" if len(values) > 5 else "no"
print(labels, flag)
