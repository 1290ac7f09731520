label = "big" if size > limit else "small"
print(label)
