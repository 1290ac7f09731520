values = [3, -1, 0, 8]
signs = ["pos" if v > 0 else "neg" if v < 0 else "zero" for v in values]
print(signs)
