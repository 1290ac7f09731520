items = [5, 3, 9, 1]
items.append(4)
items.sort()
print(items, items[-1], items[::2])
print(sum(items), max(items), min(items))
