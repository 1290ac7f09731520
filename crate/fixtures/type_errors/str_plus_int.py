count = len(items)
summary = count + " items"
print(summary)
