count = int(text)
print(count)
