total = 0
for item in []:
    total += item
while total > 10:
    total -= 1
print(total)
