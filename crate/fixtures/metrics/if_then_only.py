x = 5
if x > 3:
    y = 1
else:
    y = 2
print(y)
