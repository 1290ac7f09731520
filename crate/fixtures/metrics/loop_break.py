for i in range(10):
    if i == 3:
        break
else:
    print("exhausted")
n = 0
while True:
    n += 1
    if n > 2:
        break
print(i, n)
