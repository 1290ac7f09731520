data = [4, 7, 1, 9]
if (n := len(data)) > 3:
    print("long", n)
total = 0
while (item := data.pop()) != 7:
    total += item
print(total, data)
