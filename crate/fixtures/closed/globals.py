total = 0


def add(n):
    global total
    total += n


add(4)
add(6)
print(total)
