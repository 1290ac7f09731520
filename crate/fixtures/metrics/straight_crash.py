a = 1
b = a + 1
c = b / 0
d = c + 1
