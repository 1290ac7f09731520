class Thing:
    pass


t = Thing()
t.size = 4
print(t.size)
print(t.weight)
