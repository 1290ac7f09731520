import math

radius = 2
area = math.pi * radius ** 2
print(area)
print(undefined_thing)
print("unreachable")
