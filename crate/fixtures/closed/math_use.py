import math

r = 2.0
print(round(math.pi * r ** 2, 4), math.sqrt(16), math.floor(2.7))
print(math.gcd(12, 18), math.isclose(0.1 + 0.2, 0.3))
