numbers = range(10)
squares = [n * n for n in numbers if n % 2 == 0]
table = {n: n + 1 for n in squares}
unique = {n % 3 for n in numbers}
print(squares, table, sorted(unique))
print(sum(n for n in numbers))
