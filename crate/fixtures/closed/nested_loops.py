grid = []
for r in range(3):
    row = []
    for c in range(3):
        row.append(r * c)
    grid.append(row)
print(grid)
