total = compute(values)
print(total)
ratio = total / count
print(ratio)
