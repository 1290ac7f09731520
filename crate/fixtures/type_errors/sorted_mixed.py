ranked = sorted(scores)
print(ranked[0])
