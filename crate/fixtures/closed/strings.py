name = "partial"
print(name.upper(), name[1:4], len(name))
print(name.replace("a", "o").title())
print("-".join(sorted(set(name))))
