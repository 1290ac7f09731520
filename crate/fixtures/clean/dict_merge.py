merged = dict(defaults)
merged.update(overrides)
print(sorted(merged))
