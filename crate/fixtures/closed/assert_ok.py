values = [1, 2, 3]
assert len(values) == 3, "length mismatch"
assert all(v > 0 for v in values)
print("checked", values)
