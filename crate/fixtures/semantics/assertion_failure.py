size = 3
assert size > 0
print("size ok")
assert size > 5, f"size {size} too small"
