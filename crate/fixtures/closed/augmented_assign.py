counts = {"a": 1}
counts["a"] += 4
values = [1, 2]
values *= 2
text = "ab"
text += "cd"
print(counts, values, text)
