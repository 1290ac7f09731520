records = [
    {"name": "b", "score": 2},
    {"name": "a", "score": 2},
    {"name": "c", "score": 1},
]
records.sort(key=lambda r: (-r["score"], r["name"]))
print([r["name"] for r in records])
