result = max(
    [4, 8, 15],
    key=lambda v: v % 7,
)
text = ("multi"
        "line"
        "string")
print(result, text)
