word = "naïve café"
print(word.upper(), len(word))
print("emoji \u2603", word.encode("utf-8"))
