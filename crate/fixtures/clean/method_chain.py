words = document.text.split()
lengths = [len(w) for w in words]
print(max(lengths))
