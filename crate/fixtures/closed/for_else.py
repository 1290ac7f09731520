for word in ["alpha", "beta"]:
    print(word)
else:
    print("done")
for i in range(5):
    if i == 2:
        break
print(i)
