import os

count = 0
for entry in entries:
    if entry.endswith(".py"):
        count += 1
print(os.path.join(root, str(count)))
