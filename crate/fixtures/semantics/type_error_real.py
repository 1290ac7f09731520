def join(parts):
    return ", ".join(parts)


print(join(["a", "b"]))
print(join([1, 2]))
