def validate(v):
    if v < 0:
        raise ValueError("negative")
    return v


try:
    validate(-1)
except ValueError as e:
    print("caught", e)
print(validate(2))
