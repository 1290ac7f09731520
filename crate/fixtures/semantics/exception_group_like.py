errors = []
for i in range(3):
    try:
        if i == 1:
            raise ValueError(f"bad {i}")
        errors.append(None)
    except ValueError as e:
        errors.append(str(e))
print(errors)
raise LookupError(errors[1])
