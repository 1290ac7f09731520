results = []
for raw in ["1", "x", "3"]:
    try:
        results.append(int(raw))
    except ValueError:
        results.append(-1)
    else:
        results.append(0)
    finally:
        results.append(None)
print(results)
