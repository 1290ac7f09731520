for record in records:
    print("row")
print("done")
