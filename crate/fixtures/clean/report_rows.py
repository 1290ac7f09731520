for name, score in rows:
    if score > threshold:
        print(name, "pass")
    else:
        print(name, "fail")
