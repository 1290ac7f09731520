raw = b"hello world"
print(raw.upper(), raw.split(b" "), raw.replace(b"o", b"0"))
print(raw.decode("ascii").title(), len(raw))
