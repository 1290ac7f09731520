attempt = 0
while attempt < max_attempts:
    attempt += 1
    if ping(host):
        break
else:
    print("gave up")
print(attempt)
