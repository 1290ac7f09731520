try:
    data = fetch(url)
except ConnectionError:
    data = None
if data is None:
    print("offline")
print(len(data))
