import json

payload = {"tags": tags, "user": user.name}
text = json.dumps(payload)
print(text)
