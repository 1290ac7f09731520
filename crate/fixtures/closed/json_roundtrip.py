import json

payload = {"ids": [1, 2, 3], "ok": True, "name": None}
text = json.dumps(payload, sort_keys=True)
print(text)
print(json.loads(text)["ids"][1])
