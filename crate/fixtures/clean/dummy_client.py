response = client.get("/status")
body = response.json()
print(body)
