settings = load_settings(path)
if settings.get("debug"):
    print("debug on")
else:
    print("debug off")
print(settings["name"])
