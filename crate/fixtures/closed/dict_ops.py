config = {"depth": 3, "verbose": True}
config["name"] = "run"
for key in sorted(config):
    print(key, config[key])
print(config.get("missing", 0))
