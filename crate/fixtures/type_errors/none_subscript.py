config = load_config(config_path)
timeout = config["timeout"]
print(timeout)
