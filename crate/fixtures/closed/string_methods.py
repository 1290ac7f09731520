line = "  key = value ; other = thing  "
parts = [p.strip() for p in line.split(";")]
pairs = dict(p.split(" = ") for p in parts)
print(pairs)
print(line.strip().startswith("key"), line.count("="))
