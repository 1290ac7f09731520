width = 8
value = 3.14159
label = "pi"
print(f"{label!r:>{width}} = {value:.2f}")
print(f"{'nested'} {width * 2} {value:{width}.1f}")
