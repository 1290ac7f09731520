for prop, value in declarations:
    prop = prop.lower()
    value = value.lower()
