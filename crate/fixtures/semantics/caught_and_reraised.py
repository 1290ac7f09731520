def parse(text):
    try:
        return int(text)
    except ValueError as exc:
        print("bad input:", exc)
        raise KeyError(text) from exc


print(parse("12"))
parse("twelve")
