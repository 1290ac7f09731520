class Empty:
    pass


def todo():
    ...


todo()
print(Empty.__name__, todo())
