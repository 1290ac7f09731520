def gen():
    yield 1
    yield 2
    raise RuntimeError("generator broke")


for value in gen():
    print(value)
