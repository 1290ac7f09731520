def describe(size):
    return "size=%d" % len(size)


print(describe(batch_size))
