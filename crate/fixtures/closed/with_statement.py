import io

buffer = io.StringIO()
with buffer as handle:
    handle.write("hello")
    print(handle.getvalue())
print(buffer.closed)
