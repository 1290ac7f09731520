import io

with io.StringIO("x\ny\n") as fh:
    rows = fh.read().split()
    print(rows)
if not rows:
    print("empty")
