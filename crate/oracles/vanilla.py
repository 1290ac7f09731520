# Runs a snippet unmodified and prints {"stdout_b64", "terminal"} as JSON.
# Exception classes are named like the hook runtime names them: the bare
# qualname for builtins and __main__, module-qualified otherwise.
import base64
import io
import json
import os
import sys

path = sys.argv[1]
src = open(path, encoding="utf-8").read()
name = os.path.basename(path)
if not name.endswith(".py"):
    name = "snippet.py"


def cls_name(t):
    mod = getattr(t, "__module__", "builtins")
    if mod in ("builtins", "__main__"):
        return t.__qualname__
    return mod + "." + t.__qualname__


def clean(s):
    return s.encode("utf-8", "backslashreplace").decode("utf-8")


real = sys.stdout
buf = io.BytesIO()
out = io.TextIOWrapper(buf, encoding="utf-8", errors="backslashreplace", write_through=True)
sys.stdout = out
sys.argv = [name]
g = {"__name__": "__main__", "__file__": name, "__builtins__": __builtins__}
try:
    exec(compile(src, name, "exec", dont_inherit=True), g)
    terminal = {"kind": "completed"}
except SystemExit as e:
    if e.code is None or e.code == 0:
        terminal = {"kind": "completed"}
    else:
        terminal = {"kind": "crashed", "class": "SystemExit", "message": clean(str(e.code))}
except BaseException as e:
    terminal = {"kind": "crashed", "class": clean(cls_name(type(e))), "message": clean(str(e))}
out.flush()
data = buf.getvalue()
sys.stdout = real
print(json.dumps({"stdout_b64": base64.b64encode(data).decode("ascii"), "terminal": terminal}))
