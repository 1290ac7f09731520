import ast
import base64
import builtins
import dis
import importlib
import io
import json
import os
import signal
import subprocess
import sys
import time

_PIN = os.fdopen(os.dup(0), "r", encoding="utf-8", newline="\n")
_POUT = os.fdopen(os.dup(1), "w", encoding="utf-8", newline="\n")
_null = os.open(os.devnull, os.O_RDWR)
os.dup2(_null, 0)
os.dup2(_null, 1)
os.close(_null)
sys.stdin = open(os.devnull, "r")
sys.stdout = open(os.devnull, "w")
sys.setrecursionlimit(3000)

SNIPPET = "<snippet>"
_ITER_OPS = {dis.opmap[n] for n in ("FOR_ITER", "YIELD_FROM", "END_ASYNC_FOR") if n in dis.opmap}


def _clean(s):
    return s.encode("utf-8", "backslashreplace").decode("utf-8")


def _send(msg):
    _POUT.write(json.dumps(msg) + "\n")
    _POUT.flush()


def _recv():
    line = _PIN.readline()
    if not line:
        os._exit(3)
    return json.loads(line)


def _cls_name(t):
    mod = getattr(t, "__module__", "builtins")
    if mod in ("builtins", "__main__"):
        return t.__qualname__
    return mod + "." + t.__qualname__


def _fmt(e):
    msg = str(e)
    name = _cls_name(type(e))
    return _clean(name + ": " + msg if msg else name)


class DummyObject:
    def __getattr__(self, name):
        if name.startswith("__") and name.endswith("__"):
            raise AttributeError(name)
        return DummyObject()

    def __call__(self, *args, **kwargs):
        return DummyObject()

    def __repr__(self):
        return "DummyObject()"


def DummyCall(*args, **kwargs):
    return DummyObject()


class DummyResource:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def __iter__(self):
        return iter(())

    def read(self, *args, **kwargs):
        return ""

    def readline(self, *args, **kwargs):
        return ""

    def readlines(self, *args, **kwargs):
        return []

    def write(self, *args, **kwargs):
        return 0

    def flush(self):
        pass

    def close(self):
        pass

    def __getattr__(self, name):
        if name.startswith("__") and name.endswith("__"):
            raise AttributeError(name)
        return DummyObject()

    def __repr__(self):
        return "DummyResource()"


_DUMMY_NS = {"DummyObject": DummyObject, "DummyCall": DummyCall, "DummyResource": DummyResource}


def _make_dummy(expr, module):
    ns = dict(_DUMMY_NS)
    if module:
        try:
            ns[module] = importlib.import_module(module)
        except Exception:
            return DummyObject(), True
    try:
        return eval(expr, ns), False
    except Exception:
        return DummyObject(), True


class _RunTimeout(BaseException):
    pass


class _CheckTimeout(BaseException):
    pass


class _State:
    def __init__(self):
        self.run_deadline = None
        self.check_deadline = None
        self.armed = False
        self.dispatching = False
        self.timed_out = False
        self.staged = None
        self.has_staged = False
        self.call_names = {}
        self.cache = {}
        self.attr_cache = {}
        self.arms = set()
        self.tracer = None
        self.file = "snippet.py"


_S = _State()


def _rearm():
    now = time.monotonic()
    ds = [d for d in (_S.check_deadline, None if _S.timed_out else _S.run_deadline) if d is not None]
    if _S.timed_out and _S.armed:
        ds.append(now + 0.05)
    if ds:
        signal.setitimer(signal.ITIMER_REAL, max(min(ds) - now, 0.001))
    else:
        signal.setitimer(signal.ITIMER_REAL, 0)


def _on_alarm(signum, frame):
    now = time.monotonic()
    if _S.check_deadline is not None and now >= _S.check_deadline:
        _S.check_deadline = None
        _rearm()
        raise _CheckTimeout()
    if _S.run_deadline is not None and now >= _S.run_deadline:
        _S.timed_out = True
    if _S.timed_out and _S.armed and not _S.dispatching:
        if frame is None or frame.f_code is not _run_program.__code__:
            _rearm()
            raise _RunTimeout()
    _rearm()


signal.signal(signal.SIGALRM, _on_alarm)


class _Tracer:
    def __init__(self, owners, credits):
        self.owners = owners
        self.credits = credits
        self.completed = set()
        self.pending = {}
        self.skip = {}
        self.last_line = None

    def owner(self, ln):
        if ln is None or ln <= 0 or ln >= len(self.owners):
            return 0
        return self.owners[ln]

    def global_trace(self, frame, event, arg):
        code = frame.f_code
        if code.co_filename != SNIPPET:
            return None
        name = code.co_name
        if name != "<module>":
            if name.startswith("<"):
                return None
            if code not in self.skip:
                self.skip[code] = self.owner(code.co_firstlineno)
            if event == "call":
                # statements that never fire a line event, e.g. docstrings
                self.completed.update(self.credits.get(self.skip[code], ()))
        return self.local_trace

    def local_trace(self, frame, event, arg):
        pending = self.pending
        if event == "line":
            ln = frame.f_lineno
            own = self.owner(ln)
            st = pending.get(frame)
            if st is not None and st[0] == own:
                return self.local_trace
            if own == self.skip.get(frame.f_code, -1):
                return self.local_trace
            self.last_line = ln
            if st is not None and not st[1] and st[0]:
                self.completed.add(st[0])
            pending[frame] = [own, False]
        elif event == "exception":
            st = pending.get(frame)
            if st is not None:
                et = arg[0]
                if et is SystemExit and getattr(arg[1], "code", 1) in (None, 0):
                    pass
                elif issubclass(et, (StopIteration, StopAsyncIteration)) and frame.f_code.co_code[frame.f_lasti] in _ITER_OPS:
                    pass
                else:
                    st[1] = True
        elif event == "return":
            st = pending.pop(frame, None)
            if st is not None and not st[1] and st[0]:
                self.completed.add(st[0])
        return self.local_trace

    def cancel(self, frame):
        self.pending.pop(frame, None)


def _dispatch(iid, kind, name, err):
    _send({"type": "query", "iid": iid, "kind": kind, "name": name, "error": _fmt(err)})
    tracer = sys.gettrace()
    sys.settrace(None)
    saved_out = sys.stdout
    _S.dispatching = True
    try:
        while True:
            msg = _recv()
            t = msg["type"]
            if t == "check":
                try:
                    reply = _do_check(msg)
                except _CheckTimeout:
                    reply = {"type": "checked", "ok": False, "error": "TimeoutError: check timed out"}
                _send(reply)
            elif t == "inject":
                if msg["source"] == "interactive_value":
                    if not _S.has_staged:
                        _send({"type": "injected", "ok": False})
                        raise err
                    value, downgraded = _S.staged, False
                else:
                    value, downgraded = _make_dummy(msg["expr"], msg.get("module"))
                _S.staged, _S.has_staged = None, False
                _send({"type": "injected", "ok": True, "downgraded": downgraded, "value_type": type(value).__name__})
                return value
            elif t == "fail":
                raise err
            elif t == "abort":
                _S.timed_out = True
                raise _RunTimeout()
            else:
                raise RuntimeError("unexpected message " + t)
    finally:
        sys.stdout = saved_out
        _S.dispatching = False
        sys.settrace(tracer)
        if _S.timed_out and _S.armed:
            _rearm()
            raise _RunTimeout()


def _cached(key, iid, kind, name, err):
    hit = _S.cache.get(key)
    if hit is None:
        return None
    _send({"type": "cache_hit", "iid": iid, "kind": kind, "name": name, "error": _fmt(err), "info": hit[1]})
    return hit


def _remember(key, value, info):
    _S.cache[key] = (value, info)


def _n_(iid, name, thunk):
    try:
        return thunk()
    except NameError as e:
        err = e
    frame = sys._getframe(1)
    try:
        return frame.f_locals[name]
    except KeyError:
        pass
    finally:
        del frame
    key = (name, "variable_read")
    hit = _cached(key, iid, "variable_read", name, err)
    if hit is not None:
        return hit[0]
    value = _dispatch(iid, "variable_read", name, err)
    thunk.__globals__[name] = value
    _remember(key, value, {"iid": iid})
    return value


def _a_(iid, base, attr):
    try:
        return getattr(base, attr)
    except AttributeError as e:
        err = e
    key = (id(base), attr)
    hit = _S.attr_cache.get(key)
    if hit is not None and hit[0] is base:
        _send({"type": "cache_hit", "iid": iid, "kind": "attribute_read", "name": attr, "error": _fmt(err), "info": hit[2]})
        return hit[1]
    value = _dispatch(iid, "attribute_read", attr, err)
    try:
        setattr(base, attr, value)
    except Exception:
        pass
    _S.attr_cache[key] = (base, value, {"iid": iid})
    return value


def _c_(iid, fun, /, *args, **kwargs):
    if callable(fun):
        return fun(*args, **kwargs)
    err = TypeError("'%s' object is not callable" % type(fun).__name__)
    name = _S.call_names.get(iid, "")
    key = (name, "call")
    hit = _cached(key, iid, "call", name, err)
    if hit is not None:
        value = hit[0]
    else:
        value = _dispatch(iid, "call", name, err)
        if name.isidentifier():
            sys._getframe(1).f_globals[name] = value
        _remember(key, value, {"iid": iid})
    return value(*args, **kwargs)


def _t_(yes, no, value):
    if value:
        _S.arms.add(yes)
        return True
    _S.arms.add(no)
    return False


def _loop(enter, leave, it):
    for v in it:
        _S.arms.add(enter)
        yield v
        break
    else:
        _S.arms.add(leave)
        return
    yield from it
    _S.arms.add(leave)


def _l_(enter, leave, iterable):
    return _loop(enter, leave, iter(iterable))


def _matches(t, types):
    if isinstance(types, tuple):
        return any(_matches(t, x) for x in types)
    return isinstance(types, type) and issubclass(types, BaseException) and types in t.__mro__


def _h_(arm, types):
    exc = sys.exc_info()[0]
    if exc is not None and _matches(exc, types):
        _S.arms.add(arm)
    elif _S.tracer is not None:
        _S.tracer.cancel(sys._getframe(1))
    return types


for _name, _fn in (("_n_", _n_), ("_a_", _a_), ("_c_", _c_), ("_t_", _t_), ("_l_", _l_), ("_h_", _h_)):
    setattr(builtins, _name, _fn)


def _import_deps(code, deps):
    allow = deps.get("allow_install", False)
    allowlist = set(deps.get("allowlist", []))
    try:
        tree = ast.parse(code)
    except SyntaxError:
        return
    mods = []
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            mods.extend(a.name.split(".")[0] for a in node.names)
        elif isinstance(node, ast.ImportFrom) and node.level == 0 and node.module:
            mods.append(node.module.split(".")[0])
    for m in mods:
        try:
            importlib.import_module(m)
        except ImportError:
            if allow and m in allowlist:
                subprocess.run([sys.executable, "-m", "pip", "install", "-q", m],
                               stdin=subprocess.DEVNULL, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
                importlib.invalidate_caches()
        except Exception:
            pass


def _load(ns, kind, name, target):
    if kind == "variable_read":
        if name in ns:
            return ns[name]
        raise NameError("name '%s' is not defined" % name)
    if kind == "attribute_read":
        try:
            base = eval("(" + target + "\n)", ns)
        except Exception as e:
            for v in list(ns.values()):
                if not isinstance(v, type(sys)) and v is not builtins and hasattr(v, name):
                    return getattr(v, name)
            raise e
        return getattr(base, name)
    value = eval("(" + target + "\n)", ns)
    if not callable(value):
        raise TypeError("'%s' object is not callable" % type(value).__name__)
    return value


def _do_check(msg):
    code = msg["code"]
    try:
        compiled = compile(code, "<prediction>", "exec", dont_inherit=True)
    except SyntaxError as e:
        return {"type": "checked", "ok": False, "error": _fmt(e)}
    _import_deps(code, msg.get("deps", {}))
    ns = {"__name__": "__main__", "__file__": _S.file, "__builtins__": builtins}
    sink = io.StringIO()
    saved = sys.stdout
    sys.stdout = sink
    _S.check_deadline = time.monotonic() + msg.get("timeout", 5.0)
    _rearm()
    try:
        exec(compiled, ns)
        value = _load(ns, msg["kind"], msg["name"], msg.get("target") or msg["name"])
    except _CheckTimeout:
        return {"type": "checked", "ok": False, "error": "TimeoutError: check timed out"}
    except (_RunTimeout, KeyboardInterrupt):
        raise
    except BaseException as e:
        return {"type": "checked", "ok": False, "error": _fmt(e)}
    finally:
        _S.check_deadline = None
        _rearm()
        sys.stdout = saved
    _S.staged, _S.has_staged = value, True
    try:
        text = repr(value)
    except Exception:
        text = "<unrepresentable>"
    return {"type": "checked", "ok": True, "value_type": type(value).__name__, "value_repr": _clean(text[:200])}


def _crash_line(e, tracer):
    tb = e.__traceback__
    line = None
    while tb is not None:
        if tb.tb_frame.f_code.co_filename == SNIPPET:
            line = tb.tb_lineno
        tb = tb.tb_next
    if line is None and tracer is not None:
        line = tracer.last_line
    return line or 0


def _run_program(msg):
    _S.file = msg.get("file", "snippet.py")
    _S.call_names = {int(k): v for k, v in msg.get("call_names", {}).items()}
    sys.argv = [_S.file]
    buf = io.BytesIO()
    out = io.TextIOWrapper(buf, encoding="utf-8", errors="backslashreplace", write_through=True)
    sys.stdout = out
    g = {"__name__": "__main__", "__file__": _S.file, "__builtins__": builtins}
    tracer = None
    try:
        code = compile(msg["source"], SNIPPET, "exec", dont_inherit=True)
    except SyntaxError as e:
        terminal = {"kind": "crashed", "class": "SyntaxError", "message": _clean(str(e.msg)), "line": e.lineno or 0}
        code = None
    if code is not None:
        credits = {int(k): v for k, v in msg.get("entry_credits", {}).items()}
        tracer = _Tracer(msg["owners"], credits)
        _S.tracer = tracer
        _S.run_deadline = time.monotonic() + msg.get("timeout", 10.0)
        _S.armed = True
        _rearm()
        sys.settrace(tracer.global_trace)
        try:
            exec(code, g)
            _S.armed = False
            terminal = {"kind": "completed"}
        except _RunTimeout:
            _S.armed = False
            terminal = {"kind": "timeout"}
        except SystemExit as e:
            _S.armed = False
            if e.code is None or e.code == 0:
                terminal = {"kind": "completed"}
            else:
                terminal = {"kind": "crashed", "class": "SystemExit", "message": _clean(str(e.code)),
                            "line": _crash_line(e, tracer)}
        except BaseException as e:
            _S.armed = False
            terminal = {"kind": "crashed", "class": _clean(_cls_name(type(e))), "message": _clean(str(e)),
                        "line": _crash_line(e, tracer), "type_error": isinstance(e, TypeError)}
        finally:
            _S.armed = False
            sys.settrace(None)
            _S.run_deadline = None
            _rearm()
        if terminal["kind"] == "timeout" or _S.timed_out:
            terminal = {"kind": "timeout"}
    try:
        out.flush()
    except Exception:
        pass
    sys.stdout = open(os.devnull, "w")
    _send({
        "type": "done",
        "terminal": terminal,
        "lines": sorted(tracer.completed) if tracer else [],
        "arms": sorted(_S.arms),
        "stdout_b64": base64.b64encode(buf.getvalue()).decode("ascii"),
    })


def _probe(msg):
    v, downgraded = _make_dummy(msg["expr"], msg.get("module"))
    ns = dict(_DUMMY_NS)
    ns["v"] = v
    try:
        exec(msg.get("setup", ""), ns)
        ok = bool(eval(msg["predicate"], ns))
        err = None
    except BaseException as e:
        ok, err = False, _fmt(e)
    return {"type": "probed", "ok": ok, "downgraded": downgraded, "error": err, "repr": _clean(repr(v)[:200])}


def _main():
    while True:
        msg = _recv()
        t = msg["type"]
        if t == "start":
            _run_program(msg)
        elif t == "check":
            try:
                reply = _do_check(msg)
            except _CheckTimeout:
                reply = {"type": "checked", "ok": False, "error": "TimeoutError: check timed out"}
            _send(reply)
        elif t == "probe":
            _send(_probe(msg))
        elif t == "bye":
            break


_send({"type": "ready"})
_main()
_POUT.flush()
os._exit(0)
