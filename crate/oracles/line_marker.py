# Brute-force coverage oracle. Rewrites the ORIGINAL snippet with explicit
# markers (no hooks), runs it, and prints the covered countable lines, the
# branch arms seen, and every arm that exists.
#
# A simple statement marks its lines after it finishes; return/break/continue
# mark once their operands are evaluated; raise never marks. A compound header
# marks once its test/iterable/context has been evaluated. try/else/finally
# keyword lines follow the first statement of their block.
import ast
import json
import sys

path = sys.argv[1]
src = open(path, encoding="utf-8").read()
lines = src.splitlines()
tree = ast.parse(src)

covered = set()
arms_hit = set()
arms_all = []
keyword_lines = {}


def call(fn, *args):
    return ast.Call(func=ast.Name(id=fn, ctx=ast.Load()), args=list(args), keywords=[])


def const(v):
    return ast.Constant(value=v)


def mark_stmt(a, b):
    return ast.Expr(value=call("_om_mark", const(a), const(b)))


def arm_stmt(line, kind):
    arms_all.append((line, kind))
    return ast.Expr(value=call("_om_arm", const(line), const(kind)))


def start(s):
    decos = getattr(s, "decorator_list", [])
    return min([s.lineno] + [d.lineno for d in decos])


def header_end(s, first_body):
    return max(start(s), first_body.lineno - 1)


def find_keyword(lo, hi, word):
    for ln in range(lo, hi + 1):
        text = lines[ln - 1].strip()
        if text.startswith(word) and text[len(word):].lstrip().startswith(":"):
            return ln
    return None


def note_keyword(prev_end, block, word):
    if block:
        kw = find_keyword(prev_end + 1, start(block[0]) - 1, word)
        if kw is not None:
            keyword_lines[kw] = start(block[0])


class Exprs(ast.NodeTransformer):
    def visit_IfExp(self, node):
        self.generic_visit(node)
        line = node.test.lineno
        arms_all.append((line, "expr_true"))
        arms_all.append((line, "expr_false"))
        node.test = call("_om_cond", const(line), const(node.col_offset), node.test)
        return node


def expr(e):
    return Exprs().visit(e) if e is not None else None


def is_elif(s):
    return len(s.orelse) == 1 and isinstance(s.orelse[0], ast.If) and lines[s.orelse[0].lineno - 1].lstrip().startswith("elif")


def body(stmts):
    out = []
    for s in stmts:
        out.extend(stmt(s))
    return out


def stmt(s):
    a = start(s)
    if isinstance(s, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
        s.decorator_list = [expr(d) for d in s.decorator_list]
        if isinstance(s, ast.ClassDef):
            s.bases = [expr(b) for b in s.bases]
        else:
            s.args.defaults = [expr(d) for d in s.args.defaults]
            s.args.kw_defaults = [expr(d) if d is not None else None for d in s.args.kw_defaults]
        hdr = header_end(s, s.body[0])
        s.body = body(s.body)
        return [s, mark_stmt(a, hdr)]
    if isinstance(s, ast.If):
        hdr = header_end(s, s.body[0])
        s.test = call("_om_hdr", const(a), const(hdr), expr(s.test))
        then_arm = arm_stmt(s.lineno, "then")
        else_arm = arm_stmt(s.lineno, "else")
        if s.orelse and not is_elif(s):
            note_keyword(s.body[-1].end_lineno, s.orelse, "else")
        s.body = [then_arm] + body(s.body)
        s.orelse = [else_arm] + body(s.orelse)
        return [s]
    if isinstance(s, (ast.For, ast.While)):
        hdr = header_end(s, s.body[0])
        if isinstance(s, ast.For):
            s.iter = call("_om_hdr", const(a), const(hdr), expr(s.iter))
        else:
            s.test = call("_om_hdr", const(a), const(hdr), expr(s.test))
        enter = arm_stmt(s.lineno, "loop_enter")
        leave = arm_stmt(s.lineno, "loop_exit")
        note_keyword(s.body[-1].end_lineno, s.orelse, "else")
        s.body = [enter] + body(s.body)
        s.orelse = [leave] + body(s.orelse)
        return [s]
    if isinstance(s, ast.Try):
        keyword_lines[s.lineno] = start(s.body[0])
        last = s.body[-1].end_lineno
        for h in s.handlers:
            hdr = header_end(h, h.body[0])
            if h.type is not None:
                h.type = expr(h.type)
            h.body = [mark_stmt(h.lineno, hdr), arm_stmt(h.lineno, "handler")] + body(h.body)
            last = h.end_lineno
        note_keyword(last, s.orelse, "else")
        if s.orelse:
            last = s.orelse[-1].end_lineno
        note_keyword(last, s.finalbody, "finally")
        s.body = body(s.body)
        s.orelse = body(s.orelse)
        s.finalbody = body(s.finalbody)
        return [s]
    if isinstance(s, ast.With):
        hdr = header_end(s, s.body[0])
        for item in s.items:
            item.context_expr = expr(item.context_expr)
        s.body = [mark_stmt(a, hdr)] + body(s.body)
        return [s]
    if isinstance(s, (ast.AsyncFor, ast.AsyncWith, ast.Match)):
        raise SystemExit("unsupported statement at line %d" % s.lineno)
    s = expr(s)
    b = s.end_lineno
    if isinstance(s, ast.Return):
        if s.value is None:
            return [mark_stmt(a, b), s]
        s.value = call("_om_pass", const(a), const(b), s.value)
        return [s]
    if isinstance(s, (ast.Break, ast.Continue)):
        return [mark_stmt(a, b), s]
    if isinstance(s, ast.Raise):
        return [s]
    return [s, mark_stmt(a, b)]


def _om_mark(a, b):
    covered.update(range(a, b + 1))


def _om_hdr(a, b, v):
    covered.update(range(a, b + 1))
    return v


def _om_pass(a, b, v):
    covered.update(range(a, b + 1))
    return v


def _om_arm(line, kind):
    arms_hit.add((line, kind, 0))


def _om_cond(line, col, v):
    t = bool(v)
    # several conditional expressions can share a line; the column keeps them apart
    arms_hit.add((line, "expr_true" if t else "expr_false", col))
    return t


tree.body = body(tree.body)
ast.fix_missing_locations(tree)
code = compile(tree, "<oracle>", "exec")
g = {
    "__name__": "__main__",
    "__builtins__": __builtins__,
    "_om_mark": _om_mark,
    "_om_hdr": _om_hdr,
    "_om_pass": _om_pass,
    "_om_arm": _om_arm,
    "_om_cond": _om_cond,
}
real_stdout = sys.stdout
sys.stdout = open("/dev/null", "w")
terminal = {"kind": "completed"}
try:
    exec(code, g)
except SystemExit as e:
    tb = e.__traceback__
    line = 0
    while tb is not None:
        if tb.tb_frame.f_code.co_filename == "<oracle>":
            line = tb.tb_lineno
        tb = tb.tb_next
    if e.code in (None, 0):
        # a clean exit finishes the exiting line
        covered.add(line)
    else:
        terminal = {"kind": "crashed", "class": "SystemExit", "line": line}
except BaseException as e:
    tb = e.__traceback__
    line = 0
    while tb is not None:
        if tb.tb_frame.f_code.co_filename == "<oracle>":
            line = tb.tb_lineno
        tb = tb.tb_next
    terminal = {"kind": "crashed", "class": type(e).__name__, "line": line}
sys.stdout = real_stdout

changed = True
while changed:
    changed = False
    for kw, first in keyword_lines.items():
        if first in covered and kw not in covered:
            covered.add(kw)
            changed = True
countable = [i + 1 for i, t in enumerate(lines) if t.strip() and not t.strip().startswith("#")]
print(json.dumps({
    "countable": countable,
    "covered": sorted(l for l in covered if l in set(countable)),
    "arms_hit": sorted((l, k) for l, k, _ in arms_hit),
    "arms_all": sorted(arms_all),
    "terminal": terminal,
}))
