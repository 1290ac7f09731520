"""Counts load-context Name/Attribute nodes and Call nodes per file.

Fields nested inside f-string format specs and f-strings nested inside
replacement fields are skipped, as are match-case patterns.
"""
import ast
import json
import sys


class Counter(ast.NodeVisitor):
    def __init__(self):
        self.names = self.attrs = self.calls = 0
        self.fdepth = 0

    def visit_Name(self, node):
        if isinstance(node.ctx, ast.Load):
            self.names += 1

    def visit_Attribute(self, node):
        if isinstance(node.ctx, ast.Load):
            self.attrs += 1
        self.generic_visit(node)

    def visit_Call(self, node):
        self.calls += 1
        self.generic_visit(node)

    def visit_JoinedStr(self, node):
        if self.fdepth:
            return
        self.fdepth += 1
        for v in node.values:
            if isinstance(v, ast.FormattedValue):
                self.visit(v.value)
        self.fdepth -= 1

    def visit_match_case(self, node):
        if node.guard is not None:
            self.visit(node.guard)
        for s in node.body:
            self.visit(s)


out = {}
for path in sys.stdin.read().split("\n"):
    if not path:
        continue
    try:
        with open(path, "rb") as f:
            src = f.read().decode("utf-8")
    except (OSError, UnicodeDecodeError):
        continue
    try:
        tree = ast.parse(src)
    except (SyntaxError, ValueError):
        out[path] = None
        continue
    c = Counter()
    c.visit(tree)
    out[path] = [c.names, c.attrs, c.calls]
json.dump(out, sys.stdout)
