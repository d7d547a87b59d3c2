"""Mode type checker, expression normalisation and the inv well-formedness check."""
from __future__ import annotations

from dataclasses import dataclass, field

from .ast import (ArrayLit, Assign, BinOp, BoolLit, Call, Dec, Decl, For, FunDef, If, Index, Inv,
                  Not, Num, Program, Type, Var, expr_vars, join)


class OqimpTypeError(Exception):
    def __init__(self, rule: str, line: int, msg: str):
        super().__init__(f"line {line}: [{rule}] {msg}")
        self.rule = rule
        self.line = line


class InvError(Exception):
    """kind is one of "predecessor", "operand", "count"."""

    def __init__(self, kind: str, line: int, msg: str):
        super().__init__(f"line {line}: [{kind}] {msg}")
        self.kind = kind
        self.line = line


@dataclass
class Summary:
    globals: dict                     # name -> Type
    envs: dict                        # function name -> {name: Type}, globals included
    functions: dict = field(default_factory=dict)
    main: str = ""

    def inputs(self) -> dict:
        return {n: t for n, t in self.globals.items() if t.mode == "Q"}


BUILTIN_ARITY = {"even": 1, "pow": 2, "fact": 1, "fixedp": 1, "nat": 1}


def expr_type(e, env: dict) -> tuple[str, str]:
    """(base, mode) of an expression; raises OqimpTypeError."""
    line = getattr(e, "line", 0)
    if isinstance(e, Num):
        return "nat", "C"
    if isinstance(e, Dec):
        return "fixedp", "C"
    if isinstance(e, BoolLit):
        return "bool", "C"
    if isinstance(e, Var):
        t = env.get(e.name)
        if t is None:
            raise OqimpTypeError("var", line, f"undeclared variable {e.name}")
        if t.length is not None:
            raise OqimpTypeError("var", line, f"array {e.name} must be indexed")
        return t.base, t.mode
    if isinstance(e, Index):
        t = env.get(e.name)
        if t is None:
            raise OqimpTypeError("var", line, f"undeclared variable {e.name}")
        if t.length is None:
            raise OqimpTypeError("index", line, f"{e.name} is not an array")
        if expr_type(e.index, env) != ("nat", "C"):
            raise OqimpTypeError("index", line, "array index must be C nat")
        return t.base, t.mode
    if isinstance(e, Not):
        base, mode = expr_type(e.arg, env)
        if base != "bool":
            raise OqimpTypeError("not", line, "! needs a bool")
        return "bool", mode
    if isinstance(e, BinOp):
        lb, lm = expr_type(e.left, env)
        rb, rm = expr_type(e.right, env)
        mode = join(lm, rm)
        op = e.op
        if op in ("/", "%"):
            if rb != "nat" or lb not in (("nat",) if op == "%" else ("nat", "fixedp")):
                raise OqimpTypeError("bin", line, f"{op} needs a {'nat' if op == '%' else 'numeric'}"
                                     f" dividend and a nat divisor")
            if rm == "Q":
                raise OqimpTypeError("bin_q", line, "division by a quantum value is not supported")
            return lb, mode
        if lb != rb:
            raise OqimpTypeError("bin", line, f"operands of {op} have types {lb} and {rb}")
        if op in ("<", "<=", ">", ">="):
            if lb == "bool":
                raise OqimpTypeError("bin", line, "ordering comparison on bool")
            return "bool", mode
        if op in ("==", "!="):
            return "bool", mode
        if op in ("+", "-", "*") and lb == "bool":
            raise OqimpTypeError("bin", line, f"{op} on bool")
        if op == "^" and lb == "fixedp":
            raise OqimpTypeError("bin", line, "^ on fixedp")
        return lb, mode
    if isinstance(e, Call):
        if e.name not in BUILTIN_ARITY:
            raise OqimpTypeError("call", line, f"call to {e.name} must be the whole right-hand side of =")
        if len(e.args) != BUILTIN_ARITY[e.name]:
            raise OqimpTypeError("call", line, f"{e.name} takes {BUILTIN_ARITY[e.name]} argument(s)")
        types = [expr_type(a, env) for a in e.args]
        if e.name == "even":
            if types[0][0] != "nat":
                raise OqimpTypeError("call", line, "even needs a nat")
            return "bool", types[0][1]
        if e.name == "pow":
            if types[1] != ("nat", "C"):
                raise OqimpTypeError("call", line, "pow exponent must be C nat")
            if types[0][0] == "bool":
                raise OqimpTypeError("call", line, "pow on bool")
            return types[0]
        want = {"fact": "nat", "fixedp": "nat", "nat": "fixedp"}[e.name]
        if types[0] != (want, "C"):
            raise OqimpTypeError("call", line, f"{e.name} needs a C {want}")
        return ("fixedp" if e.name == "fixedp" else "nat"), "C"
    raise OqimpTypeError("expr", line, f"unexpected expression {e!r}")


def is_c(e, env) -> bool:
    return expr_type(e, env)[1] == "C"


def normalize(e, env: dict):
    """Rewrite quantum fixed-point (a*b)/M as (a/M)*b, dividing a known factor when there is one."""
    if isinstance(e, BinOp):
        left, right = normalize(e.left, env), normalize(e.right, env)
        e = BinOp(e.op, left, right, e.line)
        if (e.op == "/" and isinstance(left, BinOp) and left.op == "*"
                and expr_type(e, env) == ("fixedp", "Q")):
            a, b = left.left, left.right
            if not is_c(a, env) and is_c(b, env):
                a, b = b, a
            return BinOp("*", BinOp("/", a, right, e.line), b, e.line)
        return e
    if isinstance(e, Not):
        return Not(normalize(e.arg, env), e.line)
    if isinstance(e, Call):
        return Call(e.name, tuple(normalize(a, env) for a in e.args), e.line)
    return e


def same_lvalue(a, b) -> bool:
    if isinstance(a, Var) and isinstance(b, Var):
        return a.name == b.name
    if isinstance(a, Index) and isinstance(b, Index):
        return a.name == b.name and a.index == b.index
    return False


def lvalues_in(e) -> list:
    out, stack = [], [e]
    while stack:
        node = stack.pop()
        if isinstance(node, (Var, Index)):
            out.append(node)
            if isinstance(node, Index):
                stack.append(node.index)
        elif isinstance(node, BinOp):
            stack += [node.left, node.right]
        elif isinstance(node, Not):
            stack.append(node.arg)
        elif isinstance(node, Call):
            stack += list(node.args)
        elif isinstance(node, ArrayLit):
            stack += list(node.items)
    return out


def written(stmts) -> set[str]:
    out: set[str] = set()
    stack = list(stmts)
    while stack:
        s = stack.pop()
        if isinstance(s, (Assign, Inv)):
            out.add(s.target.name)
        elif isinstance(s, Decl):
            out.add(s.name)
        elif isinstance(s, For):
            stack += [s.init, s.step] + list(s.body)
        elif isinstance(s, If):
            stack += list(s.then) + list(s.orelse)
    return out


def referenced(f: FunDef) -> set[str]:
    """Every name read or written in a function body and its result."""
    names = set(written(f.body))
    stack = list(f.body)
    while stack:
        s = stack.pop()
        if isinstance(s, Assign):
            names |= expr_vars(s.expr) | expr_vars(s.target)
        elif isinstance(s, Decl) and s.init is not None:
            names |= expr_vars(s.init)
        elif isinstance(s, Inv):
            names |= expr_vars(s.target)
        elif isinstance(s, For):
            names |= expr_vars(s.cond)
            stack += [s.init, s.step] + list(s.body)
        elif isinstance(s, If):
            names |= expr_vars(s.cond)
            stack += list(s.then) + list(s.orelse)
    if f.result is not None:
        names |= expr_vars(f.result)
    return names


class _Checker:
    def __init__(self, prog: Program):
        self.prog = prog
        self.globals: dict = {}
        self.envs: dict = {}
        self.funs: dict = {}
        self.callee_refs: dict = {}

    def run(self) -> Summary:
        for d in self.prog.globals:
            if d.name in self.globals:
                raise OqimpTypeError("decl", d.line, f"{d.name} declared twice")
            if d.init is not None:
                raise OqimpTypeError("decl", d.line, "globals cannot have initialisers")
            self.globals[d.name] = d.type
        for f in self.prog.functions:
            if f.name in self.funs or f.name in self.globals:
                raise OqimpTypeError("fun", f.line, f"{f.name} defined twice")
            self.check_fun(f)
            self.funs[f.name] = f
            self.callee_refs[f.name] = {n for n in referenced(f) if n in self.globals}
        return Summary(self.globals, self.envs, dict(self.funs), self.prog.main.name)

    def check_fun(self, f: FunDef):
        env = dict(self.globals)
        self.env = env
        for t, name in f.params:
            if t.mode != "C":
                raise OqimpTypeError("fun", f.line, f"parameter {name} must be C mode")
            self.declare(Type(t.base, t.mode), name, f.line)
        self.block(f.body, "C")
        if f.ret is None:
            if f.result is not None:
                raise OqimpTypeError("fun", f.line, "void function returns a value")
        else:
            if f.result is None:
                raise OqimpTypeError("fun", f.line, f"{f.name} must return a {f.ret}")
            self.check_result(f)
        self.envs[f.name] = env

    def check_result(self, f: FunDef):
        ret, res = f.ret, f.result
        if ret.length is not None:
            if isinstance(res, ArrayLit):
                items = list(res.items)
                if len(items) != ret.length:
                    raise OqimpTypeError("fun", f.line, f"return has {len(items)} items, expected {ret.length}")
            elif isinstance(res, Var) and self.env.get(res.name, Type("", "")).length == ret.length:
                t = self.env[res.name]
                if t.base != ret.base or (t.mode == "Q" and ret.mode == "C"):
                    raise OqimpTypeError("fun", f.line, f"return type {t} does not fit {ret}")
                return
            else:
                raise OqimpTypeError("fun", f.line, f"{f.name} must return {ret.length} values")
        else:
            items = [res]
        for e in items:
            base, mode = expr_type(e, self.env)
            if base != ret.base or (mode == "Q" and ret.mode == "C"):
                raise OqimpTypeError("fun", f.line, f"return value {mode} {base} does not fit {ret}")

    def declare(self, t: Type, name: str, line: int):
        old = self.env.get(name)
        if name in self.globals or name in self.funs:
            raise OqimpTypeError("decl", line, f"{name} shadows a global")
        if old is not None and old != t:
            raise OqimpTypeError("decl", line, f"{name} redeclared with a different type")
        self.env[name] = t

    def block(self, stmts, ctx: str):
        for s in stmts:
            self.stmt(s, ctx)

    def lvalue_type(self, lv) -> Type:
        t = self.env.get(lv.name)
        if t is None:
            raise OqimpTypeError("var", lv.line, f"undeclared variable {lv.name}")
        if isinstance(lv, Index):
            expr_type(lv, self.env)
            return t.elem()
        if t.length is not None:
            raise OqimpTypeError("var", lv.line, f"array {lv.name} must be indexed")
        return t

    def stmt(self, s, ctx: str):
        if isinstance(s, Decl):
            if s.type.mode == "C" and ctx == "Q":
                raise OqimpTypeError("binop_c", s.line, "C declaration under a quantum if")
            self.declare(s.type, s.name, s.line)
            if s.init is not None:
                if s.type.length is not None:
                    raise OqimpTypeError("decl", s.line, "arrays cannot have initialisers")
                self.assign(Assign(Var(s.name, s.line), "=", s.init, s.line), ctx)
        elif isinstance(s, Assign):
            self.assign(s, ctx)
        elif isinstance(s, Inv):
            t = self.lvalue_type(s.target)
            if t.mode != "Q":
                raise OqimpTypeError("inv", s.line, "inv applies to Q variables only")
        elif isinstance(s, For):
            if ctx == "Q":
                raise OqimpTypeError("binop_c", s.line, "loop under a quantum if")
            if isinstance(s.init, Decl):
                if s.init.type.mode != "C" or s.init.type.length is not None:
                    raise OqimpTypeError("for", s.line, "loop variable must be a C scalar")
            self.stmt(s.init, ctx)
            if expr_type(s.cond, self.env) != ("bool", "C"):
                raise OqimpTypeError("for", s.line, "loop condition must be C bool")
            if self.lvalue_type(s.step.target).mode != "C":
                raise OqimpTypeError("for", s.line, "loop step must update a C variable")
            self.stmt(s.step, ctx)
            self.block(s.body, ctx)
        elif isinstance(s, If):
            base, mode = expr_type(s.cond, self.env)
            if base != "bool":
                raise OqimpTypeError("if", s.line, "condition must be bool")
            inner = join(mode, ctx)
            if mode == "Q":
                clash = (written(s.then) | written(s.orelse)) & expr_vars(s.cond)
                if clash:
                    raise OqimpTypeError("if_q", s.line,
                                         f"branches write {', '.join(sorted(clash))} read by the condition")
            self.block(s.then, inner)
            self.block(s.orelse, inner)
        else:
            raise OqimpTypeError("stmt", getattr(s, "line", 0), f"unexpected statement {s!r}")

    def assign(self, s: Assign, ctx: str):
        e = s.expr
        if isinstance(e, Call) and e.name not in BUILTIN_ARITY:
            self.call(s, ctx)
            return
        t = self.lvalue_type(s.target)
        base, mode = expr_type(e, self.env)
        op = s.op
        if t.mode == "C":
            if ctx == "Q":
                raise OqimpTypeError("binop_c", s.line, "C assignment under a quantum if")
            if mode == "Q":
                raise OqimpTypeError("binop_c", s.line, f"C variable {s.target.name} assigned a Q value")
        else:
            if op in ("*=", "/=", "%="):
                raise OqimpTypeError("binop_q", s.line, f"{op} on a Q variable is not reversible")
            for lv in lvalues_in(e):
                if same_lvalue(lv, s.target) or (isinstance(lv, Var) and lv.name == s.target.name):
                    raise OqimpTypeError("binop_q", s.line,
                                         f"destination {s.target.name} also appears as an operand")
            if t.base == "bool" and op not in ("=", "^="):
                raise OqimpTypeError("binop_q", s.line, f"{op} on bool")
        if op in ("<<<=", ">>>="):
            if t.base != "nat" or (base, mode) != ("nat", "C"):
                raise OqimpTypeError("bin", s.line, "rotation needs a nat target and a C nat amount")
            return
        if op in ("/=", "%="):
            ok = base == "nat" and (t.base == "nat" or (op == "/=" and t.base == "fixedp"))
        else:
            ok = base == t.base
        if not ok:
            raise OqimpTypeError("bin", s.line, f"cannot apply {op} with {base} to {t.base} variable")

    def call(self, s: Assign, ctx: str):
        e = s.expr
        f = self.funs.get(e.name)
        if f is None:
            raise OqimpTypeError("call", s.line, f"unknown function {e.name} (functions are defined before use)")
        if s.op != "=":
            raise OqimpTypeError("call", s.line, "call results are assigned with =")
        if len(e.args) != len(f.params):
            raise OqimpTypeError("call", s.line, f"{f.name} takes {len(f.params)} argument(s)")
        for a, (pt, pn) in zip(e.args, f.params):
            if expr_type(a, self.env) != (pt.base, "C"):
                raise OqimpTypeError("call", s.line, f"argument {pn} must be C {pt.base}")
        if f.ret is None:
            raise OqimpTypeError("call", s.line, f"{f.name} returns nothing")
        if f.ret.length is not None:
            t = self.env.get(s.target.name)
            if not isinstance(s.target, Var) or t is None or t.length != f.ret.length:
                raise OqimpTypeError("call", s.line, f"result of {f.name} needs an array of {f.ret.length}")
        else:
            t = self.lvalue_type(s.target)
        if t.base != f.ret.base:
            raise OqimpTypeError("call", s.line, f"{f.name} returns {f.ret.base}, target is {t.base}")
        if t.mode == "C" and (f.ret.mode == "Q" or ctx == "Q"):
            raise OqimpTypeError("call", s.line, "C variable assigned from a quantum call")
        if s.target.name in self.callee_refs[f.name]:
            raise OqimpTypeError("call", s.line, f"{f.name} uses the destination {s.target.name}")


def typecheck_program(prog: Program) -> Summary:
    return _Checker(prog).run()


# inv well-formedness ------------------------------------------------------------

@dataclass
class _Entry:
    target: str
    reads: set
    line: int
    invertible: bool = True
    consumed: bool = False
    conditional: bool = False


def _key(lv) -> str:
    return lv.name if isinstance(lv, Var) else f"{lv.name}[{lv.index!r}]"


class _InvChecker:
    def __init__(self, summary: Summary):
        self.summary = summary

    def run(self, prog: Program):
        for f in prog.functions:
            self.env = self.summary.envs[f.name]
            self.block(f.body, [])

    def entry_for(self, s: Assign) -> _Entry:
        t = self.env[s.target.name]
        reads = expr_vars(s.expr) | expr_vars(s.target) - {s.target.name}
        if isinstance(s.expr, Call) and s.expr.name in self.summary.functions:
            f = self.summary.functions[s.expr.name]
            reads |= {n for n in referenced(f) if n in self.summary.globals}
        return _Entry(_key(s.target), reads, s.line, invertible=t.mode == "Q")

    def block(self, stmts, stack: list) -> list:
        for s in stmts:
            if isinstance(s, Decl):
                if s.init is not None:
                    stack.append(self.entry_for(Assign(Var(s.name, s.line), "=", s.init, s.line)))
            elif isinstance(s, Assign):
                stack.append(self.entry_for(s))
            elif isinstance(s, Inv):
                self.inv(s, stack)
            elif isinstance(s, For):
                for part in (s.init, s.step):
                    if isinstance(part, Assign):
                        stack.append(self.entry_for(part))
                self.block(s.body, stack)
            elif isinstance(s, If):
                self.branch(s, stack)
        return stack

    def inv(self, s: Inv, stack: list):
        key = _key(s.target)
        pred = None
        seen_consumed = False
        above = []
        for e in reversed(stack):
            if e.target == key and e.invertible:
                if e.consumed:
                    seen_consumed = True
                elif pred is None:
                    pred = e
                    break
            if not e.consumed:
                above.append(e)
        if pred is None:
            if seen_consumed:
                raise InvError("count", s.line, f"more inv({s.target.name}) than assignments to it")
            raise InvError("predecessor", s.line, f"inv({s.target.name}) has no preceding assignment")
        if pred.conditional:
            raise InvError("predecessor", s.line,
                           f"the assignment undone by inv({s.target.name}) is not always executed")
        for e in above:
            name = e.target.split("[")[0]
            if name in pred.reads:
                raise InvError("operand", s.line,
                               f"{name} is written (line {e.line}) between the assignment to "
                               f"{s.target.name} on line {pred.line} and its inv")
        pred.consumed = True

    def branch(self, s: If, stack: list):
        base = len(stack)
        guard = expr_vars(s.cond)
        snapshot = [(e.consumed, e.conditional) for e in stack]
        then = self.block(s.then, list(stack))
        then_state = [(e.consumed, e.conditional) for e in stack]
        for e, (c, cond) in zip(stack, snapshot):
            e.consumed, e.conditional = c, cond
        orelse = self.block(s.orelse, list(stack))
        for e, (c1, _), (c2, cond) in zip(stack, then_state, [(e.consumed, e.conditional) for e in stack]):
            e.consumed = c1 and c2
            e.conditional = cond or (c1 != c2)
        new_then = [e for e in then[base:] if not e.consumed]
        new_else = [e for e in orelse[base:] if not e.consumed]
        merged = []
        for e in new_then:
            match = next((o for o in new_else if o.target == e.target), None)
            if match is not None:
                new_else.remove(match)
                merged.append(_Entry(e.target, e.reads | match.reads | guard, e.line,
                                     e.invertible and match.invertible))
            else:
                merged.append(_Entry(e.target, e.reads | guard, e.line, e.invertible, conditional=True))
        for o in new_else:
            merged.append(_Entry(o.target, o.reads | guard, o.line, o.invertible, conditional=True))
        stack.extend(merged)


def check_inv(prog: Program, summary: Summary | None = None) -> None:
    """Raise InvError unless every inv undoes one definite, unmodified assignment."""
    _InvChecker(summary or typecheck_program(prog)).run(prog)
