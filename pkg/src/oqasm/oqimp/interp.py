"""Reference interpreter with history-stack stores."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import values as V
from .ast import ArrayLit, Assign, BinOp, BoolLit, Call, Dec, Decl, For, If, Index, Inv, Not, Num, \
    Program, Type, Var
from .checker import Summary, expr_type, normalize, typecheck_program
from .values import OqimpRuntimeError

LOOP_LIMIT = 1 << 20


def zero(t: Type):
    return Fraction(0) if (t.mode == "C" and t.base == "fixedp") else 0


def convert_input(t: Type, value, sz: int):
    """User-supplied value to the stored form.

    Q ints are taken as bit patterns; a Q fixedp given as a float, Fraction
    or string is quantised. C values are kept exact.
    """
    if t.mode == "C":
        return Fraction(value) if t.base == "fixedp" else int(value)
    if t.base == "fixedp" and not isinstance(value, int):
        return V.to_bits("fixedp", Fraction(value), sz)
    return int(value) & V.mask(V.width(t.base, sz))


def const_eval(e, env: dict, lookup):
    """Exact value of a C-mode expression; lookup(lvalue) gives stored C values."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Dec):
        return e.value
    if isinstance(e, BoolLit):
        return int(e.value)
    if isinstance(e, (Var, Index)):
        return lookup(e)
    if isinstance(e, Not):
        return 1 - const_eval(e.arg, env, lookup)
    if isinstance(e, BinOp):
        base = expr_type(e.left, env)[0]
        a = const_eval(e.left, env, lookup)
        b = const_eval(e.right, env, lookup)
        return V.c_binop(e.op, base, a, b)
    if isinstance(e, Call):
        return V.c_builtin(e.name, [const_eval(a, env, lookup) for a in e.args])
    raise OqimpRuntimeError(f"cannot evaluate {e!r}")


@dataclass
class Result:
    ret: object                 # value or list of values, None for void
    store: dict                 # global name -> top value (list for arrays), before main is undone
    ret_type: Type | None = None


class Interpreter:
    def __init__(self, prog: Program, sz: int, summary: Summary | None = None):
        self.prog = prog
        self.sz = sz
        self.summary = summary or typecheck_program(prog)

    # store: key -> history list; key is name or (name, index)
    def run(self, inputs: dict | None = None, params: dict | None = None) -> Result:
        inputs = dict(inputs or {})
        params = dict(params or {})
        g = self.summary.globals
        self.gstore = {}
        for name, t in g.items():
            given = inputs.pop(name, None)
            if t.length is None:
                self.gstore[name] = [convert_input(t, given, self.sz) if given is not None else zero(t)]
            else:
                vals = list(given) if given is not None else [zero(t)] * t.length
                if len(vals) != t.length:
                    raise OqimpRuntimeError(f"{name} needs {t.length} values")
                for i, v in enumerate(vals):
                    self.gstore[(name, i)] = [convert_input(t.elem(), v, self.sz)]
        if inputs:
            raise OqimpRuntimeError(f"unknown inputs: {', '.join(sorted(inputs))}")
        main = self.prog.main
        args = []
        for t, name in main.params:
            if name not in params:
                raise OqimpRuntimeError(f"missing parameter {name}")
            args.append(convert_input(t, params.pop(name), self.sz))
        if params:
            raise OqimpRuntimeError(f"unknown parameters: {', '.join(sorted(params))}")
        ret, store = self.call(main, args, keep=True)
        return Result(ret, store, main.ret)

    def call(self, f, args, keep=False):
        saved = {k: list(v) for k, v in self.gstore.items()}
        frame = {}
        env = self.summary.envs[f.name]
        for (t, name), a in zip(f.params, args):
            frame[name] = [a]
        old = getattr(self, "frame", None), getattr(self, "env", None)
        self.frame, self.env = frame, env
        try:
            self.block(f.body)
            ret = self.result(f) if f.ret is not None else None
            store = None
            if keep:
                store = {}
                for name, t in self.summary.globals.items():
                    if t.length is None:
                        store[name] = self.gstore[name][-1]
                    else:
                        store[name] = [self.gstore[(name, i)][-1] for i in range(t.length)]
        finally:
            self.frame, self.env = old
            self.gstore = saved
        return ret, store

    def result(self, f):
        r = f.result
        if isinstance(r, ArrayLit):
            return [self.as_type(e, f.ret.elem()) for e in r.items]
        if f.ret.length is not None:
            return [self.top((r.name, i)) for i in range(f.ret.length)]
        return self.as_type(r, f.ret)

    def as_type(self, e, t: Type):
        """Evaluate e and store it in t's representation."""
        base, mode = expr_type(e, self.env)
        v = self.eval(e)
        if t.mode == "Q" and mode == "C":
            return V.to_bits(t.base, v, self.sz)
        return v

    # lvalues
    def key(self, lv):
        if isinstance(lv, Index):
            i = self.eval(lv.index)
            t = self.env[lv.name]
            if not 0 <= i < t.length:
                raise OqimpRuntimeError(f"line {lv.line}: index {i} out of bounds for {lv.name}[{t.length}]")
            return (lv.name, i)
        return lv.name

    def hist(self, key) -> list:
        if key in self.frame:
            return self.frame[key]
        if key in self.gstore:
            return self.gstore[key]
        name = key[0] if isinstance(key, tuple) else key
        raise OqimpRuntimeError(f"{name} used before its declaration")

    def top(self, key):
        return self.hist(key)[-1]

    def ltype(self, lv) -> Type:
        t = self.env[lv.name]
        return t.elem() if isinstance(lv, Index) else t

    # statements
    def block(self, stmts):
        for s in stmts:
            self.stmt(s)

    def stmt(self, s):
        if isinstance(s, Decl):
            self.declare(s)
        elif isinstance(s, Assign):
            self.assign(s)
        elif isinstance(s, Inv):
            h = self.hist(self.key(s.target))
            if len(h) < 2:
                raise OqimpRuntimeError(f"line {s.line}: inv({s.target.name}) has nothing to undo")
            h.pop()
        elif isinstance(s, For):
            self.stmt(s.init)
            n = 0
            while self.eval(s.cond):
                self.block(s.body)
                self.stmt(s.step)
                n += 1
                if n > LOOP_LIMIT:
                    raise OqimpRuntimeError(f"line {s.line}: loop does not terminate")
        elif isinstance(s, If):
            self.block(s.then if self.eval(s.cond) else s.orelse)

    def declare(self, d: Decl):
        t = d.type
        keys = [d.name] if t.length is None else [(d.name, i) for i in range(t.length)]
        for k in keys:
            h = self.frame.get(k)
            if h is not None and t.mode == "Q" and h[-1] != 0:
                raise OqimpRuntimeError(f"line {d.line}: {d.name} redeclared while holding a value")
            if h is None or t.mode == "C":
                self.frame[k] = [zero(t)]
        if d.init is not None:
            self.assign(Assign(Var(d.name, d.line), "=", d.init, d.line))

    def assign(self, s: Assign):
        e = s.expr
        if isinstance(e, Call) and e.name in self.summary.functions:
            self.assign_call(s)
            return
        t = self.ltype(s.target)
        key = self.key(s.target)
        h = self.hist(key)
        cur = h[-1]
        op = s.op
        if t.mode == "C":
            v = self.eval(e)
            if op == "=":
                new = v
            elif op in ("<<<=", ">>>="):
                raise OqimpRuntimeError(f"line {s.line}: rotation of a C value")
            else:
                new = V.c_binop(op[:-1], t.base, cur, v)
            if t.base == "fixedp":
                new = Fraction(new)
            h[:] = [new]
            return
        sz = self.sz
        w = V.width(t.base, sz)
        _, mode = expr_type(e, self.env)
        if op in ("<<<=", ">>>="):
            k = self.eval(e)
            new = V.rotl(cur, k if op == "<<<=" else -k, w)
        else:
            if isinstance(s.target, Index):
                self.check_alias(s.target, key, e)
            v = self.as_type(e, t)
            if op == "=":
                if cur != 0:
                    raise OqimpRuntimeError(f"line {s.line}: = on {s.target.name} which is not zero")
                new = v
            elif op == "+=":
                new = V.q_add(cur, v, w)
            elif op == "-=":
                new = V.q_sub(cur, v, w)
            elif op == "^=":
                new = cur ^ v
            else:
                raise OqimpRuntimeError(f"line {s.line}: {op} on a Q variable")
        h.append(new)

    def check_alias(self, target, key, e):
        stack = [e]
        while stack:
            node = stack.pop()
            if isinstance(node, Index):
                if node.name == target.name and self.key(node) == key:
                    raise OqimpRuntimeError(f"line {target.line}: {target.name}[{key[1]}] is both "
                                            f"destination and operand")
                stack.append(node.index)
            elif isinstance(node, BinOp):
                stack += [node.left, node.right]
            elif isinstance(node, Not):
                stack.append(node.arg)
            elif isinstance(node, Call):
                stack += list(node.args)

    def assign_call(self, s: Assign):
        f = self.summary.functions[s.expr.name]
        args = [self.eval(a) for a in s.expr.args]
        args = [Fraction(a) if t.base == "fixedp" else a for a, (t, _) in zip(args, f.params)]
        ret, _ = self.call(f, args)
        if f.ret.length is not None:
            vals = ret
            keys = [(s.target.name, i) for i in range(f.ret.length)]
        else:
            vals, keys = [ret], [self.key(s.target)]
        t = self.env[s.target.name].elem()
        for k, v in zip(keys, vals):
            h = self.hist(k)
            if t.mode == "C":
                h[:] = [v]
                continue
            if f.ret.mode == "C":
                v = V.to_bits(t.base, v, self.sz)
            if h[-1] != 0:
                raise OqimpRuntimeError(f"line {s.line}: = on {s.target.name} which is not zero")
            h.append(v)

    # expressions
    def lookup_c(self, lv):
        return self.top(self.key(lv))

    def eval(self, e):
        """C expressions give exact values, Q expressions give bit patterns."""
        e = normalize(e, self.env)
        return self._eval(e)

    def _eval(self, e):
        base, mode = expr_type(e, self.env)
        if mode == "C":
            return const_eval(e, self.env, self.lookup_c)
        sz = self.sz
        if isinstance(e, (Var, Index)):
            return self.top(self.key(e))
        if isinstance(e, Not):
            return 1 - self._eval(e.arg)
        if isinstance(e, Call):
            if e.name == "even":
                return 1 - (self._eval(e.args[0]) & 1)
            a = self._eval(e.args[0])
            return V.q_pow(base, a, self._eval(e.args[1]), sz)
        op = e.op
        lb, lm = expr_type(e.left, self.env)
        rb, rm = expr_type(e.right, self.env)
        a, b = self._eval(e.left), self._eval(e.right)
        if op in ("<", "<=", ">", ">=", "==", "!="):
            return V.q_compare(op, lb, a, b, sz, lm == "C", rm == "C")
        if op in ("/", "%"):
            return V.q_div(lb, a, b, sz) if op == "/" else V.q_mod(a, b)
        if op == "*" and base == "fixedp":
            if lm == "C":
                return V.q_mul_fixedp_const(a, b, sz)
            if rm == "C":
                return V.q_mul_fixedp_const(b, a, sz)
            return V.q_mul_fixedp(a, b, sz)
        w = V.width(base, sz)
        if lm == "C":
            a = V.to_bits(base, a, sz)
        if rm == "C":
            b = V.to_bits(base, b, sz)
        if op == "+":
            return V.q_add(a, b, w)
        if op == "-":
            return V.q_sub(a, b, w)
        if op == "*":
            return V.q_mul_nat(a, b, w)
        return a ^ b


def interpret(prog: Program, inputs: dict | None = None, sz: int = 16,
              params: dict | None = None, summary: Summary | None = None) -> Result:
    """Run main; raises OqimpRuntimeError where the semantics has no result."""
    return Interpreter(prog, sz, summary).run(inputs, params)
