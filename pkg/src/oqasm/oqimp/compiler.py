"""
Partial-evaluating compiler from OQIMP to OQASM.

C-mode statements run at compile time against a constant store; only
Q-mode work produces instructions. Arithmetic is dispatched to the oracle
library, choosing QFT or Toffoli constructions by flag and constant
variants whenever one operand is known.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .. import oracles as O
from ..core import (CU, NOR, QFT, SR, X, Instr, Lshift, Position, QFTInv, Rev, Rshift, Skip,
                    SRInv, invert, leaves, rename, seq, typecheck, variables)
from ..sim import run_on_naturals
from . import values as V
from .ast import (ArrayLit, Assign, BinOp, Call, Decl, For, FunDef, If, Index, Inv, Not, Num,
                  Program, Type, Var)
from .checker import Summary, check_inv, expr_type, normalize, typecheck_program
from .interp import LOOP_LIMIT, const_eval, convert_input, zero
from .values import OqimpRuntimeError

FLAGS = ("classical", "qft")
CHI = "__chi"

_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}


class CompileError(Exception):
    def __init__(self, msg: str, line: int = 0):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


@dataclass
class _Entry:
    target: str
    code: Instr
    scope: int


@dataclass
class _Frame:
    fun: FunDef
    env: dict
    sigma: dict
    entries: list = field(default_factory=list)


@dataclass
class Compiled:
    program: Instr
    sizes: dict
    manifest: dict
    types: dict          # OQIMP display name -> Type of the element

    @property
    def num_qubits(self) -> int:
        return sum(self.sizes.values())

    def env(self) -> dict:
        return {v: NOR for v in self.sizes}

    def assignments(self, inputs: dict) -> dict:
        """OQASM register values for OQIMP global inputs (arrays as lists)."""
        out = {}
        sz = self.manifest["sz"]
        for name, value in inputs.items():
            items = list(value) if isinstance(value, (list, tuple)) else [value]
            names = [name] if not isinstance(value, (list, tuple)) else \
                [f"{name}[{i}]" for i in range(len(items))]
            for disp, v in zip(names, items):
                if disp not in self.manifest["theta"]:
                    raise KeyError(f"{disp} is not a quantum variable of the program")
                out[self.manifest["theta"][disp]["var"]] = convert_input(self.types[disp], v, sz)
        return out

    def run(self, inputs: dict | None = None, trusted: bool = True) -> dict:
        """Simulate on basis inputs; returns every OQIMP variable's bits plus "ret"."""
        regs = run_on_naturals(self.sizes, self.program, self.assignments(inputs or {}),
                               trusted=trusted)
        out = {disp: regs[info["var"]] for disp, info in self.manifest["theta"].items()}
        out["scratch"] = {v: regs[v] for v in self.manifest["scratch"]}
        return out

    def output(self, inputs: dict | None = None):
        """main's result: an int, a list for arrays, or the constant for a C result."""
        if self.manifest["output"] is None:
            return self.manifest.get("c_result")
        regs = self.run(inputs)
        vals = [regs[n] for n in self.manifest["output"]]
        return vals if self.manifest["ret_length"] is not None else vals[0]


def _inverse_of(leaf):
    if isinstance(leaf, QFT):
        return QFTInv(leaf.n, leaf.var)
    if isinstance(leaf, QFTInv):
        return QFT(leaf.n, leaf.var)
    if isinstance(leaf, Lshift):
        return Rshift(leaf.var)
    if isinstance(leaf, Rshift):
        return Lshift(leaf.var)
    return leaf


class Compiler:
    def __init__(self, prog: Program, flag: str = "qft", sz: int = 16, summary: Summary | None = None):
        if flag not in FLAGS:
            raise CompileError(f"flag must be one of {FLAGS}, got {flag!r}")
        if sz < 2:
            raise CompileError("sz must be at least 2")
        self.prog = prog
        self.flag = flag
        self.flavor = "toff" if flag == "classical" else "qft"
        self.sz = sz
        self.summary = summary or typecheck_program(prog)
        self.sizes: dict = {}
        self.theta: dict = {}
        self.types: dict = {}
        self.free = defaultdict(list)
        self.ntemp = 0
        self.chi = 0
        self.depth = 0
        self.ctl = None
        self.scope = 0
        self.nscope = 0
        self.ops: list = []
        self.gsigma: dict = {}

    # registers ---------------------------------------------------------------

    def width(self, base: str) -> int:
        return V.width(base, self.sz)

    def alloc(self, var: str, w: int, disp: str | None = None, t: Type | None = None) -> str:
        if var not in self.sizes:
            self.sizes[var] = w
            if disp is not None:
                self.theta[disp] = var
                self.types[disp] = t
        return var

    def temp(self, w: int, avoid=()) -> str:
        pool = self.free[w]
        for i in range(len(pool) - 1, -1, -1):
            if pool[i] not in avoid:
                return pool.pop(i)
        name = f"__t{self.ntemp}"
        self.ntemp += 1
        self.sizes[name] = w
        return name

    def put(self, var):
        if var is not None:
            self.free[self.sizes[var]].append(var)

    def bits(self, dst) -> list:
        if isinstance(dst, Position):
            return [dst]
        return [Position(dst, i) for i in range(self.sizes[dst])]

    def chi_slot(self, d: int) -> Position:
        self.chi = max(self.chi, d + 1)
        return Position(CHI, d)

    # C evaluation ----------------------------------------------------------------

    def ckey(self, lv):
        if isinstance(lv, Index):
            i = self.cval(lv.index)
            t = self.frame.env[lv.name]
            if not 0 <= i < t.length:
                raise CompileError(f"index {i} out of bounds for {lv.name}[{t.length}]", lv.line)
            return (lv.name, i)
        return lv.name

    def lookup(self, lv):
        k = self.ckey(lv)
        if k in self.frame.sigma:
            return self.frame.sigma[k]
        return self.gsigma[k]

    def cval(self, e):
        try:
            return const_eval(e, self.frame.env, self.lookup)
        except OqimpRuntimeError as exc:
            raise CompileError(str(exc), getattr(e, "line", 0)) from exc

    def is_c(self, e) -> bool:
        return expr_type(e, self.frame.env)[1] == "C"

    def qvar(self, lv) -> str:
        name = lv.name
        t = self.frame.env[name]
        k = self.ckey(lv)
        local = name not in self.summary.globals
        prefix = f"{self.frame.fun.name}__{name}" if local else name
        disp = f"{self.frame.fun.name}.{name}" if local else name
        if isinstance(k, tuple):
            return self.alloc(f"{prefix}__{k[1]}", self.width(t.base), f"{disp}[{k[1]}]", t.elem())
        return self.alloc(prefix, self.width(t.base), disp, t)

    # primitive emitters ------------------------------------------------------------

    def load_const(self, dst, value: int) -> Instr:
        return seq(*(X(p) for i, p in enumerate(self.bits(dst)) if value >> i & 1))

    def copy(self, src, dst, src_bits: list | None = None) -> Instr:
        s = src_bits if src_bits is not None else self.bits(src)
        return seq(*(CU(a, X(b)) for a, b in zip(s, self.bits(dst))))

    def oracle(self, spec: O.OracleSpec, mapping: dict) -> Instr:
        full = dict(mapping)
        temps = []
        for v, w in spec.sizes.items():
            if v in full:
                m = full[v]
                have = 1 if isinstance(m, Position) else self.sizes[m]
                if have != w:
                    raise CompileError(f"internal: {spec.name} expects {v} of width {w}, got {have}")
            else:
                full[v] = self.temp(w)
                temps.append(full[v])
        code = rename(spec.program, full)
        for t in temps:
            self.put(t)
        self.ops.append(spec.name)
        return code

    def add_const(self, var: str, c: int, subtract: bool = False) -> Instr:
        w = self.sizes[var]
        c %= 1 << w
        if c == 0:
            return Skip()
        if self.flavor == "qft":
            spec = O.rz_sub_const(w, c) if subtract else O.rz_adder_const(w, c)
        else:
            spec = O.toff_sub_const(w, c) if subtract else O.toff_adder_const(w, c)
        return self.oracle(spec, {"x": var})

    def add(self, a: str, b: str, subtract: bool = False) -> Instr:
        """b += a (or b -= a)."""
        w = self.sizes[b]
        if self.flavor == "qft":
            spec = O.rz_sub(w) if subtract else O.rz_adder(w)
        else:
            spec = O.toff_sub(w) if subtract else O.toff_adder(w)
        return self.oracle(spec, {"a": a, "b": b})

    def controlled(self, ctl: Position, prog: Instr) -> Instr:
        """Make prog conditional on ctl.

        Gates get the extra control; transforms and shifts stay unconditional,
        which is sound as long as they cancel out, checked per variable.
        Deeper controls go through a one-qubit ancilla.
        """
        out = []
        pending = defaultdict(list)
        for leaf in leaves(prog):
            if isinstance(leaf, Skip):
                continue
            if isinstance(leaf, (X, SR, SRInv)):
                out.append(CU(ctl, leaf))
            elif isinstance(leaf, CU):
                if isinstance(leaf.body, (X, SR, SRInv)):
                    out.append(CU(ctl, leaf))
                else:
                    # the body may use pooled scratch, so the ancilla must be outside it
                    anc = self.temp(1, variables(leaf))
                    a = Position(anc, 0)
                    make = CU(ctl, CU(leaf.pos, X(a)))
                    out += [make, self.controlled(a, leaf.body), make]
                    self.put(anc)
            else:
                stack = pending[leaf.var]
                if stack and stack[-1] == _inverse_of(leaf):
                    stack.pop()
                else:
                    stack.append(leaf)
                out.append(leaf)
        left = sorted(v for v, st in pending.items() if st)
        if left:
            raise CompileError(f"cannot condition a net shift or transform of {', '.join(left)} "
                               f"on quantum data")
        return seq(*out)

    def guarded(self, core: Instr) -> Instr:
        return core if self.ctl is None else self.controlled(self.ctl, core)

    # operands ----------------------------------------------------------------------

    def operand(self, e, base: str):
        """(register, code, temp): a register holding e's value, computed into a temp if needed."""
        if isinstance(e, (Var, Index)) and not self.is_c(e):
            return self.qvar(e), Skip(), None
        t = self.temp(self.width(base))
        return t, self.expr(e, t, base), t

    def release(self, code: Instr, tmp) -> Instr:
        self.put(tmp)
        return invert(code)

    def sign_extend(self, src: str, dst: str) -> Instr:
        n = self.sizes[src]
        top = Position(src, n - 1)
        return seq(self.copy(src, dst),
                   *(CU(top, X(Position(dst, j))) for j in range(n, self.sizes[dst])))

    # expressions --------------------------------------------------------------------

    def expr(self, e, dst, base: str) -> Instr:
        """Code that xors the value of e into dst (a register, or one qubit for bool)."""
        env = self.frame.env
        b, mode = expr_type(e, env)
        if mode == "C":
            return self.load_const(dst, V.to_bits(base, self.cval(e), self.sz))
        if isinstance(e, (Var, Index)):
            return self.copy(self.qvar(e), dst)
        if isinstance(e, Not):
            return seq(self.expr(e.arg, dst, "bool"), X(self.bits(dst)[0]))
        if isinstance(e, Call):
            return self.builtin(e, dst, base)
        op = e.op
        if op in ("<", "<=", ">", ">=", "==", "!="):
            return self.compare(e, self.bits(dst)[0])
        if op in ("+", "-"):
            return self.additive(e, dst, base)
        if op == "^":
            code = self.expr(e.left, dst, base)
            if self.is_c(e.right):
                return seq(code, self.load_const(dst, V.to_bits(base, self.cval(e.right), self.sz)))
            v, c2, tmp = self.operand(e.right, base)
            return seq(code, c2, self.copy(v, dst), self.release(c2, tmp))
        if op == "*":
            return self.multiply(e, dst, base)
        return self.divide(e, dst, base)

    def builtin(self, e: Call, dst, base: str) -> Instr:
        if e.name == "even":
            v, code, tmp = self.operand(e.args[0], "nat")
            out = self.bits(dst)[0]
            return seq(code, CU(Position(v, 0), X(out)), X(out), self.release(code, tmp))
        # pow
        k = self.cval(e.args[1])
        a = e.args[0]
        if k == 0:
            if base == "fixedp":
                raise CompileError("pow(x, 0) = 1 is outside the fixed-point range", e.line)
            return self.load_const(dst, 1)
        if k == 1:
            return self.expr(a, dst, base)
        # keep every partial power so the chain costs 2k-3 multiplications, not 2^k
        v, code, tmp = self.operand(a, base)
        parts, names = [], []
        cur = v
        for i in range(k - 1):
            out = dst if i == k - 2 else self.temp(self.width(base))
            parts.append(self.mul_regs(cur, v, out, base))
            if out != dst:
                names.append(out)
            cur = out
        last = parts.pop()
        undo = [invert(p) for p in reversed(parts)]
        for n in names:
            self.put(n)
        return seq(code, *parts, last, *undo, self.release(code, tmp))

    def additive(self, e: BinOp, dst, base: str) -> Instr:
        sub = e.op == "-"
        lc, rc = self.is_c(e.left), self.is_c(e.right)
        if rc:
            c = V.to_bits(base, self.cval(e.right), self.sz)
            return seq(self.expr(e.left, dst, base), self.add_const(dst, c, sub))
        if lc:
            c = V.to_bits(base, self.cval(e.left), self.sz)
            code = self.expr(e.right, dst, base)
            if not sub:
                return seq(code, self.add_const(dst, c))
            # c - y = (not y) + 1 + c
            return seq(code, *(X(p) for p in self.bits(dst)), self.add_const(dst, c + 1))
        code = self.expr(e.left, dst, base)
        v, c2, tmp = self.operand(e.right, base)
        return seq(code, c2, self.add(v, dst, sub), self.release(c2, tmp))

    def multiply(self, e: BinOp, dst, base: str) -> Instr:
        sz = self.sz
        lc, rc = self.is_c(e.left), self.is_c(e.right)
        if lc or rc:
            cexpr, qexpr = (e.left, e.right) if lc else (e.right, e.left)
            c = self.cval(cexpr)
            v, code, tmp = self.operand(qexpr, base)
            if base == "nat":
                c %= 1 << sz
                core = Skip() if c == 0 else self.oracle(O.multiplier(sz, self.flavor, c), {"x": v, "r": dst})
                self.ops.append("nat_mult_const")
            else:
                core = self.fixedp_mult_const(c, v, dst)
            return seq(code, core, self.release(code, tmp))
        vl, cl, tl = self.operand(e.left, base)
        vr, cr, tr = self.operand(e.right, base)
        core = self.mul_regs(vl, vr, dst, base)
        return seq(cl, cr, core, self.release(cr, tr), self.release(cl, tl))

    def mul_regs(self, a: str, b: str, dst: str, base: str) -> Instr:
        if base == "fixedp":
            return self.fixedp_mult(a, b, dst)
        te = None
        extra = Skip()
        if a == b:
            te = self.temp(self.sz)
            extra = self.copy(b, te)
            b = te
        core = seq(extra, self.oracle(O.multiplier(self.sz, self.flavor), {"x": a, "y": b, "r": dst}),
                   invert(extra))
        self.put(te)
        self.ops.append("nat_mult")
        return core

    def fixedp_mult_const(self, c, v: str, dst: str) -> Instr:
        """dst ^= floor(K * s / 2^(sz-1)) with K = floor(c * 2^(sz-1))."""
        sz, f = self.sz, self.sz - 1
        k = V.scaled(c, sz)
        self.ops.append("fixedp_mult_const")
        if k == 0:
            return Skip()
        w = sz + abs(k).bit_length() + 1
        s, r = self.temp(w), self.temp(w)
        ext = self.sign_extend(v, s)
        mult = self.oracle(O.multiplier(w, self.flavor, k % (1 << w)), {"x": s, "r": r})
        src = [Position(r, min(i, w - 1)) for i in range(f, f + sz)]
        out = seq(ext, mult, self.copy(r, dst, src), invert(mult), invert(ext))
        self.put(r)
        self.put(s)
        return out

    def fixedp_mult(self, a: str, b: str, dst: str) -> Instr:
        sz, f = self.sz, self.sz - 1
        w = 2 * sz
        self.ops.append("fixedp_mult")
        ta, tb, r = self.temp(w), self.temp(w), self.temp(w)
        ext = seq(self.sign_extend(a, ta), self.sign_extend(b, tb))
        mult = self.oracle(O.multiplier(w, self.flavor), {"x": ta, "y": tb, "r": r})
        src = [Position(r, i) for i in range(f, f + sz)]
        out = seq(ext, mult, self.copy(r, dst, src), invert(mult), invert(ext))
        for t in (r, tb, ta):
            self.put(t)
        return out

    def div_core(self, t: str, nbits: int, m: int):
        """div_mod on register t; returns (code, quotient register, quotient temp)."""
        spec = O.div_mod(nbits, m, self.flavor)
        q = self.temp(spec.sizes["q"])
        return self.oracle(spec, {"x": t, "q": q}), q

    def divide(self, e: BinOp, dst: str, base: str) -> Instr:
        sz = self.sz
        m = self.cval(e.right)
        if m == 0:
            raise CompileError("division by zero", e.line)
        v, code, tmp = self.operand(e.left, base)
        if base == "nat":
            self.ops.append("nat_div_const" if e.op == "/" else "nat_mod_const")
            if m >= 1 << sz:
                core = Skip() if e.op == "/" else self.copy(v, dst)
            elif m == 1:
                core = self.copy(v, dst) if e.op == "/" else Skip()
            else:
                t = self.temp(sz + 1 if self.flavor == "qft" else sz)
                load = self.copy(v, t)
                div, q = self.div_core(t, sz, m)
                res = self.copy(q, dst) if e.op == "/" else \
                    self.copy(t, dst, [Position(t, i) for i in range(sz)])
                core = seq(load, div, res, invert(div), invert(load))
                self.put(q)
                self.put(t)
            return seq(code, core, self.release(code, tmp))
        # fixed point: floor(s / m) on the signed value s
        self.ops.append("fixedp_div_const")
        half = 1 << (sz - 1)
        if m == 1:
            core = self.copy(v, dst)
        elif m >= half:
            top = Position(v, sz - 1)
            core = seq(*(CU(top, X(p)) for p in self.bits(dst)))
        else:
            # u = s + 2^(sz-1) is s with its top bit flipped; with 2^(sz-1) = qb*m + rb,
            # floor(s/m) = floor((u + m - rb) / m) - (1 + qb), and the dividend stays below 2^(sz+1)
            qb, rb = divmod(half, m)
            t = self.temp(sz + 2 if self.flavor == "qft" else sz + 1)
            load = seq(self.copy(v, t), X(Position(t, sz - 1)), self.add_const(t, m - rb))
            div, q = self.div_core(t, sz + 1, m)
            res = self.copy(q, dst, [Position(q, i) for i in range(min(sz, self.sizes[q]))])
            core = seq(load, div, res, invert(div), invert(load), self.add_const(dst, 1 + qb, True))
            self.put(q)
            self.put(t)
        return seq(code, core, self.release(code, tmp))

    def compare(self, e: BinOp, out: Position) -> Instr:
        env = self.frame.env
        op, left, right = e.op, e.left, e.right
        base = expr_type(left, env)[0]
        sz = self.sz
        self.ops.append("compare")
        if base == "bool":
            code = self.expr(left, out, "bool")
            code = seq(code, self.expr(right, out, "bool"))
            return seq(code, X(out)) if op == "==" else code
        if self.is_c(left):
            op, left, right = _FLIP[op], right, left
        off = 1 << (sz - 1) if base == "fixedp" else 0
        v, code, tmp = self.operand(left, base)
        flip = X(Position(v, sz - 1)) if off else Skip()
        if self.is_c(right):
            c = Fraction(self.cval(right)) * (1 << (sz - 1) if off else 1)
            if op in ("==", "!="):
                hit = c.denominator == 1 and -off <= c < (1 << sz) - off
                if hit:
                    spec = O.comparator(sz, "eq_const", int(c) % (1 << sz))
                    core = self.oracle(spec, {"x": v, "t": out})
                else:
                    core = Skip()
                if op == "!=":
                    core = seq(core, X(out))
                return seq(code, core, self.release(code, tmp))
            negate = op in (">", ">=")
            if op in ("<", ">="):
                k = math.ceil(c) + off
            else:
                k = math.floor(c) + 1 + off
            if k <= 0:
                core = Skip()
            elif k >= 1 << sz:
                core = X(out)
            else:
                core = seq(flip, self.oracle(O.comparator(sz, "lt_const", k), {"x": v, "t": out}), flip)
            if negate:
                core = seq(core, X(out))
            return seq(code, core, self.release(code, tmp))
        w, c2, tmp2 = self.operand(right, base)
        if w == v:
            core = X(out) if op in ("<=", ">=", "==") else Skip()
            return seq(code, c2, core, self.release(c2, tmp2), self.release(code, tmp))
        flip2 = X(Position(w, sz - 1)) if off else Skip()
        if op in ("==", "!="):
            core = self.oracle(O.comparator(sz, "eq"), {"x": v, "y": w, "t": out})
            if op == "!=":
                core = seq(core, X(out))
        else:
            x, y = (v, w) if op in ("<", ">=") else (w, v)
            core = seq(flip, flip2, self.oracle(O.comparator(sz, "lt"), {"x": x, "y": y, "t": out}),
                       flip2, flip)
            if op in ("<=", ">="):
                core = seq(core, X(out))
        return seq(code, c2, core, self.release(c2, tmp2), self.release(code, tmp))

    # statements ----------------------------------------------------------------------

    def block(self, stmts) -> Instr:
        return seq(*(self.stmt(s) for s in stmts))

    def stmt(self, s) -> Instr:
        try:
            if isinstance(s, Decl):
                return self.declare(s)
            if isinstance(s, Assign):
                return self.assign(s)
            if isinstance(s, Inv):
                return self.inv(s)
            if isinstance(s, For):
                return self.loop(s)
            if isinstance(s, If):
                return self.branch(s)
        except (OqimpRuntimeError, ValueError) as exc:
            if isinstance(exc, CompileError):
                raise
            raise CompileError(str(exc), getattr(s, "line", 0)) from exc
        raise CompileError(f"unexpected statement {s!r}")

    def declare(self, d: Decl) -> Instr:
        t = d.type
        if t.mode == "C":
            if t.length is None:
                self.frame.sigma[d.name] = zero(t)
            else:
                for i in range(t.length):
                    self.frame.sigma[(d.name, i)] = zero(t)
        if d.init is not None:
            return self.assign(Assign(Var(d.name, d.line), "=", d.init, d.line))
        return Skip()

    def c_assign(self, s: Assign, t: Type) -> Instr:
        k = self.ckey(s.target)
        v = self.cval(s.expr)
        if s.op != "=":
            cur = self.lookup(s.target)
            try:
                v = V.c_binop(s.op[:-1], t.base, cur, v)
            except OqimpRuntimeError as exc:
                raise CompileError(str(exc), s.line) from exc
        if t.base == "fixedp":
            v = Fraction(v)
        if k in self.frame.sigma:
            self.frame.sigma[k] = v
        else:
            self.gsigma[k] = v
        return Skip()

    def assign(self, s: Assign) -> Instr:
        env = self.frame.env
        if isinstance(s.expr, Call) and s.expr.name in self.summary.functions:
            return self.call(s)
        tt = env[s.target.name]
        t = tt.elem() if isinstance(s.target, Index) else tt
        if t.mode == "C":
            return self.c_assign(s, t)
        dst = self.qvar(s.target)
        e = normalize(s.expr, env)
        op = s.op
        if op in ("<<<=", ">>>="):
            if self.ctl is not None:
                raise CompileError("rotation under a quantum if", s.line)
            k = self.cval(e) % self.sizes[dst]
            cls = Lshift if op == "<<<=" else Rshift
            code = seq(*(cls(dst) for _ in range(k)))
        else:
            self.check_alias(s, dst, e)
            base = t.base
            if self.is_c(e):
                c = V.to_bits(base, self.cval(e), self.sz)
                if op == "+=" or op == "-=":
                    core = self.add_const(dst, c, op == "-=")
                else:
                    core = self.load_const(dst, c)
                code = self.guarded(core)
            elif op == "=" and self.ctl is None:
                code = self.expr(e, dst, base)
            else:
                v, pre, tmp = self.operand(e, base)
                if op == "+=" or op == "-=":
                    core = self.add(v, dst, op == "-=")
                else:
                    core = self.copy(v, dst)
                code = seq(pre, self.guarded(core), self.release(pre, tmp))
        self.frame.entries.append(_Entry(dst, code, self.scope))
        return code

    def check_alias(self, s: Assign, dst: str, e):
        stack = [e]
        while stack:
            node = stack.pop()
            if isinstance(node, Index):
                if not self.is_c(node) and self.qvar(node) == dst:
                    raise CompileError(f"{s.target.name} element is both destination and operand", s.line)
                stack.append(node.index)
            elif isinstance(node, BinOp):
                stack += [node.left, node.right]
            elif isinstance(node, Not):
                stack.append(node.arg)
            elif isinstance(node, Call):
                stack += list(node.args)

    def inv(self, s: Inv) -> Instr:
        dst = self.qvar(s.target)
        entries = self.frame.entries
        for i in range(len(entries) - 1, -1, -1):
            if entries[i].target == dst:
                entry = entries.pop(i)
                if entry.scope != self.scope:
                    raise CompileError(f"inv({s.target.name}) undoes an assignment made under a "
                                       f"different quantum condition", s.line)
                return invert(entry.code)
        raise CompileError(f"inv({s.target.name}) has no assignment to undo", s.line)

    def loop(self, s: For) -> Instr:
        out = [self.stmt(s.init)]
        n = 0
        while self.cval(s.cond):
            out.append(self.block(s.body))
            out.append(self.stmt(s.step))
            n += 1
            if n > LOOP_LIMIT:
                raise CompileError("loop does not terminate", s.line)
        return seq(*out)

    def branch(self, s: If) -> Instr:
        if self.is_c(s.cond):
            return self.block(s.then if self.cval(s.cond) else s.orelse)
        outer, d = self.ctl, self.depth
        slot = self.chi_slot(d)
        cond = normalize(s.cond, self.frame.env)
        if outer is None:
            gcode, g = self.expr(cond, slot, "bool"), None
            enter = leave = Skip()
            swap = X(slot)
        else:
            g = self.temp(1)
            gq = Position(g, 0)
            gcode = self.expr(cond, gq, "bool")
            enter = leave = CU(outer, CU(gq, X(slot)))
            swap = seq(leave, X(gq), enter)
        saved_scope = self.scope
        self.depth, self.ctl = d + 1, slot
        self.nscope += 1
        self.scope = self.nscope
        then = self.block(s.then)
        self.nscope += 1
        self.scope = self.nscope
        orelse = self.block(s.orelse)
        self.depth, self.ctl, self.scope = d, outer, saved_scope
        tail = swap if outer is None else seq(leave, X(Position(g, 0)))
        out = seq(gcode, enter, then, swap, orelse, tail, invert(gcode))
        self.put(g)
        return out

    def call(self, s: Assign) -> Instr:
        f = self.summary.functions[s.expr.name]
        args = [self.cval(a) for a in s.expr.args]
        tt = self.frame.env[s.target.name]
        caller, saved_g, ctl, scope = self.frame, dict(self.gsigma), self.ctl, self.scope
        sigma = {name: (Fraction(a) if t.base == "fixedp" else a) for (t, name), a in zip(f.params, args)}
        callee = self.frame = _Frame(f, self.summary.envs[f.name], sigma)
        self.ctl = None
        try:
            body = self.block(f.body)
            if f.ret.mode == "C":
                value = [self.cval(e) for e in self.result_items(f)]
        finally:
            self.frame, self.gsigma, self.ctl, self.scope = caller, saved_g, ctl, scope
        if tt.mode == "C":
            keys = [self.ckey(s.target)] if f.ret.length is None else \
                [(s.target.name, i) for i in range(f.ret.length)]
            for k, v in zip(keys, value):
                v = Fraction(v) if tt.base == "fixedp" else v
                if k in self.frame.sigma:
                    self.frame.sigma[k] = v
                else:
                    self.gsigma[k] = v
            return Skip()
        targets = self.targets(s.target, f)
        if f.ret.mode == "C":
            code = self.guarded(seq(*(self.load_const(tg, V.to_bits(f.ret.base, v, self.sz))
                                      for tg, v in zip(targets, value))))
        else:
            code = seq(body, self.results_into(callee, f, targets), invert(body))
        for tg in targets:
            self.frame.entries.append(_Entry(tg, code, self.scope))
        return code

    def targets(self, lv, f: FunDef) -> list:
        if f.ret.length is None:
            return [self.qvar(lv)]
        return [self.qvar(Index(lv.name, Num(i, lv.line), lv.line)) for i in range(f.ret.length)]

    def result_items(self, f: FunDef) -> list:
        r = f.result
        if isinstance(r, ArrayLit):
            return list(r.items)
        if f.ret.length is not None:
            return [Index(r.name, Num(i, f.line), f.line) for i in range(f.ret.length)]
        return [r]

    def results_into(self, callee: _Frame, f: FunDef, targets: list) -> Instr:
        """Compute f's result (in the callee's frame) into the caller's registers."""
        caller = self.frame
        self.frame = callee
        try:
            out = []
            base = f.ret.base
            for e, tg in zip(self.result_items(f), targets):
                e = normalize(e, callee.env)
                if caller is not None and self.ctl is not None:
                    v, pre, tmp = self.operand(e, base)
                    out.append(seq(pre, self.controlled(self.ctl, self.copy(v, tg)), self.release(pre, tmp)))
                else:
                    out.append(self.expr(e, tg, base))
            return seq(*out)
        finally:
            self.frame = caller

    # driver ---------------------------------------------------------------------------

    def compile(self, params: dict | None = None, uncompute: bool = True) -> Compiled:
        params = dict(params or {})
        main = self.prog.main
        genv = self.summary.globals
        for name, t in genv.items():
            if t.mode == "Q":
                w = self.width(t.base)
                if t.length is None:
                    self.alloc(name, w, name, t)
                else:
                    for i in range(t.length):
                        self.alloc(f"{name}__{i}", w, f"{name}[{i}]", t.elem())
            elif t.length is None:
                self.gsigma[name] = zero(t)
            else:
                for i in range(t.length):
                    self.gsigma[(name, i)] = zero(t)
        sigma = {}
        for t, name in main.params:
            if name not in params:
                raise CompileError(f"missing parameter {name}")
            sigma[name] = convert_input(t, params.pop(name), self.sz)
        if params:
            raise CompileError(f"unknown parameters: {', '.join(sorted(params))}")
        self.frame = _Frame(main, self.summary.envs[main.name], sigma)
        ret = main.ret
        outputs, c_result = None, None
        if ret is not None and ret.mode == "Q":
            w = self.width(ret.base)
            if ret.length is None:
                outputs = [self.alloc("ret", w, "ret", Type(ret.base, "Q"))]
            else:
                outputs = [self.alloc(f"ret__{i}", w, f"ret[{i}]", Type(ret.base, "Q"))
                           for i in range(ret.length)]
        body = self.block(main.body)
        if ret is None:
            result = Skip()
        elif ret.mode == "Q":
            result = self.results_into(self.frame, main, outputs)
        else:
            vals = [self.cval(e) for e in self.result_items(main)]
            c_result = vals if ret.length is not None else vals[0]
            result = Skip()
        prog = seq(body, result, invert(body)) if uncompute else seq(body, result)
        if self.chi:
            self.sizes[CHI] = self.chi
        layout, lo = {}, 0
        for v, w in self.sizes.items():
            layout[v] = (lo, lo + w)
            lo += w
        theta = {disp: {"var": var, "qubits": list(layout[var])} for disp, var in self.theta.items()}
        scratch = [v for v in self.sizes if v.startswith("__")]
        manifest = {
            "flag": self.flag,
            "sz": self.sz,
            "qubits": lo,
            "theta": theta,
            "inputs": [d for d in theta if d.split("[")[0] in genv],
            "output": None if outputs is None else ["ret" if ret.length is None else f"ret[{i}]"
                                                    for i in range(len(outputs))],
            "ret_length": None if ret is None else ret.length,
            "ret_base": None if ret is None else ret.base,
            "c_result": _jsonable(c_result),
            "scratch": scratch,
            "scratch_qubits": sum(self.sizes[v] for v in scratch),
            "chi": self.chi,
            "ops": list(self.ops),
            "uncompute": uncompute,
        }
        return Compiled(prog, dict(self.sizes), manifest, dict(self.types))


def _jsonable(v):
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return str(v)
    return v


def compile_program(prog: Program, flag: str = "qft", sz: int = 16, params: dict | None = None,
                    uncompute: bool = True, check: bool = False) -> Compiled:
    """Typecheck, inv-check and compile; check=True also typechecks the OQASM output."""
    summary = typecheck_program(prog)
    check_inv(prog, summary)
    out = Compiler(prog, flag, sz, summary).compile(params, uncompute)
    if check:
        typecheck(out.sizes, out.env(), out.program)
    return out
