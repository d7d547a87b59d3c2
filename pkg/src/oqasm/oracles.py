"""
Arithmetic oracle constructors.

Each constructor returns an OracleSpec: the program, its variable sizes, the
role of every variable and a classical function giving the expected final
value of every variable. Registers are little-endian by offset; QFT-based
code reverses a register first so offset 0 is its most significant bit.

Contains:
    - OracleSpec, REGISTRY, build
    - QFT adders/subtractors (plain, constant, approximate), ripple-carry adders
    - comparators, multipliers, modular adder and multiplier, division/modulo
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Callable

from .core import (CU, NOR, QFT, SR, X, Instr, Lshift, Position, QFTInv, Rev, Rshift,
                   SRInv, invert, seq)


@dataclass(eq=False)
class OracleSpec:
    name: str
    program: Instr
    sizes: dict[str, int]
    inputs: list[tuple[str, str]]            # (variable, role)
    classical_spec: Callable[[dict[str, int]], dict[str, int]]
    bounds: dict[str, int] = field(default_factory=dict)   # exclusive upper bound of operands
    params: dict = field(default_factory=dict)

    @property
    def num_qubits(self) -> int:
        return sum(self.sizes.values())

    @property
    def env(self) -> dict:
        return {v: NOR for v in self.sizes}

    def operands(self) -> list[str]:
        return [v for v, role in self.inputs if role in ("operand", "result")]

    def bound(self, var: str) -> int:
        return self.bounds.get(var, 1 << self.sizes[var])


def _p(var, i):
    return Position(var, i)


def _regs(var: str, n: int) -> list[Position]:
    return [Position(var, i) for i in range(n)]


def _bit(value: int, i: int) -> int:
    return (value >> i) & 1


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

def cnot(c: Position, t: Position) -> Instr:
    return CU(c, X(t))


def ccx(c1: Position, c2: Position, t: Position) -> Instr:
    return CU(c1, CU(c2, X(t)))


def phi_add_const(var: str, precision: int, c: int, subtract: bool = False) -> Instr:
    """Add c to a Phi(precision) register (offset 0 most significant)."""
    op = SRInv if subtract else SR
    return seq(*(op(precision - 1 - j, var) for j in range(precision) if _bit(c, j)))


def load_const(reg: list[Position], c: int, ctrl: Position | None = None) -> Instr:
    """XOR the bits of c into reg, optionally under a control qubit."""
    gates = [X(p) for i, p in enumerate(reg) if _bit(c, i)]
    return seq(*(g if ctrl is None else CU(ctrl, g) for g in gates))


def _maj(c, b, a):
    return [cnot(a, b), cnot(a, c), ccx(c, b, a)]


def _uma(c, b, a, ctrl=None):
    if ctrl is None:
        return [ccx(c, b, a), cnot(a, c), cnot(c, b)]
    # sum bit only when ctrl is set; otherwise undo the majority exactly
    return [ccx(c, b, a), cnot(a, c), cnot(a, b), ccx(ctrl, a, b), ccx(ctrl, c, b)]


def ripple_add(a: list[Position], b: list[Position], carry: Position,
               ctrl: Position | None = None) -> Instr:
    """b <- (a + b) mod 2^len(b) by majority/unmajority ripple carry.

    The carry qubit starts and ends at 0. With ctrl, only the sum-producing
    gates are controlled, so no gate needs more than two controls.
    """
    m = len(a)
    carries = [carry] + a[:-1]
    body = []
    for i in range(m - 1):
        body += _maj(carries[i], b[i], a[i])
    top = [cnot(a[m - 1], b[m - 1]), cnot(carries[m - 1], b[m - 1])]
    body += top if ctrl is None else [CU(ctrl, g) for g in top]
    for i in reversed(range(m - 1)):
        body += _uma(carries[i], b[i], a[i], ctrl)
    return seq(*body)


def carry_compare(a: list[Position], b: list[Position], carry: Position, target: Position) -> Instr:
    """target ^= carry out of (a + b); a and b are restored."""
    chain = []
    for i in range(len(a)):
        c = carry if i == 0 else a[i - 1]
        chain += _maj(c, b[i], a[i])
    chain = seq(*chain)
    return seq(chain, cnot(a[-1], target), invert(chain))


# ---------------------------------------------------------------------------
# QFT adders
# ---------------------------------------------------------------------------

def _rz_adder_core(n: int, a: str = "a", b: str = "b", precision: int | None = None) -> Instr:
    p = n if precision is None else precision
    # after Rev a, (a, m) holds bit n-1-m of a, worth 2^(p-1-m) in Phi(p)
    return seq(*(CU(_p(a, m), SR(m, b)) for m in reversed(range(p))))


def rz_adder(n: int) -> OracleSpec:
    core = _rz_adder_core(n)
    prog = seq(Rev("a"), Rev("b"), QFT(n, "b"), core, QFTInv(n, "b"), Rev("b"), Rev("a"))
    mod = 1 << n
    return OracleSpec("rz_adder", prog, {"a": n, "b": n},
                      [("a", "operand"), ("b", "result")],
                      lambda v: {"a": v["a"], "b": (v["a"] + v["b"]) % mod}, params={"bits": n})


def rz_sub(n: int) -> OracleSpec:
    core = invert(_rz_adder_core(n))
    prog = seq(Rev("a"), Rev("b"), QFT(n, "b"), core, QFTInv(n, "b"), Rev("b"), Rev("a"))
    mod = 1 << n
    return OracleSpec("rz_sub", prog, {"a": n, "b": n},
                      [("a", "operand"), ("b", "result")],
                      lambda v: {"a": v["a"], "b": (v["b"] - v["a"]) % mod}, params={"bits": n})


def _const_wrap(n: int, var: str, core: Instr) -> Instr:
    return seq(Rev(var), QFT(n, var), core, QFTInv(n, var), Rev(var))


def rz_adder_const(n: int, c: int) -> OracleSpec:
    mod = 1 << n
    c %= mod
    prog = _const_wrap(n, "x", phi_add_const("x", n, c))
    return OracleSpec("rz_adder_const", prog, {"x": n}, [("x", "result")],
                      lambda v: {"x": (v["x"] + c) % mod}, params={"bits": n, "c": c})


def rz_sub_const(n: int, c: int) -> OracleSpec:
    mod = 1 << n
    c %= mod
    prog = _const_wrap(n, "x", invert(phi_add_const("x", n, c)))
    return OracleSpec("rz_sub_const", prog, {"x": n}, [("x", "result")],
                      lambda v: {"x": (v["x"] - c) % mod}, params={"bits": n, "c": c})


def rz_const_minus(n: int, c: int) -> OracleSpec:
    """x <- (c - x) mod 2^n, as (not x) + c + 1."""
    mod = 1 << n
    c %= mod
    flip = seq(*(X(p) for p in _regs("x", n)))
    prog = seq(flip, _const_wrap(n, "x", phi_add_const("x", n, (c + 1) % mod)))
    return OracleSpec("rz_const_minus", prog, {"x": n}, [("x", "result")],
                      lambda v: {"x": (c - v["x"]) % mod}, params={"bits": n, "c": c})


def aqft_adder(n: int, drop: int) -> OracleSpec:
    """rz_adder with the transform and rotation ladder cut to n - drop bits of precision."""
    if not 0 <= drop < n:
        raise ValueError("need 0 <= drop < n")
    p = n - drop
    core = _rz_adder_core(n, precision=p)
    prog = seq(Rev("a"), Rev("b"), QFT(p, "b"), core, QFTInv(p, "b"), Rev("b"), Rev("a"))
    low = (1 << drop) - 1
    top = 1 << p

    def spec(v):
        hi = ((v["a"] >> drop) + (v["b"] >> drop)) % top
        return {"a": v["a"], "b": (hi << drop) | (v["b"] & low)}

    return OracleSpec("aqft_adder", prog, {"a": n, "b": n},
                      [("a", "operand"), ("b", "result")], spec, params={"bits": n, "drop": drop})


# ---------------------------------------------------------------------------
# ripple-carry adders
# ---------------------------------------------------------------------------

def toff_adder(n: int) -> OracleSpec:
    prog = ripple_add(_regs("a", n), _regs("b", n), _p("c", 0))
    mod = 1 << n
    return OracleSpec("toff_adder", prog, {"a": n, "b": n, "c": 1},
                      [("a", "operand"), ("b", "result"), ("c", "ancilla")],
                      lambda v: {"a": v["a"], "b": (v["a"] + v["b"]) % mod, "c": 0},
                      params={"bits": n})


def toff_sub(n: int) -> OracleSpec:
    prog = invert(ripple_add(_regs("a", n), _regs("b", n), _p("c", 0)))
    mod = 1 << n
    return OracleSpec("toff_sub", prog, {"a": n, "b": n, "c": 1},
                      [("a", "operand"), ("b", "result"), ("c", "ancilla")],
                      lambda v: {"a": v["a"], "b": (v["b"] - v["a"]) % mod, "c": 0},
                      params={"bits": n})


def _toff_const(n: int, c: int, subtract: bool) -> Instr:
    k = _regs("k", n)
    core = ripple_add(k, _regs("x", n), _p("c", 0))
    if subtract:
        core = invert(core)
    return seq(load_const(k, c), core, load_const(k, c))


def toff_adder_const(n: int, c: int) -> OracleSpec:
    mod = 1 << n
    c %= mod
    return OracleSpec("toff_adder_const", _toff_const(n, c, False), {"x": n, "k": n, "c": 1},
                      [("x", "result"), ("k", "ancilla"), ("c", "ancilla")],
                      lambda v: {"x": (v["x"] + c) % mod, "k": 0, "c": 0},
                      params={"bits": n, "c": c})


def toff_sub_const(n: int, c: int) -> OracleSpec:
    mod = 1 << n
    c %= mod
    return OracleSpec("toff_sub_const", _toff_const(n, c, True), {"x": n, "k": n, "c": 1},
                      [("x", "result"), ("k", "ancilla"), ("c", "ancilla")],
                      lambda v: {"x": (v["x"] - c) % mod, "k": 0, "c": 0},
                      params={"bits": n, "c": c})


# ---------------------------------------------------------------------------
# comparators
# ---------------------------------------------------------------------------

COMPARATOR_FORMS = ("lt_const", "lt", "eq_const", "eq")


def _not_all(var: str, n: int) -> Instr:
    return seq(*(X(p) for p in _regs(var, n)))


def _lt_vars(x: str, y: str, n: int, carry: Position, target: Position) -> Instr:
    # carry out of (not x) + y is set exactly when x < y
    return seq(_not_all(x, n), carry_compare(_regs(x, n), _regs(y, n), carry, target), _not_all(x, n))


def _lt_const(x: str, k: str, n: int, c: int, carry: Position, target: Position) -> Instr:
    if c >= 1 << n:
        return X(target)
    kreg = _regs(k, n)
    return seq(load_const(kreg, c), _lt_vars(x, k, n, carry, target), load_const(kreg, c))


def comparator(n: int, form: str, c: int = 0) -> OracleSpec:
    """target ^= predicate(x, y or constant c); operands and ancillae are restored."""
    mod = 1 << n
    t = _p("t", 0)
    carry = _p("c", 0)
    if form == "lt":
        prog = _lt_vars("x", "y", n, carry, t)
        sizes = {"x": n, "y": n, "c": 1, "t": 1}
        pred = lambda v: v["x"] < v["y"]
    elif form == "lt_const":
        if not 0 <= c < mod:
            raise ValueError("constant out of range")
        prog = _lt_const("x", "k", n, c, carry, t)
        sizes = {"x": n, "k": n, "c": 1, "t": 1}
        pred = lambda v: v["x"] < c
    elif form == "eq":
        e1, e2 = _p("e", 0), _p("e", 1)
        compute = seq(_lt_vars("x", "y", n, carry, e1), _lt_vars("y", "x", n, carry, e2))
        prog = seq(compute, X(e1), X(e2), ccx(e1, e2, t), X(e1), X(e2), invert(compute))
        sizes = {"x": n, "y": n, "c": 1, "e": 2, "t": 1}
        pred = lambda v: v["x"] == v["y"]
    elif form == "eq_const":
        if not 0 <= c < mod:
            raise ValueError("constant out of range")
        e1, e2 = _p("e", 0), _p("e", 1)
        compute = seq(_lt_const("x", "k", n, c, carry, e1), _lt_const("x", "k", n, c + 1, carry, e2))
        prog = seq(compute, X(e1), ccx(e1, e2, t), X(e1), invert(compute))
        sizes = {"x": n, "k": n, "c": 1, "e": 2, "t": 1}
        pred = lambda v: v["x"] == c
    else:
        raise ValueError(f"unknown comparator form {form!r}; expected one of {COMPARATOR_FORMS}")
    roles = [(v, "operand" if v in ("x", "y") else "result" if v == "t" else "ancilla") for v in sizes]

    def spec(v):
        out = {var: 0 for var in sizes}
        for var in ("x", "y"):
            if var in sizes:
                out[var] = v[var]
        out["t"] = v["t"] ^ int(pred(v))
        return out

    return OracleSpec(f"comparator_{form}", prog, sizes, roles, spec,
                      params={"bits": n, "form": form, "c": c})


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------

def multiplier(n: int, flavor: str = "qft", const: int | None = None) -> OracleSpec:
    """r <- (x * y) mod 2^n, or (const * x) mod 2^n; r starts at 0."""
    mod = 1 << n
    if flavor == "qft":
        terms = []
        if const is None:
            for k in range(n):
                for j in range(n - k):
                    terms.append(CU(_p("y", k), CU(_p("x", j), SR(n - 1 - j - k, "r"))))
        else:
            for k in range(n):
                if _bit(const, k):
                    terms += [CU(_p("x", j), SR(n - 1 - j - k, "r")) for j in range(n - k)]
        prog = seq(Rev("r"), QFT(n, "r"), seq(*terms), QFTInv(n, "r"), Rev("r"))
        sizes = {"x": n, "r": n} if const is not None else {"x": n, "y": n, "r": n}
    elif flavor == "toff":
        parts = []
        x, r, carry = _regs("x", n), _regs("r", n), _p("c", 0)
        if const is None:
            for k in range(n):
                parts.append(ripple_add(x[:n - k], r[k:], carry, ctrl=_p("y", k)))
            sizes = {"x": n, "y": n, "r": n, "c": 1}
        else:
            for k in range(n):
                if _bit(const, k):
                    parts.append(ripple_add(x[:n - k], r[k:], carry))
            sizes = {"x": n, "r": n, "c": 1}
        prog = seq(*parts)
    else:
        raise ValueError(f"unknown flavor {flavor!r}")
    roles = [(v, "operand" if v in ("x", "y") else "result" if v == "r" else "ancilla") for v in sizes]

    def spec(v):
        out = {var: 0 for var in sizes}
        out["x"] = v["x"]
        if const is None:
            out["y"] = v["y"]
            out["r"] = (v["r"] + v["x"] * v["y"]) % mod
        else:
            out["r"] = (v["r"] + const * v["x"]) % mod
        return out

    name = f"{flavor}_mult" + ("_const" if const is not None else "")
    return OracleSpec(name, prog, sizes, roles, spec,
                      params={"bits": n, "flavor": flavor, "c": const})


# ---------------------------------------------------------------------------
# division / modulo by a constant
# ---------------------------------------------------------------------------

def div_iterations(nbits: int, divisor: int) -> int:
    """I + 1 where 2^(nbits-1) <= 2^I * divisor < 2^nbits."""
    if divisor < 1 or divisor >= 1 << nbits:
        raise ValueError("divisor must satisfy 1 <= divisor < 2^nbits")
    i = 0
    while (divisor << (i + 1)) < (1 << nbits):
        i += 1
    return i + 1


def _div_mod_qft(nbits: int, divisor: int, x: str, q: str) -> Instr:
    w = nbits + 1
    iters = div_iterations(nbits, divisor)
    top = iters - 1
    steps = [Rev(x), QFT(w, x)]
    for i in range(iters):
        d = divisor << (top - i)
        qb = _p(q, top - i)
        steps += [phi_add_const(x, w, d, subtract=True), QFTInv(w, x), cnot(_p(x, 0), qb),
                  QFT(w, x), CU(qb, phi_add_const(x, w, d)), X(qb)]
    steps += [QFTInv(w, x), Rev(x)]
    return seq(*steps)


def _div_mod_aqft(nbits: int, divisor: int, x: str, q: str) -> Instr:
    # x is kept doubled each round so the low bits are known zeros and the
    # transforms only need the top (w - i) bits
    w = nbits + 1
    iters = div_iterations(nbits, divisor)
    top = iters - 1
    steps = [Rev(x), QFT(w, x)]
    for i in range(iters):
        p = w - i
        d = divisor << (top - i)          # equals (divisor << top) >> i
        qb = _p(q, top - i)
        steps += [phi_add_const(x, p, d, subtract=True), QFTInv(p, x),
                  cnot(_p(x, 0), qb), cnot(qb, _p(x, 0)), Rshift(x),
                  QFT(p - 1, x), CU(qb, phi_add_const(x, p - 1, d)), X(qb)]
    steps.append(QFTInv(w - iters, x))
    steps += [Lshift(x)] * iters
    steps.append(Rev(x))
    return seq(*steps)


def _div_mod_toff(nbits: int, divisor: int, x: str, q: str, k: str, carry: str) -> Instr:
    iters = div_iterations(nbits, divisor)
    top = iters - 1
    xs, ks, c = _regs(x, nbits), _regs(k, nbits), _p(carry, 0)
    full = 1 << nbits
    steps = []
    for i in range(iters):
        d = divisor << (top - i)
        qb = _p(q, top - i)
        # q ^= [x >= d] via the carry out of x + (2^n - d)
        steps += [load_const(ks, full - d), seq(*_carry_chain(ks, xs, c)),
                  cnot(ks[-1], qb), invert(seq(*_carry_chain(ks, xs, c))), load_const(ks, full - d)]
        steps += [load_const(ks, d, qb), invert(ripple_add(ks, xs, c)), load_const(ks, d, qb)]
    return seq(*steps)


def _carry_chain(a, b, carry):
    chain = []
    for i in range(len(a)):
        chain += _maj(carry if i == 0 else a[i - 1], b[i], a[i])
    return chain


def div_mod(nbits: int, divisor: int, flavor: str = "qft") -> OracleSpec:
    """x <- x mod divisor, q <- x div divisor, by restoring division."""
    iters = div_iterations(nbits, divisor)
    if flavor in ("qft", "aqft"):
        build_fn = _div_mod_qft if flavor == "qft" else _div_mod_aqft
        prog = build_fn(nbits, divisor, "x", "q")
        sizes = {"x": nbits + 1, "q": iters}
    elif flavor == "toff":
        prog = _div_mod_toff(nbits, divisor, "x", "q", "k", "c")
        sizes = {"x": nbits, "q": iters, "k": nbits, "c": 1}
    else:
        raise ValueError(f"unknown flavor {flavor!r}")
    roles = [(v, "result" if v in ("x", "q") else "ancilla") for v in sizes]

    def spec(v):
        out = {var: 0 for var in sizes}
        out["x"] = v["x"] % divisor
        out["q"] = v["x"] // divisor
        return out

    return OracleSpec(f"div_mod_{flavor}", prog, sizes, roles, spec,
                      bounds={"x": 1 << nbits, "q": 1},
                      params={"bits": nbits, "divisor": divisor, "flavor": flavor,
                              "iterations": iters})


# ---------------------------------------------------------------------------
# modular arithmetic
# ---------------------------------------------------------------------------

def _mod_add_qft(n: int, c: int, modulus: int, ctl: Position, b: str, anc: Position) -> Instr:
    w = n + 1
    msb = _p(b, 0)
    return seq(
        Rev(b), QFT(w, b),
        CU(ctl, phi_add_const(b, w, c)), phi_add_const(b, w, modulus, subtract=True),
        QFTInv(w, b), cnot(msb, anc), QFT(w, b),
        CU(anc, phi_add_const(b, w, modulus)), CU(ctl, phi_add_const(b, w, c, subtract=True)),
        QFTInv(w, b), X(msb), cnot(msb, anc), X(msb), QFT(w, b),
        CU(ctl, phi_add_const(b, w, c)),
        QFTInv(w, b), Rev(b))


def _mod_add_toff(n: int, c: int, modulus: int, ctl: Position, b: str, k: str,
                  carry: Position, anc: Position) -> Instr:
    w = n + 1
    bs, ks = _regs(b, w), _regs(k, w)
    msb = bs[-1]
    add = ripple_add(ks, bs, carry)
    sub = invert(add)
    return seq(
        load_const(ks, c, ctl), add, load_const(ks, c, ctl),
        load_const(ks, modulus), sub, load_const(ks, modulus),
        cnot(msb, anc),
        load_const(ks, modulus, anc), add, load_const(ks, modulus, anc),
        load_const(ks, c, ctl), sub, load_const(ks, c, ctl),
        X(msb), cnot(msb, anc), X(msb),
        load_const(ks, c, ctl), add, load_const(ks, c, ctl))


def mod_add_const(n: int, c: int, modulus: int, flavor: str = "qft") -> OracleSpec:
    """b <- (b + ctl*c) mod N for b < N < 2^n; b carries one extra sign qubit."""
    if not 0 < modulus < 1 << n:
        raise ValueError("need 0 < N < 2^n")
    c %= modulus
    ctl, anc = _p("ctl", 0), _p("anc", 0)
    if flavor == "qft":
        prog = _mod_add_qft(n, c, modulus, ctl, "b", anc)
        sizes = {"ctl": 1, "b": n + 1, "anc": 1}
    elif flavor == "toff":
        prog = _mod_add_toff(n, c, modulus, ctl, "b", "k", _p("c", 0), anc)
        sizes = {"ctl": 1, "b": n + 1, "k": n + 1, "c": 1, "anc": 1}
    else:
        raise ValueError(f"unknown flavor {flavor!r}")
    roles = [(v, "operand" if v == "ctl" else "result" if v == "b" else "ancilla") for v in sizes]

    def spec(v):
        out = {var: 0 for var in sizes}
        out["ctl"] = v["ctl"]
        out["b"] = (v["b"] + c) % modulus if v["ctl"] else v["b"]
        return out

    return OracleSpec(f"mod_add_const_{flavor}", prog, sizes, roles, spec,
                      bounds={"b": modulus},
                      params={"bits": n, "c": c, "N": modulus, "flavor": flavor})


def mod_mult_const(n: int, c: int, modulus: int, flavor: str = "qft") -> OracleSpec:
    """|x>|0> -> |x>|(c*x) mod N>.

    x is first reduced to x mod N by a division stage (quotient kept in q),
    the cascade of controlled modular adders runs on the reduced value, and
    the division stage is undone so x is returned unchanged.
    """
    if not 1 < modulus < 1 << n:
        raise ValueError("need 1 < N < 2^n")
    if gcd(c, modulus) != 1:
        raise ValueError(f"c={c} is not coprime to N={modulus}")
    iters = div_iterations(n, modulus)
    if flavor == "qft":
        pre = _div_mod_qft(n, modulus, "x", "q")
        anc = _p("x", n)     # the division's sign qubit is clean again here
        cascade = [_mod_add_qft(n, (c << k) % modulus, modulus, _p("x", k), "b", anc)
                   for k in range(n)]
        sizes = {"x": n + 1, "q": iters, "b": n + 1}
    elif flavor == "toff":
        pre = _div_mod_toff(n, modulus, "x", "q", "k", "c")
        cascade = [_mod_add_toff(n, (c << k) % modulus, modulus, _p("x", k), "b", "k",
                                 _p("c", 0), _p("anc", 0)) for k in range(n)]
        sizes = {"x": n, "q": iters, "b": n + 1, "k": n + 1, "c": 1, "anc": 1}
    else:
        raise ValueError(f"unknown flavor {flavor!r}")
    prog = seq(pre, seq(*cascade), invert(pre))
    roles = [(v, "operand" if v == "x" else "result" if v == "b" else "ancilla") for v in sizes]

    def spec(v):
        out = {var: 0 for var in sizes}
        out["x"] = v["x"]
        out["b"] = (c * v["x"]) % modulus
        return out

    return OracleSpec(f"mod_mult_const_{flavor}", prog, sizes, roles, spec,
                      bounds={"x": 1 << n, "b": 1},
                      params={"bits": n, "c": c, "N": modulus, "flavor": flavor})


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

REGISTRY: dict[str, Callable[..., OracleSpec]] = {
    "rz_adder": lambda bits, **kw: rz_adder(bits),
    "rz_sub": lambda bits, **kw: rz_sub(bits),
    "rz_adder_const": lambda bits, c=1, **kw: rz_adder_const(bits, c),
    "rz_sub_const": lambda bits, c=1, **kw: rz_sub_const(bits, c),
    "rz_const_minus": lambda bits, c=1, **kw: rz_const_minus(bits, c),
    "aqft_adder": lambda bits, drop=1, **kw: aqft_adder(bits, drop),
    "toff_adder": lambda bits, **kw: toff_adder(bits),
    "toff_sub": lambda bits, **kw: toff_sub(bits),
    "toff_adder_const": lambda bits, c=1, **kw: toff_adder_const(bits, c),
    "toff_sub_const": lambda bits, c=1, **kw: toff_sub_const(bits, c),
    "comparator": lambda bits, form="lt", c=0, **kw: comparator(bits, form, c),
    "multiplier": lambda bits, flavor="qft", c=None, **kw: multiplier(bits, flavor, c),
    "mod_add_const": lambda bits, c=1, n=None, flavor="qft", **kw:
        mod_add_const(bits, c, n if n is not None else (1 << bits) - 1, flavor),
    "mod_mult_const": lambda bits, c=1, n=None, flavor="qft", **kw:
        mod_mult_const(bits, c, n if n is not None else (1 << bits) - 1, flavor),
    "div_mod": lambda bits, n=3, flavor="qft", **kw: div_mod(bits, n, flavor),
}


def build(name: str, **params) -> OracleSpec:
    """Instantiate a registered operator; unknown names raise KeyError."""
    if name not in REGISTRY:
        raise KeyError(f"unknown operator {name!r}; known: {', '.join(sorted(REGISTRY))}")
    return REGISTRY[name](**params)
