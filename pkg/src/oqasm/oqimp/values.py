"""
Value semantics shared by the interpreter and the compiler's constant folding.

Run-time (Q) values are sz-bit patterns: nat is unsigned, fixedp is two's
complement with value m / 2^(sz-1), bool is one bit. Compile-time (C)
values are exact: nat is an unbounded int, fixedp a Fraction, bool an int.
"""
from __future__ import annotations

from fractions import Fraction
from math import floor, factorial


class OqimpRuntimeError(Exception):
    """The program has no result: bad index, division by zero and the like."""


def mask(sz: int) -> int:
    return (1 << sz) - 1


def signed(bits: int, sz: int) -> int:
    return bits - (1 << sz) if bits >> (sz - 1) & 1 else bits


def fixedp_value(bits: int, sz: int) -> Fraction:
    return Fraction(signed(bits, sz), 1 << (sz - 1))


def scaled(c, sz: int) -> int:
    """floor(c * 2^(sz-1)), not wrapped."""
    return floor(Fraction(c) * (1 << (sz - 1)))


def to_bits(base: str, value, sz: int) -> int:
    """Run-time bit pattern of a compile-time value."""
    if base == "bool":
        return int(value) & 1
    if base == "fixedp":
        return scaled(value, sz) & mask(sz)
    return int(value) & mask(sz)


def width(base: str, sz: int) -> int:
    return 1 if base == "bool" else sz


# compile-time arithmetic ----------------------------------------------------

def c_binop(op: str, base: str, a, b):
    if op == "+":
        return a + b
    if op == "-":
        if base == "nat" and a < b:
            raise OqimpRuntimeError(f"natural subtraction {a} - {b} is negative")
        return a - b
    if op == "*":
        return a * b
    if op in ("/", "%"):
        if b == 0:
            raise OqimpRuntimeError("division by zero")
        if base == "nat" and not isinstance(a, Fraction):
            return a // b if op == "/" else a % b
        if op == "%":
            raise OqimpRuntimeError("% is only defined on naturals")
        return Fraction(a) / b
    if op == "^":
        return a ^ b
    return compare(op, a, b)


def compare(op: str, a, b) -> int:
    return int({"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b,
                "==": a == b, "!=": a != b}[op])


def c_builtin(name: str, args: list):
    if name == "even":
        return int(args[0] % 2 == 0)
    if name == "fact":
        return factorial(args[0])
    if name == "pow":
        return args[0] ** args[1]
    if name == "fixedp":
        return Fraction(args[0])
    if name == "nat":
        if args[0] < 0:
            raise OqimpRuntimeError("negative value converted to nat")
        return floor(args[0])
    raise OqimpRuntimeError(f"unknown builtin {name}")


# run-time arithmetic ----------------------------------------------------------

def q_add(a: int, b: int, sz: int) -> int:
    return (a + b) & mask(sz)


def q_sub(a: int, b: int, sz: int) -> int:
    return (a - b) & mask(sz)


def q_mul_nat(a: int, b: int, sz: int) -> int:
    return (a * b) & mask(sz)


def q_mul_fixedp(a: int, b: int, sz: int) -> int:
    """Two run-time fixed-point values: floor of the exact product, wrapped."""
    return ((signed(a, sz) * signed(b, sz)) >> (sz - 1)) & mask(sz)


def q_mul_fixedp_const(c, b: int, sz: int) -> int:
    """Known factor c (any rational) times a run-time value, c rounded down to sz-1 fraction bits."""
    return ((scaled(c, sz) * signed(b, sz)) >> (sz - 1)) & mask(sz)


def q_div(base: str, a: int, m: int, sz: int) -> int:
    if m == 0:
        raise OqimpRuntimeError("division by zero")
    if base == "fixedp":
        return (signed(a, sz) // m) & mask(sz)
    return a // m


def q_mod(a: int, m: int) -> int:
    if m == 0:
        raise OqimpRuntimeError("division by zero")
    return a % m


def q_pow(base: str, a: int, k: int, sz: int) -> int:
    if k == 0:
        if base == "fixedp":
            raise OqimpRuntimeError("pow(x, 0) = 1 is outside the fixed-point range")
        return 1 & mask(sz)
    out = a
    for _ in range(k - 1):
        out = q_mul_fixedp(out, a, sz) if base == "fixedp" else q_mul_nat(out, a, sz)
    return out


def q_compare(op: str, base: str, a, b, sz: int, a_const=False, b_const=False) -> int:
    """Comparison where either side may be a compile-time value (compared exactly)."""
    def real(v, const):
        if base == "fixedp":
            return Fraction(v) if const else fixedp_value(v, sz)
        return v
    return compare(op, real(a, a_const), real(b, b_const))


def rotl(a: int, k: int, sz: int) -> int:
    k %= sz
    return ((a << k) | (a >> (sz - k))) & mask(sz)
