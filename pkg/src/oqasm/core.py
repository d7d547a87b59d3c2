"""
Abstract syntax, basis type checker and inversion for OQASM programs.

Contains:
    - Position, the instruction variants (Skip, X, Seq, SR, SRInv, QFT, QFTInv,
      CU, Lshift, Rshift, Rev) and the Nor/Phi basis types
    - seq / leaves / rename: building, walking and relabelling instruction sequences
    - typecheck, fresh, neutral, invert, well_formed_state
    - parse_program / format_program: the line-oriented text form
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Union


class Position(NamedTuple):
    var: str
    offset: int

    def __str__(self):
        return f"{self.var}[{self.offset}]"


@dataclass(frozen=True)
class Nor:
    def __str__(self):
        return "Nor"


@dataclass(frozen=True)
class Phi:
    precision: int

    def __str__(self):
        return f"Phi {self.precision}"


Basis = Union[Nor, Phi]
NOR = Nor()


@dataclass(frozen=True)
class Skip:
    pos: Position | None = None


@dataclass(frozen=True)
class X:
    pos: Position


@dataclass(frozen=True)
class Seq:
    first: "Instr"
    second: "Instr"


@dataclass(frozen=True)
class SR:
    m: int
    var: str


@dataclass(frozen=True)
class SRInv:
    m: int
    var: str


@dataclass(frozen=True)
class QFT:
    n: int
    var: str


@dataclass(frozen=True)
class QFTInv:
    n: int
    var: str


@dataclass(frozen=True)
class CU:
    pos: Position
    body: "Instr"


@dataclass(frozen=True)
class Lshift:
    var: str


@dataclass(frozen=True)
class Rshift:
    var: str


@dataclass(frozen=True)
class Rev:
    var: str


Instr = Union[Skip, X, Seq, SR, SRInv, QFT, QFTInv, CU, Lshift, Rshift, Rev]
WHOLE_VAR = (SR, SRInv, QFT, QFTInv, Lshift, Rshift, Rev)


class TypeCheckError(Exception):
    """Raised by typecheck; carries the rule that failed and where."""

    def __init__(self, rule: str, where, expected: str, actual: str, detail: str = ""):
        self.rule = rule
        self.where = where
        self.expected = expected
        self.actual = actual
        msg = f"[{rule}] at {where}: expected {expected}, got {actual}"
        super().__init__(msg + (f" ({detail})" if detail else ""))


def pos(var: str, offset: int) -> Position:
    return Position(var, offset)


def seq(*instrs: Instr) -> Instr:
    """Sequence instructions as a balanced tree so depth stays logarithmic."""
    items = [i for i in instrs if i is not None]
    if not items:
        return Skip()
    if len(items) == 1:
        return items[0]
    mid = len(items) // 2
    return Seq(seq(*items[:mid]), seq(*items[mid:]))


def leaves(prog: Instr) -> Iterator[Instr]:
    """Yield the non-Seq instructions of prog in execution order."""
    stack = [prog]
    while stack:
        node = stack.pop()
        if isinstance(node, Seq):
            stack.append(node.second)
            stack.append(node.first)
        else:
            yield node


def instr_count(prog: Instr) -> int:
    """Number of leaf instructions, counting inside CU bodies."""
    total = 0
    stack = [prog]
    while stack:
        node = stack.pop()
        if isinstance(node, Seq):
            stack.append(node.second)
            stack.append(node.first)
        elif isinstance(node, CU):
            total += 1
            stack.append(node.body)
        else:
            total += 1
    return total


def variables(prog: Instr) -> set[str]:
    out = set()
    stack = [prog]
    while stack:
        node = stack.pop()
        if isinstance(node, Seq):
            stack.extend((node.first, node.second))
        elif isinstance(node, CU):
            out.add(node.pos.var)
            stack.append(node.body)
        elif isinstance(node, (X, Skip)):
            if node.pos is not None:
                out.add(node.pos.var)
        else:
            out.add(node.var)
    return out


def rename(prog: Instr, mapping: dict) -> Instr:
    """Substitute variables. A mapping value is a variable name or, for a
    one-qubit variable, a Position that stands for its only qubit."""
    def at(p: Position) -> Position:
        m = mapping.get(p.var, p.var)
        if isinstance(m, Position):
            if p.offset != 0:
                raise ValueError(f"{p} mapped onto the single qubit {m}")
            return m
        return Position(m, p.offset)

    def var(v: str) -> str:
        m = mapping.get(v, v)
        if isinstance(m, Position):
            raise ValueError(f"whole-variable operation on {v}, which is mapped to the qubit {m}")
        return m

    out = []
    for node in leaves(prog):
        if isinstance(node, Skip):
            out.append(node if node.pos is None else Skip(at(node.pos)))
        elif isinstance(node, X):
            out.append(X(at(node.pos)))
        elif isinstance(node, CU):
            out.append(CU(at(node.pos), rename(node.body, mapping)))
        elif isinstance(node, (SR, SRInv)):
            out.append(type(node)(node.m, var(node.var)))
        elif isinstance(node, (QFT, QFTInv)):
            out.append(type(node)(node.n, var(node.var)))
        else:
            out.append(type(node)(var(node.var)))
    return seq(*out)


# ---------------------------------------------------------------------------
# fresh / neutral
# ---------------------------------------------------------------------------

def fresh(p: Position, body: Instr) -> bool:
    """True iff body never reads or writes position p.

    Whole-variable operations touch every offset of their variable; a CU
    touches its control. Skip touches nothing.
    """
    stack = [body]
    while stack:
        node = stack.pop()
        if isinstance(node, Seq):
            stack.extend((node.first, node.second))
        elif isinstance(node, CU):
            if node.pos == p:
                return False
            stack.append(node.body)
        elif isinstance(node, X):
            if node.pos == p:
                return False
        elif isinstance(node, WHOLE_VAR):
            if node.var == p.var:
                return False
    return True


class _Perm(NamedTuple):
    # offset i moves to sign*i + a + b*(size-1)  (mod size)
    sign: int
    a: int
    b: int


_ID_PERM = _Perm(1, 0, 0)


def _compose(first: _Perm, then: _Perm) -> _Perm:
    return _Perm(then.sign * first.sign, then.sign * first.a + then.a, then.sign * first.b + then.b)


_SHIFT_PERMS = {Lshift: _Perm(1, 1, 0), Rshift: _Perm(1, -1, 0), Rev: _Perm(-1, 0, 1)}


def _is_identity(perm: _Perm, size: int | None) -> bool:
    if perm.sign != 1:
        return size == 1 if size is not None else False
    if size is None:
        return perm.a == 0 and perm.b == 0
    return (perm.a + perm.b * (size - 1)) % size == 0


def neutral(body: Instr, sizes: dict[str, int] | None = None) -> bool:
    """True iff the net Lshift/Rshift/Rev permutation of every variable is the identity.

    The permutation is tracked symbolically per variable; when sizes are known
    shift counts are reduced modulo the variable size. Nested CU bodies must
    be neutral themselves, so conditional shifts never leak.
    """
    perms: dict[str, _Perm] = {}
    for node in leaves(body):
        if isinstance(node, CU):
            if not neutral(node.body, sizes):
                return False
        elif type(node) in _SHIFT_PERMS:
            perms[node.var] = _compose(perms.get(node.var, _ID_PERM), _SHIFT_PERMS[type(node)])
    for var, perm in perms.items():
        size = sizes.get(var) if sizes is not None else None
        if not _is_identity(perm, size):
            return False
    return True


# ---------------------------------------------------------------------------
# typecheck
# ---------------------------------------------------------------------------

def _check_pos(sizes, env, p: Position, rule: str):
    if p.var not in sizes or p.var not in env:
        raise TypeCheckError(rule, p, "declared variable", "undeclared")
    if not 0 <= p.offset < sizes[p.var]:
        raise TypeCheckError(rule, p, f"offset < {sizes[p.var]}", str(p.offset))


def _check_var(sizes, env, var: str, rule: str):
    if var not in sizes or var not in env:
        raise TypeCheckError(rule, var, "declared variable", "undeclared")


def typecheck(sizes: dict[str, int], env: dict[str, Basis], prog: Instr) -> dict[str, Basis]:
    """Check prog under (sizes, env) and return the output type environment.

    Raises TypeCheckError for the first failing instruction in execution order.
    """
    env = dict(env)
    for node in leaves(prog):
        if isinstance(node, Skip):
            if node.pos is not None:
                _check_pos(sizes, env, node.pos, "ID")
        elif isinstance(node, X):
            _check_pos(sizes, env, node.pos, "X")
            if env[node.pos.var] != NOR:
                raise TypeCheckError("X", node.pos, "Nor", str(env[node.pos.var]))
        elif isinstance(node, (SR, SRInv)):
            rule = "SR" if isinstance(node, SR) else "SR-1"
            _check_var(sizes, env, node.var, rule)
            basis = env[node.var]
            if not isinstance(basis, Phi):
                raise TypeCheckError(rule, node.var, "Phi n", str(basis))
            if not 0 <= node.m < basis.precision:
                raise TypeCheckError(rule, node.var, f"m < {basis.precision}", str(node.m))
        elif isinstance(node, QFT):
            _check_var(sizes, env, node.var, "QFT")
            if env[node.var] != NOR:
                raise TypeCheckError("QFT", node.var, "Nor", str(env[node.var]))
            if not 1 <= node.n <= sizes[node.var]:
                raise TypeCheckError("QFT", node.var, f"1 <= n <= {sizes[node.var]}", str(node.n))
            env[node.var] = Phi(node.n)
        elif isinstance(node, QFTInv):
            _check_var(sizes, env, node.var, "RQFT")
            if env[node.var] != Phi(node.n):
                raise TypeCheckError("RQFT", node.var, str(Phi(node.n)), str(env[node.var]))
            if node.n > sizes[node.var]:
                raise TypeCheckError("RQFT", node.var, f"n <= {sizes[node.var]}", str(node.n))
            env[node.var] = NOR
        elif isinstance(node, (Lshift, Rshift, Rev)):
            rule = {Lshift: "LSH", Rshift: "RSH", Rev: "REV"}[type(node)]
            _check_var(sizes, env, node.var, rule)
            if env[node.var] != NOR:
                raise TypeCheckError(rule, node.var, "Nor", str(env[node.var]))
        elif isinstance(node, CU):
            _check_pos(sizes, env, node.pos, "CU")
            if env[node.pos.var] != NOR:
                raise TypeCheckError("CU", node.pos, "Nor control", str(env[node.pos.var]))
            if not fresh(node.pos, node.body):
                raise TypeCheckError("CU", node.pos, "control fresh in body", "control touched")
            after = typecheck(sizes, env, node.body)
            if after != env:
                changed = sorted(v for v in env if after[v] != env[v])
                raise TypeCheckError("CU", node.pos, "body preserves types",
                                     f"retyped {', '.join(changed)}")
            if not neutral(node.body, sizes):
                raise TypeCheckError("CU", node.pos, "neutral body", "unbalanced shifts")
        else:
            raise TypeCheckError("?", node, "instruction", type(node).__name__)
    return env


# ---------------------------------------------------------------------------
# invert
# ---------------------------------------------------------------------------

_LEAF_INVERSE = {
    SR: lambda i: SRInv(i.m, i.var),
    SRInv: lambda i: SR(i.m, i.var),
    QFT: lambda i: QFTInv(i.n, i.var),
    QFTInv: lambda i: QFT(i.n, i.var),
    Lshift: lambda i: Rshift(i.var),
    Rshift: lambda i: Lshift(i.var),
    Rev: lambda i: i,
    X: lambda i: i,
    Skip: lambda i: i,
}


def invert(prog: Instr) -> Instr:
    """Structural inverse; iterative so deep sequences are fine."""
    out: list[Instr] = []
    stack: list[tuple[Instr, bool]] = [(prog, False)]
    while stack:
        node, done = stack.pop()
        if isinstance(node, Seq):
            if done:
                second, first = out.pop(), out.pop()
                out.append(Seq(second, first))
            else:
                stack += [(node, True), (node.second, False), (node.first, False)]
        elif isinstance(node, CU):
            if done:
                out.append(CU(node.pos, out.pop()))
            else:
                stack += [(node, True), (node.body, False)]
        else:
            out.append(_LEAF_INVERSE[type(node)](node))
    return out[0]


# ---------------------------------------------------------------------------
# well-formed states
# ---------------------------------------------------------------------------

def well_formed_state(sizes: dict[str, int], env: dict[str, Basis], state) -> bool:
    """Check that every variable's qubits agree with its basis.

    A Phi n variable must carry one value v: qubit k < n holds rotation
    v / 2^(n-k) and qubits at k >= n hold rotation 0 or 1/2 (the Hadamard
    image of a bit that the precision-n transform leaves alone).
    """
    g = state.phase_denom_log
    full = 1 << g
    for var, basis in env.items():
        lo, hi = state.layout[var]
        if hi - lo != sizes[var]:
            return False
        qubits = state.qubits[lo:hi]
        if basis == NOR:
            if any(q.is_phi for q in qubits):
                return False
            continue
        n = basis.precision
        if not all(q.is_phi for q in qubits) or n > len(qubits) or n > g:
            return False
        r0 = qubits[0].value
        if r0 % (1 << (g - n)):
            return False
        v = r0 >> (g - n)
        for k, q in enumerate(qubits):
            if k < n:
                if q.value != (v << (g - n + k)) % full:
                    return False
            elif q.value not in (0, full >> 1):
                return False
    return True


# ---------------------------------------------------------------------------
# text form
# ---------------------------------------------------------------------------

_NAMES = {SR: "SR", SRInv: "SR^-1", QFT: "QFT", QFTInv: "QFT^-1",
          Lshift: "Lshift", Rshift: "Rshift", Rev: "Rev"}


def _format_leaf(node: Instr) -> str:
    if isinstance(node, Skip):
        return "ID" if node.pos is None else f"ID {node.pos}"
    if isinstance(node, X):
        return f"X {node.pos}"
    if isinstance(node, CU):
        return f"CU {node.pos} ({'; '.join(_format_leaf(i) for i in leaves(node.body))})"
    if isinstance(node, (SR, SRInv)):
        return f"{_NAMES[type(node)]} {node.m} {node.var}"
    if isinstance(node, (QFT, QFTInv)):
        return f"{_NAMES[type(node)]} {node.n} {node.var}"
    return f"{_NAMES[type(node)]} {node.var}"


def format_program(prog: Instr, sizes: dict[str, int] | None = None) -> str:
    """One instruction per line, separated by ';'. Declarations first when sizes given."""
    lines = [f"var {v} {n}" for v, n in (sizes or {}).items()]
    body = [_format_leaf(i) for i in leaves(prog)]
    lines += [b + (";" if k < len(body) - 1 else "") for k, b in enumerate(body)]
    return "\n".join(lines) + "\n"


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9^\-]*)|(\[)|(\])|(\()|(\))|(;))")


class ParseError(ValueError):
    pass


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0]
        i = 0
        while i < len(line):
            if line[i].isspace():
                i += 1
                continue
            m = _TOKEN.match(line, i)
            if not m or m.end() == i:
                raise ParseError(f"line {lineno}: unexpected character {line[i]!r}")
            kinds = ("num", "name", "[", "]", "(", ")", ";")
            for kind, val in zip(kinds, m.groups()):
                if val is not None:
                    toks.append((kind, val, lineno))
            i = m.end()
        toks.append((";", "\n", lineno))
    return toks


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eof", "", -1)

    def take(self, kind):
        tok = self.peek()
        if tok[0] != kind:
            raise ParseError(f"line {tok[2]}: expected {kind}, got {tok[1]!r}")
        self.i += 1
        return tok[1]

    def skip_separators(self):
        while self.peek()[0] == ";":
            self.i += 1

    def position(self) -> Position:
        var = self.take("name")
        self.take("[")
        off = int(self.take("num"))
        self.take("]")
        return Position(var, off)

    def sequence(self, closing: str) -> Instr:
        items = []
        self.skip_separators()
        while self.peek()[0] not in (closing, "eof"):
            items.append(self.instr())
            if self.peek()[0] not in (";", closing, "eof"):
                tok = self.peek()
                raise ParseError(f"line {tok[2]}: expected ';', got {tok[1]!r}")
            self.skip_separators()
        return seq(*items)

    def instr(self) -> Instr:
        _, word, line = self.peek()
        self.take("name")
        key = word.upper()
        if key in ("ID", "SKIP"):
            return Skip(self.position()) if self.peek()[0] == "name" else Skip()
        if key == "X":
            return X(self.position())
        if key in ("SR", "SR^-1", "SRINV", "QFT", "QFT^-1", "QFTINV"):
            num = int(self.take("num"))
            var = self.take("name")
            cls = {"SR": SR, "SR^-1": SRInv, "SRINV": SRInv,
                   "QFT": QFT, "QFT^-1": QFTInv, "QFTINV": QFTInv}[key]
            return cls(num, var)
        if key in ("LSHIFT", "RSHIFT", "REV"):
            return {"LSHIFT": Lshift, "RSHIFT": Rshift, "REV": Rev}[key](self.take("name"))
        if key == "CU":
            p = self.position()
            self.take("(")
            body = self.sequence(")")
            self.take(")")
            return CU(p, body)
        raise ParseError(f"line {line}: unknown instruction {word!r}")


def parse_program(text: str) -> tuple[dict[str, int], Instr]:
    """Parse the text form; returns (sizes, program). `var NAME SIZE` lines declare."""
    sizes: dict[str, int] = {}
    body_lines = []
    for line in text.splitlines():
        parts = line.split("#", 1)[0].split()
        if parts and parts[0] == "var":
            if len(parts) != 3 or not parts[2].isdigit():
                raise ParseError(f"bad declaration: {line.strip()!r}")
            sizes[parts[1]] = int(parts[2])
            body_lines.append("")
        else:
            body_lines.append(line)
    parser = _Parser(_tokenize("\n".join(body_lines)))
    prog = parser.sequence("eof")
    if parser.peek()[0] != "eof":
        tok = parser.peek()
        raise ParseError(f"line {tok[2]}: unexpected {tok[1]!r}")
    return sizes, prog
