"""
Gate-level backend: translation to a flat circuit, lowering, OpenQASM 2.0
text, resource counts and a small dense state-vector simulator.

Qubit 0 is the leftmost tensor factor (most significant bit of a basis
index) everywhere in this module.

Contains:
    - GateKind, Gate, Circuit, QubitMap helpers
    - translate, ctrl, lower
    - emit_qasm, parse_qasm, count_resources
    - dense_sim, embed_state
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (CU, QFT, SR, Instr, Lshift, Position, QFTInv, Rev, Rshift, Skip, SRInv,
                   X as XInstr, leaves)


class GateKind(Enum):
    X = "x"
    H = "h"
    RZ = "rz"             # phase 2*pi/2^k on |1>
    RZINV = "rzinv"
    CX = "cx"
    CCX = "ccx"
    CRZ = "crz"
    CRZINV = "crzinv"
    CCRZ = "ccrz"
    CCRZINV = "ccrzinv"
    ID = "id"


_ROTATIONS = {GateKind.RZ: 1, GateKind.RZINV: -1, GateKind.CRZ: 1, GateKind.CRZINV: -1,
              GateKind.CCRZ: 1, GateKind.CCRZINV: -1}


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple          # controls first, target last
    k: int = 0             # rotation exponent for the RZ family

    def __str__(self):
        args = ",".join(str(q) for q in self.qubits)
        return f"{self.kind.value}({self.k};{args})" if self.k else f"{self.kind.value}({args})"


def x(q): return Gate(GateKind.X, (q,))
def h(q): return Gate(GateKind.H, (q,))
def rzk(k, q): return Gate(GateKind.RZ, (q,), k)
def rzk_inv(k, q): return Gate(GateKind.RZINV, (q,), k)
def cx(c, t): return Gate(GateKind.CX, (c, t))
def ccx(c1, c2, t): return Gate(GateKind.CCX, (c1, c2, t))
def crzk(k, c, t): return Gate(GateKind.CRZ, (c, t), k)
def crzk_inv(k, c, t): return Gate(GateKind.CRZINV, (c, t), k)
def ccrzk(k, c1, c2, t): return Gate(GateKind.CCRZ, (c1, c2, t), k)
def ccrzk_inv(k, c1, c2, t): return Gate(GateKind.CCRZINV, (c1, c2, t), k)
def ident(q): return Gate(GateKind.ID, (q,))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple

    def __post_init__(self):
        for g in self.gates:
            if len(set(g.qubits)) != len(g.qubits):
                raise ValueError(f"repeated qubit in {g}")
            if any(not 0 <= q < self.num_qubits for q in g.qubits):
                raise ValueError(f"{g} outside {self.num_qubits} qubits")
            if g.kind in _ROTATIONS and g.k < 1:
                raise ValueError(f"rotation exponent must be >= 1 in {g}")


QubitMap = dict  # Position -> physical index


def initial_map(sizes: dict[str, int]) -> QubitMap:
    """Variables in declaration order, offsets contiguous."""
    out, i = {}, 0
    for var, n in sizes.items():
        for off in range(n):
            out[Position(var, off)] = i
            i += 1
    return out


# ---------------------------------------------------------------------------
# translation
# ---------------------------------------------------------------------------

class TranslationError(ValueError):
    pass


_CONTROLLED = {GateKind.X: GateKind.CX, GateKind.CX: GateKind.CCX,
               GateKind.RZ: GateKind.CRZ, GateKind.RZINV: GateKind.CRZINV,
               GateKind.CRZ: GateKind.CCRZ, GateKind.CRZINV: GateKind.CCRZINV}


def ctrl(control: int, body: list) -> list:
    """Control every gate of body on one more qubit; ID gates are dropped."""
    out = []
    for g in body:
        if g.kind == GateKind.ID:
            continue
        if control in g.qubits:
            raise TranslationError(f"control {control} is also used by {g}")
        if g.kind not in _CONTROLLED:
            raise TranslationError(f"cannot control {g.kind.value} (at most two controls, no H)")
        out.append(Gate(_CONTROLLED[g.kind], (control,) + g.qubits, g.k))
    return out


def _qft_gates(q: list[int], n: int) -> list:
    # Qubit k takes H then rotations from the later qubits below precision n,
    # leaving |Phi(y / 2^(n-k))>; qubits at or beyond n only get H.
    gates = []
    for k in range(n):
        gates.append(h(q[k]))
        for j in range(k + 1, n):
            gates.append(crzk(j - k + 1, q[j], q[k]))
    gates += [h(q[k]) for k in range(n, len(q))]
    return gates


def _inverse_gate(g: Gate) -> Gate:
    flip = {GateKind.RZ: GateKind.RZINV, GateKind.RZINV: GateKind.RZ,
            GateKind.CRZ: GateKind.CRZINV, GateKind.CRZINV: GateKind.CRZ,
            GateKind.CCRZ: GateKind.CCRZINV, GateKind.CCRZINV: GateKind.CCRZ}
    return Gate(flip.get(g.kind, g.kind), g.qubits, g.k)


def translate(sizes: dict[str, int], qmap: QubitMap, prog: Instr) -> tuple[QubitMap, Circuit]:
    """Translate prog starting from map qmap; returns the final map and the circuit."""
    gmap, gates = _translate(sizes, dict(qmap), prog)
    return gmap, Circuit(len(qmap), tuple(gates))


def _translate(sizes, gmap: dict, prog: Instr) -> tuple[dict, list]:
    gates = []
    for node in leaves(prog):
        if isinstance(node, Skip):
            if node.pos is not None:
                gates.append(ident(gmap[node.pos]))
        elif isinstance(node, XInstr):
            gates.append(x(gmap[node.pos]))
        elif isinstance(node, (SR, SRInv)):
            make = rzk if isinstance(node, SR) else rzk_inv
            gates += [make(node.m - i + 1, gmap[Position(node.var, i)]) for i in range(node.m + 1)]
        elif isinstance(node, (QFT, QFTInv)):
            q = [gmap[Position(node.var, i)] for i in range(sizes[node.var])]
            forward = _qft_gates(q, node.n)
            gates += forward if isinstance(node, QFT) else [_inverse_gate(g) for g in reversed(forward)]
        elif isinstance(node, (Lshift, Rshift, Rev)):
            n = sizes[node.var]
            old = [gmap[Position(node.var, i)] for i in range(n)]
            # the content of (x, i) after the shift sits where source(i) was
            if isinstance(node, Lshift):
                source = lambda i: (i - 1) % n
            elif isinstance(node, Rshift):
                source = lambda i: (i + 1) % n
            else:
                source = lambda i: n - 1 - i
            for i in range(n):
                gmap[Position(node.var, i)] = old[source(i)]
            gates.append(ident(old[0]))
        elif isinstance(node, CU):
            after, body = _translate(sizes, dict(gmap), node.body)
            if after != gmap:
                raise TranslationError(f"CU body at {node.pos} is not neutral")
            gates += ctrl(gmap[node.pos], body)
        else:
            raise TranslationError(f"unknown instruction {node!r}")
    return gmap, gates


# ---------------------------------------------------------------------------
# lowering
# ---------------------------------------------------------------------------

def _toffoli_network(c1, c2, t) -> list:
    return [h(t), cx(c2, t), rzk_inv(3, t), cx(c1, t), rzk(3, t), cx(c2, t), rzk_inv(3, t),
            cx(c1, t), rzk(3, c2), rzk(3, t), h(t), cx(c1, c2), rzk(3, c1), rzk_inv(3, c2),
            cx(c1, c2)]


def _crz_network(k, c, t, sign) -> list:
    fwd, back = (rzk, rzk_inv) if sign > 0 else (rzk_inv, rzk)
    return [fwd(k + 1, t), cx(c, t), back(k + 1, t), cx(c, t), fwd(k + 1, c)]


def _ccrz_network(k, c1, c2, t, sign) -> list:
    fwd, back = (crzk, crzk_inv) if sign > 0 else (crzk_inv, crzk)
    return [fwd(k + 1, c2, t), cx(c1, c2), back(k + 1, c2, t), cx(c1, c2), fwd(k + 1, c1, t)]


def lower(circ: Circuit, level: str = "base") -> Circuit:
    """macro: unchanged. base: only X, H, CX and single-qubit rotations remain."""
    if level == "macro":
        return circ
    if level != "base":
        raise ValueError(f"unknown level {level!r}")
    out = []
    for g in circ.gates:
        if g.kind == GateKind.CCX:
            out += _toffoli_network(*g.qubits)
        elif g.kind in (GateKind.CRZ, GateKind.CRZINV):
            out += _crz_network(g.k, *g.qubits, _ROTATIONS[g.kind])
        elif g.kind in (GateKind.CCRZ, GateKind.CCRZINV):
            for sub in _ccrz_network(g.k, *g.qubits, _ROTATIONS[g.kind]):
                out += _crz_network(sub.k, *sub.qubits, _ROTATIONS[sub.kind]) if sub.kind in _ROTATIONS else [sub]
        else:
            out.append(g)
    return Circuit(circ.num_qubits, tuple(out))


# ---------------------------------------------------------------------------
# OpenQASM 2.0
# ---------------------------------------------------------------------------

def _angle(k: int, sign: int) -> str:
    mag = "pi" if k == 1 else f"pi/{1 << (k - 1)}"
    return mag if sign > 0 else "-" + mag


def emit_qasm(circ: Circuit) -> str:
    """OpenQASM 2.0 over qelib1 gates; doubly-controlled rotations are expanded."""
    lines = ['OPENQASM 2.0;', 'include "qelib1.inc";', f"qreg q[{circ.num_qubits}];"]
    gates = []
    for g in circ.gates:
        if g.kind in (GateKind.CCRZ, GateKind.CCRZINV):
            gates += _ccrz_network(g.k, *g.qubits, _ROTATIONS[g.kind])
        else:
            gates.append(g)
    for g in gates:
        q = [f"q[{i}]" for i in g.qubits]
        if g.kind == GateKind.ID:
            continue
        if g.kind in (GateKind.RZ, GateKind.RZINV):
            lines.append(f"u1({_angle(g.k, _ROTATIONS[g.kind])}) {q[0]};")
        elif g.kind in (GateKind.CRZ, GateKind.CRZINV):
            lines.append(f"cu1({_angle(g.k, _ROTATIONS[g.kind])}) {q[0]},{q[1]};")
        else:
            lines.append(f"{g.kind.value} {','.join(q)};")
    return "\n".join(lines) + "\n"


_QASM_LINE = re.compile(r"^(\w+)(?:\(([^)]*)\))?\s+(.*);$")
_ANGLE = re.compile(r"^(-?)pi(?:/(\d+))?$")


class QasmError(ValueError):
    pass


def parse_qasm(text: str) -> Circuit:
    """Parse the subset emit_qasm produces (header, one qreg, x/h/cx/ccx/u1/cu1)."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("//")]
    if not lines or lines[0] != "OPENQASM 2.0;":
        raise QasmError("missing OPENQASM 2.0 header")
    if len(lines) < 2 or lines[1] != 'include "qelib1.inc";':
        raise QasmError("missing qelib1 include")
    m = re.match(r"^qreg (\w+)\[(\d+)\];$", lines[2]) if len(lines) > 2 else None
    if not m:
        raise QasmError("missing qreg declaration")
    reg, d = m.group(1), int(m.group(2))
    gates = []
    for lineno, line in enumerate(lines[3:], 4):
        gm = _QASM_LINE.match(line)
        if not gm:
            raise QasmError(f"line {lineno}: cannot parse {line!r}")
        name, param, args = gm.groups()
        qubits = []
        for a in args.split(","):
            am = re.match(rf"^{reg}\[(\d+)\]$", a.strip())
            if not am:
                raise QasmError(f"line {lineno}: bad operand {a!r}")
            qubits.append(int(am.group(1)))
        arity = {"x": 1, "h": 1, "cx": 2, "ccx": 3, "u1": 1, "cu1": 2}
        if name not in arity or len(qubits) != arity[name]:
            raise QasmError(f"line {lineno}: unsupported gate {name!r}")
        if name in ("u1", "cu1"):
            am = _ANGLE.match((param or "").replace(" ", ""))
            if not am:
                raise QasmError(f"line {lineno}: unsupported angle {param!r}")
            denom = int(am.group(2) or 1)
            if denom & (denom - 1):
                raise QasmError(f"line {lineno}: angle is not 2*pi/2^k")
            k = denom.bit_length()
            neg = am.group(1) == "-"
            if name == "u1":
                gates.append((rzk_inv if neg else rzk)(k, *qubits))
            else:
                gates.append((crzk_inv if neg else crzk)(k, *qubits))
        else:
            gates.append(Gate(GateKind(name), tuple(qubits)))
    return Circuit(d, tuple(gates))


def count_resources(circ: Circuit, level: str = "macro") -> dict:
    """{qubits, gates, histogram, level}; ID gates are not counted."""
    c = lower(circ, level)
    hist = Counter(g.kind.value for g in c.gates if g.kind != GateKind.ID)
    return {"qubits": c.num_qubits, "gates": sum(hist.values()),
            "histogram": dict(sorted(hist.items())), "level": level}


# ---------------------------------------------------------------------------
# dense simulation
# ---------------------------------------------------------------------------

DENSE_CAP = 16


def _sub(psi, d: int, fixed: dict):
    idx = [slice(None)] * d
    for q, b in fixed.items():
        idx[q] = b
    return tuple(idx)


def dense_sim(circ: Circuit, vec, cap: int = DENSE_CAP) -> np.ndarray:
    """Apply circ to a state vector of length 2^num_qubits."""
    d = circ.num_qubits
    if d > cap:
        raise ValueError(f"{d} qubits exceeds the dense cap of {cap}")
    vec = np.asarray(vec, dtype=complex)
    if vec.shape != (1 << d,):
        raise ValueError(f"state has shape {vec.shape}, expected ({1 << d},)")
    if d == 0:
        return vec.copy()
    psi = vec.reshape((2,) * d).copy()
    for g in circ.gates:
        kind, qs = g.kind, g.qubits
        if kind == GateKind.ID:
            continue
        if kind in _ROTATIONS:
            phase = np.exp(2j * np.pi * _ROTATIONS[kind] / (1 << g.k))
            psi[_sub(psi, d, {q: 1 for q in qs})] *= phase
        elif kind == GateKind.H:
            t = qs[0]
            a = psi[_sub(psi, d, {t: 0})].copy()
            b = psi[_sub(psi, d, {t: 1})].copy()
            psi[_sub(psi, d, {t: 0})] = (a + b) / math.sqrt(2)
            psi[_sub(psi, d, {t: 1})] = (a - b) / math.sqrt(2)
        else:  # X, CX, CCX
            *cs, t = qs
            zero = {c: 1 for c in cs}
            zero[t] = 0
            one = dict(zero)
            one[t] = 1
            a = psi[_sub(psi, d, zero)].copy()
            psi[_sub(psi, d, zero)] = psi[_sub(psi, d, one)]
            psi[_sub(psi, d, one)] = a
    return psi.reshape(-1)


def _qubit_vector(q, g: int) -> np.ndarray:
    phase = np.exp(2j * np.pi * q.phase / (1 << g))
    if q.is_phi:
        return phase * np.array([1, np.exp(2j * np.pi * q.value / (1 << g))]) / math.sqrt(2)
    return phase * (np.array([0, 1]) if q.value else np.array([1, 0])).astype(complex)


def embed_state(state, qmap: QubitMap) -> np.ndarray:
    """Tensor the qubit values in physical order given by qmap."""
    d = len(qmap)
    per = [None] * d
    g = state.phase_denom_log
    for pos, phys in qmap.items():
        lo, hi = state.layout[pos.var]
        per[phys] = _qubit_vector(state.qubits[lo + pos.offset], g)
    vec = np.ones(1, dtype=complex)
    for v in per:
        vec = np.kron(vec, v)
    return vec
