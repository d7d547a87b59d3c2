"""
Linear-cost OQASM interpreter over exact dyadic phases.

Every qubit is a global phase times either a basis bit or a Fourier-basis
rotation; both phases are integers modulo 2^G, so nothing here touches
floating point.

Contains:
    - QubitValue, OqasmState
    - interpret: run a program on a state
    - encode_inputs / decode_nor / run_on_naturals
    - compile_ops: the flat op list the interpreter executes
"""
from __future__ import annotations

from dataclasses import dataclass

from .core import (CU, QFT, SR, X, Instr, Lshift, QFTInv, Rev, Rshift, Skip, SRInv,
                   leaves)


class StuckError(RuntimeError):
    """The program has no meaning on this state (it would not typecheck)."""


@dataclass(frozen=True)
class QubitValue:
    phase: int          # global phase numerator, r = phase / 2^G
    is_phi: bool
    value: int          # bit for Nor, rotation numerator for Phi

    @classmethod
    def nor(cls, bit: int, phase: int = 0) -> "QubitValue":
        return cls(phase, False, bit)

    @classmethod
    def phi(cls, rot: int, phase: int = 0) -> "QubitValue":
        return cls(phase, True, rot)


@dataclass(frozen=True)
class OqasmState:
    phase_denom_log: int
    layout: dict            # var -> (lo, hi) range in qubits
    qubits: tuple

    def var(self, name: str) -> tuple:
        lo, hi = self.layout[name]
        return self.qubits[lo:hi]


def make_layout(sizes: dict[str, int]) -> dict[str, tuple[int, int]]:
    layout, lo = {}, 0
    for var, n in sizes.items():
        layout[var] = (lo, lo + n)
        lo += n
    return layout


def denom_log(sizes: dict[str, int]) -> int:
    return max(sizes.values(), default=1)


# ---------------------------------------------------------------------------
# flat op list
# ---------------------------------------------------------------------------

OP_X, OP_CU, OP_ROT, OP_QFT, OP_QFTINV, OP_LSH, OP_RSH, OP_REV = range(8)


def _deltas(m: int, g: int, sign: int) -> list[int]:
    # SR m: offset i <= m gains 1/2^(m-i+1)
    full = 1 << g
    return [(sign * (1 << (g - (m - i + 1)))) % full for i in range(m + 1)]


def _flatten(prog: Instr, layout, g: int, out: list):
    full = 1 << g
    fusable = None
    for node in leaves(prog):
        if isinstance(node, (SR, SRInv)):
            lo = layout[node.var][0]
            if node.m >= g:
                raise StuckError(f"SR {node.m} beyond phase precision 2^{g}")
            deltas = _deltas(node.m, g, 1 if isinstance(node, SR) else -1)
            if fusable is not None and out[fusable][1] == lo:
                prev = out[fusable][2]
                merged = [((prev[i] if i < len(prev) else 0) + (deltas[i] if i < len(deltas) else 0)) % full
                          for i in range(max(len(prev), len(deltas)))]
                out[fusable] = (OP_ROT, lo, merged)
            else:
                out.append((OP_ROT, lo, deltas))
                fusable = len(out) - 1
            continue
        fusable = None
        if isinstance(node, Skip):
            continue
        if isinstance(node, X):
            out.append((OP_X, layout[node.pos.var][0] + node.pos.offset))
        elif isinstance(node, CU):
            at = len(out)
            out.append(None)
            _flatten(node.body, layout, g, out)
            out[at] = (OP_CU, layout[node.pos.var][0] + node.pos.offset, len(out) - at - 1)
        elif isinstance(node, (QFT, QFTInv)):
            lo, hi = layout[node.var]
            if not 1 <= node.n <= hi - lo:
                raise StuckError(f"precision {node.n} out of range for {node.var}")
            out.append((OP_QFT if isinstance(node, QFT) else OP_QFTINV, lo, hi, node.n))
        elif isinstance(node, Lshift):
            out.append((OP_LSH, *layout[node.var]))
        elif isinstance(node, Rshift):
            out.append((OP_RSH, *layout[node.var]))
        elif isinstance(node, Rev):
            out.append((OP_REV, *layout[node.var]))
        else:
            raise TypeError(f"not an instruction: {node!r}")


_cache: dict = {}


def compile_ops(prog: Instr, layout: dict, g: int) -> list:
    """Flatten prog into a jump-based op list; cached per program object."""
    key = (id(prog), tuple(layout.items()), g)
    hit = _cache.get(key)
    if hit is not None and hit[0] is prog:
        return hit[1]
    ops: list = []
    _flatten(prog, layout, g, ops)
    if len(_cache) > 64:
        _cache.clear()
    _cache[key] = (prog, ops)
    return ops


def execute(ops: list, g: int, ph: list, isphi: list, val: list):
    """Run ops in place over the three parallel qubit lists."""
    full = 1 << g
    mask = full - 1
    half = full >> 1
    pc, end = 0, len(ops)
    while pc < end:
        op = ops[pc]
        code = op[0]
        if code == OP_X:
            s = op[1]
            if isphi[s]:
                raise StuckError(f"X on Phi qubit {s}")
            val[s] ^= 1
        elif code == OP_CU:
            c = op[1]
            if isphi[c]:
                raise StuckError(f"CU control {c} is not Nor")
            if not val[c]:
                pc += op[2]
        elif code == OP_ROT:
            lo = op[1]
            for i, d in enumerate(op[2]):
                j = lo + i
                if not isphi[j]:
                    raise StuckError(f"SR on Nor qubit {j}")
                val[j] = (val[j] + d) & mask
        elif code == OP_QFT:
            _, lo, hi, n = op
            y = 0
            for k in range(lo, lo + n):
                if isphi[k]:
                    raise StuckError(f"QFT on Phi qubit {k}")
                y = (y << 1) | val[k]
            for k in range(lo, hi):
                if isphi[k]:
                    raise StuckError(f"QFT on Phi qubit {k}")
                off = k - lo
                val[k] = ((y << (g - n + off)) & mask) if off < n else (half if val[k] else 0)
                isphi[k] = True
        elif code == OP_QFTINV:
            _, lo, hi, n = op
            if not all(isphi[lo:hi]):
                raise StuckError(f"inverse QFT on Nor qubits {lo}..{hi - 1}")
            r0 = val[lo]
            if r0 & ((1 << (g - n)) - 1):
                raise StuckError(f"rotation {r0}/2^{g} not at precision {n}")
            y = r0 >> (g - n)
            for k in range(lo, hi):
                off = k - lo
                v = val[k]
                if off < n:
                    if v != (y << (g - n + off)) & mask:
                        raise StuckError(f"qubit {k} inconsistent with value {y}")
                    val[k] = (y >> (n - 1 - off)) & 1
                else:
                    if v != 0 and v != half:
                        raise StuckError(f"qubit {k} beyond precision is not |+>/|->")
                    val[k] = 1 if v else 0
                isphi[k] = False
        elif code == OP_LSH:
            _, lo, hi = op
            for arr in (ph, isphi, val):
                arr[lo:hi] = [arr[hi - 1]] + arr[lo:hi - 1]
        elif code == OP_RSH:
            _, lo, hi = op
            for arr in (ph, isphi, val):
                arr[lo:hi] = arr[lo + 1:hi] + [arr[lo]]
        elif code == OP_REV:
            _, lo, hi = op
            for arr in (ph, isphi, val):
                arr[lo:hi] = arr[lo:hi][::-1]
        pc += 1


def _qft_fast(isphi, val, lo, hi, n, g):
    mask = (1 << g) - 1
    half = 1 << (g - 1)
    y = 0
    for k in range(lo, lo + n):
        y = (y << 1) | val[k]
    for k in range(lo, hi):
        off = k - lo
        val[k] = ((y << (g - n + off)) & mask) if off < n else (half if val[k] else 0)
        isphi[k] = True


def _qftinv_fast(isphi, val, lo, hi, n, g):
    y = val[lo] >> (g - n)
    for k in range(lo, hi):
        off = k - lo
        val[k] = ((y >> (n - 1 - off)) & 1) if off < n else (1 if val[k] else 0)
        isphi[k] = False


def _rot_fast(val, lo, deltas, mask):
    for i, d in enumerate(deltas, lo):
        val[i] = (val[i] + d) & mask


FAST_LIMIT = 400_000
_fast_cache: dict = {}


def compile_fast(prog: Instr, layout: dict, g: int):
    """Emit the op list as a straight-line Python function.

    Used for well-typed programs on trusted inputs: the consistency checks
    of execute() are skipped. Returns None for very large programs.
    """
    key = (id(prog), tuple(layout.items()), g)
    hit = _fast_cache.get(key)
    if hit is not None and hit[0] is prog:
        return hit[1]
    ops = compile_ops(prog, layout, g)
    if len(ops) > FAST_LIMIT:
        return None
    mask = (1 << g) - 1
    consts: dict = {}
    lines = ["def _run(ph, isphi, val):"]
    ends: list[int] = []
    depth = 1
    for pc, op in enumerate(ops + [None]):
        while ends and ends[-1] == pc:
            ends.pop()
            depth -= 1
        if op is None:
            break
        pad = "    " * depth
        code = op[0]
        if code == OP_X:
            lines.append(f"{pad}val[{op[1]}] ^= 1")
        elif code == OP_CU:
            if op[2] == 0:
                continue
            lines.append(f"{pad}if val[{op[1]}]:")
            lines.append(f"{pad}    pass")  # the body may emit nothing (zero rotations)
            ends.append(pc + 1 + op[2])
            depth += 1
        elif code == OP_ROT:
            lo, deltas = op[1], op[2]
            if len(deltas) <= 4:
                for i, d in enumerate(deltas, lo):
                    if d:
                        lines.append(f"{pad}val[{i}] = (val[{i}] + {d}) & {mask}")
            else:
                name = f"_D{len(consts)}"
                consts[name] = tuple(deltas)
                lines.append(f"{pad}_rot(val, {lo}, {name}, {mask})")
        elif code == OP_QFT:
            lines.append(f"{pad}_qft(isphi, val, {op[1]}, {op[2]}, {op[3]}, {g})")
        elif code == OP_QFTINV:
            lines.append(f"{pad}_qftinv(isphi, val, {op[1]}, {op[2]}, {op[3]}, {g})")
        else:
            lo, hi = op[1], op[2]
            if code == OP_LSH:
                rhs = "[{a}[{h}]] + {a}[{lo}:{h}]"
            elif code == OP_RSH:
                rhs = "{a}[{lp}:{hi}] + [{a}[{lo}]]"
            else:
                rhs = "{a}[{lo}:{hi}][::-1]"
            for arr in ("ph", "isphi", "val"):
                lines.append(pad + f"{arr}[{lo}:{hi}] = " + rhs.format(a=arr, h=hi - 1, lo=lo, lp=lo + 1, hi=hi))
    lines.append("    return None")
    namespace = {"_rot": _rot_fast, "_qft": _qft_fast, "_qftinv": _qftinv_fast, **consts}
    exec(compile("\n".join(lines), f"<oqasm:{len(ops)} ops>", "exec"), namespace)
    fn = namespace["_run"]
    if len(_fast_cache) > 32:
        _fast_cache.clear()
    _fast_cache[key] = (prog, fn)
    return fn


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def interpret(sizes: dict[str, int], prog: Instr, state: OqasmState) -> OqasmState:
    """Apply prog to state and return the new state; state is not modified."""
    g = state.phase_denom_log
    ops = compile_ops(prog, state.layout, g)
    ph = [q.phase for q in state.qubits]
    isphi = [q.is_phi for q in state.qubits]
    val = [q.value for q in state.qubits]
    execute(ops, g, ph, isphi, val)
    qubits = tuple(QubitValue(p, f, v) for p, f, v in zip(ph, isphi, val))
    return OqasmState(g, state.layout, qubits)


def _bits(value: int, n: int) -> list[int]:
    return [(value >> i) & 1 for i in range(n)]


def encode_inputs(sizes: dict[str, int], assignments: dict[str, int],
                  phase_denom_log: int | None = None) -> OqasmState:
    """Nor-basis state with each variable holding its natural, little-endian by offset."""
    g = phase_denom_log or denom_log(sizes)
    unknown = set(assignments) - set(sizes)
    if unknown:
        raise KeyError(f"unknown variables {sorted(unknown)}")
    qubits = []
    for var, n in sizes.items():
        value = assignments.get(var, 0)
        if not 0 <= value < (1 << n):
            raise ValueError(f"{var}={value} does not fit in {n} qubits")
        qubits += [QubitValue.nor(b) for b in _bits(value, n)]
    return OqasmState(g, make_layout(sizes), tuple(qubits))


def decode_nor(state: OqasmState, var: str) -> int:
    """Read a Nor-basis variable back as a natural (offset i is bit i)."""
    out = 0
    for i, q in enumerate(state.var(var)):
        if q.is_phi:
            raise ValueError(f"{var} is not in the Nor basis")
        out |= q.value << i
    return out


def run_on_naturals(sizes: dict[str, int], prog: Instr, assignments: dict[str, int],
                    trusted: bool = False) -> dict[str, int]:
    """Encode naturals, interpret, decode every variable.

    With trusted=True (program already typechecked) the generated fast path
    runs instead of the checking interpreter.
    """
    g = denom_log(sizes)
    layout = make_layout(sizes)
    val: list[int] = []
    for var, n in sizes.items():
        value = assignments.get(var, 0)
        if not 0 <= value < (1 << n):
            raise ValueError(f"{var}={value} does not fit in {n} qubits")
        val += _bits(value, n)
    total = len(val)
    isphi = [False] * total
    ph = [0] * total
    fn = compile_fast(prog, layout, g) if trusted else None
    if fn is not None:
        fn(ph, isphi, val)
    else:
        execute(compile_ops(prog, layout, g), g, ph, isphi, val)
    if any(isphi):
        raise ValueError("program left some variable in the Phi basis")
    out = {}
    for var, (lo, hi) in layout.items():
        x = 0
        for i in range(hi - 1, lo - 1, -1):
            x = (x << 1) | val[i]
        out[var] = x
    return out
