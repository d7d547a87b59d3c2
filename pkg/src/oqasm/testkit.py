"""
Property-based testing harness.

Differential testing of oracles against their classical functions, error
measurement for approximate oracles, and dense-simulation checks for
translation, linearity and reversibility. A random generator of well-typed
programs (with greedy shrinking) drives the metatheory suites.

Contains:
    - TrialConfig, ErrorReport, run_pbt, max_error, circular_distance
    - random_state, random_program, random_case, shrink_program
    - check_translation, check_linearity, check_reversibility, check_soundness
    - endianness_mutant, wrong_angle_mutant
    - write_json, write_junit
"""
from __future__ import annotations

import json
import os
import random
import time
from dataclasses import asdict, dataclass, field
from typing import Callable
from xml.etree import ElementTree as ET

import numpy as np

from . import oracles
from .circuit import Circuit, Gate, GateKind, dense_sim, embed_state, initial_map, lower, translate
from .core import (CU, NOR, QFT, SR, Instr, Lshift, Phi, Position, QFTInv, Rev, Rshift, Seq,
                   Skip, SRInv, TypeCheckError, X, invert, leaves, seq, typecheck, well_formed_state)
from .oracles import OracleSpec
from .sim import OqasmState, QubitValue, StuckError, denom_log, interpret, make_layout, run_on_naturals

TOLERANCE = 1e-9


def default_seed() -> int:
    """SEED from the environment, else 0."""
    return int(os.environ.get("SEED", "0"))


@dataclass
class TrialConfig:
    operator: str | OracleSpec
    params: dict = field(default_factory=dict)
    trials: int = 10_000
    seed: int | None = None
    oracle: Callable[[dict], dict] | None = None   # defaults to the spec's classical function

    def spec(self) -> OracleSpec:
        if isinstance(self.operator, OracleSpec):
            return self.operator
        return oracles.build(self.operator, **self.params)

    def rng(self) -> random.Random:
        return random.Random(default_seed() if self.seed is None else self.seed)


@dataclass
class ErrorReport:
    name: str
    passed: bool
    trials: int
    max_abs_error: int = 0
    witnesses: list = field(default_factory=list)   # dicts of failing inputs
    wall_time: float = 0.0
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        s = f"{verdict} {self.name}: {self.trials} trials, max error {self.max_abs_error}, {self.wall_time:.2f}s"
        if self.witnesses:
            s += f", witness {self.witnesses[0]}"
        if self.detail:
            s += f" ({self.detail})"
        return s


def circular_distance(a: int, b: int, bits: int) -> int:
    d = abs(a - b) % (1 << bits)
    return min(d, (1 << bits) - d)


# ---------------------------------------------------------------------------
# differential testing of oracles
# ---------------------------------------------------------------------------

def _draw_inputs(spec: OracleSpec, rng: random.Random) -> dict[str, int]:
    return {var: rng.randrange(spec.bound(var)) for var, role in spec.inputs
            if role in ("operand", "result")}


def _runner(spec: OracleSpec):
    typecheck(spec.sizes, spec.env, spec.program)
    return lambda inputs: run_on_naturals(spec.sizes, spec.program, inputs, trusted=True)


def _mismatch(spec: OracleSpec, got: dict, want: dict) -> int | None:
    """Largest circular distance over differing variables, None if all agree."""
    worst = None
    for var, value in want.items():
        if got[var] != value:
            d = circular_distance(got[var], value, spec.sizes[var])
            worst = d if worst is None else max(worst, d)
    return worst


def _shrink_inputs(inputs: dict, fails: Callable[[dict], bool]) -> dict:
    """Greedy bitwise zeroing, highest bits first, while the failure persists."""
    cur = dict(inputs)
    changed = True
    while changed:
        changed = False
        for var in sorted(cur):
            for bit in reversed(range(cur[var].bit_length())):
                if cur[var] >> bit & 1:
                    cand = dict(cur)
                    cand[var] &= ~(1 << bit)
                    if fails(cand):
                        cur, changed = cand, True
    return cur


def run_pbt(cfg: TrialConfig, stop_on_failure: bool = True) -> ErrorReport:
    """Random inputs, simulate, compare every variable against the classical function."""
    start = time.perf_counter()
    spec = cfg.spec()
    oracle = cfg.oracle or spec.classical_spec
    run = _runner(spec)
    rng = cfg.rng()
    report = ErrorReport(spec.name, True, 0)

    def fails(inputs):
        return _mismatch(spec, run(inputs), oracle(_complete(spec, inputs))) is not None

    for _ in range(cfg.trials):
        inputs = _draw_inputs(spec, rng)
        report.trials += 1
        err = _mismatch(spec, run(inputs), oracle(_complete(spec, inputs)))
        if err is None:
            continue
        report.passed = False
        report.max_abs_error = max(report.max_abs_error, err)
        if not report.witnesses:
            report.witnesses.append(_shrink_inputs(inputs, fails))
        if stop_on_failure:
            break
    report.wall_time = time.perf_counter() - start
    return report


def _complete(spec: OracleSpec, inputs: dict) -> dict:
    return {var: inputs.get(var, 0) for var in spec.sizes}


def max_error(exact: OracleSpec | Callable[[dict], dict], approx: OracleSpec,
              trials: int = 10_000, seed: int | None = None,
              inputs: Callable[[random.Random], dict] | None = None) -> ErrorReport:
    """Max circular distance between approx's result variables and exact's.

    exact is either another spec over the same variables (simulated) or a
    classical function. inputs overrides the uniform input draw.
    """
    start = time.perf_counter()
    rng = random.Random(default_seed() if seed is None else seed)
    run_approx = _runner(approx)
    if isinstance(exact, OracleSpec):
        run_exact = _runner(exact)
    else:
        run_exact = lambda v: exact(_complete(approx, v))
    results = [v for v, role in approx.inputs if role == "result"]
    report = ErrorReport(f"{approx.name} max error", True, 0)
    for _ in range(trials):
        v = inputs(rng) if inputs else _draw_inputs(approx, rng)
        got, want = run_approx(v), run_exact(v)
        report.trials += 1
        for var in results:
            d = circular_distance(got[var], want[var], approx.sizes[var])
            if d > report.max_abs_error:
                report.max_abs_error = d
                report.witnesses = [dict(v)]
    report.wall_time = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# random states and programs
# ---------------------------------------------------------------------------

def random_state(sizes: dict[str, int], env: dict, rng: random.Random,
                 phases: bool = True) -> OqasmState:
    """A random well-formed state for env, with random global phases."""
    g = denom_log(sizes)
    full = 1 << g
    qubits = []
    for var, n in sizes.items():
        basis = env[var]
        if basis == NOR:
            qubits += [QubitValue.nor(rng.randrange(2), rng.randrange(full) if phases else 0)
                       for _ in range(n)]
            continue
        p = basis.precision
        v = rng.randrange(1 << p)
        for k in range(n):
            rot = (v << (g - p + k)) % full if k < p else rng.choice((0, full >> 1))
            qubits.append(QubitValue.phi(rot, rng.randrange(full) if phases else 0))
    return OqasmState(g, make_layout(sizes), tuple(qubits))


def _nor_positions(sizes, env, avoid_var=None):
    return [Position(v, i) for v, n in sizes.items() if env[v] == NOR and v != avoid_var
            for i in range(n)]


def _cu_body(rng, sizes, env, avoid: frozenset, depth: int) -> Instr:
    """A basis-preserving, neutral body that never touches a position in avoid."""
    avoid_vars = {p.var for p in avoid}
    nor = [p for p in _nor_positions(sizes, env) if p not in avoid]
    nor_vars = sorted({p.var for p in nor if p.var not in avoid_vars})
    phi_vars = [v for v in sizes if env[v] != NOR]
    choices = (["x"] if nor else []) + (["sr"] if phi_vars else []) + \
              (["sandwich"] if nor_vars else []) + (["cu"] if nor and depth > 0 else [])
    if not choices:
        return Skip()
    items = []
    for _ in range(rng.randint(1, 3)):
        kind = rng.choice(choices)
        if kind == "x":
            items.append(X(rng.choice(nor)))
        elif kind == "sr":
            var = rng.choice(phi_vars)
            m = rng.randrange(env[var].precision)
            items.append(SR(m, var) if rng.random() < 0.5 else SRInv(m, var))
        elif kind == "sandwich":
            var = rng.choice(nor_vars)
            shift = rng.choice((Lshift, Rshift, Rev))
            inner = X(Position(var, rng.randrange(sizes[var])))
            items.append(seq(shift(var), inner, invert(shift(var))))
        else:
            inner_ctl = rng.choice(nor)
            items.append(CU(inner_ctl, _cu_body(rng, sizes, env, avoid | {inner_ctl}, depth - 1)))
    return seq(*items)


def random_program(rng: random.Random, sizes: dict[str, int], env: dict,
                   length: int = 8, cu_depth: int = 2) -> tuple[Instr, dict]:
    """A well-typed program of about length steps starting from env; returns (prog, env')."""
    env = dict(env)
    steps = []
    for _ in range(length):
        nor_vars = [v for v in sizes if env[v] == NOR]
        phi_vars = [v for v in sizes if env[v] != NOR]
        choices = ["skip"]
        if nor_vars:
            choices += ["x", "x", "qft", "shift", "cu", "cu"]
        if phi_vars:
            choices += ["sr", "sr", "qftinv"]
        kind = rng.choice(choices)
        if kind == "skip":
            var = rng.choice(list(sizes))
            steps.append(Skip(Position(var, rng.randrange(sizes[var]))))
        elif kind == "x":
            var = rng.choice(nor_vars)
            steps.append(X(Position(var, rng.randrange(sizes[var]))))
        elif kind == "qft":
            var = rng.choice(nor_vars)
            n = rng.randint(1, sizes[var])
            steps.append(QFT(n, var))
            env[var] = Phi(n)
        elif kind == "shift":
            var = rng.choice(nor_vars)
            steps.append(rng.choice((Lshift, Rshift, Rev))(var))
        elif kind == "cu":
            control = rng.choice(_nor_positions(sizes, env))
            steps.append(CU(control, _cu_body(rng, sizes, env, frozenset({control}), cu_depth - 1)))
        elif kind == "sr":
            var = rng.choice(phi_vars)
            m = rng.randrange(env[var].precision)
            steps.append(SR(m, var) if rng.random() < 0.5 else SRInv(m, var))
        else:
            var = rng.choice(phi_vars)
            steps.append(QFTInv(env[var].precision, var))
            env[var] = NOR
    return seq(*steps), env


def random_case(rng: random.Random, max_qubits: int = 10, length: int = 8):
    """Random (sizes, env, prog, env') with at most max_qubits qubits."""
    while True:
        nvars = rng.randint(1, 3)
        sizes = {f"v{i}": rng.randint(1, 4) for i in range(nvars)}
        if sum(sizes.values()) <= max_qubits:
            break
    env = {}
    for var, n in sizes.items():
        env[var] = Phi(rng.randint(1, n)) if rng.random() < 0.25 else NOR
    prog, out_env = random_program(rng, sizes, env, length)
    # the generator must only produce well-typed programs
    assert typecheck(sizes, env, prog) == out_env
    return sizes, env, prog, out_env


def _rebuild_without(prog: Instr, skip_index: int) -> Instr:
    items = [leaf for i, leaf in enumerate(leaves(prog)) if i != skip_index]
    return seq(*items) if items else Skip()


def shrink_program(sizes: dict, env: dict, prog: Instr, fails: Callable[[Instr], bool]) -> Instr:
    """Drop top-level instructions while the program stays well-typed and still fails."""
    cur = prog
    i = 0
    while i < sum(1 for _ in leaves(cur)):
        cand = _rebuild_without(cur, i)
        try:
            typecheck(sizes, env, cand)
            ok = fails(cand)
        except (TypeCheckError, StuckError):
            ok = False
        if ok:
            cur = cand
        else:
            i += 1
    return cur


# ---------------------------------------------------------------------------
# dense-simulation and metatheory checks
# ---------------------------------------------------------------------------

@dataclass
class CheckReport:
    name: str
    passed: bool
    trials: int
    max_deviation: float = 0.0
    witness: object = None
    detail: str = ""

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name}: {self.trials} trials, max deviation {self.max_deviation:.3g}"


def check_translation(sizes: dict, env: dict, prog: Instr, trials: int = 20,
                      seed: int | None = None, circuit: Circuit | None = None,
                      level: str = "base") -> CheckReport:
    """dense_sim(translate(prog)) applied to embed(phi) against embed(interpret(prog, phi)).

    circuit overrides the translated circuit (used for mutation testing).
    """
    rng = random.Random(default_seed() if seed is None else seed)
    typecheck(sizes, env, prog)
    q0 = initial_map(sizes)
    q1, circ = translate(sizes, q0, prog)
    circ = lower(circuit if circuit is not None else circ, level)
    report = CheckReport("translation", True, 0)
    for _ in range(trials):
        state = random_state(sizes, env, rng)
        want = embed_state(interpret(sizes, prog, state), q1)
        got = dense_sim(circ, embed_state(state, q0))
        dev = float(np.abs(got - want).max())
        report.trials += 1
        report.max_deviation = max(report.max_deviation, dev)
        if dev > TOLERANCE:
            report.passed = False
            report.witness = state
            break
    return report


def check_linearity(sizes: dict, env: dict, prog: Instr, trials: int = 10, terms: int = 3,
                    seed: int | None = None) -> CheckReport:
    """The circuit on a superposition of embedded states equals the superposition of results."""
    rng = random.Random(default_seed() if seed is None else seed)
    typecheck(sizes, env, prog)
    q0 = initial_map(sizes)
    q1, circ = translate(sizes, q0, prog)
    report = CheckReport("linearity", True, 0)
    for _ in range(trials):
        states = [random_state(sizes, env, rng) for _ in range(terms)]
        coeffs = np.array([complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in states])
        inp = sum(c * embed_state(s, q0) for c, s in zip(coeffs, states))
        norm = np.linalg.norm(inp)
        if norm < 1e-6:
            continue
        want = sum(c * embed_state(interpret(sizes, prog, s), q1) for c, s in zip(coeffs, states))
        got = dense_sim(circ, inp / norm)
        dev = float(np.abs(got - want / norm).max())
        report.trials += 1
        report.max_deviation = max(report.max_deviation, dev)
        if dev > TOLERANCE:
            report.passed = False
            report.witness = states
            break
    return report


def check_reversibility(sizes: dict, env: dict, prog: Instr, trials: int = 20,
                        seed: int | None = None) -> CheckReport:
    """interpret(prog; invert prog) is the identity, and invert maps the types back."""
    rng = random.Random(default_seed() if seed is None else seed)
    out_env = typecheck(sizes, env, prog)
    report = CheckReport("reversibility", True, 0)
    if typecheck(sizes, out_env, invert(prog)) != env:
        report.passed = False
        report.detail = "inverse does not restore the type environment"
        return report
    round_trip = Seq(prog, invert(prog))
    for _ in range(trials):
        state = random_state(sizes, env, rng)
        report.trials += 1
        if interpret(sizes, round_trip, state) != state:
            report.passed = False
            report.witness = state
            break
    return report


def check_soundness(sizes: dict, env: dict, prog: Instr, trials: int = 20,
                    seed: int | None = None) -> CheckReport:
    """Well-typed programs run without getting stuck and yield well-formed states."""
    rng = random.Random(default_seed() if seed is None else seed)
    out_env = typecheck(sizes, env, prog)
    report = CheckReport("soundness", True, 0)
    for _ in range(trials):
        state = random_state(sizes, env, rng)
        report.trials += 1
        try:
            out = interpret(sizes, prog, state)
        except StuckError as e:
            report.passed, report.witness, report.detail = False, state, str(e)
            break
        if not well_formed_state(sizes, out_env, out):
            report.passed, report.witness = False, state
            break
    return report


def check_spec(spec: OracleSpec, check: Callable, **kw) -> CheckReport:
    return check(spec.sizes, spec.env, spec.program, **kw)


# ---------------------------------------------------------------------------
# mutants
# ---------------------------------------------------------------------------

def endianness_mutant(n: int) -> OracleSpec:
    """rz_adder without the register reversals: reads both registers big-endian."""
    good = oracles.rz_adder(n)
    mod = 1 << n
    body = seq(*(CU(Position("a", m), SR(m, "b")) for m in reversed(range(n))))
    prog = seq(QFT(n, "b"), body, QFTInv(n, "b"))
    return OracleSpec("rz_adder_endianness_mutant", prog, dict(good.sizes), list(good.inputs),
                      lambda v: {"a": v["a"], "b": (v["a"] + v["b"]) % mod}, params={"bits": n})


def wrong_angle_mutant(circ: Circuit) -> Circuit:
    """Change the angle of the first single-qubit rotation (k -> k+1)."""
    gates = list(circ.gates)
    for i, g in enumerate(gates):
        if g.kind in (GateKind.RZ, GateKind.RZINV, GateKind.CRZ, GateKind.CRZINV):
            gates[i] = Gate(g.kind, g.qubits, g.k + 1)
            return Circuit(circ.num_qubits, tuple(gates))
    raise ValueError("circuit has no rotation to mutate")


# ---------------------------------------------------------------------------
# CI output
# ---------------------------------------------------------------------------

def write_json(reports: list, path: str):
    with open(path, "w") as f:
        json.dump([r.to_dict() if hasattr(r, "to_dict") else asdict(r) for r in reports],
                  f, indent=2, sort_keys=True, default=str)


def write_junit(reports: list, path: str, suite: str = "oqasm"):
    failures = sum(not r.passed for r in reports)
    root = ET.Element("testsuite", name=suite, tests=str(len(reports)), failures=str(failures))
    for r in reports:
        case = ET.SubElement(root, "testcase", name=r.name,
                             time=f"{getattr(r, 'wall_time', 0.0):.3f}")
        if not r.passed:
            ET.SubElement(case, "failure", message=r.summary())
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)
