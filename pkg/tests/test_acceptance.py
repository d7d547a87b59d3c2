"""
Acceptance criteria 1-10. Each test prints one PASS/FAIL line.

Run alone with `pytest tests/test_acceptance.py -v` or `python tests/test_acceptance.py`.
"""
import functools
import math
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import refs  # noqa: E402
from oqasm import oracles  # noqa: E402
from oqasm.circuit import count_resources, initial_map, translate  # noqa: E402
from oqasm.core import Skip, X, leaves  # noqa: E402
from oqasm.oqimp import compile_program, parse, parse_file  # noqa: E402
from oqasm.testkit import (TrialConfig, check_linearity, check_reversibility, check_soundness,  # noqa: E402
                           check_spec, check_translation, endianness_mutant, max_error,
                           random_case, run_pbt, wrong_angle_mutant)

PROGRAMS = Path(oracles.__file__).parent / "programs"
TRIALS = 10_000
LINES = []   # also reported in pytest's terminal summary (see conftest.py)


def _say(line):
    LINES.append(line)
    sys.__stdout__.write(line + "\n")
    sys.__stdout__.flush()


def criterion(n, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run():
            start = time.perf_counter()
            try:
                detail = fn()
            except BaseException as exc:
                _say(f"criterion {n:>2} FAIL  {title}: {type(exc).__name__}: {exc}")
                raise
            _say(f"criterion {n:>2} PASS  {title} ({detail}; {time.perf_counter() - start:.0f}s)")
        return run
    return wrap


def qubits(spec):
    _, circ = translate(spec.sizes, initial_map(spec.sizes), spec.program)
    assert circ.num_qubits == spec.num_qubits
    return count_resources(circ)["qubits"]


@criterion(1, "qubit counts")
def test_criterion_1_qubit_counts():
    exact = {
        "rz_adder": (qubits(oracles.rz_adder(16)), 32),
        "toff_adder": (qubits(oracles.toff_adder(16)), 33),
        "rz_adder_const": (qubits(oracles.rz_adder_const(16, 12345)), 16),
        "mult_qft": (qubits(oracles.multiplier(16, "qft")), 48),
        "mult_toff": (qubits(oracles.multiplier(16, "toff")), 49),
        "mult_qft_const": (qubits(oracles.multiplier(16, "qft", 12345)), 32),
        "mult_toff_const": (qubits(oracles.multiplier(16, "toff", 12345)), 33),
        "mod_mult_qft": (qubits(oracles.mod_mult_const(8, 173, 255, "qft")), 19),
    }
    for name, (got, want) in exact.items():
        assert got == want, f"{name}: {got} != {want}"
    # at most the published value; the divisor only shrinks the quotient register
    bounded = {}
    for d in (1, 3, 7, 10, 255, 12345):
        bounded[f"div_qft/{d}"] = (qubits(oracles.div_mod(16, d, "qft")), 34)
        bounded[f"div_aqft/{d}"] = (qubits(oracles.div_mod(16, d, "aqft")), 34)
        bounded[f"div_toff/{d}"] = (qubits(oracles.div_mod(16, d, "toff")), 49)
    bounded["mod_mult_toff"] = (qubits(oracles.mod_mult_const(8, 173, 255, "toff")), 41)
    for name, (got, cap) in bounded.items():
        assert got <= cap, f"{name}: {got} > {cap}"
    return (f"adders 32/33/16, mult 48/49/32/33, div<= {bounded['div_qft/1'][0]}/"
            f"{bounded['div_aqft/1'][0]}/{bounded['div_toff/1'][0]}, mod_mult 19/"
            f"{bounded['mod_mult_toff'][0]}")


def operator_cases(bits, rng):
    c = rng.randrange(1, 1 << bits)
    modulus = rng.randrange(1 << (bits - 1), 1 << bits) | 1
    cm = rng.randrange(2, modulus)
    while math.gcd(cm, modulus) != 1:
        cm += 1
    d = rng.randrange(2, 1 << (bits // 2))
    out = [("rz_adder", {}), ("rz_sub", {}), ("rz_adder_const", {"c": c}), ("rz_sub_const", {"c": c}),
           ("rz_const_minus", {"c": c}), ("toff_adder", {}), ("toff_sub", {}),
           ("toff_adder_const", {"c": c}), ("toff_sub_const", {"c": c})]
    out += [("comparator", {"form": f, "c": c}) for f in oracles.COMPARATOR_FORMS]
    for fl in ("qft", "toff"):
        out += [("multiplier", {"flavor": fl}), ("multiplier", {"flavor": fl, "c": c}),
                ("mod_add_const", {"flavor": fl, "c": cm, "n": modulus}),
                ("mod_mult_const", {"flavor": fl, "c": cm, "n": modulus})]
    out += [("div_mod", {"flavor": fl, "n": d}) for fl in ("qft", "aqft", "toff")]
    return out


@criterion(2, "10k-trial differential suites at 16 and 60 bits")
def test_criterion_2_pbt():
    rng = random.Random(2)
    worst, count = 0.0, 0
    for bits in (16, 60):
        for name, params in operator_cases(bits, rng):
            report = run_pbt(TrialConfig(name, dict(params, bits=bits), TRIALS, seed=bits))
            assert report.passed, f"{name} {params} at {bits} bits: {report.summary()}"
            assert report.trials == TRIALS
            if bits == 60:
                assert report.wall_time <= 600, f"{name} took {report.wall_time:.0f}s"
                worst = max(worst, report.wall_time)
            count += 1
    return f"{count} suites, slowest 60-bit {worst:.0f}s"


@criterion(3, "AQFT adder error law")
def test_criterion_3_aqft_error():
    n = 16
    found = []
    for b in (1, 2, 3):
        exact, approx = oracles.rz_adder(n), oracles.aqft_adder(n, b)
        report = max_error(exact, approx, TRIALS, seed=b)
        assert report.max_abs_error == (1 << b) - 1, (b, report.max_abs_error)
        step = 1 << b
        aligned = max_error(exact, approx, TRIALS, seed=b,
                            inputs=lambda r: {"a": r.randrange(1 << (n - b)) * step,
                                              "b": r.randrange(1 << (n - b)) * step})
        assert aligned.max_abs_error == 0
        found.append(report.max_abs_error)
    return f"max errors {found}, 0 on multiples of 2^b"


@criterion(4, "AQFT div/mod exactness")
def test_criterion_4_aqft_divmod():
    for d in (1, 3, 7, 10):
        report = run_pbt(TrialConfig(oracles.div_mod(16, d, "aqft"), trials=TRIALS, seed=d))
        assert report.passed, report.summary()
    iters = oracles.div_iterations(16, 1)
    assert iters == 16
    return f"n in (1, 3, 7, 10) exact, {iters} iterations for N=16, n=1"


def small_operators():
    return [oracles.rz_adder(4), oracles.rz_sub(4), oracles.rz_adder_const(5, 11),
            oracles.rz_sub_const(5, 11), oracles.rz_const_minus(5, 11), oracles.aqft_adder(5, 2),
            oracles.toff_adder(4), oracles.toff_sub(4), oracles.toff_adder_const(4, 5),
            oracles.toff_sub_const(4, 5),
            oracles.comparator(4, "lt"), oracles.comparator(4, "lt_const", 5),
            oracles.comparator(3, "eq"), oracles.comparator(4, "eq_const", 6),
            oracles.multiplier(3, "qft"), oracles.multiplier(3, "toff"),
            oracles.multiplier(4, "qft", 5), oracles.multiplier(4, "toff", 5),
            oracles.div_mod(4, 3, "qft"), oracles.div_mod(4, 3, "aqft"), oracles.div_mod(3, 3, "toff"),
            oracles.mod_add_const(3, 2, 5, "qft"), oracles.mod_add_const(3, 2, 5, "toff"),
            oracles.mod_mult_const(3, 2, 5, "qft"), oracles.mod_mult_const(2, 2, 3, "toff")]


@criterion(5, "translation correctness")
def test_criterion_5_translation():
    start = time.perf_counter()
    ops = small_operators()
    for spec in ops:
        assert spec.num_qubits <= 12, spec.name
        report = check_spec(spec, check_translation, trials=5, seed=5)
        assert report.passed, f"{spec.name}: {report.summary()}"
    rng = random.Random(5)
    for i in range(500):
        sizes, env, prog, _ = random_case(rng, max_qubits=10)
        report = check_translation(sizes, env, prog, trials=2, seed=i)
        assert report.passed, f"random program {i}: {report.summary()}"
    elapsed = time.perf_counter() - start
    assert elapsed <= 300
    return f"{len(ops)} operators, 500 random programs, tolerance 1e-9"


@criterion(6, "soundness, reversibility, linearity")
def test_criterion_6_metatheory():
    rng = random.Random(6)
    for i in range(1000):
        sizes, env, prog, _ = random_case(rng, max_qubits=10)
        for check in (check_soundness, check_reversibility):
            report = check(sizes, env, prog, trials=3, seed=i)
            assert report.passed, f"{check.__name__} case {i}: {report.detail}"
        report = check_linearity(sizes, env, prog, trials=1, terms=3, seed=i)
        assert report.passed, f"linearity case {i}: {report.summary()}"
    return "1000 cases each"


@criterion(7, "partial evaluation")
def test_criterion_7_partial_evaluation():
    both = parse("Q fixedp f(C fixedp x, C fixedp y) { return (x * y) / 5; }")
    x, y = Fraction(5, 8), Fraction(-3, 4)
    out = compile_program(both, "qft", 16, {"x": x, "y": y}, check=True)
    gates = [g for g in leaves(out.program) if not isinstance(g, Skip)]
    assert out.sizes == {"ret": 16}
    assert gates and all(isinstance(g, X) and g.pos.var == "ret" for g in gates)
    assert out.output() == ((math.floor(x * y * 2 ** 15)) // 5) % (1 << 16)

    one = parse("Q fixedp y; Q fixedp f(C fixedp x) { return (x * y) / 5; }")
    ops = []
    for flag in ("qft", "classical"):
        out = compile_program(one, flag, 16, {"x": x}, check=True)
        ops += out.manifest["ops"]
        assert "fixedp_mult_const" in out.manifest["ops"]
        assert not any("div" in op for op in out.manifest["ops"]), out.manifest["ops"]
    return f"{len(gates)} X gates on 16 qubits; x-only dispatch {sorted(set(ops))}"


@criterion(8, "mutation sensitivity")
def test_criterion_8_mutants():
    mutant = run_pbt(TrialConfig(endianness_mutant(16), trials=TRIALS, seed=8))
    assert not mutant.passed and mutant.witnesses
    spec = oracles.rz_adder(3)
    _, circ = translate(spec.sizes, initial_map(spec.sizes), spec.program)
    bad = check_spec(spec, check_translation, trials=TRIALS, seed=8, circuit=wrong_angle_mutant(circ))
    assert not bad.passed
    return (f"endianness caught after {mutant.trials} trials (witness {mutant.witnesses[0]}), "
            f"wrong angle caught after {bad.trials}")


@criterion(9, "ChaCha20 against the RFC reference")
def test_criterion_9_chacha():
    rng = random.Random(9)
    word = lambda: rng.randrange(1 << 32)
    qr = compile_program(parse_file(PROGRAMS / "chacha_qr.qimp"), "qft", 32)
    for _ in range(1000):
        v = [word() for _ in range(4)]
        got = qr.output({f"x{i + 1}": v[i] for i in range(4)})
        assert got == list(refs.quarter_round(*v)), v
    prog = parse_file(PROGRAMS / "chacha20.qimp")
    dr = compile_program(prog, "qft", 32, {"rounds": 2, "feed": 0})
    for _ in range(1000):
        s = [word() for _ in range(16)]
        assert dr.output({"x": s}) == refs.double_round(s), s
    full = compile_program(prog, "qft", 32, {"rounds": 20, "feed": 1})
    rfc = refs.initial_state(bytes(range(32)), 1, bytes.fromhex("000000090000004a00000000"))
    states = [rfc] + [[word() for _ in range(16)] for _ in range(10)]
    for s in states:
        assert full.output({"x": s}) == refs.block(s), s
    expected = bytes.fromhex("10f1e7e4d13b5915500fdd1fa32071c4c7d1f4c733c068030422aa9ac3d46c4e"
                             "d2826446079faa0914c2d705d98b02a2b5129cd1de164eb9cbd083e8a2503c4e")
    assert refs.serialize(full.output({"x": rfc})) == expected
    return f"1000 quarter rounds, 1000 double rounds, {len(states)} full blocks ({full.manifest['qubits']} qubits)"


@criterion(10, "sine against a fixed-point Taylor reference")
def test_criterion_10_sine():
    rng = random.Random(10)
    prog = parse_file(PROGRAMS / "sin.qimp")
    worst = 0
    for terms in (1, 2, 3, 4):
        out = compile_program(prog, "qft", 16, {"n": terms - 1})
        for _ in range(100):
            m = rng.randrange(0, int(0.45 * 2 ** 15))
            want, steps = refs.sine_fixed(m, terms)
            got = out.output({"x8": m})
            diff = (got - want) % (1 << 16)
            diff = min(diff, (1 << 16) - diff)
            assert diff <= steps, (terms, m, got, want)
            worst = max(worst, diff)
    return f"terms 1..4 x 100 inputs, worst deviation {worst} ulp"


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items(), key=lambda kv: int(kv[0].split("_")[2])
                           if kv[0].startswith("test_criterion_") else 0):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except Exception:
                failed += 1
    sys.exit(1 if failed else 0)
