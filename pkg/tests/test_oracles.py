import random

import pytest

from oqasm import oracles
from oqasm.core import typecheck
from oqasm.sim import run_on_naturals


def run(spec, **inputs):
    return run_on_naturals(spec.sizes, spec.program, inputs)


def agree(spec, trials=40, seed=0):
    """Simulate on random operands and compare every variable with the classical function."""
    rng = random.Random(seed)
    for _ in range(trials):
        v = {var: rng.randrange(spec.bound(var)) for var, role in spec.inputs
             if role in ("operand", "result")}
        full = {var: v.get(var, 0) for var in spec.sizes}
        assert run(spec, **v) == spec.classical_spec(full), v


def test_rz_adder():
    assert run(oracles.rz_adder(4), a=3, b=5)["b"] == 8
    spec = oracles.rz_adder(8)
    for b in (0, 77, 255):
        assert run(spec, a=0, b=b)["b"] == b
    agree(spec)


def test_rz_adder_const():
    assert run(oracles.rz_adder_const(4, 9), x=7)["x"] == 0
    assert run(oracles.rz_adder_const(6, 0), x=41)["x"] == 41
    agree(oracles.rz_adder_const(8, 173))


def test_subtractors():
    assert run(oracles.rz_sub(4), a=3, b=5)["b"] == 2
    assert run(oracles.toff_sub(4), a=3, b=5)["b"] == 2
    assert run(oracles.rz_sub_const(4, 3), x=5)["x"] == 2
    assert run(oracles.toff_sub_const(4, 3), x=1)["x"] == 14
    assert run(oracles.rz_const_minus(4, 3), x=1)["x"] == 2
    for spec in (oracles.rz_sub(6), oracles.toff_sub(6), oracles.rz_sub_const(6, 11),
                 oracles.toff_sub_const(6, 11), oracles.rz_const_minus(6, 11)):
        agree(spec)


def test_toff_adders():
    spec = oracles.toff_adder(6)
    assert run(spec, a=0, b=50)["b"] == 50
    agree(spec)
    agree(oracles.toff_adder_const(6, 45))


@pytest.mark.parametrize("form", oracles.COMPARATOR_FORMS)
def test_comparators(form):
    spec = oracles.comparator(5, form, 5)
    agree(spec)
    x, y = 3, 5
    out = run(spec, **{k: v for k, v in (("x", x), ("y", y)) if k in spec.sizes})
    want = {"lt_const": x < 5, "lt": x < y, "eq_const": x == 5, "eq": x == y}[form]
    assert out["t"] == want


def test_comparator_equal_flips():
    assert run(oracles.comparator(4, "eq_const", 9), x=9)["t"] == 1
    assert run(oracles.comparator(4, "eq"), x=6, y=6)["t"] == 1


@pytest.mark.parametrize("flavor", ["qft", "toff"])
def test_multipliers(flavor):
    spec = oracles.multiplier(5, flavor)
    assert run(spec, x=13, y=1)["r"] == 13
    agree(spec)
    agree(oracles.multiplier(5, flavor, 7))


@pytest.mark.parametrize("flavor", ["qft", "toff"])
def test_mod_add_const(flavor):
    spec = oracles.mod_add_const(8, 100, 255, flavor)
    out = run(spec, ctl=1, b=200)
    assert out["b"] == 45 and all(out[v] == 0 for v, role in spec.inputs if role == "ancilla")
    assert run(spec, ctl=0, b=200)["b"] == 200
    assert run(oracles.mod_add_const(8, 0, 255, flavor), ctl=1, b=17)["b"] == 17
    agree(spec)


@pytest.mark.parametrize("flavor", ["qft", "toff"])
def test_mod_mult_const(flavor):
    spec = oracles.mod_mult_const(5, 7, 31, flavor)
    agree(spec, trials=20)
    assert run(oracles.mod_mult_const(5, 1, 31, flavor), x=20)["b"] == 20


def test_mod_mult_requires_coprime():
    with pytest.raises(ValueError):
        oracles.mod_mult_const(8, 3, 255)


@pytest.mark.parametrize("flavor", ["qft", "aqft", "toff"])
@pytest.mark.parametrize("divisor", [1, 3, 7])
def test_div_mod(flavor, divisor):
    agree(oracles.div_mod(6, divisor, flavor), trials=20)


def test_div_iterations():
    assert oracles.div_iterations(16, 1) == 16


@pytest.mark.parametrize("name,want", [
    ("rz_adder", 32), ("toff_adder", 33), ("rz_adder_const", 16),
])
def test_qubit_counts(name, want):
    assert oracles.build(name, bits=16, c=5).num_qubits == want


def test_registry_builds_well_typed_programs():
    for name in oracles.REGISTRY:
        spec = oracles.build(name, bits=4, c=3, n=5)
        typecheck(spec.sizes, spec.env, spec.program)


def test_unknown_operator():
    with pytest.raises(KeyError):
        oracles.build("nope")


def test_aqft_adder_exact_on_aligned_inputs():
    spec = oracles.aqft_adder(8, 2)
    for a in range(0, 256, 4 * 7):
        for b in range(0, 256, 4 * 11):
            assert run(spec, a=a, b=b)["b"] == (a + b) % 256
