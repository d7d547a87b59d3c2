import json
import random
from xml.etree import ElementTree as ET

import pytest
from hypothesis import given, settings, strategies as st

from oqasm import oracles
from oqasm.circuit import initial_map, translate
from oqasm.core import NOR, Position, Skip, X, typecheck, well_formed_state
from oqasm.testkit import (TrialConfig, check_linearity, check_reversibility, check_soundness,
                           check_spec, check_translation, circular_distance, endianness_mutant,
                           max_error, random_case, random_state, run_pbt, shrink_program,
                           wrong_angle_mutant, write_json, write_junit)


def test_adder_passes():
    assert run_pbt(TrialConfig("rz_adder", {"bits": 8}, 200, seed=3)).passed


def test_zero_trials_is_vacuous_pass():
    r = run_pbt(TrialConfig("rz_adder", {"bits": 8}, 0))
    assert r.passed and r.trials == 0


def test_runs_are_deterministic():
    spec = oracles.aqft_adder(8, 2)
    a = max_error(oracles.rz_adder(8), spec, 100, seed=9)
    b = max_error(oracles.rz_adder(8), spec, 100, seed=9)
    assert (a.max_abs_error, a.witnesses) == (b.max_abs_error, b.witnesses)


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("SEED", "17")
    assert TrialConfig("rz_adder").rng().random() == random.Random(17).random()


def test_endianness_mutant_is_caught_with_witness():
    r = run_pbt(TrialConfig(endianness_mutant(6), trials=200, seed=1))
    assert not r.passed and r.witnesses
    w = r.witnesses[0]
    spec = endianness_mutant(6)
    from oqasm.sim import run_on_naturals
    got = run_on_naturals(spec.sizes, spec.program, w)
    assert got["b"] != (w["a"] + w["b"]) % 64


def test_wrong_angle_mutant_fails_translation():
    spec = oracles.rz_adder(2)
    _, circ = translate(spec.sizes, initial_map(spec.sizes), spec.program)
    assert check_spec(spec, check_translation, trials=5, seed=0).passed
    bad = check_translation(spec.sizes, spec.env, spec.program, trials=5, seed=0,
                            circuit=wrong_angle_mutant(circ))
    assert not bad.passed


def test_identical_specs_have_zero_error():
    assert max_error(oracles.rz_adder(6), oracles.rz_adder(6), 100, seed=0).max_abs_error == 0


def test_aqft_error_bound():
    r = max_error(oracles.rz_adder(8), oracles.aqft_adder(8, 1), 500, seed=0)
    assert r.max_abs_error == 1


def test_classical_reference_for_aqft_div_mod():
    spec = oracles.div_mod(6, 5, "aqft")
    assert max_error(spec.classical_spec, spec, 100, seed=0).max_abs_error == 0


def test_circular_distance():
    assert circular_distance(0, 15, 4) == 1
    assert circular_distance(3, 11, 4) == 8


def test_small_checks():
    sizes = {"x": 2}
    env = {"x": NOR}
    assert check_translation(sizes, env, X(Position("x", 0)), trials=3).passed
    assert check_reversibility(sizes, env, Skip(Position("x", 0))).passed
    spec = oracles.mod_add_const(3, 5, 7)
    assert check_spec(spec, check_linearity, trials=3, terms=2, seed=4).passed


def test_write_reports(tmp_path):
    ok = run_pbt(TrialConfig("rz_adder", {"bits": 4}, 10))
    bad = run_pbt(TrialConfig(endianness_mutant(4), trials=100))
    write_json([ok, bad], tmp_path / "r.json")
    data = json.loads((tmp_path / "r.json").read_text())
    assert [d["passed"] for d in data] == [True, False]
    write_junit([ok, bad], tmp_path / "r.xml")
    root = ET.parse(tmp_path / "r.xml").getroot()
    assert root.get("tests") == "2" and root.get("failures") == "1"
    assert len(root.findall("testcase/failure")) == 1


def test_shrink_program_keeps_failure():
    sizes = {"x": 2}
    env = {"x": NOR}
    from oqasm.core import seq
    prog = seq(X(Position("x", 0)), X(Position("x", 1)), X(Position("x", 0)))
    # "fails" whenever x[1] is flipped
    small = shrink_program(sizes, env, prog, lambda p: "offset=1" in repr(p))
    assert "offset=1" in repr(small) and len(repr(small)) < len(repr(prog))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_generated_programs_are_well_typed(seed):
    rng = random.Random(seed)
    sizes, env, prog, out = random_case(rng)
    assert typecheck(sizes, env, prog) == out
    assert well_formed_state(sizes, env, random_state(sizes, env, rng))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_generated_programs_metatheory(seed):
    rng = random.Random(seed)
    sizes, env, prog, _ = random_case(rng, max_qubits=6)
    for check in (check_soundness, check_reversibility, check_translation):
        assert check(sizes, env, prog, trials=2, seed=seed).passed
