import random

import pytest
from hypothesis import given, settings, strategies as st

from oqasm.core import (CU, NOR, QFT, SR, X, Lshift, Phi, Position, QFTInv, Rev, Rshift, Seq,
                        Skip, SRInv, TypeCheckError, format_program, fresh, invert, leaves,
                        neutral, parse_program, ParseError, rename, seq, typecheck,
                        well_formed_state)
from oqasm.sim import encode_inputs, interpret
from oqasm.testkit import random_case

P = Position


def test_qft_moves_to_phi():
    assert typecheck({"a": 4}, {"a": NOR}, QFT(4, "a")) == {"a": Phi(4)}


def test_x_on_phi_rejected():
    with pytest.raises(TypeCheckError) as e:
        typecheck({"x": 4}, {"x": Phi(4)}, X(P("x", 2)))
    assert e.value.rule


def test_cu_body_touching_control_rejected():
    prog = CU(P("x", 0), seq(Lshift("x"), X(P("x", 0))))
    with pytest.raises(TypeCheckError):
        typecheck({"x": 3}, {"x": NOR}, prog)


def test_cu_body_must_be_neutral():
    with pytest.raises(TypeCheckError):
        typecheck({"x": 1, "y": 3}, {"x": NOR, "y": NOR}, CU(P("x", 0), Lshift("y")))
    ok = CU(P("x", 0), seq(Lshift("y"), X(P("y", 0)), Rshift("y")))
    assert typecheck({"x": 1, "y": 3}, {"x": NOR, "y": NOR}, ok) == {"x": NOR, "y": NOR}


def test_sr_needs_enough_precision():
    with pytest.raises(TypeCheckError):
        typecheck({"x": 4}, {"x": Phi(2)}, SR(3, "x"))
    typecheck({"x": 4}, {"x": Phi(4)}, SR(3, "x"))


def test_qftinv_precision_must_match():
    with pytest.raises(TypeCheckError):
        typecheck({"x": 4}, {"x": Phi(4)}, QFTInv(3, "x"))


def test_unknown_variable_and_bad_offset():
    with pytest.raises(TypeCheckError):
        typecheck({"x": 2}, {"x": NOR}, X(P("y", 0)))
    with pytest.raises(TypeCheckError):
        typecheck({"x": 2}, {"x": NOR}, X(P("x", 2)))


@pytest.mark.parametrize("pos, body, want", [
    (P("a", 3), SR(2, "b"), True),
    (P("a", 3), Lshift("a"), False),
    (P("a", 0), X(P("a", 0)), False),
    (P("a", 0), X(P("a", 1)), True),
    (P("a", 0), CU(P("a", 0), X(P("b", 0))), False),
])
def test_fresh(pos, body, want):
    assert fresh(pos, body) is want


@pytest.mark.parametrize("body, want", [
    (seq(Lshift("x"), X(P("x", 0)), Rshift("x")), True),
    (Lshift("x"), False),
    (seq(Rev("x"), Rev("x")), True),
    (seq(Lshift("x"), Lshift("x"), Lshift("x")), True),   # full rotation of 3 qubits
    (seq(Rev("x"), Lshift("x")), False),
])
def test_neutral(body, want):
    assert neutral(body, {"x": 3}) is want


def test_invert_examples():
    assert invert(SR(2, "x")) == SRInv(2, "x")
    assert invert(X(P("x", 0))) == X(P("x", 0))
    a, b = QFT(3, "x"), Lshift("y")
    assert invert(Seq(a, b)) == Seq(Rshift("y"), QFTInv(3, "x"))
    assert invert(CU(P("c", 0), SR(1, "x"))) == CU(P("c", 0), SRInv(1, "x"))


def test_invert_is_involution_on_random_programs():
    rng = random.Random(1)
    for _ in range(200):
        sizes, env, prog, out = random_case(rng)
        assert list(leaves(invert(invert(prog)))) == list(leaves(prog))
        assert typecheck(sizes, out, invert(prog)) == env


def test_well_formed_states():
    sizes = {"x": 4}
    zero = encode_inputs(sizes, {})
    assert well_formed_state(sizes, {"x": NOR}, zero)
    phi = interpret(sizes, QFT(4, "x"), encode_inputs(sizes, {"x": 0b1010}))
    assert well_formed_state(sizes, {"x": Phi(4)}, phi)
    assert not well_formed_state(sizes, {"x": NOR}, phi)
    qs = list(phi.qubits)
    qs[1] = type(qs[1]).phi(0)
    broken = type(phi)(phi.phase_denom_log, phi.layout, tuple(qs))
    assert not well_formed_state(sizes, {"x": Phi(4)}, broken)


def test_seq_and_leaves():
    items = [X(P("x", i % 3)) for i in range(100)]
    assert list(leaves(seq(*items))) == items
    assert seq() == Skip()


def test_rename():
    prog = seq(X(P("a", 1)), CU(P("c", 0), SR(1, "a")))
    out = rename(prog, {"a": "z", "c": P("q", 5)})
    assert list(leaves(out)) == [X(P("z", 1)), CU(P("q", 5), SR(1, "z"))]
    with pytest.raises(ValueError):
        rename(SR(0, "c"), {"c": P("q", 5)})


def test_text_round_trip():
    rng = random.Random(7)
    for _ in range(100):
        sizes, env, prog, _ = random_case(rng)
        text = format_program(prog, sizes)
        sizes2, prog2 = parse_program(text)
        assert sizes2 == sizes
        assert format_program(prog2, sizes2) == text


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_program("var x 2\nFOO x[0]\n")
    with pytest.raises(ParseError):
        parse_program("var x 2\nX x[0\n")


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31))
def test_generated_programs_typecheck(seed):
    sizes, env, prog, out = random_case(random.Random(seed))
    assert typecheck(sizes, env, prog) == out
