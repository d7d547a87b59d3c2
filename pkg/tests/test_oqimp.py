import random
from fractions import Fraction
from importlib import resources

import pytest
from hypothesis import given, settings, strategies as st

from oqasm.core import SR, Skip, X, leaves
from oqasm.oqimp import (CompileError, InvError, OqimpRuntimeError, OqimpTypeError, ParseError,
                         check_inv, compile_program, interpret, parse, typecheck_program)
from oqasm.oqimp.ast import Assign, Call

PROGRAMS = resources.files("oqasm") / "programs"


def corpus(name):
    return parse((PROGRAMS / name).read_text())


def checked(src):
    prog = parse(src)
    typecheck_program(prog)
    check_inv(prog)
    return prog


# parsing

def test_quarter_round_shape():
    f = corpus("chacha_qr.qimp").functions[0]
    assert len(f.body) == 12 and f.result is not None


def test_empty_main_is_valid():
    checked("void main() { }")


def test_pow_call_assignment():
    s = parse("Q nat x; Q nat y; void main() { x = pow(y, 3); }").functions[0].body[0]
    assert isinstance(s, Assign) and isinstance(s.expr, Call) and s.expr.name == "pow"


@pytest.mark.parametrize("src", ["void main() { x = ; }", "Q nat x", "void main() { a < b < c; }",
                                 "void main() { return; x += 1; }", ""])
def test_syntax_errors_have_lines(src):
    with pytest.raises(ParseError) as e:
        parse(src)
    assert e.value.line >= 1


# typing and inv

@pytest.mark.parametrize("src", [
    "Q nat z; Q nat y; void main() { z = z * y; }",
    "Q nat x; C nat k; void main() { if (x < 3) { k = 1; } }",
    "Q nat x; void main() { x = y; }",
    "Q nat x; Q nat y; void main() { x = x / y; }",
])
def test_type_errors(src):
    with pytest.raises(OqimpTypeError):
        typecheck_program(parse(src))


INV_CASES = {
    "no predecessor": ("a = x * y; inv(z);", "predecessor"),
    "conditional predecessor": ("if (x < y) { a = x * y; } else { z = x * y; } inv(z);", "predecessor"),
    "operand written": ("z = x * y; x += 1; inv(z);", "operand"),
    "too many": ("z = x * y; inv(z); inv(z);", "count"),
}


@pytest.mark.parametrize("body,kind", INV_CASES.values(), ids=list(INV_CASES))
def test_inv_rejections(body, kind):
    with pytest.raises(InvError) as e:
        checked(f"Q nat x; Q nat y; Q nat z; Q nat a; void main() {{ {body} }}")
    assert e.value.kind == kind


def test_sequenced_invs_match_assignments():
    checked("Q nat x; Q nat y; Q nat z; void main() { z += x; z = x * y; inv(z); inv(z); }")


# interpreter

def test_empty_loop_leaves_store():
    prog = checked("Q nat z; void main() { for (C nat i = 0; i < 0; i++) { z += 1; } }")
    assert interpret(prog, {"z": 5}).store["z"] == 5


def test_assign_then_inv_reverts():
    prog = checked("Q nat x; Q nat y; Q nat z; Q nat main() { z = x * y; inv(z); return z; }")
    assert interpret(prog, {"x": 3, "y": 4}).ret == 0
    prog = checked("Q nat x; Q nat y; Q nat z; Q nat main() { z = x * y; return z; }")
    assert interpret(prog, {"x": 3, "y": 4}).ret == 12


def test_division_by_zero_is_an_error():
    prog = checked("Q nat x; C nat d; Q nat r; Q nat main(C nat k) { r = x / k; return r; }")
    with pytest.raises(OqimpRuntimeError):
        interpret(prog, {"x": 3}, params={"k": 0})


def test_out_of_bounds_index():
    prog = checked("Q nat x[2]; Q nat main(C nat k) { Q nat r; r = x[k]; return r; }")
    with pytest.raises(OqimpRuntimeError):
        interpret(prog, {"x": [1, 2]}, params={"k": 2})


def test_collatz():
    prog = corpus("collatz.qimp")
    assert interpret(prog, {"x": 6}).ret == 3
    assert interpret(prog, {"x": 7}).ret == 22


# compiler

def agree(prog, inputs, sz=16, params=None, flags=("qft", "classical")):
    want = interpret(prog, inputs, sz, params).ret
    for flag in flags:
        c = compile_program(prog, flag, sz, params, check=True)
        regs = c.run(inputs)
        assert c.output(inputs) == want, (flag, inputs)
        assert all(v == 0 for v in regs["scratch"].values()), "scratch not cleaned"
    return want


@pytest.mark.parametrize("x", [0, 1, 6, 7, 1000])
def test_collatz_compiles(x):
    agree(corpus("collatz.qimp"), {"x": x})


def test_marker_compiles():
    prog = corpus("marker.qimp")
    assert agree(prog, {"x": 42}, params={"target": 42}) == 1
    assert agree(prog, {"x": 41}, params={"target": 42}) == 0


def test_quarter_round_compiles():
    rng = random.Random(5)
    inputs = {f"x{i}": rng.getrandbits(32) for i in range(1, 5)}
    agree(corpus("chacha_qr.qimp"), inputs, sz=32, flags=("classical",))


@pytest.mark.parametrize("name,var", [("sin.qimp", "x8"), ("cos.qimp", "x8"), ("arcsine.qimp", "x")])
def test_series_compile(name, var):
    prog = corpus(name)
    for v in (Fraction(0), Fraction(1, 16), Fraction(3, 10)):
        agree(prog, {var: v}, params={"n": 1})


def test_calls_uncompute_callee_state():
    src = """Q nat x;
    Q nat sq() { Q nat t; t = x * x; Q nat u; u = t + 1; return u; }
    Q nat main() { Q nat r; r = sq(); return r; }"""
    prog = checked(src)
    assert agree(prog, {"x": 9}) == 82
    c = compile_program(prog, "qft", 16)
    regs = c.run({"x": 9})
    assert regs["x"] == 9
    assert all(regs[k] == 0 for k in regs if k.startswith("sq."))


def test_classical_guard_compiles_taken_branch_only():
    both = checked("Q nat x; Q nat main(C nat k) { Q nat r; if (k < 3) { r = x + 1; } else { r = x * 2; } return r; }")
    one = checked("Q nat x; Q nat main(C nat k) { Q nat r; r = x + 1; return r; }")
    a = compile_program(both, "qft", 8, {"k": 1})
    b = compile_program(one, "qft", 8, {"k": 1})
    assert a.program == b.program


def test_classical_program_emits_no_gates():
    prog = checked("Q nat x; C nat f(C nat a) { C nat b = a * 3; return b + 1; } "
                   "C nat main() { C nat r = f(4); return r; }")
    c = compile_program(prog)
    assert all(isinstance(leaf, Skip) for leaf in leaves(c.program))
    assert c.output({}) == 13 == interpret(prog, {}).ret


def test_constant_product_is_folded():
    prog = checked("Q fixedp main(C fixedp x, C fixedp y) { return (x * y) / 3; }")
    params = {"x": Fraction(1, 2), "y": Fraction(1, 4)}
    c = compile_program(prog, "qft", 16, params)
    ops = [leaf for leaf in leaves(c.program) if not isinstance(leaf, Skip)]
    assert c.sizes == {"ret": 16}
    assert ops and all(isinstance(op, X) for op in ops)
    assert c.output() == interpret(prog, {}, 16, params).ret


def test_missing_parameter():
    prog = corpus("sin.qimp")
    with pytest.raises(CompileError):
        compile_program(prog, "qft", 16, {})


# properties

EXPRS = ["x + y", "x - y", "x * y", "x * 3", "x / 3", "x % 5", "x ^ y", "x + 7"]


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(EXPRS), st.integers(0, 255), st.integers(0, 255),
       st.sampled_from(["qft", "classical"]))
def test_compiled_binops_match_interpreter(expr, x, y, flag):
    prog = checked(f"Q nat x; Q nat y; Q nat main() {{ Q nat r; r = {expr}; return r; }}")
    want = interpret(prog, {"x": x, "y": y}, 8).ret
    assert compile_program(prog, flag, 8).output({"x": x, "y": y}) == want


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 255), st.integers(0, 255), st.sampled_from(["<", "==", "<=", "!="]))
def test_quantum_if_matches_interpreter(x, y, op):
    prog = checked(f"Q nat x; Q nat y; Q nat main() {{ Q nat r; if (x {op} y) {{ r += 5; }} "
                   f"else {{ r = x + 1; }} return r; }}")
    want = interpret(prog, {"x": x, "y": y}, 8).ret
    for flag in ("qft", "classical"):
        c = compile_program(prog, flag, 8)
        assert c.output({"x": x, "y": y}) == want
        assert all(v == 0 for v in c.run({"x": x, "y": y})["scratch"].values())
