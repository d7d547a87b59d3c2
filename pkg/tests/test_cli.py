import json
import subprocess
import sys
from importlib import resources

import pytest

from oqasm import oracles
from oqasm.circuit import parse_qasm
from oqasm.cli import main
from oqasm.core import format_program

PROGRAMS = resources.files("oqasm") / "programs"


def call(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_reports_qubits(capsys):
    code, out, _ = call(capsys, "gen", "rz_adder", "--bits", "16")
    assert code == 0 and json.loads(out)["qubits"] == 32
    _, out, _ = call(capsys, "gen", "mod_mult_const", "--bits", "8", "--c", "173", "--n", "255",
                     "--flavor", "qft")
    assert json.loads(out)["qubits"] == 19
    _, out, _ = call(capsys, "gen", "rz_adder", "--bits", "1")
    assert json.loads(out)["qubits"] == 2


def test_gen_writes_qasm(capsys, tmp_path):
    path = tmp_path / "add.qasm"
    code, _, _ = call(capsys, "gen", "toff_adder", "--bits", "3", "--level", "base", "-o", str(path))
    assert code == 0
    circ = parse_qasm(path.read_text())
    assert circ.num_qubits == 7 and "ccx" not in path.read_text()


def test_compile_empty_main(capsys, tmp_path):
    src = tmp_path / "empty.qimp"
    src.write_text("void main() { }\n")
    qasm, man = tmp_path / "e.qasm", tmp_path / "e.json"
    code, _, _ = call(capsys, "compile", str(src), "-o", str(qasm), "--manifest", str(man))
    assert code == 0
    assert qasm.read_text().splitlines() == ['OPENQASM 2.0;', 'include "qelib1.inc";', "qreg q[0];"]
    assert json.loads(man.read_text())["sz"] == 16


def test_compile_sine(capsys, tmp_path):
    qasm, man = tmp_path / "s.qasm", tmp_path / "s.json"
    code, out, _ = call(capsys, "compile", str(PROGRAMS / "sin.qimp"), "--param", "n=1",
                        "-o", str(qasm), "--manifest", str(man))
    assert code == 0
    manifest = json.loads(man.read_text())
    assert parse_qasm(qasm.read_text()).num_qubits == manifest["resources"]["qubits"]
    assert manifest["theta"]["x8"]["qubits"][1] - manifest["theta"]["x8"]["qubits"][0] == 16


def test_run_oqasm_adder(capsys, tmp_path):
    src = tmp_path / "add.oqasm"
    spec = oracles.rz_adder(4)
    src.write_text(format_program(spec.program, spec.sizes))
    code, out, err = call(capsys, "run", str(src), "--inputs", "a=3", "--inputs", "b=5")
    assert code == 0, err
    assert json.loads(out)["b"] == 8
    _, out, _ = call(capsys, "run", str(src), "--inputs", "a=0", "--inputs", "b=5")
    assert json.loads(out)["b"] == 5


def test_run_sine_at_zero(capsys):
    code, out, _ = call(capsys, "run", str(PROGRAMS / "sin.qimp"), "--inputs", "x8=0", "--param", "n=2")
    assert code == 0 and json.loads(out)["ret"]["value"] == 0


def test_run_compiled_matches(capsys):
    path = str(PROGRAMS / "collatz.qimp")
    _, a, _ = call(capsys, "run", path, "--inputs", "x=7")
    _, b, _ = call(capsys, "run", path, "--inputs", "x=7", "--compiled")
    assert json.loads(a) == json.loads(b) == {"ret": 22}


def test_test_command(capsys, tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = call(capsys, "test", "rz_adder", "--bits", "8", "--trials", "50", "--json", str(report))
    assert code == 0 and out.startswith("PASS")
    assert json.loads(report.read_text())[0]["passed"]
    code, out, _ = call(capsys, "test", "rz_adder", "--trials", "0")
    assert code == 0
    code, out, _ = call(capsys, "test", "aqft_adder", "--bits", "8", "--drop", "1", "--trials", "300")
    assert code == 0 and "max error 1" in out


def test_count(capsys):
    code, out, _ = call(capsys, "count", "rz_adder_const", "--bits", "16", "--c", "5")
    assert code == 0 and json.loads(out)["qubits"] == 16


@pytest.mark.parametrize("argv", [
    ["gen", "no_such_op"],
    ["gen", "rz_adder", "--bits", "x"],
    ["run", "/nonexistent.qimp"],
    ["test", "mod_mult_const", "--bits", "8", "--c", "3", "--n", "255"],
])
def test_user_errors_exit_1(capsys, argv):
    code, _, err = call(capsys, *argv)
    assert code == 1 and err


def test_compile_error_names_file_and_line(capsys, tmp_path):
    src = tmp_path / "bad.qimp"
    src.write_text("Q nat z;\nQ nat y;\nvoid main() {\n  z = z * y;\n}\n")
    code, _, err = call(capsys, "compile", str(src))
    assert code == 1 and f"{src}:4:" in err


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "oqasm.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("compile", "gen", "test", "run", "count"):
        assert cmd in out.stdout
