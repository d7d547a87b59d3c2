"""
Command-line driver: compile, gen, test, run and count.

Exit status is 0 on success, 1 for a user or program error (bad flags,
parse/type/compile errors, failing tests) and 2 for an internal fault.
"""
from __future__ import annotations

import json
import sys
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

import click

from . import oracles
from .circuit import count_resources, emit_qasm, initial_map, lower, translate
from .core import NOR, ParseError as OqasmParseError, TypeCheckError, parse_program, typecheck
from .oqimp import (FLAGS, CompileError, InvError, OqimpRuntimeError, OqimpTypeError, ParseError,
                    compile_program, interpret, parse_file)
from .oqimp import values as V
from .sim import run_on_naturals
from .testkit import TrialConfig, max_error, run_pbt, write_json, write_junit

USER_ERRORS = (ParseError, OqasmParseError, OqimpTypeError, InvError, CompileError,
               OqimpRuntimeError, TypeCheckError, ValueError, KeyError, OSError)


class Failed(Exception):
    """A command ran but its verdict is negative (exit 1)."""


class UserError(Exception):
    pass


@contextmanager
def diagnostics(path):
    """Prefix user errors with the file name (and line, when known)."""
    try:
        yield
    except USER_ERRORS as exc:
        line = getattr(exc, "line", 0)
        msg = str(exc)
        if line and msg.startswith(f"line {line}: "):
            msg = msg[len(f"line {line}: "):]
        where = f"{path}:{line}" if line else str(path)
        raise UserError(f"{where}: {msg}") from exc


def _number(text: str):
    text = text.strip()
    if "." in text or "/" in text:
        return Fraction(text)
    return int(text, 0)


def _pairs(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise click.BadParameter(f"expected name=value, got {item!r}")
        k, v = item.split("=", 1)
        vals = [_number(x) for x in v.split(",")]
        out[k.strip()] = vals if len(vals) > 1 else vals[0]
    return out


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str)


def _decode(base: str, bits: int, sz: int):
    if base == "fixedp":
        return {"bits": bits, "value": float(V.fixedp_value(bits, sz))}
    return bits


def _plain(v):
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, list):
        return [_plain(x) for x in v]
    return v


def _spec_params(bits, c, n, flavor, drop, form) -> dict:
    out = {"bits": bits}
    for k, v in (("c", c), ("n", n), ("flavor", flavor), ("drop", drop), ("form", form)):
        if v is not None:
            out[k] = v
    return out


operator_options = [
    click.option("--bits", type=int, default=16, show_default=True, help="register width"),
    click.option("--c", "c", type=int, default=None, help="classical constant"),
    click.option("--n", "n", type=int, default=None, help="modulus or divisor"),
    click.option("--flavor", type=click.Choice(["qft", "aqft", "toff"]), default=None),
    click.option("--drop", type=int, default=None, help="AQFT rotations dropped"),
    click.option("--form", type=click.Choice(oracles.COMPARATOR_FORMS), default=None,
                 help="comparator form"),
]


def with_operator_options(f):
    for opt in reversed(operator_options):
        f = opt(f)
    return f


@click.group()
def cli():
    """OQASM toolchain: oracle assembly, arithmetic library and the OQIMP compiler."""


@cli.command("compile")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--flag", type=click.Choice(FLAGS), default="qft", show_default=True)
@click.option("--size", "sz", type=int, default=16, show_default=True, help="bits per nat/fixedp")
@click.option("--param", "params", multiple=True, help="main parameter, name=value")
@click.option("--level", type=click.Choice(["macro", "base"]), default="macro", show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="QASM path (default: FILE stem + .qasm)")
@click.option("--manifest", type=click.Path(dir_okay=False), default=None,
              help="manifest path (default: FILE stem + .manifest.json)")
def compile_cmd(file, flag, sz, params, level, output, manifest):
    """Compile an OQIMP program to OpenQASM 2.0 plus a JSON manifest."""
    with diagnostics(file):
        out = compile_program(parse_file(file), flag, sz, _pairs(params), check=True)
    _, circ = translate(out.sizes, initial_map(out.sizes), out.program)
    circ = lower(circ, level)
    stem = Path(file).stem
    qasm_path = Path(output or f"{stem}.qasm")
    man_path = Path(manifest or f"{stem}.manifest.json")
    qasm_path.write_text(emit_qasm(circ))
    man = dict(out.manifest)
    man["resources"] = count_resources(circ, "macro")
    man_path.write_text(_dump(man) + "\n")
    click.echo(f"{qasm_path}: {man['resources']['qubits']} qubits, {man['resources']['gates']} gates")
    click.echo(f"{man_path}")


@cli.command()
@click.argument("operator")
@with_operator_options
@click.option("--level", type=click.Choice(["macro", "base"]), default="macro", show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None, help="write QASM here")
def gen(operator, bits, c, n, flavor, drop, form, level, output):
    """Instantiate a library operator; print its resource report as JSON."""
    spec = oracles.build(operator, **_spec_params(bits, c, n, flavor, drop, form))
    _, circ = translate(spec.sizes, initial_map(spec.sizes), spec.program)
    if output:
        Path(output).write_text(emit_qasm(lower(circ, level)))
    report = count_resources(circ, level)
    report["operator"] = spec.name
    report["variables"] = spec.sizes
    click.echo(_dump(report))


@cli.command()
@click.argument("target")
@with_operator_options
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=None, help="defaults to $SEED, else 0")
@click.option("--json", "json_path", type=click.Path(dir_okay=False), default=None)
@click.option("--junit", "junit_path", type=click.Path(dir_okay=False), default=None)
def test(target, bits, c, n, flavor, drop, form, trials, seed, json_path, junit_path):
    """Differential test of a library operator against its classical function.

    aqft_adder is measured against the exact adder instead; it passes when the
    maximum error is within 2^drop - 1.
    """
    params = _spec_params(bits, c, n, flavor, drop, form)
    if target == "aqft_adder":
        d = params.get("drop", 1)
        exact = oracles.rz_adder(bits)
        report = max_error(exact, oracles.aqft_adder(bits, d), trials, seed)
        report.passed = report.max_abs_error <= (1 << d) - 1
        report.detail = f"bound {(1 << d) - 1}"
    else:
        report = run_pbt(TrialConfig(target, params, trials, seed))
    if json_path:
        write_json([report], json_path)
    if junit_path:
        write_junit([report], junit_path)
    click.echo(report.summary())
    if not report.passed:
        raise Failed(report.name)


def _run_oqasm(file, inputs):
    sizes, prog = parse_program(Path(file).read_text())
    typecheck(sizes, {v: NOR for v in sizes}, prog)
    return run_on_naturals(sizes, prog, inputs)


@cli.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--inputs", "inputs", multiple=True,
              help="global input, name=value; integers are bit patterns, decimals fixedp values, "
                   "commas separate array elements")
@click.option("--param", "params", multiple=True, help="main parameter, name=value")
@click.option("--size", "sz", type=int, default=16, show_default=True)
@click.option("--compiled", is_flag=True, help="simulate the compiled circuit instead of interpreting")
@click.option("--flag", type=click.Choice(FLAGS), default="qft", show_default=True)
def run(file, inputs, params, sz, compiled, flag):
    """Run an OQIMP (.qimp) or OQASM (.oqasm) program; print decoded values as JSON."""
    values = _pairs(inputs)
    if not file.endswith(".qimp"):
        with diagnostics(file):
            click.echo(_dump(_run_oqasm(file, values)))
        return
    with diagnostics(file):
        prog = parse_file(file)
        if compiled:
            ret = compile_program(prog, flag, sz, _pairs(params)).output(values)
        else:
            ret = interpret(prog, values, sz, _pairs(params)).ret
    ret_t = prog.main.ret
    if ret_t is not None and ret_t.mode == "Q":
        ret = [_decode(ret_t.base, r, sz) for r in ret] if isinstance(ret, list) else \
            _decode(ret_t.base, ret, sz)
    click.echo(_dump({"ret": _plain(ret)}))


@cli.command()
@click.argument("target")
@with_operator_options
@click.option("--size", "sz", type=int, default=16, show_default=True, help="OQIMP bit width")
@click.option("--flag", type=click.Choice(FLAGS), default="qft", show_default=True)
@click.option("--param", "params", multiple=True, help="main parameter, name=value")
@click.option("--level", type=click.Choice(["macro", "base"]), default="macro", show_default=True)
def count(target, bits, c, n, flavor, drop, form, sz, flag, params, level):
    """Qubit and gate counts for a .qimp/.oqasm file or a library operator."""
    if target.endswith(".qimp"):
        with diagnostics(target):
            out = compile_program(parse_file(target), flag, sz, _pairs(params))
        sizes, prog = out.sizes, out.program
    elif target.endswith(".oqasm"):
        with diagnostics(target):
            sizes, prog = parse_program(Path(target).read_text())
    else:
        spec = oracles.build(target, **_spec_params(bits, c, n, flavor, drop, form))
        sizes, prog = spec.sizes, spec.program
    _, circ = translate(sizes, initial_map(sizes), prog)
    click.echo(_dump(count_resources(circ, level)))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="oqasm", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except Failed:
        return 1
    except UserError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except USER_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        click.echo(f"error: {msg}", err=True)
        return 1
    except Exception as exc:  # anything else is a bug in the toolchain
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return 2
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
