"""
Compiling a sine oracle
=======================

sin.qimp computes sin(x) from x/8 with a Taylor loop. The loop bound is
classical, so the compiler unrolls it and folds every factorial and power
of 8 into constants. Only the fixedp arithmetic on x8 becomes circuitry.
"""
import math
from fractions import Fraction
from importlib import resources

from oqasm.circuit import count_resources, initial_map, translate
from oqasm.oqimp import compile_program, interpret, parse
from oqasm.oqimp.values import fixedp_value

SZ = 16
prog = parse((resources.files("oqasm") / "programs" / "sin.qimp").read_text())

for n in (1, 2):
    out = compile_program(prog, "qft", SZ, {"n": n})
    _, circ = translate(out.sizes, initial_map(out.sizes), out.program)
    r = count_resources(circ)
    print(f"n={n}: {r['qubits']} qubits, {r['gates']} gates, ops {sorted(set(out.manifest['ops']))}")

# The circuit and the source-level interpreter give the same bits.
# With n=2 the series is short, so accuracy falls off past x = 1.
out = compile_program(prog, "qft", SZ, {"n": 2})
for x in (0.1, 0.5, 1.0, 2.0, 3.0):
    x8 = Fraction(x / 8).limit_denominator(1 << 20)
    bits = out.output({"x8": x8})
    assert bits == interpret(prog, {"x8": x8}, SZ, {"n": 2}).ret
    print(f"sin({x}) ~ {float(fixedp_value(bits, SZ)):+.4f}   (math.sin {math.sin(x):+.4f})")
