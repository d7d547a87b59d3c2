"""
Three ways to add
=================

A QFT adder, its approximate variant and a ripple-carry adder, side by
side: qubit and gate counts, then a random differential test of each.
"""
from oqasm import oracles
from oqasm.circuit import count_resources, initial_map, translate
from oqasm.testkit import TrialConfig, max_error, run_pbt

BITS = 16

# The same job, three circuits. Counts are taken after lowering to
# single-qubit rotations, H and CX.
specs = [oracles.rz_adder(BITS), oracles.aqft_adder(BITS, 2), oracles.toff_adder(BITS)]
for spec in specs:
    _, circ = translate(spec.sizes, initial_map(spec.sizes), spec.program)
    r = count_resources(circ, "base")
    print(f"{spec.name:12s} {r['qubits']:3d} qubits {r['gates']:6d} gates")

# Exact adders agree with (a + b) mod 2^16 on every trial
for name in ("rz_adder", "toff_adder"):
    print(run_pbt(TrialConfig(name, {"bits": BITS}, trials=500, seed=1)).summary())

# Dropping rotations costs accuracy, but never more than 2^drop - 1
for drop in (1, 2, 3):
    r = max_error(oracles.rz_adder(BITS), oracles.aqft_adder(BITS, drop), 500, seed=1)
    print(f"drop {drop}: max error {r.max_abs_error} (bound {2 ** drop - 1})")
