"""
ChaCha20 as an oracle
=====================

The quarter round compiles to a reversible circuit on four 32-bit words.
We check it against a plain Python quarter round, using the test vector
from RFC 7539.
"""
from importlib import resources

from oqasm.circuit import count_resources, initial_map, translate
from oqasm.oqimp import compile_program, parse

M = 0xFFFFFFFF


def rotl(v, c):
    return ((v << c) | (v >> (32 - c))) & M


def quarter_round(a, b, c, d):
    a = (a + b) & M; d = rotl(d ^ a, 16)
    c = (c + d) & M; b = rotl(b ^ c, 12)
    a = (a + b) & M; d = rotl(d ^ a, 8)
    c = (c + d) & M; b = rotl(b ^ c, 7)
    return [a, b, c, d]


prog = parse((resources.files("oqasm") / "programs" / "chacha_qr.qimp").read_text())
for flag in ("qft", "classical"):
    out = compile_program(prog, flag, 32)
    _, circ = translate(out.sizes, initial_map(out.sizes), out.program)
    r = count_resources(circ)
    print(f"{flag:9s}: {r['qubits']} qubits, {r['gates']} gates")

words = [0x11111111, 0x01020304, 0x9B8D6F43, 0x01234567]
got = out.output({f"x{i + 1}": w for i, w in enumerate(words)})
print(" ".join(f"{w:08x}" for w in got))
assert got == quarter_round(*words) == [0xEA2A92F4, 0xCB1CF8CE, 0x4581472E, 0x5881C4BB]
