"""Independent classical references used by the tests."""
import struct

MASK32 = 0xFFFFFFFF


def rotl32(v, c):
    return ((v << c) & MASK32) | (v >> (32 - c))


def quarter_round(a, b, c, d):
    a = (a + b) & MASK32; d ^= a; d = rotl32(d, 16)
    c = (c + d) & MASK32; b ^= c; b = rotl32(b, 12)
    a = (a + b) & MASK32; d ^= a; d = rotl32(d, 8)
    c = (c + d) & MASK32; b ^= c; b = rotl32(b, 7)
    return a, b, c, d


def _qr(s, i, j, k, l):
    s[i], s[j], s[k], s[l] = quarter_round(s[i], s[j], s[k], s[l])


def double_round(state):
    s = list(state)
    _qr(s, 0, 4, 8, 12)
    _qr(s, 1, 5, 9, 13)
    _qr(s, 2, 6, 10, 14)
    _qr(s, 3, 7, 11, 15)
    _qr(s, 0, 5, 10, 15)
    _qr(s, 1, 6, 11, 12)
    _qr(s, 2, 7, 8, 13)
    _qr(s, 3, 4, 9, 14)
    return s


def block(state):
    """The 20-round block function with the final addition of the input."""
    s = list(state)
    for _ in range(10):
        s = double_round(s)
    return [(x + y) & MASK32 for x, y in zip(s, state)]


def initial_state(key: bytes, counter: int, nonce: bytes):
    consts = [0x61707865, 0x3320646E, 0x79622D32, 0x6B206574]
    return consts + list(struct.unpack("<8I", key)) + [counter] + list(struct.unpack("<3I", nonce))


def serialize(state) -> bytes:
    return struct.pack("<16I", *state)


# fixed-point sine ------------------------------------------------------------
#
# Values are integers m standing for m / 2^F with F = sz - 1; each product
# rounds toward minus infinity and results wrap to sz bits, as in hardware.

def _wrap(m, sz):
    m &= (1 << sz) - 1
    return m - (1 << sz) if m >> (sz - 1) else m


def sine_fixed(m, terms, sz=16):
    """8 * sum_{k<terms} (-1)^k 8^(2k)/(2k+1)! * (x/8)^(2k+1), with x/8 = m / 2^(sz-1).

    Returns (result, steps), where steps counts the rounding operations.
    """
    from math import factorial
    f = sz - 1
    steps = 0
    acc = m
    for k in range(1, terms):
        p = m
        for _ in range(2 * k):
            p = _wrap((p * m) >> f, sz)
            steps += 1
        coef = (8 ** (2 * k) << f) // factorial(2 * k + 1)
        t = _wrap((coef * p) >> f, sz)
        steps += 1
        acc = _wrap(acc - t if k % 2 else acc + t, sz)
    out = _wrap((8 << f) * acc >> f, sz)
    return out, steps + 1
