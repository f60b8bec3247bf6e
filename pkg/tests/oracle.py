"""Independent reference arithmetic for TOY-17, written straight from the formulas.

Uses hashlib and Fermat inversion only; nothing is imported from the package.
"""

import hashlib

Q, A = 17, 2
P = (5, 1)
N = 19


def h(*parts):
    d = hashlib.sha256()
    for p in parts:
        d.update(len(p).to_bytes(4, "big") + p)
    return d.digest()


def xor(a, b):
    w = max(len(a), len(b))
    return bytes(x ^ y for x, y in zip(a.ljust(w, b"\0"), b.ljust(w, b"\0")))


def add(p1, p2):
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    (x1, y1), (x2, y2) = p1, p2
    if x1 == x2 and (y1 + y2) % Q == 0:
        return None
    if p1 == p2:
        lam = (3 * x1 * x1 + A) * pow(2 * y1, Q - 2, Q) % Q
    else:
        lam = (y2 - y1) * pow((x2 - x1) % Q, Q - 2, Q) % Q
    x3 = (lam * lam - x1 - x2) % Q
    return (x3, (lam * (x1 - x3) - y1) % Q)


def mul(k, pt=P):
    acc = None
    for _ in range(k % N):
        acc = add(acc, pt)
    return acc


def pt(p):
    return b"\x00\x00\x00" if p is None else bytes([4, p[0], p[1]])


def sc(k):
    return bytes([k])


def ts(t):
    return t.to_bytes(8, "big")


def blob(b):
    return len(b).to_bytes(4, "big") + b
