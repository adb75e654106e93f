"""Cayley tables for the groups of order at most 8 (identity at index 0)."""

from __future__ import annotations

import itertools

import numpy as np


def _table(elements, op) -> np.ndarray:
    index = {e: i for i, e in enumerate(elements)}
    n = len(elements)
    t = np.empty((n, n), dtype=int)
    for i, a in enumerate(elements):
        for j, b in enumerate(elements):
            t[i, j] = index[op(a, b)]
    return t


def cyclic(n: int) -> np.ndarray:
    a = np.arange(n)
    return (a[:, None] + a[None, :]) % n


def abelian(*orders: int) -> np.ndarray:
    """Direct product of cyclic groups, elements in lexicographic order."""
    elements = list(itertools.product(*(range(m) for m in orders)))
    return _table(elements, lambda a, b: tuple((x + y) % m for x, y, m in zip(a, b, orders)))


def dihedral(m: int) -> np.ndarray:
    """Symmetries of the m-gon: pairs (s, r) meaning ``f^s r^k``."""
    elements = [(s, k) for s in range(2) for k in range(m)]

    def op(a, b):
        s1, k1 = a
        s2, k2 = b
        return ((s1 + s2) % 2, (k1 * (-1) ** s2 + k2) % m)

    # identity (0, 0) is first
    return _table(elements, op)


def quaternion() -> np.ndarray:
    # unit quaternions as (w, x, y, z) integer tuples
    basis = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]
    elements = [tuple(s * c for c in b) for b in basis for s in (1, -1)]

    def op(a, b):
        a0, a1, a2, a3 = a
        b0, b1, b2, b3 = b
        return (
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        )

    return _table(elements, op)


def small_groups() -> dict[str, np.ndarray]:
    """Every group of order 1 to 8 up to isomorphism."""
    groups = {f"Z{n}": cyclic(n) for n in range(1, 9)}
    groups["Z2xZ2"] = abelian(2, 2)
    groups["Z4xZ2"] = abelian(4, 2)
    groups["Z2xZ2xZ2"] = abelian(2, 2, 2)
    groups["S3"] = dihedral(3)
    groups["D4"] = dihedral(4)
    groups["Q8"] = quaternion()
    return groups
