"""Independent oracles: plain Python / real-vector recomputations.

Nothing here touches the block-matrix machinery of the package.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# -- commutative algebras as weighted functions ---------------------------------------


class CommutativeOracle:
    """Functions on points with weights ``w_i`` and a structure tensor on point masses.

    ``conv[a][b][c]`` is the value ``(1_a * 1_b)(c)`` of the convolution of the
    indicator functions of points ``a`` and ``b``.
    """

    def __init__(self, weights, conv):
        self.w = np.asarray(weights, dtype=float)
        self.conv = np.asarray(conv, dtype=float)

    @classmethod
    def group(cls, table):
        n = len(table)
        conv = np.zeros((n, n, n))
        for a in range(n):
            for b in range(n):
                conv[a][b][table[a][b]] = 1.0
        return cls(np.ones(n), conv)

    @classmethod
    def fusion(cls, N, dims):
        # indicator of point a has coordinate sqrt(w_a) = d_a on the a-th basis vector
        n = len(dims)
        conv = np.zeros((n, n, n))
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    conv[a][b][c] = dims[a] * dims[b] * N[a][b][c] / dims[c]
        return cls([d * d for d in dims], conv)

    def convolve(self, f, g):
        return np.einsum("a,b,abc->c", f, g, self.conv)

    def norm(self, f, p):
        if p == math.inf:
            return float(np.max(np.abs(f)))
        return float(np.sum(self.w * np.abs(f) ** p) ** (1.0 / p))

    def trace(self, f):
        return float(np.sum(self.w * f))

    def entropy(self, f):
        return float(-sum(w * v * math.log(v) for w, v in zip(self.w, f) if v > 0))

    def support(self, f, rank_tol=1e-8):
        top = max(f)
        return float(sum(w for w, v in zip(self.w, f) if v > rank_tol * top))


# -- fusion ring axioms ------------------------------------------------------------------


def fusion_failures(N, dual):
    """Set of (identity, index tuple) failures, 0-indexed, by explicit loops."""
    n = len(N)
    out = set()
    for k, j, i in itertools.product(range(n), repeat=3):
        if N[k][j][i] < 0:
            out.add(("nonnegative", (k, j, i)))
    for k in range(n):
        if dual[dual[k]] != k:
            out.add(("dual_involution", (k,)))
    if dual[0] != 0:
        out.add(("dual_involution", (n,)))
    for k, j, i in itertools.product(range(n), repeat=3):
        bad = (k == 0 and N[k][j][i] != int(i == j)) or (j == 0 and N[k][j][i] != int(i == k))
        if bad:
            out.add(("unit", (k, j, i)))
    for k, j in itertools.product(range(n), repeat=2):
        if N[k][j][0] != int(j == dual[k]):
            out.add(("duality", (k, j)))
    for a, b, c, t in itertools.product(range(n), repeat=4):
        lhs = sum(N[a][b][s] * N[s][c][t] for s in range(n))
        rhs = sum(N[b][c][s] * N[a][s][t] for s in range(n))
        if lhs != rhs:
            out.add(("associativity", (a, b, c, t)))
    for k, j, i in itertools.product(range(n), repeat=3):
        if N[i][dual[j]][k] != N[k][j][i]:
            out.add(("frobenius_reciprocity", (k, j, i)))
    return out


# -- smooth entropy on two points -------------------------------------------------------


def two_point_smooth_entropy(a, b, p, eps, n_angles=400_001):
    """Max of ``-u log u - v log v`` over ``u, v >= 0`` with ``||(u-a, v-b)||_p <= eps``.

    The concave objective peaks at ``(1/e, 1/e)``; otherwise the maximum sits
    on the boundary of the ball, which is swept densely (clipped at 0).
    """
    h = lambda t: 0.0 if t <= 0 else -t * math.log(t)
    e = math.exp(-1.0)
    if p == math.inf:
        inside = abs(e - a) <= eps and abs(e - b) <= eps
    else:
        inside = abs(e - a) ** p + abs(e - b) ** p <= eps**p
    if inside:
        return 2 * h(e)
    phi = np.linspace(0.0, 2 * np.pi, n_angles)
    c, s = np.cos(phi), np.sin(phi)
    if p == math.inf:
        # boundary of the square, parametrized by angle
        m = np.maximum(np.abs(c), np.abs(s))
        du, dv = eps * c / m, eps * s / m
    else:
        du = eps * np.sign(c) * np.abs(c) ** (2.0 / p)
        dv = eps * np.sign(s) * np.abs(s) ** (2.0 / p)
    u = np.clip(a + du, 0.0, None)
    v = np.clip(b + dv, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = -np.where(u > 0, u * np.log(u), 0.0) - np.where(v > 0, v * np.log(v), 0.0)
    return float(vals.max())


def two_point_conv_entropy_min(x, y, p, eps, eta, n_grid=41):
    """Grid minimum of ``H(z*w)`` on the group algebra of Z/2 over the two balls."""
    a = np.linspace(-eps, eps, n_grid)
    b = np.linspace(-eta, eta, n_grid)
    Z0, Z1, W0, W1 = np.meshgrid(x[0] + a, x[1] + a, y[0] + b, y[1] + b, indexing="ij")

    def inside(u0, u1, c, r):
        if p == math.inf:
            return np.maximum(np.abs(u0 - c[0]), np.abs(u1 - c[1])) <= r + 1e-15
        return np.abs(u0 - c[0]) ** p + np.abs(u1 - c[1]) ** p <= r**p + 1e-15

    ok = inside(Z0, Z1, x, eps) & inside(W0, W1, y, eta) & (Z0 >= 0) & (Z1 >= 0) & (W0 >= 0) & (W1 >= 0)
    u0 = Z0 * W0 + Z1 * W1
    u1 = Z0 * W1 + Z1 * W0
    with np.errstate(divide="ignore", invalid="ignore"):
        H = -np.where(u0 > 0, u0 * np.log(u0), 0.0) - np.where(u1 > 0, u1 * np.log(u1), 0.0)
    return float(H[ok].min())
