"""Finite-dimensional tracial *-algebras.

An algebra is a direct sum of matrix blocks ``M_{n_i}(C)`` with trace
``tau(x) = sum_i delta_i Tr(x_i)``. Elements are stored blockwise; the
coordinate vector of an element uses the trace-orthonormal basis
``delta_i^{-1/2} E^{(i)}_{st}``, so ``<a, b> = tau(b* a)`` is the plain
complex dot product ``sum_c a_c conj(b_c)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import linalg

DEFAULT_RANK_TOL = 1e-8


class SpecMismatchError(ValueError):
    """Raised when elements from different algebras are combined."""


@dataclass(frozen=True)
class AlgebraSpec:
    """Block dimensions ``n_i`` with positive trace weights ``delta_i``."""

    blocks: tuple[tuple[int, float], ...]

    def __post_init__(self):
        blocks = tuple((int(n), float(delta)) for n, delta in self.blocks)
        if not blocks:
            raise ValueError("an algebra needs at least one block")
        for n, delta in blocks:
            if n < 1:
                raise ValueError(f"block dimension must be >= 1, got {n}")
            if not delta > 0 or not np.isfinite(delta):
                raise ValueError(f"trace weight must be positive, got {delta}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def counting(cls, n_points: int) -> AlgebraSpec:
        """Functions on ``n_points`` points with the counting trace."""
        return cls(tuple((1, 1.0) for _ in range(n_points)))

    @classmethod
    def matrix(cls, n: int, delta: float = 1.0) -> AlgebraSpec:
        return cls(((n, delta),))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.blocks)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(delta for _, delta in self.blocks)

    @property
    def D(self) -> int:
        """Coordinate dimension ``sum n_i^2``."""
        return sum(n * n for n in self.dims)

    @property
    def d(self) -> float:
        """Frobenius–Perron dimension ``tau(I)``."""
        return float(sum(delta * n for n, delta in self.blocks))

    @property
    def lam(self) -> float:
        """Smallest trace of a nonzero projection."""
        return float(min(self.weights))

    @property
    def is_commutative(self) -> bool:
        return all(n == 1 for n in self.dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, pos = [], 0
        for n in self.dims:
            out.append(pos)
            pos += n * n
        return tuple(out)

    @cached_property
    def coord_scale(self) -> np.ndarray:
        """Per-coordinate factor ``sqrt(delta_i)``."""
        return np.concatenate([np.full(n * n, np.sqrt(delta)) for n, delta in self.blocks])

    def scaled(self, factor: float) -> AlgebraSpec:
        """Same blocks with every weight multiplied by ``factor``."""
        return AlgebraSpec(tuple((n, delta * factor) for n, delta in self.blocks))

    @cached_property
    def square(self) -> AlgebraSpec:
        """The tensor square: blocks ``(i, j)`` of size ``n_i n_j``, weight ``delta_i delta_j``."""
        return AlgebraSpec(
            tuple((ni * nj, di * dj) for ni, di in self.blocks for nj, dj in self.blocks)
        )

    @cached_property
    def square_to_pair(self) -> np.ndarray:
        """Index map from tensor-square coordinates to pair coordinates ``a*D + b``.

        For ``x`` and ``y`` in this algebra, the coordinates of ``x (x) y`` in
        :attr:`square` equal ``np.outer(x.coords, y.coords).ravel()[square_to_pair]``.
        """
        D = self.D
        out = np.empty(D * D, dtype=np.intp)
        pos = 0
        for i, ni in enumerate(self.dims):
            for j, nj in enumerate(self.dims):
                oi, oj = self.offsets[i], self.offsets[j]
                s, u, t, v = np.meshgrid(
                    np.arange(ni), np.arange(nj), np.arange(ni), np.arange(nj), indexing="ij"
                )
                # block row (s, u), block column (t, v), row-major over the block
                a = oi + s * ni + t
                b = oj + u * nj + v
                out[pos : pos + (ni * nj) ** 2] = (a * D + b).ravel()
                pos += (ni * nj) ** 2
        return out

    def identity(self) -> Element:
        return Element(self, tuple(np.eye(n, dtype=complex) for n in self.dims))

    def zeros(self) -> Element:
        return Element(self, tuple(np.zeros((n, n), dtype=complex) for n in self.dims))

    def from_coords(self, c) -> Element:
        c = np.asarray(c, dtype=complex)
        if c.shape != (self.D,):
            raise ValueError(f"expected {self.D} coordinates, got shape {c.shape}")
        c = c / self.coord_scale
        return Element(
            self,
            tuple(c[o : o + n * n].reshape(n, n) for o, n in zip(self.offsets, self.dims)),
        )

    def basis(self) -> list[Element]:
        """The trace-orthonormal basis of scaled matrix units."""
        eye = np.eye(self.D)
        return [self.from_coords(eye[a]) for a in range(self.D)]

    def matrix_units(self) -> list[Element]:
        """Unscaled matrix units ``E^{(i)}_{st}``."""
        out = []
        for i, n in enumerate(self.dims):
            for s in range(n):
                for t in range(n):
                    blocks = [np.zeros((m, m), dtype=complex) for m in self.dims]
                    blocks[i][s, t] = 1.0
                    out.append(Element(self, tuple(blocks)))
        return out

    def minimal_projections(self) -> list[Element]:
        """Diagonal matrix units ``E^{(i)}_{ss}``."""
        return [e for e in self.matrix_units() if _is_diag_unit(e)]

    def to_json(self) -> dict:
        return {"blocks": [{"n": n, "delta": delta} for n, delta in self.blocks]}

    @classmethod
    def from_json(cls, obj: dict) -> AlgebraSpec:
        return cls(tuple((b["n"], b["delta"]) for b in obj["blocks"]))


def _is_diag_unit(e: Element) -> bool:
    for b in e.blocks:
        if b.any():
            s = np.argwhere(b)[0]
            return bool(s[0] == s[1])
    return False


class Element:
    """A block-diagonal complex matrix in an :class:`AlgebraSpec`."""

    __slots__ = ("spec", "blocks")

    def __init__(self, spec: AlgebraSpec, blocks: Sequence[np.ndarray]):
        blocks = tuple(np.asarray(b, dtype=complex) for b in blocks)
        if len(blocks) != len(spec.blocks):
            raise SpecMismatchError(f"expected {len(spec.blocks)} blocks, got {len(blocks)}")
        for b, n in zip(blocks, spec.dims):
            if b.shape != (n, n):
                raise SpecMismatchError(f"block shape {b.shape} does not match dimension {n}")
        self.spec = spec
        self.blocks = blocks

    @classmethod
    def diag(cls, spec: AlgebraSpec, values) -> Element:
        """Element of a commutative algebra from its point values."""
        if not spec.is_commutative:
            raise ValueError("diag() needs a commutative algebra")
        values = np.asarray(values, dtype=complex)
        return cls(spec, tuple(values[i].reshape(1, 1) for i in range(len(spec.blocks))))

    def _check(self, other: Element):
        if other.spec != self.spec:
            raise SpecMismatchError("elements live in different algebras")

    def __add__(self, other: Element) -> Element:
        self._check(other)
        return Element(self.spec, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other: Element) -> Element:
        self._check(other)
        return Element(self.spec, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self) -> Element:
        return Element(self.spec, tuple(-a for a in self.blocks))

    def __mul__(self, c) -> Element:
        if isinstance(c, Element):
            return NotImplemented
        return Element(self.spec, tuple(c * a for a in self.blocks))

    __rmul__ = __mul__

    def __truediv__(self, c) -> Element:
        return Element(self.spec, tuple(a / c for a in self.blocks))

    def __matmul__(self, other: Element) -> Element:
        self._check(other)
        return Element(self.spec, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    @property
    def H(self) -> Element:
        return Element(self.spec, tuple(a.conj().T for a in self.blocks))

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.blocks]) * self.spec.coord_scale

    def max_abs(self) -> float:
        return max(linalg.max_abs(b) for b in self.blocks)

    def hermitian_part(self) -> Element:
        return Element(self.spec, tuple(0.5 * (b + b.conj().T) for b in self.blocks))

    def allclose(self, other: Element, atol: float = 1e-10) -> bool:
        self._check(other)
        return (self - other).max_abs() <= atol

    def to_json(self) -> list:
        return [[[float(z.real), float(z.imag)] for z in b.ravel()] for b in self.blocks]

    @classmethod
    def from_json(cls, spec: AlgebraSpec, obj: list) -> Element:
        blocks = []
        for n, entries in zip(spec.dims, obj):
            arr = np.array([complex(re, im) for re, im in entries], dtype=complex)
            blocks.append(arr.reshape(n, n))
        return cls(spec, blocks)

    def __repr__(self) -> str:
        return f"Element(spec={self.spec.blocks!r}, blocks={[b.tolist() for b in self.blocks]!r})"


def tensor(x: Element, y: Element) -> Element:
    """``x (x) y`` as an element of the tensor square."""
    x._check(y)
    return Element(x.spec.square, tuple(np.kron(a, b) for a in x.blocks for b in y.blocks))


def trace(x: Element) -> complex:
    return complex(sum(delta * np.trace(b) for b, delta in zip(x.blocks, x.spec.weights)))


def inner(a: Element, b: Element) -> complex:
    """``<a, b> = tau(b* a)``."""
    a._check(b)
    return complex(np.vdot(b.coords, a.coords))


def singular_values(x: Element) -> list[np.ndarray]:
    out = []
    for b in x.blocks:
        if b.shape == (1, 1):
            out.append(np.abs(b[0]))
        else:
            out.append(np.linalg.svd(b, compute_uv=False))
    return out


def norm_from_singular_values(svals: Iterable[np.ndarray], weights: Sequence[float], p: float) -> float:
    svals = list(svals)
    if p == np.inf:
        return float(max((s.max() if s.size else 0.0) for s in svals))
    total = 0.0
    for s, delta in zip(svals, weights):
        nz = s[s > 0]
        total += delta * float(np.sum(nz**p))
    return total ** (1.0 / p)


def p_norm(x: Element, p: float) -> float:
    """``||x||_p = tau(|x|^p)^{1/p}``; ``p = inf`` gives the operator norm.

    For ``0 < p < 1`` the same formula defines a quasi-norm.
    """
    p = float(p)
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    return norm_from_singular_values(singular_values(x), x.spec.weights, p)


def check_psd(x: Element, tol: float = linalg.PSD_TOL) -> list[tuple[np.ndarray, np.ndarray]]:
    """Blockwise clamped eigendecompositions; raises if ``x`` is not PSD."""
    scale = x.max_abs()
    out = []
    for b in x.blocks:
        w, V = linalg.eig_hermitian(b)
        out.append((linalg.clamp_spectrum(w, scale, tol), V))
    return out


def is_psd(x: Element, tol: float = linalg.PSD_TOL) -> bool:
    try:
        check_psd(x, tol)
    except (linalg.NotPSDError, linalg.NotHermitianError):
        return False
    return True


def min_eigenvalue(x: Element) -> float:
    """Smallest eigenvalue of a Hermitian element (across blocks)."""
    return float(min(np.linalg.eigvalsh(linalg.check_hermitian(b)).min() for b in x.blocks))


def eigenvalues(x: Element) -> list[np.ndarray]:
    return [np.linalg.eigvalsh(linalg.check_hermitian(b)) for b in x.blocks]


def apply_function(x: Element, f) -> Element:
    """Blockwise functional calculus on a PSD element."""
    blocks = []
    for w, V in check_psd(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            fw = np.asarray(f(w))
        if not np.all(np.isfinite(fw)):
            raise ValueError("function undefined on the spectrum")
        blocks.append((V * fw) @ V.conj().T)
    return Element(x.spec, blocks)


def power(x: Element, r: float) -> Element:
    """``x^r`` for PSD ``x`` and ``r > 0``."""
    if not r > 0:
        raise ValueError("power needs r > 0")
    return apply_function(x, lambda w: np.where(w > 0, w, 0.0) ** r)


def entropy(x: Element) -> float:
    """von Neumann entropy ``tau(-x log x)`` with ``0 log 0 = 0``."""
    total = 0.0
    for (w, _), delta in zip(check_psd(x), x.spec.weights):
        total -= delta * float(linalg.xlogx(w).sum())
    return total


def range_projection(x: Element, rank_tol: float = DEFAULT_RANK_TOL) -> Element:
    """Spectral projection onto eigenvalues above ``rank_tol * ||x||_inf``."""
    decomp = check_psd(x)
    top = max((w.max() for w, _ in decomp), default=0.0)
    cut = rank_tol * top
    blocks = []
    for w, V in decomp:
        keep = V[:, w > cut] if top > 0 else V[:, :0]
        blocks.append(keep @ keep.conj().T)
    return Element(x.spec, blocks)


def support(x: Element, rank_tol: float = DEFAULT_RANK_TOL) -> float:
    """``S(x) = tau(R(x))``."""
    return trace(range_projection(x, rank_tol)).real


def normalize_trace(x: Element, target: float = 1.0) -> Element:
    if not target > 0:
        raise ValueError("target trace must be positive")
    t = trace(x)
    if abs(t) == 0:
        raise ValueError("cannot normalize an element with zero trace")
    return x * (target / t.real if abs(t.imag) <= 1e-12 * abs(t) else target / t)


def stream(seed: int, *index: int) -> np.random.Generator:
    """Counter-based generator for sample ``index`` under ``seed``.

    Streams for different indices are independent, so serial and parallel
    sweeps draw identical samples.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.Philox(ss))


def _gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_element(spec: AlgebraSpec, rng: np.random.Generator) -> Element:
    """General (non-Hermitian) element with standard complex Gaussian entries."""
    return Element(spec, tuple(_gaussian(rng, (n, n)) for n in spec.dims))


def random_positive(spec: AlgebraSpec, seed, *index: int) -> Element:
    """``g* g`` for a Gaussian element ``g``.

    ``seed`` is either an integer (combined with ``index`` through :func:`stream`)
    or a ready :class:`numpy.random.Generator`.
    """
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, *index)
    g = random_element(spec, rng)
    return (g.H @ g).hermitian_part()


def random_density(spec: AlgebraSpec, seed, *index: int, trace_value: float = 1.0) -> Element:
    return normalize_trace(random_positive(spec, seed, *index), trace_value)


def uniform_density(spec: AlgebraSpec, trace_value: float = 1.0) -> Element:
    return spec.identity() * (trace_value / spec.d)
