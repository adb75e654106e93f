"""Convolution structures, comultiplications, antipodes and FN k-algebras.

A convolution is stored as a structure tensor ``c[a, b, c]`` over the
trace-orthonormal coordinates of the algebra, ``(x*y)_c = sum x_a y_b c[a,b,c]``.
Its comultiplication is the adjoint under ``<a, b> = tau(b* a)``:
``Delta(z)_{ab} = sum_c conj(c[a,b,c]) z_c``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import linalg
from ._parallel import pmap
from .algebra import (
    AlgebraSpec,
    Element,
    SpecMismatchError,
    min_eigenvalue,
    p_norm,
    random_element,
    random_positive,
    stream,
    tensor,
    trace,
)
from .reports import Check, Report

DEFAULT_TOL = 1e-9
ANTIPODE_NORM_EXPONENTS = (0.5, 1.0, 2.0, 5.0, np.inf)


class AxiomError(ValueError):
    """A construction failed verification.

    Carries the name of the first failed axiom and a witness (JSON-ready).
    """

    def __init__(self, axiom: str, witness: dict | None = None, detail: str = ""):
        self.axiom = axiom
        self.witness = witness
        msg = f"axiom '{axiom}' failed"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class GroupTableError(ValueError):
    pass


def _witness(**elements) -> dict:
    out = {}
    for key, val in elements.items():
        out[key] = val.to_json() if isinstance(val, Element) else val
    return out


@dataclass(frozen=True, eq=False)
class ConvolutionStructure:
    spec: AlgebraSpec
    k: float
    tensor: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tensor, dtype=complex)
        D = self.spec.D
        if t.shape != (D, D, D):
            raise ValueError(f"structure tensor must have shape {(D, D, D)}, got {t.shape}")
        if not self.k > 0:
            raise ValueError("k must be positive")
        t.setflags(write=False)
        object.__setattr__(self, "tensor", t)
        object.__setattr__(self, "k", float(self.k))

    @cached_property
    def _flat(self) -> np.ndarray:
        D = self.spec.D
        return self.tensor.reshape(D, D * D)

    def convolve_coords(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        D = self.spec.D
        return y @ (x @ self._flat).reshape(D, D)

    def convolve(self, x: Element, y: Element) -> Element:
        if x.spec != self.spec or y.spec != self.spec:
            raise SpecMismatchError("convolution inputs must live in the structure's algebra")
        return self.spec.from_coords(self.convolve_coords(x.coords, y.coords))

    def comultiply(self, z: Element) -> Element:
        """``Delta(z)`` as an element of the tensor square."""
        if z.spec != self.spec:
            raise SpecMismatchError("comultiply input must live in the structure's algebra")
        pair = np.conj(self.tensor).reshape(-1, self.spec.D) @ z.coords
        return self.spec.square.from_coords(pair[self.spec.square_to_pair])

    def rescaled(self, trace_factor: float, conv_factor: float) -> ConvolutionStructure:
        """Trace ``tau / trace_factor`` and convolution ``x*y / conv_factor``.

        The result has constant ``trace_factor * k / conv_factor``.
        """
        spec = self.spec.scaled(1.0 / trace_factor)
        t = self.tensor * (np.sqrt(trace_factor) / conv_factor)
        return ConvolutionStructure(spec, trace_factor * self.k / conv_factor, t)

    def perturbed(self, index: tuple[int, int, int], delta: complex) -> ConvolutionStructure:
        t = np.array(self.tensor)
        t[index] += delta
        return ConvolutionStructure(self.spec, self.k, t)

    def to_json(self) -> dict:
        a, b, c = np.nonzero(self.tensor)
        vals = self.tensor[a, b, c]
        return {
            "spec": self.spec.to_json(),
            "k": self.k,
            "tensor": [
                [int(i), int(j), int(m), float(v.real), float(v.imag)]
                for i, j, m, v in zip(a, b, c, vals)
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> ConvolutionStructure:
        spec = AlgebraSpec.from_json(obj["spec"])
        D = spec.D
        t = np.zeros((D, D, D), dtype=complex)
        for a, b, c, re, im in obj["tensor"]:
            t[int(a), int(b), int(c)] += complex(re, im)
        return cls(spec, obj["k"], t)


def convolve(S: ConvolutionStructure, x: Element, y: Element) -> Element:
    return S.convolve(x, y)


def comultiply(S: ConvolutionStructure, z: Element) -> Element:
    return S.comultiply(z)


@dataclass(frozen=True, eq=False)
class Antipode:
    """``rho(x)_i = V_i x_{perm(i)}^T V_i^*``."""

    spec: AlgebraSpec
    perm: tuple[int, ...]
    unitaries: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        perm = tuple(int(i) for i in self.perm)
        m = len(self.spec.blocks)
        if sorted(perm) != list(range(m)):
            raise ValueError("antipode block map must be a permutation")
        for i, j in enumerate(perm):
            if self.spec.blocks[i] != self.spec.blocks[j]:
                raise ValueError(f"blocks {i} and {j} differ in dimension or weight")
        us = self.unitaries or tuple(np.eye(n) for n in self.spec.dims)
        us = tuple(np.asarray(u, dtype=complex) for u in us)
        for u, n in zip(us, self.spec.dims):
            if u.shape != (n, n) or linalg.max_abs(u.conj().T @ u - np.eye(n)) > 1e-10:
                raise ValueError("antipode block maps must be unitary")
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "unitaries", us)

    @classmethod
    def transpose(cls, spec: AlgebraSpec) -> Antipode:
        return cls(spec, tuple(range(len(spec.blocks))))

    def __call__(self, x: Element) -> Element:
        if x.spec != self.spec:
            raise SpecMismatchError("antipode input must live in the antipode's algebra")
        return Element(
            self.spec,
            tuple(v @ x.blocks[j].T @ v.conj().T for v, j in zip(self.unitaries, self.perm)),
        )

    def to_json(self) -> dict:
        return {
            "perm": list(self.perm),
            "unitaries": [[[float(z.real), float(z.imag)] for z in u.ravel()] for u in self.unitaries],
        }

    @classmethod
    def from_json(cls, spec: AlgebraSpec, obj: dict) -> Antipode:
        us = []
        for n, entries in zip(spec.dims, obj.get("unitaries") or [None] * len(spec.dims)):
            if entries is None:
                us.append(np.eye(n))
            else:
                us.append(np.array([complex(a, b) for a, b in entries]).reshape(n, n))
        return cls(spec, tuple(obj["perm"]), tuple(us))


def apply_antipode(rho: Antipode, x: Element) -> Element:
    return rho(x)


# -- checkers ---------------------------------------------------------------


def _rel(num: float, scale: float) -> float:
    return num / scale if scale > 0 else num


def _worst(values: list[tuple[float, dict | None]]) -> tuple[float, dict | None]:
    best = (-np.inf, None)
    for v in values:
        if v[0] > best[0]:
            best = v
    return best


def _positivity_slack(S: ConvolutionStructure, x: Element, y: Element) -> tuple[float, dict]:
    z = S.convolve(x, y)
    scale = S.k * trace(x).real * trace(y).real
    scale = max(scale, 1e-300)
    defect = max(linalg.hermitian_defect(b) for b in z.blocks)
    low = -min_eigenvalue(z.hermitian_part())
    return max(defect, low) / scale, _witness(x=x, y=y)


def check_good_convolution(
    S: ConvolutionStructure,
    n_samples: int = 100,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    threads: int = 1,
) -> Report:
    """Sampled verification of the good k-convolution axioms.

    Checks positivity, the primary Young bound, the Haar identity, unitality of
    the comultiplication and positivity of the comultiplication. Slacks are
    relative to ``k ||x||_1 ||y||_1``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    spec = S.spec

    def sample(i: int):
        x = random_positive(spec, seed, i, 0)
        y = random_positive(spec, seed, i, 1)
        rng = stream(seed, i, 2)
        g, h = random_element(spec, rng), random_element(spec, rng)
        pos = _positivity_slack(S, x, y)
        gh = S.convolve(g, h)
        bound = S.k * p_norm(g, 1) * p_norm(h, 1)
        young = (_rel(p_norm(gh, 1) - bound, bound), _witness(x=g, y=h))
        haar = (_rel(abs(trace(gh) - S.k * trace(g) * trace(h)), bound), _witness(x=g, y=h))
        k_est = trace(S.convolve(x, y)).real / (trace(x).real * trace(y).real)
        return pos, young, haar, k_est

    results = pmap(sample, range(n_samples), threads)
    positivity = [r[0] for r in results]
    if spec.is_commutative:
        # the positive cone is spanned by the minimal projections
        mins = spec.minimal_projections()
        positivity += [_positivity_slack(S, e, f) for e in mins for f in mins]

    unit_defect = linalg.max_abs(
        np.concatenate([b.ravel() for b in (S.comultiply(spec.identity()) - S.k * spec.square.identity()).blocks])
    )

    if spec.is_commutative:
        regime = "exact on minimal projections"
        comult = []
        for e in spec.minimal_projections():
            De = S.comultiply(e)
            scale = max(De.max_abs(), 1e-300)
            vals = np.concatenate([b.ravel() for b in De.blocks])
            comult.append((max(np.abs(vals.imag).max(), -vals.real.min()) / scale, _witness(z=e)))
    else:
        regime = "sampled PSD elements"
        comult = []
        for i in range(n_samples):
            z = random_positive(spec, seed, i, 3)
            Dz = S.comultiply(z)
            scale = max(S.k * trace(z).real, 1e-300)
            defect = max(linalg.hermitian_defect(b) for b in Dz.blocks)
            comult.append((max(defect, -min_eigenvalue(Dz.hermitian_part())) / scale, _witness(z=z)))

    k_ests = np.array([r[3] for r in results])
    checks = []
    for name, vals in (
        ("positivity", positivity),
        ("primary_young", [r[1] for r in results]),
        ("haar", [r[2] for r in results]),
    ):
        worst, wit = _worst(vals)
        checks.append(Check(name, worst <= tol, worst, tol, wit if worst > tol else None))
    unit_rel = unit_defect / max(1.0, S.k)
    checks.append(Check("unitality", unit_rel <= tol, unit_rel, tol))
    worst, wit = _worst(comult)
    checks.append(Check("comultiplication_positivity", worst <= tol, worst, tol, wit if worst > tol else None, note=regime))
    return Report(
        "good_convolution",
        checks,
        {"k": S.k, "k_estimate": float(np.median(k_ests)), "n_samples": n_samples, "seed": seed, "regime": regime},
    )


def frobenius_defect(S: ConvolutionStructure, rho: Antipode, x: Element, y: Element, z: Element) -> float:
    lhs = trace(S.convolve(x, y) @ z)
    rhs = trace(S.convolve(rho(z), x) @ rho(y))
    return abs(lhs - rhs)


def check_frobenius(
    S: ConvolutionStructure,
    rho: Antipode,
    n_samples: int = 100,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    exhaustive_limit: int = 12,
) -> Report:
    """Frobenius reciprocity ``tau((x*y)z) = tau((rho(z)*x) rho(y))``.

    Random triples are scaled by ``k ||x||_1 ||y||_1 ||z||_inf``. When the
    coordinate dimension is at most ``exhaustive_limit`` every basis triple is
    checked as well.
    """
    spec = S.spec
    vals = []
    for i in range(n_samples):
        rng = stream(seed, i, 4)
        x, y, z = (random_element(spec, rng) for _ in range(3))
        scale = S.k * p_norm(x, 1) * p_norm(y, 1) * p_norm(z, np.inf)
        vals.append((frobenius_defect(S, rho, x, y, z) / scale, _witness(x=x, y=y, z=z)))
    if spec.D <= exhaustive_limit:
        basis = spec.basis()
        for x in basis:
            for y in basis:
                xy = S.convolve(x, y)
                for z in basis:
                    scale = S.k * p_norm(x, 1) * p_norm(y, 1) * p_norm(z, np.inf)
                    lhs = trace(xy @ z)
                    rhs = trace(S.convolve(rho(z), x) @ rho(y))
                    vals.append((abs(lhs - rhs) / scale, _witness(x=x, y=y, z=z)))
    worst, wit = _worst(vals)
    return Report(
        "frobenius",
        [Check("frobenius_reciprocity", worst <= tol, worst, tol, wit if worst > tol else None)],
        {"n_samples": n_samples, "seed": seed, "exhaustive": spec.D <= exhaustive_limit},
    )


def check_associativity(S: ConvolutionStructure, n_samples: int = 100, seed: int = 0, tol: float = DEFAULT_TOL) -> Report:
    spec = S.spec
    vals = []
    for i in range(n_samples):
        rng = stream(seed, i, 5)
        x, y, z = (random_element(spec, rng) for _ in range(3))
        diff = S.convolve(S.convolve(x, y), z) - S.convolve(x, S.convolve(y, z))
        scale = S.k**2 * p_norm(x, 1) * p_norm(y, 1) * p_norm(z, 1)
        vals.append((diff.max_abs() / scale, _witness(x=x, y=y, z=z)))
    worst, wit = _worst(vals)
    return Report(
        "associativity",
        [Check("associativity", worst <= tol, worst, tol, wit if worst > tol else None)],
        {"n_samples": n_samples, "seed": seed},
    )


def check_antipode(rho: Antipode, n_samples: int = 100, seed: int = 0, tol: float = DEFAULT_TOL) -> Report:
    """Anti-multiplicativity, *-preservation, trace preservation and p-norm preservation."""
    spec = rho.spec
    anti, star, tr, norms = [], [], [], []
    for i in range(n_samples):
        rng = stream(seed, i, 6)
        x, y = random_element(spec, rng), random_element(spec, rng)
        scale = max(x.max_abs() * y.max_abs(), 1e-300)
        anti.append(((rho(x @ y) - rho(y) @ rho(x)).max_abs() / scale, _witness(x=x, y=y)))
        star.append(((rho(x.H) - rho(x).H).max_abs() / max(x.max_abs(), 1e-300), _witness(x=x)))
        tr.append((abs(trace(rho(x)) - trace(x)) / max(p_norm(x, 1), 1e-300), _witness(x=x)))
        rx = rho(x)
        for p in ANTIPODE_NORM_EXPONENTS:
            a, b = p_norm(rx, p), p_norm(x, p)
            norms.append((abs(a - b) / max(b, 1e-300), _witness(x=x, p=p)))
    checks = []
    for name, vals in (
        ("anti_multiplicative", anti),
        ("star_preserving", star),
        ("trace_preserving", tr),
        ("p_norm_preserving", norms),
    ):
        worst, wit = _worst(vals)
        checks.append(Check(name, worst <= tol, worst, tol, wit if worst > tol else None))
    return Report("antipode", checks, {"n_samples": n_samples, "seed": seed, "exponents": list(ANTIPODE_NORM_EXPONENTS)})


@dataclass(frozen=True, eq=False)
class FNAlgebra:
    """A verified Frobenius von Neumann k-algebra."""

    structure: ConvolutionStructure
    antipode: Antipode
    verified: list[Report]
    name: str = ""

    @property
    def spec(self) -> AlgebraSpec:
        return self.structure.spec

    @property
    def k(self) -> float:
        return self.structure.k

    def convolve(self, x: Element, y: Element) -> Element:
        return self.structure.convolve(x, y)

    @classmethod
    def assemble(
        cls,
        structure: ConvolutionStructure,
        antipode: Antipode,
        n_samples: int = 32,
        seed: int = 0,
        tol: float = DEFAULT_TOL,
        name: str = "",
    ) -> FNAlgebra:
        """Run every axiom checker; raise :class:`AxiomError` on the first failure."""
        if antipode.spec != structure.spec:
            raise SpecMismatchError("antipode and convolution live in different algebras")
        reports = [
            check_good_convolution(structure, n_samples, seed, tol),
            check_antipode(antipode, n_samples, seed, tol),
            check_frobenius(structure, antipode, n_samples, seed, tol),
        ]
        for rep in reports:
            for c in rep.checks:
                if not c.passed:
                    raise AxiomError(c.name, c.witness, f"worst slack {c.worst:.3e} > {c.tol:g}")
        return cls(structure, antipode, reports, name)


# -- builders ---------------------------------------------------------------


def validate_group_table(table) -> tuple[np.ndarray, int, np.ndarray]:
    """Check a Cayley table; returns ``(table, identity, inverse)``."""
    t = np.asarray(table)
    if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 1:
        raise GroupTableError("table must be a non-empty square matrix")
    if not np.issubdtype(t.dtype, np.integer):
        if not np.all(t == np.round(t)):
            raise GroupTableError("table entries must be integers")
        t = t.astype(int)
    n = t.shape[0]
    if t.min() < 0 or t.max() >= n:
        raise GroupTableError("table entries out of range")
    ids = [e for e in range(n) if np.array_equal(t[e], np.arange(n)) and np.array_equal(t[:, e], np.arange(n))]
    if not ids:
        raise GroupTableError("no identity element")
    e = ids[0]
    inv = np.full(n, -1)
    for g in range(n):
        hits = np.nonzero(t[g] == e)[0]
        if len(hits) != 1 or t[hits[0], g] != e:
            raise GroupTableError(f"element {g} has no two-sided inverse")
        inv[g] = hits[0]
    # (ab)c == a(bc)
    lhs = t[t[:, :, None], np.arange(n)[None, None, :]]
    rhs = t[np.arange(n)[:, None, None], t[None, :, :]]
    bad = np.argwhere(lhs != rhs)
    if len(bad):
        a, b, c = bad[0]
        raise GroupTableError(f"associativity fails at ({a}, {b}, {c})")
    return t, e, inv


def build_group_algebra(cayley, n_samples: int = 32, seed: int = 0) -> FNAlgebra:
    """Functions on a finite group with counting trace, ``(f*g)(s) = sum_t f(t) g(t^-1 s)``."""
    t, _, inv = validate_group_table(cayley)
    n = t.shape[0]
    spec = AlgebraSpec.counting(n)
    tens = np.zeros((n, n, n))
    a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    tens[a, b, t] = 1.0
    S = ConvolutionStructure(spec, 1.0, tens)
    rho = Antipode(spec, tuple(int(i) for i in inv))
    return FNAlgebra.assemble(S, rho, n_samples, seed, name=f"group algebra of order {n}")


def swap_unitary(n: int) -> np.ndarray:
    S = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            S[i * n + j, j * n + i] = 1.0
    return S


def build_unitary_convolution(U, n: int) -> ConvolutionStructure:
    """``x * y = Tr_2(U (x (x) y) U^*)`` on ``M_n`` with the unnormalized trace."""
    U = np.asarray(U, dtype=complex)
    if U.shape != (n * n, n * n):
        raise ValueError(f"U must be {n * n} x {n * n}")
    if linalg.max_abs(U.conj().T @ U - np.eye(n * n)) > 1e-10:
        raise ValueError("U is not unitary")
    U4 = U.reshape(n, n, n, n)
    tens = np.einsum("iksu,jktv->stuvij", U4, U4.conj()).reshape(n * n, n * n, n * n)
    return ConvolutionStructure(AlgebraSpec.matrix(n), 1.0, tens)


def theta_swap_unitary(theta: float, n: int) -> np.ndarray:
    return np.sqrt(theta) * np.eye(n * n) + 1j * np.sqrt(1.0 - theta) * swap_unitary(n)


def build_theta_swap(theta: float, n: int) -> ConvolutionStructure:
    """Unitary convolution for ``U = sqrt(theta) I + i sqrt(1-theta) S``.

    On density matrices this is ``theta x + (1-theta) y - i sqrt(theta(1-theta)) [x, y]``.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    return build_unitary_convolution(theta_swap_unitary(theta, n), n)


def theta_swap_closed_form(theta: float, x: Element, y: Element) -> Element:
    """``theta Tr(y) x + (1-theta) Tr(x) y - i sqrt(theta(1-theta)) [x, y]``."""
    c = np.sqrt(theta * (1.0 - theta))
    return x * (theta * trace(y)) + y * ((1.0 - theta) * trace(x)) - (x @ y - y @ x) * (1j * c)


def build_fusion_bialgebra(ring, n_samples: int = 32, seed: int = 0) -> FNAlgebra:
    """The commutative side of the fusion bi-algebra of a commutative fusion ring.

    Functions on the basis ``{x_i}`` with trace weights ``d(x_i)^2``; the point
    mass ``e_i / d(x_i)`` is the preimage of ``x_i``, so in trace-orthonormal
    coordinates the structure tensor is the fusion tensor ``N_{i,j}^s`` itself.
    The antipode permutes points by the duality.
    """
    from .fusion import fp_dimensions, validate

    rep = validate(ring)
    if not rep.passed:
        first = rep.failed()[0]
        raise AxiomError(first.name, first.witness, "fusion ring does not validate")
    M = ring.matrices().astype(float)
    for a in range(ring.rank):
        for b in range(a + 1, ring.rank):
            if linalg.max_abs(M[a] @ M[b] - M[b] @ M[a]) != 0:
                raise ValueError(f"fusion matrices {a} and {b} do not commute")
    dims = np.asarray(fp_dimensions(ring))
    spec = AlgebraSpec(tuple((1, float(d * d)) for d in dims))
    S = ConvolutionStructure(spec, 1.0, ring.N.astype(float))
    rho = Antipode(spec, tuple(int(i) for i in ring.dual))
    return FNAlgebra.assemble(S, rho, n_samples, seed, name=f"fusion bi-algebra ({ring.name})")
