"""Verification and falsification engines for the convolution inequalities.

Every engine returns an :class:`InequalityReport`. A case's ``worst`` is the
largest observed slack in the direction of violation, so a case passes iff
``worst <= tol``; each failing case carries a witness that re-evaluates to the
same slack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._parallel import pmap
from .algebra import (
    AlgebraSpec,
    Element,
    entropy,
    norm_from_singular_values,
    p_norm,
    power,
    range_projection,
    singular_values,
    stream,
    support,
    trace,
)
from .convolution import ConvolutionStructure, FNAlgebra

DEFAULT_TOL = 1e-9
DEFAULT_EXPONENTS = (1.0, 1.5, 2.0, 3.0, np.inf)
NORMALIZATION_TOL = 1e-10


class NormalizationError(ValueError):
    pass


def structure_of(F) -> ConvolutionStructure:
    return F.structure if isinstance(F, FNAlgebra) else F


def conjugate_exponent_r(p: float, q: float) -> float:
    """``r`` from ``1 + 1/r = 1/p + 1/q``; ``inf`` when ``1/p + 1/q = 1``."""
    s = 1.0 / p + 1.0 / q - 1.0
    if s < -1e-12 or s > 1.0 + 1e-12:
        raise ValueError(f"(p, q) = ({p}, {q}) is not admissible: need 1/p + 1/q in [1, 2]")
    return np.inf if abs(s) <= 1e-12 else 1.0 / s


@dataclass
class Case:
    label: str
    worst: float
    passed: bool
    tol: float
    witness: dict | None = None
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"label": self.label, "worst": self.worst, "passed": self.passed, "tol": self.tol, "stats": self.stats}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass
class InequalityReport:
    name: str
    cases: list[Case]
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "violation"

    @property
    def worst_case(self) -> Case:
        return max(self.cases, key=lambda c: c.worst)

    def __getitem__(self, label: str) -> Case:
        for c in self.cases:
            if c.label == label:
                return c
        raise KeyError(label)

    def to_json(self) -> dict:
        return {"report": self.name, "verdict": self.verdict, "cases": [c.to_json() for c in self.cases], "info": self.info}


def _exp_json(p: float):
    return "inf" if p == np.inf else p


def _exp_from_json(p) -> float:
    return np.inf if p in ("inf", np.inf) else float(p)


# -- quantum Young ----------------------------------------------------------------


@dataclass
class SweepConfig:
    exponents: tuple[float, ...] = DEFAULT_EXPONENTS
    n_samples: int = 500
    seed: int = 0
    tol: float = DEFAULT_TOL
    canonical: bool = True

    def pairs(self) -> list[tuple[float, float, float]]:
        """Admissible ``(p, q, r)`` triples of the grid."""
        out = []
        for p in self.exponents:
            for q in self.exponents:
                s = 1.0 / p + 1.0 / q
                if 1.0 - 1e-12 <= s <= 2.0 + 1e-12:
                    out.append((p, q, conjugate_exponent_r(p, q)))
        return out

    def to_json(self) -> dict:
        return {
            "exponents": [_exp_json(p) for p in self.exponents],
            "n_samples": self.n_samples,
            "seed": self.seed,
            "tol": self.tol,
            "canonical": self.canonical,
        }

    @classmethod
    def from_json(cls, obj: dict) -> SweepConfig:
        kw = dict(obj)
        if "exponents" in kw:
            kw["exponents"] = tuple(_exp_from_json(p) for p in kw["exponents"])
        return cls(**kw)


def sample_pair(spec: AlgebraSpec, seed: int, i: int) -> tuple[Element, Element]:
    """Sample ``i``: cycles through general, positive and rank-one positive elements."""
    rng = stream(seed, i, 10)
    kind = i % 3

    def one():
        g = [(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) for n in spec.dims]
        if kind == 0:
            return Element(spec, g)
        if kind == 1:
            return Element(spec, [b.conj().T @ b for b in g])
        # rank one in a random block
        blocks = [np.zeros((n, n), dtype=complex) for n in spec.dims]
        j = int(rng.integers(len(spec.dims)))
        v = g[j][:, 0]
        blocks[j] = np.outer(v, v.conj())
        return Element(spec, blocks)

    return one(), one()


def canonical_elements(spec: AlgebraSpec) -> list[Element]:
    """Identity, matrix units and minimal projections (deduplicated)."""
    out = [spec.identity()]
    for e in spec.matrix_units() + spec.minimal_projections():
        if not any(e.allclose(f, atol=0.0) for f in out):
            out.append(e)
    return out


def young_ratio(S: ConvolutionStructure, x: Element, y: Element, p: float, q: float) -> float:
    r = conjugate_exponent_r(p, q)
    den = S.k * p_norm(x, p) * p_norm(y, q)
    return p_norm(S.convolve(x, y), r) / den if den > 0 else 0.0


def young_sweep(F, cfg: SweepConfig | None = None, threads: int = 1) -> InequalityReport:
    """Largest ``||x*y||_r / (k ||x||_p ||y||_q)`` per grid point; pass iff ``<= 1 + tol``.

    Works on any convolution structure, so it can also exhibit failures
    outside the Frobenius setting.
    """
    cfg = cfg or SweepConfig()
    S = structure_of(F)
    spec = S.spec
    triples = cfg.pairs()
    weights = spec.weights

    def ratios(x: Element, y: Element) -> np.ndarray:
        z = S.convolve(x, y)
        sx, sy, sz = singular_values(x), singular_values(y), singular_values(z)
        cache = {}

        def nrm(sv, p, key):
            if (key, p) not in cache:
                cache[key, p] = norm_from_singular_values(sv, weights, p)
            return cache[key, p]

        out = np.empty(len(triples))
        for t, (p, q, r) in enumerate(triples):
            den = S.k * nrm(sx, p, "x") * nrm(sy, q, "y")
            out[t] = nrm(sz, r, "z") / den if den > 0 else 0.0
        return out

    pairs = [sample_pair(spec, cfg.seed, i) for i in range(cfg.n_samples)]
    if cfg.canonical:
        can = canonical_elements(spec)
        pairs += [(a, b) for a in can for b in can]
    R = np.array(pmap(lambda xy: ratios(*xy), pairs, threads))

    cases = []
    for t, (p, q, r) in enumerate(triples):
        col = R[:, t]
        j = int(np.argmax(col))
        worst = float(col[j] - 1.0)
        passed = worst <= cfg.tol
        x, y = pairs[j]
        witness = None
        if not passed:
            witness = {
                "x": x.to_json(),
                "y": y.to_json(),
                "p": _exp_json(p),
                "q": _exp_json(q),
                "r": _exp_json(r),
                "lhs": p_norm(S.convolve(x, y), r),
                "rhs": S.k * p_norm(x, p) * p_norm(y, q),
                "ratio": float(col[j]),
            }
        stats = {"max_ratio": float(col[j]), "mean_ratio": float(col.mean()), "samples": len(col)}
        cases.append(Case(f"p={_exp_json(p)},q={_exp_json(q)}", worst, passed, cfg.tol, witness, stats))
    return InequalityReport("young", cases, {"config": cfg.to_json(), "k": S.k, "slack": "ratio - 1"})


def recheck_young(F, witness: dict) -> float:
    """Re-evaluate a Young witness; returns the ratio."""
    S = structure_of(F)
    x = Element.from_json(S.spec, witness["x"])
    y = Element.from_json(S.spec, witness["y"])
    return young_ratio(S, x, y, _exp_from_json(witness["p"]), _exp_from_json(witness["q"]))


def phase_young_check(
    F,
    xs: Sequence[Element],
    ys: Sequence[Element],
    p: float,
    q: float,
    t_grid_size: int = 512,
    tol: float = DEFAULT_TOL,
) -> InequalityReport:
    """``||sum_i x_i*y_i||_r`` against the phase-twisted right-hand side on a t grid.

    The bound only asserts that some ``t_0`` works, so the check compares with
    the largest right-hand side on the grid; the grid minimum and ``t_0`` are
    reported alongside.
    """
    if len(xs) == 0 or len(ys) == 0:
        raise ValueError("xs and ys must be non-empty")
    if len(xs) != len(ys):
        raise ValueError("xs and ys must have equal length")
    S = structure_of(F)
    r = conjugate_exponent_r(p, q)
    total = S.convolve(xs[0], ys[0])
    for x, y in zip(xs[1:], ys[1:]):
        total = total + S.convolve(x, y)
    lhs = p_norm(total, r)
    ts = np.arange(t_grid_size) / t_grid_size
    idx = np.arange(1, len(xs) + 1)
    rhs = np.empty(t_grid_size)
    for m, t in enumerate(ts):
        ph = np.exp(2j * np.pi * idx * t)
        xt = xs[0] * ph[0]
        yt = ys[0] * np.conj(ph[0])
        for j in range(1, len(xs)):
            xt = xt + xs[j] * ph[j]
            yt = yt + ys[j] * np.conj(ph[j])
        rhs[m] = S.k * p_norm(xt, p) * p_norm(yt, q)
    best = int(np.argmax(rhs))
    scale = max(1.0, rhs[best])
    worst = (lhs - rhs[best]) / scale
    passed = worst <= tol
    case = Case(
        f"p={_exp_json(p)},q={_exp_json(q)}",
        float(worst),
        passed,
        tol,
        None if passed else {"xs": [x.to_json() for x in xs], "ys": [y.to_json() for y in ys]},
        {"lhs": lhs, "rhs_max": float(rhs[best]), "t0": float(ts[best]), "rhs_min": float(rhs.min()),
         "t_min": float(ts[int(np.argmin(rhs))])},
    )
    return InequalityReport("phase_young", [case], {"t_grid_size": t_grid_size, "r": _exp_json(r)})


# -- reverse Young and sum set --------------------------------------------------------


def _check_positive(x: Element, name: str):
    from .algebra import check_psd

    try:
        check_psd(x)
    except ValueError as exc:
        raise ValueError(f"{name} must be positive semidefinite: {exc}") from exc


def reverse_young2_check(F, x: Element, y: Element, r: float, s: float, t: float, tol: float = DEFAULT_TOL) -> InequalityReport:
    """``||x^r * y^r||_r >= lambda^{1/r - r} k ||x||_t^r ||y||_s^r`` for ``0 < r, s, t <= 1``."""
    for name, v in (("r", r), ("s", s), ("t", t)):
        if not 0 < v <= 1:
            raise ValueError(f"{name} must lie in (0, 1], got {v}")
    if abs(1 + 1 / r - 1 / s - 1 / t) > 1e-12:
        raise ValueError(f"exponent relation 1 + 1/r = 1/s + 1/t violated by (r, s, t) = ({r}, {s}, {t})")
    _check_positive(x, "x")
    _check_positive(y, "y")
    S = structure_of(F)
    lam = S.spec.lam
    lhs = p_norm(S.convolve(power(x, r), power(y, r)), r)
    rhs = lam ** (1 / r - r) * S.k * p_norm(x, t) ** r * p_norm(y, s) ** r
    scale = max(1.0, rhs)
    worst = (rhs - lhs) / scale
    passed = worst <= tol
    case = Case(f"r={r:g},s={s:g},t={t:g}", float(worst), passed, tol,
                None if passed else {"x": x.to_json(), "y": y.to_json()}, {"lhs": lhs, "rhs": rhs})
    return InequalityReport("reverse_young2", [case], {"lambda": lam, "k": S.k})


def sumset_check(F, x: Element, y: Element, rank_tol: float = 1e-8, tol: float = DEFAULT_TOL) -> InequalityReport:
    """``S(R(x) * R(y)) >= max(S(x), S(y))``."""
    _check_positive(x, "x")
    _check_positive(y, "y")
    S = structure_of(F)
    z = S.convolve(range_projection(x, rank_tol), range_projection(y, rank_tol))
    lhs = support(z.hermitian_part(), rank_tol)
    rhs = max(support(x, rank_tol), support(y, rank_tol))
    worst = rhs - lhs
    passed = worst <= tol
    case = Case("sumset", float(worst), passed, tol,
                None if passed else {"x": x.to_json(), "y": y.to_json()}, {"lhs": lhs, "rhs": rhs})
    return InequalityReport("sumset", [case], {"rank_tol": rank_tol})


# -- entropic convolution inequality ----------------------------------------------------


def check_normalized(S: ConvolutionStructure, x: Element, name: str = "x"):
    target = 1.0 / S.k
    _check_positive(x, name)
    if abs(trace(x).real - target) > NORMALIZATION_TOL:
        raise NormalizationError(f"{name} must have trace 1/k = {target:g}, got {trace(x).real:.12g}")


def qeci_check(F, x: Element, y: Element, theta: float | None = None, tol: float = DEFAULT_TOL) -> InequalityReport:
    """``H(x*y) >= theta H(x) + (1-theta) H(y)`` for ``||x||_1 = ||y||_1 = 1/k``.

    With ``theta=None`` the bound is ``max(H(x), H(y))``, which covers every
    theta at once and is the form valid on FN algebras. Pass an explicit
    ``theta`` for convolutions where only the weighted form holds.
    """
    S = structure_of(F)
    check_normalized(S, x, "x")
    check_normalized(S, y, "y")
    hx, hy = entropy(x), entropy(y)
    hz = entropy(S.convolve(x, y).hermitian_part())
    rhs = max(hx, hy) if theta is None else theta * hx + (1 - theta) * hy
    worst = rhs - hz
    passed = worst <= tol
    case = Case("qeci" if theta is None else f"qeci theta={theta:g}", float(worst), passed, tol,
                None if passed else {"x": x.to_json(), "y": y.to_json()},
                {"H(x*y)": hz, "H(x)": hx, "H(y)": hy, "rhs": rhs})
    return InequalityReport("qeci", [case], {"theta": "max" if theta is None else theta})


def qeci_triple_check(F, x1: Element, x2: Element, x3: Element, association_order: str = "both",
                      tol: float = DEFAULT_TOL) -> InequalityReport:
    """``H`` of a triple convolution against the largest single entropy."""
    S = structure_of(F)
    for name, v in (("x1", x1), ("x2", x2), ("x3", x3)):
        check_normalized(S, v, name)
    if association_order not in ("left", "right", "both"):
        raise ValueError("association_order must be 'left', 'right' or 'both'")
    rhs = max(entropy(x1), entropy(x2), entropy(x3))
    orders = {
        "left": lambda: S.convolve(S.convolve(x1, x2), x3),
        "right": lambda: S.convolve(x1, S.convolve(x2, x3)),
    }
    names = ["left", "right"] if association_order == "both" else [association_order]
    cases = []
    for name in names:
        h = entropy(orders[name]().hermitian_part())
        worst = rhs - h
        cases.append(Case(name, float(worst), worst <= tol, tol, None, {"H": h, "rhs": rhs}))
    return InequalityReport("qeci_triple", cases, {})


# -- fixture-level suites ---------------------------------------------------------------

REVERSE_YOUNG_TRIPLES = ((0.5, 2 / 3, 2 / 3), (0.75, 6 / 7, 6 / 7), (1.0, 1.0, 1.0))


def _merge(name: str, reports: list[InequalityReport]) -> InequalityReport:
    """Collapse many single-case reports into one case per label (worst kept)."""
    by_label: dict[str, Case] = {}
    counts: dict[str, int] = {}
    for rep in reports:
        for c in rep.cases:
            counts[c.label] = counts.get(c.label, 0) + 1
            if c.label not in by_label or c.worst > by_label[c.label].worst:
                by_label[c.label] = c
    cases = []
    for label, c in by_label.items():
        stats = dict(c.stats)
        stats["samples"] = counts[label]
        cases.append(Case(label, c.worst, all(x.passed for r in reports for x in r.cases if x.label == label),
                          c.tol, c.witness, stats))
    return InequalityReport(name, cases, {})


def reverse_young_suite(F, n_samples: int = 200, seed: int = 0, tol: float = DEFAULT_TOL) -> InequalityReport:
    S = structure_of(F)
    from .algebra import random_positive

    reps = []
    for i in range(n_samples):
        x = random_positive(S.spec, seed, i, 20)
        y = random_positive(S.spec, seed, i, 21)
        for r, s, t in REVERSE_YOUNG_TRIPLES:
            reps.append(reverse_young2_check(S, x, y, r, s, t, tol))
    out = _merge("reverse_young2", reps)
    out.info = {"n_samples": n_samples, "seed": seed}
    return out


def sumset_suite(F, n_samples: int = 200, seed: int = 0, tol: float = DEFAULT_TOL) -> InequalityReport:
    S = structure_of(F)
    reps = []
    for i in range(n_samples):
        x, y = sample_pair(S.spec, seed, 3 * i + 2)  # rank-one positives
        reps.append(sumset_check(S, x, y, tol=tol))
        u, v = sample_pair(S.spec, seed, 3 * i + 1)  # full-rank positives
        reps.append(sumset_check(S, x, v, tol=tol))
    for e in S.spec.minimal_projections():
        for f in S.spec.minimal_projections():
            reps.append(sumset_check(S, e, f, tol=tol))
    out = _merge("sumset", reps)
    out.info = {"n_samples": n_samples, "seed": seed}
    return out


def qeci_suite(F, n_samples: int = 200, seed: int = 0, theta: float | None = None,
               tol: float = DEFAULT_TOL) -> InequalityReport:
    from .algebra import random_density

    S = structure_of(F)
    target = 1.0 / S.k
    reps = []
    for i in range(n_samples):
        x = random_density(S.spec, seed, i, 30, trace_value=target)
        y = random_density(S.spec, seed, i, 31, trace_value=target)
        reps.append(qeci_check(S, x, y, theta, tol))
    out = _merge("qeci", reps)
    out.info = {"n_samples": n_samples, "seed": seed, "theta": "max" if theta is None else theta}
    return out
