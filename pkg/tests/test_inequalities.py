from __future__ import annotations

import numpy as np
import pytest

from fnconv.algebra import Element, entropy, normalize_trace, p_norm, random_density, random_positive, uniform_density
from fnconv.convolution import build_theta_swap
from fnconv.inequalities import (
    NormalizationError,
    SweepConfig,
    canonical_elements,
    conjugate_exponent_r,
    phase_young_check,
    qeci_check,
    qeci_suite,
    qeci_triple_check,
    recheck_young,
    reverse_young2_check,
    sumset_check,
    young_ratio,
    young_sweep,
)

from conftest import fn_algebra


def indicator(F, points):
    vals = np.zeros(F.spec.D)
    vals[list(points)] = 1.0
    return Element.diag(F.spec, vals)


@pytest.mark.parametrize("p, q, r", [(1, 1, 1), (1, np.inf, np.inf), (2, 2, np.inf), (1.5, 1.5, 3.0), (1, 2, 2)])
def test_conjugate_exponent(p, q, r):
    assert conjugate_exponent_r(p, q) == pytest.approx(r)


def test_inadmissible_pair():
    with pytest.raises(ValueError):
        conjugate_exponent_r(2, 3)


def test_sweep_grid_is_admissible():
    pairs = SweepConfig().pairs()
    assert len(pairs) == 15
    for p, q, r in pairs:
        assert 1 / p + 1 / q == pytest.approx(1 + (0 if r == np.inf else 1 / r))


def test_sweep_config_json_roundtrip():
    cfg = SweepConfig(n_samples=7, seed=3)
    assert SweepConfig.from_json(cfg.to_json()) == cfg


def test_young_equality_for_positive_pairs_at_p_q_1():
    F = fn_algebra("group:Z4")
    x, y = random_positive(F.spec, 0, 1), random_positive(F.spec, 0, 2)
    assert young_ratio(F.structure, x, y, 1, 1) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p, q, r", SweepConfig().pairs())
def test_point_masses_give_equality(p, q, r):
    F = fn_algebra("group:Z4")
    e = F.spec.minimal_projections()
    assert young_ratio(F.structure, e[1], e[2], p, q) == pytest.approx(1.0, abs=1e-12)


def test_young_sweep_passes_on_group_algebra():
    rep = young_sweep(fn_algebra("group:S3"), SweepConfig(n_samples=120))
    assert rep.passed
    assert max(c.stats["max_ratio"] for c in rep.cases) >= 1 - 1e-9


def test_young_sweep_thread_independent():
    F = fn_algebra("fusion:ising")
    a = young_sweep(F, SweepConfig(n_samples=30), threads=1).to_json()
    b = young_sweep(F, SweepConfig(n_samples=30), threads=3).to_json()
    assert a == b


def test_theta_swap_young_failure_and_witness():
    S = build_theta_swap(0.5, 2)
    rep = young_sweep(S, SweepConfig(n_samples=60))
    assert not rep.passed
    worst = rep.worst_case
    assert worst.stats["max_ratio"] == pytest.approx(1.5)
    assert abs(recheck_young(S, worst.witness) - worst.witness["ratio"]) <= 1e-12


def test_theta_swap_failure_by_hand():
    # x a rank-one projection, y = I: x*y = 2 theta x + (1-theta) I
    S = build_theta_swap(0.5, 2)
    x = Element(S.spec, [np.diag([1.0, 0.0])])
    assert young_ratio(S, x, S.spec.identity(), 1, np.inf) == pytest.approx(1.5)


def test_canonical_elements_are_distinct():
    F = fn_algebra("group:Z3")
    can = canonical_elements(F.spec)
    assert len(can) == 4  # identity plus three point masses


def test_phase_young_single_pair_is_young():
    F = fn_algebra("group:Z4")
    x, y = random_positive(F.spec, 1, 1), random_positive(F.spec, 1, 2)
    rep = phase_young_check(F, [x], [y], 1.5, 1.5, 64)
    stats = rep.cases[0].stats
    assert rep.passed
    assert stats["rhs_min"] == pytest.approx(stats["rhs_max"])


def test_phase_young_two_pairs():
    F = fn_algebra("group:Z4")
    xs = [random_positive(F.spec, 2, i) for i in range(2)]
    ys = [random_positive(F.spec, 3, i) for i in range(2)]
    assert phase_young_check(F, xs, ys, 2, 2, 512).passed


def test_phase_young_compares_with_some_t_not_all():
    # equal point masses: the left side is 2 but the right side vanishes at t = 1/2
    F = fn_algebra("group:Z4")
    d = F.spec.minimal_projections()[0]
    rep = phase_young_check(F, [d, d], [d, d], 1, 1, 64)
    stats = rep.cases[0].stats
    assert stats["lhs"] == pytest.approx(2.0)
    assert stats["rhs_min"] == pytest.approx(0.0, abs=1e-12)
    assert stats["rhs_max"] == pytest.approx(4.0)
    assert rep.passed


def test_phase_young_zero_entry():
    F = fn_algebra("group:Z4")
    x, y = random_positive(F.spec, 4, 1), random_positive(F.spec, 4, 2)
    zero = F.spec.zeros()
    rep = phase_young_check(F, [x, zero], [y, zero], 2, 2, 32)
    assert rep.passed
    assert rep.cases[0].stats["rhs_max"] == pytest.approx(p_norm(x, 2) * p_norm(y, 2))


def test_phase_young_errors():
    F = fn_algebra("group:Z2")
    with pytest.raises(ValueError):
        phase_young_check(F, [], [], 1, 1)
    with pytest.raises(ValueError):
        phase_young_check(F, [F.spec.identity()], [], 1, 1)


@pytest.mark.parametrize("r, s, t", [(0.5, 2 / 3, 2 / 3), (0.75, 6 / 7, 6 / 7), (1.0, 1.0, 1.0), (0.5, 1.0, 0.5)])
def test_reverse_young_point_mass_equality(r, s, t):
    F = fn_algebra("group:Z4")
    d = F.spec.minimal_projections()[0]
    rep = reverse_young2_check(F, d, d, r, s, t)
    assert rep.cases[0].stats["lhs"] == pytest.approx(1.0)
    assert rep.cases[0].stats["rhs"] == pytest.approx(1.0)


@pytest.mark.parametrize("r, s, t", [(0.5, 2 / 3, 2 / 3), (1.0, 1.0, 1.0)])
def test_reverse_young_uniform(r, s, t):
    F = fn_algebra("group:Z4")
    u = uniform_density(F.spec)
    rep = reverse_young2_check(F, u, u, r, s, t)
    assert rep.cases[0].stats["lhs"] >= rep.cases[0].stats["rhs"] * (1 - 1e-12)


def test_reverse_young_all_ones_is_haar():
    F = fn_algebra("fusion:fibonacci")
    x, y = random_positive(F.spec, 5, 1), random_positive(F.spec, 5, 2)
    st = reverse_young2_check(F, x, y, 1, 1, 1).cases[0].stats
    assert st["lhs"] == pytest.approx(st["rhs"])


def test_reverse_young_exponent_errors():
    F = fn_algebra("group:Z2")
    u = uniform_density(F.spec)
    with pytest.raises(ValueError, match="relation"):
        reverse_young2_check(F, u, u, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        reverse_young2_check(F, u, u, 1.5, 1, 1)


def test_sumset_subgroup_indicator():
    F = fn_algebra("group:Z4")
    h = indicator(F, [0, 2])
    st = sumset_check(F, h, h).cases[0].stats
    assert st["lhs"] == pytest.approx(2.0) and st["rhs"] == pytest.approx(2.0)


def test_sumset_translation():
    F = fn_algebra("group:Z4")
    g = F.spec.minimal_projections()[3]
    y = indicator(F, [0, 1]) * 0.7
    st = sumset_check(F, g, y).cases[0].stats
    assert st["lhs"] == pytest.approx(2.0) and st["rhs"] == pytest.approx(2.0)


def test_sumset_full_support():
    F = fn_algebra("fusion:ising")
    u = uniform_density(F.spec)
    st = sumset_check(F, u, u).cases[0].stats
    assert st["lhs"] == pytest.approx(F.spec.d) and st["rhs"] == pytest.approx(F.spec.d)


def test_qeci_uniform_equality():
    F = fn_algebra("group:D4")
    u = uniform_density(F.spec)
    st = qeci_check(F, u, u).cases[0].stats
    assert st["H(x*y)"] == pytest.approx(np.log(8), abs=1e-12)
    assert st["H(x)"] == pytest.approx(np.log(8), abs=1e-12)


def test_qeci_subgroup_equality():
    F = fn_algebra("group:Z4")
    x = normalize_trace(indicator(F, [0, 2]))
    st = qeci_check(F, x, x).cases[0].stats
    assert st["H(x*y)"] == pytest.approx(np.log(2), abs=1e-12)


def test_qeci_normalization_error():
    F = fn_algebra("group:Z4")
    with pytest.raises(NormalizationError):
        qeci_check(F, F.spec.identity(), uniform_density(F.spec))


def test_qeci_theta_swap_weighted_form():
    S = build_theta_swap(0.5, 2)
    assert qeci_suite(S, 100, theta=0.5).passed
    # the max form fails: a pure state convolved with I/2
    x = Element(S.spec, [np.diag([1.0, 0.0])])
    u = uniform_density(S.spec)
    assert not qeci_check(S, x, u).passed
    assert qeci_check(S, x, u, theta=0.5).passed


def test_qeci_triple():
    F = fn_algebra("fusion:ising")
    xs = [random_density(F.spec, 6, i) for i in range(3)]
    rep = qeci_triple_check(F, *xs)
    assert rep.passed and len(rep.cases) == 2
    assert rep["left"].stats["H"] == pytest.approx(rep["right"].stats["H"])
    with pytest.raises(ValueError):
        qeci_triple_check(F, *xs, association_order="middle")


def test_reports_serialize():
    F = fn_algebra("group:Z2")
    rep = young_sweep(F, SweepConfig(n_samples=5))
    js = rep.to_json()
    assert js["verdict"] == "pass" and len(js["cases"]) == 15
    assert entropy(uniform_density(F.spec)) == pytest.approx(np.log(2))
