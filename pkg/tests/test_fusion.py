from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fnconv import linalg
from fnconv.fusion import (
    FIXTURES,
    OBSTRUCTED_FIXTURE,
    FusionRing,
    FusionRingError,
    criterion_T,
    delta1_regular,
    fp_dimensions,
    fp_vector,
    load_fixture,
    norm_identification_gap,
    product_vector_min,
    recheck_comult_witness,
    schur_value,
    search_comult_violation,
    search_schur_violation,
    square_coefficients,
    swap_block_example,
    validate,
)
from fnconv.groups import small_groups

from oracles import fusion_failures

PHI = (1 + 5**0.5) / 2


def z2_ring():
    return FusionRing.from_matrices([np.eye(2, dtype=int), [[0, 1], [1, 0]]], [0, 1])


def test_z2_from_matrices_validates():
    assert validate(z2_ring()).passed


def test_fixtures_validate(ring):
    rep = validate(ring)
    assert rep.passed, rep.failed()
    assert fusion_failures(ring.N.tolist(), ring.dual) == set()


def test_fibonacci_coefficient_two_is_still_a_ring():
    # x^2 = 1 + 2x is associative: every commutative rank-2 ring is
    R = load_fixture("fibonacci").with_coefficient(1, 1, 1, 2)
    assert validate(R).passed
    assert fp_dimensions(R)[1] == pytest.approx(1 + 2**0.5)


def test_associativity_failure_reported_with_indices():
    # Ising with sigma*psi changed to sigma + psi
    R = load_fixture("ising").with_coefficient(1, 2, 2, 1)
    rep = validate(R)
    assert not rep.passed
    failed = {c.name for c in rep.failed()}
    assert "associativity" in failed
    expected = {name for name, _ in fusion_failures(R.N.tolist(), R.dual)}
    assert failed == expected
    for idx in rep["associativity"].witness["failures"]:
        assert ("associativity", tuple(i - 1 for i in idx)) in fusion_failures(R.N.tolist(), R.dual)


def test_duality_failure():
    R = load_fixture("z3").with_coefficient(1, 1, 0, 1)
    rep = validate(R)
    assert "duality" in {c.name for c in rep.failed()}
    assert [2, 2] in rep["duality"].witness["failures"]


def test_bad_dual_map():
    R = FusionRing(load_fixture("z3").N, (0, 1, 1))
    assert not validate(R)["dual_involution"].passed
    with pytest.raises(FusionRingError):
        FusionRing(load_fixture("z3").N, (0, 1, 5))


def test_json_roundtrip(ring):
    again = FusionRing.from_json(ring.to_json())
    assert np.array_equal(again.N, ring.N) and again.dual == ring.dual


@pytest.mark.parametrize("bad", [{"rank": 2}, {"rank": 2, "dual": [1, 2], "N": [[1]]}, {"rank": "x", "dual": [], "N": []}])
def test_malformed_json(bad):
    with pytest.raises(FusionRingError):
        FusionRing.from_json(bad)


@pytest.mark.parametrize(
    "name, dims",
    [
        ("z2", [1, 1]),
        ("z4", [1, 1, 1, 1]),
        ("s3", [1] * 6),
        ("fibonacci", [1, PHI]),
        ("ising", [1, 2**0.5, 1]),
    ],
)
def test_fp_dimensions(name, dims):
    assert fp_dimensions(load_fixture(name)) == pytest.approx(dims, abs=1e-12)


def test_norm_identification(ring):
    assert norm_identification_gap(ring) <= 1e-9


def test_fp_vector_is_common_eigenvector(ring):
    v = fp_vector(ring)
    for M, d in zip(ring.matrices(), fp_dimensions(ring)):
        assert np.allclose(M @ v, d * v)


def test_criterion_T_on_z2():
    R = z2_ring()
    assert np.allclose(criterion_T(R, [1, 0]), np.eye(4))
    T = criterion_T(R, np.array([1, 1]) / np.sqrt(2))
    M2 = np.array([[0, 1], [1, 0]])
    assert np.allclose(T, np.eye(4) + np.kron(M2, M2))
    assert np.linalg.eigvalsh(T)[0] == pytest.approx(0.0, abs=1e-12)


def test_criterion_T_fibonacci_perron_vector():
    R = load_fixture("fibonacci")
    _, v = linalg.perron_eigen(R.matrices()[1])
    assert np.linalg.eigvalsh(criterion_T(R, v))[0] >= -1e-9


def test_criterion_T_rejects_zero():
    with pytest.raises(ValueError):
        criterion_T(z2_ring(), [0, 0])


def test_criterion_T_hermitian_for_random_vectors(ring):
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = rng.standard_normal(ring.rank) + 1j * rng.standard_normal(ring.rank)
        T = criterion_T(ring, v)
        assert linalg.hermitian_defect(T) <= 1e-10 * (1 + np.abs(T).max())


@pytest.mark.parametrize("name", list(small_groups()))
def test_no_violation_on_group_rings(name):
    R = FusionRing.from_group(small_groups()[name], name)
    assert search_comult_violation(R, 16, 0, iters=60).verdict == "pass"


def test_obstructed_fixture_is_certified():
    R = load_fixture(OBSTRUCTED_FIXTURE)
    assert validate(R).passed
    rep = search_comult_violation(R, 32, 0)
    assert rep.verdict == "violation"
    assert rep.value < -0.5
    lam = recheck_comult_witness(R, rep.witness)
    assert lam == pytest.approx(rep.witness["lambda_min"], abs=1e-12)
    # independent recomputation of T from the definition
    v = np.array([complex(a, b) for a, b in rep.witness["v"]])
    M = R.matrices().astype(float)
    T = sum((v.conj() @ m @ v) / np.linalg.norm(m, 2) * np.kron(m, m) for m in M)
    assert np.linalg.eigvalsh(0.5 * (T + T.conj().T))[0] < -1e-7


def test_search_is_deterministic_and_thread_independent():
    R = load_fixture(OBSTRUCTED_FIXTURE)
    a = search_comult_violation(R, 40, 3)
    b = search_comult_violation(R, 40, 3, threads=4)
    assert a.value == b.value and a.witness == b.witness


def test_schur_examples():
    R = z2_ring()
    v = np.array([1.0, -1.0])
    assert schur_value(R, v, v, v) == pytest.approx(0.0, abs=1e-12)
    e1 = np.array([1.0, 0.0])
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal(2), rng.standard_normal(2)
    assert schur_value(R, e1, a, b) == pytest.approx((a @ a) * (b @ b))


def test_schur_with_perron_vectors(ring):
    # v^* M_k v = d_k for the unit dimension vector, so the value is sum_k d_k^2
    v = fp_vector(ring)
    dims = np.array(fp_dimensions(ring))
    assert schur_value(ring, v, v, v) == pytest.approx(np.sum(dims**2))


def test_schur_matches_criterion_pairing(ring):
    rng = np.random.default_rng(4)
    for _ in range(20):
        v1, v2, v3 = (rng.standard_normal(ring.rank) + 1j * rng.standard_normal(ring.rank) for _ in range(3))
        T = criterion_T(ring, v1)
        w = np.kron(v2, v3)
        assert schur_value(ring, v1, v2, v3) == pytest.approx(np.vdot(w, T @ w).real, abs=1e-9)


def test_schur_search_on_fixtures(ring):
    assert search_schur_violation(ring, 16, 0, iters=60).verdict == "pass"


def test_product_vector_min_separates_criteria():
    M = swap_block_example()
    assert np.linalg.eigvalsh(M)[0] == pytest.approx(-1.0)
    assert product_vector_min(M, 16, 0) >= -1e-9
    assert product_vector_min(np.eye(9), 4, 0) == pytest.approx(1.0)


def test_product_vector_min_on_psd():
    rng = np.random.default_rng(9)
    g = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
    M = g @ g.conj().T
    assert product_vector_min(M, 8, 0) >= np.linalg.eigvalsh(M)[0] - 1e-9


def test_delta1_regular_matches_criterion(ring):
    rng = np.random.default_rng(6)
    for _ in range(10):
        a = rng.standard_normal(ring.rank) + 1j * rng.standard_normal(ring.rank)
        D1 = delta1_regular(ring, square_coefficients(ring, a))
        assert np.allclose(D1, criterion_T(ring, a.conj()), atol=1e-10)


def test_delta1_negative_at_obstruction_witness():
    R = load_fixture(OBSTRUCTED_FIXTURE)
    rep = search_comult_violation(R, 16, 0)
    v = np.array([complex(a, b) for a, b in rep.witness["v"]])
    D1 = delta1_regular(R, square_coefficients(R, v.conj()))
    assert np.linalg.eigvalsh(0.5 * (D1 + D1.conj().T))[0] < -1e-7


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["z3", "fibonacci", "ising"]), st.integers(0, 2**31))
def test_delta1_positive_on_categorifiable(name, seed):
    R = load_fixture(name)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(R.rank) + 1j * rng.standard_normal(R.rank)
    D1 = delta1_regular(R, square_coefficients(R, a))
    assert np.linalg.eigvalsh(0.5 * (D1 + D1.conj().T))[0] >= -1e-9 * max(1.0, np.abs(D1).max())


def test_fixture_list():
    assert set(FIXTURES) == {"z2", "z3", "z4", "z2xz2", "s3", "fibonacci", "ising"}
