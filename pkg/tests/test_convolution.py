from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fnconv.algebra import (
    AlgebraSpec,
    Element,
    inner,
    p_norm,
    random_density,
    random_element,
    stream,
    tensor,
    trace,
)
from fnconv.convolution import (
    Antipode,
    AxiomError,
    ConvolutionStructure,
    FNAlgebra,
    GroupTableError,
    build_fusion_bialgebra,
    build_group_algebra,
    build_theta_swap,
    build_unitary_convolution,
    check_antipode,
    check_associativity,
    check_frobenius,
    check_good_convolution,
    swap_unitary,
    theta_swap_closed_form,
    validate_group_table,
)
from fnconv.fusion import FusionRing, load_fixture
from fnconv.groups import cyclic, small_groups

from conftest import fn_algebra


def test_group_algebra_convolution_is_group_convolution():
    t = small_groups()["S3"]
    F = build_group_algebra(t)
    rng = np.random.default_rng(0)
    f, g = rng.standard_normal(6), rng.standard_normal(6)
    expected = np.zeros(6)
    for a in range(6):
        for b in range(6):
            expected[t[a, b]] += f[a] * g[b]
    out = F.convolve(Element.diag(F.spec, f), Element.diag(F.spec, g))
    assert np.allclose(out.coords, expected)


def test_point_masses_multiply():
    F = build_group_algebra(cyclic(4))
    e = F.spec.minimal_projections()
    assert F.convolve(e[1], e[3]).allclose(e[0])
    assert F.convolve(e[2], e[3]).allclose(e[1])


@pytest.mark.parametrize("name", list(small_groups()))
def test_every_small_group_builds(name):
    F = build_group_algebra(small_groups()[name])
    assert isinstance(F, FNAlgebra)
    assert F.k == 1.0


@pytest.mark.parametrize(
    "table",
    [
        [[0, 1], [1, 1]],  # no inverse
        [[1, 1], [1, 1]],  # no identity
        [[0, 1, 2], [1, 0, 2], [2, 2, 0]],  # not a latin square
        [[0, 5], [5, 0]],
    ],
)
def test_bad_group_tables(table):
    with pytest.raises(GroupTableError):
        validate_group_table(table)


def test_non_associative_loop_rejected():
    # order-5 loop with identity and inverses that is not associative
    t = [
        [0, 1, 2, 3, 4],
        [1, 0, 3, 4, 2],
        [2, 4, 0, 1, 3],
        [3, 2, 4, 0, 1],
        [4, 3, 1, 2, 0],
    ]
    with pytest.raises(GroupTableError, match="associativity"):
        validate_group_table(t)


@pytest.mark.parametrize("key", ["group:Z3", "group:S3", "fusion:fibonacci", "fusion:ising"])
def test_convolution_and_comultiplication_are_adjoint(key):
    S = fn_algebra(key).structure
    rng = stream(3, 0)
    x, y, z = (random_element(S.spec, rng) for _ in range(3))
    assert inner(S.convolve(x, y), z) == pytest.approx(inner(tensor(x, y), S.comultiply(z)))


def test_unitary_convolution_matches_partial_trace():
    n = 2
    rng = np.random.default_rng(5)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    U, _ = np.linalg.qr(a)
    S = build_unitary_convolution(U, n)
    x, y = (random_element(S.spec, stream(5, i)) for i in range(2))
    big = U @ np.kron(x.blocks[0], y.blocks[0]) @ U.conj().T
    expected = np.einsum("ikjk->ij", big.reshape(n, n, n, n))
    assert np.allclose(S.convolve(x, y).blocks[0], expected)
    # Delta(z) = U^*(z (x) I)U
    z = random_element(S.spec, stream(5, 3))
    assert np.allclose(S.comultiply(z).blocks[0], U.conj().T @ np.kron(z.blocks[0], np.eye(n)) @ U)


def test_unitary_convolution_rejects_non_unitary():
    with pytest.raises(ValueError):
        build_unitary_convolution(2 * np.eye(4), 2)


@pytest.mark.parametrize("theta", [0.0, 0.25, 0.5, 1.0])
@pytest.mark.parametrize("n", [2, 3])
def test_theta_swap_closed_form(theta, n):
    S = build_theta_swap(theta, n)
    x, y = (random_element(S.spec, stream(6, i)) for i in range(2))
    assert S.convolve(x, y).allclose(theta_swap_closed_form(theta, x, y), atol=1e-12)


def test_theta_swap_endpoints():
    x, y = (random_density(AlgebraSpec.matrix(2), 7, i) for i in range(2))
    assert build_theta_swap(1.0, 2).convolve(x, y).allclose(x, atol=1e-12)
    assert build_theta_swap(0.0, 2).convolve(x, y).allclose(y, atol=1e-12)
    assert np.allclose(swap_unitary(2) @ swap_unitary(2), np.eye(4))


def test_theta_swap_is_good_but_not_frobenius():
    S = build_theta_swap(0.5, 2)
    assert check_good_convolution(S, 50).passed
    rep = check_frobenius(S, Antipode.transpose(S.spec), 10)
    assert not rep.passed
    with pytest.raises(AxiomError) as err:
        FNAlgebra.assemble(S, Antipode.transpose(S.spec))
    assert err.value.axiom == "frobenius_reciprocity"


@pytest.mark.parametrize("key", ["group:Z4", "group:Q8", "fusion:fibonacci", "fusion:ising"])
def test_verified_reports_pass(key):
    F = fn_algebra(key)
    assert all(r.passed for r in F.verified)
    assert check_associativity(F.structure, 30).passed


def test_haar_identity_and_k_estimate():
    F = fn_algebra("fusion:ising")
    rep = check_good_convolution(F.structure, 20)
    assert rep.info["k_estimate"] == pytest.approx(1.0)


def test_perturbed_structure_fails_with_witness():
    F = fn_algebra("group:Z3")
    bad = F.structure.perturbed((1, 1, 0), -0.5)
    rep = check_good_convolution(bad, 20)
    assert not rep["positivity"].passed
    assert rep["positivity"].witness is not None
    with pytest.raises(AxiomError):
        FNAlgebra.assemble(bad, F.antipode)


@pytest.mark.parametrize("trace_factor, conv_factor", [(2.0, 1.0), (1.0, 3.0), (0.5, 0.25)])
def test_rescaling_changes_k(trace_factor, conv_factor):
    F = fn_algebra("group:S3")
    S = F.structure.rescaled(trace_factor, conv_factor)
    assert S.k == pytest.approx(trace_factor / conv_factor)
    rho = Antipode(S.spec, F.antipode.perm)
    rep = check_good_convolution(S, 30)
    assert rep.passed
    assert rep.info["k_estimate"] == pytest.approx(S.k)
    assert check_frobenius(S, rho, 10).passed


def test_antipode_twice_is_automorphism():
    spec = AlgebraSpec(((2, 1.0), (2, 1.0), (1, 2.0)))
    rng = np.random.default_rng(8)
    us = []
    for n in spec.dims:
        q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        us.append(q)
    rho = Antipode(spec, (1, 0, 2), tuple(us))
    assert check_antipode(rho, 30).passed
    x, y = (random_element(spec, stream(8, i)) for i in range(2))
    rr = lambda v: rho(rho(v))
    assert rr(x @ y).allclose(rr(x) @ rr(y), atol=1e-12)
    assert rr(x.H).allclose(rr(x).H, atol=1e-12)


def test_antipode_validation():
    spec = AlgebraSpec(((1, 1.0), (2, 1.0)))
    with pytest.raises(ValueError):
        Antipode(spec, (1, 0))
    with pytest.raises(ValueError):
        Antipode(spec, (0, 1), (np.eye(1), 2 * np.eye(2)))


def test_structure_json_roundtrip():
    S = fn_algebra("fusion:fibonacci").structure
    T = ConvolutionStructure.from_json(S.to_json())
    assert T.spec == S.spec and T.k == S.k
    assert np.array_equal(T.tensor, S.tensor)


def test_fusion_bialgebra_requires_commuting_matrices():
    # group ring of S3 validates but its fusion matrices do not commute
    ring = FusionRing.from_group(small_groups()["S3"])
    with pytest.raises(ValueError, match="commute"):
        build_fusion_bialgebra(ring)


def test_fusion_bialgebra_weights_are_squared_dimensions():
    F = build_fusion_bialgebra(load_fixture("fibonacci"))
    phi = (1 + 5**0.5) / 2
    assert F.spec.weights == pytest.approx((1.0, phi**2))
    # the preimage of x_k is the point mass scaled by 1/d_k
    e = F.spec.minimal_projections()
    x2 = e[1] * (1 / phi)
    out = F.convolve(x2, x2)
    assert out.allclose(e[0] + e[1] * (1 / phi), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["group:Z4", "group:D4", "fusion:ising"]))
def test_frobenius_reciprocity_property(seed, key):
    F = fn_algebra(key)
    S, rho = F.structure, F.antipode
    rng = stream(seed, 0)
    x, y, z = (random_element(S.spec, rng) for _ in range(3))
    lhs = trace(S.convolve(x, y) @ z)
    rhs = trace(S.convolve(rho(z), x) @ rho(y))
    scale = p_norm(x, 1) * p_norm(y, 1) * p_norm(z, np.inf)
    assert abs(lhs - rhs) <= 1e-10 * scale
