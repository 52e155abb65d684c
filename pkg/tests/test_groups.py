import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liespec import groups
from liespec.errors import BandlimitError, ConfigurationError, ParameterError

import oracles

T1 = groups.Torus(1)
T2 = groups.Torus(2)
SU2 = groups.SU2()


def test_backend_names():
    assert groups.get_backend("torus1").ndim == 1
    assert groups.get_backend("torus2").ndim == 2
    assert groups.get_backend("su2").name == "su2"
    with pytest.raises(ConfigurationError):
        groups.get_backend("so3")


def test_dual_cut_one_is_trivial_only():
    duals = groups.enumerate_dual(T1, 1.0)
    assert [d.label for d in duals] == [(0,)]


def test_torus_laplacian_normalisation():
    d = T1.dual((3,))
    assert d.laplace_eig == pytest.approx(oracles.LAPLACE_K3_FROZEN, rel=1e-15)
    # second difference of the character
    h = 1e-4
    x = np.array([0.1])
    f = lambda s: np.exp(2j * np.pi * 3 * s)
    lap = -(f(x + h) - 2 * f(x) + f(x - h)) / h**2 / f(x)
    assert lap.real[0] == pytest.approx(d.laplace_eig, rel=1e-6)


def test_su2_dual_enumeration():
    duals = groups.enumerate_dual(SU2, 2.0)
    assert [d.label for d in duals] == [0.0, 0.5, 1.0]
    assert [d.laplace_eig for d in duals] == [0.0, 0.75, 2.0]
    assert [d.dim for d in duals] == [1, 2, 3]
    for d in duals:
        assert d.bracket**2 - 1 == pytest.approx(d.laplace_eig, abs=1e-14)


def _su2_casimir(spin, pt, h=1e-4):
    """Apply minus the sum of squared left-invariant derivatives to the rep matrix."""
    gens = [np.array([[0, 1j], [1j, 0]]), np.array([[0, 1], [-1, 0]]), np.array([[1j, 0], [0, -1j]])]
    g = SU2.matrix(pt[None, :])[0]
    d = SU2.dual(spin)
    total = 0
    for X in gens:
        mats = []
        for s in (-h, 0.0, h):
            # exp(s X / 2) stays in SU(2)
            e = np.cos(s / 2) * np.eye(2) + np.sin(s / 2) * X
            eul = SU2.euler_from_matrix(g @ e)
            mats.append(SU2.rep_on_points(d, eul[None, :])[0])
        total = total - (mats[0] - 2 * mats[1] + mats[2]) / h**2
    return total, SU2.rep_on_points(d, pt[None, :])[0]


@pytest.mark.parametrize("spin", [0.5, 1.0, 1.5])
def test_su2_casimir_oracle(spin):
    pt = np.array([0.4, 1.1, 2.3])
    lap, rep = _su2_casimir(spin, pt)
    assert np.allclose(lap, spin * (spin + 1) * rep, atol=1e-5)


def test_rep_identity_values():
    assert groups.rep_matrix(T1, T1.dual((5,)), np.array([0.0]))[0, 0] == 1
    D = groups.rep_matrix(SU2, SU2.dual(0.5), SU2.identity())
    assert np.allclose(D, np.eye(2), atol=1e-15)


@pytest.mark.parametrize("spin", [0.5, 1.0, 2.5, 7.0])
def test_su2_unitarity_and_homomorphism(spin):
    rng = np.random.default_rng(3)
    d = SU2.dual(spin)
    for _ in range(5):
        x, y = SU2.random_point(rng), SU2.random_point(rng)
        Dx = groups.rep_matrix(SU2, d, x)
        Dy = groups.rep_matrix(SU2, d, y)
        Dxy = groups.rep_matrix(SU2, d, SU2.multiply(x, y))
        assert np.linalg.norm(Dx @ Dx.conj().T - np.eye(d.dim)) <= 1e-10
        assert np.linalg.norm(Dxy - Dx @ Dy) <= 1e-9


def test_torus2_homomorphism():
    rng = np.random.default_rng(0)
    d = T2.dual((2, -3))
    x, y = T2.random_point(rng), T2.random_point(rng)
    lhs = groups.rep_matrix(T2, d, T2.multiply(x, y))
    assert np.allclose(lhs, groups.rep_matrix(T2, d, x) @ groups.rep_matrix(T2, d, y))


def test_uniform_grid_weights():
    g = groups.haar_quadrature(T1, 8)
    assert g.size == 8
    assert np.all(g.weights == 1 / 8)
    f = np.exp(2j * np.pi * 3 * g.nodes[:, 0])
    assert abs(np.sum(g.weights * f)) <= 1e-14


@pytest.mark.parametrize("backend,res", [(T1, 16), (T2, 8), (SU2, 6)])
def test_weights_normalised(backend, res):
    g = groups.haar_quadrature(backend, res)
    assert math.fsum(g.weights) == pytest.approx(1.0, abs=1e-12)
    assert np.all(g.weights > 0)


def test_su2_peter_weyl_normalisation():
    g = groups.haar_quadrature(SU2, 12)
    D = SU2.rep_on_points(SU2.dual(1.0), g.nodes)
    # rows/cols ordered m = 1, 0, -1
    val = np.sum(g.weights * np.abs(D[:, 1, 1]) ** 2)
    assert val == pytest.approx(1 / 3, abs=1e-10)


def test_su2_orthogonality_table():
    g = groups.haar_quadrature(SU2, 8)
    duals = groups.enumerate_dual(SU2, math.sqrt(1 + 2.0 * 3.0) + 1e-9)
    cols = []
    for d in duals:
        R = SU2.rep_on_points(d, g.nodes)
        cols.extend(R[:, i, j] for i in range(d.dim) for j in range(d.dim))
    A = np.array(cols).T
    gram = A.T @ (g.weights[:, None] * A.conj())
    dims = np.concatenate([[d.dim] * d.dim**2 for d in duals])
    assert np.allclose(gram, np.diag(1.0 / dims), atol=1e-12)


def test_bandlimit_refusal():
    with pytest.raises(BandlimitError):
        groups.haar_quadrature(T1, 8, bandlimit=10)
    g = groups.haar_quadrature(T1, 8)
    with pytest.raises(BandlimitError):
        groups.fourier_transform(T1, g, np.ones(8), [T1.dual((5,))])
    with pytest.raises(ParameterError):
        groups.haar_quadrature(T1, 1)


def test_fourier_of_constant_and_character():
    g = groups.haar_quadrature(T1, 16)
    duals = groups.enumerate_dual(T1, T1.dual((3,)).bracket + 1e-9)
    c = groups.fourier_transform(T1, g, np.ones(16), duals)
    for d in duals:
        assert abs(c[d][0, 0] - (1.0 if d.label == (0,) else 0.0)) <= 1e-14
    f = np.exp(2j * np.pi * 2 * g.nodes[:, 0])
    c = groups.fourier_transform(T1, g, f, duals)
    for d in duals:
        assert abs(c[d][0, 0] - (1.0 if d.label == (2,) else 0.0)) <= 1e-14


def test_su2_fourier_single_entry():
    g = groups.haar_quadrature(SU2, 8)
    d1 = SU2.dual(1.0)
    f = math.sqrt(3) * SU2.rep_on_points(d1, g.nodes)[:, 1, 1]
    duals = groups.enumerate_dual(SU2, math.sqrt(1 + 2.0) + 1e-9)
    c = groups.fourier_transform(SU2, g, f, duals)
    # f_hat(xi)_{ij} = int f conj(D_{ji}) = sqrt3 * delta / 3
    expect = np.zeros((3, 3))
    expect[1, 1] = math.sqrt(3) / 3
    assert np.allclose(c[d1], expect, atol=1e-12)
    for d in duals:
        if d != d1:
            assert np.max(np.abs(c[d])) <= 1e-12


def test_inverse_constant_and_cosine_roundtrip():
    coeffs = groups.FourierCoefficients({T1.dual((0,)): np.ones((1, 1))})
    x = np.linspace(0, 1, 7)[:, None]
    assert np.allclose(groups.inverse_fourier(T1, coeffs, x), 1.0)
    g = groups.haar_quadrature(T1, 16)
    f = np.cos(2 * np.pi * g.nodes[:, 0])
    duals = groups.enumerate_dual(T1, T1.dual((2,)).bracket + 1e-9)
    back = groups.inverse_fourier(T1, groups.fourier_transform(T1, g, f, duals), g.nodes)
    assert np.max(np.abs(back - f)) <= 1e-12


def _random_coeffs(backend, duals, rng):
    return groups.FourierCoefficients({
        d: rng.standard_normal((d.dim, d.dim)) + 1j * rng.standard_normal((d.dim, d.dim))
        for d in duals})


def test_su2_random_roundtrip():
    rng = np.random.default_rng(11)
    g = groups.haar_quadrature(SU2, 8)
    duals = groups.enumerate_dual(SU2, math.sqrt(1 + 6.0) + 1e-9)
    c = _random_coeffs(SU2, duals, rng)
    f = groups.inverse_fourier(SU2, c, g.nodes)
    back = groups.inverse_fourier(SU2, groups.fourier_transform(SU2, g, f, duals), g.nodes)
    assert np.max(np.abs(back - f)) <= 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_parseval_property_torus2(seed):
    rng = np.random.default_rng(seed)
    g = groups.haar_quadrature(T2, 12)
    duals = groups.enumerate_dual(T2, T2.dual((2, 2)).bracket + 1e-9)
    c = _random_coeffs(T2, duals, rng)
    f = groups.inverse_fourier(T2, c, g.nodes)
    norm2 = groups.l2_norm_on_grid(g, f) ** 2
    assert abs(norm2 - c.norm() ** 2) <= 1e-10 * norm2


def test_dual_enumeration_stable():
    a = groups.enumerate_dual(T2, 20.0)
    b = groups.enumerate_dual(T2, 20.0)
    assert [d.label for d in a] == [d.label for d in b]
    eigs = [d.laplace_eig for d in a]
    assert eigs == sorted(eigs)


def test_torus_ball_measure_and_saturation():
    g = groups.haar_quadrature(T1, 400)
    ball = groups.geodesic_ball(T1, np.array([0.0]), 0.25, g)
    assert abs(ball.measure - 0.5) <= 1 / 400
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        full = groups.geodesic_ball(T1, np.array([0.0]), 0.6, g)
    assert full.saturated and full.measure == pytest.approx(1.0)
    assert any("diameter" in str(x.message) for x in w)
    edge = groups.geodesic_ball(T1, np.array([0.0]), 0.5, g)
    assert edge.measure == pytest.approx(1.0)


def test_su2_cap_volume():
    g = groups.haar_quadrature(SU2, 40)
    for r in (1.0, math.pi, 4.5):
        ball = groups.geodesic_ball(SU2, SU2.identity(), r, g)
        assert ball.measure == pytest.approx(oracles.su2_cap_volume(r), abs=0.02)
        assert SU2.ball_volume(r) == pytest.approx(oracles.su2_cap_volume(r), abs=1e-15)
    assert oracles.su2_cap_volume(math.pi) == pytest.approx(0.5)


def test_su2_distance_is_bi_invariant():
    rng = np.random.default_rng(2)
    x, y, z = (SU2.random_point(rng) for _ in range(3))
    d0 = SU2.distance(x, y[None, :])[0]
    d1 = SU2.distance(SU2.multiply(z, x), SU2.multiply(z, y)[None, :])[0]
    assert d0 == pytest.approx(d1, abs=1e-10)
    assert 0 <= d0 <= 2 * math.pi


def test_ball_masks_monotone():
    g = groups.haar_quadrature(T2, 24)
    c = np.array([0.3, 0.7])
    masks = [groups.geodesic_ball(T2, c, r, g).mask for r in (0.1, 0.2, 0.35)]
    assert np.all(masks[0] <= masks[1]) and np.all(masks[1] <= masks[2])


def test_arc_set_mask_matches_descriptor():
    g = groups.panel_quadrature(T1, 16, [0.9, 0.2])
    om = groups.arc_set(T1, g, [(0.9, 1.2)])
    x = g.nodes[:, 0]
    expect = (x > 0.9) | (x < 0.2)
    assert np.array_equal(om.mask, expect)
    assert om.measure == pytest.approx(0.3, abs=1e-14)
    assert groups.empty_set(g).empty


def test_panel_grid_integrates_arc_exactly():
    g = groups.panel_quadrature(T1, 32, [0.0, 0.3])
    om = groups.arc_set(T1, g, [(0.0, 0.3)])
    x = g.nodes[om.mask, 0]
    w = g.weights[om.mask]
    val = np.sum(w * np.exp(2j * np.pi * 5 * x))
    exact = (np.exp(2j * np.pi * 5 * 0.3) - 1) / (2j * np.pi * 5)
    assert abs(val - exact) <= 1e-14
