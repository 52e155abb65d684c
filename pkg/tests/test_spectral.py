import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liespec import groups, spectral, symbols
from liespec.errors import BandlimitError, ParameterError, UnfittableError

import oracles

T1 = groups.Torus(1)
SU2 = groups.SU2()


def lap_t1(cut=40.0):
    return symbols.make_operator("laplacian_power", T1, cut, m=2.0)


@pytest.fixture(scope="module")
def grid64():
    return groups.haar_quadrature(T1, 64)


def test_seven_modes(grid64):
    sub = spectral.build_subspace(lap_t1(), 2 * math.pi * 3 * (1 + 1e-12), grid=grid64)
    assert len(sub) == 7
    assert sorted(md.dual.label[0] for md in sub.modes) == [-3, -2, -1, 0, 1, 2, 3]
    assert np.all(np.diff(sub.freqs) >= 0)
    assert np.allclose(sub.freqs, 2 * np.pi * np.abs([md.dual.label[0] for md in sub.modes]))


def test_constant_mode_only():
    op = symbols.make_operator("shifted_power", T1, 10.0, c=1.0)
    sub = spectral.build_subspace(op, 2.0)
    assert len(sub) == 1 and sub.modes[0].dual.label == (0,)


def test_su2_fourteen_modes():
    op = symbols.make_operator("shifted_power", SU2, 3.0, c=1.0)
    sub = spectral.build_subspace(op, math.sqrt(3.0) + 1e-9)
    assert len(sub) == 14
    assert sorted({md.dual.label for md in sub.modes}) == [0.0, 0.5, 1.0]


def test_build_refuses_band_limit(grid64):
    with pytest.raises(BandlimitError):
        spectral.build_subspace(lap_t1(), 2 * math.pi * 40, grid=grid64)


def test_eigenmode_contract_su2():
    op = symbols.make_operator("diag_perturbed", SU2, 4.0, eta=0.3, seed=4)
    sub = spectral.build_subspace(op, 2.0)
    for j, md in enumerate(sub.modes):
        c = sub.mode_coefficients(j)
        out = symbols.apply_operator(op, c)
        diff = out[md.dual] - md.eig * c[md.dual]
        assert np.linalg.norm(diff) <= 1e-10 * max(1.0, md.eig)


def test_full_group_gram_identity():
    g = groups.haar_quadrature(SU2, 10)
    op = symbols.make_operator("diag_perturbed", SU2, 4.0, eta=0.2, seed=1)
    sub = spectral.build_subspace(op, 2.5, grid=g)
    M = spectral.gram_on_set(sub, groups.full_set(g), g).matrix
    assert np.max(np.abs(M - np.eye(len(sub)))) <= 1e-8
    assert spectral.observability_constant(sub, groups.full_set(g), g).lam_min == pytest.approx(1.0, abs=1e-8)


def test_synthesize_examples(grid64):
    sub = spectral.build_subspace(lap_t1(), 2 * math.pi * 3 * (1 + 1e-12))
    e = np.zeros(7)
    e[0] = 1
    assert np.array_equal(spectral.synthesize(sub, e, grid64), sub.evaluate(grid64.nodes)[:, 0])
    assert np.all(spectral.synthesize(sub, np.zeros(7), grid64) == 0)
    with pytest.raises(ParameterError):
        spectral.synthesize(sub, np.zeros(6), grid64)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_parseval_seven_modes(seed):
    g = groups.haar_quadrature(T1, 64)
    sub = spectral.build_subspace(lap_t1(), 2 * math.pi * 3 * (1 + 1e-12))
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    k = spectral.synthesize(sub, a, g)
    assert abs(groups.l2_norm_on_grid(g, k) ** 2 - np.sum(np.abs(a) ** 2)) <= 1e-10 * np.sum(np.abs(a) ** 2)


def two_mode_problem():
    g = groups.panel_quadrature(T1, 32, [0.0, 0.5])
    op = lap_t1()
    sub = spectral.build_subspace(op, 2 * math.pi * (1 + 1e-12))
    sub = sub.restrict([i for i, md in enumerate(sub.modes) if md.dual.label[0] in (0, 1)])
    om = groups.arc_set(T1, g, [(0.0, 0.5)])
    return sub, om, g


def test_two_mode_gram_matches_analytic():
    sub, om, g = two_mode_problem()
    M = spectral.gram_on_set(sub, om, g).matrix
    labels = [md.dual.label[0] for md in sub.modes]
    i0, i1 = labels.index(0), labels.index(1)
    # int_0^{1/2} e^{-2 pi i x} dx = 2 / (2 pi i) = -i / pi
    assert M[i0, i0] == pytest.approx(0.5, abs=1e-14)
    assert M[i0, i1] == pytest.approx(-1j / math.pi, abs=1e-14)
    eig = np.linalg.eigvalsh(M)
    assert np.allclose(eig, oracles.GRAM_2MODE_EIGS_FROZEN, atol=1e-12)
    lam, vec = spectral.observability_constant(sub, om, g)
    assert lam == pytest.approx(0.5 - 1 / math.pi, abs=1e-12)
    assert np.linalg.norm(M @ vec - lam * vec) <= 1e-12


def test_gram_invariants():
    sub, om, g = two_mode_problem()
    M = spectral.gram_on_set(sub, om, g).matrix
    assert np.max(np.abs(M - M.conj().T)) <= 1e-12
    assert np.all(np.real(np.diag(M)) <= 1 + 1e-12)


def test_empty_omega_degenerate():
    sub, _, g = two_mode_problem()
    gm = spectral.gram_on_set(sub, groups.empty_set(g), g)
    assert gm.degenerate and not gm.matrix.any()
    obs = spectral.observability_constant(sub, groups.empty_set(g), g)
    assert obs.lam_min == 0 and obs.degenerate


def test_rayleigh_oracle():
    g = groups.panel_quadrature(T1, 32, [0.1, 0.45])
    om = groups.arc_set(T1, g, [(0.1, 0.45)])
    sub = spectral.build_subspace(lap_t1(), 2 * math.pi * 4 * (1 + 1e-12))
    M = spectral.gram_on_set(sub, om, g).matrix
    lam = spectral.observability_constant(sub, om, g).lam_min
    rng = np.random.default_rng(0)
    a = rng.standard_normal((1000, len(sub))) + 1j * rng.standard_normal((1000, len(sub)))
    a /= np.linalg.norm(a, axis=1)[:, None]
    q = np.real(np.einsum("ni,ij,nj->n", a.conj(), M, a))
    assert q.min() >= lam - 1e-10


def test_loewner_chain():
    g = groups.panel_quadrature(T1, 32, [0.0, 0.2, 0.3, 0.5])
    sub = spectral.build_subspace(lap_t1(), 2 * math.pi * 3 * (1 + 1e-12))
    mats = [spectral.gram_on_set(sub, groups.arc_set(T1, g, [(0.0, b)]), g).matrix for b in (0.2, 0.3, 0.5)]
    for lo, hi in zip(mats[:-1], mats[1:]):
        assert np.linalg.eigvalsh(hi - lo).min() >= -1e-10


def test_fit_examples():
    fit = spectral.fit_spectral_constants([1.0, 2.0, 3.0], [1.0, 1.0, 1.0])
    assert fit.C2 == 0 and fit.C1 == 1
    fit = spectral.fit_spectral_constants([1.0, 2.0], [1.0, math.exp(-2.0)])
    assert fit.C2 == pytest.approx(1.0, abs=1e-14)
    assert fit.log_C1 == pytest.approx(-1.0, abs=1e-14)
    with pytest.raises(UnfittableError) as info:
        spectral.fit_spectral_constants([1.0, 2.0], [0.5, 0.0])
    assert info.value.offending == 2.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=12))
def test_envelope_is_valid(ys):
    x = np.arange(len(ys), dtype=float)
    slope, icpt = spectral.affine_envelope(x, ys)
    assert slope >= 0
    assert np.all(icpt + slope * x - np.asarray(ys) >= -1e-9)


def test_sweep_envelope_on_t1():
    g = groups.panel_quadrature(T1, 64, [0.0, 0.3])
    op = symbols.make_operator("shifted_power", T1, 60.0)
    om = groups.arc_set(T1, g, [(0.0, 0.3)])
    rows = spectral.spectral_constant_sweep(op, om, g, [7.0, 13.0, 19.0, 26.0])
    assert [r.n_modes for r in rows] == [3, 5, 7, 9]
    lam_mins = [r.lam_min for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(lam_mins, lam_mins[1:]))
    fit = spectral.fit_sweep(rows)
    assert np.all(fit.residuals >= -1e-9)
    assert len(fit.active) >= 2


def test_subspace_nesting():
    op = symbols.make_operator("diag_perturbed", SU2, 5.0, eta=0.3, seed=3)
    a = spectral.build_subspace(op, 1.8)
    b = spectral.build_subspace(op, 2.6)
    key = lambda md: (md.dual.label, md.row, md.column)
    assert {key(m) for m in a.modes} <= {key(m) for m in b.modes}
    assert [key(m) for m in b.below(1.8).modes] == [key(m) for m in a.modes]


def test_doubling_trivial_cases():
    g = groups.haar_quadrature(T1, 400)
    op = lap_t1()
    const = spectral.build_subspace(op, 0.0)
    r = spectral.doubling_ratio(const, np.array([0.0]), 0.1, g, trials=4)
    assert r.ratio_max == 1.0
    one = spectral.build_subspace(op, 2 * math.pi * 1.0001)
    one = one.restrict([i for i, md in enumerate(one.modes) if md.dual.label == (1,)])
    r = spectral.doubling_ratio(one, np.array([0.0]), 0.1, g, trials=4)
    assert r.ratio_max == pytest.approx(1.0, abs=1e-12)


def test_doubling_against_dense_grid():
    g = groups.haar_quadrature(T1, 2000)
    op = lap_t1()
    sub = spectral.build_subspace(op, 2 * math.pi * 2.0001)
    # real modes cos(2 pi x), cos(4 pi x) span the tested combination
    res = spectral.doubling_ratio(sub, np.array([0.0]), 0.1, g, trials=8, rng=np.random.default_rng(1))
    x = np.linspace(-0.2, 0.2, 100001)
    k = np.abs(sub.evaluate(x[:, None]) @ res.coefficients)
    dense = k.max() / k[np.abs(x) < 0.1].max()
    assert res.ratio_max == pytest.approx(dense, rel=0.02)
    # the optimiser beats the fixed combination cos(2 pi x) - cos(4 pi x)
    f = np.abs(np.cos(2 * np.pi * x) - np.cos(4 * np.pi * x))
    fixed = f.max() / f[np.abs(x) < 0.1].max()
    assert res.ratio_max >= fixed * 0.98


def test_doubling_rejects_large_ball():
    g = groups.haar_quadrature(T1, 64)
    sub = spectral.build_subspace(lap_t1(), 7.0)
    with pytest.raises(ParameterError):
        spectral.doubling_ratio(sub, np.array([0.0]), 0.3, g)
