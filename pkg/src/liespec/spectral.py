"""Eigenmode subspaces, observation Gram matrices and spectral constants.

For a multiplier with ``sigma(xi) = U D U^*`` the functions

    e(x) = sqrt(d_xi) (xi(x) U)_{i, mu},    i, mu = 1..d_xi

are L2-normalised eigenfunctions with eigenvalue ``D_mu``.  A mode's
frequency is ``lambda = D_mu^(1/m)``, the scale on which the spectral and
doubling inequalities are stated.

Gram matrices use ``M[i, j] = <e_i, e_j>_{L2(omega)} = int_omega e_i conj(e_j)``,
so ``a^* M a = ||sum a_j e_j||^2_{L2(omega)}``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BandlimitError, DegenerateError, ParameterError, UnfittableError
from .groups import FourierCoefficients, check_bandlimit, enumerate_dual
from .symbols import check_ellipticity

UNDERFLOW_FACTOR = 1e-13
FREQ_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Mode:
    dual: object
    row: int
    column: int
    col_mix: np.ndarray
    freq: float
    eig: float


@dataclass(frozen=True, eq=False)
class SpectralSubspace:
    modes: tuple
    lambda_cut: float
    operator: object
    backend: object

    def __len__(self):
        return len(self.modes)

    @property
    def freqs(self):
        return np.array([md.freq for md in self.modes])

    @property
    def eigs(self):
        return np.array([md.eig for md in self.modes])

    @property
    def laplace_eigs(self):
        return np.array([md.dual.laplace_eig for md in self.modes])

    def evaluate(self, points):
        """Matrix ``E[n, j] = e_j(x_n)``."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1 and self.backend.point_dim == 1:
            pts = pts[:, None]
        pts = np.atleast_2d(pts)
        out = np.empty((len(pts), len(self.modes)), dtype=complex)
        cache = {}
        for j, md in enumerate(self.modes):
            if md.dual not in cache:
                cache[md.dual] = self.backend.rep_on_points(md.dual, pts)
            rep = cache[md.dual]
            out[:, j] = math.sqrt(md.dual.dim) * (rep[:, md.row, :] @ md.col_mix)
        return out

    def mode_coefficients(self, j):
        """Fourier coefficients of ``e_j``."""
        md = self.modes[j]
        mat = np.zeros((md.dual.dim, md.dual.dim), dtype=complex)
        mat[:, md.row] = md.col_mix / math.sqrt(md.dual.dim)
        return FourierCoefficients({md.dual: mat})

    def coefficients(self, a):
        """Fourier coefficients of ``sum a_j e_j``."""
        entries = {}
        for aj, md in zip(np.asarray(a), self.modes):
            mat = entries.setdefault(md.dual, np.zeros((md.dual.dim, md.dual.dim), dtype=complex))
            mat[:, md.row] += aj * md.col_mix / math.sqrt(md.dual.dim)
        return FourierCoefficients(entries)

    def restrict(self, indices):
        idx = list(indices)
        cut = max((self.modes[i].freq for i in idx), default=0.0)
        return SpectralSubspace(tuple(self.modes[i] for i in idx), cut, self.operator, self.backend)

    def below(self, lambda_cut):
        """Modes with ``freq <= lambda_cut`` (nested in ``self``)."""
        keep = [i for i, md in enumerate(self.modes) if md.freq <= lambda_cut * (1 + FREQ_RTOL)]
        sub = self.restrict(keep)
        return SpectralSubspace(sub.modes, lambda_cut, self.operator, self.backend)


def _fix_phase(vecs):
    """Make the largest-magnitude entry of every column real positive."""
    idx = np.argmax(np.abs(vecs), axis=0)
    ph = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.abs(ph) / ph)[None, :]


def _eig_sorted(sigma):
    vals, vecs = np.linalg.eigh(sigma)
    return vals, _fix_phase(vecs.astype(complex))


def enumeration_bound(op, lambda_cut):
    """Bracket radius beyond which no eigenvalue can have ``freq <= lambda_cut``."""
    lower = op.elliptic_lower
    if lower <= 0:
        lower = check_ellipticity(op, [d for d in op.duals if d.laplace_eig > 0]).C1
    if lower <= 0:
        raise DegenerateError("operator has no positive ellipticity constant")
    return max(1.0, (lambda_cut**op.order / lower) ** (1.0 / op.order))


def build_subspace(op, lambda_cut, backend=None, grid=None):
    """All eigenmodes with frequency ``<= lambda_cut``, ascending.

    Representations are enumerated up to ``<xi> <= (lambda_cut^m / C1)^(1/m)``,
    which covers every eigenvalue below the cut because
    ``s_min(sigma(xi)) >= C1 <xi>^m``.  If ``grid`` is given the enumeration
    must fit its band limit.
    """
    backend = backend if backend is not None else op.backend
    if lambda_cut < 0:
        raise ParameterError("lambda_cut must be nonnegative")
    bound = enumeration_bound(op, lambda_cut)
    duals = enumerate_dual(backend, bound * (1 + 1e-12))
    cands = []
    thresh = lambda_cut * (1 + FREQ_RTOL)
    for order_idx, d in enumerate(duals):
        vals, vecs = _eig_sorted(op.symbol_at(d))
        for mu, val in enumerate(vals):
            val = max(float(val), 0.0)
            freq = val ** (1.0 / op.order)
            if freq <= thresh:
                for row in range(d.dim):
                    cands.append((freq, order_idx, row, mu,
                                  Mode(d, row, mu, vecs[:, mu].copy(), freq, val)))
    cands.sort(key=lambda c: c[:4])
    modes = tuple(c[-1] for c in cands)
    if grid is not None and modes:
        try:
            check_bandlimit(backend, grid, {md.dual for md in modes})
        except BandlimitError as exc:
            raise BandlimitError(f"subspace at lambda={lambda_cut}: {exc}") from None
    return SpectralSubspace(modes, float(lambda_cut), op, backend)


def subspace_from_duals(op, duals):
    """All eigenmodes living on the given representations (ordered as ``build_subspace``)."""
    cands = []
    for order_idx, d in enumerate(duals):
        vals, vecs = _eig_sorted(op.symbol_at(d))
        for mu, val in enumerate(vals):
            val = max(float(val), 0.0)
            freq = val ** (1.0 / op.order)
            for row in range(d.dim):
                cands.append((freq, order_idx, row, mu,
                              Mode(d, row, mu, vecs[:, mu].copy(), freq, val)))
    cands.sort(key=lambda c: c[:4])
    modes = tuple(c[-1] for c in cands)
    cut = max((md.freq for md in modes), default=0.0)
    return SpectralSubspace(modes, cut, op, op.backend)


def synthesize(subspace, a, grid):
    a = np.asarray(a)
    if a.shape != (len(subspace),):
        raise ParameterError(f"expected {len(subspace)} coefficients, got shape {a.shape}")
    return subspace.evaluate(grid.nodes) @ a


@dataclass(frozen=True, eq=False)
class GramMatrix:
    matrix: np.ndarray
    omega: object
    degenerate: bool = False


def gram_on_set(subspace, omega, grid, samples=None):
    """``M[i, j] = sum_{x in omega} w e_i(x) conj(e_j(x))``.

    ``samples`` may carry a precomputed ``subspace.evaluate(grid.nodes)``.
    """
    if omega.grid is not grid and omega.mask.shape != (grid.size,):
        raise ParameterError("observation set is defined on a different grid")
    n = len(subspace)
    if omega.empty:
        return GramMatrix(np.zeros((n, n), dtype=complex), omega, True)
    e = subspace.evaluate(grid.nodes) if samples is None else samples
    em = e[omega.mask]
    w = grid.weights[omega.mask]
    mat = em.T @ (w[:, None] * em.conj())
    mat = 0.5 * (mat + mat.conj().T)
    return GramMatrix(mat, omega, False)


@dataclass(frozen=True, eq=False)
class Observability:
    lam_min: float
    kappa_worst: np.ndarray
    degenerate: bool = False
    underflow_suspect: bool = False

    def __iter__(self):
        return iter((self.lam_min, self.kappa_worst))


def smallest_eigpair(matrix):
    vals, vecs = np.linalg.eigh(matrix)
    vec = _fix_phase(vecs[:, :1].astype(complex))[:, 0]
    return float(vals[0]), vec


def observability_constant(subspace, omega, grid, gram=None):
    """Smallest eigenvalue of the observation Gram matrix and its eigenvector.

    ``lam_min^(-1/2)`` is the best constant in
    ``||k||_{L2(G)} <= C ||k||_{L2(omega)}`` on the subspace.  Values below
    ``1e-13 * N`` are flagged ``underflow_suspect``.
    """
    g = gram if gram is not None else gram_on_set(subspace, omega, grid)
    n = len(subspace)
    if g.degenerate:
        return Observability(0.0, np.eye(n, dtype=complex)[:, 0] if n else np.zeros(0), True, True)
    lam, vec = smallest_eigpair(g.matrix)
    return Observability(lam, vec, False, lam < UNDERFLOW_FACTOR * n)


@dataclass(frozen=True, eq=False)
class ExpFit:
    """Affine upper envelope ``y <= log C1 + C2 x`` of sampled data."""

    C1: float
    C2: float
    residuals: np.ndarray
    lambda_grid: np.ndarray
    values: np.ndarray
    active: tuple = ()

    @property
    def log_C1(self):
        return math.log(self.C1)

    def envelope(self, x):
        return self.log_C1 + self.C2 * np.asarray(x, dtype=float)


def affine_envelope(x, y):
    """Upper envelope line with ``slope >= 0`` minimising the mean gap.

    The minimiser of ``sum(b + s x_i - y_i)`` over valid lines is the
    supporting line of the upper convex hull at ``mean(x)``; it touches the
    data at two points unless the optimal slope would be negative, in which
    case the slope is clamped to zero.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) == 0:
        raise UnfittableError("no data points")
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    # keep the highest y per distinct x
    uniq = np.concatenate([xs[1:] != xs[:-1], [True]])
    xs, ys = xs[uniq], ys[uniq]
    hull = []
    for p in zip(xs, ys):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    xbar = float(np.mean(x))
    slope = 0.0
    for (x1, y1), (x2, y2) in zip(hull[:-1], hull[1:]):
        if x1 <= xbar <= x2:
            slope = (y2 - y1) / (x2 - x1)
            break
    slope = max(slope, 0.0)
    intercept = float(np.max(y - slope * x))
    return slope, intercept


def _envelope_fit(x, y):
    slope, intercept = affine_envelope(x, y)
    env = intercept + slope * np.asarray(x)
    resid = env - y
    active = tuple(int(i) for i in np.flatnonzero(resid <= 1e-12 * max(1.0, abs(intercept))))
    return ExpFit(math.exp(intercept), float(slope), resid, np.asarray(x, float), np.asarray(y, float),
                  active)


def fit_spectral_constants(lambda_grid, lam_mins):
    """Envelope ``log(lam_min^(-1/2)) <= log C1 + C2 lambda`` over the grid."""
    lam_mins = np.asarray(lam_mins, dtype=float)
    bad = np.flatnonzero(~(lam_mins > 0))
    if bad.size:
        lam = float(np.asarray(lambda_grid)[bad[0]])
        raise UnfittableError(f"lam_min = {lam_mins[bad[0]]} <= 0 at lambda = {lam}", lam)
    return _envelope_fit(lambda_grid, -0.5 * np.log(lam_mins))


@dataclass(frozen=True)
class SpectralConstantRow:
    lam: float
    n_modes: int
    lam_min: float
    log_inv_sqrt: float
    underflow: bool


def spectral_constant_sweep(op, omega, grid, lambda_grid):
    """``lam_min`` on nested subspaces ``freq <= lambda`` for every grid value."""
    top = build_subspace(op, max(lambda_grid), grid=grid)
    e_all = top.evaluate(grid.nodes)
    rows = []
    for lam in lambda_grid:
        idx = [i for i, md in enumerate(top.modes) if md.freq <= lam * (1 + FREQ_RTOL)]
        sub = top.restrict(idx)
        g = gram_on_set(sub, omega, grid, samples=e_all[:, idx])
        obs = observability_constant(sub, omega, grid, gram=g)
        lmin = obs.lam_min
        y = -0.5 * math.log(lmin) if lmin > 0 else math.inf
        rows.append(SpectralConstantRow(float(lam), len(sub), lmin, y, obs.underflow_suspect))
    return rows


def fit_sweep(rows):
    """Envelope over the rows not flagged as underflow-suspect."""
    ok = [r for r in rows if not r.underflow]
    if not ok:
        raise UnfittableError("every row is underflow-suspect")
    return fit_spectral_constants([r.lam for r in ok], [r.lam_min for r in ok])


@dataclass(frozen=True, eq=False)
class DoublingResult:
    ratio_max: float
    coefficients: np.ndarray
    trials: int
    discarded: int = 0


def _ball_points(backend, grid, center, radius):
    d = backend.distance(center, grid.nodes)
    return grid.nodes[d < 2 * radius], d[d < 2 * radius] < radius, grid.weights[d < 2 * radius]


def doubling_ratio(subspace, center, R, grid, trials=16, ascent_steps=50, rng=None, p=8):
    """Empirical ``max sup_{B(2R)} |k| / sup_{B(R)} |k|`` over the subspace.

    Each trial starts from a random unit coefficient vector and climbs the
    smooth surrogate ``||k||_{L^2p(B2R)} / ||k||_{L^2p(BR)}`` by projected
    gradient ascent with backtracking; the true sup ratio on the grid nodes
    is recorded at every iterate.  The result is a lower bound on the true
    supremum.
    """
    backend = subspace.backend
    if 2 * R > backend.diameter:
        raise ParameterError("B(center, 2R) must fit inside the group")
    rng = rng if rng is not None else np.random.default_rng(0)
    pts, inner, w = _ball_points(backend, grid, center, R)
    if not inner.any():
        raise ParameterError("evaluation grid has no node inside B(center, R)")
    e = subspace.evaluate(pts)
    w = w / w.sum()
    n = len(subspace)

    def true_ratio(a):
        k = np.abs(e @ a)
        small = k[inner].max()
        return None if small < 1e-300 else k.max() / small

    def surrogate(a):
        k = e @ a
        mag = np.abs(k)
        scale = max(mag.max(), 1e-300)
        q = (mag / scale) ** (2 * p)
        big, small = np.sum(w * q), np.sum(w[inner] * q[inner])
        if small <= 0:
            return -math.inf, None
        val = (math.log(big) - math.log(small)) / (2 * p)
        gk = (w * (mag / scale) ** (2 * p - 2) * k / scale**2)
        grad_big = e.conj().T @ gk
        grad_small = e[inner].conj().T @ gk[inner]
        grad = (grad_big / big - grad_small / small) * (p / (2 * p))
        return val, grad

    best, best_a, discarded = 1.0, np.zeros(n, dtype=complex), 0
    for _ in range(trials):
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a /= np.linalg.norm(a)
        r = true_ratio(a)
        if r is None:
            discarded += 1
            continue
        if r > best:
            best, best_a = r, a.copy()
        val, grad = surrogate(a)
        step = 1.0
        for _ in range(ascent_steps):
            if grad is None:
                break
            grad = grad - np.vdot(a, grad) * a
            gnorm = np.linalg.norm(grad)
            if gnorm < 1e-14:
                break
            while step > 1e-8:
                cand = a + step * grad
                cand /= np.linalg.norm(cand)
                cval, cgrad = surrogate(cand)
                if cval > val:
                    a, val, grad = cand, cval, cgrad
                    step *= 2.0
                    break
                step *= 0.5
            else:
                break
            r = true_ratio(a)
            if r is not None and r > best:
                best, best_a = r, a.copy()
    return DoublingResult(float(best), best_a, trials, discarded)


def doubling_sweep(op, center, R, grid, lambda_grid, trials=16, ascent_steps=50, rng=None):
    """Per-lambda doubling maxima and the affine envelope of their logs."""
    rng = rng if rng is not None else np.random.default_rng(0)
    top = build_subspace(op, max(lambda_grid))
    rows = []
    for lam in lambda_grid:
        sub = top.below(lam)
        res = doubling_ratio(sub, center, R, grid, trials, ascent_steps, rng)
        rows.append((float(lam), float(R), res.ratio_max, trials))
    fit = _envelope_fit([r[0] for r in rows], [math.log(r[2]) for r in rows])
    return rows, fit
