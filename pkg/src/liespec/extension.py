"""Executable form of the sinh-extension argument behind the spectral inequality.

Contents:

* the flat bump ``E(t) = exp(-1/(a^2 - t^2)) (a^2 - t^2)^10`` and its first
  four derivatives in closed form;
* the corrected bump ``eta(t) = E(t) (1 - B t^2 + C t^4)`` whose derivatives of
  order 1..4 vanish at 0, and the cut-off ``psi`` built from it;
* the space-time field ``F(x, t) = sum sinh(lambda_j t) / lambda_j a_j e_j(x)``
  with exact time derivatives, its Sobolev norms, and the cancellation,
  symmetry and interpolation checks;
* the eigenvalue ratios bounding the inverse of ``-d_t^2 + A^(2/m)`` on the
  periodised cylinder.

Sobolev norms follow ``||f||^2_{H^s} = sum_{j<=s} int |d_t^j f|^2 + |(1+L)^(j/2) f|^2``
literally, so the ``j = 0`` term is counted twice.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateError, GridSymmetryError, MagnitudeError,
                     ParameterError)

LOG_OVERFLOW = 700.0


def bump_E(t, a, i=0):
    """``E^(i)(t)`` on ``t >= 0``; zero for ``t >= a``."""
    if i not in (0, 1, 2, 3, 4):
        raise ParameterError(f"derivative order {i} unsupported (0..4)")
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros_like(t)
    inside = np.abs(t) < a
    s = t[inside]
    q = a * a - s * s
    ex = np.exp(-1.0 / q)
    a2, a4, a6, a8, a10, a12 = a**2, a**4, a**6, a**8, a**10, a**12
    s2 = s * s
    s4, s6, s8 = s2 * s2, s2**3, s2**4
    if i == 0:
        val = ex * q**10
    elif i == 1:
        val = 2 * s * ex * q**8 * (-10 * a2 + 10 * s2 - 1)
    elif i == 2:
        val = -2 * ex * q**6 * (10 * a6 + a4 * (1 - 210 * s2) + a2 * (390 * s4 - 38 * s2)
                                - 190 * s6 + 37 * s4 - 2 * s2)
    elif i == 3:
        val = 4 * s * ex * q**4 * (270 * a8 + a6 * (54 - 2520 * s2)
                                   + a4 * (5940 * s4 - 594 * s2 + 3)
                                   - 54 * a2 * (100 * s6 - 19 * s4 + s2)
                                   + s2 * (1710 * s6 - 486 * s4 + 51 * s2 - 2))
    else:
        val = 4 * ex * q**2 * (270 * a12 - 54 * a10 * (190 * s2 - 1)
                               + 3 * a8 * (22470 * s4 - 954 * s2 + 1)
                               - 12 * a6 * s2 * (14370 * s4 - 1581 * s2 + 25)
                               + 6 * a4 * s2 * (35235 * s6 - 6714 * s4 + 371 * s2 - 2)
                               - 2 * a2 * s4 * (62730 * s6 - 17415 * s4 + 1782 * s2 - 68)
                               + s4 * (29070 * s8 - 10710 * s6 + 1635 * s4 - 124 * s2 + 4))
    out[inside] = val
    return float(out[0]) if scalar else out


def derive_eta_coeffs(a):
    """``(B, C)`` making ``eta''(0) = eta''''(0) = 0``.

    ``B = E''(0) / (2 E(0))`` and ``C = (12 B E''(0) - E''''(0)) / (24 E(0))``.
    """
    if a <= 0:
        raise DegenerateError("a must be positive")
    e0, e2, e4 = bump_E(0.0, a, 0), bump_E(0.0, a, 2), bump_E(0.0, a, 4)
    if e0 == 0.0:
        raise DegenerateError(f"E(0) underflows for a = {a}")
    B = e2 / (2.0 * e0)
    C = (12.0 * B * e2 - e4) / (24.0 * e0)
    return B, C


def printed_eta_coeffs(a):
    """The alternative coefficient formulas ``B = (E''(0) - E(0)) / 2`` and
    ``C = (6 (E''(0) - E(0)) E''(0) - E''''(0)) / (12 E(0))``.

    Kept for comparison only: they do not make ``eta''(0)`` vanish.
    """
    e0, e2, e4 = bump_E(0.0, a, 0), bump_E(0.0, a, 2), bump_E(0.0, a, 4)
    B = (e2 - e0) / 2.0
    C = (6.0 * (e2 - e0) * e2 - e4) / (12.0 * e0)
    return B, C


def eta_tilde(t, a, B, C, i=0):
    """``d^i/dt^i [E(t) (1 - B t^2 + C t^4)]`` by the Leibniz rule."""
    t = np.asarray(t, dtype=float)
    poly = [lambda s: 1 - B * s**2 + C * s**4,
            lambda s: -2 * B * s + 4 * C * s**3,
            lambda s: -2 * B + 12 * C * s**2,
            lambda s: 24 * C * s,
            lambda s: 24 * C + 0 * s]
    total = 0.0
    for k in range(i + 1):
        total = total + math.comb(i, k) * bump_E(t, a, k) * poly[i - k](t)
    return total


@dataclass(frozen=True)
class CutoffSpec:
    """Cut-off ``psi`` on ``[0, T + epsilon]`` with ``a = 3 epsilon / 4``."""

    epsilon: float
    T: float = 1.0

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ParameterError("epsilon must lie in (0, 1)")
        if self.T <= 0:
            raise ParameterError("T must be positive")

    @property
    def a(self):
        return 0.75 * self.epsilon

    @property
    def coeffs(self):
        return derive_eta_coeffs(self.a)

    @property
    def E0(self):
        return bump_E(0.0, self.a)

    @property
    def psi0(self):
        return self.E0 * float(eta_tilde(0.0, self.a, *self.coeffs))


def cutoff_psi(spec, t, i=0, parity="odd", normalized=False):
    """``psi^(i)(t)`` on ``[-(T+eps), T+eps]``.

    ``psi = psi0`` on ``[0, T]``, ``E(0) eta(t - T)`` on ``[T, T + a]`` and
    ``0`` on ``[T + a, T + eps]``.  For ``t < 0`` the extension is odd
    (``psi(-t) = -psi(t)``) by default or even with ``parity="even"``.
    ``normalized=True`` divides by ``psi0``.
    """
    if i not in (0, 1, 2, 3, 4):
        raise ParameterError(f"derivative order {i} unsupported (0..4)")
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    T, eps, a = spec.T, spec.epsilon, spec.a
    if np.any(np.abs(t) > T + eps + 1e-12):
        raise ParameterError(f"t outside [-(T+eps), T+eps] = [{-(T + eps)}, {T + eps}]")
    B, C = spec.coeffs
    e0 = spec.E0
    s = np.abs(t)
    out = np.zeros_like(s)
    plateau = s <= T
    if i == 0:
        out[plateau] = e0 * float(eta_tilde(0.0, a, B, C))
    ramp = (s > T) & (s < T + a)
    out[ramp] = e0 * eta_tilde(s[ramp] - T, a, B, C, i)
    if normalized:
        out = out / spec.psi0
    neg = t < 0
    if parity == "odd":
        # d^i/dt^i of -psi(-t) is (-1)^(i+1) psi^(i)(-t)
        sign = -1.0 if i % 2 == 0 else 1.0
    elif parity == "even":
        sign = 1.0 if i % 2 == 0 else -1.0
    else:
        raise ParameterError("parity must be 'odd' or 'even'")
    out[neg] *= sign
    return float(out[0]) if scalar else out


def psi_derivative_sup(spec, i, samples=4001, normalized=True):
    """``sup |psi^(i)|`` over the ramp ``[T, T + a]`` (the only place it is nonzero for i >= 1)."""
    t = spec.T + np.linspace(0.0, spec.a, samples)
    return float(np.max(np.abs(cutoff_psi(spec, t, i, normalized=normalized))))


@dataclass(frozen=True)
class CutoffRow:
    epsilon: float
    psi0: float
    d_at_T: tuple
    max_norm: tuple


def cutoff_table(epsilons=(0.1, 0.3, 0.5, 0.7, 0.9), T=1.0):
    rows = []
    for eps in epsilons:
        spec = CutoffSpec(eps, T)
        d = tuple(float(cutoff_psi(spec, np.nextafter(T, np.inf), i)) for i in range(1, 5))
        mx = tuple(psi_derivative_sup(spec, i) for i in range(1, 5))
        rows.append(CutoffRow(eps, spec.psi0, d, mx))
    return rows


@dataclass(frozen=True)
class TimeGrid:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def mirrored(self):
        return (np.array_equal(self.nodes, -self.nodes[::-1])
                and np.array_equal(self.weights, self.weights[::-1]))


def gauss_time_grid(t0, t1, breakpoints=(), per_unit=64, min_nodes=8):
    """Composite Gauss-Legendre grid on ``[t0, t1]`` split at ``breakpoints``."""
    edges = sorted({t0, t1, *[b for b in breakpoints if t0 < b < t1]})
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        q = max(min_nodes, int(math.ceil(per_unit * (hi - lo))))
        x, w = np.polynomial.legendre.leggauss(q)
        nodes.append(0.5 * (hi + lo) + 0.5 * (hi - lo) * x)
        weights.append(0.5 * (hi - lo) * w)
    return TimeGrid(np.concatenate(nodes), np.concatenate(weights))


def mirrored_time_grid(half_length, breakpoints=(), per_unit=64):
    """Grid on ``[-L, L]`` whose negative half is the exact mirror of the positive half."""
    pos = gauss_time_grid(0.0, half_length, breakpoints, per_unit)
    return TimeGrid(np.concatenate([-pos.nodes[::-1], pos.nodes]),
                    np.concatenate([pos.weights[::-1], pos.weights]))


def _sinh_over(lam, t):
    """``sinh(lam t) / lam`` with the ``lam = 0`` limit ``t``."""
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(lam > 0, np.sinh(lam * t) / np.where(lam > 0, lam, 1.0), t)
    return out


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Mode trajectories ``c_j(t) = a_j sinh(lambda_j t) / lambda_j``.

    ``laplace`` carries the Laplacian eigenvalue of each mode's
    representation (used by the Sobolev norms).  Values with
    ``lambda_j t > 30`` can be read in scaled form from :meth:`log_abs`.
    """

    amplitudes: np.ndarray
    lam: np.ndarray
    laplace: np.ndarray
    times: np.ndarray = None

    def coefficients(self, t, deriv=0):
        """``d^k c_j / dt^k`` at times ``t``; shape ``(len(t), n_modes)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        lam, a = self.lam[None, :], self.amplitudes[None, :]
        if np.any(np.abs(lam * t) > LOG_OVERFLOW):
            raise MagnitudeError(f"lambda t = {float(np.max(np.abs(lam * t)))} overflows; "
                                 "use log_abs")
        if deriv == 0:
            return a * _sinh_over(lam, t)
        if deriv == 1:
            return a * np.cosh(lam * t)
        if deriv == 2:
            return a * lam * np.sinh(lam * t)
        if deriv == 3:
            return a * lam**2 * np.cosh(lam * t)
        raise ParameterError("time derivatives up to order 3 are available")

    def log_abs(self, t):
        """``log |c_j(t)|`` without overflow."""
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        lam = self.lam[None, :]
        lt = np.abs(lam * t)
        safe = np.where(lam > 0, lam, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            loga = np.log(np.abs(self.amplitudes))[None, :]
            small = np.log(np.abs(_sinh_over(lam, np.where(lt > 30.0, 0.0, t))))
            large = lt - math.log(2.0) - np.log(safe) + np.log1p(-np.exp(-2 * lt))
        return loga + np.where(lt > 30.0, large, small)


def sinh_extension(subspace, a, time_grid=None):
    """The field ``F(x, t) = sum sinh(lambda_j t)/lambda_j a_j e_j(x)`` on the subspace."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (len(subspace),):
        raise ParameterError(f"expected {len(subspace)} coefficients")
    lam = np.asarray(subspace.freqs, dtype=float)
    times = None if time_grid is None else np.asarray(time_grid, dtype=float)
    if times is not None and times.size and np.max(lam) * np.max(np.abs(times)) > LOG_OVERFLOW:
        raise MagnitudeError("lambda_j T exceeds the overflow guard; use log_abs")
    return SpaceTimeField(a, lam, np.asarray(subspace.laplace_eigs, dtype=float), times)


def field_from_modes(amplitudes, lam, laplace=None):
    lam = np.asarray(lam, dtype=float)
    laplace = np.zeros_like(lam) if laplace is None else np.asarray(laplace, dtype=float)
    return SpaceTimeField(np.asarray(amplitudes, dtype=complex), lam, laplace)


def _phi_residual(field, t, spec=None, normalized=True):
    """Mode-wise ``(-d_t^2 + lambda^2)(psi c_j)`` at ``t >= 0``."""
    c0 = field.coefficients(t, 0)
    c2 = field.coefficients(t, 2)
    lam2 = field.lam[None, :] ** 2
    core = c2 - lam2 * c0
    if spec is None:
        return -core
    p0 = cutoff_psi(spec, t, 0, normalized=normalized)[:, None]
    p1 = cutoff_psi(spec, t, 1, normalized=normalized)[:, None]
    p2 = cutoff_psi(spec, t, 2, normalized=normalized)[:, None]
    c1 = field.coefficients(t, 1)
    return -(p2 * c0 + 2 * p1 * c1 + p0 * core)


def check_cancellation(field, T, spec=None, n_nodes=257):
    """Relative residual of ``(-d_t^2 + A^(2/m)) (psi F) = 0`` on the plateau ``[0, T]``."""
    t = np.linspace(0.0, T, n_nodes)
    res = _phi_residual(field, t, spec)
    scale = np.max(np.abs(field.coefficients(t, 0)))
    if scale == 0:
        return float(np.max(np.abs(res)))
    return float(np.max(np.abs(res)) / scale)


def check_symmetry(field, spec, time_grid=None, normalized=True):
    """Both sides of the odd-extension identity.

    Returns ``(||r||^2 over [-(T+eps), T+eps], 2 ||r||^2 over [0, T+eps])``
    with ``r = (-d_t^2 + A^(2/m)) phi`` and ``phi(t) = psi(|t|) F(t)``
    extended oddly.
    """
    half = spec.T + spec.epsilon
    grid = time_grid or mirrored_time_grid(half, (spec.T, spec.T + spec.a))
    if not grid.mirrored:
        raise GridSymmetryError("time grid is not mirrored about t = 0")
    t = grid.nodes
    s = np.abs(t)
    r = _phi_residual(field, s, spec, normalized)
    r = np.where((t < 0)[:, None], -r, r)
    dens = np.sum(np.abs(r) ** 2, axis=1)
    lhs = math.fsum(grid.weights * dens)
    pos = t > 0
    rhs = 2.0 * math.fsum(grid.weights[pos] * dens[pos])
    return lhs, rhs


def _log_int_sinh2(lam, t):
    """``log int_0^t (sinh(lam s)/lam)^2 ds``; ``t >= 0``."""
    if t <= 0:
        return -math.inf
    x = 2.0 * lam * t
    if x < 1e-3:
        # (sinh x - x)/x^3 series
        ser = 1 / 6 + x**2 / 120 + x**4 / 5040 + x**6 / 362880
        return math.log(2.0 * t**3 * ser)
    if x <= LOG_OVERFLOW:
        return math.log((math.sinh(x) - x) / (4.0 * lam**3))
    return x - math.log(2.0) - math.log(4.0 * lam**3)


def _log_int_cosh2(lam, t):
    """``log int_0^t cosh(lam s)^2 ds``."""
    if t <= 0:
        return -math.inf
    x = 2.0 * lam * t
    if x <= LOG_OVERFLOW:
        ratio = math.sinh(x) / x if x > 0 else 1.0
        return math.log(0.5 * t * (ratio + 1.0))
    return x - math.log(2.0) - math.log(4.0 * lam)


def _log_diff(hi, lo):
    if lo == -math.inf:
        return hi
    if lo >= hi:
        return -math.inf
    return hi + math.log1p(-math.exp(lo - hi))


def _log_sum(vals):
    vals = [v for v in vals if v > -math.inf]
    if not vals:
        return -math.inf
    top = max(vals)
    return top + math.log(math.fsum(math.exp(v - top) for v in vals))


def h_norm(field, interval, s=1):
    """``H^s(G x (t0, t1))`` norm of the field, ``s in {0, 1}``, from exact time integrals."""
    if s not in (0, 1):
        raise ParameterError("only s = 0 and s = 1 are supported")
    t0, t1 = interval
    if not 0 <= t0 <= t1:
        raise ParameterError("interval must satisfy 0 <= t0 <= t1")
    terms = []
    for aj, lj, Lj in zip(field.amplitudes, field.lam, field.laplace):
        if aj == 0:
            continue
        log_a2 = 2.0 * math.log(abs(aj))
        i0 = _log_diff(_log_int_sinh2(lj, t1), _log_int_sinh2(lj, t0))
        # j = 0: |f|^2 + |(1+L)^0 f|^2
        terms.append(log_a2 + math.log(2.0) + i0)
        if s == 1:
            i1 = _log_diff(_log_int_cosh2(lj, t1), _log_int_cosh2(lj, t0))
            terms.append(log_a2 + i1)
            terms.append(log_a2 + math.log1p(Lj) + i0)
    total = _log_sum(terms)
    if total == -math.inf:
        return 0.0
    if total / 2 > 709:
        raise MagnitudeError(f"H^{s} norm overflows (log norm = {total / 2:.1f})")
    return math.exp(0.5 * total)


@dataclass(frozen=True)
class InterpolationRow:
    lhs: float
    h1_full: float
    l2_omega: float
    kappa_star: float
    degenerate: bool = False


def interpolation_exponent(lhs, full, obs, constant=1.0):
    """Smallest ``k in [0, 1]`` with ``lhs <= constant full^k obs^(1-k)``."""
    if obs <= 0 or full <= 0:
        return math.nan
    if lhs <= constant * obs and full >= obs:
        return 0.0
    if full == obs:
        return 0.0 if lhs <= constant * full else math.nan
    k = math.log(lhs / (constant * obs)) / math.log(full / obs)
    if not 0.0 <= k <= 1.0:
        return min(max(k, 0.0), 1.0) if lhs <= constant * max(full, obs) else math.nan
    return k


def interpolation_check(subspace, a, omega, grid, T, alpha, constant=1.0, gram=None):
    """Norms entering the interpolation inequality for one element of the subspace."""
    if not 0 < alpha < T / 2:
        raise ParameterError("alpha must lie in (0, T/2)")
    from .spectral import gram_on_set

    a = np.asarray(a, dtype=complex)
    field = sinh_extension(subspace, a)
    lhs = h_norm(field, (alpha, T - alpha), 1)
    full = h_norm(field, (0.0, T), 1)
    g = gram if gram is not None else gram_on_set(subspace, omega, grid)
    obs2 = float(np.real(np.vdot(a, g.matrix.T @ a))) if not g.degenerate else 0.0
    obs = math.sqrt(max(obs2, 0.0))
    if obs <= 1e-300:
        return InterpolationRow(lhs, full, 0.0, math.nan, True)
    return InterpolationRow(lhs, full, obs, interpolation_exponent(lhs, full, obs, constant))


@dataclass(frozen=True)
class SpacetimeBoundReport:
    sup_inverse: float
    bound_inverse: float
    sup_quotient: float
    sup_inverse_refined: float
    sup_quotient_refined: float
    unbounded: bool

    @property
    def within_bound(self):
        return self.sup_inverse <= self.bound_inverse * (1 + 1e-12)

    @property
    def stable(self):
        def rel(x, y):
            return abs(x - y) / max(abs(x), 1e-300)
        return (rel(self.sup_inverse, self.sup_inverse_refined) < 0.01
                and rel(self.sup_quotient, self.sup_quotient_refined) < 0.01)


def _ratio_sups(lam2, laplace, T, epsilons, k_max):
    k = np.arange(k_max + 1)
    sup_i, sup_ii, unbounded = 0.0, 0.0, False
    for eps in epsilons:
        mu = (np.pi * k / (T + eps)) ** 2
        den = mu[:, None] + lam2[None, :]
        zero = den <= 0
        unbounded |= bool(zero.any())
        safe = np.where(zero, 1.0, den)
        r1 = np.where(zero, 0.0, (1.0 + den) / safe)
        r2 = np.where(zero, 0.0, (mu[:, None] + laplace[None, :]) / safe)
        sup_i = max(sup_i, float(r1.max()))
        sup_ii = max(sup_ii, float(r2.max()))
    return sup_i, sup_ii, unbounded


def check_spacetime_bounds(subspace, T, epsilon_grid, k_max=64):
    """Suprema of the eigenvalue ratios of ``A_eps^-1`` and ``(-d_t^2 + L) A_eps^-1``.

    With ``mu_k = (pi k / (T + eps))^2`` and ``lambda_j^2`` the eigenvalues of
    ``A^(2/m)``: (i) ``(1 + mu + lambda^2) / (mu + lambda^2)``, bounded by
    ``1 + 1/min lambda_j^2``; (ii) ``(mu + L_j) / (mu + lambda_j^2)``.  Both
    are recomputed with twice the ``k`` range and a midpoint-refined
    ``epsilon`` grid.
    """
    lam2 = np.asarray(subspace.eigs, dtype=float) ** (2.0 / subspace.operator.order)
    laplace = np.asarray(subspace.laplace_eigs, dtype=float)
    eps = np.asarray(sorted(epsilon_grid), dtype=float)
    sup_i, sup_ii, unb = _ratio_sups(lam2, laplace, T, eps, k_max)
    fine = np.sort(np.concatenate([eps, 0.5 * (eps[1:] + eps[:-1])]))
    sup_i2, sup_ii2, _ = _ratio_sups(lam2, laplace, T, fine, 2 * k_max)
    nu = float(lam2.min())
    bound = math.inf if nu <= 0 else 1.0 + 1.0 / nu
    return SpacetimeBoundReport(sup_i, bound, sup_ii, sup_i2, sup_ii2, unb or nu <= 0)
