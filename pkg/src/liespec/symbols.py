"""Positive matrix-valued Fourier multipliers and their functional calculus.

An operator here is x-independent: it is fully described by one Hermitian
matrix ``sigma(xi)`` per representation, and acts on Fourier coefficients by
left multiplication.  Complex powers are computed two ways that share no
code: by diagonalising each ``sigma(xi)`` (:func:`direct_power`) and by
integrating the resolvent along the boundary of the left sector
(:func:`contour_power`).

The contour runs in along the ray ``arg = 3pi/4``, clockwise around the disc
of radius ``epsilon`` through the positive real axis, and out along
``arg = -3pi/4``.  This keeps the spectrum ``[c, inf)`` on its left, so with
``-1/(2 pi i)`` in front the integral reproduces ``sigma^z``.  ``lambda^z`` is
the principal branch; its cut (the negative real axis) lies inside the sector
and is never crossed.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (CoverageError, ParameterError, ResolventProximityError,
                     SingularPowerError, SingularResolventError, UnsupportedExponentError)
from .groups import FourierCoefficients, enumerate_dual

PRESETS = ("laplacian_power", "shifted_power", "diag_perturbed")


@dataclass(frozen=True, eq=False)
class SpectralOperator:
    """Matrix-valued multiplier ``sigma`` on an enumerated part of the dual.

    ``elliptic_lower`` is a constant ``C`` with ``s_min(sigma(xi)) >= C <xi>^m``
    for every nontrivial ``xi`` (not just the tabulated ones); it lets
    :func:`liespec.spectral.build_subspace` decide how far to enumerate.
    """

    backend: object
    symbol: dict
    order: float
    positivity_floor: float
    symbol_fn: object = None
    elliptic_lower: float = 0.0
    preset: str = "custom"
    params: dict = field(default_factory=dict)

    @property
    def duals(self):
        return list(self.symbol)

    def symbol_at(self, dual):
        if dual in self.symbol:
            return self.symbol[dual]
        if self.symbol_fn is None:
            raise CoverageError(f"no symbol available at {dual!r}")
        return self.symbol_fn(dual)

    def extended(self, bracket_cut):
        """Same operator tabulated on every ``<xi> <= bracket_cut``."""
        duals = enumerate_dual(self.backend, bracket_cut)
        table = {d: self.symbol_at(d) for d in duals}
        return SpectralOperator(self.backend, table, self.order, self.positivity_floor,
                                self.symbol_fn, self.elliptic_lower, self.preset, self.params)


def _label_key(label):
    if isinstance(label, tuple):
        return [int(v) & 0xFFFFFFFF for v in label]
    return [int(round(2 * label))]


def make_operator(preset, backend, bracket_cut, m=2.0, c=1.0, eta=0.0, seed=0):
    """Build one of the preset positive elliptic multipliers.

    ``laplacian_power``
        ``lambda_xi^(m/2) I``
    ``shifted_power``
        ``(c + lambda_xi)^(m/2) I``
    ``diag_perturbed``
        ``diag((c + lambda_xi)^(m/2) (1 + eta v_i))`` with ``v_i in [-1, 1]``
        drawn from a generator seeded by ``(seed, label)``, so a
        representation's symbol does not depend on the enumeration cut.
    """
    if m <= 0:
        raise ParameterError(f"order m must be positive, got {m}")
    if preset not in PRESETS:
        raise ParameterError(f"unknown preset {preset!r}; choose from {PRESETS}")
    if preset != "laplacian_power" and c < 0:
        raise ParameterError("shift c must be nonnegative")
    if abs(eta) >= 0.5:
        raise ParameterError(f"|eta| must be < 1/2, got {eta}")
    half = m / 2.0

    if preset == "laplacian_power":
        def fn(d):
            return d.laplace_eig**half * np.eye(d.dim)
        floor = 0.0
        lam1 = backend.smallest_positive_eig
        lower = (lam1 / (1.0 + lam1)) ** half
        params = {"m": m}
    elif preset == "shifted_power":
        def fn(d):
            return (c + d.laplace_eig) ** half * np.eye(d.dim)
        floor = c**half
        lower = min(1.0, c) ** half
        params = {"m": m, "c": c}
    else:
        def fn(d):
            rng = np.random.default_rng([seed] + _label_key(d.label))
            v = rng.uniform(-1.0, 1.0, d.dim)
            return np.diag((c + d.laplace_eig) ** half * (1.0 + eta * v))
        floor = c**half * (1.0 - abs(eta))
        lower = min(1.0, c) ** half * (1.0 - abs(eta))
        params = {"m": m, "c": c, "eta": eta, "seed": seed}

    duals = enumerate_dual(backend, bracket_cut)
    table = {d: fn(d) for d in duals}
    return SpectralOperator(backend, table, float(m), float(floor), fn, float(lower), preset, params)


def operator_from_symbols(backend, symbols, order, positivity_floor=None):
    """Wrap an explicit table ``{dual: matrix}``; the floor defaults to the smallest eigenvalue."""
    table = {d: np.asarray(s) for d, s in symbols.items()}
    if positivity_floor is None:
        eigs = [np.linalg.eigvalsh(s).min() for s in table.values()]
        positivity_floor = max(0.0, float(min(eigs)))
    return SpectralOperator(backend, table, float(order), float(positivity_floor))


def apply_operator(op, coeffs):
    """Quantisation on the Fourier side: ``xi -> sigma(xi) f_hat(xi)``."""
    out = {}
    for d, fh in coeffs.entries.items():
        if d not in op.symbol:
            raise CoverageError(f"operator has no symbol at {d!r}")
        out[d] = op.symbol[d] @ fh
    return FourierCoefficients(out)


@dataclass(frozen=True)
class EllipticityReport:
    C1: float
    C2: float
    elliptic: bool


def check_ellipticity(op, duals=None):
    """Tightest ``C1, C2`` with ``C1 <xi>^m <= s(sigma(xi)) <= C2 <xi>^m`` over ``duals``."""
    duals = op.duals if duals is None else list(duals)
    if not duals:
        raise ParameterError("need at least one representation")
    lo, hi = math.inf, 0.0
    for d in duals:
        s = np.linalg.svd(op.symbol_at(d), compute_uv=False)
        w = d.bracket**op.order
        lo = min(lo, s.min() / w)
        hi = max(hi, s.max() / w)
    elliptic = lo > 0
    return EllipticityReport(float(lo) if elliptic else 0.0, float(hi), elliptic)


@dataclass(frozen=True)
class Sector:
    """Closed left sector ``{|Im z| <= -Re z}`` joined with the disc ``|z| <= epsilon``."""

    epsilon: float = 0.0

    def contains(self, z):
        z = complex(z)
        slack = 1e-12 * abs(z)
        return (z.real <= slack and abs(z.imag) <= -z.real + slack) or abs(z) <= self.epsilon


def sector_samples(sector, ray_length, n):
    """Deterministic samples of the sector: radii geometric up to ``ray_length``."""
    n_r = max(2, int(round(math.sqrt(n))))
    n_t = max(2, int(math.ceil(n / n_r)))
    radii = np.geomspace(1e-3, ray_length, n_r)
    angles = np.linspace(0.75 * np.pi, 1.25 * np.pi, n_t)
    z = (radii[:, None] * np.exp(1j * angles[None, :])).ravel()
    return np.concatenate([[0.0], z])[:n]


def check_parameter_ellipticity(op, sector, z_samples, duals=None):
    """``sup ||(sigma - z)^-1|| (1 + <xi> + |z|^(1/m))^m`` over samples and duals.

    Returns ``(value, (dual, z))`` with the maximising pair.
    """
    duals = op.duals if duals is None else list(duals)
    m = op.order
    z_samples = np.atleast_1d(np.asarray(z_samples, dtype=complex))
    for z in z_samples:
        if not sector.contains(z):
            raise ParameterError(f"sample z={z} lies outside the sector")
    best, arg = -math.inf, None
    for d in duals:
        sig = op.symbol_at(d)
        eye = np.eye(d.dim)
        for z in z_samples:
            try:
                s = np.linalg.svd(sig - z * eye, compute_uv=False)
            except np.linalg.LinAlgError as exc:
                raise SingularResolventError(str(exc), d, z) from None
            if s.min() <= 1e-300 or s.max() / s.min() > 1e15:
                raise SingularResolventError(f"sigma - z singular at {d!r}, z={z}", d, z)
            val = (1.0 + d.bracket + abs(z) ** (1.0 / m)) ** m / s.min()
            if val > best:
                best, arg = val, (d, complex(z))
    return float(best), arg


def resolvent_order_bound(op, z, duals=None):
    """``max ||(sigma(xi) - z)^-1|| <xi>^m`` for a fixed ``z`` in the sector."""
    duals = op.duals if duals is None else list(duals)
    worst = 0.0
    for d in duals:
        s = np.linalg.svd(op.symbol_at(d) - z * np.eye(d.dim), compute_uv=False)
        worst = max(worst, d.bracket**op.order / s.min())
    return worst


@dataclass(frozen=True)
class ContourSpec:
    """Truncated boundary of the sector ``Lambda_epsilon``.

    ``ray_length=None`` picks the truncation so the neglected tails are below
    ``tail_tol`` (relative).  ``nodes_per_segment`` Gauss-Legendre nodes are
    used on each unit panel of ``log |lambda|`` along the rays and on the arc.
    """

    epsilon: float
    ray_length: float = None
    nodes_per_segment: int = 24
    tail_tol: float = 1e-12


def _ray_length(z, spec):
    if spec.ray_length is not None:
        return spec.ray_length
    # |lambda^z (sigma - lambda)^-1| <= e^{|Im z| 3pi/4} r^(Re z - 1) on both rays
    growth = math.exp(abs(z.imag) * 0.75 * math.pi)
    a = -z.real
    return max(10.0, (spec.tail_tol * a / (2.0 * growth)) ** (-1.0 / a))


def contour_nodes(z, spec):
    """Quadrature nodes ``lambda_k`` and complex weights ``w_k`` (``d lambda`` included)."""
    eps = spec.epsilon
    q = spec.nodes_per_segment
    gx, gw = np.polynomial.legendre.leggauss(q)
    log_lo, log_hi = math.log(eps), math.log(_ray_length(z, spec))
    n_pan = max(1, int(math.ceil(log_hi - log_lo)))
    edges = np.linspace(log_lo, log_hi, n_pan + 1)
    half = 0.5 * np.diff(edges)
    s = ((0.5 * (edges[1:] + edges[:-1]))[:, None] + half[:, None] * gx).ravel()
    ws = (half[:, None] * gw).ravel()
    r = np.exp(s)
    up, down = np.exp(0.75j * np.pi), np.exp(-0.75j * np.pi)
    # inward along the upper ray: d lambda = up * r ds, traversed from large to small r
    nodes = [r * up]
    weights = [-ws * r * up]
    # clockwise arc theta: 3pi/4 -> -3pi/4
    th = 0.75 * np.pi * gx[::-1]
    wth = 0.75 * np.pi * gw
    arc = eps * np.exp(1j * th)
    nodes.append(arc)
    weights.append(-wth * 1j * arc)
    # outward along the lower ray
    nodes.append(r * down)
    weights.append(ws * r * down)
    return np.concatenate(nodes), np.concatenate(weights)


def contour_power_matrix(sigma, z, spec):
    """``sigma^z`` for a Hermitian positive definite matrix via the resolvent integral."""
    z = complex(z)
    if z.real >= 0:
        raise UnsupportedExponentError(f"contour powers need Re z < 0, got {z}")
    sigma = np.atleast_2d(np.asarray(sigma, dtype=complex))
    n = sigma.shape[0]
    eigs = np.linalg.eigvalsh(sigma)
    lam, w = contour_nodes(z, spec)
    gap = np.min(np.abs(lam[:, None] - eigs[None, :]))
    if gap < spec.epsilon / 2:
        raise ResolventProximityError(
            f"contour passes within {gap:.3g} of the spectrum (need >= {spec.epsilon / 2:.3g})")
    mats = sigma[None, :, :] - lam[:, None, None] * np.eye(n)[None, :, :]
    res = np.linalg.inv(mats)
    coef = w * np.exp(z * np.log(lam))
    # fixed-order reduction keeps the result independent of threading
    total = np.zeros((n, n), dtype=complex)
    for k in np.argsort(np.abs(coef)):
        total += coef[k] * res[k]
    return -total / (2j * np.pi)


def _validate_contour(op, spec):
    c = op.positivity_floor
    if c <= 0:
        raise ParameterError("contour powers need a positive positivity floor")
    limit = c ** (2.0 / op.order) / 1000.0
    if not 0 < spec.epsilon < limit:
        raise ParameterError(f"contour epsilon must lie in (0, {limit:.6g}), got {spec.epsilon}")


def contour_power(op, z, contour, coeffs):
    """``A^z f`` on the Fourier side by the Dunford-Riesz integral."""
    _validate_contour(op, contour)
    out = {}
    for d, fh in coeffs.entries.items():
        if d not in op.symbol:
            raise CoverageError(f"operator has no symbol at {d!r}")
        out[d] = contour_power_matrix(op.symbol[d], z, contour) @ fh
    return FourierCoefficients(out)


def contour_power_symbol(op, z, contour):
    """Symbol table of ``A^z`` computed by contour integration."""
    _validate_contour(op, contour)
    return {d: contour_power_matrix(s, z, contour) for d, s in op.symbol.items()}


def matrix_power(sigma, z, tol=1e-12):
    """``U D^z U^*`` with ``0^z = 0`` on the kernel (so ``z = 0`` gives ``I - P_0``)."""
    z = complex(z)
    vals, vecs = np.linalg.eigh(sigma)
    scale = max(1.0, float(np.max(np.abs(vals))))
    zero = np.abs(vals) <= tol * scale
    if np.any(vals < -tol * scale):
        raise SingularPowerError("matrix is not positive semidefinite")
    if np.any(zero) and z.real < 0:
        raise SingularPowerError(f"zero eigenvalue with Re z = {z.real} < 0")
    pw = np.zeros(len(vals), dtype=complex)
    pos = ~zero
    pw[pos] = np.exp(z * np.log(vals[pos]))
    return (vecs * pw) @ vecs.conj().T


def direct_power(op, z):
    """``A^z`` by exact spectral calculus on every tabulated representation."""
    z = complex(z)
    table = {d: matrix_power(s, z) for d, s in op.symbol.items()}
    if z.imag == 0 and z.real > 0:
        floor = op.positivity_floor ** z.real
    else:
        floor = 0.0
    return SpectralOperator(op.backend, table, op.order * z.real, floor,
                            preset=f"{op.preset}^({z})", params=dict(op.params))


def compose(op1, op2):
    """Symbol-wise product (multipliers compose by matrix product)."""
    table = {d: op1.symbol[d] @ op2.symbol[d] for d in op1.symbol if d in op2.symbol}
    return SpectralOperator(op1.backend, table, op1.order + op2.order, 0.0)


@dataclass(frozen=True)
class SymbolClassReport:
    constants: dict
    divergent: bool
    growth: dict


def _spectral_dx(values, order):
    """``order``-th x-derivative of periodic samples along axis 0 (exact for trig polynomials)."""
    n = values.shape[0]
    freq = np.fft.fftfreq(n, d=1.0 / n)
    mult = (2j * np.pi * freq) ** order
    if n % 2 == 0 and order % 2 == 1:
        mult[n // 2] = 0.0
    out = np.fft.ifft(mult[:, None] * np.fft.fft(values, axis=0), axis=0)
    return out


def _symbol_table(a, m, rho, delta, max_order, K, nx):
    x = np.arange(nx) / nx
    k = np.arange(-K, K + max_order + 1)
    X, Kg = np.meshgrid(x, k, indexing="ij")
    vals = np.asarray(a(X, Kg), dtype=complex) * np.ones_like(X)
    table = {}
    for beta in range(max_order + 1):
        dv = _spectral_dx(vals, beta) if beta else vals
        for alpha in range(max_order + 1):
            diffd = dv
            for _ in range(alpha):
                diffd = diffd[:, 1:] - diffd[:, :-1]
            kk = k[: diffd.shape[1]]
            keep = np.abs(kk) <= K
            w = (1.0 + np.abs(kk[keep])) ** (-m + rho * alpha - delta * beta)
            table[(alpha, beta)] = float(np.max(np.abs(diffd[:, keep]) * w[None, :]))
    return table


def check_symbol_class(a, m, rho, delta, max_order=2, K=256, nx=64):
    """Estimate toroidal symbol constants ``C_{alpha,beta}`` of ``a(x, k)`` on ``T^1 x Z``.

    ``C_{alpha,beta} = max (1 + |k|)^(-m + rho alpha - delta beta) |Delta_k^alpha d_x^beta a|``
    with forward differences in ``k`` and spectral differentiation in ``x``.
    The table is recomputed with ``2K``; any constant that still grows by more
    than 1% sets ``divergent``.
    """
    if not (0 <= rho <= 1 and 0 <= delta <= 1):
        raise ParameterError("rho and delta must lie in [0, 1]")
    if max_order > 3:
        raise ParameterError("max_order must be <= 3")
    t1 = _symbol_table(a, m, rho, delta, max_order, K, nx)
    t2 = _symbol_table(a, m, rho, delta, max_order, 2 * K, nx)
    growth = {key: (t2[key] / t1[key] if t1[key] > 0 else (math.inf if t2[key] > 0 else 1.0))
              for key in t1}
    divergent = any(g > 1.01 for g in growth.values())
    return SymbolClassReport(t2, divergent, growth)
