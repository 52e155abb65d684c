"""Null controls for ``u_t + A^alpha u = 1_omega g`` on a truncated spectral system.

States are coefficient vectors on a :class:`~liespec.spectral.SpectralSubspace`
with decay rates ``mu_j = (lambda_j^m)^alpha``.  For a control
``g = 1_omega sum_k c_k(t) e_k`` the coefficient of ``e_i`` in ``1_omega g``
is ``sum_k M[k, i] c_k`` (``M`` the observation Gram matrix), so the
controllability Gramian is built from ``M^T``:

    G[i, j] = M[j, i] (1 - exp(-T (mu_i + mu_j))) / (mu_i + mu_j)

and the HUM control is ``c_k(t) = exp(-(T - t) mu_k) phi_k`` with
``G phi = -exp(-T mu) u0``.  Its cost ``||g||_{L2((0,T) x omega)}`` equals
``sqrt(phi^* G phi)``.

The observability constant ``C_T`` is the square root of the largest
eigenvalue of the pencil ``(E^2, G)`` with ``E = diag(exp(-T mu))``, solved
after scaling ``G`` to unit diagonal so only its equilibrated condition
number matters.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import (ConvergenceError, IllConditionedError, MagnitudeError,
                     ParameterError, UnfittableError)
from .spectral import affine_envelope, gram_on_set

COND_LIMIT = 1e14


def heat_propagate(coeffs, t, mu):
    """``c_j -> exp(-t mu_j) c_j``."""
    if t < 0:
        raise ParameterError(f"propagation time must be >= 0, got {t}")
    return np.exp(-t * np.asarray(mu, dtype=float)) * np.asarray(coeffs)


def _pair_sums(mu_rows, mu_cols):
    return np.asarray(mu_rows, dtype=float)[:, None] + np.asarray(mu_cols, dtype=float)[None, :]


def decay_kernel(T, s):
    """``(1 - exp(-T s)) / s`` with the ``s = 0`` value ``T``."""
    s = np.asarray(s, dtype=float)
    safe = np.where(s == 0, 1.0, s)
    return np.where(s == 0, T, -np.expm1(-T * safe) / safe)


def gramian_from_gram(M, T, mu):
    """Controllability Gramian from an observation Gram matrix."""
    if T <= 0:
        raise ParameterError("T must be positive")
    G = np.asarray(M).T * decay_kernel(T, _pair_sums(mu, mu))
    return 0.5 * (G + G.conj().T)


def control_gramian(subspace, omega, T, mu, grid, gram=None):
    M = (gram if gram is not None else gram_on_set(subspace, omega, grid)).matrix
    return gramian_from_gram(M, T, mu)


def graded_time_rule(T, rate, nodes_per_panel=16):
    """Gauss-Legendre rule on ``[0, T]`` with panels halving towards ``t = T``.

    Resolves ``exp(-(T - t) rate)`` to machine precision.
    """
    levels = max(0, int(math.ceil(math.log2(max(T * rate, 1.0))))) + 3
    edges = [T - T * 2.0**-j for j in range(levels + 1)] + [T]
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (lo + hi) + 0.5 * (hi - lo) * x)
        weights.append(0.5 * (hi - lo) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def duhamel_response(MT_block, tau, mu_rows, mu_cols, phi):
    """``int_0^tau exp(-(tau-t) mu_i) sum_k MT[i,k] exp(-(tau-t) mu_k) phi_k dt`` by quadrature.

    Independent of the closed-form Gramian; used to simulate terminal states.
    """
    mu_rows = np.asarray(mu_rows, dtype=float)
    mu_cols = np.asarray(mu_cols, dtype=float)
    top = float(np.max(mu_rows)) + float(np.max(mu_cols)) if len(mu_cols) else 0.0
    t, w = graded_time_rule(tau, top)
    back = tau - t
    kq = np.einsum("n,ni,nk->ik", w, np.exp(-np.outer(back, mu_rows)),
                   np.exp(-np.outer(back, mu_cols)))
    return (MT_block * kq) @ phi


@dataclass(frozen=True, eq=False)
class ControlProblem:
    """Truncated control system on ``subspace`` observed/controlled from ``omega``."""

    subspace: object
    omega: object
    grid: object
    alpha: float
    T: float
    u0: np.ndarray = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ParameterError("alpha must be positive")
        if self.T <= 0:
            raise ParameterError("T must be positive")
        u0 = np.zeros(len(self.subspace), dtype=complex) if self.u0 is None else \
            np.asarray(self.u0, dtype=complex)
        if u0.shape != (len(self.subspace),):
            raise ParameterError(f"u0 must have {len(self.subspace)} entries")
        object.__setattr__(self, "u0", u0)

    @property
    def m(self):
        return self.subspace.operator.order

    @property
    def subcritical(self):
        """``alpha m <= 1``: outside the regime where the cost bound is claimed."""
        return self.alpha * self.m <= 1

    @cached_property
    def mu(self):
        return np.asarray(self.subspace.eigs, dtype=float) ** self.alpha

    @cached_property
    def gram(self):
        return gram_on_set(self.subspace, self.omega, self.grid).matrix

    def with_(self, **kw):
        args = dict(subspace=self.subspace, omega=self.omega, grid=self.grid,
                    alpha=self.alpha, T=self.T, u0=self.u0)
        args.update(kw)
        out = ControlProblem(**args)
        if "subspace" not in kw and "omega" not in kw and "gram" in self.__dict__:
            out.__dict__["gram"] = self.gram
        return out


@dataclass(frozen=True, eq=False)
class ControlResult:
    times: np.ndarray
    control: np.ndarray
    phi: np.ndarray
    cost: float
    terminal_residual: float
    condition: float
    regularized: bool = False
    terminal_state: np.ndarray = None


def _check_condition(G):
    cond = float(np.linalg.cond(G))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(
            f"Gramian condition {cond:.3g} exceeds {COND_LIMIT:.0e}; "
            "use a smaller subspace or a larger T", cond)
    return cond


def _hermitian_solve(G, rhs):
    # LAPACK hesv: Bunch-Kaufman symmetric pivoting
    return scipy.linalg.solve(G, rhs, assume_a="her")


def hum_control(problem, tol=1e-8, regularization=0.0, time_samples=256):
    """Minimal-norm control steering ``u0`` to zero at ``T`` on the truncated system.

    ``regularization`` adds ``sigma tr(G)/N`` to the diagonal; the terminal
    residual is then reported but not enforced.
    """
    T, mu, u0 = problem.T, problem.mu, problem.u0
    n = len(mu)
    G = gramian_from_gram(problem.gram, T, mu)
    if regularization < 0:
        raise ParameterError("regularization must be >= 0")
    if regularization > 0:
        G = G + regularization * np.trace(G).real / n * np.eye(n)
    cond = _check_condition(G)
    times = np.linspace(0.0, T, time_samples)
    unorm = float(np.linalg.norm(u0))
    if unorm == 0.0:
        return ControlResult(times, np.zeros((time_samples, n), dtype=complex),
                             np.zeros(n, dtype=complex), 0.0, 0.0, cond, regularization > 0,
                             np.zeros(n, dtype=complex))
    phi = _hermitian_solve(G, -np.exp(-T * mu) * u0)
    uT = np.exp(-T * mu) * u0 + duhamel_response(problem.gram.T, T, mu, mu, phi)
    resid = float(np.linalg.norm(uT)) / unorm
    if regularization == 0 and not resid <= tol:
        raise ConvergenceError(f"terminal residual {resid:.3g} above tolerance {tol:.1e}",
                               {"residual": resid, "condition": cond, "T": T})
    cost = math.sqrt(max(float(np.real(np.vdot(phi, G @ phi))), 0.0))
    control = np.exp(-np.outer(T - times, mu)) * phi[None, :]
    return ControlResult(times, control, phi, cost, resid, cond, regularization > 0, uT)


def control_cost_quadrature(problem, result, nodes=None):
    """``||g||^2_{L2((0,T) x omega)}`` from time quadrature of ``c(t)^* M^T c(t)``; an oracle for the closed form."""
    T, mu = problem.T, problem.mu
    t, w = graded_time_rule(T, 2 * float(np.max(mu))) if nodes is None else nodes
    c = np.exp(-np.outer(T - t, mu)) * result.phi[None, :]
    dens = np.real(np.einsum("ni,ij,nj->n", c.conj(), problem.gram.T, c))
    return math.sqrt(max(float(np.sum(w * dens)), 0.0))


@dataclass(frozen=True, eq=False)
class ObservabilityCost:
    C_T: float
    worst_u0: np.ndarray
    condition: float


def observability_cost(problem):
    """Smallest ``C_T`` with ``||e^{-TA} v|| <= C_T ||1_omega e^{-tA} v||_{L2(0,T)}``.

    ``worst_u0`` is the unit initial state with the largest HUM cost.
    """
    T, mu = problem.T, problem.mu
    G = gramian_from_gram(problem.gram, T, mu)
    d = np.sqrt(np.real(np.diag(G)))
    Gs = G / np.outer(d, d)
    cond = float(np.linalg.cond(G))
    scond = float(np.linalg.cond(Gs))
    if not np.isfinite(scond) or scond > COND_LIMIT:
        raise IllConditionedError(f"equilibrated Gramian condition {scond:.3g} exceeds "
                                  f"{COND_LIMIT:.0e}", scond)
    E = np.exp(-T * mu)
    vals, vecs = scipy.linalg.eigh(np.diag((E / d) ** 2), Gs)
    u = E * vecs[:, -1] / d
    return ObservabilityCost(math.sqrt(max(vals[-1], 0.0)), u / np.linalg.norm(u), cond)


@dataclass(frozen=True)
class DualityReport:
    C_T: float
    random_max: float
    power_cost: float
    power_iterations: int


def duality_check(problem, samples=200, rng=None, max_iter=2000, tol=1e-8):
    """Worst-case HUM cost over random unit ``u0`` and by power iteration on the pencil."""
    rng = rng if rng is not None else np.random.default_rng(0)
    obs = observability_cost(problem)
    n = len(problem.mu)
    best = 0.0
    for _ in range(samples):
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        u /= np.linalg.norm(u)
        best = max(best, hum_control(problem.with_(u0=u), tol=tol).cost)
    # power iteration on E G^-1 E
    G = gramian_from_gram(problem.gram, problem.T, problem.mu)
    E = np.exp(-problem.T * problem.mu)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    ray = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        w = E * _hermitian_solve(G, E * v)
        new = float(np.real(np.vdot(v, w)))
        v = w / np.linalg.norm(w)
        if abs(new - ray) <= 1e-13 * abs(new):
            break
        ray = new
    power = hum_control(problem.with_(u0=v), tol=tol).cost
    return DualityReport(obs.C_T, best, power, it)


@dataclass(frozen=True)
class StageReport:
    stage: int
    t_start: float
    t_end: float
    lambda_cut: float
    n_controlled: int
    cost: float
    controlled_residual: float


@dataclass(frozen=True, eq=False)
class LRResult:
    stages: list
    cost: float
    terminal_residual: float
    uncontrolled_residual: float
    complete: bool
    terminal_state: np.ndarray
    message: str = ""
    per_stage_costs: list = field(default_factory=list)


def lr_scheme(problem, full_lambda_cut=None, block_ratio=0.5, lambda0=None, tol=1e-8):
    """Dyadic low-frequency control followed by free decay.

    Stage ``k`` occupies ``T_k = T 2^(-k-1) / sum_j 2^(-j-1)``; during the first
    ``block_ratio * T_k`` it applies the HUM control of the modes with
    ``freq <= min(2^k lambda0, full_lambda_cut)`` and the rest of the block is
    free decay.  The last stage reaches ``full_lambda_cut``.  Modes above
    ``full_lambda_cut`` are never controlled; their residual is reported.
    """
    if not 0 < block_ratio <= 1:
        raise ParameterError("block_ratio must lie in (0, 1]")
    freqs = np.asarray(problem.subspace.freqs, dtype=float)
    mu = problem.mu
    MT = problem.gram.T
    full = float(freqs.max()) if full_lambda_cut is None else float(full_lambda_cut)
    if lambda0 is None:
        pos = freqs[freqs > 0]
        lambda0 = float(pos.min()) if pos.size else full
    if lambda0 <= 0:
        raise ParameterError("lambda0 must be positive")
    n_stages = 1 + max(0, int(math.ceil(math.log2(full / lambda0 * (1 - 1e-12)))))
    weights = np.array([2.0 ** (-k - 1) for k in range(n_stages)])
    blocks = problem.T * weights / weights.sum()
    u = problem.u0.copy()
    unorm = float(np.linalg.norm(u))
    t = 0.0
    stages, costs = [], []
    complete, message = True, ""
    for k, Tk in enumerate(blocks):
        cut = min(lambda0 * 2.0**k, full)
        ctrl = np.flatnonzero(freqs <= cut * (1 + 1e-12))
        tau = block_ratio * Tk
        uc = u[ctrl]
        start = float(np.linalg.norm(u))
        if np.linalg.norm(uc) == 0.0:
            phi = np.zeros(len(ctrl), dtype=complex)
            cost = 0.0
        else:
            G = MT[np.ix_(ctrl, ctrl)] * decay_kernel(tau, _pair_sums(mu[ctrl], mu[ctrl]))
            G = 0.5 * (G + G.conj().T)
            try:
                _check_condition(G)
            except IllConditionedError as exc:
                complete, message = False, f"stage {k}: {exc}"
                break
            phi = _hermitian_solve(G, -np.exp(-tau * mu[ctrl]) * uc)
            cost = math.sqrt(max(float(np.real(np.vdot(phi, G @ phi))), 0.0))
        u = np.exp(-tau * mu) * u
        if cost > 0:
            u = u + duhamel_response(MT[:, ctrl], tau, mu, mu[ctrl], phi)
        res_c = float(np.linalg.norm(u[ctrl])) / start if start > 0 else 0.0
        u = heat_propagate(u, Tk - tau, mu)
        stages.append(StageReport(k, float(t), float(t + Tk), float(cut), len(ctrl), cost, res_c))
        costs.append(cost)
        t += Tk
    above = freqs > full * (1 + 1e-12)
    total = math.sqrt(math.fsum(c * c for c in costs))
    resid = float(np.linalg.norm(u)) / unorm if unorm > 0 else 0.0
    unres = float(np.linalg.norm(u[above])) / unorm if unorm > 0 and above.any() else 0.0
    if complete and resid > tol:
        message = f"terminal residual {resid:.3g} above {tol:.1e}"
    return LRResult(stages, total, resid, unres, complete, u, message, costs)


@dataclass(frozen=True, eq=False)
class CostFit:
    T_grid: np.ndarray
    costs: np.ndarray
    conditions: np.ndarray
    flags: list
    beta_hat: float
    r_squared: float
    C1: float
    C2: float
    alpha: float
    m: float
    envelope_slack: float = math.nan

    @property
    def valid(self):
        return np.array([f == "" for f in self.flags])

    @property
    def envelope_holds(self):
        return self.envelope_slack >= -1e-9


def _linear_r2(x, y):
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    tot = np.sum((y - y.mean()) ** 2)
    return 1.0 - float(resid @ resid) / tot if tot > 0 else 1.0


def cost_scan(problem, T_grid, alpha=None, n_beta=64, min_rows=5, map_fn=map):
    """``C_T`` on ``T_grid`` and the fit ``log C_T ~ log C1 + C2 T^-beta``.

    ``beta`` ranges over ``[0.5, 4] / (alpha m - 1)``; the reported ``beta_hat``
    has the best least-squares ``R^2``, and ``(C1, C2)`` is the affine upper
    envelope in ``x = T^-beta_hat``.  Rows breaking strict growth as ``T``
    decreases are flagged and left out of the fit.  For ``alpha m <= 1`` the
    costs are reported without a fit.  ``map_fn`` may be an executor's
    ``map``; results are consumed in grid order.
    """
    alpha = problem.alpha if alpha is None else alpha
    problem = problem.with_(alpha=alpha)
    Ts = np.asarray(sorted(T_grid, reverse=True), dtype=float)
    if np.any(Ts <= 0):
        raise ParameterError("T grid must be positive")
    problem.gram  # computed once, shared by the scan points

    def point(T):
        try:
            obs = observability_cost(problem.with_(T=float(T)))
            return obs.C_T, obs.condition
        except (IllConditionedError, MagnitudeError):
            return math.nan, math.inf

    costs, conds, flags = [], [], []
    prev = -math.inf
    for c, cond in map_fn(point, Ts):
        if not np.isfinite(c):
            flags.append("breakdown")
        elif c <= prev:
            flags.append("non-monotone")
        else:
            flags.append("")
            prev = c
        costs.append(c)
        conds.append(cond)
    costs, conds = np.array(costs), np.array(conds)
    m = problem.m
    base = dict(T_grid=Ts, costs=costs, conditions=conds, flags=flags, alpha=alpha, m=m)
    if problem.subcritical:
        return CostFit(beta_hat=math.nan, r_squared=math.nan, C1=math.nan, C2=math.nan, **base)
    ok = np.array([f == "" for f in flags])
    if ok.sum() < min_rows:
        raise UnfittableError(f"only {int(ok.sum())} valid rows (need {min_rows})")
    y = np.log(costs[ok])
    k = alpha * m - 1
    betas = np.linspace(0.5 / k, 4.0 / k, n_beta)
    r2 = [_linear_r2(Ts[ok] ** -b, y) for b in betas]
    best = int(np.argmax(r2))
    beta = float(betas[best])
    x = Ts[ok] ** -beta
    slope, intercept = affine_envelope(x, y)
    slack = float(np.min(intercept + slope * x - y))
    return CostFit(beta_hat=beta, r_squared=float(r2[best]), C1=math.exp(intercept),
                   C2=float(slope), envelope_slack=slack, **base)
