"""Concrete compact groups: unitary duals, representations and Haar quadrature.

Two families are supported, selected by name:

``"torus1"``, ``"torus2"``
    The flat torus ``T^n = R^n / Z^n`` with characters ``x -> exp(2 pi i k.x)``.
    Points are coordinate vectors in ``[0, 1)^n``.  The positive Laplacian
    acts on the character ``k`` by ``4 pi^2 |k|^2``.

``"su2"``
    ``SU(2)`` parametrised by z-y-z Euler angles ``(alpha, beta, gamma)`` with
    ``alpha in [0, 2pi)``, ``beta in [0, pi]``, ``gamma in [0, 4pi)`` (the
    double cover of the rotation group).  The normalised Haar density in these
    coordinates is ``sin(beta) / (16 pi^2)``.  Irreducible representations are
    labelled by spin ``l in {0, 1/2, 1, ...}``; the Casimir eigenvalue
    ``l (l + 1)`` is used as the Laplacian eigenvalue.  Representation matrices
    are Wigner D-matrices with rows and columns ordered ``m = l, l-1, ..., -l``
    so that the spin-1/2 matrix is the defining ``SU(2)`` matrix itself.

Geodesic distance on ``SU(2)`` is the rotation angle ``theta in [0, 2pi]`` of
``g h^*``, i.e. ``cos(theta / 2) = Re Tr(g h^*) / 2``.  With this convention a
ball of radius ``r`` about any point has Haar volume ``(r - sin r) / (2 pi)``.

Quadrature grids integrate products ``xi(x)_{ij} conj(eta(x)_{kl})`` exactly
as long as both representations are within the grid's ``bandlimit``:

* torus, uniform grid with ``N`` points per axis: ``max |k_i| <= (N - 1) // 2``;
* ``SU(2)``, resolution ``N``: ``l <= N / 2`` (combined degree ``l + l' <= N``).

Every operation that relies on exact integration checks the band limit and
raises :class:`~liespec.errors.BandlimitError` instead of degrading silently.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BandlimitError, ConfigurationError, ParameterError

TWO_PI = 2.0 * np.pi
WIGNER_MAX_SPIN = 25

_LOGFACT = np.array([math.lgamma(n + 1.0) for n in range(4 * WIGNER_MAX_SPIN + 4)])


@dataclass(frozen=True)
class DualIndex:
    """One irreducible representation class.

    Equality and hashing only look at ``(group, label)``.
    """

    group: str
    label: object
    dim: int = field(compare=False)
    laplace_eig: float = field(compare=False)

    @property
    def bracket(self):
        return math.sqrt(1.0 + self.laplace_eig)

    def __repr__(self):
        return f"DualIndex({self.group}, {self.label!r})"


def _freeze(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes and positive weights summing to one (normalised Haar measure)."""

    group: str
    nodes: np.ndarray
    weights: np.ndarray
    resolution: int
    bandlimit: float
    kind: str = "uniform"
    breakpoints: tuple = ()

    @property
    def size(self):
        return len(self.weights)


@dataclass(frozen=True, eq=False)
class FourierCoefficients:
    """Finitely supported matrix-valued function on the unitary dual."""

    entries: dict

    def __getitem__(self, dual):
        return self.entries[dual]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def duals(self):
        return list(self.entries)

    def norm(self):
        """l2 norm ``(sum d_xi ||f(xi)||_HS^2)^(1/2)``."""
        total = math.fsum(d.dim * float(np.sum(np.abs(m) ** 2))
                          for d, m in self.entries.items())
        return math.sqrt(total)


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """An open set given as a node mask on a quadrature grid."""

    grid: QuadratureGrid
    mask: np.ndarray
    measure: float
    descriptor: dict
    saturated: bool = False

    @property
    def empty(self):
        return not bool(self.mask.any())


class Torus:
    """The n-torus ``R^n / Z^n``."""

    def __init__(self, ndim):
        self.ndim = ndim
        self.name = f"torus{ndim}"
        self.point_dim = ndim
        self.diameter = 0.5 * math.sqrt(ndim)
        self.smallest_positive_eig = 4.0 * np.pi**2

    def __repr__(self):
        return f"Torus({self.ndim})"

    def identity(self):
        return np.zeros(self.ndim)

    def dual(self, label):
        k = tuple(int(v) for v in np.atleast_1d(label))
        if len(k) != self.ndim:
            raise ParameterError(f"torus{self.ndim} label needs {self.ndim} integers, got {label!r}")
        return DualIndex(self.name, k, 1, 4.0 * np.pi**2 * sum(v * v for v in k))

    def degree(self, dual):
        return max((abs(v) for v in dual.label), default=0)

    def enumerate_dual(self, bracket_cut):
        lam_cut = bracket_cut**2 - 1.0
        kmax = int(math.floor(math.sqrt(max(lam_cut, 0.0)) / TWO_PI + 1e-12))
        out = []
        for k in itertools.product(range(-kmax, kmax + 1), repeat=self.ndim):
            d = self.dual(k)
            if d.laplace_eig <= lam_cut * (1 + 1e-12) + 1e-12:
                out.append(d)
        out.sort(key=lambda d: (d.laplace_eig, d.label))
        return out

    def rep_on_points(self, dual, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        phase = points @ np.asarray(dual.label, dtype=float)
        return np.exp(1j * TWO_PI * phase)[:, None, None]

    def multiply(self, x, y):
        return np.mod(np.asarray(x, float) + np.asarray(y, float), 1.0)

    def inverse(self, x):
        return np.mod(-np.asarray(x, float), 1.0)

    def distance(self, center, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        diff = np.abs(points - np.asarray(center, dtype=float))
        diff = np.minimum(np.mod(diff, 1.0), 1.0 - np.mod(diff, 1.0))
        return np.sqrt(np.sum(diff**2, axis=1))

    def ball_volume(self, radius):
        """Exact Haar volume of a geodesic ball (only for ``torus1``)."""
        if self.ndim != 1:
            raise NotImplementedError("closed form only on the circle")
        return min(2.0 * radius, 1.0)

    def random_point(self, rng):
        return rng.random(self.ndim)

    def bandlimit(self, resolution):
        return (resolution - 1) // 2

    def quadrature(self, resolution):
        x = (np.arange(resolution) + 0.5) / resolution
        mesh = np.meshgrid(*([x] * self.ndim), indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=1)
        weights = np.full(len(nodes), 1.0 / len(nodes))
        return QuadratureGrid(self.name, _freeze(nodes), _freeze(weights), resolution,
                              self.bandlimit(resolution), "uniform")


def _wigner_small_d(spin, beta):
    """Wigner little-d matrices ``d^l_{m'm}(beta)`` for an array of angles.

    Returns an array of shape ``(len(beta), 2l+1, 2l+1)`` with rows ``m'`` and
    columns ``m`` both ordered ``l, l-1, ..., -l``.
    """
    two_l = int(round(2 * spin))
    if two_l > 2 * WIGNER_MAX_SPIN:
        raise ParameterError(f"spin {spin} above supported maximum {WIGNER_MAX_SPIN}")
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    c = np.cos(beta / 2)
    s = np.sin(beta / 2)
    dim = two_l + 1
    out = np.zeros((len(beta), dim, dim))
    # work with doubled indices: j2 = 2l, mp2 = 2m', m2 = 2m
    for r in range(dim):
        mp2 = two_l - 2 * r
        for col in range(dim):
            m2 = two_l - 2 * col
            jpm_p = (two_l + mp2) // 2
            jmm_p = (two_l - mp2) // 2
            jpm = (two_l + m2) // 2
            jmm = (two_l - m2) // 2
            diff = (mp2 - m2) // 2
            lognum = 0.5 * (_LOGFACT[jpm_p] + _LOGFACT[jmm_p] + _LOGFACT[jpm] + _LOGFACT[jmm])
            smin = max(0, -diff)
            smax = min(jpm, jmm_p)
            acc = np.zeros(len(beta))
            for k in range(smin, smax + 1):
                logden = (_LOGFACT[jpm - k] + _LOGFACT[k] + _LOGFACT[diff + k]
                          + _LOGFACT[jmm_p - k])
                coef = math.exp(lognum - logden)
                if (diff + k) % 2:
                    coef = -coef
                acc += coef * c ** (two_l - diff - 2 * k) * s ** (diff + 2 * k)
            out[:, r, col] = acc
    return out


class SU2:
    """The group SU(2) in z-y-z Euler coordinates."""

    name = "su2"
    point_dim = 3
    diameter = TWO_PI
    smallest_positive_eig = 0.75

    def __repr__(self):
        return "SU2()"

    def identity(self):
        return np.zeros(3)

    def dual(self, spin):
        two_l = int(round(2 * float(spin)))
        if two_l < 0 or abs(two_l - 2 * float(spin)) > 1e-12:
            raise ParameterError(f"spin must be a nonnegative half-integer, got {spin!r}")
        spin = two_l / 2
        return DualIndex(self.name, spin, two_l + 1, spin * (spin + 1))

    def degree(self, dual):
        return dual.label

    def enumerate_dual(self, bracket_cut):
        lam_cut = bracket_cut**2 - 1.0
        out = []
        two_l = 0
        while True:
            spin = two_l / 2
            if spin * (spin + 1) > lam_cut * (1 + 1e-12) + 1e-12:
                break
            out.append(self.dual(spin))
            two_l += 1
        return out

    @staticmethod
    def matrix(points):
        """Defining 2x2 matrices of Euler-angle points, shape ``(N, 2, 2)``."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        a, b, g = p[:, 0], p[:, 1], p[:, 2]
        c, s = np.cos(b / 2), np.sin(b / 2)
        out = np.empty((len(p), 2, 2), dtype=complex)
        out[:, 0, 0] = np.exp(-0.5j * (a + g)) * c
        out[:, 0, 1] = -np.exp(-0.5j * (a - g)) * s
        out[:, 1, 0] = np.exp(0.5j * (a - g)) * s
        out[:, 1, 1] = np.exp(0.5j * (a + g)) * c
        return out

    @staticmethod
    def euler_from_matrix(u):
        u = np.asarray(u)
        c, s = abs(u[0, 0]), abs(u[1, 0])
        beta = 2.0 * math.atan2(s, c)
        tiny = 1e-14
        plus = -2.0 * np.angle(u[0, 0]) if c > tiny else 0.0
        minus = 2.0 * np.angle(u[1, 0]) if s > tiny else 0.0
        alpha = 0.5 * (plus + minus)
        gamma = 0.5 * (plus - minus)
        shift = math.floor(alpha / TWO_PI)
        alpha -= TWO_PI * shift
        gamma -= TWO_PI * shift
        gamma = gamma % (2 * TWO_PI)
        return np.array([alpha, beta, gamma])

    def rep_on_points(self, dual, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        spin = dual.label
        m = spin - np.arange(dual.dim)
        d = _wigner_small_d(spin, p[:, 1])
        left = np.exp(-1j * np.outer(p[:, 0], m))
        right = np.exp(-1j * np.outer(p[:, 2], m))
        return left[:, :, None] * d * right[:, None, :]

    def multiply(self, x, y):
        return self.euler_from_matrix(self.matrix(x)[0] @ self.matrix(y)[0])

    def inverse(self, x):
        return self.euler_from_matrix(self.matrix(x)[0].conj().T)

    def distance(self, center, points):
        g = self.matrix(center)[0]
        h = self.matrix(points)
        tr = np.einsum("ij,nij->n", g, h.conj()).real
        return 2.0 * np.arccos(np.clip(tr / 2.0, -1.0, 1.0))

    def ball_volume(self, radius):
        r = min(radius, TWO_PI)
        return (r - math.sin(r)) / TWO_PI

    def random_point(self, rng):
        # Haar-random via a uniform unit quaternion
        q = rng.standard_normal(4)
        q /= np.linalg.norm(q)
        u = np.array([[q[0] + 1j * q[3], -q[2] + 1j * q[1]],
                      [q[2] + 1j * q[1], q[0] - 1j * q[3]]])
        return self.euler_from_matrix(u)

    def bandlimit(self, resolution):
        return resolution / 2

    def quadrature(self, resolution):
        n_alpha, n_gamma, n_beta = resolution + 1, 2 * resolution + 1, resolution // 2 + 1
        alpha = TWO_PI * np.arange(n_alpha) / n_alpha
        gamma = 2 * TWO_PI * np.arange(n_gamma) / n_gamma
        x, wx = np.polynomial.legendre.leggauss(n_beta)
        beta = np.arccos(x)
        A, B, G = np.meshgrid(alpha, beta, gamma, indexing="ij")
        W = np.meshgrid(np.full(n_alpha, 1.0 / n_alpha), wx / 2.0,
                        np.full(n_gamma, 1.0 / n_gamma), indexing="ij")
        nodes = np.stack([A.ravel(), B.ravel(), G.ravel()], axis=1)
        weights = (W[0] * W[1] * W[2]).ravel()
        return QuadratureGrid(self.name, _freeze(nodes), _freeze(weights), resolution,
                              self.bandlimit(resolution), "uniform")


_BACKENDS = {"torus1": lambda: Torus(1), "torus2": lambda: Torus(2), "su2": SU2}


def get_backend(name):
    """Backend for a group selection string ``torus1 | torus2 | su2``."""
    try:
        return _BACKENDS[name]()
    except KeyError:
        raise ConfigurationError(f"unsupported group {name!r}; choose from {sorted(_BACKENDS)}") from None


def _check_backend(backend, grid):
    if grid.group != backend.name:
        raise ParameterError(f"grid built for {grid.group}, backend is {backend.name}")


def check_bandlimit(backend, grid, duals):
    """Raise :class:`BandlimitError` if any representation exceeds the grid's band limit."""
    worst = max((backend.degree(d) for d in duals), default=0)
    if worst > grid.bandlimit + 1e-12:
        raise BandlimitError(
            f"representation degree {worst} exceeds band limit {grid.bandlimit} "
            f"of {grid.kind} grid at resolution {grid.resolution}")


def enumerate_dual(backend, bracket_cut):
    """All representations with ``<xi> <= bracket_cut``, ascending Laplacian eigenvalue."""
    if bracket_cut < 1:
        raise ParameterError("bracket_cut must be >= 1")
    return backend.enumerate_dual(bracket_cut)


def rep_matrix(backend, dual, x):
    """Unitary matrix ``xi(x)`` at a single group point."""
    return backend.rep_on_points(dual, np.atleast_1d(np.asarray(x, dtype=float)))[0]


def haar_quadrature(backend, resolution, bandlimit=None):
    if resolution < 2:
        raise ParameterError("resolution must be >= 2")
    grid = backend.quadrature(resolution)
    if bandlimit is not None and bandlimit > grid.bandlimit:
        raise BandlimitError(f"resolution {resolution} only resolves degree {grid.bandlimit}, "
                             f"requested {bandlimit}")
    return grid


def panel_quadrature(backend, resolution, breakpoints=(), nodes_per_panel=16):
    """Composite Gauss-Legendre grid on the circle with panel edges at ``breakpoints``.

    Used for observation arcs: a set whose endpoints are panel edges is
    integrated to near machine precision, which a masked uniform grid cannot
    do.  The band limit matches the uniform grid of the same resolution.
    """
    if backend.name != "torus1":
        raise ParameterError("panel quadrature is only available on torus1")
    if resolution < 2:
        raise ParameterError("resolution must be >= 2")
    edges = set(np.arange(resolution + 1) / resolution)
    edges.update(float(b) % 1.0 for b in breakpoints)
    edges = np.array(sorted(edges))
    if edges[-1] < 1.0:
        edges = np.append(edges, 1.0)
    edges = edges[np.concatenate([[True], np.diff(edges) > 1e-15])]
    gx, gw = np.polynomial.legendre.leggauss(nodes_per_panel)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (hi + lo))[:, None] + half[:, None] * gx[None, :]
    weights = half[:, None] * gw[None, :]
    weights = weights.ravel()
    weights = weights / math.fsum(weights)
    return QuadratureGrid(backend.name, _freeze(nodes.reshape(-1, 1)), _freeze(weights),
                          resolution, backend.bandlimit(resolution), "panel",
                          tuple(sorted(float(b) % 1.0 for b in breakpoints)))


def rep_table(backend, grid, duals):
    """Representation matrices of every dual on every grid node."""
    return {d: backend.rep_on_points(d, grid.nodes) for d in duals}


def fourier_transform(backend, grid, f, duals, table=None):
    """``f_hat(xi) = sum_nodes w f(x) xi(x)^*``."""
    _check_backend(backend, grid)
    check_bandlimit(backend, grid, duals)
    f = np.asarray(f)
    if f.shape != (grid.size,):
        raise ParameterError(f"samples have shape {f.shape}, grid has {grid.size} nodes")
    wf = grid.weights * f
    entries = {}
    for d in duals:
        r = table[d] if table is not None else backend.rep_on_points(d, grid.nodes)
        entries[d] = np.einsum("n,nij->ji", wf, r.conj())
    return FourierCoefficients(entries)


def inverse_fourier(backend, coeffs, x):
    """``sum_xi d_xi Tr[xi(x) f_hat(xi)]`` at one point or an array of points."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 0 or (pts.ndim == 1 and backend.point_dim > 1)
    if backend.point_dim == 1 and pts.ndim == 1:
        pts = pts[:, None]
    pts = np.atleast_2d(pts)
    total = np.zeros(len(pts), dtype=complex)
    for d, fh in coeffs.entries.items():
        r = backend.rep_on_points(d, pts)
        total += d.dim * np.einsum("nij,ji->n", r, fh)
    return total[0] if single else total


def l2_norm_on_grid(grid, f):
    return math.sqrt(math.fsum(grid.weights * np.abs(np.asarray(f)) ** 2))


def geodesic_ball(backend, center, radius, grid):
    """Nodes at geodesic distance strictly less than ``radius`` from ``center``."""
    _check_backend(backend, grid)
    if radius <= 0:
        raise ParameterError("radius must be positive")
    saturated = radius > backend.diameter
    if saturated:
        warnings.warn(f"radius {radius} exceeds the group diameter {backend.diameter}; "
                      "returning the whole group", stacklevel=2)
        mask = np.ones(grid.size, dtype=bool)
    else:
        mask = backend.distance(center, grid.nodes) < radius
    desc = {"kind": "ball", "center": [float(v) for v in np.atleast_1d(center)],
            "radius": float(radius)}
    return ObservationSet(grid, _freeze(mask), math.fsum(grid.weights[mask]), desc, saturated)


def _arc_mask(x, arcs):
    mask = np.zeros(len(x), dtype=bool)
    for start, end in arcs:
        length = end - start
        if not 0 < length <= 1:
            raise ParameterError(f"arc ({start}, {end}) must have length in (0, 1]")
        rel = np.mod(x - start, 1.0)
        inside = (rel > 0) & (rel < length) if length < 1 else rel > -1
        mask |= inside
    return mask


def arc_set(backend, grid, arcs):
    """Union of open arcs ``(start, end)`` on the circle."""
    _check_backend(backend, grid)
    if backend.name != "torus1":
        raise ParameterError("arcs are only defined on torus1")
    arcs = [(float(a), float(b)) for a, b in arcs]
    mask = _arc_mask(grid.nodes[:, 0], arcs)
    desc = {"kind": "arcs", "arcs": [list(a) for a in arcs]}
    return ObservationSet(grid, _freeze(mask), math.fsum(grid.weights[mask]), desc)


def full_set(grid):
    mask = np.ones(grid.size, dtype=bool)
    return ObservationSet(grid, _freeze(mask), math.fsum(grid.weights), {"kind": "full"})


def empty_set(grid):
    mask = np.zeros(grid.size, dtype=bool)
    return ObservationSet(grid, _freeze(mask), 0.0, {"kind": "empty"})
