"""Particle measures: surface and chart measures, lower-bound measures,
push-forwards, the t-averaged measure, mollification and binary io.

Two representations share one interface (ambient_dim, total_mass,
positions, weights, params, phase_terms):

* ParticleMeasure: an explicit atom list.
* ChartMeasure: atoms Phi(x_j, h_l) of a product parameter rule, kept in
  factored form.  Its Fourier sums never materialise the N_x * N_h atoms.

`phase_terms(xi)` returns (A, B, W, hv, hw) such that the projection of
atom (j, l) on xi is A_j hv_l + B_j with weight W_j hw_l.
"""

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import quadrature
from .errors import DomainError, EmptySupport, MemoryCapExceeded, ZeroMass

MEMORY_CAP = 10_000_000
_ONE = np.ones(1)


# --- bump functions ----------------------------------------------------------


def _E(u):
    out = np.zeros_like(u)
    m = u > 0
    out[m] = np.exp(-1.0 / u[m])
    return out


def _dE(u):
    out = np.zeros_like(u)
    m = u > 0
    out[m] = np.exp(-1.0 / u[m]) / u[m] ** 2
    return out


def smooth_step(u):
    """s(u) = E(u) / (E(u) + E(1 - u)), E(u) = exp(-1/u) for u > 0, else 0."""
    u = np.asarray(u, dtype=float)
    a, b = _E(u), _E(1 - u)
    return a / (a + b)


def smooth_step_derivative(u):
    u = np.asarray(u, dtype=float)
    a, b = _E(u), _E(1 - u)
    da, db = _dE(u), _dE(1 - u)
    return (da * b + a * db) / (a + b) ** 2


@dataclass(frozen=True)
class BumpFunction:
    """Tensor product of smooth steps: 1 on `inner`, 0 outside `outer`.

    Boxes are arrays of shape (dim, 2) holding (lo, hi) per coordinate.
    Points carry a trailing axis of length `dim`.
    """

    inner: np.ndarray
    outer: np.ndarray

    @property
    def dim(self):
        return self.inner.shape[0]

    def _factors(self, y):
        y = np.asarray(y, dtype=float)
        a, b = self.inner[:, 0], self.inner[:, 1]
        A, B = self.outer[:, 0], self.outer[:, 1]
        left = smooth_step((y - A) / (a - A))
        right = smooth_step((B - y) / (B - b))
        return left, right, a, b, A, B

    def value(self, y):
        left, right, *_ = self._factors(y)
        return np.prod(left * right, axis=-1)

    __call__ = value

    def gradient(self, y):
        y = np.asarray(y, dtype=float)
        left, right, a, b, A, B = self._factors(y)
        dl = smooth_step_derivative((y - A) / (a - A)) / (a - A)
        dr = -smooth_step_derivative((B - y) / (B - b)) / (B - b)
        f = left * right
        df = dl * right + left * dr
        out = np.empty(y.shape)
        for i in range(self.dim):
            others = np.prod(np.delete(f, i, axis=-1), axis=-1)
            out[..., i] = df[..., i] * others
        return out

    def scaled(self, c):
        return BumpFunction(self.inner * c, self.outer * c)


def make_bump(inner, outer):
    """Bump equal to 1 on `inner` and supported in `outer`.

    Each box is a (lo, hi) pair (1-d) or a sequence of pairs.
    """
    inner = np.atleast_2d(np.asarray(inner, dtype=float))
    outer = np.atleast_2d(np.asarray(outer, dtype=float))
    if inner.shape != outer.shape or inner.shape[1] != 2:
        raise ValueError("inner and outer must be matching lists of (lo, hi)")
    if not (np.all(outer[:, 0] < inner[:, 0]) and np.all(inner[:, 0] <= inner[:, 1])
            and np.all(inner[:, 1] < outer[:, 1])):
        raise ValueError("inner box must lie strictly inside outer box")
    return BumpFunction(inner, outer)


def symmetric_bump(c, n=1, ratio=0.5):
    """Bump equal to 1 on ratio*c*U and supported in c*U, U = [-1, 1]^n."""
    return make_bump([(-ratio * c, ratio * c)] * n, [(-c, c)] * n)


# --- measure types ---------------------------------------------------------------


@dataclass
class ParticleMeasure:
    """Finite weighted atom list.  `params` optionally stores chart parameters."""

    positions: np.ndarray
    weights: np.ndarray
    params: np.ndarray = None
    raw_mass: float = None

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.params is not None:
            self.params = np.atleast_2d(np.asarray(self.params, dtype=float))
        if len(self.weights) != len(self.positions):
            raise ValueError("positions and weights differ in length")
        if np.any(self.weights < 0):
            raise ValueError("negative weights")

    @property
    def ambient_dim(self):
        return self.positions.shape[1]

    @property
    def size(self):
        return len(self.weights)

    @property
    def total_mass(self):
        from ._kernels import pairwise_sum
        return float(pairwise_sum(self.weights))

    def normalized(self):
        m = self.total_mass
        if m <= 0:
            raise ZeroMass("cannot normalise a zero-mass measure")
        return replace(self, weights=self.weights / m, raw_mass=m)

    def phase_terms(self, xi):
        xi = np.asarray(xi, dtype=float)
        A = self.positions @ xi
        return A, np.zeros_like(A), self.weights, _ONE, _ONE

    def diameter(self):
        p = self.positions
        return float(np.linalg.norm(p.max(axis=0) - p.min(axis=0))) if self.size else 0.0


@dataclass
class ChartMeasure:
    """Product measure pushed through a chart.

    kind "surface": atoms pts_j (no h factor).
    kind "cone":    atoms h_l (pts_j, 1).
    kind "cylinder": atoms (pts_j, h_l).
    `x` holds the chart parameters of pts (optional), `phi` the chart.
    """

    kind: str
    pts: np.ndarray
    wx: np.ndarray
    h: np.ndarray = field(default_factory=lambda: _ONE.copy())
    wh: np.ndarray = field(default_factory=lambda: _ONE.copy())
    x: np.ndarray = None
    phi: object = None
    raw_mass: float = None

    @property
    def ambient_dim(self):
        return self.pts.shape[1] + (0 if self.kind == "surface" else 1)

    @property
    def size(self):
        return len(self.wx) * len(self.wh)

    @property
    def total_mass(self):
        return float(np.sum(self.wx) * np.sum(self.wh))

    def normalized(self):
        mx, mh = np.sum(self.wx), np.sum(self.wh)
        if mx * mh <= 0:
            raise ZeroMass("cannot normalise a zero-mass measure")
        return replace(self, wx=self.wx / mx, wh=self.wh / mh, raw_mass=float(mx * mh))

    def phase_terms(self, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.ambient_dim,):
            from .errors import DimensionMismatch
            raise DimensionMismatch(f"xi has shape {xi.shape}, measure lives in R^{self.ambient_dim}")
        if self.kind == "surface":
            A = self.pts @ xi
            return A, np.zeros_like(A), self.wx, _ONE, _ONE
        if self.kind == "cone":
            A = self.pts @ xi[:-1] + xi[-1]
            return A, np.zeros_like(A), self.wx, self.h, self.wh
        B = self.pts @ xi[:-1]
        return np.full_like(B, xi[-1]), B, self.wx, self.h, self.wh

    def materialize(self, cap=MEMORY_CAP):
        if self.size > cap:
            raise MemoryCapExceeded(f"{self.size} atoms exceed the cap {cap}")
        if self.kind == "surface":
            return ParticleMeasure(self.pts, self.wx * self.wh[0], self.x, self.raw_mass)
        nx, nh = len(self.wx), len(self.wh)
        P = np.repeat(self.pts, nh, axis=0)
        H = np.tile(self.h, nx)
        W = np.repeat(self.wx, nh) * np.tile(self.wh, nx)
        if self.kind == "cone":
            pos = H[:, None] * np.concatenate([P, np.ones((len(P), 1))], axis=1)
        else:
            pos = np.concatenate([P, H[:, None]], axis=1)
        params = None
        if self.x is not None:
            params = np.concatenate([np.repeat(self.x, nh, axis=0), H[:, None]], axis=1)
        return ParticleMeasure(pos, W, params, self.raw_mass)

    @property
    def positions(self):
        return self.materialize().positions

    @property
    def weights(self):
        return self.materialize().weights

    @property
    def params(self):
        return self.materialize().params

    def diameter(self):
        p = self.pts
        ext = np.linalg.norm(p.max(axis=0) - p.min(axis=0))
        if self.kind == "surface":
            return float(ext)
        hmax = np.max(np.abs(self.h))
        if self.kind == "cone":
            return float(hmax * ext + np.ptp(self.h) * (1 + np.max(np.linalg.norm(p, axis=1))))
        return float(np.hypot(ext, np.ptp(self.h)))


# --- constructions ------------------------------------------------------------------


def _param_rule(box, density, nodes_per_dim):
    """Tensor Gauss-Legendre rule on a box with density-scaled weights."""
    box = np.atleast_2d(np.asarray(box, dtype=float))
    if np.any(box[:, 1] <= box[:, 0]):
        raise EmptySupport("parameter box has empty interior")
    if np.ndim(nodes_per_dim) == 0:
        nodes_per_dim = [nodes_per_dim] * len(box)
    rules = [quadrature.composite_nodes(lo, hi, n) for (lo, hi), n in zip(box, nodes_per_dim)]
    pts, w = quadrature.tensor(rules)
    if density is not None:
        w = w * density(pts)
    keep = w > 0
    if not np.any(keep):
        raise EmptySupport("density vanishes on every node")
    return pts[keep], w[keep]


def surface_measure(chart, param_box, density=None, nodes_per_dim=16):
    """Probability measure sum_j w_j rho(x_j) delta_{chart(x_j)} on a GL tensor grid."""
    if np.min(nodes_per_dim) < 4:
        raise ValueError("need at least 4 nodes per dimension")
    x, w = _param_rule(param_box, density, nodes_per_dim)
    return ParticleMeasure(chart(x), w, x).normalized()


def graph_measure(phi, x_box, x_density, x_nodes):
    """mu^(S) on a chart phi: x -> R^d, in factored form."""
    x, w = _param_rule(x_box, x_density, x_nodes)
    return ChartMeasure("surface", np.asarray(phi(x)), w, x=x, phi=phi).normalized()


def _h_rule(psi_h, nodes_h, h_box=(1.0, 2.0)):
    h, wh = _param_rule([h_box], psi_h, nodes_h)
    return h[:, 0], wh


def chart_measure(kind, phi, x_box, x_density, x_nodes, psi_h, h_nodes, h_box=(1.0, 2.0)):
    """Probability measure on C' (kind "cone") or D' (kind "cylinder")."""
    x, w = _param_rule(x_box, x_density, x_nodes)
    h, wh = _h_rule(psi_h, h_nodes, h_box)
    return ChartMeasure(kind, np.asarray(phi(x)), w, h, wh, x=x, phi=phi).normalized()


def _surface_factor(mu_S):
    if isinstance(mu_S, ChartMeasure):
        if mu_S.kind != "surface":
            raise ValueError("expected a measure on S")
        return mu_S.pts, mu_S.wx, mu_S.x, mu_S.phi
    return mu_S.positions, mu_S.weights, mu_S.params, None


def cone_lower_measure(mu_S, psi_h, nodes_h, h_box=(1.0, 2.0)):
    """Atoms h_i (y_j, 1) with weights w_i psi(h_i) w_j; probability-normalised."""
    pts, w, x, phi = _surface_factor(mu_S)
    h, wh = _h_rule(psi_h, nodes_h, h_box)
    return ChartMeasure("cone", pts, w, h, wh, x=x, phi=phi).normalized()


def cylinder_lower_measure(mu_S, psi_h, nodes_h, h_box=(1.0, 2.0)):
    """Product atoms (y_j, h_i); probability-normalised."""
    pts, w, x, phi = _surface_factor(mu_S)
    h, wh = _h_rule(psi_h, nodes_h, h_box)
    return ChartMeasure("cylinder", pts, w, h, wh, x=x, phi=phi).normalized()


def mollify(mu0, f):
    """Multiply weights by f(atom position) and renormalise.

    The mass before renormalisation is kept in `raw_mass`.
    """
    if isinstance(mu0, ChartMeasure):
        mu0 = mu0.materialize()
    fv = np.asarray(f(mu0.positions), dtype=float)
    if np.any(fv < 0):
        raise ValueError("mollifier must be non-negative")
    w = mu0.weights * fv
    if not np.any(w > 0):
        raise ZeroMass("mollifier vanishes on the support")
    return ParticleMeasure(mu0.positions, w, mu0.params).normalized()


# --- push-forward and averaging ---------------------------------------------------------


def _check_params(family, x):
    if family.closed_form:
        return
    if np.any(np.abs(x) > family.c * (1 + 1e-12)):
        raise DomainError("atom parameter outside the validated box of the family")


def pushforward(family, t, mu):
    """Move each atom Phi(x, h) to Phi(T_t(x), h); weights unchanged."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = family.n
    if isinstance(mu, ChartMeasure):
        if mu.x is None:
            raise ValueError("measure lacks chart parameters")
        _check_params(family, mu.x)
        xt = family.T(t, mu.x)
        return replace(mu, pts=np.asarray(family.phi(xt)), x=xt, phi=family.phi)
    if mu.params is None:
        raise ValueError("measure lacks chart parameters")
    x, h = mu.params[:, :n], mu.params[:, n]
    _check_params(family, x)
    xt = family.T(t, x)
    p = np.asarray(family.phi(xt))
    if family.kind == "cone":
        pos = h[:, None] * np.concatenate([p, np.ones((len(p), 1))], axis=1)
    else:
        pos = np.concatenate([p, h[:, None]], axis=1)
    return ParticleMeasure(pos, mu.weights.copy(), np.concatenate([xt, h[:, None]], axis=1), mu.raw_mass)


def t_rule(psi_t, t_nodes):
    """Gauss-Legendre nodes on spt psi_t with weights v_i psi_t(t_i)."""
    t, v = _param_rule(psi_t.outer, psi_t, t_nodes)
    return t, v


def average(family, mu, psi_t, t_nodes, cap=MEMORY_CAP):
    """Materialised nu = sum_i v_i psi(t_i) (T_{t_i})_* mu (not renormalised)."""
    t, v = t_rule(psi_t, t_nodes)
    if len(t) * mu.size > cap:
        raise MemoryCapExceeded(f"{len(t) * mu.size} atoms exceed the cap {cap}")
    parts = [pushforward(family, ti, mu) for ti in t]
    parts = [p.materialize() if isinstance(p, ChartMeasure) else p for p in parts]
    pos = np.concatenate([p.positions for p in parts])
    W = np.concatenate([vi * p.weights for vi, p in zip(v, parts)])
    params = np.concatenate([p.params for p in parts])
    return ParticleMeasure(pos, W, params)


@dataclass
class AveragedMeasure:
    """Lazy form of `average`: the push-forwards are generated one t-node at a time.

    Fourier sums over this object equal those of the materialised measure
    term by term, since the atom set is the same disjoint union.
    """

    family: object
    mu: ChartMeasure
    t: np.ndarray
    v: np.ndarray

    @classmethod
    def build(cls, family, mu, psi_t, t_nodes):
        t, v = t_rule(psi_t, t_nodes)
        if mu.x is None:
            raise ValueError("measure lacks chart parameters")
        _check_params(family, mu.x)
        return cls(family, mu, t, v)

    @property
    def ambient_dim(self):
        return self.mu.ambient_dim

    @property
    def size(self):
        return len(self.t) * self.mu.size

    @property
    def total_mass(self):
        return float(self.mu.total_mass * np.sum(self.v))

    def components(self):
        """Yield (v_i psi(t_i), nu_{t_i}) pairs."""
        for ti, vi in zip(self.t, self.v):
            yield vi, pushforward(self.family, ti, self.mu)

    def phase_term_chunks(self, xi):
        for vi, part in self.components():
            A, B, W, hv, hw = part.phase_terms(xi)
            yield A, B, vi * W, hv, hw

    def materialize(self, cap=MEMORY_CAP):
        if self.size > cap:
            raise MemoryCapExceeded(f"{self.size} atoms exceed the cap {cap}")
        parts = [(vi, p.materialize()) for vi, p in self.components()]
        return ParticleMeasure(
            np.concatenate([p.positions for _, p in parts]),
            np.concatenate([vi * p.weights for vi, p in parts]),
            np.concatenate([p.params for _, p in parts]),
        )

    def diameter(self):
        # extreme and middle t-nodes; the guard only needs the order of magnitude
        idx = sorted({0, len(self.t) // 2, len(self.t) - 1})
        return max(pushforward(self.family, self.t[i], self.mu).diameter() for i in idx)


# --- binary atom files -----------------------------------------------------------


def save_atoms(measure, path):
    """Little-endian: u32 dim, u64 count, then per atom dim f64 position, f64 weight, params."""
    if not isinstance(measure, ParticleMeasure):
        measure = measure.materialize()
    pos, w = measure.positions, measure.weights
    params = measure.params if measure.params is not None else np.zeros((len(w), 0))
    rec = np.concatenate([pos, w[:, None], params], axis=1).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<IQ", pos.shape[1], len(w)))
        fh.write(rec.tobytes())


def load_atoms(path):
    with open(path, "rb") as fh:
        dim, count = struct.unpack("<IQ", fh.read(12))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if count == 0:
        return ParticleMeasure(np.zeros((0, dim)), np.zeros(0))
    width = data.size // count
    if width * count != data.size or width < dim + 1:
        raise ValueError("corrupt atom file")
    rec = data.reshape(count, width).astype(float)
    params = rec[:, dim + 1:] if width > dim + 1 else None
    return ParticleMeasure(rec[:, :dim], rec[:, dim], params)
