"""Constructive Morse normal form for families f(x, t) with f(0, t) = 0, grad_x f(0, t) = 0.

The chart is built by completing the square on the integral Taylor remainder

    f(x, t) = sum_jk x_j x_k F_jk(x, t),   F = int_0^1 (1 - s) H_x f(s x, t) ds,

after rotating x into the eigenbasis of H_x f(0, t). Supported for n <= 2.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BoxTooLarge, DegenerateCritical, NotCritical, QuadratureFailure
from .quadrature import gauss_legendre
from .surfaces import (
    GRAD_STEP,
    QuadraticSignature,
    VectorMap,
    fd_hessian,
    quadratic_form,
)

MAX_SHRINK = 20
REMAINDER_NODES = 16


@dataclass(frozen=True)
class ParametricField:
    """f(x, t) with x in R^n and parameters t in R^p (p may be 0).

    `hess_x(x, t)` returns the x-Hessian with shape (..., n, n).
    """

    n: int
    p: int
    func: object
    hess_x: object = None
    grad_x: object = None

    @classmethod
    def from_scalar(cls, g):
        grad = None if g.grad is None else (lambda x, t: g.grad(x))
        hess = None if g.hess is None else (lambda x, t: g.hess(x))
        return cls(g.dim, 0, lambda x, t: g.func(x), hess, grad)

    def _bcast(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.zeros(self.p) if t is None else np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], t.shape[:-1])
        return (np.broadcast_to(x, shape + (self.n,)),
                np.broadcast_to(t, shape + (self.p,)))

    def value(self, x, t=None):
        x, t = self._bcast(x, t)
        return self.func(x, t)

    def gradient(self, x, t=None):
        x, t = self._bcast(x, t)
        if self.grad_x is not None:
            return self.grad_x(x, t)
        out = np.empty(x.shape)
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = GRAD_STEP
            out[..., j] = (self.func(x + e, t) - self.func(x - e, t)) / (2 * GRAD_STEP)
        return out

    def hessian(self, x, t=None):
        x, t = self._bcast(x, t)
        if self.hess_x is not None:
            return np.broadcast_to(self.hess_x(x, t), x.shape + (self.n,))
        return fd_hessian(lambda z: self.func(z, t), x)


def signature_at(f, t=None, grad_tol=1e-8, det_tol=1e-10):
    """Signature of the critical point x = 0 of f(., t)."""
    z = np.zeros(f.n)
    g = np.asarray(f.gradient(z, t))
    if np.max(np.abs(g)) > grad_tol:
        raise NotCritical(f"|grad f(0,t)| = {np.max(np.abs(g)):.3e} > {grad_tol}")
    h = np.asarray(f.hessian(z, t))
    det = np.linalg.det(h)
    if abs(det) < det_tol:
        raise DegenerateCritical(f"|det H f(0,t)| = {abs(det):.3e} < {det_tol}")
    eig = np.linalg.eigvalsh(0.5 * (h + h.T))
    return QuadraticSignature(f.n, int(np.sum(eig > 0)))


def _ordered_eigh(h):
    """Eigenpairs with descending eigenvalues; first nonzero component of each vector positive."""
    vals, vecs = np.linalg.eigh(0.5 * (h + np.swapaxes(h, -1, -2)))
    vals = vals[..., ::-1]
    vecs = vecs[..., :, ::-1]
    mag = np.abs(vecs)
    first = np.argmax(mag > 1e-12, axis=-2)
    lead = np.take_along_axis(vecs, first[..., None, :], axis=-2)
    vecs = vecs * np.where(lead < 0, -1.0, 1.0)
    return vals, vecs


@dataclass(frozen=True)
class MorseChart:
    """tau(x, t) with f(x, t) = Q_m(tau(x, t)) on the box |x_i| <= V, |t_i| <= W."""

    field: ParametricField
    sig: QuadraticSignature
    V: float
    W: float
    jac_det_at_0: float
    shrinks: int = 0

    def _remainder(self, y, t):
        """Rotation O(t) and rotated remainder matrix F~(y, t) with x = O y."""
        n = self.field.n
        h0 = self.field.hessian(np.zeros(n), t)
        _, O = _ordered_eigh(np.asarray(h0))
        x = np.einsum("...ij,...j->...i", O, y)
        s, ws = gauss_legendre(0.0, 1.0, REMAINDER_NODES)
        acc = 0.0
        for sk, wk in zip(s, ws):
            acc = acc + (wk * (1.0 - sk)) * self.field.hessian(sk * x, t)
        Ft = np.einsum("...ji,...jk,...kl->...il", O, acc, O)
        if not np.all(np.isfinite(Ft)):
            raise QuadratureFailure("non-finite remainder coefficients")
        return Ft

    def tau_rotated(self, y, t=None):
        """Square completion in the rotated variable y = O(t)^T x."""
        y = np.asarray(y, dtype=float)
        Ft = self._remainder(y, t)
        if self.field.n == 1:
            return np.sqrt(np.abs(Ft[..., 0, 0]))[..., None] * y
        a = Ft[..., 0, 0]
        b = 0.5 * (Ft[..., 0, 1] + Ft[..., 1, 0])
        S = Ft[..., 1, 1] - b * b / a
        z1 = np.sqrt(np.abs(a)) * (y[..., 0] + b * y[..., 1] / a)
        z2 = np.sqrt(np.abs(S)) * y[..., 1]
        return np.stack([z1, z2], axis=-1)

    def coefficients(self, x, t=None):
        """Leading coefficients (a, S) of the square completion; their signs must stay fixed."""
        x = np.asarray(x, dtype=float)
        n = self.field.n
        _, O = _ordered_eigh(np.asarray(self.field.hessian(np.zeros(n), t)))
        y = np.einsum("...ji,...j->...i", O, x)
        Ft = self._remainder(y, t)
        if n == 1:
            return Ft[..., 0, 0][..., None]
        a = Ft[..., 0, 0]
        b = 0.5 * (Ft[..., 0, 1] + Ft[..., 1, 0])
        return np.stack([a, Ft[..., 1, 1] - b * b / a], axis=-1)

    def tau(self, x, t=None):
        x = np.asarray(x, dtype=float)
        n = self.field.n
        if t is not None:
            t = np.asarray(t, dtype=float)
        _, O = _ordered_eigh(np.asarray(self.field.hessian(np.zeros(n), t)))
        y = np.einsum("...ji,...j->...i", O, x)
        return self.tau_rotated(y, t)

    def __call__(self, x, t=None):
        return self.tau(x, t)

    def jacobian(self, x, t=None, step=GRAD_STEP):
        """Central-difference x-Jacobian of tau, shape (..., n, n)."""
        x = np.asarray(x, dtype=float)
        n = self.field.n
        cols = []
        for j in range(n):
            e = np.zeros(n)
            e[j] = step
            cols.append((self.tau(x + e, t) - self.tau(x - e, t)) / (2 * step))
        return np.stack(cols, axis=-1)

    def inverse_map(self, newton_steps=50, tol=1e-14):
        """varphi = tau^{-1} (parameter-free charts only), by vectorised Newton."""
        if self.field.p != 0:
            raise ValueError("inverse_map needs a parameter-free chart")
        chart = self

        def inv(x):
            x = np.asarray(x, dtype=float)
            J0 = chart.jacobian(np.zeros(chart.field.n))
            y = np.linalg.solve(J0, x[..., None])[..., 0]
            for _ in range(newton_steps):
                r = chart.tau(y) - x
                J = chart.jacobian(y)
                dy = np.linalg.solve(J, r[..., None])[..., 0]
                y = y - dy
                if np.max(np.abs(dy), initial=0.0) < tol:
                    break
            return y

        def jac(x):
            J = chart.jacobian(inv(x))
            return np.linalg.inv(J)

        return VectorMap(self.field.n, inv, jac)


def _box_samples(n, p, V, W, per_axis=9):
    gx = np.linspace(-V, V, per_axis)
    xs = np.stack(np.meshgrid(*([gx] * n), indexing="ij"), axis=-1).reshape(-1, n)
    if p == 0:
        return xs, None
    gt = np.linspace(-W, W, 5)
    ts = np.stack(np.meshgrid(*([gt] * p), indexing="ij"), axis=-1).reshape(-1, p)
    X = np.repeat(xs, len(ts), axis=0)
    T = np.tile(ts, (len(xs), 1))
    return X, T


def _conditions_hold(chart, V, W):
    f = chart.field
    X, T = _box_samples(f.n, f.p, V, W)
    tz = None if T is None else T
    c = chart.coefficients(X, tz)
    c0 = chart.coefficients(np.zeros_like(X), tz)
    if not (np.all(np.isfinite(c)) and np.all(np.sign(c) == np.sign(c0))):
        return False
    return bool(np.all(np.abs(c) > 1e-12))


def normal_form(f, sig=None, V=0.5, W=0.0, max_shrink=MAX_SHRINK):
    """Build a MorseChart for f on the box |x| <= V, |t| <= W.

    When the sign conditions of the square completion fail on the box, both
    half-widths are halved, at most `max_shrink` times; with max_shrink=0 the
    failure is reported immediately.

    Raises
    ------
    BoxTooLarge
        The conditions still fail after the allowed number of halvings.
    """
    if f.n > 2:
        raise NotImplementedError("normal_form supports n <= 2")
    t0 = np.zeros(f.p) if f.p else None
    found = signature_at(f, t0)
    if sig is None:
        sig = found
    elif sig != found:
        raise DegenerateCritical(f"signature {found} differs from requested {sig}")
    if f.p:
        gt = np.linspace(-W, W, 5)
        grid = np.stack(np.meshgrid(*([gt] * f.p), indexing="ij"), axis=-1).reshape(-1, f.p)
        for t in grid:
            if signature_at(f, t) != sig:
                raise BoxTooLarge("signature changes across the parameter box")
    for k in range(max_shrink + 1):
        chart = MorseChart(f, sig, V, W, 0.0, k)
        if _conditions_hold(chart, V, W):
            det = float(np.linalg.det(chart.jacobian(np.zeros(f.n), t0)))
            return MorseChart(f, sig, V, W, det, k)
        if k == max_shrink:
            break
        V, W = V / 2, W / 2
    raise BoxTooLarge(f"sign conditions fail on |x| <= {V:.3g}, |t| <= {W:.3g}")


@dataclass
class ChartReport:
    max_residual: float
    min_jacdet: float
    jac_hessian_err: float
    det_relation_err: float
    tau_at_zero: float


def verify_chart(chart, f=None, samples=2000, seed=0):
    """Dense-sample residual statistics of f = Q_m(tau) on the chart box."""
    f = chart.field if f is None else f
    rng = np.random.default_rng(seed)
    X = rng.uniform(-chart.V, chart.V, size=(samples, f.n))
    T = rng.uniform(-chart.W, chart.W, size=(samples, f.p)) if f.p else None
    fv = f.value(X, T)
    res = np.abs(fv - quadratic_form(chart.sig, chart.tau(X, T))) / (1 + np.abs(fv))
    dets = np.abs(np.linalg.det(chart.jacobian(X, T)))

    # J tau(0,t)^T H Q_m(0) J tau(0,t) = H_x f(0,t); |det J tau(0,t)|^2 = |det H| / 2^n
    A = chart.sig.hessian
    ts = [None] if not f.p else list(T[:16])
    jh, dr, t0 = 0.0, 0.0, 0.0
    for t in ts:
        J = chart.jacobian(np.zeros(f.n), t)
        H = np.asarray(f.hessian(np.zeros(f.n), t))
        jh = max(jh, np.max(np.abs(J.T @ A @ J - H)) / np.max(np.abs(H)))
        target = abs(np.linalg.det(H)) / 2**f.n
        dr = max(dr, abs(np.linalg.det(J) ** 2 - target) / target)
        t0 = max(t0, float(np.max(np.abs(chart.tau(np.zeros(f.n), t)))))
    return ChartReport(float(np.max(res)), float(np.min(dets)), float(jh), float(dr), t0)
