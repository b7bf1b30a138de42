"""Graph hypersurfaces, cone and cylinder charts, curvature.

Every evaluator is vectorised over leading axes: a point array of shape
(..., n) maps to values (...), gradients (..., n) and Hessians (..., n, n).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCritical, DimensionMismatch, DomainError

GRAD_STEP = 1e-6
HESS_STEP = 1e-5


def fd_gradient(f, y, step=GRAD_STEP):
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    out = np.empty(y.shape)
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        out[..., j] = (f(y + e) - f(y - e)) / (2 * step)
    return out


def fd_hessian(f, y, step=HESS_STEP):
    """Central-difference Hessian; symmetric by construction."""
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    out = np.empty(y.shape + (n,))
    f0 = f(y)
    for j in range(n):
        ej = np.zeros(n)
        ej[j] = step
        out[..., j, j] = (f(y + ej) - 2 * f0 + f(y - ej)) / step**2
        for k in range(j + 1, n):
            ek = np.zeros(n)
            ek[k] = step
            v = (f(y + ej + ek) - f(y + ej - ek) - f(y - ej + ek) + f(y - ej - ek)) / (4 * step**2)
            out[..., j, k] = v
            out[..., k, j] = v
    return out


@dataclass(frozen=True)
class ScalarField:
    """Smooth real function on an open box, with derivative evaluators.

    `grad` and `hess` are optional analytic callables; when missing,
    central differences are used.
    """

    dim: int
    lo: tuple
    hi: tuple
    func: object
    grad: object = None
    hess: object = None
    name: str = ""

    def _check(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[-1:] != (self.dim,):
            raise DimensionMismatch(f"expected points in R^{self.dim}, got shape {y.shape}")
        return y

    def contains(self, y):
        y = np.asarray(y, dtype=float)
        return np.all((y > np.asarray(self.lo)) & (y < np.asarray(self.hi)), axis=-1)

    def value(self, y):
        return self.func(self._check(y))

    def gradient(self, y):
        y = self._check(y)
        if self.grad is not None:
            return self.grad(y)
        return fd_gradient(self.func, y)

    def hessian(self, y):
        y = self._check(y)
        if self.hess is not None:
            return self.hess(y)
        return fd_hessian(self.func, y)

    def finite_difference(self):
        """Same field with the analytic derivatives dropped."""
        return ScalarField(self.dim, self.lo, self.hi, self.func, name=self.name + "[fd]")


@dataclass(frozen=True)
class QuadraticSignature:
    n: int
    m: int

    def __post_init__(self):
        if not 0 <= self.m <= self.n:
            raise ValueError(f"need 0 <= m <= n, got n={self.n}, m={self.m}")

    @property
    def signs(self):
        return np.array([1.0] * self.m + [-1.0] * (self.n - self.m))

    @property
    def hessian(self):
        """H Q_m(0) = diag(+2 (m times), -2 (n-m times))."""
        return np.diag(2.0 * self.signs)


def quadratic_form(sig, y):
    """Q_m(y): sum of the first m squares minus the remaining ones."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1:] != (sig.n,):
        raise DimensionMismatch(f"Q_m expects R^{sig.n}, got shape {y.shape}")
    return np.sum(sig.signs * y * y, axis=-1)


def signature_of(hessian, tol=1e-10):
    h = np.asarray(hessian, dtype=float)
    if abs(np.linalg.det(h)) < tol:
        raise DegenerateCritical(f"|det H| = {abs(np.linalg.det(h)):.3e} < {tol}")
    eig = np.linalg.eigvalsh(0.5 * (h + h.T))
    return QuadraticSignature(h.shape[0], int(np.sum(eig > 0)))


@dataclass(frozen=True)
class GraphSurface:
    """S = {(y, g(y)) : y in V}, normalised so that g(0) = 0 and grad g(0) = 0."""

    g: ScalarField
    name: str = ""

    @property
    def n(self):
        return self.g.dim

    @property
    def ambient_dim(self):
        return self.g.dim + 1

    def is_normalized(self, tol=1e-8):
        z = np.zeros(self.n)
        return abs(float(self.g.value(z))) <= tol and np.max(np.abs(self.g.gradient(z))) <= tol

    def phi(self, y):
        """Graph chart y -> (y, g(y))."""
        y = np.asarray(y, dtype=float)
        return np.concatenate([y, self.g.value(y)[..., None]], axis=-1)


def curvature(surface, y=None):
    """Principal curvatures (Hessian eigenvalues, descending) and their product."""
    if y is None:
        y = np.zeros(surface.n)
    h = np.asarray(surface.g.hessian(np.asarray(y, dtype=float)))
    if not np.all(np.isfinite(h)):
        raise np.linalg.LinAlgError("non-finite Hessian")
    principal = np.sort(np.linalg.eigvalsh(0.5 * (h + h.T)))[::-1]
    return principal, float(np.prod(principal))


def cone_chart(phi, x, h):
    """Phi(x, h) = h * (phi(x), 1)."""
    p = np.asarray(phi(x), dtype=float)
    h = np.asarray(h, dtype=float)
    ones = np.ones(p.shape[:-1] + (1,))
    return h[..., None] * np.concatenate([p, ones], axis=-1)


def cylinder_chart(phi, x, h):
    """Phi~(x, h) = (phi(x), h)."""
    p = np.asarray(phi(x), dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), p.shape[:-1])
    return np.concatenate([p, h[..., None]], axis=-1)


# --- vector maps (the varphi of a Morse reparametrisation) -------------------


@dataclass(frozen=True)
class VectorMap:
    """Smooth map R^n -> R^n with Jacobian and (optional) second derivatives.

    `hess(y)` returns shape (..., n, n, n) with [..., i, j, k] = d^2 f_i / dy_j dy_k.
    """

    n: int
    func: object
    jac: object = None
    hess: object = None
    is_identity: bool = False
    lo: tuple = None
    hi: tuple = None

    def __call__(self, y):
        return self.func(np.asarray(y, dtype=float))

    def jacobian(self, y):
        y = np.asarray(y, dtype=float)
        if self.jac is not None:
            return self.jac(y)
        out = np.empty(y.shape + (self.n,))
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = GRAD_STEP
            out[..., :, j] = (self.func(y + e) - self.func(y - e)) / (2 * GRAD_STEP)
        return out

    def second(self, y):
        y = np.asarray(y, dtype=float)
        if self.hess is not None:
            return self.hess(y)
        out = np.empty(y.shape + (self.n, self.n))
        for i in range(self.n):
            out[..., i, :, :] = fd_hessian(lambda z, i=i: self.func(z)[..., i], y)
        return out


def identity_map(n):
    return VectorMap(
        n,
        lambda y: np.array(y, dtype=float),
        lambda y: np.broadcast_to(np.eye(n), np.shape(y) + (n,)).copy(),
        lambda y: np.zeros(np.shape(y) + (n, n)),
        is_identity=True,
    )


@dataclass(frozen=True)
class MorseParametrization:
    """phi(x) = (varphi(x), Q_m(x)) reparametrising a graph surface."""

    varphi: VectorMap
    sig: QuadraticSignature
    chart: object = None

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return np.concatenate([self.varphi(x), quadratic_form(self.sig, x)[..., None]], axis=-1)


def morse_parametrize(surface, box=None):
    """Reparametrise a normalised graph so its height coordinate is exactly Q_m.

    Returns a MorseParametrization whose varphi satisfies g(varphi(x)) = Q_m(x).
    """
    from . import morse

    n = surface.n
    z = np.zeros(n)
    sig = signature_of(surface.g.hessian(z))
    if box is None:
        box = 0.5 * min(min(abs(a) for a in surface.g.lo), min(abs(b) for b in surface.g.hi))
    # already in normal form: keep the exact identity
    probe = np.random.default_rng(0).uniform(-box, box, size=(256, n))
    if np.max(np.abs(surface.g.value(probe) - quadratic_form(sig, probe))) <= 1e-14:
        return MorseParametrization(identity_map(n), sig)
    fam = morse.ParametricField.from_scalar(surface.g)
    chart = morse.normal_form(fam, sig=sig, V=box, W=0.0)
    varphi = chart.inverse_map()
    return MorseParametrization(varphi, sig, chart)


# --- catalog ----------------------------------------------------------------


def _parabola():
    return ScalarField(
        1, (-1.0,), (1.0,),
        lambda y: y[..., 0] ** 2,
        lambda y: 2 * y,
        lambda y: np.full(y.shape + (1,), 2.0),
        name="parabola",
    )


def _perturbed_parabola():
    return ScalarField(
        1, (-0.5,), (0.5,),
        lambda y: y[..., 0] ** 2 + y[..., 0] ** 3,
        lambda y: 2 * y + 3 * y**2,
        lambda y: (2 + 6 * y)[..., None],
        name="perturbed_parabola",
    )


def _diag2(a, b):
    def hess(y):
        out = np.zeros(y.shape + (2,))
        out[..., 0, 0] = a
        out[..., 1, 1] = b
        return out
    return hess


def _saddle():
    return ScalarField(
        2, (-1.0, -1.0), (1.0, 1.0),
        lambda y: y[..., 0] ** 2 - y[..., 1] ** 2,
        lambda y: np.stack([2 * y[..., 0], -2 * y[..., 1]], axis=-1),
        _diag2(2.0, -2.0),
        name="saddle",
    )


def _paraboloid():
    # elliptic, not rotationally symmetric
    return ScalarField(
        2, (-1.0, -1.0), (1.0, 1.0),
        lambda y: y[..., 0] ** 2 + 2 * y[..., 1] ** 2,
        lambda y: np.stack([2 * y[..., 0], 4 * y[..., 1]], axis=-1),
        _diag2(2.0, 4.0),
        name="paraboloid",
    )


def _sphere_cap():
    def f(y):
        return 1.0 - np.sqrt(1.0 - np.sum(y * y, axis=-1))

    def grad(y):
        r = np.sqrt(1.0 - np.sum(y * y, axis=-1))
        return y / r[..., None]

    def hess(y):
        r = np.sqrt(1.0 - np.sum(y * y, axis=-1))[..., None, None]
        return np.eye(2) / r + y[..., :, None] * y[..., None, :] / r**3

    return ScalarField(2, (-0.7, -0.7), (0.7, 0.7), f, grad, hess, name="sphere_cap")


CATALOG = {
    "parabola": _parabola,
    "perturbed_parabola": _perturbed_parabola,
    "saddle": _saddle,
    "paraboloid": _paraboloid,
    "sphere_cap": _sphere_cap,
}


def catalog_surface(name):
    try:
        return GraphSurface(CATALOG[name](), name)
    except KeyError:
        raise KeyError(f"unknown surface {name!r}; choose from {sorted(CATALOG)}") from None


def check_domain(field_or_map, y):
    lo, hi = field_or_map.lo, field_or_map.hi
    if lo is None:
        return
    y = np.asarray(y, dtype=float)
    if np.any(y <= np.asarray(lo)) or np.any(y >= np.asarray(hi)):
        raise DomainError("point outside chart domain")
