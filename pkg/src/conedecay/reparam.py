"""Re-parametrisation families T_t and dual vectors eta(t).

A cone family satisfies  Q_m(T_t(x)) = (phi(x), 1) . eta(t)  and a cylinder
family satisfies  Q_m(T_t(x)) = (phi(x), h) . eta~(t) + rho~(t)  for every h.

Arrays follow the package convention: parameters x, t carry a trailing
axis of length n.  Closed-form catalog helpers (n = 1) also accept scalars.
"""

from dataclasses import dataclass, field

import numpy as np

from . import morse
from .errors import (
    BoxTooLarge,
    DegenerateCritical,
    NegativeRadicand,
    NotCritical,
    ShrinkExhausted,
    SingularJacobian,
)
from .surfaces import (
    QuadraticSignature,
    VectorMap,
    catalog_surface,
    identity_map,
    morse_parametrize,
    quadratic_form,
)

SINGULAR_DET = 1e-12
I2 = 0.2  # half-width of the closed-form perturbed-parabola domain


# --- closed forms ----------------------------------------------------------


def eta_parabola(t):
    """(-2t, 1, t^2)."""
    t = np.asarray(t, dtype=float)
    return np.stack([-2 * t, np.ones_like(t), t * t], axis=-1)


def T_shift(t, x):
    return np.asarray(x, dtype=float) - np.asarray(t, dtype=float)


def eta_perturbed(t):
    """eta for the chart (x + x^3, x^2)."""
    t = np.asarray(t, dtype=float)
    q = 1 + 3 * t * t
    return np.stack([-2 * t / q, np.ones_like(t), 2 * t * (t + t**3) / q - t * t], axis=-1)


def T_perturbed(t, x):
    """(x - t) sqrt(R / (1 + 3t^2)),  R = 1 - 3x^2 + 4x(x - t) - (x - t)^2."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    d = x - t
    R = 1 - 3 * x * x + 4 * x * d - d * d
    if np.any(R <= 0):
        raise NegativeRadicand(f"radicand min {np.min(R):.3g} <= 0; shrink the domain")
    return d * np.sqrt(R / (1 + 3 * t * t))


def eta_cylinder_parabola(t):
    """(eta~, rho~) = ((-2t, 1, 0), t^2)."""
    t = np.asarray(t, dtype=float)
    et = np.stack([-2 * t, np.ones_like(t), np.zeros_like(t)], axis=-1)
    return et, t * t


def split_eta_for_cylinder(eta):
    """(eta', rho) -> ((eta', 0), rho)."""
    eta = np.asarray(eta, dtype=float)
    et = eta.copy()
    et[..., -1] = 0.0
    return et, eta[..., -1].copy()


def varphi_cubic():
    """varphi(t) = t + t^3 on R."""
    return VectorMap(
        1,
        lambda y: y + y**3,
        lambda y: (1 + 3 * y * y)[..., None],
        lambda y: (6 * y)[..., None, None],
    )


# --- general construction ----------------------------------------------------


def _b(varphi, sig, t):
    """[J varphi(t)]^{-T} A_m t, vectorised over t."""
    t = np.asarray(t, dtype=float)
    J = np.asarray(varphi.jacobian(t))
    det = np.linalg.det(J)
    if np.any(np.abs(det) < SINGULAR_DET):
        raise SingularJacobian(f"|det J varphi| = {np.min(np.abs(det)):.3e}")
    At = t * (2.0 * sig.signs)
    return np.linalg.solve(np.swapaxes(J, -1, -2), At[..., None])[..., 0]


def eta_general(varphi, sig, t):
    """(-b, 1, varphi(t).b - Q_m(t)) with b = [J varphi(t)]^{-T} A_m t."""
    t = np.asarray(t, dtype=float)
    b = _b(varphi, sig, t)
    last = np.sum(varphi(t) * b, axis=-1) - quadratic_form(sig, t)
    return np.concatenate([-b, np.ones(b.shape[:-1] + (1,)), last[..., None]], axis=-1)


def F_eval(varphi, sig, x, t):
    """(varphi(t) - varphi(x)) . b(t) + Q_m(x) - Q_m(t)."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    b = _b(varphi, sig, t)
    return np.sum((varphi(t) - varphi(x)) * b, axis=-1) + quadratic_form(sig, x) - quadratic_form(sig, t)


def G_field(varphi, sig):
    """G(x, t) = F(x + t, t) with its analytic x-Hessian A_m - sum_i b_i H varphi_i(x + t)."""
    A = sig.hessian

    def func(x, t):
        return F_eval(varphi, sig, x + t, t)

    def hess(x, t):
        b = _b(varphi, sig, t)
        if varphi.is_identity:
            return np.broadcast_to(A, np.broadcast_shapes(x.shape, t.shape) + (sig.n,))
        H = np.asarray(varphi.second(x + t))
        return A - np.einsum("...i,...ijk->...jk", b, H)

    return morse.ParametricField(sig.n, sig.n, func, hess)


# --- families ----------------------------------------------------------------


@dataclass(frozen=True)
class ReparamFamily:
    """Bundle (phi, eta, T, F) for a cone or cylinder over a graph surface.

    `T(t, x)` takes a single t of shape (n,) and x of shape (..., n).
    """

    name: str
    kind: str
    sig: QuadraticSignature
    c: float
    phi: object
    eta: object
    T: object
    chart: object = None
    closed_form: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.sig.n

    @property
    def d(self):
        return self.sig.n + 1

    def F(self, x, t):
        """(phi(x), 1) . eta(t)."""
        p = self.phi(x)
        e = self.eta(t)
        return np.sum(p * e[..., :-1], axis=-1) + e[..., -1]

    def eta_tilde(self, t):
        return split_eta_for_cylinder(self.eta(t))[0]

    def rho(self, t):
        return split_eta_for_cylinder(self.eta(t))[1]

    def height(self, t, x):
        """Q_m(T_t(x))."""
        return quadratic_form(self.sig, self.T(t, x))

    def identity_residual(self, x, t, h=1.0):
        """|Q_m(T_t(x)) - linear functional| at matched samples of x and t."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        lhs = np.array([self.height(ti, xi[None])[0] for xi, ti in zip(x, t)])
        if self.kind == "cone":
            rhs = self.F(x, t)
        else:
            p = self.phi(x)
            et, rho = split_eta_for_cylinder(self.eta(t))
            amb = np.concatenate([p, np.full(p.shape[:-1] + (1,), h)], axis=-1)
            rhs = np.sum(amb * et, axis=-1) + rho
        return np.abs(lhs - rhs)


def _as_vec(fn):
    """Lift a scalar closed form to the (..., 1) array convention."""
    return lambda t, x: fn(np.asarray(t)[..., 0], np.asarray(x)[..., 0])[..., None]


def _phi_graph(varphi, sig):
    return lambda x: np.concatenate(
        [varphi(np.asarray(x, dtype=float)), quadratic_form(sig, np.asarray(x, dtype=float))[..., None]], axis=-1
    )


def cone_parabola(c=0.4):
    sig = QuadraticSignature(1, 1)
    return ReparamFamily(
        "cone_parabola", "cone", sig, c,
        phi=lambda x: np.concatenate([x, x * x], axis=-1),
        eta=lambda t: eta_parabola(np.asarray(t)[..., 0]),
        T=T_shift,
    )


def cone_perturbed(c=I2):
    sig = QuadraticSignature(1, 1)
    return ReparamFamily(
        "cone_perturbed", "cone", sig, c,
        phi=lambda x: np.concatenate([x + x**3, x * x], axis=-1),
        eta=lambda t: eta_perturbed(np.asarray(t)[..., 0]),
        T=_as_vec(T_perturbed),
    )


def cyl_parabola(c=0.4):
    sig = QuadraticSignature(1, 1)

    def eta(t):
        # stored in cone layout (eta', rho~) so split_eta_for_cylinder recovers both
        t = np.asarray(t)[..., 0]
        et, rho = eta_cylinder_parabola(t)
        et[..., -1] = rho
        return et

    return ReparamFamily(
        "cyl_parabola", "cylinder", sig, c,
        phi=lambda x: np.concatenate([x, x * x], axis=-1),
        eta=eta,
        T=T_shift,
    )


def build_T_general(varphi, sig, c=0.5, kind="cone", max_shrink=morse.MAX_SHRINK, name=None):
    """Morse-built family T_t(x) = tau(x - t, t) for G(x, t) = F(x + t, t).

    The half-width c is halved until the Morse conditions hold on
    |x| <= 2c, |t| <= c and varphi is defined on the 3c box.

    Raises
    ------
    ShrinkExhausted
        No admissible c after `max_shrink` halvings.
    """
    G = G_field(varphi, sig)
    last = None
    for _ in range(max_shrink + 1):
        try:
            if varphi.lo is not None and (
                np.any(-3 * c <= np.asarray(varphi.lo)) or np.any(3 * c >= np.asarray(varphi.hi))
            ):
                raise BoxTooLarge("varphi domain smaller than the 3c box")
            chart = morse.normal_form(G, sig, V=2 * c, W=c, max_shrink=0)
            break
        except (BoxTooLarge, SingularJacobian, NotCritical, DegenerateCritical) as err:
            # on oversized boxes the critical point check itself can fail numerically
            last = err
            c /= 2
    else:
        raise ShrinkExhausted(f"no admissible half-width after {max_shrink} halvings: {last}")

    def T(t, x):
        t = np.asarray(t, dtype=float)
        return chart.tau(np.asarray(x, dtype=float) - t, t)

    fam = ReparamFamily(
        name or "cone_general", kind, sig, c,
        phi=_phi_graph(varphi, sig),
        eta=lambda t: eta_general(varphi, sig, t),
        T=T,
        chart=chart,
        closed_form=False,
        meta={"varphi": varphi},
    )
    return fam


def morse_residual(fam, samples=2000, seed=0):
    """Max cone-identity residual over random (x, t) in cU x cU."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-fam.c, fam.c, size=(samples, fam.n))
    t = rng.uniform(-fam.c, fam.c, size=(samples, fam.n))
    lhs = quadratic_form(fam.sig, fam.chart.tau(x - t, t)) if fam.chart is not None else None
    if lhs is None:
        return float(np.max(fam.identity_residual(x, t)))
    return float(np.max(np.abs(lhs - fam.F(x, t))))


def range_violations(fam, per_axis=21):
    """Fraction of grid points of cU x cU whose image T_t(x) leaves the 2c box."""
    g = np.linspace(-fam.c, fam.c, per_axis)
    pts = np.stack(np.meshgrid(*([g] * fam.n), indexing="ij"), axis=-1).reshape(-1, fam.n)
    bad = 0
    for t in pts:
        bad += int(np.sum(np.any(np.abs(fam.T(t, pts)) > 2 * fam.c, axis=-1)))
    return bad / len(pts) ** 2


def _t_hessian(varphi, sig, x, t, step=1e-4):
    """Central-difference Hessian of t -> F(x, t)."""
    n = sig.n
    H = np.zeros(np.shape(t) + (n,))
    for j in range(n):
        for k in range(n):
            ej = np.zeros(n)
            ek = np.zeros(n)
            ej[j] = step
            ek[k] = step
            f = lambda tt: F_eval(varphi, sig, x, tt)
            H[..., j, k] = (f(t + ej + ek) - f(t + ej - ek) - f(t - ej + ek) + f(t - ej - ek)) / (4 * step**2)
    return H


def lemma_checks(varphi, sig, c, per_axis=11):
    """Numerical checks of the critical-point structure of F_x(t) = F(x, t) on cU.

    Returns a dict with max |F(x, x)|, max |grad_t F(x, t)| at t = x, the
    error of H_t F_0(0) against A_m, the eps with |det H_t F_x(t)| in
    [eps, 1/eps] over cU x cU, and the minimum of |eta|.
    """
    n = sig.n
    g = np.linspace(-c, c, per_axis)
    pts = np.stack(np.meshgrid(*([g] * n), indexing="ij"), axis=-1).reshape(-1, n)
    step = 1e-6
    grad = np.zeros_like(pts)
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        grad[:, j] = (F_eval(varphi, sig, pts, pts + e) - F_eval(varphi, sig, pts, pts - e)) / (2 * step)
    X = np.repeat(pts, len(pts), axis=0)
    T = np.tile(pts, (len(pts), 1))
    dets = np.abs(np.linalg.det(_t_hessian(varphi, sig, X, T)))
    z = np.zeros((1, n))
    H0 = _t_hessian(varphi, sig, z, z)[0]
    etas = np.linalg.norm(eta_general(varphi, sig, pts), axis=-1)
    return {
        "F_xx": float(np.max(np.abs(F_eval(varphi, sig, pts, pts)))),
        "grad_t_at_x": float(np.max(np.abs(grad))),
        "hessian_at_0_err": float(np.max(np.abs(H0 - sig.hessian))),
        "det_eps": float(min(np.min(dets), 1 / np.max(dets))),
        "min_eta_norm": float(np.min(etas)),
    }


# --- registry ------------------------------------------------------------------


def family_from_id(fid, c=None):
    """Resolve a config id such as "cone_parabola" or "cone_general:saddle"."""
    if fid == "cone_parabola":
        return cone_parabola() if c is None else cone_parabola(c)
    if fid == "cone_perturbed":
        return cone_perturbed() if c is None else cone_perturbed(c)
    if fid == "cyl_parabola":
        return cyl_parabola() if c is None else cyl_parabola(c)
    kind, _, sid = fid.partition(":")
    if kind in ("cone_general", "cyl_general") and sid:
        if sid == "cubic":
            varphi, sig = varphi_cubic(), QuadraticSignature(1, 1)
        else:
            mp = morse_parametrize(catalog_surface(sid))
            varphi, sig = mp.varphi, mp.sig
        return build_T_general(
            varphi, sig, c=0.5 if c is None else c,
            kind="cone" if kind == "cone_general" else "cylinder", name=fid,
        )
    raise KeyError(f"unknown family id {fid!r}")
