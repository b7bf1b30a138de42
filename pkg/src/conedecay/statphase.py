"""Stationary phase: Gaussian identities, direct quadrature of
I(lambda) = int exp(i lambda phi(z)) psi(z) dz, leading terms and error scans.

All half-powers use the principal branch on C minus (-inf, 0].
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from ._kernels import affine_sum
from .errors import ResolutionExceeded
from .fourier import fit_exponent
from .measures import BumpFunction, make_bump
from .surfaces import QuadraticSignature, ScalarField, quadratic_form, signature_of

NODE_CAP = 20_000_000
LAMBDA0 = 8.0


def gaussian_quadratic(lam, sig):
    """pi^(n/2) (1 - i lam)^(-m/2) (1 + i lam)^(-(n-m)/2) = int exp(i lam Q_m(y) - |y|^2) dy."""
    n, m = sig.n, sig.m
    lam = complex(lam)
    return np.pi ** (n / 2) * (1 - 1j * lam) ** (-m / 2) * (1 + 1j * lam) ** (-(n - m) / 2)


def _gauss_panels(lam, R, rad_per_panel=8.0, max_width=0.25):
    """Panel edges on [0, R] fine enough for both exp(-y^2) and the chirp exp(i lam y^2)."""
    edges = set(np.linspace(0, R, int(np.ceil(R / max_width)) + 1))
    if lam != 0:
        j = np.arange(1, int(abs(lam) * R * R / rad_per_panel) + 1)
        edges.update(np.sqrt(j * rad_per_panel / abs(lam)))
    e = np.array(sorted(edges))
    e = e[e <= R]
    return np.concatenate([-e[::-1], e[1:]])


def gaussian_direct(lam, sig, R=5.5):
    """Tensor Gauss-Legendre value of the Gaussian integral on [-R, R]^n.

    The integrand is a product over coordinates, so the tensor rule is
    evaluated in factored form (exactly the same finite sum).
    """
    edges = _gauss_panels(lam, R)
    y, w = quadrature.composite(0, 0, edges)
    out = 1.0 + 0j
    for s in sig.signs:
        out *= np.sum(w * np.exp(1j * lam * s * y * y - y * y))
    return complex(out)


@dataclass(frozen=True)
class Amplitude:
    """psi(z) = |z - z_c|^(2 power) exp(-gauss |z - z_c|^2) bump(z)."""

    bump: BumpFunction
    gauss: float = 0.0
    power: int = 0
    center: tuple = None

    @property
    def outer(self):
        return self.bump.outer

    def value(self, z):
        z = np.asarray(z, dtype=float)
        c = np.zeros(z.shape[-1]) if self.center is None else np.asarray(self.center)
        r2 = np.sum((z - c) ** 2, axis=-1)
        out = self.bump.value(z) * np.exp(-self.gauss * r2)
        if self.power:
            out = out * r2**self.power
        return out

    __call__ = value


def default_amplitude(n, center=None, gauss=4.0, inner=0.25, outer=0.5, power=0):
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    bump = make_bump([(ci - inner, ci + inner) for ci in c], [(ci - outer, ci + outer) for ci in c])
    return Amplitude(bump, gauss, power, tuple(c))


@dataclass
class PhaseProblem:
    """Phase phi with a single non-degenerate critical point z0 inside spt psi."""

    phase: ScalarField
    amplitude: object
    z0: np.ndarray
    sig: QuadraticSignature = None
    hess_det: float = None

    def __post_init__(self):
        self.z0 = np.asarray(self.z0, dtype=float)
        g = self.phase.gradient(self.z0)
        if np.max(np.abs(g)) > 1e-8:
            raise ValueError("z0 is not a critical point of the phase")
        if abs(float(self.phase.value(self.z0))) > 1e-10:
            raise ValueError("phase must vanish at z0")
        H = np.asarray(self.phase.hessian(self.z0))
        self.sig = signature_of(H)
        self.hess_det = float(abs(np.linalg.det(H)))
        if self.hess_det < 1e-8:
            raise ValueError("degenerate critical point")

    @property
    def n(self):
        return self.phase.dim


def quadratic_problem(sig, center=None, amplitude=None):
    """phi(z) = Q_m(z - center)."""
    n = sig.n
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    s2 = 2.0 * sig.signs
    phase = ScalarField(
        n, tuple(c - 10), tuple(c + 10),
        lambda z: quadratic_form(sig, z - c),
        lambda z: (z - c) * s2,
        lambda z: np.broadcast_to(np.diag(s2), z.shape + (n,)),
        name=f"Q{sig.m}",
    )
    amp = default_amplitude(n, c) if amplitude is None else amplitude
    return PhaseProblem(phase, amp, c)


def _phase_oscillation(problem, samples=65):
    box = problem.amplitude.outer
    axes = [np.linspace(lo, hi, samples) for lo, hi in box]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, problem.n)
    v = problem.phase.value(pts)
    return float(np.max(v) - np.min(v))


def _tensor_sum(lam, problem, per_dim):
    rules = [quadrature.composite_nodes(lo, hi, per_dim) for lo, hi in problem.amplitude.outer]
    total = rules[0][0].size ** problem.n
    if total > NODE_CAP:
        raise ResolutionExceeded(f"{total} nodes exceed the cap {NODE_CAP}")
    if problem.n == 1:
        z, w = rules[0][0][:, None], rules[0][1]
        return _weighted_exp(lam, problem, z, w)
    # outer axis in chunks so memory stays bounded
    (x0, w0), rest = rules[0], rules[1:]
    zr, wr = quadrature.tensor(rest)
    acc = 0j
    for xi, wi in zip(x0, w0):
        z = np.concatenate([np.full((len(zr), 1), xi), zr], axis=1)
        acc += _weighted_exp(lam, problem, z, wi * wr)
    return acc


def _weighted_exp(lam, problem, z, w):
    W = w * problem.amplitude(z)
    keep = W != 0
    if not np.any(keep):
        return 0j
    A = -lam * problem.phase.value(z[keep]) / (2 * np.pi)
    return complex(affine_sum(A, np.zeros_like(A), W[keep], [1.0], [1.0], [1.0])[0])


@dataclass
class DirectResult:
    value: complex
    converged: bool
    rel_diff: float
    nodes_per_dim: int


def I_direct(lam, problem, nodes_per_wavelength=12, min_nodes=256, check=True):
    """Tensor Gauss-Legendre value of I(lam) with a Richardson-style resolution check.

    Per-dimension nodes: min_nodes (resolving the amplitude) plus
    nodes_per_wavelength * lam * osc(phi) / (2 pi) (resolving the phase).
    The value returned is the doubled-resolution one; `converged` is set
    when the two resolutions agree to 1e-8 relative.

    Raises
    ------
    ResolutionExceeded
        The doubled grid would exceed 2e7 nodes.
    """
    osc = _phase_oscillation(problem)
    per_dim = min_nodes + int(np.ceil(nodes_per_wavelength * abs(lam) * osc / (2 * np.pi)))
    if not check:
        return DirectResult(_tensor_sum(lam, problem, per_dim), True, 0.0, per_dim)
    coarse = _tensor_sum(lam, problem, per_dim)
    fine = _tensor_sum(lam, problem, 2 * per_dim)
    rel = abs(fine - coarse) / max(abs(fine), 1e-300)
    return DirectResult(fine, rel < 1e-8, float(rel), 2 * per_dim)


def branch_constant(n, m):
    """exp(-i pi (n - m) / 2): the factor multiplying (2 pi i)^(n/2) in the leading term."""
    return np.exp(-0.5j * np.pi * (n - m))


def I_leading(lam, problem):
    """exp(-i pi (n-m)/2) (2 pi i)^(n/2) c^(-1/2) psi(z0) lam^(-n/2)  (lam > 0)."""
    n, m = problem.sig.n, problem.sig.m
    psi0 = float(problem.amplitude(problem.z0[None])[0])
    if lam < 0:
        return np.conj(I_leading(-lam, problem))
    return complex(branch_constant(n, m) * (2j * np.pi) ** (n / 2) * problem.hess_det**-0.5 * psi0 * lam ** (-n / 2))


@dataclass
class ScanResult:
    lams: np.ndarray
    direct: np.ndarray
    leading: np.ndarray
    err: np.ndarray
    exponent: float
    r2: float
    threshold: float
    converged: bool
    quantity: str = "err"

    @property
    def passed(self):
        return bool(self.exponent >= self.threshold)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "err"])
            for l, e in zip(self.lams, self.err):
                w.writerow([repr(float(l)), repr(float(e))])

    def summary(self):
        return {"exponent": self.exponent, "r2": self.r2, "threshold": self.threshold,
                "passed": self.passed, "converged": self.converged, "quantity": self.quantity}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)


def lambda_grid(lo=LAMBDA0, hi=2048.0, per_octave=2):
    n = int(round(np.log2(hi / lo) * per_octave))
    return lo * 2.0 ** (np.arange(n + 1) / per_octave)


def error_scan(problem, lams=None, nodes_per_wavelength=12):
    """Fit the decay exponent of |I_direct - I_leading| over a geometric lambda grid.

    When psi(z0) = 0 the leading term vanishes and the fit is of |I_direct|.
    Passes when the exponent is at least (n + 1)/2 - 0.1.
    """
    lams = lambda_grid() if lams is None else np.asarray(lams, dtype=float)
    if np.any(lams < LAMBDA0):
        raise ValueError(f"scan must stay above lambda0 = {LAMBDA0}")
    d, lead, conv = [], [], True
    for lam in lams:
        r = I_direct(lam, problem, nodes_per_wavelength)
        conv &= r.converged
        d.append(r.value)
        lead.append(I_leading(lam, problem))
    d, lead = np.array(d), np.array(lead)
    err = np.abs(d - lead)
    e, r2 = fit_exponent((lams, err), "raw")
    n = problem.n
    qty = "err" if np.any(lead != 0) else "direct"
    return ScanResult(lams, d, lead, err, e, r2, (n + 1) / 2 - 0.1, bool(conv), qty)


def taylor_remainder_check(sig, lams=None):
    """Check |f_m(1/lam) - a0| <= b_m / lam with f_m(s) = (s - i)^(-m/2) (s + i)^(-(n-m)/2).

    f_m(1/lam) = lam^(n/2) pi^(-n/2) times the Gaussian integral; a0 = f_m(0)
    and b_m = n/2 bounds |f_m'| on [0, inf).
    """
    n, m = sig.n, sig.m
    lams = np.geomspace(LAMBDA0, 2.0**20, 60) if lams is None else np.asarray(lams, dtype=float)
    s = 1.0 / lams
    f = (s - 1j) ** (-m / 2) * (s + 1j) ** (-(n - m) / 2)
    via_gauss = np.array([gaussian_quadratic(l, sig) for l in lams]) * lams ** (n / 2) / np.pi ** (n / 2)
    a0 = np.exp(0.25j * np.pi * m) * np.exp(-0.25j * np.pi * (n - m))
    ratio = np.abs(f - a0) * lams
    return {
        "a0": a0,
        "b_m": n / 2,
        "max_ratio": float(np.max(ratio)),
        "identity_err": float(np.max(np.abs(f - via_gauss))),
        "passed": bool(np.max(ratio) <= (n / 2) * (1 + 1e-9)),
    }
