"""Fourier transforms of particle measures, decay profiles and exponent fits."""

import csv
import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from ._kernels import affine_sum
from .errors import AllZeroValues, DimensionMismatch


class ResolutionWarning(UserWarning):
    """The measure has too few atoms for the requested frequency range."""


def _chunks(measure, xi):
    if hasattr(measure, "phase_term_chunks"):
        yield from measure.phase_term_chunks(xi)
    else:
        yield measure.phase_terms(xi)


def ft_ray(measure, direction, ks):
    """mu^(k * direction) for every k in `ks` (complex array)."""
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (measure.ambient_dim,):
        raise DimensionMismatch(f"direction has shape {direction.shape}, measure lives in R^{measure.ambient_dim}")
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    total = np.zeros(len(ks), dtype=complex)
    for A, B, W, hv, hw in _chunks(measure, direction):
        total += affine_sum(A, B, W, hv, hw, ks)
    return total


def ft(measure, xi):
    """mu^(xi) = sum_j w_j exp(-2 pi i x_j . xi)."""
    return complex(ft_ray(measure, xi, [1.0])[0])


def geometric_ks(k_min, k_max, points_per_octave):
    """k_min * 2^(j / points_per_octave) up to k_max (inclusive within rounding)."""
    n = int(np.floor(np.log2(k_max / k_min) * points_per_octave + 1e-9))
    return k_min * 2.0 ** (np.arange(n + 1) / points_per_octave)


@dataclass
class DecayProfile:
    ks: np.ndarray
    values: np.ndarray
    direction: object
    fitted_exponent: float = float("nan")
    fit_r2: float = float("nan")
    envelope_mode: str = "blockmax"
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.ks = np.asarray(self.ks, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.ks) <= 0):
            raise ValueError("ks must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("profile values must be non-negative")

    def refit(self, mode=None):
        mode = mode or self.envelope_mode
        e, r2 = fit_exponent(self, mode)
        self.fitted_exponent, self.fit_r2, self.envelope_mode = e, r2, mode
        return self

    def floor(self, power):
        """min_k k^power |values|."""
        return float(np.min(self.ks**power * self.values))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "value"])
            for k, v in zip(self.ks, self.values):
                w.writerow([repr(float(k)), repr(float(v))])

    def summary(self):
        d = self.direction
        return {
            "direction": d if isinstance(d, str) else [float(x) for x in np.ravel(d)],
            "k_min": float(self.ks[0]),
            "k_max": float(self.ks[-1]),
            "n_samples": int(len(self.ks)),
            "fitted_exponent": float(self.fitted_exponent),
            "fit_r2": float(self.fit_r2),
            "envelope_mode": self.envelope_mode,
            "warnings": list(self.warnings),
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)


def read_profile_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return DecayProfile(data[:, 0], data[:, 1], "file")


def _loglog_fit(k, v):
    x, y = np.log(k), np.log(v)
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return -float(slope), float(r2)


def block_maxima(ks, values):
    """Per-octave maxima, each placed at its own k."""
    ks = np.asarray(ks, dtype=float)
    values = np.asarray(values, dtype=float)
    octave = np.floor(np.log2(ks / ks[0]) + 1e-9).astype(int)
    # a trailing block shorter than half an octave of samples joins its neighbour
    counts = np.bincount(octave)
    if len(counts) > 1 and counts[-1] < max(1, np.max(counts) // 2):
        octave[octave == octave[-1]] = len(counts) - 2
    bk, bv = [], []
    for o in np.unique(octave):
        sel = np.flatnonzero(octave == o)
        j = sel[np.argmax(values[sel])]
        bk.append(ks[j])
        bv.append(values[j])
    return np.array(bk), np.array(bv)


def fit_exponent(profile, mode="blockmax", min_octaves=3):
    """Decay exponent e of values ~ k^(-e) by least squares on logs.

    Parameters
    ----------
    profile : DecayProfile or (ks, values)
    mode : {"raw", "blockmax"}
        "blockmax" first reduces to per-octave maxima so that oscillation
        zeros do not drag the fit.

    Returns
    -------
    (exponent, r2)
    """
    ks, values = (profile.ks, profile.values) if isinstance(profile, DecayProfile) else profile
    ks = np.asarray(ks, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.log2(ks[-1] / ks[0]) < min_octaves - 1e-9:
        raise ValueError(f"need at least {min_octaves} octaves of data")
    if not np.any(values > 0):
        raise AllZeroValues("every profile value is zero")
    if mode == "blockmax":
        ks, values = block_maxima(ks, values)
    elif mode != "raw":
        raise ValueError(f"unknown envelope mode {mode!r}")
    keep = values > 0
    if keep.sum() < 2:
        raise AllZeroValues("fewer than two non-zero values")
    return _loglog_fit(ks[keep], values[keep])


def resolution_ok(measure, k_max):
    return measure.size >= 10 * k_max * measure.diameter()


def ray_profile(measure, eta, k_min=16, k_max=4096, points_per_octave=8, mode="blockmax", ks=None):
    """|mu^(k eta)| on a geometric k grid, with fitted exponent.

    Emits ResolutionWarning when the atom count is below
    10 * k_max * diameter(support).
    """
    eta = np.asarray(eta, dtype=float)
    if abs(np.linalg.norm(eta) - 1) > 1e-12:
        raise ValueError("direction must be a unit vector")
    ks = geometric_ks(k_min, k_max, points_per_octave) if ks is None else np.asarray(ks, dtype=float)
    prof = DecayProfile(ks, np.abs(ft_ray(measure, eta, ks)), eta, envelope_mode=mode)
    if not resolution_ok(measure, ks[-1]):
        msg = f"{measure.size} atoms < 10 * k_max * diameter for k_max={ks[-1]:g}"
        warnings.warn(msg, ResolutionWarning, stacklevel=2)
        prof.warnings.append(msg)
    try:
        prof.refit()
    except (ValueError, AllZeroValues):
        pass
    return prof


def sphere_directions(dim, count, seed=0):
    """Unit vectors: uniform angles (dim 2), Fibonacci lattice (dim 3), seeded Gaussians otherwise."""
    if dim == 1:
        return np.array([[1.0]])
    if dim == 2:
        a = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    if dim == 3:
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        r = np.sqrt(1 - z * z)
        phi = np.pi * (3 - np.sqrt(5)) * i
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    g = np.random.default_rng(seed).standard_normal((count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def direction_sup_profile(measure, n_directions=256, ks=None, seed=0, mode="blockmax"):
    """Per k, sup over sampled directions of |mu^(k eta)|; dim_F proxy = 2 * exponent."""
    if n_directions < 16:
        raise ValueError("need at least 16 directions")
    ks = geometric_ks(16, 4096, 8) if ks is None else np.asarray(ks, dtype=float)
    dirs = sphere_directions(measure.ambient_dim, n_directions, seed)
    sup = np.zeros(len(ks))
    for eta in dirs:
        sup = np.maximum(sup, np.abs(ft_ray(measure, eta, ks)))
    prof = DecayProfile(ks, sup, "sup", envelope_mode=mode)
    try:
        prof.refit()
    except (ValueError, AllZeroValues):
        pass
    return prof


def dim_proxy(profile):
    return 2.0 * profile.fitted_exponent
