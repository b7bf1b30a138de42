"""Gauss-Legendre rules: single panel, composite, and tensor products."""

from functools import lru_cache

import numpy as np

PANEL_ORDER = 16


@lru_cache(maxsize=32)
def _leggauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(a, b, order=PANEL_ORDER):
    """Nodes and weights of the `order`-point rule on [a, b]."""
    x, w = _leggauss(order)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def composite(a, b, panels, order=PANEL_ORDER):
    """Composite rule with `panels` equal panels of `order` nodes each.

    `panels` may also be an increasing array of panel edges, in which case
    `a` and `b` are ignored.
    """
    if np.ndim(panels) == 0:
        panels = int(panels)
        if panels < 1:
            raise ValueError("need at least one panel")
        edges = np.linspace(a, b, panels + 1)
    else:
        edges = np.asarray(panels, dtype=float)
    x, w = _leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel()
    return nodes, weights


def composite_nodes(a, b, n_nodes, order=PANEL_ORDER):
    """Composite rule with at least `n_nodes` nodes (rounded up to whole panels)."""
    if n_nodes <= order:
        return gauss_legendre(a, b, max(int(n_nodes), 2))
    return composite(a, b, int(np.ceil(n_nodes / order)), order)


def tensor(rules):
    """Tensor product of 1-d rules given as (nodes, weights) pairs.

    Returns points of shape (N, len(rules)) with the last axis varying
    fastest, and the matching product weights.
    """
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return points, weights


def panels_for_phase(phase_range, rad_per_panel=16.0, minimum=1):
    """Number of panels needed to resolve a phase that sweeps `phase_range` radians."""
    return max(int(minimum), int(np.ceil(abs(phase_range) / rad_per_panel)))
