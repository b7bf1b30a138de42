"""Compiled oscillatory sums.

Every sum here is taken over fixed-size blocks (sequential inside a block),
then the block totals are combined by pairwise reduction in index order.
The result therefore does not depend on the number of threads.
"""

import numba

# TBB in this image is too old for numba; pick a layer that never warns.
if numba.config.THREADING_LAYER == "default":
    numba.config.THREADING_LAYER = "omp"
import numpy as np

BLOCK = 2048


@numba.njit(cache=True)
def _pairwise(vals):
    n = vals.size
    if n == 0:
        return 0.0
    buf = vals.copy()
    while n > 1:
        half = n // 2
        for i in range(half):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
        if n % 2 == 1:
            buf[half] = buf[n - 1]
            n = half + 1
        else:
            n = half
    return buf[0]


@numba.njit(parallel=True, cache=True)
def phase_sums(proj, weights, ks):
    """sum_j w_j exp(-2 pi i k s_j) for every k in `ks`.

    The phase is reduced to [-1/2, 1/2] turns with rint before taking
    cos/sin, which keeps large k*s accurate and makes the result exactly
    conjugate-symmetric under s -> -s.
    """
    n = proj.size
    nb = (n + BLOCK - 1) // BLOCK
    out_re = np.empty(ks.size)
    out_im = np.empty(ks.size)
    for q in range(ks.size):
        k = ks[q]
        bre = np.zeros(nb)
        bim = np.zeros(nb)
        for b in numba.prange(nb):
            lo = b * BLOCK
            hi = min(lo + BLOCK, n)
            re = 0.0
            im = 0.0
            for j in range(lo, hi):
                u = k * proj[j]
                u = u - np.rint(u)
                a = 2.0 * np.pi * u
                re += weights[j] * np.cos(a)
                im -= weights[j] * np.sin(a)
            bre[b] = re
            bim[b] = im
        out_re[q] = _pairwise(bre)
        out_im[q] = _pairwise(bim)
    return out_re, out_im


@numba.njit(cache=True)
def pairwise_sum(vals):
    """Blocked pairwise sum of a real vector."""
    n = vals.size
    nb = (n + BLOCK - 1) // BLOCK
    blocks = np.zeros(nb)
    for b in range(nb):
        lo = b * BLOCK
        hi = min(lo + BLOCK, n)
        s = 0.0
        for j in range(lo, hi):
            s += vals[j]
        blocks[b] = s
    return _pairwise(blocks)


def oscillatory_sum(proj, weights, ks):
    """Complex array of sum_j w_j exp(-2 pi i k s_j), one entry per k."""
    proj = np.ascontiguousarray(proj, dtype=np.float64).ravel()
    weights = np.ascontiguousarray(weights, dtype=np.float64).ravel()
    ks = np.ascontiguousarray(np.atleast_1d(ks), dtype=np.float64)
    re, im = phase_sums(proj, weights, ks)
    return re + 1j * im


@numba.njit(parallel=True, cache=True)
def affine_phase_sums(A, B, W, hv, hw, ks):
    """sum_n sum_l W_n hw_l exp(-2 pi i k (A_n hv_l + B_n)) for every k.

    This is the Fourier sum of a product measure whose atoms have
    projection A_n * h_l + B_n; cones (B = 0) and cylinders both fit.
    """
    n = A.size
    nb = (n + BLOCK - 1) // BLOCK
    out_re = np.empty(ks.size)
    out_im = np.empty(ks.size)
    for q in range(ks.size):
        k = ks[q]
        bre = np.zeros(nb)
        bim = np.zeros(nb)
        for b in numba.prange(nb):
            lo = b * BLOCK
            hi = min(lo + BLOCK, n)
            re = 0.0
            im = 0.0
            for j in range(lo, hi):
                a = A[j]
                c = B[j]
                w = W[j]
                for l in range(hv.size):
                    u = k * (a * hv[l] + c)
                    u = u - np.rint(u)
                    ph = 2.0 * np.pi * u
                    ww = w * hw[l]
                    re += ww * np.cos(ph)
                    im -= ww * np.sin(ph)
            bre[b] = re
            bim[b] = im
        out_re[q] = _pairwise(bre)
        out_im[q] = _pairwise(bim)
    return out_re, out_im


def affine_sum(A, B, W, hv, hw, ks):
    """Complex array of affine_phase_sums, one entry per k."""
    f = lambda a: np.ascontiguousarray(np.ravel(a), dtype=np.float64)
    re, im = affine_phase_sums(f(A), f(B), f(W), f(hv), f(hw), f(np.atleast_1d(ks)))
    return re + 1j * im
