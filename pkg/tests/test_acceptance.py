"""Acceptance criteria, one test per criterion.

Each test prints a single ``CRITERION <i> PASS|FAIL`` line.  Run directly
(``python tests/test_acceptance.py``) to get the eight lines without pytest.
"""

import sys
import time
from functools import lru_cache

import pytest

from conedecay import harness
from conedecay.surfaces import QuadraticSignature


def _statuses(rep, names):
    return {n: rep.status_of(n) for n in names}


def _measured(rep, name):
    return next(c.measured for c in rep.checks if c.name == name)


def _fmt(x):
    return f"{x:.4g}" if isinstance(x, float) else str(x)


@lru_cache(maxsize=None)
def _run(sid, **kw):
    cfg = harness.ScenarioConfig(scenario=sid, d3=sid == "C3_saddle", **kw)
    t0 = time.perf_counter()
    rep = harness.run_one(cfg, sid)
    return rep, time.perf_counter() - t0


def criterion_1():
    t0 = time.perf_counter()
    rep = harness.run_identities(samples=10_000)
    dt = time.perf_counter() - t0
    closed = ["identity_parabola_cone", "identity_perturbed_cone", "identity_parabola_cylinder"]
    general = ["identity_general_n1", "identity_general_n2"]
    e_closed = max(_measured(rep, n) for n in closed)
    e_general = max(_measured(rep, n) for n in general)
    ok = e_closed <= 1e-12 and e_general <= 1e-9 and dt < 5
    return ok, f"closed-form max err {e_closed:.2e} (<= 1e-12), Morse-built {e_general:.2e} (<= 1e-9), {dt:.2f} s (< 5 s)"


def criterion_2():
    t0 = time.perf_counter()
    rep = harness.run_morse()
    dt = time.perf_counter() - t0
    res = _measured(rep, "morse_cubic_residual")
    jh = _measured(rep, "morse_cubic_jacobian_hessian")
    dr = _measured(rep, "morse_cubic_det_relation")
    ok = res <= 1e-6 and jh <= 1e-5 and dr <= 1e-5 and dt < 30
    return ok, f"residual {res:.2e}, Jacobian-Hessian {jh:.2e}, det relation {dr:.2e}, {dt:.2f} s (< 30 s)"


def criterion_3():
    from conedecay import statphase as sp

    t0 = time.perf_counter()
    worst = 0.0
    for n in (1, 2):
        for m in range(n + 1):
            for lam in (1.0, 10.0, 100.0):
                a = sp.gaussian_quadratic(lam, QuadraticSignature(n, m))
                worst = max(worst, abs(sp.gaussian_direct(lam, QuadraticSignature(n, m)) - a) / abs(a))
    dt = time.perf_counter() - t0
    return worst <= 1e-8 and dt < 60, f"max rel err {worst:.2e} (<= 1e-8), {dt:.2f} s (< 60 s)"


def criterion_4():
    from conedecay import statphase as sp

    t0 = time.perf_counter()
    cases = [("n=1 (x-t)^2, t=0", QuadraticSignature(1, 1), [0.0]),
             ("n=1 (x-t)^2, t=0.1", QuadraticSignature(1, 1), [0.1]),
             ("n=2 Q1", QuadraticSignature(2, 1), None),
             ("n=2 Q2", QuadraticSignature(2, 2), None)]
    ok, parts = True, []
    for label, sig, center in cases:
        res = sp.error_scan(sp.quadratic_problem(sig, center), sp.lambda_grid(8, 2048))
        ok &= res.exponent >= (sig.n + 1) / 2 - 0.1 and res.converged
        parts.append(f"{label}: {res.exponent:.3f}")
    dt = time.perf_counter() - t0
    ok &= dt < 300
    return ok, "; ".join(parts) + f"; {dt:.1f} s (< 300 s)"


def criterion_5():
    ok, parts, total = True, [], 0.0
    floors = {"C1": 0.9 * 0.5 * 2**-0.5, "C2": 0.9 * 0.5 * 2**-0.5, "D1": 0.45}
    for sid in ("C1", "C2", "D1"):
        rep, dt = _run(sid)
        total += dt
        e = _measured(rep, f"{sid}_exponent")
        fl = _measured(rep, f"{sid}_floor")
        s = _measured(rep, f"{sid}_s_upper")
        ok &= 0.45 <= e <= 0.55 and fl >= floors[sid] and s <= 1.1
        parts.append(f"{sid}: exp {e:.4f} floor {fl:.3f} s_upper {s:.3f}")
    ok &= total < 600
    return ok, "; ".join(parts) + f"; {total:.0f} s (< 600 s)"


def criterion_6():
    ok, parts, total = True, [], 0.0
    for sid in ("lower_cone", "lower_cylinder"):
        rep, dt = _run(sid)
        total += dt
        lo, hi = _measured(rep, f"{sid}_generic_exponent")
        ax = _measured(rep, f"{sid}_near_axis_exponent")
        k_top = max(f["k_max"] for f in rep.fits if "near_axis" in f["profile"])
        ok &= 0.45 <= lo and hi <= 0.60 and ax >= 3 and k_top == 512
        parts.append(f"{sid}: generic [{lo:.3f}, {hi:.3f}] near-axis min {ax:.2f}")
    ok &= total < 300
    return ok, "; ".join(parts) + f"; {total:.0f} s (< 300 s)"


def criterion_7():
    ok, parts = True, []
    for sid in ("C1", "C2", "D1"):
        rep, _ = _run(sid)
        st = _statuses(rep, [f"{sid}_fubini", f"{sid}_pullback"])
        ok &= all(v == "PASS" for v in st.values())
        parts.append(f"{sid} fubini {_fmt(_measured(rep, f'{sid}_fubini'))} pullback {_fmt(_measured(rep, f'{sid}_pullback'))}")
    # Morse-built family: pullback against 1e-6 (1 + k residual) for k <= 1000
    from conedecay import reparam

    fam = reparam.family_from_id("cone_general:cubic")
    sub = harness.VerificationReport()
    mu, nu, _ = harness._upper_measures(fam, 1000.0, None, 8, 16)
    harness._pullback_check(sub, "morse_cubic", fam, mu, nu, 1000.0)
    harness._fubini_checks(sub, "morse_cubic", fam)
    ok &= all(c.status == "PASS" for c in sub.checks)
    parts.append(f"Morse cubic fubini {_fmt(_measured(sub, 'morse_cubic_fubini'))} "
                 f"pullback err/tol {_fmt(_measured(sub, 'morse_cubic_pullback'))}")
    return ok, "; ".join(parts)


def criterion_8():
    rep, dt = _run("C3_saddle")
    e = _measured(rep, "C3_saddle_exponent")
    k_top = max(f["k_max"] for f in rep.fits)
    ok = 0.9 <= e <= 1.1 and k_top == 256 and dt < 1800
    return ok, f"exponent {e:.4f} over k in [16, {k_top:g}], {dt:.0f} s (< 1800 s)"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
            criterion_5, criterion_6, criterion_7, criterion_8]


def _report(i, ok, detail):
    line = f"CRITERION {i} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line, flush=True)
    return line


@pytest.mark.slow
@pytest.mark.parametrize("i", range(1, 9))
def test_criterion(i, capsys):
    ok, detail = CRITERIA[i - 1]()
    with capsys.disabled():
        print()
        _report(i, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    results = [CRITERIA[i - 1]() for i in range(1, 9)]
    for i, (ok, detail) in enumerate(results, 1):
        _report(i, ok, detail)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
