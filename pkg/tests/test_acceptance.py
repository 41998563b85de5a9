"""Acceptance criteria, one test per criterion.

Each test appends a ``criterion N: PASS|FAIL ...`` line that the terminal
summary prints, then asserts.  Run directly with ``python tests/test_acceptance.py``
or through pytest.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from jnbellman.bellman import bellman_derivatives, bellman_value, ode_residual, quadratic_form
from jnbellman.constants import c_continuous, c_dyadic, conjectured_nd, delta_root, g_function
from jnbellman.domain import BellmanPoint, Sign, max_spread_on_segment, split_interval
from jnbellman.extremal import continuous_extremal, dyadic_extremal
from jnbellman.piecewise import bmo_norm_continuous, bmo_norm_dyadic, moments
from jnbellman.verify import (bellman_induction, bellman_midpoint_gap, brute_force_oracle,
                              hessian_fd_check, random_dyadic_function, random_interior_point,
                              random_log_family, random_ode_sample, random_point, random_triple,
                              scan_constraint_set)

SQRT2 = math.sqrt(2)
SEED = 20240601


def report(n, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    ACCEPTANCE_LINES.append(
        f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail} [{elapsed:.3g} s, limit {limit:g} s]")
    assert ok, f"criterion {n}: {detail}, {elapsed:.3g} s (limit {limit:g} s)"


def test_criterion_01_continuous_constant():
    t0 = time.perf_counter()
    c = c_continuous(0.5)
    big = c_continuous(0.999)
    dt = time.perf_counter() - t0
    rel = abs(c - math.exp(-0.5) / 0.5) / c
    report(1, rel <= 1e-14 and big > 100, f"rel err {rel:.2e}, C(0.999) = {big:.4g}", dt, 1e-3)


def test_criterion_02_dyadic_threshold():
    t0 = time.perf_counter()
    below, above = c_dyadic(0.98), c_dyadic(0.9803)
    dt = time.perf_counter() - t0
    report(2, math.isfinite(below) and math.isinf(above),
           f"C^d(0.98) = {below:.6g}, C^d(0.9803) = {above}", dt, 1e-3)


def test_criterion_03_root_certificates():
    t0 = time.perf_counter()
    worst_res = 0.0
    ok = True
    for sign, hi in (("plus", 0.97), ("minus", 2.0)):
        for eps in np.linspace(0.01, hi, 52)[1:-1]:
            r = delta_root(eps, sign)
            res = abs(g_function(r.root, eps, sign))
            worst_res = max(worst_res, res)
            ok &= res <= 1e-12 and eps < r.root <= 3 * eps / (2 * SQRT2)
    dt = time.perf_counter() - t0
    report(3, ok, f"max |g| = {worst_res:.2e} over 2 x 50 eps", dt, 1.0)


def test_criterion_04_bridge_identity():
    rng = np.random.default_rng(SEED)
    eps_all = rng.uniform(0.01, 0.97, 20)
    t0 = time.perf_counter()
    worst = 0.0
    for eps in eps_all:
        d = delta_root(eps, "plus").root
        b = bellman_value(BellmanPoint(0.0, eps * eps), d, "plus")
        worst = max(worst, abs(b - c_dyadic(eps)) / c_dyadic(eps))
    dt = time.perf_counter() - t0
    report(4, worst <= 1e-10, f"max rel err {worst:.2e}", dt, 0.01)


def test_criterion_05_continuous_extremizer():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    w_mom = w_exp = w_norm = 0.0
    for _ in range(100):
        sign = Sign.PLUS if rng.random() < 0.5 else Sign.MINUS
        eps = rng.uniform(0.05, 0.95)
        x1 = rng.uniform(-1, 1)
        p = BellmanPoint(x1, x1 * x1 + rng.uniform(0.01, 1.0) * eps * eps)
        phi = continuous_extremal(p, eps, sign)
        m = moments(phi)
        w_mom = max(w_mom, abs(m.mean - p.x1), abs(m.second - p.x2))
        b = bellman_value(p, eps, sign)
        w_exp = max(w_exp, abs(m.exp_mean - b) / b)
        w_norm = max(w_norm, abs(bmo_norm_continuous(phi) - eps))
    dt = time.perf_counter() - t0
    report(5, w_mom <= 1e-10 and w_exp <= 1e-10 and w_norm <= 1e-6,
           f"moments {w_mom:.1e}, exp rel {w_exp:.1e}, norm {w_norm:.1e}", dt, 5.0)


def test_criterion_06_dyadic_extremizer():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    w_mom = w_exp = w_norm = 0.0
    for k in range(50):
        for sign in ("plus", "minus"):
            eps = rng.uniform(0.05, 0.9)
            p = random_point(rng, eps)
            phi = dyadic_extremal(p, eps, sign, 40)
            m = phi.moments()
            w_mom = max(w_mom, abs(m.mean - p.x1), abs(m.second - p.x2))
            b = bellman_value(p, delta_root(eps, sign).root, sign)
            w_exp = max(w_exp, abs(m.exp_mean - b) / b)
            if p.spread > 0:
                w_norm = max(w_norm, abs(bmo_norm_dyadic(phi) - eps))
    dt = time.perf_counter() - t0
    report(6, w_mom <= 1e-8 and w_exp <= 1e-8 and w_norm <= 1e-9,
           f"moments {w_mom:.1e}, exp rel {w_exp:.1e}, norm {w_norm:.1e}", dt, 10.0)


def test_criterion_07_concavity():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    min_q = math.inf
    w_det = 0.0
    for _ in range(10_000):
        sign = Sign.PLUS if rng.random() < 0.5 else Sign.MINUS
        delta = rng.uniform(0.05, 0.99)
        x1 = rng.uniform(-1, 1)
        p = BellmanPoint(x1, x1 * x1 + rng.uniform(0.0, 0.999) * delta * delta)
        d = rng.normal(size=2)
        min_q = min(min_q, quadratic_form(p, d, delta, sign))
        der = bellman_derivatives(p, delta, sign)
        scale = max(der.h11 * der.h22, der.h12 * der.h12, 1e-300)
        w_det = max(w_det, abs(der.det) / scale)
    w_fd = 0.0
    for _ in range(100):
        sign = Sign.PLUS if rng.random() < 0.5 else Sign.MINUS
        delta = rng.uniform(0.3, 0.95)
        w_fd = max(w_fd, hessian_fd_check(random_interior_point(rng, delta), delta, sign, 1e-4))
    dt = time.perf_counter() - t0
    report(7, min_q >= -1e-12 and w_det <= 1e-8 and w_fd < 1e-5,
           f"min form {min_q:.1e}, det rel {w_det:.1e}, fd {w_fd:.1e}", dt, 5.0)


def test_criterion_08_ode():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        t, delta, sign = random_ode_sample(rng)
        # ode_residual raises if the sign condition fails
        worst = max(worst, abs(ode_residual(t, delta, sign, 1e-4)))
    dt = time.perf_counter() - t0
    report(8, worst < 1e-6, f"max residual {worst:.1e}, sign condition held", dt, 1.0)


def test_criterion_09_two_stage_problem():
    t0 = time.perf_counter()
    ok = True
    notes = []
    for eps in (0.5, 0.7, 0.9):
        for sign in ("plus", "minus"):
            d = delta_root(eps, sign).root
            r1 = math.sqrt(d * d - eps * eps)
            corner = (r1, d, r1, eps / SQRT2) if sign == "plus" else (r1, r1, d, eps / SQRT2)
            rep = scan_constraint_set(d, eps, sign, 64)
            dist = max(abs(u - v) for u, v in zip(rep.argument, corner))
            shifted = scan_constraint_set(d - 0.01, eps, sign, 64).extremum
            strict = shifted < 0 if sign == "plus" else shifted > 0
            ok &= abs(rep.extremum) <= 1e-6 and dist <= 1e-3 and strict
            notes.append(f"{sign[0]}{eps}: {rep.extremum:.0e}/{shifted:.1e}")
    dt = time.perf_counter() - t0
    report(9, ok, "; ".join(notes), dt, 60.0)


def test_criterion_10_midpoint_concavity():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    ok = True
    worst = {"plus": math.inf, "minus": -math.inf}
    for eps in (0.2, 0.5, 0.9):
        deltas = {s: delta_root(eps, s).root for s in worst}
        for _ in range(10_000):
            xm, xp = random_triple(rng, eps)
            gp = bellman_midpoint_gap(xm, xp, deltas["plus"], "plus")
            gm = bellman_midpoint_gap(xm, xp, deltas["minus"], "minus")
            worst["plus"] = min(worst["plus"], gp)
            worst["minus"] = max(worst["minus"], gm)
    ok = worst["plus"] >= -1e-10 and worst["minus"] <= 1e-10
    dt = time.perf_counter() - t0
    report(10, ok, f"min plus gap {worst['plus']:.1e}, max minus gap {worst['minus']:.1e}", dt, 10.0)


def test_criterion_11_induction():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    for k in range(1000):
        eps = rng.uniform(0.05, 0.9)
        phi = random_dyadic_function(rng, eps, 6)
        # check=True raises on a non-monotone chain or a broken bound
        bellman_induction(phi, eps, "plus" if k % 2 else "minus", 6)
    flat = 0.0
    for _ in range(20):
        eps = rng.uniform(0.1, 0.9)
        for sign in ("plus", "minus"):
            phi = dyadic_extremal(random_point(rng, eps), eps, sign, 40)
            flat = max(flat, float(np.max(np.abs(np.diff(bellman_induction(phi, eps, sign, 6).values)))))
    dt = time.perf_counter() - t0
    report(11, flat < 1e-8, f"1000 chains monotone, extremizer level spread {flat:.1e}", dt, 30.0)


def test_criterion_12_oracle():
    rng = np.random.default_rng(SEED)
    eps = 0.5
    d = delta_root(eps, "plus").root
    points = [BellmanPoint(0.0, eps * eps)] + [random_point(rng, eps, (-0.5, 0.5)) for _ in range(19)]
    t0 = time.perf_counter()
    excess = -math.inf
    ratio = None
    for i, p in enumerate(points):
        bound = bellman_value(p, d, "plus")
        for depth in range(1, 6):
            val = brute_force_oracle(p, eps, depth, 100_000, seed=i)
            excess = max(excess, val - bound)
            if i == 0 and depth == 5:
                ratio = val / bound
    dt = time.perf_counter() - t0
    report(12, excess <= 1e-9 and ratio >= 0.95,
           f"max(oracle - bound) {excess:.1e}, depth-5 ratio at (0, eps^2) {ratio:.4f}", dt, 300.0)


def test_criterion_13_conjecture_n1():
    rng = np.random.default_rng(SEED)
    eps_all = rng.uniform(0.01, 0.97, 20)
    t0 = time.perf_counter()
    worst = 0.0
    flagged = True
    for eps in eps_all:
        rec = conjectured_nd(eps, 1)
        worst = max(worst, abs(rec.c_nd - c_dyadic(eps)) / c_dyadic(eps),
                    abs(rec.delta_plus_nd - delta_root(eps, "plus").root),
                    abs(rec.delta_minus_nd - delta_root(eps, "minus").root))
        flagged &= all(conjectured_nd(eps, n).conjectural for n in (2, 3))
    dt = time.perf_counter() - t0
    report(13, worst <= 1e-10 and flagged, f"max deviation {worst:.1e}, n >= 2 flagged", dt, 1.0)


def test_criterion_14_splitting():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = -math.inf
    floor_ok = True
    branches = {}
    for ratio in (1.1, 1.5, 2.0):
        for _ in range(1000):
            eps = rng.uniform(0.05, 0.95)
            eps1 = ratio * eps
            phi = random_log_family(rng, eps)
            res = split_interval(phi, eps, eps1)
            seg = max_spread_on_segment(tuple(res.x_minus), tuple(res.x_plus))
            worst = max(worst, seg - eps1 * eps1, res.rho_value - eps1 * eps1)
            branches[res.branch] = branches.get(res.branch, 0) + 1
            if res.branch == "tangent":
                floor = math.sqrt(1 - (eps / eps1) ** 2)
                floor_ok &= floor - 1e-9 <= res.alpha_plus <= 1 - floor + 1e-9
            else:
                floor_ok &= res.alpha_plus == 0.5
    dt = time.perf_counter() - t0
    report(14, worst <= 1e-9 and floor_ok,
           f"max rho - eps1^2 {worst:.1e}, branches {branches}", dt, 10.0)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
