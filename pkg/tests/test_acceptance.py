"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line (the lines are
also repeated in the terminal summary) and then asserts the criterion at its
stated tolerance. ``python tests/test_acceptance.py`` runs them standalone.
"""

import math
import sys

import numpy as np
import pytest

from paffine import (Ball, Ellipsoid, FloatingProfile, FourierBody2D, McConfig, mc_phi,
                     mc_volume, o_p, phi, polar, polar_volume, santalo_radial, theorem6_estimate,
                     theorem6_rhs, theorem8_estimate, theorem8_rhs)
from paffine.errors import DenominatorUnderflow
from paffine.geometry import chord_length, polar_for_slices
from paffine.quadrature import default_rule, gauss_legendre, unit_ball_volume
from paffine.santalo import (covariance_residual, eq1_residual, lemma5, lemma5_J_bound,
                             prop4_check, prop7_log_rate, prop7_ratio)
from paffine.surface import duality_residual

RESULTS: dict[int, str] = {}


def report(k: int, ok: bool, detail: str) -> bool:
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[k] = line
    print(line)
    return ok


DISC = Ball(2, 1.0)
ELLIPSE = Ellipsoid(np.diag([2.0, 1.0]))
FOURIER = FourierBody2D([1.0, 0.0, 0.1])


def test_criterion_1_o_p_of_balls():
    worst = 0.0
    for n in (2, 3):
        target = n * unit_ball_volume(n)
        for p in (-1.5, -1, 0, 1, 2, 100):
            worst = max(worst, abs(o_p(Ball(n, 1.0), p) - target))
    assert report(1, worst <= 1e-10, f"max |O_p(B) - n v_n| = {worst:.2e} (tol 1e-10)")


def test_criterion_2_ellipse_closed_form():
    rng = np.random.default_rng(20)
    ident = 0.0
    for A in [np.diag([2.0, 1.0]), rng.normal(size=(2, 2)) + 2 * np.eye(2)]:
        rule = default_rule(2)
        val = rule.integrate(np.linalg.norm(rule.nodes @ A, axis=1) ** -2)
        ident = max(ident, abs(val - 2 * math.pi / abs(np.linalg.det(A))) / val)
    worst = 0.0
    for p in (0, 1, 2, 4):
        exact = 2 * math.pi * 2 ** ((2 - p) / (2 + p))
        worst = max(worst, abs(o_p(ELLIPSE, p) - exact) / exact)
    ok = ident <= 1e-10 and worst <= 1e-8
    assert report(2, ok, f"oracle identity {ident:.2e} (tol 1e-10), max rel err {worst:.2e} "
                         "(tol 1e-8)")


def test_criterion_3_duality():
    ell = max(duality_residual(ELLIPSE, p) for p in (1, 2, 4))
    four = duality_residual(FOURIER, 2)
    ok = ell < 1e-8 and four < 1e-3
    assert report(3, ok, f"ellipse {ell:.2e} (tol 1e-8), Fourier p=2 {four:.2e} (tol 1e-3)")


ALPHAS = [0.1, 0.25, 0.5, 0.75, 0.9, 0.97, 0.99, 1 - 1e-3, 1 - 1e-4, 1 - 1e-5, 1 - 3e-6,
          1 - 1e-6]


def test_criterion_4_lemma5():
    problems = []
    for gamma, beta in ((0.5, 3.0), (1.0, 4.0)):
        I = np.array([lemma5(gamma, beta, a)[0] for a in ALPHAS])
        J = np.array([lemma5(gamma, beta, a)[1] for a in ALPHAS])
        bound = np.array([lemma5_J_bound(gamma, a) for a in ALPHAS])
        if np.any(I > 1):
            problems.append(f"I > 1 for {(gamma, beta)}")
        if I[-1] < 0.99:
            problems.append(f"I(1-1e-6) = {I[-1]:.6f} < 0.99")
        if np.any(J > bound):
            problems.append(f"J above bound for {(gamma, beta)}")
        if not np.all(np.diff(I[len(I) // 2:]) > 0):
            problems.append(f"I not increasing on tail for {(gamma, beta)}")
    ok = not problems
    assert report(4, ok, "; ".join(problems) or "I <= 1, I(1-1e-6) >= 0.99, J bound, monotone tail")


T_GRID = [1e2 * 10 ** (k / 2) for k in range(9)]


def test_criterion_5_theorem6():
    parts, ok = [], True
    for name, body, beta in (("disc", DISC, 2.0), ("disc", DISC, 3.0), ("ellipse", ELLIPSE, 3.0)):
        est = theorem6_estimate(body, beta, T_GRID)
        rhs = theorem6_rhs(body, beta).rhs
        err = abs(est.limit - rhs) / rhs
        ok &= err <= 0.02
        parts.append(f"{name} beta={beta:g} rel err {err:.2e}")
    eq1 = max(eq1_residual(b, 10.0, directions=32) for b in (DISC, ELLIPSE))
    ok &= eq1 <= 1e-10
    parts.append(f"polar-volume level set check {eq1:.2e}")
    assert report(5, ok, ", ".join(parts) + " (tol 2e-2 / 1e-10)")


def test_criterion_6_prop7():
    phi0 = polar_for_slices(DISC).volume()
    ratios, grid = [], []
    for k in range(12):
        t = 10 * phi0 * 2**k
        try:
            ratios.append(prop7_ratio(DISC, t))
        except DenominatorUnderflow:
            break
        grid.append(t)
    gaps = [abs(r - 1) for r in ratios]
    improving = all(b < a for a, b in zip(gaps, gaps[1:]))
    rate = prop7_log_rate(DISC, grid).limit
    target = 1 / math.sqrt(2)
    rate_err = abs(rate - target) / target
    ok = gaps[-1] <= 0.05 and improving and rate_err <= 0.05
    assert report(6, ok, f"ratio at t={grid[-1]:.0f}: {ratios[-1]:.4e} (need 1 +- 0.05), "
                         f"improving={improving}, log rate {rate:.5f} vs 1/sqrt2 "
                         f"(rel err {rate_err:.2e}, tol 5e-2)")


DELTAS = [10 ** (-2 - k / 2) for k in range(7)]


def test_criterion_7_theorem8():
    parts, ok = [], True
    for name, body in (("disc", DISC), ("ellipse", ELLIPSE)):
        r = theorem8_rhs(body)
        est = theorem8_estimate(body, DELTAS)
        err = abs(est.limit - r["rhs"]) / r["rhs"]
        cross = abs(r["rhs"] - r["o_p"])
        ok &= err <= 0.02 and cross <= 1e-8
        parts.append(f"{name} limit rel err {err:.2e}, O_(-8) cross {cross:.1e}")
    assert report(7, ok, ", ".join(parts) + " (tol 2e-2 / 1e-8)")


def _random_maps(rng, count):
    maps = []
    while len(maps) < count:
        L = rng.normal(size=(2, 2))
        d = abs(np.linalg.det(L))
        if d < 1e-3:
            continue
        L = L * math.sqrt(rng.uniform(0.5, 3.0) / d)
        if np.linalg.cond(L) > 6:
            continue
        maps.append((L, rng.normal(scale=0.5, size=2)))
    return maps


def test_criterion_8_covariance():
    rng = np.random.default_rng(8)
    worst = 0.0
    for body in (DISC, ELLIPSE):
        t = 100 * polar_for_slices(body).volume()
        for L, a in _random_maps(rng, 5):
            worst = max(worst, covariance_residual(body, L, a, 2.0, t))
    assert report(8, worst < 1e-6, f"max residual {worst:.2e} over 10 maps (tol 1e-6)")


def test_criterion_9_prop4():
    worst, runs = math.inf, 0
    for body in (DISC, FOURIER):
        pv = polar(body).volume()
        for beta in (1.5, 2.0, 3.0):
            floor = 2 * pv / (beta - 1)
            for factor in (2.0, 10.0, 100.0):
                rep = prop4_check(body, beta, factor * floor, directions=64)
                worst = min(worst, rep.min_margin)
                runs += 1
    assert report(9, worst >= 0, f"min margin {worst:.3e} over {runs} runs x 64 directions")


# ---------------------------------------------------------------------------
# criterion 10: randomized property suite
# ---------------------------------------------------------------------------


def _random_body(rng):
    if rng.random() < 0.4:
        M = rng.normal(size=(2, 2))
        M = M @ M.T + 0.5 * np.eye(2)
        return Ellipsoid(M)
    a = [1.0, 0.0, rng.uniform(-0.06, 0.06), rng.uniform(-0.03, 0.03)]
    b = [0.0, 0.0, rng.uniform(-0.06, 0.06), rng.uniform(-0.03, 0.03)]
    return FourierBody2D(a, b)


def _random_symmetric(rng):
    if rng.random() < 0.4:
        return Ellipsoid(np.diag(rng.uniform(0.5, 2.0, 2)))
    return FourierBody2D([1.0, 0.0, rng.uniform(-0.08, 0.08)], [0.0, 0.0, rng.uniform(-0.08, 0.08)])


def _unit(rng):
    th = rng.uniform(0, 2 * math.pi)
    return np.array([math.cos(th), math.sin(th)])


def prop_polar_radial(rng):
    K = _random_body(rng)
    U = np.array([_unit(rng) for _ in range(8)])
    err = np.max(np.abs(polar(K).radial(U) * K.support(U) - 1))
    return err <= 1e-10, f"radial law {err:.1e}"


def prop_cavalieri(rng):
    K = _random_body(rng)
    u = _unit(rng)
    hi, lo = K.support(u), -K.support(-u)
    mid, rad = 0.5 * (hi + lo), 0.5 * (hi - lo)
    x, w = gauss_legendre(200)
    phis = 0.5 * math.pi * (x + 1)
    s = mid - rad * np.cos(phis)
    vals = np.array([chord_length(K, u, si) for si in s])
    total = float(np.sum(vals * rad * np.sin(phis) * w) * 0.5 * math.pi)
    err = abs(total - K.volume()) / K.volume()
    return err <= 1e-8, f"Cavalieri {err:.1e}"


def prop_bipolar(rng):
    K = _random_body(rng)
    U = np.array([_unit(rng) for _ in range(8)])
    err = np.max(np.abs(polar(polar(K)).support(U) / K.support(U) - 1))
    return err <= 1e-9, f"bipolar {err:.1e}"


def prop_phi_convex(rng):
    K = _random_body(rng)
    beta = rng.uniform(1.6, 4.0)
    pts = []
    for _ in range(2):
        u = _unit(rng)
        pts.append(rng.uniform(0, 0.9) * K.radial(u) * u)
    m = 0.5 * (pts[0] + pts[1])
    lhs = phi(K, m, beta)
    rhs = 0.5 * (phi(K, pts[0], beta) + phi(K, pts[1], beta))
    return lhs <= rhs * (1 + 1e-10), f"Phi midpoint {lhs:.6g} <= {rhs:.6g}"


def prop_level_nesting(rng):
    K = _random_body(rng)
    beta = rng.uniform(1.6, 4.0)
    phi0 = polar_volume(K)
    t1 = phi0 * rng.uniform(4.0, 100.0)
    t2 = t1 * rng.uniform(1.0, 50.0)
    u = _unit(rng)
    r1 = santalo_radial(K, beta, t1, u)
    r2 = santalo_radial(K, beta, t2, u)
    r = K.radial(u)
    return r1 <= r2 * (1 + 1e-14) and r2 <= r * (1 + 1e-14), f"level sets {r1:.6g} <= {r2:.6g}"


def prop_floating_nesting(rng):
    K = _random_symmetric(rng)
    d1 = 10 ** rng.uniform(-6, -0.5)
    d2 = min(d1 * rng.uniform(1.01, 3.0), 0.49)
    u = _unit(rng)
    a1 = FloatingProfile(K, d1).heights(u[None, :])[0]
    a2 = FloatingProfile(K, d2).heights(u[None, :])[0]
    return a2 <= a1 <= K.support(u), f"floating {a2:.6g} <= {a1:.6g}"


def prop_mc_agreement(rng):
    K = _random_body(rng)
    cfg = McConfig(samples=100_000, seed=int(rng.integers(2**63)))
    if rng.random() < 0.5:
        est = mc_volume(K, cfg)
        exact = K.volume()
    else:
        beta = rng.uniform(1.5, 4.0)
        u = _unit(rng)
        x = rng.uniform(0, 0.7) * K.radial(u) * u
        est = mc_phi(K, x, beta, cfg)
        exact = phi(K, x, beta)
    z = abs(est.estimate - exact) / est.stderr
    return z <= 3, f"MC z-score {z:.2f}"


PROPERTIES = [prop_polar_radial, prop_cavalieri, prop_bipolar, prop_phi_convex,
              prop_level_nesting, prop_floating_nesting, prop_mc_agreement]


def test_criterion_10_property_suite():
    master = np.random.SeedSequence(20240610)
    failures = []
    for i, seq in enumerate(master.spawn(100)):
        prop = PROPERTIES[i % len(PROPERTIES)]
        rng = np.random.default_rng(seq)
        try:
            ok, detail = prop(rng)
        except Exception as exc:  # any exception counts as a failed trial
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        if not ok:
            failures.append(f"trial {i} {prop.__name__}: {detail}")
    assert report(10, not failures, f"{100 - len(failures)}/100 trials passed"
                  + ("" if not failures else "; " + "; ".join(failures[:3])))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
