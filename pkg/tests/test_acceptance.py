"""Exit criteria at full desk scale. Each test records one PASS/FAIL line.

Criteria whose tolerance is out of reach at the prescribed radii are marked
``xfail(strict=True)``: the exact reference values already miss the
tolerance, so the failure is a property of the check, not of sampling.
"""

import math

import numpy as np
import pytest
from scipy import stats

import conftest
from oracles import bm_interval_shell, bridge_box_probability_m3, bridge_interval_shell
from pathbv.estimators import (estimate_bridge_shell_curve, estimate_bv_gradient_sequence,
                               estimate_survival, estimate_two_window_curve, fit_loglog_slope,
                               ratio_spread, survival_bound, verdict_bound,
                               verdict_bounded_sequence, verdict_slope)
from pathbv.expcli.config import config_from_dict
from pathbv.expcli.runner import run_experiment
from pathbv.gauss_path import TimeGrid
from pathbv.geometry import Ball, interval
from pathbv.hitting1d import (EtaLaw, TwoSidedExit, bessel_domination_check, eta_atom, eta_mass,
                              eta_tail, euler_upper_laplace, exit_upper_laplace, sample_eta)
from pathbv.reflect_ou import (build_discretization, refinement_residual,
                               rejection_sample_constrained_bridge, run_chain,
                               simulate_trajectory, skorokhod_residual, total_variation)
from pathbv.rng import stream

pytestmark = pytest.mark.acceptance

UNIT = interval(0.0, 1.0)
DISK = Ball([0.0, 0.0], 1.0)
SHELL_RS = [0.02, 0.04, 0.08]
BV_NS = [4, 8, 16, 32, 64, 128, 256]
N_BIG = 10 ** 6
N_BV = 200_000
GRID = TimeGrid.uniform(10)


def record(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    return passed


def info(criterion, detail):
    conftest.ACCEPTANCE_LINES.append(f"[INFO] criterion {criterion}: {detail}")


def shell_rate_check(label, domain, a, b, seed):
    curve = estimate_bridge_shell_curve(domain, a, b, SHELL_RS, N_BIG, GRID, seed)
    fit = fit_loglog_slope(list(zip(SHELL_RS, [e.value for e in curve])))
    slope_ok = verdict_slope(fit, 1.0, 0.15).passed
    spread = ratio_spread(curve, SHELL_RS)
    ok = slope_ok and spread <= 1.5
    vals = ", ".join(f"{e.value:.5f}" for e in curve)
    return ok, f"{label}: values [{vals}] slope {fit.slope:.3f} (1 +- 0.15), max/min {spread:.3f} (<= 1.5)"


def bv_check(label, domain, a, b, seed):
    seq = estimate_bv_gradient_sequence(domain, a, b, BV_NS, N_BV, GRID, seed)
    v = verdict_bounded_sequence(seq, 2.0)
    vals = [e.value for e in seq]
    return v.passed, f"{label}: max {max(vals):.4f} vs 2 x median {2 * np.median(vals):.4f}"


def test_criterion_1_survival_bound():
    fails, worst = 0, -math.inf
    for x in ([0.0, 0.0], [0.5, 0.0], [0.9, 0.0]):
        for u in (0.25, 1.0, 4.0):
            e = estimate_survival(DISK, x, u, 10 ** 5, TimeGrid.uniform(9, u), seed=1)
            v = verdict_bound(e, survival_bound(DISK, x, u, 1.0), 4.0)
            fails += not v.passed
            worst = max(worst, -v.margin)
    ok = record(1, fails == 0, f"{9 - fails}/9 cells within bound + 4 stderr "
                               f"(largest excess {worst:.4f}, negative means slack)")
    assert ok


def test_criterion_2_closed_form_laws():
    norm_err = max(abs(eta_mass(0, math.inf, EtaLaw(r, K)) + eta_atom(EtaLaw(r, K)) - 1)
                   for r in (0.05, 0.3, 1.0, 3.0) for K in (0.0, 0.5, 2.0))
    tail_err = max(abs(eta_tail(u, EtaLaw(r, 0.0)) - (2 * stats.norm.cdf(r / math.sqrt(u)) - 1))
                   for r in (0.05, 0.3, 1.0, 3.0) for u in (0.01, 0.5, 1.0, 10.0))
    r = 0.7
    x = sample_eta(EtaLaw(r, 0.0), stream(2), 10 ** 6)
    ks = stats.kstest(x, lambda t: 2 * (1 - stats.norm.cdf(r / np.sqrt(t)))).statistic
    e = TwoSidedExit(0.5, 1.0, 1.0)
    mean, se = euler_upper_laplace(1.0, e, 400_000, 1e-4, seed=2)
    exact = exit_upper_laplace(1.0, e)
    checks = [norm_err < 1e-8, tail_err < 1e-8, ks < 0.002, abs(mean - exact) <= 4 * se]
    ok = record(2, all(checks),
                f"normalization err {norm_err:.1e}, K=0 tail err {tail_err:.1e}, KS {ks:.5f} "
                f"(< 0.002), exit transform {exact:.5f} vs Euler {mean:.5f} +- {se:.5f}")
    assert ok


@pytest.mark.xfail(strict=True, reason="1-D exact shell slope over r in {0.02,0.04,0.08} is 0.713")
def test_criterion_3_bridge_shell_rate():
    ok1, d1 = shell_rate_check("(0,1)", UNIT, [0.5], [0.5], 3)
    ok2, d2 = shell_rate_check("disk", DISK, [0.0, 0.0], [0.0, 0.0], 3)
    exact = fit_loglog_slope([(r, bridge_interval_shell(0.5, 0.5, r)) for r in SHELL_RS]).slope
    ok = record(3, ok1 and ok2, f"{d1}; exact 1-D slope {exact:.3f}; {d2}")
    assert ok


@pytest.mark.xfail(strict=True, reason="two-window slope over r in {0.05,0.1,0.2} is about 1.59")
def test_criterion_4_two_window_rate():
    rs = [0.05, 0.1, 0.2]
    curve = estimate_two_window_curve(UNIT, [0.5], [0.5], 1 / 3, 2 / 3, rs, N_BIG, GRID, seed=4)
    fit = fit_loglog_slope(list(zip(rs, [e.value for e in curve])))
    sub = all(e.value <= e.meta["one_window"] for e in curve)
    ok = record(4, verdict_slope(fit, 2.0, 0.25).passed and sub,
                f"slope {fit.slope:.3f} +- {fit.slope_stderr:.3f} (2 +- 0.25), "
                f"two-window <= one-window on shared seeds: {sub}")
    assert ok


def test_criterion_5_bv_bounded():
    ok1, d1 = bv_check("(0,1)", UNIT, [0.5], [0.5], 5)
    ok2, d2 = bv_check("disk", DISK, [0.0, 0.0], [0.0, 0.0], 5)
    ok = record(5, ok1 and ok2, f"{d1}; {d2}")
    assert ok


def test_criterion_6_domination():
    reps = [bessel_domination_check(2, 1.0, 0.1, 1.0, 10 ** 4, dt, seed=6)
            for dt in (1e-3, 5e-4, 2.5e-4)]
    rates = [r.violation_rate for r in reps]
    ok = all(a >= 1.5 * b for a, b in zip(rates, rates[1:]))
    note = " (all zero, the halving holds trivially)" if not any(rates) else ""
    record(6, ok, "violation rates beyond 3 sqrt(dt) log(1/dt): "
                  + ", ".join(f"{r:.4f}" for r in rates) + note)
    info(6, "zero-tolerance violation rates "
            + ", ".join(f"{r.raw_violation_rate:.4f}" for r in reps) + " (O(dt) overshoot)")
    assert ok


def test_criterion_7_reflecting_ou():
    form = build_discretization(UNIT, [0.5], [0.5], 3)
    tr = simulate_trajectory(form, 20_000, 1e-3, stream(7))
    tele = skorokhod_residual(form, tr)
    r1 = refinement_residual(form, 1e-2, seed=0)
    r2 = refinement_residual(form, 5e-3, seed=0)
    res = run_chain(form, 2e4, 1e-3, seed=7, bins=20)
    rs = rejection_sample_constrained_bridge(UNIT, [0.5], [0.5], 3, 2 * 10 ** 6, seed=7)
    edges = res.occupation.edges[0]
    ref = np.stack([[np.histogram(rs.samples[:, i, 0], bins=edges)[0]] for i in range(3)])
    tv = float(np.max(total_variation(res.occupation.hist, ref)))
    quad = bridge_box_probability_m3()
    checks = [tele < 1e-10, r1 / r2 >= 1.2, tv <= 0.02,
              abs(rs.rate - quad) <= 4 * rs.rate_stderr]
    ok = record(7, all(checks),
                f"(i) telescoping {tele:.1e}; (ii) residual ratio {r1 / r2:.2f} (>= 1.2); "
                f"(iii) max TV {tv:.4f} (<= 0.02); (iv) rate {rs.rate:.5f} +- "
                f"{rs.rate_stderr:.5f} vs {quad:.5f}")
    assert ok


def test_criterion_8_contact_concentration():
    fr = {}
    for m in (7, 15, 31):
        dt = 0.128 / (m + 1) ** 2
        form = build_discretization(UNIT, [0.5], [0.5], m)
        fr[m] = run_chain(form, 1000.0, dt, seed=8, bins=10).profile.multi_window_fraction
    ok = fr[15] < 0.05 and fr[7] >= fr[15] >= fr[31]
    record(8, ok, "multi-window local-time fraction with dt = 0.128/(m+1)^2: "
                  + ", ".join(f"m={m} {v:.4f}" for m, v in fr.items()))
    form = build_discretization(UNIT, [0.5], [0.5], 15)
    fixed = run_chain(form, 300.0, 1e-3, seed=8, bins=10).profile.multi_window_fraction
    info(8, f"at fixed dt = 1e-3, m=15 fraction {fixed:.4f}")
    assert ok


@pytest.mark.xfail(strict=True, reason="one-sided 1-D exact shell slope is 0.674, ratio 1.57")
def test_criterion_9_one_sided():
    ok1, d1 = shell_rate_check("(0,1)", UNIT, [0.5], None, 9)
    ok2, d2 = shell_rate_check("disk", DISK, [0.0, 0.0], None, 9)
    ok3, d3 = bv_check("bv (0,1)", UNIT, [0.5], None, 9)
    ok4, d4 = bv_check("bv disk", DISK, [0.0, 0.0], None, 9)
    exact = fit_loglog_slope([(r, bm_interval_shell(0.5, r)) for r in SHELL_RS]).slope
    ok = record(9, all((ok1, ok2, ok3, ok4)),
                f"shell {d1}; exact 1-D slope {exact:.3f}; shell {d2}; {d3}; {d4}")
    assert ok


def test_criterion_10_determinism(tmp_path):
    base = {"kind": "bv_sequence", "domain": DISK.to_dict(), "a": [0.0, 0.0], "b": [0.0, 0.0],
            "n_list": BV_NS, "n_paths": 100_000, "steps_log2": 10, "seed": 10}
    outs = {}
    for w in (1, 3):
        run_experiment(config_from_dict(dict(base, workers=w)), out=str(tmp_path / f"w{w}"))
        outs[w] = [(tmp_path / f"w{w}" / n).read_bytes() for n in ("cells.csv", "slopes.csv")]
    ok = record(10, outs[1] == outs[3], "bv_sequence CSVs with 1 and 3 workers are "
                + ("bitwise identical" if outs[1] == outs[3] else "DIFFERENT"))
    assert ok
