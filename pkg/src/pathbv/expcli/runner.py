"""Execute an ExperimentConfig and persist its report."""

from __future__ import annotations

import math
import os
import time

import numpy as np

from .. import __version__
from .. import estimators as est
from .. import reflect_ou as rou
from ..gauss_path import PathSample, TimeGrid, dump_path_csv
from ..geometry import check_uebc
from ..hitting1d import EtaLaw, eta_tail, eta_tail_upper_bound
from ..rng import stream
from .report import Cell, RunReport, SlopeRow, emit_report

PARAM_NAME = {"survival": "u", "shell": "r", "bridge_shell": "r", "two_window": "r",
              "bv_sequence": "n", "reflect_chain": "i", "uebc_check": "delta",
              "hitting_tables": "u"}
DEFAULT_SLOPE_TOL = {"shell": 0.15, "bridge_shell": 0.15, "two_window": 0.25}
N_DUMP = 4


def _label(v):
    return "[" + ",".join(repr(float(c)) for c in v) + "]"


def _delta(cfg, domain):
    return cfg.delta if cfg.delta is not None else domain.admissible_delta


def _slope_checks(report, name, rs, estimates, expected, tol, ratio_max=None):
    fit = est.fit_loglog_slope(list(zip(rs, [e.value for e in estimates])))
    report.slopes.append(SlopeRow(name, fit, expected, tol, est.verdict_slope(fit, expected, tol)))
    if ratio_max is not None:
        spread = est.ratio_spread(estimates, rs)
        v = est.Verdict(spread <= ratio_max, ratio_max - spread, f"max/min of value/r <= {ratio_max:g}")
        report.verdicts.append((f"{name}:ratio", v))
        report.extra.setdefault("ratio_spread", {})[name] = spread


def _run_survival(cfg, domain, report):
    delta = _delta(cfg, domain)
    for x in cfg.points:
        for u in cfg.u_list:
            grid = TimeGrid.uniform(cfg.steps_log2, u)
            e = est.estimate_survival(domain, x, u, cfg.n_paths, grid, cfg.seed, cfg.workers)
            bound = est.survival_bound(domain, x, u, delta)
            report.cells.append(Cell(f"x={_label(x)},u={u!r}", u, e.value, e.stderr, bound,
                                     est.verdict_bound(e, bound, cfg.k_sigma), e.meta))


def _run_shell(cfg, domain, report):
    u = cfg.u_list[0]
    grid = TimeGrid.uniform(cfg.steps_log2, u)
    tol = cfg.slope_tol or DEFAULT_SLOPE_TOL["shell"]
    for x in cfg.points:
        curve = est.estimate_shell_curve(domain, x, u, cfg.r_list, cfg.n_paths, grid, cfg.seed,
                                         cfg.workers)
        for r, e in zip(cfg.r_list, curve):
            report.cells.append(Cell(f"x={_label(x)},r={r!r}", r, e.value, e.stderr, meta=e.meta))
        _slope_checks(report, f"shell x={_label(x)}", cfg.r_list, curve, 1.0, tol, cfg.ratio_max)


def _run_bridge_shell(cfg, domain, report):
    grid = TimeGrid.uniform(cfg.steps_log2)
    curve = est.estimate_bridge_shell_curve(domain, cfg.a, cfg.b, cfg.r_list, cfg.n_paths, grid,
                                            cfg.seed, cfg.workers)
    for r, e in zip(cfg.r_list, curve):
        report.cells.append(Cell(f"r={r!r}", r, e.value, e.stderr, meta=e.meta))
    tol = cfg.slope_tol or DEFAULT_SLOPE_TOL["bridge_shell"]
    _slope_checks(report, "bridge_shell", cfg.r_list, curve, 1.0, tol, cfg.ratio_max)


def _run_two_window(cfg, domain, report):
    grid = TimeGrid.uniform(cfg.steps_log2)
    curve = est.estimate_two_window_curve(domain, cfg.a, cfg.b, cfg.s1, cfg.s2, cfg.r_list,
                                          cfg.n_paths, grid, cfg.seed, cfg.workers)
    for r, e in zip(cfg.r_list, curve):
        one = e.meta["one_window"]
        slack = cfg.k_sigma * e.meta["paired_diff_stderr"]
        v = est.Verdict(e.value - slack <= one, one - e.value,
                        f"two-window - {cfg.k_sigma:g}*paired stderr <= one-window")
        report.cells.append(Cell(f"r={r!r}", r, e.value, e.stderr, one, v, e.meta))
    tol = cfg.slope_tol or DEFAULT_SLOPE_TOL["two_window"]
    _slope_checks(report, "two_window", cfg.r_list, curve, 2.0, tol)


def _run_bv_sequence(cfg, domain, report):
    grid = TimeGrid.uniform(cfg.steps_log2)
    seq = est.estimate_bv_gradient_sequence(domain, cfg.a, cfg.b, cfg.n_list, cfg.n_paths, grid,
                                            cfg.seed, cfg.workers)
    verdict = est.verdict_bounded_sequence(seq, cfg.bounded_factor)
    bound = cfg.bounded_factor * float(np.median([e.value for e in seq]))
    for k, e in zip(cfg.n_list, seq):
        v = est.Verdict(e.value <= bound, bound - e.value, verdict.rule)
        report.cells.append(Cell(f"n={k}", k, e.value, e.stderr, bound, v, e.meta))
    report.verdicts.append(("bv_sequence:bounded", verdict))


def _run_reflect_chain(cfg, domain, report):
    form = rou.build_discretization(domain, cfg.a, cfg.b, cfg.m)
    res = rou.run_chain(form, cfg.T, cfg.dt, cfg.burn_in, cfg.seed, cfg.reflection)
    occ = res.occupation
    d = form.dim
    tv = None
    if cfg.oracle_samples:
        rs = rou.rejection_sample_constrained_bridge(domain, cfg.a, cfg.b, cfg.m,
                                                     cfg.oracle_samples, seed=cfg.seed)
        ref = np.stack([[np.histogram(rs.samples[:, i, k], bins=occ.edges[k])[0]
                         for k in range(d)] for i in range(cfg.m)])
        tv = rou.total_variation(occ.hist, ref)
        report.extra["oracle_acceptance_rate"] = rs.rate
        report.extra["oracle_acceptance_stderr"] = rs.rate_stderr
    for i in range(cfg.m):
        for k in range(d):
            name = f"i={i},k={k}"
            if tv is None:
                report.cells.append(Cell(f"mean {name}", i, float(occ.mean[i, k]),
                                         float(occ.mean_stderr[i, k])))
            else:
                t = float(tv[i, k])
                v = est.Verdict(t <= cfg.tv_max, cfg.tv_max - t, f"TV <= {cfg.tv_max:g}")
                report.cells.append(Cell(f"tv {name}", i, t, 0.0, cfg.tv_max, v))
    frac = res.profile.multi_window_fraction
    if cfg.fraction_max is not None:
        v = est.Verdict(frac <= cfg.fraction_max, cfg.fraction_max - frac,
                        f"multi-window fraction <= {cfg.fraction_max:g}")
        report.verdicts.append(("reflect_chain:multi_window", v))
    report.extra["chain"] = res.summary()


def _run_uebc(cfg, domain, report):
    rep = check_uebc(domain, cfg.delta, cfg.n_boundary_samples, rng_seed=cfg.seed)
    bound = 1e-9 * max(1.0, cfg.delta)
    v = est.Verdict(bool(rep.passed), bound - rep.worst_violation, "worst violation <= 1e-9*max(1,delta)")
    report.cells.append(Cell(f"delta={cfg.delta!r}", cfg.delta, rep.worst_violation, 0.0, bound, v,
                             rep.to_dict()))


def _run_hitting_tables(cfg, domain, report):
    delta = _delta(cfg, domain)
    K = (domain.dim - 1) / (2.0 * delta) if math.isfinite(delta) else 0.0
    for r in cfg.r_list:
        law = EtaLaw(r, K)
        for u in cfg.u_list:
            tail = eta_tail(u, law)
            bound = eta_tail_upper_bound(u, law)
            v = est.Verdict(tail <= bound * (1 + 1e-12), bound - tail, "P[eta > u] <= bound")
            report.cells.append(Cell(f"r={r!r},u={u!r}", u, tail, 0.0, bound, v, {"K": K, "r": r}))


RUNNERS = {"survival": _run_survival, "shell": _run_shell, "bridge_shell": _run_bridge_shell,
           "two_window": _run_two_window, "bv_sequence": _run_bv_sequence,
           "reflect_chain": _run_reflect_chain, "uebc_check": _run_uebc,
           "hitting_tables": _run_hitting_tables}


def dump_paths(cfg, domain, directory):
    """Write the first few paths the estimators see (block 0 of the same stream)."""
    if cfg.kind in ("survival", "shell"):
        starts = [(np.asarray(x, float), None, TimeGrid.uniform(cfg.steps_log2, cfg.u_list[0]))
                  for x in cfg.points[:1]]
    elif cfg.kind in ("bridge_shell", "two_window", "bv_sequence"):
        grid = TimeGrid.uniform(cfg.steps_log2)
        if cfg.kind == "two_window":
            grid = TimeGrid.refined(grid, [cfg.s1, cfg.s2])
        starts = [(np.asarray(cfg.a, float), None if cfg.b is None else np.asarray(cfg.b, float),
                   grid)]
    else:
        return []
    written = []
    os.makedirs(directory, exist_ok=True)
    for start, end, grid in starts:
        setup = est.PathSetup(domain, start, end, grid, np.array([0.0]))
        tag = est.TAG_BM if end is None else est.TAG_BRIDGE
        pts, _ = setup.simulate_block(stream(cfg.seed, tag, 0), N_DUMP)
        for j in range(N_DUMP):
            fn = os.path.join(directory, f"path_{j}.csv")
            dump_path_csv(PathSample(grid, pts[j], {"kind": cfg.kind}), fn)
            written.append(fn)
    return written


def run_experiment(cfg, out=None, dump=False):
    """Run every cell of ``cfg`` and write the report to ``out`` (default cfg.out).

    If a cell raises, a report flagged incomplete is written before the
    exception propagates.
    """
    out = out or cfg.out
    domain = cfg.domain_obj()
    report = RunReport(cfg.to_dict(), cfg.kind, PARAM_NAME[cfg.kind], cfg.seed, __version__)
    report.extra["one_sided"] = cfg.one_sided
    t0 = time.perf_counter()
    try:
        if dump:
            report.extra["dumped_paths"] = dump_paths(cfg, domain, os.path.join(out, "paths"))
        RUNNERS[cfg.kind](cfg, domain, report)
    except BaseException as exc:
        report.complete = False
        report.error = f"{type(exc).__name__}: {exc}"
        report.wall_clock = time.perf_counter() - t0
        emit_report(report, out)
        raise
    report.wall_clock = time.perf_counter() - t0
    emit_report(report, out)
    return report
