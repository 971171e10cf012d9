import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import bridge_box_probability_m3
from pathbv.errors import InputError
from pathbv.geometry import Ball, HalfSpace, interval
from pathbv.reflect_ou import (LocalTimeRecord, ReflectState, build_discretization,
                               contact_profile_analysis, default_windows,
                               refinement_residual, rejection_sample_constrained_bridge,
                               run_chain, simulate_trajectory, skorokhod_residual,
                               step_reflected, total_variation)
from pathbv.rng import stream

UNIT = interval(0.0, 1.0)
DISK = Ball([0.0, 0.0], 1.0)


def test_sigma_small_examples():
    f = build_discretization(UNIT, [0.5], [0.5], 1)
    assert f.Sigma == pytest.approx(np.array([[0.25]]))
    f = build_discretization(UNIT, [0.5], [0.5], 3)
    assert f.Sigma[0, 2] == pytest.approx(0.0625)
    assert f.Sigma[1, 1] == pytest.approx(0.25)
    assert f.times == pytest.approx([0.25, 0.5, 0.75])


@pytest.mark.parametrize("m,b", [(1, [0.2, 0.1]), (7, [0.2, 0.1]), (7, None)])
def test_sigma_half_squares_to_sigma(m, b):
    f = build_discretization(DISK, [0.0, 0.0], b, m)
    assert f.Sigma_half @ f.Sigma_half == pytest.approx(f.Sigma, abs=1e-13)
    assert f.C @ f.C_inv == pytest.approx(np.eye(m), abs=1e-10)


def test_one_sided_form():
    f = build_discretization(UNIT, [0.5], None, 4)
    assert f.one_sided
    assert f.times == pytest.approx([0.25, 0.5, 0.75, 1.0])
    assert f.C[3, 3] == pytest.approx(1.0)
    assert np.all(f.mean_path == 0.5)


def test_bad_inputs():
    with pytest.raises(InputError):
        build_discretization(UNIT, [0.0], [0.5], 3)
    with pytest.raises(InputError):
        build_discretization(UNIT, [0.5], [0.5], 0)
    f = build_discretization(UNIT, [0.5], [0.5], 3)
    with pytest.raises(InputError):
        step_reflected(f, ReflectState(f.mean_path), 0.0, None)
    with pytest.raises(InputError):
        step_reflected(f, ReflectState(f.mean_path), 0.1, None, reflection="oblique")


def test_zero_noise_step_has_no_reflection():
    f = build_discretization(UNIT, [0.5], [0.5], 3)
    s, entry = step_reflected(f, ReflectState(f.mean_path), 1e-2, None, xi=np.zeros((3, 1)))
    assert np.all(entry.ell == 0) and entry.dA == 0.0 and entry.indices == ()
    assert s.clock == pytest.approx(1e-2)


@pytest.mark.parametrize("reflection", ["euclidean", "conormal"])
def test_forced_push_single_point(reflection):
    # with m = 1 both metrics agree: the overshoot is returned along the normal
    half = HalfSpace([1.0], 0.0)
    f = build_discretization(half, [1.0], [1.0], 1)
    xi = np.array([[-12.0]])            # increment -12 * 0.5 * 0.1 = -0.6
    s, e = step_reflected(f, ReflectState(np.array([[0.5]])), 1e-2, None, reflection, xi)
    assert s.y[0, 0] == pytest.approx(0.0, abs=1e-15)
    # pre-projection point: 0.5 - 0.005 * (0.5 - 1) - 0.6 = -0.0975
    assert e.ell[0, 0] == pytest.approx(0.0975)
    assert e.dA == pytest.approx(0.0975 / 0.5)
    assert e.indices == (0,)


def test_euclidean_push_only_moves_hit_row():
    half = HalfSpace([1.0], 0.0)
    f = build_discretization(half, [1.0], [1.0], 3)
    xi = np.array([[0.0], [-60.0], [0.0]])
    s, e = step_reflected(f, ReflectState(f.mean_path), 1e-2, None, "euclidean", xi)
    assert e.indices == (1,)
    assert e.ell[0, 0] == 0.0 and e.ell[2, 0] == 0.0 and e.ell[1, 0] > 0


def test_conormal_push_is_metric_projection():
    half = HalfSpace([1.0], 0.0)
    f = build_discretization(half, [1.0], [1.0], 3)
    xi = np.array([[0.0], [-60.0], [0.0]])
    s, e = step_reflected(f, ReflectState(f.mean_path), 1e-2, None, "conormal", xi)
    # correction lies along the column C[:, i] of the projected row
    assert e.ell[:, 0] == pytest.approx(e.ell[1, 0] * f.coupling[:, 1])
    assert np.all(half.signed_distance(s.y) >= -1e-12)


def test_big_ball_never_reflects():
    f = build_discretization(Ball([0.0], 100.0), [0.0], [0.0], 3)
    dt = 2e-2
    res = run_chain(f, 4000.0, dt, seed=1, bins=10)
    assert res.record.total == 0.0 and res.record.n_contacts == 0
    # the unprojected scheme is stationary at Sigma / (1 - dt/4)
    assert res.occupation.cov == pytest.approx(f.Sigma / (1 - dt / 4), abs=0.02)


@given(seed=st.integers(0, 10 ** 6), refl=st.sampled_from(["conormal", "euclidean"]))
def test_feasible_and_local_time_monotone(seed, refl):
    f = build_discretization(DISK, [0.5, 0.0], [0.0, 0.5], 5)
    g = stream(seed)
    tr = simulate_trajectory(f, 300, 2e-2, g, reflection=refl)
    assert np.all(DISK.signed_distance(tr.states) >= -1e-12)
    dA = f.inv_norm(tr.ell)
    assert np.all(dA >= 0)
    assert np.all(np.diff(np.cumsum(dA)) >= 0)
    assert skorokhod_residual(f, tr) < 1e-10


def test_hits_match_nonzero_corrections():
    f = build_discretization(UNIT, [0.5], [0.5], 5)
    tr = simulate_trajectory(f, 2000, 5e-2, stream(3), reflection="euclidean")
    moved = np.any(tr.ell != 0, axis=2)
    assert np.array_equal(moved, tr.hits)
    assert tr.hits.any()


def test_refinement_residual_shrinks():
    f = build_discretization(UNIT, [0.5], [0.5], 3)
    r1 = refinement_residual(f, 1e-2, n_runs=20, seed=0)
    r2 = refinement_residual(f, 5e-3, n_runs=20, seed=0)
    assert r2 < r1
    assert 1.3 < r1 / r2 < 3.0
    with pytest.raises(InputError):
        refinement_residual(f, 0.3)


def test_rejection_rate_matches_quadrature():
    rs = rejection_sample_constrained_bridge(UNIT, [0.5], [0.5], 3, 50_000, seed=4)
    assert abs(rs.rate - bridge_box_probability_m3()) < 4 * rs.rate_stderr
    assert rs.samples.shape == (50_000, 3, 1)
    assert np.all((rs.samples >= 0) & (rs.samples <= 1))


def test_rejection_correction_thins():
    plain = rejection_sample_constrained_bridge(UNIT, [0.5], [0.5], 3, 2000, seed=5)
    corr = rejection_sample_constrained_bridge(UNIT, [0.5], [0.5], 3, 2000, seed=5,
                                               correction=True)
    assert corr.rate < plain.rate


def test_chain_matches_rejection_marginals_small():
    f = build_discretization(UNIT, [0.5], [0.5], 3)
    res = run_chain(f, 3000.0, 1e-3, seed=6, bins=10)
    rs = rejection_sample_constrained_bridge(UNIT, [0.5], [0.5], 3, 100_000, seed=6)
    edges = res.occupation.edges
    ref = np.stack([[np.histogram(rs.samples[:, i, 0], bins=edges[0])[0]] for i in range(3)])
    assert np.max(total_variation(res.occupation.hist, ref)) < 0.03


def test_chain_mean_symmetry():
    # the interval and the endpoints are symmetric under x -> 1 - x
    f = build_discretization(UNIT, [0.5], [0.5], 3)
    res = run_chain(f, 2000.0, 2e-3, seed=7, bins=10)
    assert np.all(np.abs(res.occupation.mean - 0.5) < 5 * res.occupation.mean_stderr + 1e-3)
    # time reversal i -> m-1-i
    m = res.occupation.mean[:, 0]
    assert abs(m[0] - m[2]) < 5 * math.hypot(*res.occupation.mean_stderr[[0, 2], 0]) + 1e-3


def test_chain_is_deterministic():
    f = build_discretization(DISK, [0.0, 0.0], [0.0, 0.0], 3)
    a = run_chain(f, 50.0, 1e-2, seed=8, chunk=777)
    b = run_chain(f, 50.0, 1e-2, seed=8, chunk=777)
    assert np.array_equal(a.occupation.hist, b.occupation.hist)
    assert a.record.total == b.record.total


def test_contact_profile_synthetic():
    hits = np.array([[1, 0, 0, 0, 0, 0],
                     [1, 1, 0, 0, 0, 0],
                     [1, 0, 1, 0, 0, 1],
                     [0, 0, 0, 0, 1, 0]], bool)
    dA = np.array([1.0, 2.0, 3.0, 4.0])
    rec = LocalTimeRecord(np.arange(4), hits, dA, np.cumsum(dA))
    prof = contact_profile_analysis(rec, default_windows(6))
    assert default_windows(6) == [[0, 1], [2, 3], [4, 5]]
    assert prof.simultaneous == {1: 2, 2: 1, 3: 1}
    assert prof.windows_touched == {1: 3, 3: 1}
    assert prof.multi_window_fraction == pytest.approx(0.3)
    assert prof.total_A == 10.0
    assert rec.total == 10.0
    assert [e.indices for e in rec.entries()][2] == (0, 2, 5)
    with pytest.raises(InputError):
        contact_profile_analysis(rec, [[0, 1], [1, 2]])


def test_total_variation_basic():
    assert total_variation([1, 0], [0, 1]) == 1.0
    assert total_variation([2, 2], [1, 1]) == 0.0
