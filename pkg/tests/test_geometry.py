import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from pathbv.errors import InputError, NumericalError, UnsupportedDeltaError
from pathbv.geometry import (Annulus, Ball, Box, ConvexPolytope, CuspUnion, DriftParams,
                             HalfSpace, check_uebc, domain_from_dict, exterior_ball_witness,
                             in_level_set, interval, project_to_closure, signed_distance)

DOMAINS_2D = {
    "ball": Ball([0.0, 0.0], 1.0),
    "halfspace": HalfSpace([1.0, 0.0], 0.0),
    "box": Box([0.0, 0.0], [1.0, 2.0]),
    "annulus": Annulus([0.0, 0.0], 1.0, 2.0),
    "polytope": ConvexPolytope([{"normal": [1, 0], "offset": 0}, {"normal": [0, 1], "offset": 0},
                                {"normal": [-1, -1], "offset": -1}]),
    "cusp": CuspUnion([[-1.0, 0.0], [1.0, 0.0]], [1.0, 1.0]),
}

coord = st.floats(-3, 3, allow_nan=False)
point2 = arrays(np.float64, 2, elements=coord)


def test_signed_distance_examples():
    ball = Ball([0, 0], 1.0)
    assert signed_distance(ball, [0.5, 0]) == pytest.approx(0.5)
    assert signed_distance(ball, [2, 0]) == pytest.approx(-1.0)
    assert signed_distance(HalfSpace([1.0], 0.0), [0.5]) == pytest.approx(0.5)


def test_level_set_examples():
    ball = Ball([0, 0], 1.0)
    assert in_level_set(ball, [0, 0], 0.5)
    assert not in_level_set(ball, [0.6, 0], 0.5)
    assert not in_level_set(ball, [1.0, 0], 0.0)
    with pytest.raises(InputError):
        in_level_set(ball, [0, 0], -0.1)


def test_witness_examples():
    w = exterior_ball_witness(Ball([0, 0], 1.0), [1, 0], 0.5)
    np.testing.assert_allclose(w.z, [1.5, 0])
    w = exterior_ball_witness(HalfSpace([1, 0], 0.0), [0, 3], 2.0)
    np.testing.assert_allclose(w.z, [-2, 3])
    w = exterior_ball_witness(Annulus([0, 0], 1, 2), [1, 0], 1.0)
    np.testing.assert_allclose(w.z, [0, 0], atol=1e-15)


def test_annulus_witness_touches_closure_at_contact_point():
    # dense search over the boundary: a witness of radius delta < r_in touches
    # the closure only at y
    dom = Annulus([0, 0], 1, 2)
    y = np.array([1.0, 0.0])
    z = exterior_ball_witness(dom, y, 0.6).z
    th = np.linspace(-math.pi, math.pi, 200001)
    circ = np.stack([np.cos(th), np.sin(th)], axis=1)
    d = np.linalg.norm(circ - z, axis=1)
    assert d.min() == pytest.approx(0.6, abs=1e-12)
    assert np.all(d[np.abs(th) > 1e-3] > 0.6)


def test_witness_errors():
    with pytest.raises(UnsupportedDeltaError):
        exterior_ball_witness(Annulus([0, 0], 1, 2), [1, 0], 1.5)
    with pytest.raises(InputError):
        exterior_ball_witness(Ball([0, 0], 1.0), [0.5, 0], 0.5)


def test_check_uebc_examples():
    assert check_uebc(Ball([0, 0], 1.0), 0.9, 100).passed
    rep = check_uebc(Annulus([0, 0], 1, 2), 1.5, 400)
    assert not rep.passed and rep.worst_violation > 0.9
    assert check_uebc(HalfSpace([1, 0], 0.0), 10.0, 100).passed
    assert check_uebc(CuspUnion([[-1, 0], [1, 0]], [1, 1]), 1.0, 200).passed
    assert check_uebc(interval(0, 1), 5.0, 10).passed


def test_projection_examples():
    ball = Ball([0, 0], 1.0)
    np.testing.assert_allclose(project_to_closure(ball, [2, 0]), [1, 0])
    np.testing.assert_allclose(project_to_closure(ball, [0.3, 0]), [0.3, 0])
    np.testing.assert_allclose(project_to_closure(Box([0, 0], [1, 1]), [-1, 2]), [0, 1])


def test_polytope_projection_matches_box():
    box = Box([0, 0], [1, 1])
    poly = ConvexPolytope([{"normal": [1, 0], "offset": 0}, {"normal": [-1, 0], "offset": -1},
                           {"normal": [0, 1], "offset": 0}, {"normal": [0, -1], "offset": -1}])
    pts = np.random.default_rng(1).uniform(-3, 3, (500, 2))
    np.testing.assert_allclose(poly.project(pts), box.project(pts), atol=1e-10)
    np.testing.assert_allclose(poly.signed_distance(pts), box.signed_distance(pts), atol=1e-10)


def test_polytope_empty_interior_rejected():
    with pytest.raises(InputError):
        ConvexPolytope([{"normal": [1.0], "offset": 1.0}, {"normal": [-1.0], "offset": 0.0}])


def test_domain_json_round_trip():
    for dom in DOMAINS_2D.values():
        assert domain_from_dict(dom.to_dict()) == dom
    with pytest.raises(InputError):
        domain_from_dict({"kind": "ball", "params": {"center": [0, 0], "radius": 1}, "dim": 3})
    with pytest.raises(InputError):
        domain_from_dict({"kind": "torus", "params": {}})


def test_drift_params():
    assert DriftParams(1.0, 2).K == pytest.approx(0.5)
    assert DriftParams(0.5, 3).K == pytest.approx(2.0)


@pytest.mark.parametrize("name", sorted(DOMAINS_2D))
def test_lipschitz_bulk(name):
    dom = DOMAINS_2D[name]
    g = np.random.default_rng(7)
    x = g.uniform(-3, 3, (100_000, 2))
    y = x + g.normal(0, 0.5, x.shape)
    lhs = np.abs(dom.signed_distance(x) - dom.signed_distance(y))
    assert np.all(lhs <= np.linalg.norm(x - y, axis=1) + 1e-12)


@pytest.mark.parametrize("name", sorted(DOMAINS_2D))
@given(x=point2, y=point2)
def test_lipschitz_property(name, x, y):
    dom = DOMAINS_2D[name]
    assert abs(float(dom.signed_distance(x) - dom.signed_distance(y))) <= np.linalg.norm(x - y) + 1e-12


def _membership(name, x):
    if name == "ball":
        return np.linalg.norm(x, axis=1) < 1
    if name == "halfspace":
        return x[:, 0] > 0
    if name == "box":
        return (x[:, 0] > 0) & (x[:, 0] < 1) & (x[:, 1] > 0) & (x[:, 1] < 2)
    if name == "annulus":
        rho = np.linalg.norm(x, axis=1)
        return (rho > 1) & (rho < 2)
    if name == "polytope":
        return (x[:, 0] > 0) & (x[:, 1] > 0) & (x[:, 0] + x[:, 1] < 1)
    if name == "cusp":
        return (np.linalg.norm(x - [-1, 0], axis=1) > 1) & (np.linalg.norm(x - [1, 0], axis=1) > 1)


@pytest.mark.parametrize("name", sorted(DOMAINS_2D))
def test_sign_consistency(name):
    x = np.random.default_rng(3).uniform(-3, 3, (100_000, 2))
    np.testing.assert_array_equal(DOMAINS_2D[name].signed_distance(x) > 0, _membership(name, x))


@pytest.mark.parametrize("name", ["ball", "halfspace", "box", "annulus", "polytope"])
@given(x=point2)
def test_projection_optimal(name, x):
    # the projection is in the closure and no sampled closure point is closer
    dom = DOMAINS_2D[name]
    p = dom.project(x)
    assert float(dom.signed_distance(p)) >= -1e-9
    cand = np.random.default_rng(0).uniform(-3, 3, (4000, 2))
    cand = cand[dom.signed_distance(cand) >= 0]
    assert np.linalg.norm(p - x) <= np.linalg.norm(cand - x, axis=1).min() + 1e-9
    if float(dom.signed_distance(x)) >= 0:
        np.testing.assert_array_equal(p, x)


@pytest.mark.parametrize("name", ["ball", "halfspace", "box", "annulus", "polytope"])
@given(x=point2)
def test_exterior_distance_is_projection_distance(name, x):
    dom = DOMAINS_2D[name]
    q = float(dom.signed_distance(x))
    if q < 0:
        assert -q == pytest.approx(np.linalg.norm(dom.project(x) - x), abs=1e-9)


@pytest.mark.parametrize("name", ["ball", "halfspace", "annulus", "cusp"])
@given(seed=st.integers(0, 10_000))
def test_witness_validity(name, seed):
    dom = DOMAINS_2D[name]
    delta = min(0.9, dom.admissible_delta * 0.99)
    y = dom.sample_boundary(1, np.random.default_rng(seed))[0]
    w = exterior_ball_witness(dom, y, delta)
    assert np.linalg.norm(w.z - y) == pytest.approx(delta)
    # the open witness ball misses the domain
    g = np.random.default_rng(seed + 1)
    v = g.normal(size=(2000, 2))
    v *= (delta * g.uniform(0, 1, (2000, 1)) ** 0.5) / np.linalg.norm(v, axis=1, keepdims=True)
    assert np.all(dom.signed_distance(w.z + v * (1 - 1e-9)) <= 1e-9)


@pytest.mark.parametrize("name", sorted(DOMAINS_2D))
def test_boundary_samples_on_boundary(name):
    dom = DOMAINS_2D[name]
    y = dom.sample_boundary(500, np.random.default_rng(0))
    assert np.all(np.abs(dom.signed_distance(y)) < 1e-9)


def test_cusp_union_rejects_overlap_in_3d():
    with pytest.raises(InputError):
        CuspUnion([[0, 0, 0], [1, 0, 0]], [1, 1])


def test_interval_is_box():
    dom = interval(0, 1)
    assert dom.dim == 1
    assert float(dom.signed_distance([0.25])) == pytest.approx(0.25)
    assert float(dom.signed_distance([1.5])) == pytest.approx(-0.5)
