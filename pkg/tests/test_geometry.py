import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from qinfogeom.errors import StateError
from qinfogeom.geometry import (
    R_GUARD,
    bkm_curvature,
    bkm_distance,
    f_alpha,
    geodesic_bloch,
    geodesic_bvp,
    geodesic_ivp,
    numeric_bkm_curvature,
    numeric_scalar_curvature,
)
from qinfogeom.metrics import bkm_coefficients, bkm_tensor
from qinfogeom.qstate import bloch_to_density, random_bloch


def _plane_metric(p):
    r = math.hypot(*p)
    c, d = bkm_coefficients(r)
    if r == 0:
        return np.eye(2)
    n = np.outer(p, p) / r**2
    return c * n + d * (np.eye(2) - n)


def _polyline_length(pts):
    seg = np.diff(pts, axis=0)
    mid = 0.5 * (pts[1:] + pts[:-1])
    return sum(math.sqrt(s @ _plane_metric(m) @ s) for s, m in zip(seg, mid))


def _shortest_polyline(a, b, k=48):
    # independent oracle: minimise the metric length of a k-segment polyline, starting from the chord
    t = np.linspace(0, 1, k + 1)[1:-1, None]
    x0 = (a + t * (b - a)).ravel()

    def length(x):
        return _polyline_length(np.vstack([a, x.reshape(-1, 2), b]))

    res = minimize(length, x0, method="L-BFGS-B", options={"maxiter": 5000})
    return res.fun, _polyline_length(np.vstack([a, x0.reshape(-1, 2), b]))


def _xy(r, phi):
    return np.array([r * math.cos(phi), r * math.sin(phi)])


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

def test_curvature_examples():
    assert abs(bkm_curvature(0.01)) < 1e-3
    assert bkm_curvature(0.999) < -3
    assert bkm_curvature(0.999999) < bkm_curvature(0.999) < bkm_curvature(0.99)
    r = 0.5
    assert bkm_curvature(r) == pytest.approx(numeric_bkm_curvature(r), rel=1e-4)
    with pytest.raises(StateError):
        bkm_curvature(1.0)
    with pytest.raises(StateError):
        bkm_curvature(-0.1)


def test_curvature_divergence_rate_at_boundary():
    # R ~ -4 / ((1 - r^2) log((1 + r)/(1 - r))) as r -> 1
    for eps in (1e-6, 1e-8, 1e-10):
        r = 1 - eps
        L = math.log((2 - eps) / eps)
        assert bkm_curvature(r) * (1 - r * r) * L == pytest.approx(-4.0, rel=2 / L)


def test_curvature_against_numeric_oracle_on_grid():
    for r in np.linspace(0.05, 0.95, 19):
        assert bkm_curvature(r) == pytest.approx(numeric_bkm_curvature(r), rel=1e-4)


def test_curvature_series_branch_is_continuous():
    for r in (0.0099, 0.0101, 0.02):
        assert bkm_curvature(r) == pytest.approx(numeric_bkm_curvature(r, h=1e-3), rel=1e-3, abs=1e-9)
    assert bkm_curvature(1e-2 - 1e-12) == pytest.approx(bkm_curvature(1e-2 + 1e-12), rel=1e-8)


@given(st.floats(1e-6, 1 - 1e-9))
def test_curvature_nonpositive(r):
    assert bkm_curvature(r) <= 0


def test_numeric_curvature_of_known_spaces():
    # flat space and the unit 3-sphere (R = 6) validate the oracle itself
    assert abs(numeric_scalar_curvature(lambda x: np.eye(3), np.array([0.1, 0.2, 0.3]))) < 1e-8

    def sphere(x):
        # conformally flat chart of the unit sphere: 4/(1+|x|^2)^2 delta
        return 4 / (1 + x @ x) ** 2 * np.eye(3)

    assert numeric_scalar_curvature(sphere, np.array([0.2, -0.1, 0.3])) == pytest.approx(6.0, rel=1e-6)

    def hyperbolic(x):
        return 4 / (1 - x @ x) ** 2 * np.eye(3)

    assert numeric_scalar_curvature(hyperbolic, np.array([0.2, -0.1, 0.3])) == pytest.approx(-6.0, rel=1e-6)


def test_f_alpha_examples():
    assert f_alpha(0.0) == 0.0
    for a in (1e-3, 1e-2):
        assert f_alpha(a) == pytest.approx(a**2, rel=2 * a**2)
    assert f_alpha(math.asin(0.9)) == pytest.approx(0.45 * math.log(19), rel=1e-14)
    assert f_alpha(math.asin(0.9)) == pytest.approx(1.32500, abs=5e-6)
    with pytest.raises(StateError):
        f_alpha(math.pi / 2)


@given(st.floats(0.0, 1.5))
def test_f_alpha_equals_angular_coefficient(a):
    r = math.sin(a)
    if r >= 1:
        return
    assert f_alpha(a) == pytest.approx(r**2 * bkm_coefficients(r)[1], rel=1e-12, abs=1e-300)


# ---------------------------------------------------------------------------
# initial-value geodesics
# ---------------------------------------------------------------------------

def test_radial_geodesic_keeps_angle():
    path = geodesic_ivp(math.asin(0.3), 0.7, 0.0, max_length=0.5)
    assert np.all(path.phi == 0.7)
    assert np.all(path.J == 0.0)
    assert path.r[-1] == pytest.approx(math.sin(math.asin(0.3) + 0.5), rel=1e-10)


@pytest.mark.parametrize("r0", [0.1, 0.5, 0.9])
def test_radial_length_to_boundary(r0):
    path = geodesic_ivp(math.asin(r0), 0.0, 0.0, max_length=10)
    assert path.hit_boundary
    assert path.r[-1] == pytest.approx(R_GUARD, abs=1e-12)
    assert abs(path.length_to_boundary - (math.pi / 2 - math.asin(r0))) < 1e-6
    # the guarded length itself is within the guard's own distance of the law
    assert abs(path.length - (math.pi / 2 - math.asin(r0))) < 2e-4


def test_conservation_along_generic_geodesic():
    path = geodesic_ivp(math.asin(0.6), 0.3, 1.1, max_length=3.0)
    assert path.momentum_drift < 1e-8
    assert path.energy_drift < 1e-8
    assert path.E[0] == pytest.approx(0.5)


def test_geodesic_through_centre():
    # aimed straight inward: passes the centre and comes out on the opposite ray
    path = geodesic_ivp(math.asin(0.5), 0.0, math.pi, max_length=2 * math.asin(0.5))
    assert path.r[-1] == pytest.approx(0.5, abs=1e-9)
    assert path.polar_phi[-1] == pytest.approx(math.pi, abs=1e-9)


def test_boundary_approach_angle_is_recorded():
    # the approach to the boundary is nearly radial but only logarithmically so; the
    # angle is a diagnostic, checked here for plausibility rather than a rate
    path = geodesic_ivp(math.asin(0.5), 0.0, 0.8, max_length=20)
    assert path.hit_boundary
    assert 0 < path.boundary_angle < 0.25
    assert math.isnan(geodesic_ivp(math.asin(0.5), 0.0, 0.8, max_length=0.1).boundary_angle)


def test_ivp_errors():
    with pytest.raises(StateError):
        geodesic_ivp(math.pi / 2, 0, 0)
    with pytest.raises(StateError):
        geodesic_ivp(0.0, 0, 1.0)
    with pytest.raises(StateError):
        geodesic_ivp(0.3, 0, (0.0, 0.0))


def test_to_csv_columns():
    path = geodesic_ivp(0.3, 0, 0.4, max_length=0.01, h=1e-3)
    buf = io.StringIO()
    path.to_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "s,r,phi,E,J"
    assert len(lines) == len(path.s) + 1


# ---------------------------------------------------------------------------
# boundary-value geodesics and distance
# ---------------------------------------------------------------------------

def test_bvp_radial_cases():
    p = geodesic_bvp((0.2, 1.0), (0.8, 1.0))
    assert p.length == pytest.approx(math.asin(0.8) - math.asin(0.2), abs=1e-12)
    p = geodesic_bvp((0.2, 1.0), (0.8, 1.0 + math.pi))
    assert p.length == pytest.approx(math.asin(0.8) + math.asin(0.2), abs=1e-12)
    p = geodesic_bvp((0.0, 0.0), (0.6, 2.0))
    assert p.length == pytest.approx(math.asin(0.6), abs=1e-12)
    with pytest.raises(StateError):
        geodesic_bvp((0.5, 0.3), (0.5, 0.3))
    with pytest.raises(StateError):
        geodesic_bvp((0.5, 0.3), (1.0, 0.3))


def test_bvp_symmetric_pair():
    r, phi0 = 0.7, 0.9
    path = geodesic_bvp((r, -phi0), (r, phi0))
    xy = path.cartesian()
    assert np.linalg.norm(xy[-1] - _xy(r, phi0)) < 1e-6
    # reflection about phi = 0 maps the path onto itself reversed
    mirrored = xy[::-1] * [1, -1]
    assert np.max(np.abs(mirrored - xy)) < 1e-4
    mid = int(np.argmin(np.abs(path.s - path.length / 2)))
    assert abs(path.meta["velocity"][mid, 0]) < 1e-3
    assert abs(path.phi[mid]) < 1e-3


def test_bvp_matches_shortest_polyline_oracle():
    p1, p2 = (0.5, 0.0), (0.7, 2.0)
    path = geodesic_bvp(p1, p2)
    assert np.linalg.norm(path.cartesian()[-1] - _xy(*p2)) < 1e-6
    best, _ = _shortest_polyline(_xy(*p1), _xy(*p2))
    chord = _polyline_length(np.linspace(_xy(*p1), _xy(*p2), 400))
    assert path.length < chord
    assert path.length == pytest.approx(best, rel=2e-4)
    assert path.momentum_drift < 1e-8


@settings(max_examples=8)
@given(st.integers(0, 2**32 - 1))
def test_bvp_random_pairs(seed):
    rng = np.random.default_rng(seed)
    r1, r2 = rng.uniform(0.05, 0.95, 2)
    f = rng.uniform(0.05, math.pi - 0.05)
    path = geodesic_bvp((r1, 0.0), (r2, f))
    assert np.linalg.norm(path.cartesian()[-1] - _xy(r2, f)) < 1e-6
    assert path.length <= _polyline_length(np.linspace(_xy(r1, 0), _xy(r2, f), 400)) + 1e-9
    assert path.meta["n_roots"] == 1


@pytest.mark.slow
def test_shooting_root_unique_for_many_pairs():
    rng = np.random.default_rng(99)
    for _ in range(100):
        r1, r2 = rng.uniform(0.02, 0.97, 2)
        f = rng.uniform(0.02, math.pi - 0.02)
        path = geodesic_bvp((r1, 0.0), (r2, f), h=1e-3)
        assert path.meta["n_roots"] == 1


def test_bkm_distance_properties(rng):
    rho = bloch_to_density([0.2, 0.3, -0.1])
    assert bkm_distance(rho, rho) == 0.0
    x = random_bloch(rng, 0.9, 0.1)
    assert bkm_distance(np.eye(2) / 2, bloch_to_density(x)) == pytest.approx(math.asin(np.linalg.norm(x)), abs=1e-12)
    a, b, c = (bloch_to_density(random_bloch(rng, 0.9, 0.1)) for _ in range(3))
    dab, dba = bkm_distance(a, b), bkm_distance(b, a)
    assert dab == pytest.approx(dba, abs=1e-8)
    assert bkm_distance(a, c) <= dab + bkm_distance(b, c) + 1e-6


def test_bkm_distance_rejects_non_qubits():
    with pytest.raises(StateError):
        bkm_distance(np.eye(4) / 4, np.eye(4) / 4)


def test_geodesic_bloch_endpoints_and_plane(rng):
    x, y = random_bloch(rng, 0.9, 0.2), random_bloch(rng, 0.9, 0.2)
    path, pts = geodesic_bloch(x, y)
    np.testing.assert_allclose(pts[0], x, atol=1e-12)
    np.testing.assert_allclose(pts[-1], y, atol=1e-6)
    normal = np.cross(x, y)
    assert np.max(np.abs(pts @ normal)) < 1e-10
    # the 3-d path has the same metric length as the planar one
    seg = np.diff(pts, axis=0)
    mid = 0.5 * (pts[1:] + pts[:-1])
    length = sum(math.sqrt(s @ bkm_tensor(m) @ s) for s, m in zip(seg, mid))
    assert length == pytest.approx(path.length, rel=1e-6)
