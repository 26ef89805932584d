"""Geometry of the BKM metric on the qubit state space.

With ``r = sin(alpha)`` the metric is ``d alpha^2 + F(alpha) dOmega^2`` where
``F(alpha) = sin(alpha) artanh(sin(alpha))``. Geodesics lie in a plane through
the centre and are integrated in ``(alpha, phi)`` with classical RK4.
``alpha`` is allowed to change sign, which continues a radial geodesic
through the centre onto the opposite ray.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, StateError
from .metrics import bkm_coefficients
from .qstate import check_density_matrix, density_to_bloch

R_GUARD = 1 - 1e-8
ALPHA_GUARD = math.asin(R_GUARD)

# Taylor coefficients of the scalar curvature about r = 0
_CURVATURE_SERIES = (-10 / 9, -134 / 135, -4378 / 4725, -37514 / 42525)


def bkm_curvature(r):
    """Scalar curvature of the three-dimensional BKM metric at radius ``r``.

    Uses a Taylor series below ``r = 1e-2`` where the closed form cancels badly.
    """
    if not 0 < r < 1:
        raise StateError(f"radius {r!r} outside (0, 1)")
    if r < 1e-2:
        r2 = r * r
        return sum(c * r2 ** (k + 1) for k, c in enumerate(_CURVATURE_SERIES))
    L = math.log((1 + r) / (1 - r))
    num = 4 * r**2 - 4 * r * (1 + r**2) * L + (1 + 2 * r**2 - 3 * r**4) * L**2
    return num / (2 * r**2 * (1 - r**2) * L**2)


def f_alpha(alpha):
    """Angular coefficient ``F(alpha) = (sin a / 2) log((1 + sin a)/(1 - sin a))``."""
    if not 0 <= alpha < math.pi / 2:
        raise StateError("alpha must lie in [0, pi/2)")
    return _F(alpha)


def _atanh_sin(a):
    # artanh(sin a) = log((1 + sin a)/cos a); avoids the cancellation in 1 - sin a near pi/2
    s, c = math.sin(a), math.cos(a)
    if abs(s) < 0.5:
        return math.atanh(s)
    return math.copysign(math.log((1 + abs(s)) / abs(c)), s)


def _F(a):
    return math.sin(a) * _atanh_sin(a)


def _dF(a):
    s, c = math.sin(a), math.cos(a)
    return c * _atanh_sin(a) + s / c


# ---------------------------------------------------------------------------
# numeric curvature oracle
# ---------------------------------------------------------------------------

def polar_bkm_metric(x):
    """BKM metric components in spherical coordinates ``(r, theta, phi)``."""
    r, theta, _ = x
    c, d = bkm_coefficients(r)
    ang = r**2 * d
    return np.diag([c, ang, ang * math.sin(theta) ** 2])


def _deriv(fn, x, i, h):
    # fourth-order central difference along coordinate i
    e = np.zeros_like(x)
    e[i] = h
    return (-fn(x + 2 * e) + 8 * fn(x + e) - 8 * fn(x - e) + fn(x - 2 * e)) / (12 * h)


def _christoffel(metric, x, h):
    n = x.size
    ginv = np.linalg.inv(metric(x))
    dg = np.array([_deriv(metric, x, i, h) for i in range(n)])  # dg[k, i, j] = d_k g_ij
    # Gamma^k_ij = 1/2 g^kl (d_i g_lj + d_j g_li - d_l g_ij)
    t = dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg  # t[l, i, j]
    return 0.5 * np.einsum("kl,lij->kij", ginv, t)


def numeric_scalar_curvature(metric, x, h=1e-3):
    """Scalar curvature of a metric given only as a function of coordinates.

    Christoffel symbols and their derivatives come from nested fourth-order
    finite differences of ``metric(x)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    gam = _christoffel(metric, x, h)
    dgam = np.array([_deriv(lambda y: _christoffel(metric, y, h), x, m, h) for m in range(n)])
    # Ricci R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik
    ricci = (
        np.einsum("kkij->ij", dgam)
        - np.einsum("jkik->ij", dgam)
        + np.einsum("kkl,lij->ij", gam, gam)
        - np.einsum("kjl,lik->ij", gam, gam)
    )
    return float(np.einsum("ij,ij->", np.linalg.inv(metric(x)), ricci))


def cartesian_bkm_metric(x):
    """BKM metric components in Cartesian Bloch coordinates."""
    r = float(np.linalg.norm(x))
    c, d = bkm_coefficients(r)
    if r == 0:
        return np.eye(3)
    n = np.outer(x, x) / r**2
    return c * n + d * (np.eye(3) - n)


def numeric_bkm_curvature(r, h=1e-3, chart="cartesian"):
    """Scalar curvature of the BKM metric at radius ``r`` by finite differences.

    ``chart="cartesian"`` differentiates the Bloch-coordinate tensor, which is
    smooth at the centre; ``chart="polar"`` uses the spherical line element
    and loses accuracy for small ``r``.
    """
    h = min(h, 0.05 * (1 - r))
    if chart == "polar":
        return numeric_scalar_curvature(polar_bkm_metric, [r, math.pi / 2, 0.0], min(h, 0.2 * r))
    return numeric_scalar_curvature(cartesian_bkm_metric, [r, 0.0, 0.0], h)


# ---------------------------------------------------------------------------
# geodesics
# ---------------------------------------------------------------------------

@dataclass
class GeodesicPath:
    """Arc-length sampled geodesic in the plane ``theta = pi/2``.

    ``alpha`` may be negative after passing through the centre; ``r`` and
    ``phi`` give the ordinary polar position. ``boundary_angle`` is the angle
    between the tangent and the outward radial direction where the path
    stopped at the boundary guard (``nan`` otherwise).
    """

    s: np.ndarray
    alpha: np.ndarray
    phi: np.ndarray
    E: np.ndarray
    J: np.ndarray
    hit_boundary: bool = False
    boundary_angle: float = math.nan
    meta: dict = field(default_factory=dict)

    @property
    def length(self):
        return float(self.s[-1])

    @property
    def length_to_boundary(self):
        """Length continued analytically from the guard to ``r = 1`` (radial approach)."""
        if not self.hit_boundary:
            return math.nan
        return self.length + (math.pi / 2 - abs(self.alpha[-1]))

    @property
    def r(self):
        return np.abs(np.sin(self.alpha))

    @property
    def polar_phi(self):
        return np.where(self.alpha < 0, self.phi + math.pi, self.phi)

    def cartesian(self):
        rr = np.sin(self.alpha)
        return np.column_stack([rr * np.cos(self.phi), rr * np.sin(self.phi)])

    @property
    def energy_drift(self):
        return float(np.max(np.abs(self.E - self.E[0])))

    @property
    def momentum_drift(self):
        return float(np.max(np.abs(self.J - self.J[0])))

    def to_csv(self, fh, every=1):
        """Write columns ``s, r, phi, E, J`` with 15 significant digits."""
        w = csv.writer(fh)
        w.writerow(["s", "r", "phi", "E", "J"])
        r, ph = self.r, self.polar_phi
        for k in range(0, len(self.s), every):
            w.writerow([f"{v:.15g}" for v in (self.s[k], r[k], ph[k], self.E[k], self.J[k])])


def _rhs(a, p, va, vp):
    F = _F(a)
    dF = _dF(a)
    acc_p = 0.0 if vp == 0.0 else -dF * va * vp / F
    return va, vp, 0.5 * dF * vp * vp, acc_p


def _rk4(state, h):
    a, p, va, vp = state
    k1 = _rhs(a, p, va, vp)
    k2 = _rhs(a + 0.5 * h * k1[0], p + 0.5 * h * k1[1], va + 0.5 * h * k1[2], vp + 0.5 * h * k1[3])
    k3 = _rhs(a + 0.5 * h * k2[0], p + 0.5 * h * k2[1], va + 0.5 * h * k2[2], vp + 0.5 * h * k2[3])
    k4 = _rhs(a + h * k3[0], p + h * k3[1], va + h * k3[2], vp + h * k3[3])
    return tuple(
        x + h / 6 * (d1 + 2 * d2 + 2 * d3 + d4) for x, d1, d2, d3, d4 in zip(state, k1, k2, k3, k4)
    )


def _invariants(a, va, vp):
    F = _F(a)
    return 0.5 * (va * va + F * vp * vp), F * vp


def _integrate(alpha0, phi0, psi, h, max_length, drift_rate=1e-9, h_min=1e-10):
    """RK4 along the unit-speed geodesic leaving ``(alpha0, phi0)`` at angle ``psi``.

    ``psi`` is measured in the orthonormal frame (radial, tangential). Steps
    whose energy or momentum change exceeds ``drift_rate * step`` (plus a
    round-off floor) are retried at half
    the size.
    """
    F0 = _F(alpha0)
    va0 = math.cos(psi)
    if F0 == 0.0:
        if abs(math.sin(psi)) > 1e-15:
            raise StateError("only radial directions are defined at the centre")
        vp0 = 0.0
    else:
        vp0 = math.sin(psi) / math.sqrt(F0)
    state = (alpha0, phi0, va0, vp0)
    E0, J0 = _invariants(alpha0, va0, vp0)
    s_list, st_list, e_list, j_list = [0.0], [state], [E0], [J0]
    s = 0.0
    hit = False
    while s < max_length - 1e-15:
        step = min(h, max_length - s)
        while True:
            new = _rk4(state, step)
            if abs(new[0]) < math.pi / 2:
                E, J = _invariants(new[0], new[2], new[3])
                # truncation budget plus a floor for round-off in evaluating E and J
                tol = drift_rate * step + 1e-13
                if abs(E - e_list[-1]) <= tol and abs(J - j_list[-1]) <= tol * max(1.0, abs(J)):
                    break
            step *= 0.5
            if step < h_min:
                raise ConvergenceError("geodesic step fell below h_min; conservation drift")
        if abs(new[0]) >= ALPHA_GUARD:
            # shorten the last step so it ends on the guard (secant on the step length)
            for _ in range(50):
                step *= (ALPHA_GUARD - abs(state[0])) / (abs(new[0]) - abs(state[0]))
                new = _rk4(state, step)
                if abs(abs(new[0]) - ALPHA_GUARD) < 1e-15:
                    break
            E, J = _invariants(new[0], new[2], new[3])
            hit = True
        state = new
        s += step
        s_list.append(s)
        st_list.append(state)
        e_list.append(E)
        j_list.append(J)
        if hit:
            break
    st = np.array(st_list)
    path = GeodesicPath(np.array(s_list), st[:, 0], st[:, 1], np.array(e_list), np.array(j_list), hit)
    path.meta["velocity"] = st[:, 2:]
    if hit:
        a, _, va, vp = state
        path.boundary_angle = math.atan2(abs(math.sqrt(_F(a)) * vp), abs(va))
    return path


def geodesic_ivp(alpha0, phi0, direction, h=1e-4, max_length=10.0):
    """Integrate a unit-speed geodesic from ``(alpha0, phi0)``.

    Parameters
    ----------
    direction : float or (float, float)
        Either the angle ``psi`` of the initial unit tangent in the
        orthonormal (radial, tangential) frame, or a vector with those two
        components, normalised internally.
    h : float
        Arc-length step.
    max_length : float
        Integration stops here or at the boundary guard ``r = 1 - 1e-8``.
    """
    if not 0 <= abs(alpha0) < ALPHA_GUARD:
        raise StateError("starting point must be interior")
    if np.ndim(direction) == 0:
        psi = float(direction)
    else:
        u, v = direction
        if u == 0 and v == 0:
            raise StateError("direction must be non-zero")
        psi = math.atan2(v, u)
    return _integrate(alpha0, phi0, psi, h, max_length)


def _to_xy(a, p):
    s = math.sin(a)
    return s * math.cos(p), s * math.sin(p)


def _closest_approach(path, target):
    """Signed perpendicular miss and arc length at the closest approach to ``target``."""
    xy = path.cartesian()
    d2 = np.sum((xy - target) ** 2, axis=1)
    k = int(np.argmin(d2))
    # refine on the cubic Hermite segment around the discrete minimum
    best = (d2[k], path.s[k], k, 0.0)
    vel = path.meta["velocity"]
    for k0 in (k - 1, k):
        if k0 < 0 or k0 + 1 >= len(path.s):
            continue
        ds = path.s[k0 + 1] - path.s[k0]
        p0, p1 = xy[k0], xy[k0 + 1]
        m0 = _cart_velocity(path.alpha[k0], path.phi[k0], *vel[k0]) * ds
        m1 = _cart_velocity(path.alpha[k0 + 1], path.phi[k0 + 1], *vel[k0 + 1]) * ds
        for t in np.linspace(0, 1, 9)[1:-1]:
            t = _refine_t(p0, p1, m0, m1, target, t)
            if 0 <= t <= 1:
                pt = _hermite(p0, p1, m0, m1, t)
                dd = float(np.sum((pt - target) ** 2))
                if dd < best[0]:
                    best = (dd, path.s[k0] + t * ds, k0, t)
    dist2, s_star, k0, t = best
    if k0 + 1 < len(path.s):
        ds = path.s[k0 + 1] - path.s[k0]
        m0 = _cart_velocity(path.alpha[k0], path.phi[k0], *vel[k0]) * ds
        m1 = _cart_velocity(path.alpha[k0 + 1], path.phi[k0 + 1], *vel[k0 + 1]) * ds
        pt = _hermite(xy[k0], xy[k0 + 1], m0, m1, t)
        tang = _hermite_d(xy[k0], xy[k0 + 1], m0, m1, t)
    else:
        pt = xy[k0]
        tang = _cart_velocity(path.alpha[k0], path.phi[k0], *vel[k0])
    off = target - pt
    sign = 1.0 if tang[0] * off[1] - tang[1] * off[0] >= 0 else -1.0
    return sign * math.sqrt(max(dist2, 0.0)), s_star, pt


def _cart_velocity(a, p, va, vp):
    s, c = math.sin(a), math.cos(a)
    dr = c * va
    return np.array([dr * math.cos(p) - s * math.sin(p) * vp, dr * math.sin(p) + s * math.cos(p) * vp])


def _hermite(p0, p1, m0, m1, t):
    t2, t3 = t * t, t * t * t
    return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1


def _hermite_d(p0, p1, m0, m1, t):
    t2 = t * t
    return (6 * t2 - 6 * t) * p0 + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * p1 + (3 * t2 - 2 * t) * m1


def _refine_t(p0, p1, m0, m1, target, t):
    # Newton on d/dt |H(t) - target|^2
    for _ in range(20):
        pt = _hermite(p0, p1, m0, m1, t)
        d1 = _hermite_d(p0, p1, m0, m1, t)
        d2 = (12 * t - 6) * p0 + (6 * t - 4) * m0 + (-12 * t + 6) * p1 + (6 * t - 2) * m1
        g = float((pt - target) @ d1)
        gp = float(d1 @ d1 + (pt - target) @ d2)
        if gp <= 0:
            break
        dt = g / gp
        t -= dt
        if abs(dt) < 1e-15:
            break
    return t


class ShootingResult:
    def __init__(self, psi, path, miss, n_roots):
        self.psi = psi
        self.path = path
        self.miss = miss
        self.n_roots = n_roots


def _radial_bvp(a1, p1, a2, p2, h):
    # both points on one line through the centre: J = 0
    x1 = np.array(_to_xy(a1, p1))
    x2 = np.array(_to_xy(a2, p2))
    if a1 == 0.0:
        return geodesic_ivp(0.0, p2, 0.0, h, max_length=a2)
    same_ray = a2 == 0.0 or np.dot(x1, x2) > 0
    if same_ray:
        length = abs(a2 - a1)
        psi = 0.0 if a2 >= a1 else math.pi
    else:
        length = a1 + a2
        psi = math.pi
    if length == 0.0:
        return geodesic_ivp(a1, p1, 0.0, h, max_length=0.0)
    return geodesic_ivp(a1, p1, psi, h, max_length=length)


def _miss_fn(a1, p1, target, h, max_length):
    def miss(psi):
        try:
            path = _integrate(a1, p1, psi, h, max_length)
        except ConvergenceError:
            return math.nan, math.nan, None
        m, s_star, _ = _closest_approach(path, target)
        return m, s_star, path

    return miss


def _initial_direction(a1, p1, target):
    x1 = np.array(_to_xy(a1, p1))
    d = target - x1
    rhat = np.array([math.cos(p1), math.sin(p1)])
    phat = np.array([-math.sin(p1), math.cos(p1)])
    da = (d @ rhat) / math.cos(a1)
    dp = (d @ phat) / math.sin(a1)
    return math.atan2(math.sqrt(_F(a1)) * dp, da)


def shoot(p1, p2, h=1e-4, n_scan=24, tol=1e-6, scan_h=None):
    """Shooting solve for the geodesic from ``p1`` to ``p2`` (polar ``(r, phi)`` pairs).

    The initial-angle interval ``(psi0 - pi/2, psi0 + pi/2)`` around the
    Euclidean direction is scanned for sign changes of the signed miss, each
    genuine root is refined by bisection then secant, and the root with the
    smallest miss is returned.
    """
    (r1, f1), (r2, f2) = p1, p2
    a1, a2 = math.asin(r1), math.asin(r2)
    target = np.array(_to_xy(a2, f2))
    max_length = a1 + a2 + 0.05  # the path through the centre is never shorter than the geodesic
    psi0 = _initial_direction(a1, f1, target)
    coarse = _miss_fn(a1, f1, target, scan_h or max(h, 1e-3), max_length)
    fine = _miss_fn(a1, f1, target, h, max_length)

    grid = psi0 + np.linspace(-0.5, 0.5, n_scan + 1) * math.pi * 0.999
    misses = [coarse(p)[0] for p in grid]
    roots = []
    for k in range(n_scan):
        if misses[k] == 0 or misses[k] * misses[k + 1] < 0:  # nan compares false
            root = _refine_root(coarse, grid[k], grid[k + 1], misses[k], misses[k + 1], tol * 1e-3)
            if root is not None:
                roots.append(root)
    if not roots:
        raise ConvergenceError(
            f"shooting failed to bracket a root; misses in [{min(misses):.3g}, {max(misses):.3g}]"
        )
    best_psi = min(roots, key=lambda p: abs(coarse(p)[0]))
    # polish at the requested step
    psi = best_psi
    m, s_star, path = fine(psi)
    dpsi = 1e-7
    for _ in range(20):
        if abs(m) < tol * 1e-3:
            break
        m2, _, _ = fine(psi + dpsi)
        slope = (m2 - m) / dpsi
        if slope == 0:
            break
        step = -m / slope
        psi += step
        m, s_star, path = fine(psi)
        dpsi = max(min(abs(step), 1e-6), 1e-10)
    if abs(m) > tol:
        raise ConvergenceError(f"shooting endpoint miss {abs(m):.3g} exceeds {tol}")
    trimmed = _integrate(a1, f1, psi, h, s_star)
    return ShootingResult(psi, trimmed, abs(m), len(roots))


def _refine_root(fn, lo, hi, mlo, mhi, tol):
    """Bisection then secant; ``None`` when the sign change is a jump, not a root."""
    width0 = abs(mlo) + abs(mhi)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        mm = fn(mid)[0]
        if mm == 0:
            return mid
        if mlo * mm < 0:
            hi, mhi = mid, mm
        else:
            lo, mlo = mid, mm
        if abs(hi - lo) < 1e-6:
            break
    if min(abs(mlo), abs(mhi)) > 0.5 * width0 and abs(mlo) + abs(mhi) > 1e-3:
        return None
    # secant from the bracket
    x0, x1, f0, f1 = lo, hi, mlo, mhi
    for _ in range(30):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        x0, f0 = x1, f1
        x1, f1 = x2, fn(x2)[0]
        if abs(f1) < tol:
            break
    if abs(f1) > 1e-4:
        return None
    return x1


def geodesic_bvp(p1, p2, h=1e-4, tol=1e-6):
    """Geodesic joining two interior points of the equatorial plane.

    ``p1`` and ``p2`` are polar ``(r, phi)`` pairs. Points on a common line
    through the centre are joined by the radial (``J = 0``) geodesic directly.
    """
    (r1, f1), (r2, f2) = p1, p2
    for r in (r1, r2):
        if not 0 <= r < R_GUARD:
            raise StateError(f"radius {r!r} is not interior")
    if r1 == r2 and (r1 == 0 or math.isclose(math.cos(f1 - f2), 1.0, abs_tol=1e-15)):
        raise StateError("endpoints coincide")
    a1, a2 = math.asin(r1), math.asin(r2)
    cross = r1 * r2 * math.sin(f2 - f1)
    if r1 == 0 or r2 == 0 or abs(cross) < 1e-13:
        path = _radial_bvp(a1, f1, a2, f2, h)
        path.meta["miss"] = 0.0
        return path
    res = shoot(p1, p2, h=h, tol=tol)
    path = res.path
    path.meta.update(miss=res.miss, psi=res.psi, n_roots=res.n_roots)
    return path


def bkm_distance(rho1, rho2, h=1e-4):
    """Length of the BKM geodesic joining two interior qubit states."""
    from .basisopt import canonicalize

    rho1 = check_density_matrix(rho1, interior=True)
    rho2 = check_density_matrix(rho2, interior=True)
    if rho1.shape != (2, 2) or rho2.shape != (2, 2):
        raise StateError("bkm_distance is defined for qubits")
    pair = canonicalize(density_to_bloch(rho1), density_to_bloch(rho2))
    if pair.r1 >= R_GUARD or pair.r2 >= R_GUARD:
        raise StateError("states too close to the boundary")
    if abs(pair.r1 - pair.r2) < 1e-15 and (pair.r1 == 0 or pair.theta < 1e-15):
        return 0.0
    return geodesic_bvp((pair.r1, 0.0), (pair.r2, pair.theta), h=h).length


def geodesic_bloch(x, y, h=1e-4):
    """Geodesic between Bloch vectors in three dimensions.

    Solves in the canonical plane and rotates back. Returns the planar path
    and an ``(n, 3)`` array of Bloch vectors along it.
    """
    from .basisopt import _frame_rotation, canonicalize

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pair = canonicalize(x, y)
    path = geodesic_bvp((pair.r1, 0.0), (pair.r2, pair.theta), h=h)
    R = _frame_rotation(x, y)
    xy = path.cartesian()
    canon = np.column_stack([xy[:, 0], np.zeros(len(xy)), -xy[:, 1]])
    return path, canon @ R
