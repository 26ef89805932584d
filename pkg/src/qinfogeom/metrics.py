"""Fisher-Rao, Bures-Helstrom and BKM metrics, plus Cramer-Rao bounds.

Normalisation: the Bures-Helstrom form is ``Tr[rho L L]`` with no factor 1/4,
so that for a qubit ``ds^2 = dr^2/(1-r^2) + r^2 dOmega^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryStateError, StateError
from .qstate import (
    EPS_INTERIOR,
    bloch_to_density,
    check_basis,
    check_bloch,
    check_density_matrix,
    check_tangent,
    density_to_bloch,
    eig_hermitian,
    product_tangent,
    tensor_power,
)


@dataclass(frozen=True)
class QuadraticForm:
    """Symmetric bilinear form ``g`` over labelled coordinates."""

    matrix: np.ndarray
    coords: tuple = field(default=())

    def __call__(self, v, w=None):
        v = np.asarray(v, dtype=float)
        w = v if w is None else np.asarray(w, dtype=float)
        return float(v @ self.matrix @ w)


# ---------------------------------------------------------------------------
# classical
# ---------------------------------------------------------------------------

def fisher_rao(p, dp):
    """Fisher-Rao quadratic form ``sum_i dp_i^2 / p_i``."""
    p = np.asarray(p, dtype=float)
    dp = np.asarray(dp, dtype=float)
    if p.shape != dp.shape or p.ndim != 1:
        raise StateError("p and dp must be 1-d vectors of equal length")
    if np.any(p <= 0):
        raise StateError("Fisher-Rao metric needs strictly positive probabilities")
    if abs(dp.sum()) > 1e-10 * max(1.0, np.abs(dp).sum()):
        raise StateError("dp must sum to zero")
    return float(np.sum(dp**2 / p))


def basis_fisher_rao(rho, drho, basis):
    """Fisher-Rao metric of the outcome statistics of a projective measurement."""
    p = np.real(np.einsum("ji,jk,ki->i", basis.conj(), rho, basis))
    dp = np.real(np.einsum("ji,jk,ki->i", basis.conj(), drho, basis))
    return float(np.sum(dp**2 / p))


# ---------------------------------------------------------------------------
# Bures-Helstrom
# ---------------------------------------------------------------------------

def solve_sld(rho, drho):
    """Symmetric logarithmic derivative ``L`` with ``drho = (rho L + L rho)/2``."""
    rho = check_density_matrix(rho, interior=True)
    drho = check_tangent(drho, dim=rho.shape[0])
    lam, v = eig_hermitian(rho)
    denom = lam[:, None] + lam[None, :]
    if np.min(denom) < 2 * EPS_INTERIOR:
        raise BoundaryStateError("SLD undefined on the boundary of state space")
    d = v.conj().T @ drho @ v
    L = v @ (2 * d / denom) @ v.conj().T
    return 0.5 * (L + L.conj().T)


def bh_metric(rho, drho):
    """Bures-Helstrom metric ``Tr[rho L L]``."""
    L = solve_sld(rho, drho)
    rho = np.asarray(rho, dtype=complex)
    return float(np.real(np.trace(rho @ L @ L)))


def sld_basis(rho, drho):
    """Eigenbasis of the SLD, the measurement that maximises the Fisher-Rao metric."""
    _, v = eig_hermitian(solve_sld(rho, drho))
    return v


def bh_qubit_polar(r, dr, dtheta, dphi, theta=np.pi / 2):
    """Closed-form qubit BH line element ``dr^2/(1-r^2) + r^2 (dtheta^2 + sin^2 theta dphi^2)``.

    ``theta`` is the polar angle of the base point; the default puts it on the
    equator where ``dphi`` is a plain in-plane rotation.
    """
    if not 0 <= r < 1:
        raise StateError(f"radius {r!r} outside [0, 1)")
    return dr**2 / (1 - r**2) + r**2 * (dtheta**2 + np.sin(theta) ** 2 * dphi**2)


def bh_tensor(x):
    """BH metric tensor in Cartesian Bloch coordinates."""
    x = check_bloch(x, interior=True)
    r = np.linalg.norm(x)
    if r == 0:
        return np.eye(3)
    n = np.outer(x, x) / r**2
    return n / (1 - r**2) + (np.eye(3) - n)


# ---------------------------------------------------------------------------
# BKM
# ---------------------------------------------------------------------------

def bkm_coefficients(r):
    """Radial and tangential coefficients ``C(r) = 1/(1-r^2)`` and ``D(r) = artanh(r)/r``.

    ``D(0) = 1`` by continuity; ``(1/2r) log((1+r)/(1-r))`` equals ``artanh(r)/r``.
    """
    if not 0 <= r < 1:
        raise StateError(f"radius {r!r} outside [0, 1)")
    c = 1.0 / (1 - r**2)
    d = 1 + r**2 / 3 + r**4 / 5 if r < 1e-4 else np.arctanh(r) / r
    return c, float(d)


def bkm_tensor(x):
    """BKM metric tensor ``C x x^T/r^2 + D (I - x x^T/r^2)`` in Bloch coordinates."""
    x = check_bloch(x, interior=True)
    r = float(np.linalg.norm(x))
    c, d = bkm_coefficients(r)
    if r == 0:
        return np.eye(3)
    n = np.outer(x, x) / r**2
    return c * n + d * (np.eye(3) - n)


def bkm_qubit(x, dx):
    """BKM quadratic form ``g_ij dx^i dx^j`` at Bloch vector ``x``."""
    dx = np.asarray(dx, dtype=float)
    return float(dx @ bkm_tensor(x) @ dx)


def bkm_qubit_polar(r, dr, dtheta, dphi, theta=np.pi / 2):
    """BKM line element ``dr^2/(1-r^2) + (r/2) log((1+r)/(1-r)) (dtheta^2 + sin^2 theta dphi^2)``."""
    c, d = bkm_coefficients(r)
    return c * dr**2 + r**2 * d * (dtheta**2 + np.sin(theta) ** 2 * dphi**2)


def _cross_entropy_fn(rho1):
    # -Tr[rho1 log rho2]; the Tr[rho1 log rho1] term is constant in rho2
    def f(rho2):
        lam, v = np.linalg.eigh(rho2)
        if lam[0] < EPS_INTERIOR:
            raise BoundaryStateError("finite-difference stencil left the interior")
        return -float(np.real(np.trace(rho1 @ (v * np.log(lam)) @ v.conj().T)))

    return f


def _fd_hessian(f, x0, h):
    n = x0.size
    e = np.eye(n) * h
    f0 = f(x0)
    H = np.empty((n, n))
    for i in range(n):
        H[i, i] = (f(x0 + e[i]) - 2 * f0 + f(x0 - e[i])) / h**2
        for j in range(i + 1, n):
            H[i, j] = (
                f(x0 + e[i] + e[j]) - f(x0 + e[i] - e[j]) - f(x0 - e[i] + e[j]) + f(x0 - e[i] - e[j])
            ) / (4 * h**2)
            H[j, i] = H[i, j]
    return H


def bkm_hessian_numeric(rho1, chart=None, point=None, h=1e-4):
    """Finite-difference Hessian of ``lambda -> S(rho1 || chart(lambda))`` at ``rho1``.

    Parameters
    ----------
    rho1 : array_like
        Interior base state.
    chart : callable, optional
        Maps a coordinate vector to a density matrix. Defaults to the Bloch
        chart for qubits.
    point : array_like, optional
        Coordinates of ``rho1`` in ``chart``; required with a custom chart.
    h : float
        Step in ``[1e-6, 1e-3]``. Shrunk automatically near the boundary.

    Returns
    -------
    QuadraticForm
        Central differences with one Richardson level, symmetrised.
    """
    rho1 = check_density_matrix(rho1, interior=True)
    if not 1e-6 <= h <= 1e-3:
        raise StateError("step h must lie in [1e-6, 1e-3]")
    if chart is None:
        if rho1.shape != (2, 2):
            raise StateError("the default Bloch chart needs a qubit state")
        chart = bloch_to_density
        point = density_to_bloch(rho1)
        coords = ("x1", "x2", "x3")
    else:
        if point is None:
            raise StateError("a custom chart requires the base point coordinates")
        coords = tuple(f"l{i}" for i in range(len(point)))
    point = np.asarray(point, dtype=float)
    if np.max(np.abs(chart(point) - rho1)) > 1e-10:
        raise StateError("chart(point) does not reproduce rho1")

    # keep the stencil well inside the state space
    lam_min = np.linalg.eigvalsh(rho1)[0]
    h = max(min(h, 0.05 * lam_min), 1e-6)
    cross = _cross_entropy_fn(rho1)

    def f(lam):
        return cross(np.asarray(chart(lam), dtype=complex))

    try:
        coarse = _fd_hessian(f, point, h)
        fine = _fd_hessian(f, point, h / 2)
    except (StateError, ValueError) as exc:
        raise BoundaryStateError(f"stencil leaves state space: {exc}") from exc
    H = (4 * fine - coarse) / 3
    return QuadraticForm(0.5 * (H + H.T), coords)


# ---------------------------------------------------------------------------
# additivity, Cramer-Rao, ellipses
# ---------------------------------------------------------------------------

def bh_additivity_check(rho, drho, n):
    """``((1/n) g_BH(rho^n, d rho^n), g_BH(rho, drho))``; the two agree for every ``n``."""
    if n not in (1, 2, 3):
        raise StateError("additivity check supports n in {1, 2, 3}")
    lhs = bh_metric(tensor_power(rho, n), product_tangent(rho, drho, n)) / n
    return lhs, bh_metric(rho, drho)


def cramer_rao_bound(g_vv):
    """Lower bound ``1/g(v, v)`` on the variance of an unbiased estimator."""
    if not g_vv > 0:
        raise StateError("metric value must be positive")
    return 1.0 / g_vv


def disk_grid(n, r_max=0.95):
    """Square ``n x n`` grid on ``[-r_max, r_max]^2`` restricted to the disk ``r <= r_max``."""
    t = np.linspace(-r_max, r_max, n)
    xx, zz = np.meshgrid(t, t)
    pts = np.column_stack([xx.ravel(), zz.ravel()])
    return pts[np.hypot(pts[:, 0], pts[:, 1]) <= r_max + 1e-12]


def ellipse_field(centers, epsilon=0.05):
    """BH and BKM ellipses ``{v : g(v, v) = epsilon^2}`` on a planar slice of the Bloch ball.

    Each record holds the centre, the radial direction angle and, for both
    metrics, the radial and tangential semi-axes as drawn in the plane. The
    tangential extents are also given as angles (``*_dtheta``), the
    displacement in the polar angle that reaches ``g = epsilon^2``.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    records = []
    for x, z in centers:
        r = float(np.hypot(x, z))
        if r >= 1:
            raise StateError(f"grid point ({x}, {z}) outside the open unit disk")
        c, d = bkm_coefficients(r)
        rec = {
            "x": float(x),
            "z": float(z),
            "r": r,
            "orientation": float(np.arctan2(z, x)) if r > 0 else 0.0,
            "bh_radial": epsilon / np.sqrt(c),
            "bh_tangential": epsilon,
            "bkm_radial": epsilon / np.sqrt(c),
            "bkm_tangential": epsilon / np.sqrt(d),
            "bh_dtheta": epsilon / r if r > 0 else float("inf"),
            "bkm_dtheta": epsilon / (r * np.sqrt(d)) if r > 0 else float("inf"),
        }
        records.append(rec)
    return records
