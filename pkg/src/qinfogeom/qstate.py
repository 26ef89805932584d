"""State representations, validation helpers and Hermitian matrix functions.

States are plain numpy arrays. A density matrix is a ``(d, d)`` complex array,
a Bloch vector a length-3 float array, and a tangent vector a traceless
Hermitian ``(d, d)`` array. The ``check_*`` helpers validate and coerce inputs
in the same spirit as :func:`sklearn.utils.check_array`.
"""
from __future__ import annotations

import numpy as np

from .errors import BoundaryStateError, StateError

EPS_INTERIOR = 1e-9
MAX_DIM = 2**12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _check_square(a, name):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise StateError(f"{name} must be a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise StateError(f"{name} dimension {a.shape[0]} exceeds cap {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise StateError(f"{name} has non-finite entries")
    return a


def check_hermitian(h, atol=1e-10, name="matrix"):
    """Return ``h`` as a complex array, raising if it is not Hermitian."""
    h = _check_square(h, name)
    if np.max(np.abs(h - h.conj().T), initial=0.0) > atol:
        raise StateError(f"{name} is not Hermitian within {atol}")
    return h


def check_density_matrix(rho, interior=False, atol=1e-12):
    """Validate a density matrix.

    Parameters
    ----------
    rho : array_like, shape (d, d)
    interior : bool
        Additionally require every eigenvalue to be at least ``EPS_INTERIOR``.
    atol : float
        Tolerance on Hermiticity, trace and positivity.
    """
    rho = check_hermitian(rho, atol=atol, name="density matrix")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise StateError(f"density matrix trace is {tr!r}, expected 1")
    evals = np.linalg.eigvalsh(rho)
    if evals[0] < -atol:
        raise StateError(f"density matrix has negative eigenvalue {evals[0]:.3g}")
    if interior and evals[0] < EPS_INTERIOR:
        raise BoundaryStateError(
            f"boundary state: smallest eigenvalue {evals[0]:.3g} < {EPS_INTERIOR}"
        )
    return rho


def check_tangent(drho, dim=None, atol=1e-12):
    """Validate a tangent vector (traceless Hermitian matrix)."""
    drho = check_hermitian(drho, atol=atol, name="tangent vector")
    if dim is not None and drho.shape[0] != dim:
        raise StateError(f"tangent vector has dimension {drho.shape[0]}, expected {dim}")
    if abs(np.trace(drho)) > atol:
        raise StateError("tangent vector must be traceless")
    return drho


def check_basis(basis, dim=None, atol=1e-10):
    """Validate a measurement basis given as a matrix whose columns are the basis vectors."""
    b = _check_square(basis, "basis")
    if dim is not None and b.shape[0] != dim:
        raise StateError(f"basis has dimension {b.shape[0]}, expected {dim}")
    gram = b.conj().T @ b
    if np.max(np.abs(gram - np.eye(b.shape[0]))) > atol:
        raise StateError(f"basis vectors are not orthonormal within {atol}")
    return b


def check_bloch(x, interior=False):
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise StateError(f"Bloch vector must have shape (3,), got {x.shape}")
    r = np.linalg.norm(x)
    if r > 1 + 1e-12:
        raise StateError(f"Bloch vector norm {r!r} exceeds 1")
    if interior and r >= 1:
        raise BoundaryStateError("Bloch vector lies on the boundary |x| = 1")
    return x


# ---------------------------------------------------------------------------
# conversions and products
# ---------------------------------------------------------------------------

def bloch_to_density(x):
    """Qubit density matrix ``(I + x . sigma) / 2``."""
    x = check_bloch(x)
    return 0.5 * (np.eye(2, dtype=complex) + np.tensordot(x, PAULIS, axes=1))


def density_to_bloch(rho):
    """Bloch vector ``x_i = Tr[rho sigma_i]`` of a qubit state."""
    rho = check_density_matrix(rho)
    if rho.shape != (2, 2):
        raise StateError("density_to_bloch requires a qubit (2x2) state")
    return np.real(np.einsum("ij,kji->k", rho, PAULIS))


def planar_pair(r1, r2, theta):
    """Bloch vectors of two qubits in the x-z plane at relative angle ``theta``.

    ``X = (r1, 0, 0)`` and ``Y = (r2 cos theta, 0, -r2 sin theta)``, so that a
    measurement along ``(cos beta, 0, sin beta)`` sees projections
    ``r1 cos beta`` and ``r2 cos(theta + beta)``.
    """
    x = np.array([r1, 0.0, 0.0])
    y = np.array([r2 * np.cos(theta), 0.0, -r2 * np.sin(theta)])
    return x, y


def planar_states(r1, r2, theta):
    """Density matrices of :func:`planar_pair`."""
    x, y = planar_pair(r1, r2, theta)
    return bloch_to_density(x), bloch_to_density(y)


def _check_power(dim, n):
    if int(n) != n or n < 1:
        raise StateError(f"number of copies must be a positive integer, got {n}")
    if dim ** int(n) > MAX_DIM:
        raise StateError(f"dim**N = {dim}**{n} exceeds cap {MAX_DIM}")
    return int(n)


def kron_all(mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def tensor_power(rho, n):
    """``rho`` tensored with itself ``n`` times."""
    rho = check_density_matrix(rho)
    n = _check_power(rho.shape[0], n)
    return kron_all([rho] * n)


def product_tangent(rho, drho, n):
    """Derivative of ``rho^{(x)n}`` along ``drho`` (Leibniz rule).

    Sum over positions ``k`` of ``rho^{(x)k} (x) drho (x) rho^{(x)(n-k-1)}``.
    """
    rho = check_density_matrix(rho)
    drho = check_tangent(drho)
    if drho.shape != rho.shape:
        raise StateError("state and tangent vector dimensions differ")
    n = _check_power(rho.shape[0], n)
    # d(A (x) rho) = dA (x) rho + A (x) drho, accumulated left to right
    power, deriv = rho, drho
    for _ in range(n - 1):
        deriv = np.kron(deriv, rho) + np.kron(power, drho)
        power = np.kron(power, rho)
    return deriv


# ---------------------------------------------------------------------------
# matrix functions
# ---------------------------------------------------------------------------

def eig_hermitian(h):
    """Eigenvalues (ascending) and orthonormal eigenvector columns of ``h``."""
    h = check_hermitian(h)
    h = 0.5 * (h + h.conj().T)
    return np.linalg.eigh(h)


def hermitian_function(h, func):
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    w, v = eig_hermitian(h)
    return (v * func(w)) @ v.conj().T


def matrix_log(rho):
    """Natural logarithm of an interior density matrix."""
    rho = check_density_matrix(rho, interior=True)
    return hermitian_function(rho, np.log)


# ---------------------------------------------------------------------------
# random draws
# ---------------------------------------------------------------------------

def random_bloch(rng, r_max=1.0, r_min=0.0):
    """Bloch vector with direction uniform on the sphere and radius uniform in [r_min, r_max)."""
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return v * rng.uniform(r_min, r_max)


def random_density_matrix(dim, rng, min_eig=0.0):
    """Random full-rank state; every eigenvalue is at least ``min_eig``."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    rho = (1 - dim * min_eig) * rho + min_eig * np.eye(dim)
    return 0.5 * (rho + rho.conj().T)


def random_tangent(dim, rng, scale=1.0):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 0.5 * (g + g.conj().T)
    h -= np.trace(h) / dim * np.eye(dim)
    return scale * h


def random_unitary(dim, rng):
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
