"""Classical and quantum relative entropies (natural logarithms throughout)."""
from __future__ import annotations

import math

import numpy as np

from .errors import StateError
from .qstate import check_basis, check_density_matrix, eig_hermitian, matrix_log


def check_distribution(p, atol=1e-12):
    """Validate a probability vector; tiny negative round-off is clipped to zero."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise StateError("distribution must be a non-empty 1-d vector")
    if not np.all(np.isfinite(p)) or np.any(p < -atol) or np.any(p > 1 + atol):
        raise StateError("distribution entries must lie in [0, 1]")
    if abs(p.sum() - 1.0) > atol:
        raise StateError(f"distribution sums to {p.sum()!r}, expected 1")
    return np.clip(p, 0.0, 1.0)


def _kl(p, q):
    # 0 log(0/q) = 0; p > 0 with q = 0 gives +inf
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def kl_divergence(p, q):
    """Kullback-Leibler divergence ``sum_i p_i log(p_i / q_i)`` in nats.

    Returns ``math.inf`` when ``p`` puts mass where ``q`` has none.
    """
    p = check_distribution(p)
    q = check_distribution(q)
    if p.shape != q.shape:
        raise StateError("distributions have different lengths")
    return max(_kl(p, q), 0.0)


def log_likelihood_rate(n, p, q):
    """Per-trial log-likelihood that ``n`` binary trials with frequencies ``p`` came from ``q``.

    Leading term ``-D(P||Q)`` plus the Stirling power-law correction
    ``(1/n) log(1/sqrt(2 pi n p (1-p)))``.
    """
    p = check_distribution(p)
    q = check_distribution(q)
    if p.shape != (2,) or q.shape != (2,):
        raise StateError("log_likelihood_rate expects binary distributions")
    if int(n) != n or n < 1:
        raise StateError("n must be a positive integer")
    ph = p[0]
    if ph <= 0 or ph >= 1:
        raise StateError("Stirling correction undefined for p in {0, 1}")
    return -kl_divergence(p, q) - math.log(2 * math.pi * n * ph * (1 - ph)) / (2 * n)


def von_neumann_term(rho):
    """``Tr[rho log rho]`` with ``0 log 0 = 0``."""
    w, _ = eig_hermitian(rho)
    w = w[w > 0]
    return float(np.sum(w * np.log(w)))


def umegaki_entropy(rho1, rho2):
    """Quantum relative entropy ``Tr[rho1 log rho1 - rho1 log rho2]``.

    ``rho2`` must be interior; ``rho1`` may be any valid state.
    """
    rho1 = check_density_matrix(rho1)
    rho2 = check_density_matrix(rho2, interior=True)
    if rho1.shape != rho2.shape:
        raise StateError("states have different dimensions")
    cross = np.real(np.trace(rho1 @ matrix_log(rho2)))
    return max(von_neumann_term(rho1) - cross, 0.0)


def outcome_probabilities(rho, basis):
    """Born probabilities ``<i|rho|i>`` for the columns of ``basis``."""
    p = np.real(np.einsum("ji,jk,ki->i", basis.conj(), rho, basis))
    return np.clip(p, 0.0, None)


def measured_entropy(rho1, rho2, basis):
    """KL divergence between the outcome statistics of a projective measurement.

    ``basis`` holds the measurement vectors as columns.
    """
    rho1 = check_density_matrix(rho1)
    rho2 = check_density_matrix(rho2)
    if rho1.shape != rho2.shape:
        raise StateError("states have different dimensions")
    basis = check_basis(basis, dim=rho1.shape[0])
    return max(_kl(outcome_probabilities(rho1, basis), outcome_probabilities(rho2, basis)), 0.0)


def qubit_measured_entropy(r1, r2, theta, beta):
    """Measured relative entropy of two in-plane qubits for measurement angle ``beta``.

    Uses ``p = (1 +- r1 cos beta)/2`` and ``q = (1 +- r2 cos(theta + beta))/2``.
    Vectorised over ``beta``.
    """
    for r in (r1, r2):
        if not 0 <= r < 1:
            raise StateError(f"radius {r!r} outside [0, 1)")
    beta = np.asarray(beta, dtype=float)
    a = r1 * np.cos(beta)
    b = r2 * np.cos(theta + beta)
    s = 0.5 * (1 + a) * np.log((1 + a) / (1 + b)) + 0.5 * (1 - a) * np.log((1 - a) / (1 - b))
    s = np.maximum(s, 0.0)
    return float(s) if s.ndim == 0 else s
