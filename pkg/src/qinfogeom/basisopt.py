"""Measurement-basis optimisation for discriminating ``rho1^{(x)N}`` from ``rho2^{(x)N}``.

Bases are ``(d, d)`` matrices whose columns are the measurement vectors.
All multi-qubit values are reported per qubit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import expm
from scipy.optimize import minimize_scalar
from scipy.spatial.transform import Rotation
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .entropy import _kl, measured_entropy, outcome_probabilities, qubit_measured_entropy
from .errors import StateError
from .qstate import (
    PAULIS,
    check_bloch,
    check_density_matrix,
    density_to_bloch,
    kron_all,
    planar_states,
)


class CanonicalPair(NamedTuple):
    r1: float
    r2: float
    theta: float


class McResult(NamedTuple):
    basis: np.ndarray
    value: float
    trace: list
    chain_values: list


@dataclass(frozen=True)
class McConfig:
    """Settings for the greedy Monte-Carlo basis search.

    ``step_size`` is halved after ``patience`` consecutive rejections, never
    going below ``min_step``. Chain ``k > 0`` starts from the structured basis
    rotated by a random orthogonal matrix of size ``jitter``.
    """

    steps: int = 100_000
    step_size: float = 0.1
    seed: int = 0
    restarts: int = 4
    patience: int = 500
    min_step: float = 1e-4
    jitter: float = 0.3

    def __post_init__(self):
        if self.steps < 1:
            raise StateError("steps must be >= 1")
        if not 0 < self.step_size <= 1:
            raise StateError("step_size must lie in (0, 1]")
        if self.restarts < 1:
            raise StateError("restarts must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise StateError("seed must be a 64-bit unsigned integer")


# ---------------------------------------------------------------------------
# canonical frame
# ---------------------------------------------------------------------------

def _frame_rotation(x, y):
    """Rotation taking ``x`` to the +x axis and ``y`` into the x-z plane with z <= 0."""
    tol = 1e-14
    rx, ry = np.linalg.norm(x), np.linalg.norm(y)
    if rx > tol:
        e1 = x / rx
    elif ry > tol:
        e1 = y / ry
    else:
        e1 = np.array([1.0, 0.0, 0.0])
    perp = y - (y @ e1) * e1
    if np.linalg.norm(perp) > tol * max(ry, 1.0):
        f = perp / np.linalg.norm(perp)
    else:
        # any unit vector orthogonal to e1
        trial = np.eye(3)[np.argmin(np.abs(e1))]
        f = trial - (trial @ e1) * e1
        f /= np.linalg.norm(f)
    return np.array([e1, np.cross(e1, f), -f])


def _su2_from_rotation(R):
    rotvec = Rotation.from_matrix(R).as_rotvec()
    angle = np.linalg.norm(rotvec)
    if angle == 0:
        return np.eye(2, dtype=complex)
    n = rotvec / angle
    return np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * np.tensordot(n, PAULIS, axes=1)


def canonical_frame(x, y):
    """Canonical pair for Bloch vectors ``x``, ``y`` and the unitary ``U`` realising it.

    ``U rho(x) U^dagger`` and ``U rho(y) U^dagger`` are the states of
    :func:`qinfogeom.qstate.planar_states` for the returned pair.
    """
    x = check_bloch(x, interior=True)
    y = check_bloch(y, interior=True)
    R = _frame_rotation(x, y)
    r1, r2 = float(np.linalg.norm(x)), float(np.linalg.norm(y))
    theta = 0.0
    if r1 > 0 and r2 > 0:
        theta = float(np.arccos(np.clip(x @ y / (r1 * r2), -1.0, 1.0)))
    return CanonicalPair(r1, r2, theta), _su2_from_rotation(R)


def canonicalize(x, y):
    """Reduce two Bloch vectors to ``(|x|, |y|, angle between them)``."""
    return canonical_frame(x, y)[0]


# ---------------------------------------------------------------------------
# structured bases
# ---------------------------------------------------------------------------

def qubit_basis(beta):
    """Columns ``|+>, |->``: eigenvectors of ``m . sigma`` with ``m = (cos beta, 0, sin beta)``."""
    g = np.pi / 2 - beta
    c, s = np.cos(g / 2), np.sin(g / 2)
    return np.array([[c, -s], [s, c]])


def bell_mixed_basis(beta):
    """Two Bell-type and two product vectors built on :func:`qubit_basis`.

    Columns are ``(|+-> + |-+>)/sqrt2``, ``(|+-> - |-+>)/sqrt2``, ``|++>``, ``|-->``.
    """
    b = qubit_basis(beta)
    plus, minus = b[:, 0], b[:, 1]
    pm, mp = np.kron(plus, minus), np.kron(minus, plus)
    return np.column_stack(
        [(pm + mp) / np.sqrt(2), (pm - mp) / np.sqrt(2), np.kron(plus, plus), np.kron(minus, minus)]
    )


def _maximize_periodic(func, period, n_grid=1024, xtol=1e-10):
    grid = np.linspace(0.0, period, n_grid, endpoint=False)
    vals = np.array([func(b) for b in grid])
    k = int(np.argmax(vals))
    step = period / n_grid
    res = minimize_scalar(
        lambda b: -func(b),
        bounds=(grid[k] - step, grid[k] + step),
        method="bounded",
        options={"xatol": xtol},
    )
    if -res.fun >= vals[k]:
        return float(np.mod(res.x, period)), float(-res.fun)
    return float(grid[k]), float(vals[k])


def _same_states(r1, r2, theta):
    return abs(r1 - r2) < 1e-15 and (r1 == 0 or abs(np.sin(theta / 2)) < 1e-15)


def _check_pair(r1, r2, theta):
    for r in (r1, r2):
        if not 0 <= r < 1:
            raise StateError(f"radius {r!r} outside [0, 1)")
    if not np.isfinite(theta):
        raise StateError("theta must be finite")


def optimize_beta(r1, r2, theta, n_grid=1024, xtol=1e-10):
    """Best single-qubit measurement angle and the measured entropy it achieves.

    Returns ``(nan, 0.0)`` for identical states, where every angle is optimal.
    """
    _check_pair(r1, r2, theta)
    if _same_states(r1, r2, theta):
        return math.nan, 0.0
    return _maximize_periodic(
        lambda b: qubit_measured_entropy(r1, r2, theta, b), 2 * np.pi, n_grid, xtol
    )


def _real_planar(r1, r2, theta, n):
    a, b = planar_states(r1, r2, theta)
    a, b = a.real, b.real
    return kron_all([a] * n).real, kron_all([b] * n).real


def _per_qubit(basis, R1, R2, n):
    p = np.sum(basis * (R1 @ basis), axis=0)
    q = np.sum(basis * (R2 @ basis), axis=0)
    return _kl(np.clip(p, 0, None), np.clip(q, 0, None)) / n


def two_qubit_bell_strategy(r1, r2, theta, n_grid=1024, xtol=1e-10):
    """Optimise :func:`bell_mixed_basis` over ``beta``; value is per qubit."""
    _check_pair(r1, r2, theta)
    if _same_states(r1, r2, theta):
        return math.nan, 0.0
    R1, R2 = _real_planar(r1, r2, theta, 2)
    # beta -> beta + pi maps the basis onto itself
    return _maximize_periodic(lambda b: _per_qubit(bell_mixed_basis(b), R1, R2, 2), np.pi, n_grid, xtol)


def structured_basis(r1, r2, theta, n):
    """Best known closed-form basis for ``n`` qubits in the canonical frame."""
    b1, _ = optimize_beta(r1, r2, theta)
    b1 = 0.0 if math.isnan(b1) else b1
    single = qubit_basis(b1)
    if n == 1:
        return single
    b2, _ = two_qubit_bell_strategy(r1, r2, theta)
    bell = bell_mixed_basis(0.0 if math.isnan(b2) else b2)
    if n == 2:
        return bell
    if n == 3:
        return np.kron(bell, single)
    raise StateError("block size must be 1, 2 or 3")


# ---------------------------------------------------------------------------
# Monte-Carlo search
# ---------------------------------------------------------------------------

def random_orthogonal_step(dim, eps, rng):
    """``expm(eps * A)`` with ``A`` antisymmetric, upper entries standard normal."""
    if not 0 < eps <= 1:
        raise StateError("eps must lie in (0, 1]")
    a = np.triu(rng.normal(size=(dim, dim)), 1)
    return expm(eps * (a - a.T))


def _run_chain(start, R1, R2, n, cfg, rng):
    basis = start
    current = _per_qubit(basis, R1, R2, n)
    trace = [current]
    eps, rejects = cfg.step_size, 0
    dim = basis.shape[0]
    for _ in range(cfg.steps):
        proposal = basis @ random_orthogonal_step(dim, eps, rng)
        value = _per_qubit(proposal, R1, R2, n)
        if value > current:
            basis, current, rejects = proposal, value, 0
            trace.append(current)
        else:
            rejects += 1
            if rejects >= cfg.patience:
                eps, rejects = max(eps / 2, cfg.min_step), 0
    return basis, current, trace


def _states_to_pair(rho1, rho2):
    rho1 = check_density_matrix(rho1)
    rho2 = check_density_matrix(rho2)
    if rho1.shape != (2, 2) or rho2.shape != (2, 2):
        raise StateError("Monte-Carlo search expects single-qubit states")
    return canonical_frame(density_to_bloch(rho1), density_to_bloch(rho2))


def mc_optimize(rho1, rho2, n, config=None, n_jobs=1):
    """Greedy Monte-Carlo ascent of the per-qubit measured entropy over real orthogonal bases.

    The two qubit states are rotated into the x-z plane, where an optimal
    basis for ``rho^{(x)n}`` can be taken real. Each chain proposes
    ``basis @ expm(eps A)`` and keeps it only if the measured entropy
    increases. ``config.restarts`` chains run from independent seeds; the best
    result is returned with its basis mapped back to the original frame.

    Returns
    -------
    McResult
        ``basis`` (columns, original frame), ``value`` per qubit, ``trace`` of
        accepted values for the winning chain, and each chain's final value.
    """
    if n not in (1, 2, 3):
        raise StateError("block size must be 1, 2 or 3")
    cfg = config or McConfig()
    pair, U = _states_to_pair(rho1, rho2)
    R1, R2 = _real_planar(*pair, n)
    start = structured_basis(*pair, n)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)

    def chain(k):
        rng = np.random.default_rng(seeds[k])
        init = start if k == 0 else start @ random_orthogonal_step(2**n, cfg.jitter, rng)
        return _run_chain(init, R1, R2, n, cfg, rng)

    if n_jobs == 1:
        results = [chain(k) for k in range(cfg.restarts)]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(chain)(k) for k in range(cfg.restarts))
    best = max(range(len(results)), key=lambda k: results[k][1])
    basis, value, trace = results[best]
    back = kron_all([U.conj().T] * n) @ basis
    return McResult(back, value, trace, [r[1] for r in results])


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

class _BasisEstimator(BaseEstimator):
    """Common ``fit(rho1, rho2)`` / ``transform`` / ``score`` surface.

    ``fit`` learns a measurement basis for telling ``rho1`` from ``rho2``;
    ``transform`` maps states to outcome probabilities in that basis; ``score``
    is the per-qubit measured entropy the basis achieves on a pair.
    """

    n_qubits = 1

    def _fit_canonical(self, pair):
        raise NotImplementedError

    def fit(self, rho1, rho2):
        pair, U = _states_to_pair(rho1, rho2)
        self.pair_ = pair
        self.frame_ = U
        canonical = self._fit_canonical(pair)
        self.basis_ = kron_all([U.conj().T] * self.n_qubits) @ canonical
        return self

    def transform(self, rho):
        check_is_fitted(self, "basis_")
        rho = check_density_matrix(rho)
        if rho.shape[0] == 2 and self.n_qubits > 1:
            rho = kron_all([rho] * self.n_qubits)
        return outcome_probabilities(rho, self.basis_)

    def score(self, rho1, rho2):
        check_is_fitted(self, "basis_")
        n = self.n_qubits
        a, b = (kron_all([r] * n) if np.shape(r)[0] == 2 and n > 1 else r for r in (rho1, rho2))
        return measured_entropy(a, b, self.basis_) / n


class QubitBasisOptimizer(_BasisEstimator):
    """Best single-qubit projective measurement (grid search plus bounded refinement)."""

    def __init__(self, n_grid=1024, xtol=1e-10):
        self.n_grid = n_grid
        self.xtol = xtol

    def _fit_canonical(self, pair):
        self.beta_, self.value_ = optimize_beta(*pair, n_grid=self.n_grid, xtol=self.xtol)
        return qubit_basis(0.0 if math.isnan(self.beta_) else self.beta_)


class BellMixedBasisOptimizer(_BasisEstimator):
    """Two-qubit measurement in the Bell-mixed basis with optimised angle."""

    n_qubits = 2

    def __init__(self, n_grid=1024, xtol=1e-10):
        self.n_grid = n_grid
        self.xtol = xtol

    def _fit_canonical(self, pair):
        self.beta_, self.value_ = two_qubit_bell_strategy(*pair, n_grid=self.n_grid, xtol=self.xtol)
        return bell_mixed_basis(0.0 if math.isnan(self.beta_) else self.beta_)


class MonteCarloBasisSearch(_BasisEstimator):
    """Greedy random-rotation search for an entangled ``n_qubits`` measurement basis."""

    def __init__(self, n_qubits=2, steps=100_000, step_size=0.1, restarts=4, seed=0,
                 patience=500, min_step=1e-4, jitter=0.3, n_jobs=1):
        self.n_qubits = n_qubits
        self.steps = steps
        self.step_size = step_size
        self.restarts = restarts
        self.seed = seed
        self.patience = patience
        self.min_step = min_step
        self.jitter = jitter
        self.n_jobs = n_jobs

    def fit(self, rho1, rho2):
        cfg = McConfig(self.steps, self.step_size, self.seed, self.restarts,
                       self.patience, self.min_step, self.jitter)
        res = mc_optimize(rho1, rho2, self.n_qubits, cfg, n_jobs=self.n_jobs)
        self.pair_, self.frame_ = _states_to_pair(rho1, rho2)
        self.basis_ = res.basis
        self.value_ = res.value
        self.trace_ = res.trace
        self.chain_values_ = res.chain_values
        return self
