"""Sampling simulation of two-qubit state discrimination with an exchange pulse.

Evolution is generated by ``H = sigma_1.B_1 + sigma_2.B_2 + J sigma_1.sigma_2``
(hbar = 1) over piecewise-constant segments. An entangling evolution followed
by separate projective measurements of each qubit realises the Bell-mixed
measurement basis, which beats the best one-qubit-at-a-time measurement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .basisopt import canonical_frame, optimize_beta, qubit_basis, two_qubit_bell_strategy
from .entropy import outcome_probabilities
from .errors import StateError
from .qstate import PAULIS, check_basis, check_density_matrix, density_to_bloch, kron_all

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
_I2 = np.eye(2)
_SIGMA_DOT_SIGMA = sum(np.kron(s, s) for s in PAULIS)


@dataclass(frozen=True)
class PulseSchedule:
    """Constant fields ``b1``, ``b2`` with a sequence of ``(J, duration)`` exchange segments."""

    b1: tuple = (0.0, 0.0, 0.0)
    b2: tuple = (0.0, 0.0, 0.0)
    segments: tuple = ()

    def __post_init__(self):
        for seg in self.segments:
            if len(seg) != 2 or not seg[1] > 0 or not all(map(math.isfinite, seg)):
                raise StateError(f"invalid segment {seg!r}; need (J, duration > 0)")
        for b in (self.b1, self.b2):
            if len(b) != 3:
                raise StateError("fields must be 3-vectors")


def heisenberg_hamiltonian(b1, b2, j):
    local = np.kron(np.tensordot(b1, PAULIS, axes=1), _I2) + np.kron(_I2, np.tensordot(b2, PAULIS, axes=1))
    return local + j * _SIGMA_DOT_SIGMA


def heisenberg_unitary(schedule):
    """Time-ordered product of ``exp(-i H_k t_k)`` over the schedule's segments."""
    u = np.eye(4, dtype=complex)
    for j, t in schedule.segments:
        u = expm(-1j * t * heisenberg_hamiltonian(schedule.b1, schedule.b2, j)) @ u
    return u


def protocol_unitary(schedules):
    """Evolution of several schedules applied one after another."""
    u = np.eye(4, dtype=complex)
    for sched in schedules:
        u = heisenberg_unitary(sched) @ u
    return u


def sqrt_swap():
    """Principal square root of SWAP: identity on the triplet, ``+i`` on the singlet."""
    a, b = (1 + 1j) / 2, (1 - 1j) / 2
    return np.array([[1, 0, 0, 0], [0, a, b, 0], [0, b, a, 0], [0, 0, 0, 1]], dtype=complex)


def sqrt_swap_schedule(inverse=False):
    """Exchange pulse with ``J t = pi/8`` (``-pi/8`` for the inverse); equals sqrt(SWAP) up to phase."""
    return PulseSchedule(segments=((-math.pi / 8 if inverse else math.pi / 8, 1.0),))


def equal_up_to_phase(u, v, atol=1e-10):
    return abs(abs(np.trace(u.conj().T @ v)) - u.shape[0]) < atol


def is_unitary(u, atol=1e-10):
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < atol


def entangling_protocol(beta):
    """Pulse sequence whose evolution ``W`` makes the computational basis read out the Bell-mixed basis.

    With ``W`` applied to ``rho (x) rho`` and each qubit measured in
    ``{|0>, |1>}``, outcome ``k`` has probability ``<b_k| rho (x) rho |b_k>``
    for the columns ``b_k`` of ``bell_mixed_basis(beta)``. The sequence is a
    y-rotation of both qubits, a z-field phase pulse of opposite sign on the two
    qubits, and an inverse sqrt(SWAP) exchange pulse.
    """
    gamma = math.pi / 2 - beta
    rotate = PulseSchedule(b1=(0.0, -gamma / 2, 0.0), b2=(0.0, -gamma / 2, 0.0), segments=((0.0, 1.0),))
    phase = PulseSchedule(b1=(0.0, 0.0, -math.pi / 8), b2=(0.0, 0.0, math.pi / 8), segments=((0.0, 1.0),))
    return [rotate, phase, sqrt_swap_schedule(inverse=True)]


def effective_basis(evolution):
    """Basis measured by applying ``evolution`` and then reading out in the computational basis."""
    return evolution.conj().T


def sample_measurement(rho, basis, rng, size=None):
    """Draw outcome indices with Born probabilities ``<i|rho|i>``."""
    rho = check_density_matrix(rho)
    basis = check_basis(basis, dim=rho.shape[0])
    p = outcome_probabilities(rho, basis)
    return rng.choice(rho.shape[0], size=size, p=p / p.sum())


@dataclass
class TrialRecord:
    outcomes: np.ndarray
    true_state: int
    llr: float
    block_llr: np.ndarray = field(repr=False)


@dataclass
class DiscriminationResult:
    """Outcome of :func:`run_discrimination`; ``rate`` and ``stderr`` are nats per copy."""

    strategy: str
    copies: int
    seed: object
    record: TrialRecord
    rate: float
    stderr: float
    expected_rate: float
    basis: np.ndarray = field(repr=False)
    protocol: list = field(default_factory=list, repr=False)
    beta: float = math.nan

    @property
    def decision(self):
        return 1 if self.record.llr > 0 else 2

    def summary(self):
        return {
            "strategy": self.strategy,
            "copies": self.copies,
            "rate": self.rate,
            "stderr": self.stderr,
            "seed": self.seed,
            "expected_rate": self.expected_rate,
            "beta": self.beta,
            "llr": self.record.llr,
            "decision": self.decision,
        }


def jackknife_stderr(values, groups=100):
    """Delete-one-group jackknife standard error of the mean of ``values``."""
    values = np.asarray(values, dtype=float)
    g = min(groups, values.size)
    if g < 2:
        return math.nan
    chunks = np.array_split(values, g)
    sums = np.array([c.sum() for c in chunks])
    counts = np.array([c.size for c in chunks])
    loo = (sums.sum() - sums) / (counts.sum() - counts)
    return float(math.sqrt((g - 1) / g * np.sum((loo - loo.mean()) ** 2)))


def _frame(rho1, rho2):
    rho1 = check_density_matrix(rho1)
    rho2 = check_density_matrix(rho2)
    if rho1.shape != (2, 2) or rho2.shape != (2, 2):
        raise StateError("discrimination experiment expects single-qubit states")
    return canonical_frame(density_to_bloch(rho1), density_to_bloch(rho2))


def run_discrimination(rho1, rho2, strategy="single", copies=10**6, seed=0, true_state=1):
    """Sample a discrimination experiment and estimate the log-likelihood-ratio rate.

    Parameters
    ----------
    strategy : {"single", "entangled"}
        ``"single"`` measures every qubit in the optimal one-qubit basis;
        ``"entangled"`` pairs the qubits, applies the pulse sequence of
        :func:`entangling_protocol` and measures each qubit separately.
    copies : int
        Number of qubits consumed; must be even for ``"entangled"``.
    seed : int or numpy.random.Generator
    true_state : {1, 2}
        Which hypothesis generates the data.

    Returns
    -------
    DiscriminationResult
        ``rate`` is the log-likelihood ratio ``log p1/p2`` per copy, with a
        jackknife standard error; ``expected_rate`` is its exact mean.
    """
    if strategy not in ("single", "entangled"):
        raise StateError(f"unknown strategy {strategy!r}")
    if int(copies) != copies or copies < 1:
        raise StateError("copies must be a positive integer")
    copies = int(copies)
    if strategy == "entangled" and copies % 2:
        raise StateError("the entangled strategy needs an even number of copies")
    if true_state not in (1, 2):
        raise StateError("true_state must be 1 or 2")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pair, frame = _frame(rho1, rho2)

    protocol = []
    if strategy == "single":
        beta, _ = optimize_beta(*pair)
        beta = 0.0 if math.isnan(beta) else beta
        basis = frame.conj().T @ qubit_basis(beta)
        s1, s2, n = rho1, rho2, 1
    else:
        beta, _ = two_qubit_bell_strategy(*pair)
        beta = 0.0 if math.isnan(beta) else beta
        protocol = entangling_protocol(beta)
        local = np.kron(frame, frame)
        basis = effective_basis(protocol_unitary(protocol) @ local)
        s1, s2, n = kron_all([rho1] * 2), kron_all([rho2] * 2), 2

    p = outcome_probabilities(np.asarray(s1, dtype=complex), basis)
    q = outcome_probabilities(np.asarray(s2, dtype=complex), basis)
    with np.errstate(divide="ignore"):
        terms = np.log(p) - np.log(q)
    truth = p if true_state == 1 else q
    blocks = copies // n
    outcomes = rng.choice(len(truth), size=blocks, p=truth / truth.sum())
    block_llr = terms[outcomes]
    llr = float(block_llr.sum())
    mask = truth > 0
    expected = float(np.sum(truth[mask] * terms[mask])) / n
    record = TrialRecord(outcomes, true_state, llr, block_llr)
    return DiscriminationResult(
        strategy=strategy,
        copies=copies,
        seed=seed if not isinstance(seed, np.random.Generator) else None,
        record=record,
        rate=llr / copies,
        stderr=jackknife_stderr(block_llr) / n,
        expected_rate=expected,
        basis=basis,
        protocol=protocol,
        beta=float(beta),
    )
