import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import logm
from scipy.stats import entropy as scipy_kl

from conftest import R1, R2, THETA
from qinfogeom.basisopt import optimize_beta, qubit_basis
from qinfogeom.entropy import (
    kl_divergence,
    log_likelihood_rate,
    measured_entropy,
    qubit_measured_entropy,
    umegaki_entropy,
)
from qinfogeom.errors import BoundaryStateError, StateError
from qinfogeom.qstate import (
    bloch_to_density,
    planar_states,
    random_density_matrix,
    random_unitary,
)

probs = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6).map(lambda v: np.array(v) / sum(v))


def test_kl_examples():
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
    # hand evaluation: (1/3) log(2/3) + (2/3) log(4/3)
    oracle = (1 / 3) * math.log(2 / 3) + (2 / 3) * math.log(4 / 3)
    assert abs(oracle - 0.056633) < 5e-7
    assert kl_divergence([1 / 3, 2 / 3], [0.5, 0.5]) == pytest.approx(oracle, abs=1e-15)
    assert kl_divergence([1, 0], [0, 1]) == math.inf


def test_kl_zero_mass_convention():
    assert kl_divergence([0, 1], [0.5, 0.5]) == pytest.approx(math.log(2))


def test_kl_errors():
    with pytest.raises(StateError):
        kl_divergence([0.5, 0.5], [1 / 3, 1 / 3, 1 / 3])
    with pytest.raises(StateError):
        kl_divergence([0.5, 0.6], [0.5, 0.5])
    with pytest.raises(StateError):
        kl_divergence([1.5, -0.5], [0.5, 0.5])


@given(probs, st.integers(0, 10**6))
def test_kl_nonnegative_and_matches_scipy(p, seed):
    q = np.random.default_rng(seed).dirichlet(np.ones(p.size))
    d = kl_divergence(p, q)
    assert d >= 0
    assert d == pytest.approx(scipy_kl(p, q), rel=1e-10, abs=1e-14)
    assert kl_divergence(p, p) == 0.0


def test_log_likelihood_rate():
    p, q = [1 / 3, 2 / 3], [0.5, 0.5]
    expected = -0.0566330 - (1 / 100) * 0.5 * math.log(2 * math.pi * 100 * 2 / 9)
    assert log_likelihood_rate(100, p, q) == pytest.approx(expected, abs=1e-7)
    n = 50
    assert log_likelihood_rate(n, p, p) == pytest.approx(-0.5 * math.log(2 * math.pi * n * 2 / 9) / n)
    # the correction vanishes like log(N)/N
    for n in (10**3, 10**5, 10**7):
        assert abs(log_likelihood_rate(n, p, q) + kl_divergence(p, q)) < math.log(n) / n
    with pytest.raises(StateError):
        log_likelihood_rate(10, [1, 0], q)


def test_log_likelihood_rate_matches_exact_binomial():
    # probability under q of seeing the frequencies of p, from the exact binomial pmf
    from scipy.stats import binom

    n, p, q = 3000, 1 / 3, 0.5
    exact = binom.logpmf(n // 3, n, q) / n
    approx = log_likelihood_rate(n, [p, 1 - p], [q, 1 - q])
    assert abs(exact - approx) < 1e-4


def test_umegaki_benchmark():
    rho1, rho2 = planar_states(R1, R2, THETA)
    assert umegaki_entropy(rho1, rho2) == pytest.approx(0.6385, abs=5e-4)
    # independent route through scipy's matrix logarithm
    oracle = np.trace(rho1 @ (logm(rho1) - logm(rho2))).real
    assert umegaki_entropy(rho1, rho2) == pytest.approx(oracle, abs=1e-12)


def test_umegaki_identical_and_boundary():
    rho = bloch_to_density([0.3, 0.2, 0.1])
    assert umegaki_entropy(rho, rho) == pytest.approx(0.0, abs=1e-15)
    pure = np.diag([1.0, 0.0])
    assert umegaki_entropy(pure, rho) > 0  # pure first argument is fine
    with pytest.raises(BoundaryStateError):
        umegaki_entropy(rho, pure)


def test_umegaki_commuting_is_classical():
    rho1, rho2 = planar_states(0.7, 0.4, 0.0)
    p, q = [(1 + 0.7) / 2, (1 - 0.7) / 2], [(1 + 0.4) / 2, (1 - 0.4) / 2]
    assert umegaki_entropy(rho1, rho2) == pytest.approx(kl_divergence(p, q), abs=1e-14)


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4]))
def test_umegaki_commuting_property(seed, dim):
    rng = np.random.default_rng(seed)
    u = random_unitary(dim, rng)
    p, q = rng.dirichlet(np.ones(dim)), rng.dirichlet(np.ones(dim))
    rho1 = u @ np.diag(p) @ u.conj().T
    rho2 = u @ np.diag(q) @ u.conj().T
    assert umegaki_entropy(rho1, rho2) == pytest.approx(kl_divergence(p, q), rel=1e-9, abs=1e-12)


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4]))
def test_measured_below_umegaki(seed, dim):
    rng = np.random.default_rng(seed)
    rho1 = random_density_matrix(dim, rng, min_eig=1e-3)
    rho2 = random_density_matrix(dim, rng, min_eig=1e-3)
    b = random_unitary(dim, rng)
    assert measured_entropy(rho1, rho2, b) <= umegaki_entropy(rho1, rho2) + 1e-10
    assert measured_entropy(rho1, rho1, b) == pytest.approx(0.0, abs=1e-12)


def test_measured_in_shared_eigenbasis_equals_umegaki(rng):
    u = random_unitary(3, rng)
    rho1 = u @ np.diag([0.5, 0.3, 0.2]) @ u.conj().T
    rho2 = u @ np.diag([0.1, 0.6, 0.3]) @ u.conj().T
    assert measured_entropy(rho1, rho2, u) == pytest.approx(umegaki_entropy(rho1, rho2), abs=1e-12)


def test_measured_entropy_rejects_non_orthonormal():
    rho = np.eye(2) / 2
    with pytest.raises(StateError):
        measured_entropy(rho, rho, np.array([[1, 1], [0, 1]]))


def test_qubit_measured_entropy_matches_matrices(rng):
    for _ in range(20):
        r1, r2 = rng.uniform(0, 0.99, 2)
        theta, beta = rng.uniform(0, 2 * np.pi, 2)
        rho1, rho2 = planar_states(r1, r2, theta)
        got = qubit_measured_entropy(r1, r2, theta, beta)
        assert got == pytest.approx(measured_entropy(rho1, rho2, qubit_basis(beta)), abs=1e-12)


def test_qubit_measured_entropy_trivial_cases():
    betas = np.linspace(0, 2 * np.pi, 17)
    np.testing.assert_array_equal(qubit_measured_entropy(0.6, 0.6, 0.0, betas), 0.0)
    assert qubit_measured_entropy(0.9, 0.3, 0.0, np.pi / 2) == pytest.approx(0.0, abs=1e-16)
    with pytest.raises(StateError):
        qubit_measured_entropy(1.0, 0.5, 0.0, 0.0)


def test_qubit_curve_has_single_maximum_on_half_period():
    betas = np.linspace(0, np.pi, 4096, endpoint=False)
    s = qubit_measured_entropy(R1, R2, THETA, betas)
    # strict local maxima on the periodic grid
    peaks = np.flatnonzero((s > np.roll(s, 1)) & (s > np.roll(s, -1)))
    assert len(peaks) == 1
    beta_star, s_star = optimize_beta(R1, R2, THETA)
    assert abs(betas[peaks[0]] - beta_star) < np.pi / 4096 * 2
    assert s[peaks[0]] == pytest.approx(s_star, abs=1e-6)


@pytest.mark.parametrize("theta", [0.0, np.pi])
def test_optimised_equals_umegaki_at_commuting_angles(theta):
    rho1, rho2 = planar_states(0.9, 0.9, theta) if theta else planar_states(0.9, 0.4, theta)
    r2 = 0.9 if theta else 0.4
    assert optimize_beta(0.9, r2, theta)[1] == pytest.approx(umegaki_entropy(rho1, rho2), abs=1e-6)
