import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causallab.dirichlet import flat_hyperprior, sample_hyperprior
from causallab.direction import (
    BaselineErrorEstimate,
    classify_direction,
    estimate_baseline_error,
    forward_jacobian,
    log_abs_det,
    log_det_forward,
    log_lr_flat_batch,
    lr_binary,
    lr_general,
    lr_with_hyperprior,
)
from causallab.errors import DegenerateMarginalError, ValidationError
from causallab.rng import stream
from causallab.structures import CausalStructure
from causallab.tables import ConditionalTable, JointTable, SimplexVector, compose, outer, transpose

T22 = JointTable([[0.1, 0.4], [0.2, 0.3]])


def _random_factorization(kx, ky, rng):
    m = SimplexVector(rng.dirichlet(np.ones(kx)))
    c = ConditionalTable(rng.dirichlet(np.ones(ky), size=kx))
    return m, c


def _fd_jacobian(m: SimplexVector, c: ConditionalTable, h=1e-6) -> np.ndarray:
    """Independent central-finite-difference oracle for the factorization map."""
    kx, ky = c.rows.shape

    def build(theta):
        mv = np.empty(kx)
        mv[:-1] = theta[: kx - 1]
        mv[-1] = 1.0 - mv[:-1].sum()
        rows = np.empty((kx, ky))
        rows[:, :-1] = theta[kx - 1 :].reshape(kx, ky - 1)
        rows[:, -1] = 1.0 - rows[:, :-1].sum(axis=1)
        return (mv[:, None] * rows).reshape(-1)[:-1]

    theta0 = np.concatenate([m.values[:-1], c.rows[:, :-1].reshape(-1)])
    n = theta0.size
    jac = np.empty((n, n))
    for col in range(n):
        up, down = theta0.copy(), theta0.copy()
        up[col] += h
        down[col] -= h
        jac[:, col] = (build(up) - build(down)) / (2 * h)
    return jac


def test_lr_binary_example_against_jacobian_oracle():
    # the Jacobian-determinant oracle independently reproduces log(0.84)
    res = lr_binary(T22)
    m_x = SimplexVector([0.5, 0.5])
    c_yx = ConditionalTable([[0.2, 0.8], [0.4, 0.6]])
    m_y = SimplexVector([0.3, 0.7])
    c_xy = ConditionalTable([[1 / 3, 2 / 3], [4 / 7, 3 / 7]])
    oracle = log_abs_det(_fd_jacobian(m_y, c_xy)) - log_abs_det(_fd_jacobian(m_x, c_yx))
    assert res.log_lr == pytest.approx(np.log(0.84), abs=1e-12)
    assert res.log_lr == pytest.approx(oracle, abs=1e-5)
    assert res.decided == CausalStructure.Y_TO_X


def test_lr_binary_ties():
    uniform = JointTable.uniform(2, 2)
    res = lr_binary(uniform)
    assert res.log_lr == 0.0
    assert res.decided == CausalStructure.X_TO_Y  # deterministic tie policy
    equal_ef = JointTable([[0.2, 0.3], [0.3, 0.2]])
    assert lr_binary(equal_ef).log_lr == pytest.approx(0.0, abs=1e-12)


def test_lr_binary_rejects_degenerate():
    with pytest.raises(DegenerateMarginalError):
        lr_binary(JointTable([[0.5, 0.5], [0.0, 0.0]]))


def test_forward_jacobian_binary_closed_form():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        m, c = _random_factorization(2, 2, rng)
        det = np.exp(log_abs_det(forward_jacobian(m, c)))
        a = m.values[0]
        assert det == pytest.approx(a * (1 - a), rel=1e-6)


@pytest.mark.parametrize("kx,ky", [(2, 2), (3, 3), (4, 4), (2, 3), (3, 2)])
def test_forward_jacobian_matches_finite_differences(kx, ky):
    rng = np.random.default_rng(kx * 10 + ky)
    for _ in range(25):
        m, c = _random_factorization(kx, ky, rng)
        analytic = log_abs_det(forward_jacobian(m, c))
        fd = log_abs_det(_fd_jacobian(m, c))
        assert analytic == pytest.approx(fd, abs=1e-5)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_closed_form_matches_jacobian_determinant(k):
    rng = np.random.default_rng(k)
    for _ in range(1000):
        m, c = _random_factorization(k, k, rng)
        assert log_det_forward(m, k) == pytest.approx(
            log_abs_det(forward_jacobian(m, c)), abs=1e-6
        )


def test_log_det_forward_values():
    assert log_det_forward(SimplexVector([0.5, 0.5]), 2) == pytest.approx(np.log(0.25))
    assert log_det_forward(SimplexVector([1 / 3] * 3), 3) == pytest.approx(2 * 3 * np.log(1 / 3))
    assert log_det_forward(SimplexVector([0.3, 0.7]), 1) == 0.0


def test_lr_general_agrees_with_binary():
    rng = np.random.default_rng(5)
    for _ in range(200):
        raw = rng.dirichlet(np.ones(4)).reshape(2, 2)
        joint = JointTable(raw)
        assert lr_general(joint).log_lr == pytest.approx(lr_binary(joint).log_lr, abs=1e-8)


def test_lr_general_uniform_effect_side_decides_x_to_y():
    p = SimplexVector([0.7, 0.2, 0.1])
    q = SimplexVector.uniform(3)
    res = lr_general(outer(p, q))
    assert res.decided == CausalStructure.X_TO_Y
    assert res.log_lr > 0


@st.composite
def square_joints(draw):
    k = draw(st.integers(2, 4))
    raw = draw(st.lists(st.floats(0.05, 1.0), min_size=k * k, max_size=k * k))
    arr = np.array(raw).reshape(k, k)
    return JointTable(arr / arr.sum())


@given(square_joints())
@settings(max_examples=80, deadline=None)
def test_log_lr_antisymmetric_under_transpose(joint):
    assert lr_general(transpose(joint)).log_lr == pytest.approx(
        -lr_general(joint).log_lr, abs=1e-10
    )


def test_classify_direction():
    assert classify_direction(T22) == CausalStructure.Y_TO_X
    assert classify_direction(transpose(T22)) == CausalStructure.X_TO_Y
    assert classify_direction(JointTable.uniform(2, 2)) == CausalStructure.X_TO_Y


def test_flat_hyperprior_recovers_lr_general():
    spec = flat_hyperprior(2, 2)
    rng = np.random.default_rng(11)
    for _ in range(2000):
        joint = JointTable(rng.dirichlet(np.ones(4)).reshape(2, 2))
        with_prior = lr_with_hyperprior(joint, spec, spec)
        plain = lr_general(joint)
        assert with_prior.log_prior_factor == pytest.approx(0.0, abs=1e-9)
        assert with_prior.log_lr == pytest.approx(plain.log_lr, abs=1e-9)


def test_hyperprior_lr_finite_over_random_joints():
    rng_spec = stream(3, 21)
    spec = sample_hyperprior(2, 2, 2.0, 3, rng_spec)
    rng = np.random.default_rng(13)
    for _ in range(500):
        joint = JointTable(rng.dirichlet(np.ones(4)).reshape(2, 2))
        res = lr_with_hyperprior(joint, spec, spec)
        assert np.isfinite(res.log_lr)


def test_hyperprior_dimension_validation():
    spec = flat_hyperprior(3, 2)
    with pytest.raises(ValidationError):
        lr_with_hyperprior(T22, spec, spec)


def test_log_lr_flat_batch_matches_scalar():
    rng = np.random.default_rng(17)
    joints = rng.dirichlet(np.ones(9), size=50).reshape(50, 3, 3)
    batch = log_lr_flat_batch(joints)
    for i in range(50):
        assert batch[i] == pytest.approx(lr_general(JointTable(joints[i])).log_lr, rel=1e-12)


def test_baseline_error_binary_matches_reported_level():
    est = estimate_baseline_error(2, 2, 100_000, seed=7)
    assert est.error_rate == pytest.approx(0.40, abs=0.02)
    assert est.std_error == pytest.approx(
        np.sqrt(est.error_rate * (1 - est.error_rate) / est.n_trials)
    )


def test_baseline_error_high_cardinality_is_tiny():
    est = estimate_baseline_error(10, 10, 100_000, seed=7)
    assert est.error_rate < 0.005


def test_baseline_error_swap_symmetry():
    a = estimate_baseline_error(2, 4, 30_000, seed=5)
    b = estimate_baseline_error(4, 2, 30_000, seed=6)
    pooled = np.sqrt(a.std_error**2 + b.std_error**2)
    assert abs(a.error_rate - b.error_rate) <= 3 * pooled


def test_baseline_error_monotone_in_cardinality():
    rates = {}
    for k in (2, 3, 4, 6, 8, 10):
        rates[k] = estimate_baseline_error(k, k, 100_000, seed=11)
    ks = sorted(rates)
    for lo, hi in zip(ks, ks[1:]):
        a, b = rates[lo], rates[hi]
        slack = 2 * np.sqrt(a.std_error**2 + b.std_error**2)
        assert b.error_rate <= a.error_rate + slack


def test_baseline_error_deterministic():
    a = estimate_baseline_error(2, 2, 5_000, seed=42)
    b = estimate_baseline_error(2, 2, 5_000, seed=42)
    assert a.error_rate == b.error_rate


def test_baseline_estimate_validates_std_error():
    with pytest.raises(ValidationError):
        BaselineErrorEstimate(0.4, 100, 0.2, 2, 2)
