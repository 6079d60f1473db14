import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kstest

from causallab.dirichlet import (
    DirichletMixture,
    DirichletParams,
    dirichlet_density,
    flat_mixture,
    mixture_density,
    sample_dirichlet,
    sample_dirichlet_batch,
    sample_from_mixture,
    sample_mixture_params,
    sample_rows_from_mixture,
)
from causallab.errors import BoundaryEvaluationError, ValidationError
from causallab.rng import stream
from causallab.tables import SimplexVector


def test_params_validation():
    with pytest.raises(ValidationError):
        DirichletParams([1.0, 0.0])
    with pytest.raises(ValidationError):
        DirichletParams([1.0])


def test_flat_dirichlet_mean():
    rng = stream(0, 1)
    draws = sample_dirichlet_batch(np.ones((100_000, 2)), rng)
    assert draws[:, 0].mean() == pytest.approx(0.5, abs=0.01)


def test_dirichlet_mean_2_1():
    rng = stream(0, 2)
    alphas = np.tile([2.0, 1.0], (100_000, 1))
    draws = sample_dirichlet_batch(alphas, rng)
    assert draws[:, 0].mean() == pytest.approx(2 / 3, abs=0.01)


def test_flat_dirichlet_covariance_dim3():
    rng = stream(0, 3)
    draws = sample_dirichlet_batch(np.ones((100_000, 3)), rng)
    cov = np.cov(draws.T)
    for i in range(3):
        for j in range(3):
            if i != j:
                assert cov[i, j] == pytest.approx(-1 / 36, abs=0.005)


def test_sampler_validity_sweep_one_million():
    rng = stream(0, 4)
    draws = sample_dirichlet_batch(np.ones((1_000_000, 3)), rng)
    assert np.isfinite(draws).all()
    assert (draws >= 0).all()
    assert np.abs(draws.sum(axis=1) - 1.0).max() < 1e-9


def test_small_alpha_sampling_never_nan():
    rng = stream(0, 5)
    alphas = np.full((200_000, 2), 2.0 ** -8)
    draws = sample_dirichlet_batch(alphas, rng)
    assert np.isfinite(draws).all()
    assert np.abs(draws.sum(axis=1) - 1.0).max() < 1e-9


def test_small_alpha_sampling_matches_moments():
    # Dir(a, a) has Var(x1) = 1/(4(2a+1))
    a = 0.02
    rng = stream(0, 6)
    draws = sample_dirichlet_batch(np.full((400_000, 2), a), rng)
    expect = 1.0 / (4 * (2 * a + 1))
    assert draws[:, 0].var() == pytest.approx(expect, rel=0.02)


def test_density_flat_values():
    assert dirichlet_density(DirichletParams([1, 1]), SimplexVector([0.3, 0.7])) == pytest.approx(1.0)
    for point in ([0.2, 0.5, 0.3], [0.6, 0.2, 0.2]):
        assert dirichlet_density(DirichletParams([1, 1, 1]), SimplexVector(point)) == pytest.approx(2.0)


def test_density_beta_2_1():
    d = dirichlet_density(DirichletParams([2, 1]), SimplexVector([0.25, 0.75]))
    assert d == pytest.approx(0.5)


def test_density_boundary_rules():
    small = DirichletParams([0.5, 1.5])
    with pytest.raises(BoundaryEvaluationError):
        dirichlet_density(small, SimplexVector([0.0, 1.0]))
    # concentration >= 1 at the zero coordinate has a finite limit
    big = DirichletParams([2.0, 1.0])
    assert dirichlet_density(big, SimplexVector([0.0, 1.0])) == pytest.approx(0.0)


def test_density_normalizes_monte_carlo():
    # plain Monte Carlo over uniform simplex draws; entries >= 0.6 keep the
    # importance weights square-integrable
    cases = {
        2: [(0.6, 8.0), (2.0, 3.0)],
        3: [(0.8, 1.5, 4.0), (8.0, 8.0, 8.0)],
        4: [(0.7, 1.0, 2.0, 5.0)],
    }
    import math

    for dim, alpha_list in cases.items():
        flat_value = float(math.factorial(dim - 1))
        for alpha in alpha_list:
            rng = stream(hash(alpha) % (2**32), 7, dim)
            pts = sample_dirichlet_batch(np.ones((1_000_000, dim)), rng)
            from causallab.dirichlet import _log_density_core

            vals = np.exp(_log_density_core(np.array([alpha]), pts)[:, 0])
            integral = vals.mean() / flat_value
            assert integral == pytest.approx(1.0, abs=0.01), (dim, alpha)


def test_density_normalizes_quadrature_small_alpha():
    # below 0.5 the Monte Carlo estimator has infinite variance, so use
    # quadrature as the independent check on the 1-simplex
    params = DirichletParams([0.25, 0.25])

    def pdf(x):
        return dirichlet_density(params, SimplexVector([x, 1.0 - x]))

    integral, err = quad(pdf, 0.0, 1.0, points=[0.0, 1.0], limit=200)
    assert integral == pytest.approx(1.0, abs=1e-6)


def test_mixture_params_bounds():
    rng = stream(0, 8)
    mix = sample_mixture_params(3.0, 2, 10, rng)
    assert mix.alphas.shape == (10, 2)
    assert mix.alphas.min() >= 0.125 and mix.alphas.max() <= 8.0
    mix7 = sample_mixture_params(7.0, 3, 4, rng)
    assert mix7.alphas.min() >= 2.0 ** -7 and mix7.alphas.max() <= 2.0 ** 7


def test_mixture_alpha_zero_is_exactly_flat():
    rng = stream(0, 9)
    mix = sample_mixture_params(0.0, 3, 10, rng)
    assert np.all(mix.alphas == 1.0)
    assert mix.is_flat
    for point in ([0.2, 0.5, 0.3], [0.05, 0.05, 0.9]):
        assert mixture_density(mix, SimplexVector(point)) == pytest.approx(2.0, rel=1e-9)


def test_mixture_bound_validation():
    with pytest.raises(ValidationError):
        DirichletMixture((DirichletParams([4.0, 1.0]),), np.array([1.0]), 1.0)


def test_degenerate_mixture_sampling_uniform():
    mix = flat_mixture(2)
    rng = stream(0, 10)
    draws = sample_rows_from_mixture(mix, 100_000, rng)
    stat = kstest(draws[:, 0], "uniform").statistic
    assert stat < 0.01


def test_mixture_weights_select_component():
    mix = DirichletMixture(
        (DirichletParams([9.0, 1.0]), DirichletParams([1.0, 9.0])),
        np.array([1.0, 0.0]),
        4.0,
    )
    rng = stream(0, 11)
    draws = sample_rows_from_mixture(mix, 100_000, rng)
    assert draws[:, 0].mean() == pytest.approx(0.9, abs=0.01)


def test_mixture_sampling_validity_large_alpha_max():
    rng = stream(0, 12)
    mix = sample_mixture_params(8.0, 2, 10, rng)
    draws = sample_rows_from_mixture(mix, 1_000_000, rng)
    assert np.isfinite(draws).all()
    assert (draws >= 0).all()
    assert np.abs(draws.sum(axis=1) - 1.0).max() < 1e-9


def test_mixture_density_hand_values():
    mix = DirichletMixture(
        (DirichletParams([2.0, 1.0]), DirichletParams([1.0, 2.0])),
        np.array([0.5, 0.5]),
        1.0,
    )
    assert mixture_density(mix, SimplexVector([0.5, 0.5])) == pytest.approx(1.0)
    assert mixture_density(mix, SimplexVector([0.25, 0.75])) == pytest.approx(1.0)


def test_sample_from_mixture_single_draw():
    mix = flat_mixture(3)
    rng = stream(0, 13)
    v = sample_from_mixture(mix, rng)
    assert isinstance(v, SimplexVector) and v.n == 3
