"""Dirichlet and Dirichlet-mixture hyperpriors on the probability simplex.

Densities are taken with respect to Lebesgue measure on the first n-1
simplex coordinates, so the flat Dirichlet (all concentrations 1) has the
constant density (n-1)!.  Sampling normalizes independent Gamma draws;
for very small concentrations the Gamma draws are taken in log space
(via the exact identity Gamma(a) = Gamma(a+1) * U^(1/a)) so that samples
never underflow to an all-zero vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import BoundaryEvaluationError, ValidationError
from .tables import SUM_TOL, SimplexVector

__all__ = [
    "DirichletParams",
    "DirichletMixture",
    "HyperpriorSpec",
    "sample_dirichlet",
    "sample_dirichlet_batch",
    "dirichlet_density",
    "dirichlet_log_density",
    "sample_mixture_params",
    "flat_mixture",
    "sample_from_mixture",
    "sample_rows_from_mixture",
    "mixture_density",
    "mixture_log_density",
    "mixture_log_density_batch",
    "flat_hyperprior",
    "sample_hyperprior",
]

# Below this concentration, plain Gamma draws underflow often enough to
# matter in long sweeps; switch to the log-space construction.
_SMALL_ALPHA = 0.1


@dataclass(frozen=True, eq=False)
class DirichletParams:
    """Concentration vector of a single Dirichlet distribution."""

    alpha: np.ndarray

    def __post_init__(self):
        arr = np.array(self.alpha, dtype=float)
        if arr.ndim != 1 or arr.shape[0] < 2:
            raise ValidationError("DirichletParams needs a 1-d alpha with at least 2 entries")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValidationError("DirichletParams entries must be finite and strictly positive")
        arr.flags.writeable = False
        object.__setattr__(self, "alpha", arr)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]


@dataclass(frozen=True, eq=False)
class DirichletMixture:
    """Weighted mixture of Dirichlet components sharing one dimension.

    ``alpha_max`` bounds every concentration entry to the interval
    [2**-alpha_max, 2**alpha_max]; weights are a plain probability vector
    over components (length may be 1, unlike SimplexVector).
    """

    components: tuple[DirichletParams, ...]
    weights: np.ndarray
    alpha_max: float

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValidationError("DirichletMixture needs at least one component")
        dim = comps[0].n
        if any(c.n != dim for c in comps):
            raise ValidationError("DirichletMixture components must share one dimension")
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.shape[0] != len(comps):
            raise ValidationError("DirichletMixture weights must have one entry per component")
        if np.any(w < 0) or abs(float(w.sum()) - 1.0) > SUM_TOL:
            raise ValidationError("DirichletMixture weights must be nonnegative and sum to 1")
        amax = float(self.alpha_max)
        if not np.isfinite(amax) or amax < 0:
            raise ValidationError("alpha_max must be a nonnegative real")
        lo, hi = 2.0 ** -amax, 2.0 ** amax
        stacked = np.stack([c.alpha for c in comps])
        if np.any(stacked < lo * (1 - 1e-12)) or np.any(stacked > hi * (1 + 1e-12)):
            raise ValidationError(
                f"mixture concentration entries must lie in [2^-{amax}, 2^{amax}]"
            )
        w.flags.writeable = False
        stacked.flags.writeable = False
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "alpha_max", amax)
        object.__setattr__(self, "_stacked", stacked)

    @property
    def dim(self) -> int:
        return self.components[0].n

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def alphas(self) -> np.ndarray:
        """All concentrations stacked into a (n_components, dim) array."""
        return self._stacked

    @property
    def is_flat(self) -> bool:
        return bool(np.all(self._stacked == 1.0))


@dataclass(frozen=True, eq=False)
class HyperpriorSpec:
    """Hyperpriors for one generative model: cause, mechanism, confounder.

    The cause prior governs P(cause); the mechanism prior governs every
    row of P(effect | cause) (each row an independent draw); the optional
    confounder prior governs P(H) when its dimension matches.
    """

    cause_prior: DirichletMixture
    mechanism_prior: DirichletMixture
    confounder_prior: Optional[DirichletMixture] = None

    @property
    def alpha_max(self) -> float:
        mixes = [self.cause_prior, self.mechanism_prior, self.confounder_prior]
        return max(m.alpha_max for m in mixes if m is not None)

    @property
    def n_components(self) -> int:
        return self.cause_prior.n_components

    @property
    def is_flat(self) -> bool:
        mixes = [self.cause_prior, self.mechanism_prior, self.confounder_prior]
        return all(m.is_flat for m in mixes if m is not None)


def sample_dirichlet_batch(alphas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one simplex point per leading index of ``alphas`` (..., n).

    Normalizes independent Gamma(alpha, 1) variates.  When any entry is
    below ``_SMALL_ALPHA`` the whole batch is drawn in log space, which
    is the same distribution but cannot produce an all-zero row.
    """
    alphas = np.asarray(alphas, dtype=float)
    if np.all(alphas == 1.0):
        g = rng.standard_exponential(size=alphas.shape)
        return g / g.sum(axis=-1, keepdims=True)
    if float(alphas.min()) >= _SMALL_ALPHA:
        g = rng.standard_gamma(alphas)
        return g / g.sum(axis=-1, keepdims=True)
    # log-space: log Gamma(a) =d log Gamma(a+1) + log(U) / a
    y = rng.standard_gamma(alphas + 1.0)
    u = rng.random(size=alphas.shape)
    logx = np.log(y) + np.log1p(-u) / alphas
    logx -= logx.max(axis=-1, keepdims=True)
    x = np.exp(logx)
    return x / x.sum(axis=-1, keepdims=True)


def sample_dirichlet(params: DirichletParams, rng: np.random.Generator) -> SimplexVector:
    """One draw from Dirichlet(alpha)."""
    return SimplexVector(sample_dirichlet_batch(params.alpha, rng))


def _log_density_core(alphas: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Log pdf matrix for component alphas (K, n) at points (M, n)."""
    lognorm = gammaln(alphas.sum(axis=1)) - gammaln(alphas).sum(axis=1)  # (K,)
    zero = points <= 0.0
    if np.any(zero):
        # diverges where a zero coordinate meets a concentration below 1
        div = zero[:, None, :] & (alphas[None, :, :] < 1.0)
        if np.any(div):
            raise BoundaryEvaluationError(
                "boundary evaluation: density diverges at a zero coordinate with concentration < 1"
            )
        with np.errstate(divide="ignore"):
            logp = np.log(points)  # -inf at zeros
        terms = (alphas[None, :, :] - 1.0) * logp[:, None, :]
        terms = np.where(zero[:, None, :] & (alphas[None, :, :] == 1.0), 0.0, terms)
        return lognorm[None, :] + terms.sum(axis=2)
    return lognorm[None, :] + np.log(points) @ (alphas - 1.0).T


def dirichlet_log_density(params: DirichletParams, point: SimplexVector) -> float:
    if params.n != point.n:
        raise ValidationError("dimension mismatch between params and point")
    return float(_log_density_core(params.alpha[None, :], point.values[None, :])[0, 0])


def dirichlet_density(params: DirichletParams, point: SimplexVector) -> float:
    """Dirichlet pdf w.r.t. Lebesgue measure on the first n-1 coordinates."""
    return float(np.exp(dirichlet_log_density(params, point)))


def sample_mixture_params(
    alpha_max: float, dim: int, n_components: int, rng: np.random.Generator
) -> DirichletMixture:
    """Draw mixture concentrations uniformly on [2^-alpha_max, 2^alpha_max].

    The interval is linear, not logarithmic, and weights are uniform.
    alpha_max = 0 collapses every entry to exactly 1 (the flat prior).
    """
    alpha_max = float(alpha_max)
    if alpha_max < 0:
        raise ValidationError("alpha_max must be nonnegative")
    if dim < 2 or n_components < 1:
        raise ValidationError("need dim >= 2 and n_components >= 1")
    lo, hi = 2.0 ** -alpha_max, 2.0 ** alpha_max
    entries = rng.uniform(lo, hi, size=(n_components, dim))
    comps = tuple(DirichletParams(row) for row in entries)
    weights = np.full(n_components, 1.0 / n_components)
    return DirichletMixture(comps, weights, alpha_max)


def flat_mixture(dim: int) -> DirichletMixture:
    """The single-component flat mixture: Dirichlet(1, ..., 1)."""
    return DirichletMixture((DirichletParams(np.ones(dim)),), np.array([1.0]), 0.0)


def sample_from_mixture(mix: DirichletMixture, rng: np.random.Generator) -> SimplexVector:
    """Draw a component by weight, then a point from that component."""
    return SimplexVector(sample_rows_from_mixture(mix, 1, rng)[0])


def sample_rows_from_mixture(
    mix: DirichletMixture, n_rows: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``n_rows`` independent simplex points from the mixture, shape (n_rows, dim).

    Flat mixtures skip the component draw entirely, so a flat mixture
    consumes the stream identically regardless of component count.
    """
    if mix.is_flat:
        return sample_dirichlet_batch(np.ones((n_rows, mix.dim)), rng)
    if mix.n_components == 1:
        idx = np.zeros(n_rows, dtype=int)
    else:
        idx = rng.choice(mix.n_components, size=n_rows, p=mix.weights)
    return sample_dirichlet_batch(mix.alphas[idx], rng)


def mixture_log_density_batch(mix: DirichletMixture, points: np.ndarray) -> np.ndarray:
    """Log mixture density at each row of ``points`` (M, dim)."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != mix.dim:
        raise ValidationError("points must have shape (M, dim)")
    logpdf = _log_density_core(mix.alphas, points)  # (M, K)
    with np.errstate(divide="ignore"):
        logw = np.log(mix.weights)
    return logsumexp(logpdf + logw[None, :], axis=1)


def mixture_log_density(mix: DirichletMixture, point: SimplexVector) -> float:
    if point.n != mix.dim:
        raise ValidationError("dimension mismatch between mixture and point")
    return float(mixture_log_density_batch(mix, point.values[None, :])[0])


def mixture_density(mix: DirichletMixture, point: SimplexVector) -> float:
    """Weighted sum of component densities at an interior point."""
    return float(np.exp(mixture_log_density(mix, point)))


def flat_hyperprior(k_cause: int, k_effect: int, k_conf: int | None = None) -> HyperpriorSpec:
    """All-flat hyperpriors with the given cause/effect (and confounder) dimensions."""
    conf = flat_mixture(k_conf) if k_conf is not None else None
    return HyperpriorSpec(flat_mixture(k_cause), flat_mixture(k_effect), conf)


def sample_hyperprior(
    k_cause: int,
    k_effect: int,
    alpha_max: float,
    n_components: int,
    rng: np.random.Generator,
    k_conf: int | None = None,
) -> HyperpriorSpec:
    """Draw independent cause and mechanism mixtures (and optionally a confounder one)."""
    cause = sample_mixture_params(alpha_max, k_cause, n_components, rng)
    mech = sample_mixture_params(alpha_max, k_effect, n_components, rng)
    conf = (
        sample_mixture_params(alpha_max, k_conf, n_components, rng)
        if k_conf is not None
        else None
    )
    return HyperpriorSpec(cause, mech, conf)
