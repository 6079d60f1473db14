"""Analytical causal-direction classifier for exact joint tables.

The factorization map (P_X, P_{Y|X}) -> P_XY is a bilinear change of
variables; under flat hyperpriors the posterior odds of X->Y versus Y->X
reduce to a ratio of the two Jacobian determinants.  The determinant of
the forward map has the closed form

    |det J_XY| = prod_i P_X(i) ** (k_Y - 1)

which this module uses as the fast path; ``forward_jacobian`` builds the
full matrix so the closed form can be cross-checked numerically.  In the
2x2 case, writing the free joint entries as d, e, f, the log odds reduce
to log v(d+f) - log v(d+e) with v(p) = p(1-p).

All ratio arithmetic is in log space: at cardinality 10 the determinants
underflow doubles in linear space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .dirichlet import HyperpriorSpec, mixture_log_density_batch, sample_dirichlet_batch
from .errors import DegenerateMarginalError, ValidationError
from .structures import CausalStructure
from .tables import CLAMP_EPS, ConditionalTable, JointTable, SimplexVector, conditional

__all__ = [
    "LikelihoodRatioResult",
    "BaselineErrorEstimate",
    "lr_binary",
    "lr_general",
    "lr_with_hyperprior",
    "classify_direction",
    "forward_jacobian",
    "log_det_forward",
    "log_abs_det",
    "log_lr_flat_batch",
    "estimate_baseline_error",
]


@dataclass(frozen=True)
class LikelihoodRatioResult:
    """Log odds of X->Y over Y->X for one joint table.

    ``log_lr = log_prior_factor + log_det_yx - log_det_xy``; ties are
    decided as X->Y so that classification is deterministic.
    """

    log_lr: float
    log_det_xy: float
    log_det_yx: float
    log_prior_factor: float
    decided: CausalStructure = field(init=False)

    def __post_init__(self):
        recon = self.log_prior_factor + self.log_det_yx - self.log_det_xy
        if abs(self.log_lr - recon) > 1e-10 * max(1.0, abs(self.log_lr)):
            raise ValidationError("log_lr inconsistent with its determinant and prior terms")
        decided = CausalStructure.X_TO_Y if self.log_lr >= 0 else CausalStructure.Y_TO_X
        object.__setattr__(self, "decided", decided)


@dataclass(frozen=True)
class BaselineErrorEstimate:
    """Monte Carlo estimate of the flat-prior direction classifier's error."""

    error_rate: float
    n_trials: int
    std_error: float
    k_x: int
    k_y: int

    def __post_init__(self):
        expected = math.sqrt(self.error_rate * (1.0 - self.error_rate) / self.n_trials)
        if abs(self.std_error - expected) > 1e-12:
            raise ValidationError("std_error must equal sqrt(e(1-e)/n)")


def _marginals(joint: JointTable, clamp: bool) -> tuple[np.ndarray, np.ndarray]:
    px = joint.entries.sum(axis=1)
    py = joint.entries.sum(axis=0)
    low = min(float(px.min()), float(py.min()))
    if low < CLAMP_EPS:
        if not clamp:
            raise DegenerateMarginalError(
                f"degenerate marginal: an entry is below {CLAMP_EPS}; pass clamp=True to floor it"
            )
        px = np.maximum(px, CLAMP_EPS)
        py = np.maximum(py, CLAMP_EPS)
    return px, py


def log_det_forward(marginal: SimplexVector | np.ndarray, k_other: int) -> float:
    """Closed-form log |det| of (P_cause, P_{effect|cause}) -> P_joint.

    Equals (k_other - 1) * sum_i log marginal_i, where k_other is the
    effect cardinality.  Validated against ``forward_jacobian`` in the
    test suite before being trusted as the fast path.
    """
    m = marginal.values if isinstance(marginal, SimplexVector) else np.asarray(marginal, float)
    if np.any(m <= 0):
        raise DegenerateMarginalError("degenerate marginal: zero entry")
    return float((k_other - 1) * np.log(m).sum())


def forward_jacobian(marginal: SimplexVector, cond: ConditionalTable) -> np.ndarray:
    """Exact Jacobian of the factorization map at (marginal, cond).

    Free-parameter convention: the marginal contributes its first k-1
    entries, each conditional row its first k_target-1 entries, and the
    joint all entries but the last in row-major order.  The map is
    bilinear, so every partial is a parameter or a signed parameter.
    """
    m = marginal.values
    rows = cond.rows
    kx, ky = rows.shape
    if marginal.n != kx:
        raise ValidationError("marginal and conditional dimensions do not chain")
    n = kx * ky - 1
    jac = np.zeros((n, n))
    for i in range(kx):
        for j in range(ky):
            r = i * ky + j
            if r == n:
                continue
            for mm in range(kx - 1):
                coef = (1.0 if i == mm else 0.0) - (1.0 if i == kx - 1 else 0.0)
                if coef:
                    jac[r, mm] = coef * rows[i, j]
            for ll in range(ky - 1):
                coef = (1.0 if j == ll else 0.0) - (1.0 if j == ky - 1 else 0.0)
                if coef:
                    jac[r, (kx - 1) + i * (ky - 1) + ll] = coef * m[i]
    return jac


def log_abs_det(matrix: np.ndarray) -> float:
    """log |det| via LU with partial pivoting (raises if singular)."""
    sign, logdet = np.linalg.slogdet(matrix)
    if sign == 0:
        raise ValidationError("matrix is singular")
    return float(logdet)


def lr_general(joint: JointTable, clamp: bool = False) -> LikelihoodRatioResult:
    """Flat-hyperprior log odds for a joint of any cardinalities."""
    px, py = _marginals(joint, clamp)
    ld_xy = (joint.k_y - 1) * float(np.log(px).sum())
    ld_yx = (joint.k_x - 1) * float(np.log(py).sum())
    return LikelihoodRatioResult(ld_yx - ld_xy, ld_xy, ld_yx, 0.0)


def lr_binary(joint: JointTable, clamp: bool = False) -> LikelihoodRatioResult:
    """Closed-form binary log odds: log v(d+f) - log v(d+e), v(p) = p(1-p)."""
    if joint.k_x != 2 or joint.k_y != 2:
        raise ValidationError("lr_binary needs a 2x2 joint")
    px, py = _marginals(joint, clamp)
    ld_xy = float(np.log(px[0]) + np.log(px[1]))  # log(a(1-a)) with a = d+e
    ld_yx = float(np.log(py[0]) + np.log(py[1]))  # log v(d+f)
    return LikelihoodRatioResult(ld_yx - ld_xy, ld_xy, ld_yx, 0.0)


def lr_with_hyperprior(
    joint: JointTable,
    spec_xy: HyperpriorSpec,
    spec_yx: HyperpriorSpec,
    clamp: bool = False,
) -> LikelihoodRatioResult:
    """Log odds under explicit hyperpriors for each factorization.

    Adds the log ratio of hyperprior densities, evaluated at the two
    factorizations of the joint, to the flat determinant term.  With
    all-flat specs this reduces exactly to ``lr_general``.
    """
    if spec_xy.cause_prior.dim != joint.k_x or spec_xy.mechanism_prior.dim != joint.k_y:
        raise ValidationError("spec_xy dimensions do not match the joint")
    if spec_yx.cause_prior.dim != joint.k_y or spec_yx.mechanism_prior.dim != joint.k_x:
        raise ValidationError("spec_yx dimensions do not match the joint")
    base = lr_general(joint, clamp)
    px, py = _marginals(joint, clamp)
    rows_y_given_x = conditional(joint, "x", clamp).rows
    rows_x_given_y = conditional(joint, "y", clamp).rows
    log_fwd = float(mixture_log_density_batch(spec_xy.cause_prior, px[None, :])[0])
    log_fwd += float(mixture_log_density_batch(spec_xy.mechanism_prior, rows_y_given_x).sum())
    log_rev = float(mixture_log_density_batch(spec_yx.cause_prior, py[None, :])[0])
    log_rev += float(mixture_log_density_batch(spec_yx.mechanism_prior, rows_x_given_y).sum())
    prior = log_fwd - log_rev
    return LikelihoodRatioResult(
        prior + base.log_det_yx - base.log_det_xy, base.log_det_xy, base.log_det_yx, prior
    )


def classify_direction(joint: JointTable, clamp: bool = False) -> CausalStructure:
    """X_TO_Y or Y_TO_X by the sign of the flat log odds (ties go to X_TO_Y)."""
    return lr_general(joint, clamp).decided


def log_lr_flat_batch(joints: np.ndarray, clamp_eps: float = CLAMP_EPS) -> np.ndarray:
    """Vectorized flat log odds for a (n, k_x, k_y) stack of joint tables.

    Marginals are floored at ``clamp_eps`` so that tables whose entries
    underflowed to zero still classify deterministically.
    """
    joints = np.asarray(joints, dtype=float)
    kx, ky = joints.shape[-2], joints.shape[-1]
    px = np.maximum(joints.sum(axis=-1), clamp_eps)
    py = np.maximum(joints.sum(axis=-2), clamp_eps)
    return (kx - 1) * np.log(py).sum(axis=-1) - (ky - 1) * np.log(px).sum(axis=-1)


def estimate_baseline_error(
    k_x: int, k_y: int, n_trials: int, seed: int
) -> BaselineErrorEstimate:
    """Monte Carlo error of the flat-prior direction classifier.

    Each trial draws a direction uniformly, composes a flat-prior cause
    and mechanism (transposing for Y->X), classifies the joint, and
    records disagreement.  Trials use independent per-trial streams and
    are reduced in trial order, so the estimate depends only on
    (k_x, k_y, n_trials, seed).
    """
    if n_trials < 1:
        raise ValidationError("n_trials must be >= 1")
    parent = np.random.SeedSequence(
        int(seed), spawn_key=(rngmod.TAG_BASELINE_TRIAL, int(k_x), int(k_y))
    )
    errors = 0
    done = 0
    chunk = 8192
    while done < n_trials:
        take = min(chunk, n_trials - done)
        for child in parent.spawn(take):
            trial_rng = np.random.Generator(np.random.Philox(child))
            label_yx = bool(trial_rng.integers(0, 2))
            kc, ke = (k_y, k_x) if label_yx else (k_x, k_y)
            cause = sample_dirichlet_batch(np.ones(kc), trial_rng)
            mech = sample_dirichlet_batch(np.ones((kc, ke)), trial_rng)
            joint = cause[:, None] * mech
            if label_yx:
                joint = joint.T
            decided_yx = log_lr_flat_batch(joint[None, :, :])[0] < 0
            errors += decided_yx != label_yx
        done += take
    rate = errors / n_trials
    return BaselineErrorEstimate(
        error_rate=rate,
        n_trials=n_trials,
        std_error=math.sqrt(rate * (1.0 - rate) / n_trials),
        k_x=k_x,
        k_y=k_y,
    )
