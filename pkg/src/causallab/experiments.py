"""Figure-level experiments: robustness sweeps, detector evaluations, heatmaps.

Every experiment is bit-reproducible from (config, seed): all randomness
flows through keyed streams, and cells are keyed by their parameters, not
their position, so the same cell run by two different sweeps produces the
same numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import rng as rngmod
from .dirichlet import (
    HyperpriorSpec,
    flat_hyperprior,
    mixture_log_density_batch,
    sample_dirichlet_batch,
    sample_hyperprior,
    sample_mixture_params,
    sample_rows_from_mixture,
)
from .direction import log_lr_flat_batch
from .errors import ValidationError
from .generate import Variant, build_dataset, sample_batch
from .mlp import ConfusionMatrix, MlpModel, TrainConfig, TrainReport, init_model, predict_indices, train
from .rng import float_key, stream
from .structures import ALL_STRUCTURES, CausalStructure

__all__ = [
    "SweepConfig",
    "SweepCell",
    "SweepResult",
    "HeatmapGridSpec",
    "HeatmapGrid",
    "run_direction_sweep",
    "run_component_sweep",
    "run_confounding_sweep",
    "run_six_class_experiment",
    "render_lr_heatmaps",
    "train_structure_classifier",
]

DEFAULT_COMPONENT_COUNTS = (1, 2, 4, 8, 16, 32, 64, 128)


@dataclass(frozen=True)
class SweepConfig:
    """Shared knobs for the robustness sweeps."""

    cardinalities: tuple[tuple[int, int], ...] = ((2, 2), (10, 10))
    alpha_max_values: tuple[float, ...] = tuple(float(a) for a in range(9))
    n_hyperpriors: int = 100
    n_priors_per_hyperprior: int = 100
    n_components: int | tuple[int, ...] = 10
    seed: int = 0

    def __post_init__(self):
        cards = tuple((int(a), int(b)) for a, b in self.cardinalities)
        if not cards or any(k < 2 for pair in cards for k in pair):
            raise ValidationError("cardinalities must be pairs of ints >= 2")
        alphas = tuple(float(a) for a in self.alpha_max_values)
        if not alphas or any(a < 0 for a in alphas):
            raise ValidationError("alpha_max values must be nonnegative")
        if self.n_hyperpriors < 1 or self.n_priors_per_hyperprior < 1:
            raise ValidationError("hyperprior and prior counts must be >= 1")
        comps = self.n_components
        comps = (comps,) if isinstance(comps, int) else tuple(int(c) for c in comps)
        if any(c < 1 for c in comps):
            raise ValidationError("n_components must be >= 1")
        object.__setattr__(self, "cardinalities", cards)
        object.__setattr__(self, "alpha_max_values", alphas)
        object.__setattr__(self, "n_components", comps if len(comps) > 1 else comps[0])

    def component_counts(self) -> tuple[int, ...]:
        c = self.n_components
        return (c,) if isinstance(c, int) else c


@dataclass(frozen=True)
class SweepCell:
    k_x: int
    k_y: int
    alpha_max: float
    n_components: int
    error_rate: float
    std_dev: float        # across per-hyperprior mean errors
    n_trials: int


@dataclass(frozen=True)
class SweepResult:
    kind: str
    cells: tuple[SweepCell, ...]
    n_hyperpriors: int
    n_priors_per_hyperprior: int
    seed: int
    trial_log: tuple[dict, ...] = ()

    def cell(self, **match) -> SweepCell:
        for c in self.cells:
            if all(getattr(c, k) == v for k, v in match.items()):
                return c
        raise KeyError(f"no cell matching {match!r}")

    def std_error(self, cell: SweepCell) -> float:
        return cell.std_dev / np.sqrt(self.n_hyperpriors)


def _direction_trial_joints(
    rng: np.random.Generator,
    k_x: int,
    k_y: int,
    alpha_max: float,
    n_components: int,
    labels: np.ndarray,
) -> np.ndarray:
    """Joint tables for one hyperprior's direction trials (1 = Y->X)."""
    n = labels.size
    if alpha_max == 0.0:
        # Flat hyperpriors are deterministic, so no mixture is sampled at
        # all; this keeps flat cells identical across sweep kinds and
        # component counts.
        joints = np.empty((n, k_x, k_y))
        for lab, (kc, ke) in ((0, (k_x, k_y)), (1, (k_y, k_x))):
            sel = labels == lab
            m = int(sel.sum())
            if m == 0:
                continue
            cause = sample_dirichlet_batch(np.ones((m, kc)), rng)
            mech = sample_dirichlet_batch(np.ones((m, kc, ke)), rng)
            composed = cause[:, :, None] * mech
            joints[sel] = composed if lab == 0 else composed.transpose(0, 2, 1)
        return joints
    if k_x != k_y:
        raise ValidationError("mixture sweeps need square cardinalities")
    cause_mix = sample_mixture_params(alpha_max, k_x, n_components, rng)
    mech_mix = sample_mixture_params(alpha_max, k_y, n_components, rng)
    cause = sample_rows_from_mixture(cause_mix, n, rng)
    mech = sample_rows_from_mixture(mech_mix, n * k_x, rng).reshape(n, k_x, k_y)
    joints = cause[:, :, None] * mech
    yx = labels == 1
    joints[yx] = joints[yx].transpose(0, 2, 1)
    return joints


def _run_direction_cell(
    seed: int,
    k_x: int,
    k_y: int,
    alpha_max: float,
    n_components: int,
    n_hyperpriors: int,
    n_priors: int,
    trial_log: Optional[list] = None,
) -> SweepCell:
    """One (cardinality, hyperprior-family) cell of a direction sweep.

    Streams are keyed by the cell parameters (with flat cells canonicalized
    to a single component), so identical cells in different sweeps agree
    bit for bit.
    """
    amax = float(alpha_max)
    k_eff = 1 if amax == 0.0 else int(n_components)
    per_hyp = np.empty(n_hyperpriors)
    for hidx in range(n_hyperpriors):
        rng = stream(seed, rngmod.TAG_SWEEP_CELL, k_x, k_y, float_key(amax), k_eff, hidx)
        labels = rng.integers(0, 2, size=n_priors)
        joints = _direction_trial_joints(rng, k_x, k_y, amax, k_eff, labels)
        decided_yx = log_lr_flat_batch(joints) < 0
        errors = decided_yx != (labels == 1)
        per_hyp[hidx] = errors.mean()
        if trial_log is not None:
            for t in range(n_priors):
                trial_log.append(
                    {
                        "k_x": k_x,
                        "k_y": k_y,
                        "alpha_max": amax,
                        "n_components": k_eff,
                        "hyperprior": hidx,
                        "trial": t,
                        "label": int(labels[t]),
                        "decided": int(decided_yx[t]),
                        "error": int(errors[t]),
                    }
                )
    std = float(per_hyp.std(ddof=1)) if n_hyperpriors > 1 else 0.0
    return SweepCell(
        k_x, k_y, amax, int(n_components), float(per_hyp.mean()), std, n_hyperpriors * n_priors
    )


def run_direction_sweep(cfg: SweepConfig, log_trials: bool = False) -> SweepResult:
    """Error of the flat-prior direction classifier against mixture hyperpriors.

    For every (cardinality, alpha_max) cell: draw ``n_hyperpriors``
    mixture hyperpriors, draw ``n_priors_per_hyperprior`` (cause,
    mechanism) pairs from each, pick the direction label uniformly,
    compose the joint (transposing for Y->X), classify with the flat
    log-odds rule, and aggregate the per-hyperprior mean errors.
    """
    comps = cfg.component_counts()
    if len(comps) != 1:
        raise ValidationError("direction sweeps use a single component count")
    log: Optional[list] = [] if log_trials else None
    cells = tuple(
        _run_direction_cell(
            cfg.seed, kx, ky, amax, comps[0], cfg.n_hyperpriors, cfg.n_priors_per_hyperprior, log
        )
        for (kx, ky) in cfg.cardinalities
        for amax in cfg.alpha_max_values
    )
    return SweepResult(
        "direction", cells, cfg.n_hyperpriors, cfg.n_priors_per_hyperprior, cfg.seed,
        tuple(log) if log else (),
    )


def run_component_sweep(cfg: SweepConfig, log_trials: bool = False) -> SweepResult:
    """Same protocol as the direction sweep, varying the mixture size instead.

    ``cfg.alpha_max_values`` must hold exactly one bound (held fixed);
    ``cfg.n_components`` supplies the component counts to scan.
    """
    if len(cfg.alpha_max_values) != 1:
        raise ValidationError("component sweeps hold alpha_max fixed at one value")
    amax = cfg.alpha_max_values[0]
    comps = cfg.component_counts() if isinstance(cfg.n_components, tuple) else DEFAULT_COMPONENT_COUNTS
    log: Optional[list] = [] if log_trials else None
    cells = tuple(
        _run_direction_cell(
            cfg.seed, kx, ky, amax, k_comp, cfg.n_hyperpriors, cfg.n_priors_per_hyperprior, log
        )
        for (kx, ky) in cfg.cardinalities
        for k_comp in comps
    )
    return SweepResult(
        "components", cells, cfg.n_hyperpriors, cfg.n_priors_per_hyperprior, cfg.seed,
        tuple(log) if log else (),
    )


def run_confounding_sweep(
    cfg: SweepConfig,
    models: Mapping[tuple[int, int], MlpModel],
    log_trials: bool = False,
    variant: Variant = "canonical",
) -> SweepResult:
    """Evaluate flat-trained confounding detectors on mixture-hyperprior data.

    Each cell builds ``n_hyperpriors`` exactly label-balanced test batches
    (direct-causal X->Y versus pure confounding, alternating by trial
    parity) and scores the cardinality's trained 2-class model on them.
    """
    comps = cfg.component_counts()
    if len(comps) != 1:
        raise ValidationError("confounding sweeps use a single component count")
    n_comp = comps[0]
    want = (int(CausalStructure.X_TO_Y), int(CausalStructure.CONFOUNDED))
    log: Optional[list] = [] if log_trials else None
    cells = []
    for (kx, ky) in cfg.cardinalities:
        model = models.get((kx, ky))
        if model is None:
            raise ValidationError(f"missing model for cardinality ({kx}, {ky})")
        if set(model.classes) != set(want):
            raise ValidationError("confounding sweep needs a 2-class X->Y/confounded model")
        code_of = np.array(model.classes)
        for amax in cfg.alpha_max_values:
            k_eff = 1 if amax == 0.0 else n_comp
            per_hyp = np.empty(cfg.n_hyperpriors)
            for hidx in range(cfg.n_hyperpriors):
                rng = stream(
                    cfg.seed, rngmod.TAG_CONFOUNDING_SWEEP, kx, ky, float_key(amax), k_eff, hidx
                )
                n = cfg.n_priors_per_hyperprior
                labels = np.where(
                    np.arange(n) % 2 == 0, int(CausalStructure.X_TO_Y), int(CausalStructure.CONFOUNDED)
                )
                if amax == 0.0:
                    spec = flat_hyperprior(kx, ky)
                else:
                    if kx != ky:
                        raise ValidationError("mixture sweeps need square cardinalities")
                    spec = sample_hyperprior(kx, ky, amax, n_comp, rng)
                joints = np.empty((n, kx, ky))
                for code, structure in (
                    (want[0], CausalStructure.X_TO_Y),
                    (want[1], CausalStructure.CONFOUNDED),
                ):
                    sel = labels == code
                    joints[sel] = sample_batch(
                        structure, kx, ky, int(sel.sum()), spec, rng, variant
                    )[0]
                preds = code_of[predict_indices(model, joints.reshape(n, kx * ky))]
                errors = preds != labels
                per_hyp[hidx] = errors.mean()
                if log is not None:
                    for t in range(n):
                        log.append(
                            {
                                "k_x": kx,
                                "k_y": ky,
                                "alpha_max": float(amax),
                                "n_components": k_eff,
                                "hyperprior": hidx,
                                "trial": t,
                                "label": int(labels[t]),
                                "decided": int(preds[t]),
                                "error": int(errors[t]),
                            }
                        )
            std = float(per_hyp.std(ddof=1)) if cfg.n_hyperpriors > 1 else 0.0
            cells.append(
                SweepCell(
                    kx, ky, float(amax), n_comp, float(per_hyp.mean()), std,
                    cfg.n_hyperpriors * cfg.n_priors_per_hyperprior,
                )
            )
    return SweepResult(
        "confounding", tuple(cells), cfg.n_hyperpriors, cfg.n_priors_per_hyperprior, cfg.seed,
        tuple(log) if log else (),
    )


def _balanced_labels(classes: Sequence[int], n_total: int) -> np.ndarray:
    """Cyclic class assignment: counts differ by at most one across classes."""
    reps = int(np.ceil(n_total / len(classes)))
    return np.tile(np.array(classes, dtype=int), reps)[:n_total]


def run_six_class_experiment(
    k: int,
    model: MlpModel,
    *,
    flat_test: bool,
    alpha_max: float = 7.0,
    n_test: int = 10000,
    n_repeats: int = 1,
    seed: int = 0,
    n_components: int = 10,
    n_per_hyperprior: int = 100,
    variant: Variant = "canonical",
) -> list[ConfusionMatrix]:
    """Fresh balanced test sets for the all-structures classifier.

    ``flat_test`` draws every test item from the flat hyperprior;
    otherwise each consecutive block of ``n_per_hyperprior`` items shares
    one freshly sampled mixture hyperprior with the given ``alpha_max``.
    Returns one confusion matrix per repeat.
    """
    if set(model.classes) != {int(s) for s in ALL_STRUCTURES}:
        raise ValidationError("six-class experiment needs a model over all six structures")
    if model.layer_sizes[0] != k * k:
        raise ValidationError("model input width does not match the cardinality")
    amax_eff = 0.0 if flat_test else float(alpha_max)
    classes = model.classes
    index_of = {code: i for i, code in enumerate(classes)}
    names = tuple(CausalStructure(code).name for code in classes)
    matrices = []
    for rep in range(n_repeats):
        rng = stream(
            seed, rngmod.TAG_SIX_CLASS, k, float_key(amax_eff), int(flat_test), rep
        )
        labels = _balanced_labels(classes, n_test)
        joints = np.empty((n_test, k, k))
        if flat_test or amax_eff == 0.0:
            spec = flat_hyperprior(k, k)
            for code in classes:
                sel = labels == code
                joints[sel] = sample_batch(
                    CausalStructure(code), k, k, int(sel.sum()), spec, rng, variant
                )[0]
        else:
            for start in range(0, n_test, n_per_hyperprior):
                stop = min(start + n_per_hyperprior, n_test)
                spec = sample_hyperprior(k, k, amax_eff, n_components, rng)
                block_labels = labels[start:stop]
                block = np.empty((stop - start, k, k))
                for code in classes:
                    sel = block_labels == code
                    if not np.any(sel):
                        continue
                    block[sel] = sample_batch(
                        CausalStructure(code), k, k, int(sel.sum()), spec, rng, variant
                    )[0]
                joints[start:stop] = block
        preds = predict_indices(model, joints.reshape(n_test, k * k))
        true_idx = np.array([index_of[int(c)] for c in labels])
        counts = np.zeros((len(classes), len(classes)), dtype=int)
        np.add.at(counts, (true_idx, preds), 1)
        matrices.append(ConfusionMatrix(counts, names))
    return matrices


def train_structure_classifier(
    k_x: int,
    k_y: int,
    classes: Sequence[CausalStructure],
    n_per_class: int,
    cfg: TrainConfig,
    seed: int,
    hidden: tuple[int, ...] = (256, 256),
    variant: Variant = "canonical",
) -> tuple[MlpModel, TrainReport]:
    """Build a flat-hyperprior dataset and train a classifier on it."""
    codes = tuple(sorted(int(c) for c in classes))
    dataset = build_dataset(
        k_x, k_y, n_per_class, [CausalStructure(c) for c in codes],
        flat_hyperprior(k_x, k_y), seed, variant,
    )
    model = init_model(
        (k_x * k_y, *hidden, len(codes)), codes, seed=cfg.seed, input_scale=float(k_x * k_y)
    )
    return train(model, dataset, cfg)


@dataclass(frozen=True)
class HeatmapGridSpec:
    """Slices of the 2x2 joint simplex: fixed d, cell-centered (e, f) grid."""

    d_slices: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(1, 10))
    resolution: int = 201

    def __post_init__(self):
        ds = tuple(float(d) for d in self.d_slices)
        if not ds or any(not (0.0 < d < 1.0) for d in ds):
            raise ValidationError("d slices must lie strictly inside (0, 1)")
        if self.resolution < 2:
            raise ValidationError("resolution must be >= 2")
        object.__setattr__(self, "d_slices", ds)

    def axis(self) -> np.ndarray:
        return (np.arange(self.resolution) + 0.5) / self.resolution


@dataclass(frozen=True, eq=False)
class HeatmapGrid:
    """Log odds over (d, e, f) cells; masked where d + e + f >= 1."""

    d_slices: tuple[float, ...]
    resolution: int
    values: np.ndarray   # (n_slices, resolution, resolution), NaN on masked cells
    mask: np.ndarray     # True where the cell leaves the simplex

    def __post_init__(self):
        shape = (len(self.d_slices), self.resolution, self.resolution)
        if self.values.shape != shape or self.mask.shape != shape:
            raise ValidationError("values/mask shapes do not match the grid spec")
        if not np.all(np.isfinite(self.values[~self.mask])):
            raise ValidationError("unmasked heatmap values must be finite")


def render_lr_heatmaps(
    grid_spec: HeatmapGridSpec | None = None,
    hyperprior: HyperpriorSpec | None = None,
) -> HeatmapGrid:
    """Log odds of X->Y over Y->X on (e, f) grids for each fixed d.

    With no hyperprior this is the flat closed form
    log v(d+f) - log v(d+e), v(p) = p(1-p); with a hyperprior the log
    density ratio of the two factorizations is added.  Cells with
    d + e + f >= 1 are masked.
    """
    spec = grid_spec or HeatmapGridSpec()
    if hyperprior is not None and (
        hyperprior.cause_prior.dim != 2 or hyperprior.mechanism_prior.dim != 2
    ):
        raise ValidationError("heatmaps are over 2x2 joints; hyperprior must have dimension 2")
    axis = spec.axis()
    e = axis[:, None]
    f = axis[None, :]
    n = spec.resolution
    values = np.full((len(spec.d_slices), n, n), np.nan)
    mask = np.empty((len(spec.d_slices), n, n), dtype=bool)
    for s, d in enumerate(spec.d_slices):
        bad = e + f >= 1.0 - d
        mask[s] = bad
        good = ~bad
        de = d + e + 0.0 * f  # broadcast to full grid
        df = d + 0.0 * e + f
        with np.errstate(divide="ignore", invalid="ignore"):
            flat = np.log(df * (1.0 - df)) - np.log(de * (1.0 - de))
        if hyperprior is None:
            values[s][good] = flat[good]
            continue
        g = 1.0 - d - e - f  # remaining mass
        pts = {
            "px": np.stack([de, 1.0 - de], axis=-1),
            "py": np.stack([df, 1.0 - df], axis=-1),
            "y_given_x0": np.stack([d / de, e / de], axis=-1),
            "y_given_x1": np.stack([f / (1.0 - de), g / (1.0 - de)], axis=-1),
            "x_given_y0": np.stack([d / df, f / df], axis=-1),
            "x_given_y1": np.stack([e / (1.0 - df), g / (1.0 - df)], axis=-1),
        }
        idx = np.where(good)
        cause, mech = hyperprior.cause_prior, hyperprior.mechanism_prior
        lpf = (
            mixture_log_density_batch(cause, pts["px"][idx])
            + mixture_log_density_batch(mech, pts["y_given_x0"][idx])
            + mixture_log_density_batch(mech, pts["y_given_x1"][idx])
            - mixture_log_density_batch(cause, pts["py"][idx])
            - mixture_log_density_batch(mech, pts["x_given_y0"][idx])
            - mixture_log_density_batch(mech, pts["x_given_y1"][idx])
        )
        values[s][idx] = flat[idx] + lpf
    return HeatmapGrid(spec.d_slices, n, values, mask)
