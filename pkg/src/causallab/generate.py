"""Generative models for the six causal structures and labeled datasets.

Every structure draws its cause distributions and mechanism conditionals
independently from the hyperpriors in a ``HyperpriorSpec``.  Confounded
structures draw the confounder cardinality |H| uniformly from 2..100 and
marginalize H out exactly, so the emitted joint tables are exact
distributions, never samples.

Two parameterizations of the "directed edge plus confounder" structures
are supported.  The default ``canonical`` variant uses the graph's own
factorization P(h) P(x|h) P(y|x,h).  The ``factor-product`` variant
multiplies the five factors P(x), P(y|x), P(h), P(x|h), P(y|h) and
renormalizes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Optional

import numpy as np

from . import rng as rngmod
from .dirichlet import (
    DirichletMixture,
    HyperpriorSpec,
    flat_hyperprior,
    flat_mixture,
    sample_dirichlet_batch,
    sample_mixture_params,
    sample_rows_from_mixture,
)
from .errors import DatasetFormatError, ValidationError
from .rng import stream
from .structures import ALL_STRUCTURES, CausalStructure
from .tables import JointTable, SimplexVector

__all__ = [
    "H_CARD_MIN",
    "H_CARD_MAX",
    "DATASET_SCHEMA_VERSION",
    "HyperpriorDescriptor",
    "LabeledDistribution",
    "LabeledDataset",
    "confounded_joint",
    "causal_confounded_joint",
    "factor_product_joint",
    "sample_instance",
    "sample_batch",
    "build_dataset",
    "save_dataset",
    "load_dataset",
]

H_CARD_MIN = 2
H_CARD_MAX = 100
DATASET_SCHEMA_VERSION = 1

Variant = Literal["canonical", "factor-product"]


@dataclass(frozen=True)
class HyperpriorDescriptor:
    """How a dataset's hyperpriors were obtained (for provenance headers)."""

    alpha_max: float
    n_components: int
    seed: int


@dataclass(frozen=True, eq=False)
class LabeledDistribution:
    """One exact joint table together with the structure that generated it."""

    joint: JointTable
    label: CausalStructure
    h_cardinality: Optional[int] = None
    hyperprior_descriptor: Optional[HyperpriorDescriptor] = None

    def __post_init__(self):
        if self.label.has_confounder != (self.h_cardinality is not None):
            raise ValidationError(
                "h_cardinality must be present exactly when the label involves confounding"
            )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LabeledDistribution)
            and self.joint == other.joint
            and self.label == other.label
            and self.h_cardinality == other.h_cardinality
            and self.hyperprior_descriptor == other.hyperprior_descriptor
        )


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """A list of labeled joints sharing one (k_x, k_y)."""

    items: tuple[LabeledDistribution, ...]
    k_x: int
    k_y: int
    class_counts: dict[CausalStructure, int]
    seed: int = -1
    descriptor: Optional[HyperpriorDescriptor] = None

    def __post_init__(self):
        items = tuple(self.items)
        for it in items:
            if it.joint.k_x != self.k_x or it.joint.k_y != self.k_y:
                raise ValidationError("all dataset items must share (k_x, k_y)")
        counts: dict[CausalStructure, int] = {}
        for it in items:
            counts[it.label] = counts.get(it.label, 0) + 1
        if counts != dict(self.class_counts):
            raise ValidationError("class_counts inconsistent with items")
        object.__setattr__(self, "items", items)

    def __len__(self) -> int:
        return len(self.items)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LabeledDataset)
            and self.k_x == other.k_x
            and self.k_y == other.k_y
            and self.seed == other.seed
            and self.descriptor == other.descriptor
            and self.items == other.items
        )


def confounded_joint(p_h: np.ndarray, x_rows: np.ndarray, y_rows: np.ndarray) -> JointTable:
    """Marginalize H out of P(h) P(x|h) P(y|h)."""
    return JointTable(np.einsum("h,hx,hy->xy", p_h, x_rows, y_rows))


def causal_confounded_joint(
    p_h: np.ndarray, x_rows: np.ndarray, y_given_xh: np.ndarray
) -> JointTable:
    """Marginalize H out of P(h) P(x|h) P(y|x,h); y_given_xh has shape (k_x, |H|, k_y)."""
    return JointTable(np.einsum("h,hx,xhy->xy", p_h, x_rows, y_given_xh))


def factor_product_joint(
    p_x: np.ndarray,
    y_given_x: np.ndarray,
    p_h: np.ndarray,
    x_rows: np.ndarray,
    y_rows: np.ndarray,
) -> JointTable:
    """Combine all five factors multiplicatively, then renormalize."""
    w = p_x[:, None] * y_given_x * np.einsum("h,hx,hy->xy", p_h, x_rows, y_rows)
    return JointTable(w / w.sum())


def _role_prior(
    preferred: Optional[DirichletMixture],
    spec: HyperpriorSpec,
    dim: int,
    rng: np.random.Generator,
) -> DirichletMixture:
    """Pick the hyperprior for a simplex factor of the given dimension.

    Prefers the role's own mixture, falls back to any mixture of matching
    dimension, and otherwise derives one: flat specs stay exactly flat,
    non-flat specs draw a fresh mixture with the same alpha_max and
    component count from the caller's stream.
    """
    if preferred is not None and preferred.dim == dim:
        return preferred
    for other in (spec.cause_prior, spec.mechanism_prior, spec.confounder_prior):
        if other is not None and other.dim == dim:
            return other
    if spec.is_flat:
        return flat_mixture(dim)
    return sample_mixture_params(spec.alpha_max, dim, spec.n_components, rng)


def _draw_h(rng: np.random.Generator, h_cardinality: Optional[int]) -> int:
    if h_cardinality is not None:
        if h_cardinality < 1:
            raise ValidationError("h_cardinality must be >= 1")
        return int(h_cardinality)
    return int(rng.integers(H_CARD_MIN, H_CARD_MAX + 1))


def sample_instance(
    structure: CausalStructure,
    k_x: int,
    k_y: int,
    spec: HyperpriorSpec,
    rng: np.random.Generator,
    *,
    h_cardinality: Optional[int] = None,
    variant: Variant = "canonical",
    descriptor: Optional[HyperpriorDescriptor] = None,
) -> LabeledDistribution:
    """Draw one labeled joint table from the given structure's generative model.

    The Y-rooted structures are sampled by running their X-rooted twin
    with the variable roles swapped and transposing the result, so the
    two consume any shared stream identically.  ``h_cardinality`` forces
    |H| instead of drawing it (testing hook; also accepts 1).
    """
    if k_x < 2 or k_y < 2:
        raise ValidationError("cardinalities must be >= 2")
    structure = CausalStructure(structure)

    if structure == CausalStructure.Y_TO_X:
        twin = sample_instance(
            CausalStructure.X_TO_Y, k_y, k_x, spec, rng,
            variant=variant, descriptor=descriptor,
        )
        return LabeledDistribution(
            JointTable(twin.joint.entries.T), structure, None, descriptor
        )
    if structure == CausalStructure.Y_TO_X_CONF:
        twin = sample_instance(
            CausalStructure.X_TO_Y_CONF, k_y, k_x, spec, rng,
            h_cardinality=h_cardinality, variant=variant, descriptor=descriptor,
        )
        return LabeledDistribution(
            JointTable(twin.joint.entries.T), structure, twin.h_cardinality, descriptor
        )

    if structure == CausalStructure.INDEPENDENT:
        p_x = sample_rows_from_mixture(_role_prior(spec.cause_prior, spec, k_x, rng), 1, rng)[0]
        p_y = sample_rows_from_mixture(_role_prior(spec.mechanism_prior, spec, k_y, rng), 1, rng)[0]
        joint = JointTable(np.outer(p_x, p_y))
        return LabeledDistribution(joint, structure, None, descriptor)

    if structure == CausalStructure.X_TO_Y:
        cause_mix = _role_prior(spec.cause_prior, spec, k_x, rng)
        mech_mix = _role_prior(spec.mechanism_prior, spec, k_y, rng)
        p_x = sample_rows_from_mixture(cause_mix, 1, rng)[0]
        mech = sample_rows_from_mixture(mech_mix, k_x, rng)
        return LabeledDistribution(JointTable(p_x[:, None] * mech), structure, None, descriptor)

    h = _draw_h(rng, h_cardinality)
    conf_mix = _role_prior(spec.confounder_prior, spec, h, rng) if h >= 2 else None
    if h >= 2:
        p_h = sample_rows_from_mixture(conf_mix, 1, rng)[0]
    else:
        p_h = np.ones(1)
    x_mix = _role_prior(spec.cause_prior, spec, k_x, rng)
    y_mix = _role_prior(spec.mechanism_prior, spec, k_y, rng)
    x_rows = sample_rows_from_mixture(x_mix, h, rng)

    if structure == CausalStructure.CONFOUNDED:
        y_rows = sample_rows_from_mixture(y_mix, h, rng)
        joint = confounded_joint(p_h, x_rows, y_rows)
        return LabeledDistribution(joint, structure, h, descriptor)

    if structure != CausalStructure.X_TO_Y_CONF:
        raise ValidationError(f"unknown structure {structure!r}")
    if variant == "canonical":
        y_given_xh = sample_rows_from_mixture(y_mix, k_x * h, rng).reshape(k_x, h, k_y)
        joint = causal_confounded_joint(p_h, x_rows, y_given_xh)
    elif variant == "factor-product":
        p_x = sample_rows_from_mixture(x_mix, 1, rng)[0]
        y_given_x = sample_rows_from_mixture(y_mix, k_x, rng)
        y_rows = sample_rows_from_mixture(y_mix, h, rng)
        joint = factor_product_joint(p_x, y_given_x, p_h, x_rows, y_rows)
    else:
        raise ValidationError(f"unknown variant {variant!r}")
    return LabeledDistribution(joint, structure, h, descriptor)


def _mixture_rows_grouped(
    mix: DirichletMixture, n_rows: int, rng: np.random.Generator
) -> np.ndarray:
    return sample_rows_from_mixture(mix, n_rows, rng)


def _derived_h_rows(
    spec: HyperpriorSpec, g: int, h: int, rng: np.random.Generator
) -> np.ndarray:
    """P(H) rows for g items of confounder cardinality h.

    For flat specs these are plain flat draws.  Otherwise each item gets
    its own freshly derived mixture (uniform weights, the spec's
    alpha_max and component count), matching ``sample_instance``.
    """
    if spec.confounder_prior is not None and spec.confounder_prior.dim == h:
        return sample_rows_from_mixture(spec.confounder_prior, g, rng)
    if spec.is_flat:
        return sample_dirichlet_batch(np.ones((g, h)), rng)
    amax = spec.alpha_max
    k = spec.n_components
    lo, hi = 2.0 ** -amax, 2.0 ** amax
    alphas = rng.uniform(lo, hi, size=(g, k, h))
    comp = rng.integers(0, k, size=g)
    return sample_dirichlet_batch(alphas[np.arange(g), comp], rng)


def sample_batch(
    structure: CausalStructure,
    k_x: int,
    k_y: int,
    n: int,
    spec: HyperpriorSpec,
    rng: np.random.Generator,
    variant: Variant = "canonical",
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized sampler: n joints as an (n, k_x, k_y) array plus |H| values.

    Statistically identical to repeated ``sample_instance`` calls but
    draws whole blocks at once from the single stream ``rng``; the |H|
    column is -1 for structures without a confounder.
    """
    if n < 0:
        raise ValidationError("n must be >= 0")
    structure = CausalStructure(structure)
    if structure == CausalStructure.Y_TO_X:
        joints, h = sample_batch(CausalStructure.X_TO_Y, k_y, k_x, n, spec, rng, variant)
        return joints.transpose(0, 2, 1), h
    if structure == CausalStructure.Y_TO_X_CONF:
        joints, h = sample_batch(CausalStructure.X_TO_Y_CONF, k_y, k_x, n, spec, rng, variant)
        return joints.transpose(0, 2, 1), h

    joints = np.empty((n, k_x, k_y))
    h_out = np.full(n, -1, dtype=int)

    if structure == CausalStructure.INDEPENDENT:
        px = sample_rows_from_mixture(_role_prior(spec.cause_prior, spec, k_x, rng), n, rng)
        py = sample_rows_from_mixture(_role_prior(spec.mechanism_prior, spec, k_y, rng), n, rng)
        joints[:] = px[:, :, None] * py[:, None, :]
        return joints, h_out

    if structure == CausalStructure.X_TO_Y:
        cause_mix = _role_prior(spec.cause_prior, spec, k_x, rng)
        mech_mix = _role_prior(spec.mechanism_prior, spec, k_y, rng)
        px = sample_rows_from_mixture(cause_mix, n, rng)
        mech = sample_rows_from_mixture(mech_mix, n * k_x, rng).reshape(n, k_x, k_y)
        joints[:] = px[:, :, None] * mech
        return joints, h_out

    if structure not in (CausalStructure.CONFOUNDED, CausalStructure.X_TO_Y_CONF):
        raise ValidationError(f"unknown structure {structure!r}")

    # keep the largest temporary tensor near 2e7 elements
    per_item = k_x * H_CARD_MAX * (k_y if structure == CausalStructure.X_TO_Y_CONF else 1)
    block = max(64, int(2e7 // max(per_item, 1)))
    x_mix = _role_prior(spec.cause_prior, spec, k_x, rng)
    y_mix = _role_prior(spec.mechanism_prior, spec, k_y, rng)
    start = 0
    while start < n:
        m = min(block, n - start)
        h_cards = rng.integers(H_CARD_MIN, H_CARD_MAX + 1, size=m)
        h_out[start : start + m] = h_cards
        for h in np.unique(h_cards):
            sel = np.flatnonzero(h_cards == h) + start
            g = sel.size
            p_h = _derived_h_rows(spec, g, int(h), rng)
            x_rows = _mixture_rows_grouped(x_mix, g * int(h), rng).reshape(g, int(h), k_x)
            if structure == CausalStructure.CONFOUNDED:
                y_rows = _mixture_rows_grouped(y_mix, g * int(h), rng).reshape(g, int(h), k_y)
                joints[sel] = np.einsum("gh,ghx,ghy->gxy", p_h, x_rows, y_rows)
            elif variant == "canonical":
                y_gxh = _mixture_rows_grouped(y_mix, g * k_x * int(h), rng).reshape(
                    g, k_x, int(h), k_y
                )
                joints[sel] = np.einsum("gh,ghx,gxhy->gxy", p_h, x_rows, y_gxh)
            elif variant == "factor-product":
                p_x = _mixture_rows_grouped(x_mix, g, rng)
                y_gx = _mixture_rows_grouped(y_mix, g * k_x, rng).reshape(g, k_x, k_y)
                y_rows = _mixture_rows_grouped(y_mix, g * int(h), rng).reshape(g, int(h), k_y)
                w = p_x[:, :, None] * y_gx * np.einsum("gh,ghx,ghy->gxy", p_h, x_rows, y_rows)
                joints[sel] = w / w.sum(axis=(1, 2), keepdims=True)
            else:
                raise ValidationError(f"unknown variant {variant!r}")
        start += m
    return joints, h_out


def build_dataset(
    k_x: int,
    k_y: int,
    n_per_class: int,
    classes: Iterable[CausalStructure],
    spec: HyperpriorSpec,
    seed: int,
    variant: Variant = "canonical",
) -> LabeledDataset:
    """Exactly ``n_per_class`` items per requested class, class-major order.

    Each item is drawn from its own stream keyed by (seed, class code,
    index), so the dataset identity is independent of iteration order or
    parallel scheduling.
    """
    if n_per_class < 1:
        raise ValidationError("n_per_class must be >= 1")
    chosen = sorted(set(CausalStructure(c) for c in classes))
    if not chosen:
        raise ValidationError("need at least one class")
    desc = HyperpriorDescriptor(spec.alpha_max, spec.n_components, seed)
    items = []
    for structure in chosen:
        for i in range(n_per_class):
            item_rng = stream(seed, rngmod.TAG_DATASET_ITEM, int(structure), i)
            items.append(
                sample_instance(
                    structure, k_x, k_y, spec, item_rng, variant=variant, descriptor=desc
                )
            )
    counts = {s: n_per_class for s in chosen}
    return LabeledDataset(tuple(items), k_x, k_y, counts, seed=seed, descriptor=desc)


def _fmt_floats(values: np.ndarray) -> str:
    return "[" + ",".join(f"{v:.17g}" for v in values) + "]"


def save_dataset(dataset: LabeledDataset, path) -> None:
    """Line-delimited JSON: one header record, then one record per item.

    Doubles are written with 17 significant digits, so a load followed by
    a save is byte-identical.
    """
    desc = dataset.descriptor
    header = {
        "schema_version": DATASET_SCHEMA_VERSION,
        "k_x": dataset.k_x,
        "k_y": dataset.k_y,
        "n_items": len(dataset),
        "seed": dataset.seed,
        "hyperprior": None
        if desc is None
        else {
            "alpha_max": desc.alpha_max,
            "n_components": desc.n_components,
            "seed": desc.seed,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for item in dataset.items:
            h = -1 if item.h_cardinality is None else item.h_cardinality
            entries = _fmt_floats(item.joint.entries.reshape(-1))
            fh.write(f'{{"label":{int(item.label)},"h":{h},"entries":{entries}}}\n')


def load_dataset(path) -> LabeledDataset:
    """Inverse of ``save_dataset``; raises DatasetFormatError on any defect."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty dataset file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path}: malformed header: {exc}") from exc
    version = header.get("schema_version")
    if version != DATASET_SCHEMA_VERSION:
        raise DatasetFormatError(f"{path}: unsupported schema version {version!r}")
    try:
        k_x, k_y = int(header["k_x"]), int(header["k_y"])
        n_items = int(header["n_items"])
        seed = int(header["seed"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetFormatError(f"{path}: malformed header: {exc}") from exc
    raw_desc = header.get("hyperprior")
    desc = (
        None
        if raw_desc is None
        else HyperpriorDescriptor(
            float(raw_desc["alpha_max"]), int(raw_desc["n_components"]), int(raw_desc["seed"])
        )
    )
    body = lines[1:]
    if len(body) != n_items:
        raise DatasetFormatError(
            f"{path}: truncated dataset: header promises {n_items} records, found {len(body)}"
        )
    items = []
    counts: dict[CausalStructure, int] = {}
    for idx, line in enumerate(body):
        try:
            rec = json.loads(line)
            label = CausalStructure(int(rec["label"]))
            h = int(rec["h"])
            entries = np.array(rec["entries"], dtype=float).reshape(k_x, k_y)
            item = LabeledDistribution(
                JointTable(entries), label, None if h < 0 else h, desc
            )
        except Exception as exc:
            raise DatasetFormatError(f"{path}: record {idx}: {exc}") from exc
        items.append(item)
        counts[label] = counts.get(label, 0) + 1
    return LabeledDataset(tuple(items), k_x, k_y, counts, seed=seed, descriptor=desc)
