"""Probability simplex vectors, joint tables, and conditional tables.

These are the value types everything else consumes.  All of them are
immutable after construction (frozen dataclasses over read-only numpy
arrays) and validated eagerly, so downstream code can assume well-formed
probabilities everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import UndefinedConditionalError, ValidationError

__all__ = [
    "SUM_TOL",
    "CLAMP_EPS",
    "SimplexVector",
    "JointTable",
    "ConditionalTable",
    "marginal_x",
    "marginal_y",
    "conditional",
    "compose",
    "transpose",
    "outer",
    "mutual_information",
]

SUM_TOL = 1e-9      # allowed deviation of total probability mass from 1
CLAMP_EPS = 1e-12   # floor applied by opt-in clamping when dividing by marginals


def _as_readonly(values, ndim: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValidationError(f"{what} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} entries must be finite")
    arr.flags.writeable = False
    return arr


def _check_mass(arr: np.ndarray, what: str) -> None:
    if np.any(arr < 0):
        raise ValidationError(f"{what} entries must be nonnegative")
    total = float(arr.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise ValidationError(f"{what} entries must sum to 1 within {SUM_TOL} (got {total!r})")


@dataclass(frozen=True, eq=False)
class SimplexVector:
    """A point on the probability simplex: nonnegative entries summing to 1."""

    values: np.ndarray

    def __post_init__(self):
        arr = _as_readonly(self.values, 1, "SimplexVector")
        if arr.shape[0] < 2:
            raise ValidationError("SimplexVector needs at least 2 states")
        _check_mass(arr, "SimplexVector")
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        return isinstance(other, SimplexVector) and np.array_equal(self.values, other.values)

    @staticmethod
    def uniform(n: int) -> "SimplexVector":
        return SimplexVector(np.full(n, 1.0 / n))


@dataclass(frozen=True, eq=False)
class JointTable:
    """Exact joint distribution of two discrete variables, shape (k_x, k_y)."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _as_readonly(self.entries, 2, "JointTable")
        if arr.shape[0] < 2 or arr.shape[1] < 2:
            raise ValidationError("JointTable needs at least 2 states per variable")
        _check_mass(arr, "JointTable")
        object.__setattr__(self, "entries", arr)

    @property
    def k_x(self) -> int:
        return self.entries.shape[0]

    @property
    def k_y(self) -> int:
        return self.entries.shape[1]

    def __eq__(self, other) -> bool:
        return isinstance(other, JointTable) and np.array_equal(self.entries, other.entries)

    @staticmethod
    def uniform(k_x: int, k_y: int) -> "JointTable":
        return JointTable(np.full((k_x, k_y), 1.0 / (k_x * k_y)))


@dataclass(frozen=True, eq=False)
class ConditionalTable:
    """One simplex row per conditioning state: rows[i] = P(target | given=i)."""

    rows: np.ndarray

    def __post_init__(self):
        raw = self.rows
        if isinstance(raw, Sequence) and raw and isinstance(raw[0], SimplexVector):
            raw = np.stack([r.values for r in raw])
        arr = _as_readonly(raw, 2, "ConditionalTable")
        if arr.shape[1] < 2:
            raise ValidationError("ConditionalTable target needs at least 2 states")
        for i, row in enumerate(arr):
            if np.any(row < 0):
                raise ValidationError(f"ConditionalTable row {i} entries must be nonnegative")
            if abs(float(row.sum()) - 1.0) > SUM_TOL:
                raise ValidationError(f"ConditionalTable row {i} must sum to 1 within {SUM_TOL}")
        object.__setattr__(self, "rows", arr)

    @property
    def k_given(self) -> int:
        return self.rows.shape[0]

    @property
    def k_target(self) -> int:
        return self.rows.shape[1]

    def row(self, i: int) -> SimplexVector:
        return SimplexVector(self.rows[i])

    def __eq__(self, other) -> bool:
        return isinstance(other, ConditionalTable) and np.array_equal(self.rows, other.rows)


def marginal_x(joint: JointTable) -> SimplexVector:
    """Row sums: the marginal of the first variable."""
    return SimplexVector(joint.entries.sum(axis=1))


def marginal_y(joint: JointTable) -> SimplexVector:
    """Column sums: the marginal of the second variable."""
    return SimplexVector(joint.entries.sum(axis=0))


def conditional(joint: JointTable, given: Literal["x", "y"], clamp: bool = False) -> ConditionalTable:
    """Condition the joint on one variable.

    ``given="x"`` returns P(Y|X) with one row per X state; ``given="y"``
    returns P(X|Y) with one row per Y state.  A marginal entry below
    ``CLAMP_EPS`` raises ``UndefinedConditionalError`` unless ``clamp`` is
    set, in which case the marginal is floored at ``CLAMP_EPS`` and each
    row renormalized (an all-zero row becomes uniform).
    """
    if given == "x":
        table = joint.entries
    elif given == "y":
        table = joint.entries.T
    else:
        raise ValidationError(f"given must be 'x' or 'y', got {given!r}")
    marg = table.sum(axis=1)
    if np.any(marg < CLAMP_EPS):
        if not clamp:
            bad = int(np.argmin(marg))
            raise UndefinedConditionalError(
                f"undefined conditional: marginal entry {bad} of {given!r} is below {CLAMP_EPS}"
            )
        marg = np.maximum(marg, CLAMP_EPS)
    rows = table / marg[:, None]
    if clamp:
        sums = rows.sum(axis=1)
        zero = sums <= 0.0
        if np.any(zero):
            rows[zero] = 1.0 / rows.shape[1]
            sums[zero] = 1.0
        rows = rows / sums[:, None]
    return ConditionalTable(rows)


def compose(marginal: SimplexVector, cond: ConditionalTable) -> JointTable:
    """Build the joint entry(i, j) = marginal[i] * cond.rows[i, j]."""
    if cond.k_given != marginal.n:
        raise ValidationError(
            f"dimension mismatch: marginal has {marginal.n} states, conditional expects {cond.k_given}"
        )
    return JointTable(marginal.values[:, None] * cond.rows)


def transpose(joint: JointTable) -> JointTable:
    """Swap the roles of the two variables."""
    return JointTable(joint.entries.T)


def outer(p: SimplexVector, q: SimplexVector) -> JointTable:
    """Rank-1 joint of two independent marginals."""
    return JointTable(np.outer(p.values, q.values))


def mutual_information(joint: JointTable) -> float:
    """Mutual information of the table in nats (0 iff the table is rank-1)."""
    p = joint.entries
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    mask = p > 0
    ratio = np.ones_like(p)
    ratio[mask] = p[mask] / (px @ py)[mask]
    return float(np.sum(p[mask] * np.log(ratio[mask])))
