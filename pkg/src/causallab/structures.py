"""The six acyclic causal hypotheses over two observed discrete variables."""

from __future__ import annotations

from enum import IntEnum

__all__ = ["CausalStructure", "DIRECTED", "ALL_STRUCTURES"]


class CausalStructure(IntEnum):
    """Which acyclic graph generated the joint table of X and Y.

    Codes are stable and used in every serialized format.
    """

    INDEPENDENT = 0
    X_TO_Y = 1
    Y_TO_X = 2
    CONFOUNDED = 3
    X_TO_Y_CONF = 4
    Y_TO_X_CONF = 5

    @property
    def has_confounder(self) -> bool:
        return self in (
            CausalStructure.CONFOUNDED,
            CausalStructure.X_TO_Y_CONF,
            CausalStructure.Y_TO_X_CONF,
        )


DIRECTED = (CausalStructure.X_TO_Y, CausalStructure.Y_TO_X)
ALL_STRUCTURES = tuple(CausalStructure)
