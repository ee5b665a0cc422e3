"""Mutable-free containers for MAP and MSD state."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MapState:
    q: np.ndarray  # (L, 2) positions
    p: np.ndarray  # (L, 2) velocities
    active: np.ndarray  # (L,) bool

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def active_ids(self) -> np.ndarray:
        return np.flatnonzero(self.active)

    def replace(self, **changes) -> "MapState":
        fields = {"q": self.q, "p": self.p, "active": self.active}
        fields.update(changes)
        return MapState(**fields)


@dataclass(frozen=True)
class MsdState:
    y: np.ndarray  # (M, 2) positions

    @property
    def m(self) -> int:
        return len(self.y)
