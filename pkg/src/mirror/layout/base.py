"""Shared types for the 2D layout engine."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from ..model import MapPoint


@dataclass(frozen=True)
class LayoutConfig:
    """Hyperparameters for the neighbor-graph embedding.

    Invariants: 2 <= n_neighbors < N, min_dist in (0, 1], n_epochs >= 1
    (checked against the dataset size in ``validate``).
    """

    n_neighbors: int = 15
    min_dist: float = 0.1
    n_epochs: int | None = None  # None: 500 when N <= 10_000 else 200
    learning_rate: float = 1.0
    negative_sample_rate: int = 5
    seed: int = 42
    init: str = "spectral"  # "spectral" | "random"

    def validate(self, n_points: int) -> None:
        if not 2 <= self.n_neighbors < max(n_points, 3):
            raise ValueError(f"need 2 <= n_neighbors < N, got k={self.n_neighbors}, N={n_points}")
        if not 0.0 < self.min_dist <= 1.0:
            raise ValueError("min_dist must be in (0, 1]")
        if self.n_epochs is not None and self.n_epochs < 1:
            raise ValueError("n_epochs must be >= 1")
        if self.init not in ("spectral", "random"):
            raise ValueError(f"unknown init {self.init!r}")

    def resolve_epochs(self, n_points: int) -> int:
        if self.n_epochs is not None:
            return self.n_epochs
        return 500 if n_points <= 10_000 else 200

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "LayoutConfig":
        return cls(**data)


@dataclass
class NeighborGraph:
    """k nearest neighbors per point: indices and cosine distances, ascending."""

    indices: np.ndarray  # (N, k) int64, no self entries
    distances: np.ndarray  # (N, k) float64

    @property
    def n_points(self) -> int:
        return self.indices.shape[0]

    @property
    def k(self) -> int:
        return self.indices.shape[1]


@dataclass
class FuzzyGraph:
    """Symmetrized weighted neighbor graph plus its calibration terms."""

    matrix: "object"  # scipy.sparse csr, symmetric, weights in (0, 1]
    sigmas: np.ndarray
    rhos: np.ndarray

    @property
    def n_points(self) -> int:
        return self.matrix.shape[0]


@dataclass
class Layout2D:
    """A finished 2D arrangement of the dataset."""

    layout_id: str
    kind: str  # semantic_map | grid | semantic_axes
    points: list[MapPoint]
    config: dict = field(default_factory=dict)
    axis_concepts: Optional[tuple[str, str]] = None

    def __post_init__(self):
        if self.kind == "semantic_axes" and self.axis_concepts is None:
            raise ValueError("semantic_axes layout requires axis_concepts")
        for p in self.points:
            if not (np.isfinite(p.x) and np.isfinite(p.y)):
                raise ValueError(f"non-finite coordinate for item {p.item_id}")

    def to_dict(self) -> dict:
        return {
            "layout_id": self.layout_id,
            "kind": self.kind,
            "points": [p.to_dict() for p in self.points],
            "config": self.config,
            "axis_concepts": list(self.axis_concepts) if self.axis_concepts else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Layout2D":
        return cls(
            layout_id=data["layout_id"],
            kind=data["kind"],
            points=[MapPoint.from_dict(p) for p in data["points"]],
            config=data.get("config", {}),
            axis_concepts=tuple(data["axis_concepts"]) if data.get("axis_concepts") else None,
        )
