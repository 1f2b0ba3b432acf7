"""Configurations of labeled disks and the scalar cluster functions on them.

Labels are 1-based throughout; positions are stored row-wise so that label
``j`` lives in row ``j - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

#: Absolute tolerance for hyperplane and boundary comparisons.
EPS_GEOM = 1e-9

Cluster = frozenset


class DegenerateHyperplaneError(ValueError):
    """Raised when two sibling centroids coincide (no separating hyperplane)."""


def cluster(*labels: int | Iterable[int]) -> frozenset:
    """Build a cluster from labels, e.g. ``cluster(1, 2)`` or ``cluster([1, 2])``."""
    if len(labels) == 1 and not isinstance(labels[0], (int, np.integer)):
        return frozenset(int(j) for j in labels[0])
    return frozenset(int(j) for j in labels)


@dataclass(frozen=True)
class Violation:
    i: int
    j: int
    gap: float  # ||x_i - x_j|| - (r_i + r_j); non-positive for a violation


@dataclass(frozen=True, eq=False)
class Configuration:
    """Disk centers in R^d with per-disk radii."""

    positions: np.ndarray
    radii: np.ndarray = field(default=None)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2:
            raise ValueError(f"positions must be (n, d), got shape {pos.shape}")
        rad = np.zeros(len(pos)) if self.radii is None else np.array(self.radii, dtype=float)
        if rad.shape != (len(pos),):
            raise ValueError(f"radii must have length {len(pos)}, got shape {rad.shape}")
        if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(rad)):
            raise ValueError("positions and radii must be finite")
        if np.any(rad < 0):
            raise ValueError("radii must be non-negative")
        pos.setflags(write=False)
        rad.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "radii", rad)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def labels(self) -> frozenset:
        return frozenset(range(1, self.n + 1))

    def point(self, label: int) -> np.ndarray:
        return self.positions[label - 1]

    def with_positions(self, positions) -> "Configuration":
        return Configuration(positions, self.radii)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (np.array_equal(self.positions, other.positions)
                and np.array_equal(self.radii, other.radii))

    __hash__ = None


def _index(c) -> np.ndarray:
    return np.fromiter((j - 1 for j in sorted(c)), dtype=int, count=len(c))


def validate(config: Configuration) -> list[Violation]:
    """Return every colliding pair; an empty list means the configuration is valid.

    Membership is strict: touching disks (zero gap) are reported.
    """
    x, r = config.positions, config.radii
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    gap = dist - (r[:, None] + r[None, :])
    out = []
    for i, j in zip(*np.nonzero(np.triu(gap <= 0.0, k=1))):
        out.append(Violation(int(i) + 1, int(j) + 1, float(gap[i, j])))
    return out


def min_clearance(positions: np.ndarray, radii: np.ndarray) -> float:
    """Smallest ||x_i - x_j|| - r_i - r_j over distinct pairs (inf for n < 2)."""
    n = len(positions)
    if n < 2:
        return float("inf")
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    gap = dist - (radii[:, None] + radii[None, :])
    iu = np.triu_indices(n, k=1)
    return float(gap[iu].min())


def centroid(config: Configuration, c) -> np.ndarray:
    if not c:
        raise ValueError("centroid of an empty cluster is undefined")
    return config.positions[_index(c)].mean(axis=0)


def _sibling(tree, c) -> frozenset:
    c = frozenset(c)
    if c == tree.leaves:
        raise ValueError("the root cluster has no sibling")
    return tree.sibling(c)


def centroid_separation(config: Configuration, tree, c) -> np.ndarray:
    """c(x|I) - c(x|sibling of I)."""
    sib = _sibling(tree, c)
    return centroid(config, c) - centroid(config, sib)


def centroid_midpoint(config: Configuration, tree, c) -> np.ndarray:
    sib = _sibling(tree, c)
    return 0.5 * (centroid(config, c) + centroid(config, sib))


def separation(config: Configuration, tree, label: int, c) -> float:
    """Signed distance of ``x_label`` to the bisector of I and its sibling.

    Positive on I's side.
    """
    c = frozenset(c)
    if label not in c:
        raise ValueError(f"label {label} is not a member of {sorted(c)}")
    e = centroid_separation(config, tree, c)
    norm = np.linalg.norm(e)
    if norm == 0.0:
        raise DegenerateHyperplaneError(f"coincident centroids for cluster {sorted(c)}")
    m = centroid_midpoint(config, tree, c)
    return float((config.point(label) - m) @ e / norm)


def cluster_radius(config: Configuration, c) -> float:
    """max over members of distance to the cluster centroid plus the disk radius."""
    idx = _index(c)
    pts = config.positions[idx]
    ctr = pts.mean(axis=0)
    return float(np.max(np.linalg.norm(pts - ctr, axis=1) + config.radii[idx]))
