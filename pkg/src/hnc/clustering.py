"""Divisive 2-means hierarchical clustering and stratum membership."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import _kernels
from ._index import EvalStats, Geometry, as_positions, tree_index
from .configuration import EPS_GEOM, Configuration, DegenerateHyperplaneError, _index
from .hierarchy import Tree

CLOSED = "closed"
INTERIOR = "interior"

LLOYD_MAX_ITER = 100


def two_means_split(points, labels: Sequence[int] | None = None) -> tuple[frozenset, frozenset]:
    """Deterministic Lloyd 2-means on ``points`` (rows), returned as two label blocks.

    Seeds are the farthest pair (lowest index pair on ties); a point equidistant
    from both centers goes to the lower-index one. The block holding the
    smallest label comes first.
    """
    pts = np.asarray(points, dtype=float)
    m = len(pts)
    labels = list(range(1, m + 1)) if labels is None else [int(j) for j in labels]
    if m < 2:
        raise ValueError("two_means_split needs at least two points")
    if len(labels) != m:
        raise ValueError("labels and points differ in length")

    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    flat = int(np.argmax(np.triu(d2 + 1.0, k=1)))  # argmax returns the first maximum
    a, b = divmod(flat, m)
    centers = pts[[a, b]]
    assign = None
    for _ in range(LLOYD_MAX_ITER):
        da = np.einsum("ij,ij->i", pts - centers[0], pts - centers[0])
        db = np.einsum("ij,ij->i", pts - centers[1], pts - centers[1])
        new = (db < da).astype(int)
        # The seeds always land in different blocks, so an empty block can only
        # appear after the first update; keep the last assignment then.
        if assign is not None and (new.min() == new.max() or np.array_equal(new, assign)):
            break
        assign = new
        centers = np.stack([pts[assign == 0].mean(axis=0), pts[assign == 1].mean(axis=0)])

    first = frozenset(labels[i] for i in range(m) if assign[i] == 0)
    second = frozenset(labels[i] for i in range(m) if assign[i] == 1)
    return (first, second) if min(first) < min(second) else (second, first)


def hc_2means(config) -> Tree:
    """Split recursively with ``two_means_split`` down to singletons."""
    pos = as_positions(config)

    def build(labels: list[int]):
        if len(labels) == 1:
            return labels[0]
        left, right = two_means_split(pos[[j - 1 for j in labels]], labels)
        return (build(sorted(left)), build(sorted(right)))

    return Tree(build(list(range(1, len(pos) + 1))))


def stratum_contains(config, tree: Tree, mode: str = CLOSED, eps: float = EPS_GEOM,
                     stats: EvalStats | None = None) -> bool:
    """Whether every separation s_{i,I} is >= -eps (closed) or > eps (interior)."""
    if mode not in (CLOSED, INTERIOR):
        raise ValueError(f"mode must be {CLOSED!r} or {INTERIOR!r}")
    idx = tree_index(tree)
    geo = Geometry(idx, as_positions(config, idx.n), stats)
    if geo.degenerate:
        if mode == INTERIOR:
            return False
        raise DegenerateHyperplaneError("coincident sibling centroids")
    if idx.npairs == 0:
        return True
    if mode == CLOSED:
        return bool(geo.s.min() >= -eps)
    return bool(geo.s.min() > eps)


def stratum_margin(config, tree: Tree) -> float:
    """Smallest separation over all (label, cluster) pairs; -inf if degenerate."""
    idx = tree_index(tree)
    pk = idx.packed
    x = np.ascontiguousarray(as_positions(config, idx.n))
    return float(_kernels.min_separation(x, pk["left"], pk["right"], pk["size"], pk["leaf_label"],
                                         pk["sibling"], pk["pair_node"], pk["pair_label"]))


def _block_radius(pos: np.ndarray, radii: np.ndarray, block) -> tuple[float, np.ndarray]:
    ix = _index(block)
    pts = pos[ix]
    c = pts.mean(axis=0)
    return float(np.max(np.linalg.norm(pts - c, axis=1) + radii[ix])), c


def is_narrow(config: Configuration, bipartition: tuple) -> bool:
    """max block radius < half the centroid gap."""
    a, b = bipartition
    ra, ca = _block_radius(config.positions, config.radii, a)
    rb, cb = _block_radius(config.positions, config.radii, b)
    return max(ra, rb) < 0.5 * float(np.linalg.norm(ca - cb))


def is_standard(config: Configuration, tree: Tree) -> bool:
    return all(is_narrow(config, tree.children(c)) for c in tree.interior())
