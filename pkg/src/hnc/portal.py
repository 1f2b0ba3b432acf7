"""Portal maps between NNI-adjacent strata.

A portal configuration supports both trees of an NNI-adjacent pair in the
interior. It is built in three rigid-translation stages: center the three
triplet clusters on an equilateral triangle, scale that triangle until
each cluster fits its consensus ball, then restore the margin at every
ancestor split.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._index import EvalStats, as_positions
from .clustering import INTERIOR, stratum_contains
from .configuration import Configuration, DegenerateHyperplaneError, _index
from .hierarchy import NniTriplet, Tree, nni_triplet

SQRT3_2 = np.sqrt(3.0) / 2.0
SYMMETRY_TOL = 1e-8


class NotSymmetricError(ValueError):
    """Triplet centroids do not form an equilateral triangle."""


# -- Napoleon transformation ----------------------------------------------------

def _plane_basis(tri: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Origin and orthonormal (u1, u2) spanning the triangle's affine plane."""
    d = tri.shape[1]
    if d < 2:
        raise ValueError("the Napoleon transformation needs d >= 2")
    # Working about the centroid keeps the rounding in the preserved centroid small.
    origin = tri.mean(axis=0)
    edges = tri[1:] - tri[0]
    scale = float(np.abs(tri - origin).max())
    if scale == 0.0:
        raise DegenerateHyperplaneError("all three triangle vertices coincide")
    lengths = np.linalg.norm(edges, axis=1)
    u1 = edges[int(np.argmax(lengths))]
    u1 = u1 / np.linalg.norm(u1)
    for v in edges:
        w = v - (v @ u1) * u1
        nw = np.linalg.norm(w)
        if nw > 1e-12 * scale:
            return origin, u1, w / nw
    # Collinear: the first coordinate axis not parallel to the line.
    for v in np.eye(d):
        w = v - (v @ u1) * u1
        nw = np.linalg.norm(w)
        if nw > 1e-6:
            return origin, u1, w / nw
    raise AssertionError("no second basis direction found")


def _outer_2d(p: np.ndarray) -> np.ndarray:
    """One outer Napoleon step on 2D points; vertex i maps from the side opposite it."""
    a, b, c = p
    area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    sign = 1.0 if area2 >= 0.0 else -1.0

    def apex_centroid(P, Q):
        v = Q - P
        right = np.array([v[1], -v[0]])  # rotate by -90 degrees
        apex = 0.5 * (P + Q) + SQRT3_2 * sign * right
        return (P + Q + apex) / 3.0

    # Directed edges follow the cyclic order a -> b -> c -> a.
    return np.array([apex_centroid(b, c), apex_centroid(c, a), apex_centroid(a, b)])


def napoleon_outer(tri) -> np.ndarray:
    tri = np.asarray(tri, dtype=float)
    origin, u1, u2 = _plane_basis(tri)
    rel = tri - origin
    p = np.stack([rel @ u1, rel @ u2], axis=1)
    q = _outer_2d(p)
    return origin + q[:, :1] * u1 + q[:, 1:] * u2


def napoleon_double_outer(tri) -> np.ndarray:
    """Two outer Napoleon steps; the result is equilateral with the same centroid."""
    tri = np.asarray(tri, dtype=float)
    if tri.shape[0] != 3:
        raise ValueError("expected three vertices")
    origin, u1, u2 = _plane_basis(tri)
    rel = tri - origin
    p = np.stack([rel @ u1, rel @ u2], axis=1)
    q = _outer_2d(_outer_2d(p))
    return origin + q[:, :1] * u1 + q[:, 1:] * u2


def side_spread(tri) -> float:
    """(max side - min side) / max side."""
    tri = np.asarray(tri, dtype=float)
    sides = np.linalg.norm(tri - np.roll(tri, 1, axis=0), axis=1)
    return float((sides.max() - sides.min()) / sides.max())


# -- portal context ----------------------------------------------------------------

@dataclass(frozen=True)
class PortalContext:
    sigma: Tree
    tau: Tree
    alpha: float = 0.2

    @cached_property
    def triplet(self) -> NniTriplet:
        return nni_triplet(self.sigma, self.tau)

    @property
    def blocks(self) -> tuple:
        t = self.triplet
        return (t.a, t.b, t.c)

    @property
    def p(self) -> frozenset:
        return self.triplet.p


def _resolve(ctx: PortalContext, q) -> frozenset:
    if isinstance(q, str):
        return dict(zip("ABC", ctx.blocks))[q.upper()]
    if isinstance(q, int):
        return ctx.blocks[q]
    q = frozenset(q)
    if q not in ctx.blocks:
        raise ValueError(f"{sorted(q)} is not a triplet cluster")
    return q


def _pos(config):
    pos = np.array(as_positions(config), dtype=float)
    radii = getattr(config, "radii", None)
    return pos, (np.zeros(len(pos)) if radii is None else np.asarray(radii, dtype=float))


def _out(config, pos):
    if isinstance(config, Configuration):
        return Configuration(pos, config.radii)
    return pos


def _centroids(pos: np.ndarray, blocks) -> np.ndarray:
    return np.stack([pos[_index(b)].mean(axis=0) for b in blocks])


def napoleon_offset_and_centroids(config, ctx: PortalContext) -> tuple[np.ndarray, np.ndarray]:
    """Offset of the triplet barycenter and the equilateral targets (c_A, c_B, c_C)."""
    pos, _ = _pos(config)
    blocks = ctx.blocks
    tri = _centroids(pos, blocks)
    nt = napoleon_double_outer(tri)
    w = np.array([len(b) for b in blocks], dtype=float)
    cp = pos[_index(ctx.p)].mean(axis=0)
    offset = cp - (w @ nt) / w.sum()
    return offset, nt + offset


def is_symmetric(config, ctx: PortalContext, tol: float = SYMMETRY_TOL) -> bool:
    pos, _ = _pos(config)
    tri = _centroids(pos, ctx.blocks)
    if np.linalg.norm(tri - np.roll(tri, 1, axis=0), axis=1).max() == 0.0:
        return False
    return side_spread(tri) <= tol


def _hyperplane_distance(pos, tree: Tree, q: frozenset, d: frozenset) -> float:
    cd = pos[_index(d)].mean(axis=0)
    cs = pos[_index(tree.sibling(d))].mean(axis=0)
    e = cd - cs
    ne = np.linalg.norm(e)
    if ne == 0.0:
        raise DegenerateHyperplaneError(f"coincident centroids at {sorted(d)}")
    cq = pos[_index(q)].mean(axis=0)
    return float((cq - 0.5 * (cd + cs)) @ e / ne)


def consensus_radius(config, ctx: PortalContext, q) -> float:
    """Distance from c(x|Q) to the nearest separating hyperplane Q must respect in either tree."""
    q = _resolve(ctx, q)
    if not is_symmetric(config, ctx):
        raise NotSymmetricError("triplet centroids are not equilateral")
    pos, _ = _pos(config)
    return _consensus_radius(pos, ctx, q)


def _consensus_radius(pos, ctx: PortalContext, q: frozenset) -> float:
    best = np.inf
    for tree in (ctx.sigma, ctx.tau):
        for d in {q, tree.parent(q)} - {ctx.p}:
            best = min(best, _hyperplane_distance(pos, tree, q, d))
    return float(best)


def portal_center(config, ctx: PortalContext):
    """Rigidly move A, B, C so their centroids form the equilateral target triangle."""
    pos, _ = _pos(config)
    _, targets = napoleon_offset_and_centroids(pos, ctx)
    out = pos.copy()
    for b, t in zip(ctx.blocks, targets):
        ix = _index(b)
        out[ix] += t - pos[ix].mean(axis=0)
    return _out(config, out)


def portal_scale_parameter(config, ctx: PortalContext) -> float:
    pos, radii = _pos(config)
    worst = 1.0
    for q in ctx.blocks:
        ix = _index(q)
        pts = pos[ix]
        rho = float(np.max(np.linalg.norm(pts - pts.mean(axis=0), axis=1) + radii[ix]))
        worst = max(worst, (rho + ctx.alpha) / _consensus_radius(pos, ctx, q))
    return worst - 1.0


def portal_scale(config, ctx: PortalContext):
    """Push A, B, C radially from c(x|P) until each fits its consensus ball with margin alpha."""
    if not is_symmetric(config, ctx):
        raise NotSymmetricError("portal_scale expects a symmetric configuration")
    pos, _ = _pos(config)
    k = portal_scale_parameter(config, ctx)
    if k == 0.0:
        return _out(config, pos)
    cp = pos[_index(ctx.p)].mean(axis=0)
    out = pos.copy()
    for q in ctx.blocks:
        ix = _index(q)
        out[ix] += k * (pos[ix].mean(axis=0) - cp)
    return _out(config, out)


def portal_separate(pos: np.ndarray, radii: np.ndarray, tree: Tree, cluster: frozenset,
                    alpha: float, stats: EvalStats | None = None) -> tuple[np.ndarray, float]:
    """Translate ``cluster`` and its sibling apart until both clear their hyperplane by r + alpha."""
    sib = tree.sibling(cluster)
    parent = cluster | sib
    ia, ib = _index(cluster), _index(sib)
    ca, cb = pos[ia].mean(axis=0), pos[ib].mean(axis=0)
    e = ca - cb
    ne = np.linalg.norm(e)
    if ne == 0.0:
        raise DegenerateHyperplaneError(f"coincident centroids at {sorted(cluster)}")
    eh = e / ne
    m = 0.5 * (ca + cb)
    sa = (pos[ia] - m) @ eh
    sb = -(pos[ib] - m) @ eh
    if stats is not None:
        stats.separations += len(parent)
    lam = max(float(np.max(-(sa - radii[ia] - alpha))), float(np.max(-(sb - radii[ib] - alpha))), 0.0)
    if lam == 0.0:
        return pos, 0.0
    out = pos.copy()
    out[ia] += 2.0 * lam * len(ib) / len(parent) * eh
    out[ib] -= 2.0 * lam * len(ia) / len(parent) * eh
    return out, lam


def portal_merge(config, ctx: PortalContext, stats: EvalStats | None = None):
    """Bottom-up from P, restore the alpha margin between each ancestor split in sigma."""
    pos, radii = _pos(config)
    tree = ctx.sigma
    c = ctx.p
    while c != tree.leaves:
        pos, _ = portal_separate(pos, radii, tree, c, ctx.alpha, stats)
        c = tree.parent(c)
    return _out(config, pos)


def in_portal(config, ctx: PortalContext, stats: EvalStats | None = None) -> bool:
    return (stratum_contains(config, ctx.sigma, INTERIOR, stats=stats)
            and stratum_contains(config, ctx.tau, INTERIOR, stats=stats))


def portal_map(config, ctx: PortalContext, stats: EvalStats | None = None):
    """Identity inside the portal, otherwise merge . scale . center."""
    if in_portal(config, ctx, stats):
        return config
    centered = portal_center(config, ctx)
    scaled = portal_scale(centered, ctx)
    return portal_merge(scaled, ctx, stats)
