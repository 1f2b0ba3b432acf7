"""The hierarchy-preserving navigation field f_{tau,y} and its substratum policies.

A field evaluation first computes, in a few vectorized O(n^2) sweeps, every
cluster centroid, separation, and the attracting (A) and split (H) predicates
of every cluster. The recursion over the tree then only touches the clusters
it actually visits.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Iterable

import numpy as np

from . import _kernels
from ._index import EvalStats, Geometry, TreeIndex, as_positions, tree_index
from .configuration import EPS_GEOM, Configuration, DegenerateHyperplaneError
from .hierarchy import Tree

DEFAULT_ALPHA = 0.2
DEFAULT_BETA = 1.0


class OutsideDomainError(ValueError):
    """The configuration is outside the set a field or policy is defined on."""


@dataclass(frozen=True, eq=False)
class FieldParams:
    """Goal configuration ``goal`` (with radii), its tree, and margins alpha < beta."""

    goal: Configuration
    tree: Tree
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.beta > self.alpha:
            raise ValueError(f"beta must exceed alpha, got beta={self.beta}, alpha={self.alpha}")
        if self.tree.leaves != self.goal.labels:
            raise ValueError("tree leaves and goal labels differ")
        geo = self._goal_geometry
        if geo.degenerate or (self.index.npairs and geo.s.min() < -EPS_GEOM):
            raise OutsideDomainError(f"goal configuration does not support {self.tree}")

    @property
    def n(self) -> int:
        return self.goal.n

    @cached_property
    def index(self) -> TreeIndex:
        return tree_index(self.tree)

    @cached_property
    def _goal_geometry(self) -> Geometry:
        return Geometry(self.index, self.goal.positions)

    @cached_property
    def _tables(self):
        idx, y, r = self.index, self.goal.positions, self.goal.radii
        dy = y[idx.iu] - y[idx.ju]
        rr2 = (r[idx.iu] + r[idx.ju]) ** 2
        r_pair = r[idx.pair_label]
        return dy, rr2, r_pair

    @cached_property
    def _kernel_args(self) -> tuple:
        gy, pk = self._goal_geometry, self.index.packed
        return (np.ascontiguousarray(self.goal.positions), self.goal.radii, gy.C, gy.e, gy.m,
                pk["left"], pk["right"], pk["parent"], pk["sibling"], pk["size"],
                pk["leaf_label"], pk["mem_ptr"], pk["mem_idx"], pk["pair_node"],
                pk["pair_label"], pk["cs_start"], pk["cs_end"], pk["iu"], pk["ju"],
                pk["pair_lca"], pk["sub_start"], float(self.alpha), float(self.beta))

    def with_goal(self, goal) -> "FieldParams":
        pos = as_positions(goal, self.n)
        return FieldParams(Configuration(pos, self.goal.radii), self.tree, self.alpha, self.beta)


class _Eval:
    """All per-configuration quantities used by one field evaluation."""

    def __init__(self, params: FieldParams, x, stats: EvalStats | None = None):
        idx = params.index
        self.params = params
        self.idx = idx
        x = as_positions(x, idx.n)
        self.x = x
        self.geo = Geometry(idx, x, stats)
        if self.geo.degenerate:
            raise DegenerateHyperplaneError("coincident sibling centroids")
        gy = params._goal_geometry
        dy, rr2, r_pair = params._tables
        alpha = params.alpha
        self.xy = x - params.goal.positions
        self.Cxy = self.geo.C - gy.C
        self.r_pair = r_pair

        k = idx.k
        # Set A: pairwise Lie terms split at each cluster, plus alignment terms.
        bad = np.zeros(k, dtype=bool)
        if len(idx.iu):
            dx = x[idx.iu] - x[idx.ju]
            cross = np.einsum("ij,ij->i", dx, dy) - rr2
            cross_min = np.minimum.reduceat(cross, idx.lca_start)
            bad[idx.lca_node] |= cross_min < EPS_GEOM
        if idx.npairs:
            pl, pn = idx.pair_label, idx.pair_node
            y = params.goal.positions
            align = (np.einsum("ij,ij->i", y[pl] - gy.m[pn], self.geo.e[pn])
                     + np.einsum("ij,ij->i", x[pl] - self.geo.m[pn], gy.e[pn]))
            align_bad = np.minimum.reduceat(align, idx.seg_start) < EPS_GEOM
            # A failing alignment at K poisons K's parent and every ancestor.
            bad[idx.parent[idx.seg_node[align_bad]]] = True
            hmin = np.full(k, np.inf)
            hmin[idx.seg_node] = np.minimum.reduceat(self.geo.s - r_pair, idx.seg_start)
        else:
            hmin = np.full(k, np.inf)
        cs = np.concatenate(([0], np.cumsum(bad)))
        self.A_ok = (cs[np.arange(1, k + 1)] - cs[idx.sub_start]) == 0
        H_ok = np.ones(k, dtype=bool)
        it = idx.interior
        H_ok[it] = np.minimum(hmin[idx.left[it]], hmin[idx.right[it]]) >= alpha + EPS_GEOM
        self.H_ok = H_ok

    # -- primitives on one cluster id ----------------------------------------
    def attract(self, i: int, u: np.ndarray) -> np.ndarray:
        u = u.copy()
        m = self.idx.members[i]
        u[m] = -self.xy[m]
        return u

    def _slice(self, i: int):
        a, b = self.idx.child_slice[i]
        return slice(a, b)

    def separate(self, i: int, u: np.ndarray) -> np.ndarray:
        idx = self.idx
        if idx.is_leaf[i]:
            return self.attract(i, u)
        sl = self._slice(i)
        beta = self.params.beta
        gain = float(np.max(np.maximum(-(self.geo.s[sl] - self.r_pair[sl] - beta), 0.0)))
        u = u.copy()
        L, R = idx.left[i], idx.right[i]
        size = idx.size
        base = -self.Cxy[i]
        u[idx.members[L]] = base + 2.0 * gain * size[R] / size[i] * self.geo.ehat[L]
        u[idx.members[R]] = base + 2.0 * gain * size[L] / size[i] * self.geo.ehat[R]
        return u

    def lie_separation(self, i: int, u: np.ndarray) -> np.ndarray:
        """L_u s for every pair in the children slice of interior cluster ``i``."""
        idx, geo = self.idx, self.geo
        sl = self._slice(i)
        L, R = idx.left[i], idx.right[i]
        uL = u[idx.members[L]].mean(axis=0)
        uR = u[idx.members[R]].mean(axis=0)
        mu = 0.5 * (uL + uR)
        sign = np.where(idx.pair_is_left[sl], 1.0, -1.0)
        eu = sign[:, None] * (uL - uR)
        pn = idx.pair_node[sl]
        pl = idx.pair_label[sl]
        ex = geo.e[pn]
        nx = geo.enorm[pn]
        s = geo.s[sl]
        num = (np.einsum("ij,ij->i", u[pl] - mu, ex)
               + np.einsum("ij,ij->i", self.x[pl] - geo.m[pn], eu))
        return num / nx - s * np.einsum("ij,ij->i", ex, eu) / nx ** 2

    def repulsion_gain(self, i: int, u: np.ndarray) -> float:
        if self.idx.is_leaf[i]:
            return 0.0
        sl = self._slice(i)
        alpha, beta = self.params.alpha, self.params.beta
        slack = self.geo.s[sl] - self.r_pair[sl] - alpha
        floor = np.exp(-(beta - alpha))
        phi = np.maximum((np.exp(-slack) - floor) / (1.0 - floor), 0.0)
        psi = np.maximum(-slack - self.lie_separation(i, u), 0.0)
        return float(np.max(phi * psi))

    def split(self, i: int, u: np.ndarray) -> np.ndarray:
        idx = self.idx
        if idx.is_leaf[i]:
            return u
        gain = self.repulsion_gain(i, u)
        if gain == 0.0:
            return u
        u = u.copy()
        L, R = idx.left[i], idx.right[i]
        size = idx.size
        u[idx.members[L]] += 2.0 * gain * size[R] / size[i] * self.geo.ehat[L]
        u[idx.members[R]] += 2.0 * gain * size[L] / size[i] * self.geo.ehat[R]
        return u

    def in_stratum(self) -> bool:
        return not self.idx.npairs or bool(self.geo.s.min() >= -EPS_GEOM)


def _cluster_id(params: FieldParams, c) -> int:
    c = frozenset(c)
    try:
        return params.index.id[c]
    except KeyError:
        raise KeyError(f"{sorted(c)} is not a cluster of {params.tree}") from None


def _zero(params: FieldParams, x) -> np.ndarray:
    return np.zeros_like(as_positions(x, params.n))


def _velocity(params: FieldParams, x, u) -> np.ndarray:
    if u is None:
        return _zero(params, x)
    return np.asarray(u, dtype=float).reshape(params.n, -1)


# -- the constituent fields --------------------------------------------------

def attracting_field(params: FieldParams, x, u, cluster) -> np.ndarray:
    """-(x_j - y_j) on the cluster, ``u`` elsewhere."""
    return _Eval(params, x).attract(_cluster_id(params, cluster), _velocity(params, x, u))


def in_set_A(params: FieldParams, x, cluster) -> bool:
    return bool(_Eval(params, x).A_ok[_cluster_id(params, cluster)])


def in_set_H(params: FieldParams, x, cluster) -> bool:
    return bool(_Eval(params, x).H_ok[_cluster_id(params, cluster)])


def lie_separation(params: FieldParams, x, u, label: int, cluster) -> float:
    """Directional derivative of s_{label,K} along ``u`` (K non-root)."""
    ev = _Eval(params, x)
    idx = ev.idx
    kid = _cluster_id(params, cluster)
    if kid == idx.root:
        raise ValueError("the root cluster has no separating hyperplane")
    p = int(idx.parent[kid])
    sl = ev._slice(p)
    where = np.flatnonzero((idx.pair_node[sl] == kid) & (idx.pair_label[sl] == label - 1))
    if len(where) != 1:
        raise ValueError(f"label {label} is not in {sorted(cluster)}")
    return float(ev.lie_separation(p, _velocity(params, x, u))[where[0]])


def repulsion_gain(params: FieldParams, x, u, cluster) -> float:
    """A_alpha: max over children pairs of phi * psi."""
    return _Eval(params, x).repulsion_gain(_cluster_id(params, cluster), _velocity(params, x, u))


def separation_gain(params: FieldParams, x, cluster) -> float:
    """B_beta: max over children pairs of max(-(s - r - beta), 0)."""
    ev = _Eval(params, x)
    i = _cluster_id(params, cluster)
    if ev.idx.is_leaf[i]:
        return 0.0
    sl = ev._slice(i)
    return float(np.max(np.maximum(-(ev.geo.s[sl] - ev.r_pair[sl] - params.beta), 0.0)))


def split_preserving_field(params: FieldParams, x, u, cluster) -> np.ndarray:
    return _Eval(params, x).split(_cluster_id(params, cluster), _velocity(params, x, u))


def separation_field(params: FieldParams, x, u, cluster) -> np.ndarray:
    return _Eval(params, x).separate(_cluster_id(params, cluster), _velocity(params, x, u))


# -- the recursive field --------------------------------------------------------

def _hier(ev: _Eval) -> np.ndarray:
    idx = ev.idx
    A_ok, H_ok = ev.A_ok.tolist(), ev.H_ok.tolist()
    left, right = idx.left.tolist(), idx.right.tolist()
    u = np.zeros_like(ev.x)
    recursing = []
    stack = [idx.root]
    while stack:
        i = stack.pop()
        if A_ok[i]:
            m = idx.members[i]
            u[m] = -ev.xy[m]
        elif not H_ok[i]:
            u = ev.separate(i, u)
        else:
            recursing.append(i)
            stack.append(right[i])
            stack.append(left[i])
    # Children before parents; siblings are independent so id order is post-order.
    for i in sorted(recursing):
        u = ev.split(i, u)
    return u


def hier_field_with_margin(params: FieldParams, x, stats: EvalStats | None = None
                           ) -> tuple[np.ndarray, float]:
    """f_{tau,y}(x) and the smallest separation of x in tau (compiled path)."""
    idx = params.index
    x = np.ascontiguousarray(as_positions(x, idx.n))
    u, smin = _kernels.hier_field_kernel(x, *params._kernel_args)
    if stats is not None:
        stats.separations += idx.npairs
    if smin == -np.inf:
        raise DegenerateHyperplaneError("coincident sibling centroids")
    return u, float(smin)


def hier_field(params: FieldParams, x, stats: EvalStats | None = None,
               check: bool = True) -> np.ndarray:
    """f_{tau,y}(x) as an (n, d) array of per-label velocities."""
    u, smin = hier_field_with_margin(params, x, stats)
    if check and params.index.npairs and smin < -EPS_GEOM:
        raise OutsideDomainError(f"configuration is outside the closed stratum of {params.tree}")
    return u


def hier_field_reference(params: FieldParams, x, stats: EvalStats | None = None) -> np.ndarray:
    """The same recursion evaluated cluster by cluster with numpy (slow, for checking)."""
    ev = _Eval(params, x, stats)
    if not ev.in_stratum():
        raise OutsideDomainError(f"configuration is outside the closed stratum of {params.tree}")
    return _hier(ev)


# -- substratum policies ----------------------------------------------------------

@dataclass(frozen=True)
class PolicyIndex:
    """A tree-compatible partition with a sign per block."""

    blocks: tuple
    signs: tuple = dc_field(default=None)

    def __post_init__(self):
        blocks = tuple(frozenset(b) for b in self.blocks)
        signs = (1,) * len(blocks) if self.signs is None else tuple(int(s) for s in self.signs)
        if len(signs) != len(blocks) or any(s not in (-1, 1) for s in signs):
            raise ValueError("need one sign in {-1, +1} per block")
        order = sorted(range(len(blocks)), key=lambda i: min(blocks[i]))
        object.__setattr__(self, "blocks", tuple(blocks[i] for i in order))
        object.__setattr__(self, "signs", tuple(signs[i] for i in order))

    def sign_of(self) -> dict:
        return dict(zip(self.blocks, self.signs))

    def check(self, tree: Tree) -> None:
        seen: set = set()
        for b in self.blocks:
            if b not in tree:
                raise ValueError(f"block {sorted(b)} is not a cluster of {tree}")
            if seen & b:
                raise ValueError("blocks overlap")
            seen |= b
        if seen != tree.leaves:
            raise ValueError("blocks do not cover the label set")


def priority(index: PolicyIndex) -> int:
    return sum(b * len(block) ** 2 for block, b in zip(index.blocks, index.signs))


def policy_select(params: FieldParams, x) -> PolicyIndex:
    ev = _Eval(params, x)
    idx = ev.idx
    blocks, signs = [], []
    stack = [idx.root]
    while stack:
        i = int(stack.pop())
        if ev.A_ok[i]:
            blocks.append(idx.nodes[i])
            signs.append(1)
        elif not ev.H_ok[i]:
            blocks.append(idx.nodes[i])
            signs.append(-1)
        else:
            stack.append(idx.right[i])
            stack.append(idx.left[i])
    return PolicyIndex(tuple(blocks), tuple(signs))


def policy_domain_contains(params: FieldParams, index: PolicyIndex, x) -> bool:
    """x in D(P, b): each block's base condition holds and all its ancestors are in H."""
    index.check(params.tree)
    ev = _Eval(params, x)
    if not ev.in_stratum():
        return False
    idx = ev.idx
    for block, b in zip(index.blocks, index.signs):
        i = idx.id[block]
        if b == 1 and not ev.A_ok[i]:
            return False
        p = idx.parent[i]
        while p >= 0:
            if not ev.H_ok[p]:
                return False
            p = idx.parent[p]
    return True


def substratum_policy(params: FieldParams, index: PolicyIndex, x, check: bool = True) -> np.ndarray:
    """h_{P,b}(x): attract (b=+1) or separate (b=-1) at blocks, split-preserve above them."""
    if check and not policy_domain_contains(params, index, x):
        raise OutsideDomainError("configuration is outside the policy domain")
    ev = _Eval(params, x)
    idx = ev.idx
    signs = {idx.id[b]: s for b, s in zip(index.blocks, index.signs)}

    def visit(i: int, u: np.ndarray) -> np.ndarray:
        if i in signs:
            return ev.attract(i, u) if signs[i] == 1 else ev.separate(i, u)
        u = visit(int(idx.left[i]), u)
        u = visit(int(idx.right[i]), u)
        return ev.split(i, u)

    return visit(idx.root, np.zeros_like(ev.x))


def compatible_partitions(tree: Tree, cluster=None) -> Iterable[tuple]:
    """Every partition of ``cluster`` (default: all labels) into clusters of ``tree``."""
    c = tree.leaves if cluster is None else frozenset(cluster)
    yield (c,)
    ch = tree.children(c)
    if ch:
        for left in compatible_partitions(tree, ch[0]):
            for right in compatible_partitions(tree, ch[1]):
                yield left + right
