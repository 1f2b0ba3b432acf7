"""Per-tree array tables and per-configuration cluster geometry.

Everything the field, portal and stratum predicates need is derived from
two objects: a ``TreeIndex`` (built once per tree and cached) and a
``Geometry`` (all cluster centroids, separation vectors and separations
for one configuration, computed in a handful of vectorized passes).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .hierarchy import Tree


@dataclass
class EvalStats:
    """Counts separation-function evaluations (one per (label, cluster) pair)."""

    separations: int = 0


class TreeIndex:
    """Array view of a tree. Node ids follow post-order, so the root is ``k - 1``."""

    def __init__(self, tree: Tree):
        self.tree = tree
        nodes = tree.postorder()
        self.nodes = nodes
        self.k = len(nodes)
        self.n = tree.n
        self.root = self.k - 1
        if sorted(tree.leaves) != list(range(1, self.n + 1)):
            raise ValueError("tree leaves must be the labels 1..n")
        self.id = {c: i for i, c in enumerate(nodes)}
        self.members = [np.array(sorted(j - 1 for j in c), dtype=np.intp) for c in nodes]
        self.size = np.array([len(c) for c in nodes], dtype=float)
        self.left = np.full(self.k, -1, dtype=np.intp)
        self.right = np.full(self.k, -1, dtype=np.intp)
        self.parent = np.full(self.k, -1, dtype=np.intp)
        for i, c in enumerate(nodes):
            ch = tree.children(c)
            if ch:
                a, b = self.id[ch[0]], self.id[ch[1]]
                self.left[i], self.right[i] = a, b
                self.parent[a] = self.parent[b] = i
        self.sibling = np.full(self.k, -1, dtype=np.intp)
        for i in range(self.k - 1):
            p = self.parent[i]
            self.sibling[i] = self.right[p] if self.left[p] == i else self.left[p]
        self.is_leaf = self.left < 0
        self.leaf_node = np.array([self.id[frozenset((j,))] for j in range(1, self.n + 1)],
                                  dtype=np.intp)

        # Averaging matrix: centroids of every cluster = W @ x.
        W = np.zeros((self.k, self.n))
        for i, m in enumerate(self.members):
            W[i, m] = 1.0 / len(m)
        self.W = W

        # (label, cluster) pairs for every non-root cluster, grouped so that the
        # pairs of both children of an interior node form one contiguous slice.
        pair_node, pair_label = [], []
        self.child_slice: dict[int, tuple[int, int]] = {}
        for i in range(self.k):
            if self.is_leaf[i]:
                continue
            start = len(pair_node)
            for ch in (self.left[i], self.right[i]):
                pair_node.extend([ch] * len(self.members[ch]))
                pair_label.extend(self.members[ch].tolist())
            self.child_slice[i] = (start, len(pair_node))
        self.pair_node = np.array(pair_node, dtype=np.intp)
        self.pair_label = np.array(pair_label, dtype=np.intp)
        self.npairs = len(pair_node)
        # One contiguous segment of pairs per non-root cluster.
        if self.npairs:
            starts = np.flatnonzero(np.r_[True, self.pair_node[1:] != self.pair_node[:-1]])
        else:
            starts = np.zeros(0, dtype=np.intp)
        self.seg_start = starts
        self.seg_node = self.pair_node[starts]
        self.pair_is_left = self.left[self.parent[self.pair_node]] == self.pair_node \
            if self.npairs else np.zeros(0, dtype=bool)

        # Label pairs (i < j) sorted by their lowest common ancestor, so that
        # reductions over "pairs split by cluster I" are one reduceat.
        lca = np.full((self.n, self.n), -1, dtype=np.intp)
        for i in range(self.k):
            if self.is_leaf[i]:
                continue
            a, b = self.members[self.left[i]], self.members[self.right[i]]
            lca[np.ix_(a, b)] = i
            lca[np.ix_(b, a)] = i
        iu, ju = np.triu_indices(self.n, k=1)
        pl = lca[iu, ju]
        order = np.argsort(pl, kind="stable")
        self.iu, self.ju, self.pair_lca = iu[order], ju[order], pl[order]
        if len(pl):
            self.lca_start = np.flatnonzero(np.r_[True, self.pair_lca[1:] != self.pair_lca[:-1]])
        else:
            self.lca_start = np.zeros(0, dtype=np.intp)
        self.lca_node = self.pair_lca[self.lca_start]

        self.interior = np.flatnonzero(~self.is_leaf)
        # Post-order subtrees are contiguous: subtree(i) = [sub_start[i], i].
        self.sub_start = np.arange(self.k) - 2 * self.size.astype(np.intp) + 2

        leaf_label = np.full(self.k, -1, dtype=np.intp)
        for j, i in enumerate(self.leaf_node):
            leaf_label[i] = j
        mem_ptr = np.zeros(self.k + 1, dtype=np.intp)
        mem_ptr[1:] = np.cumsum([len(m) for m in self.members])
        cs_start = np.full(self.k, -1, dtype=np.intp)
        cs_end = np.full(self.k, -1, dtype=np.intp)
        for i, (a, b) in self.child_slice.items():
            cs_start[i], cs_end[i] = a, b
        # Argument bundle for the compiled kernels.
        self.packed = dict(
            left=self.left, right=self.right, parent=self.parent, sibling=self.sibling,
            size=self.size, leaf_label=leaf_label, mem_ptr=mem_ptr,
            mem_idx=np.concatenate(self.members), pair_node=self.pair_node,
            pair_label=self.pair_label, cs_start=cs_start, cs_end=cs_end,
            iu=self.iu, ju=self.ju, pair_lca=self.pair_lca, sub_start=self.sub_start,
        )

        # Pre-order with lowest-label child first.
        order, stack = [], [self.root]
        while stack:
            i = stack.pop()
            order.append(i)
            if not self.is_leaf[i]:
                stack.append(self.right[i])
                stack.append(self.left[i])
        self.preorder = np.array(order, dtype=np.intp)


@lru_cache(maxsize=4096)
def tree_index(tree: Tree) -> TreeIndex:
    return TreeIndex(tree)


class Geometry:
    """Centroids, separation vectors and separations of ``x`` for every cluster."""

    __slots__ = ("idx", "x", "C", "e", "enorm", "ehat", "m", "s", "degenerate")

    def __init__(self, idx: TreeIndex, x: np.ndarray, stats: EvalStats | None = None):
        self.idx = idx
        self.x = x
        C = idx.W @ x
        self.C = C
        e = np.zeros_like(C)
        nr = idx.k - 1
        e[:nr] = C[:nr] - C[idx.sibling[:nr]]
        m = np.zeros_like(C)
        m[:nr] = 0.5 * (C[:nr] + C[idx.sibling[:nr]])
        enorm = np.sqrt(np.einsum("ij,ij->i", e, e))
        self.e, self.m, self.enorm = e, m, enorm
        self.degenerate = bool(np.any(enorm[:nr] == 0.0))
        with np.errstate(invalid="ignore", divide="ignore"):
            ehat = e / enorm[:, None]
        ehat[nr:] = 0.0
        self.ehat = ehat
        pn = idx.pair_node
        self.s = np.einsum("ij,ij->i", x[idx.pair_label] - m[pn], ehat[pn])
        if stats is not None:
            stats.separations += idx.npairs


def as_positions(x, n: int | None = None) -> np.ndarray:
    """Accept a Configuration or an array; return an (n, d) float array."""
    pos = getattr(x, "positions", x)
    pos = np.asarray(pos, dtype=float)
    if pos.ndim != 2 or (n is not None and pos.shape[0] != n):
        raise ValueError(f"expected positions of shape ({n}, d), got {pos.shape}")
    return pos
