"""Rooted binary cluster hierarchies, NNI moves and reactive NNI navigation."""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Union

Node = Union[int, tuple]

EMPTY = frozenset()


class NotAClusterError(KeyError):
    pass


class TreeParseError(ValueError):
    pass


def _canon(node: Node) -> tuple[Node, frozenset, int]:
    """Canonical form: children ordered by smallest member label."""
    if isinstance(node, int):
        return node, frozenset((node,)), node
    if len(node) != 2:
        raise ValueError(f"interior nodes must have exactly two children, got {node!r}")
    a, la, ma = _canon(node[0])
    b, lb, mb = _canon(node[1])
    if la & lb:
        raise ValueError(f"repeated leaf labels {sorted(la & lb)}")
    if mb < ma:
        a, b, ma = b, a, mb
    return (a, b), la | lb, ma


class Tree:
    """A rooted non-degenerate tree over integer leaf labels.

    Two trees are equal iff their cluster sets are equal; the nested-tuple
    ``root`` is canonical, so comparing it is the same thing.
    """

    __slots__ = ("root", "leaves", "_children", "_parent", "_nodes", "_post", "_hash", "__dict__")

    def __init__(self, node: Node):
        root, leaves, _ = _canon(node)
        self.root = root
        self.leaves = leaves
        children: dict[frozenset, tuple] = {}
        parent: dict[frozenset, frozenset] = {}
        post: list[frozenset] = []
        nodes: dict[frozenset, Node] = {}

        def walk(nd) -> frozenset:
            if isinstance(nd, int):
                c = frozenset((nd,))
                children[c] = ()
            else:
                left, right = walk(nd[0]), walk(nd[1])
                c = left | right
                children[c] = (left, right)
                parent[left] = c
                parent[right] = c
            nodes[c] = nd
            post.append(c)
            return c

        walk(root)
        self._children = children
        self._parent = parent
        self._nodes = nodes
        self._post = tuple(post)
        self._hash = hash(root)

    # -- construction -----------------------------------------------------
    @classmethod
    def from_newick(cls, text: str) -> "Tree":
        return parse_newick(text)

    @classmethod
    def from_clusters(cls, clusters: Iterable[frozenset]) -> "Tree":
        """Rebuild a tree from its (complete) cluster set."""
        cs = sorted({frozenset(c) for c in clusters}, key=len, reverse=True)
        if not cs:
            raise ValueError("empty cluster set")

        def build(c: frozenset) -> Node:
            if len(c) == 1:
                return next(iter(c))
            subs = [d for d in cs if d < c]
            maximal = [d for d in subs if not any(d < e for e in subs)]
            if len(maximal) != 2 or maximal[0] | maximal[1] != c:
                raise ValueError(f"cluster {sorted(c)} is not split in two by the cluster set")
            return (build(maximal[0]), build(maximal[1]))

        return cls(build(cs[0]))

    # -- relations ----------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.leaves)

    @cached_property
    def clusters(self) -> frozenset:
        return frozenset(self._children)

    def postorder(self) -> tuple:
        """Clusters in post-order with the lowest-label child first."""
        return self._post

    def __contains__(self, c) -> bool:
        return frozenset(c) in self._children

    def _check(self, c) -> frozenset:
        c = frozenset(c)
        if c not in self._children:
            raise NotAClusterError(f"{sorted(c)} is not a cluster of {self}")
        return c

    def children(self, c) -> tuple:
        """``(left, right)`` with the left child holding the smaller label; ``()`` for leaves."""
        return self._children[self._check(c)]

    def parent(self, c) -> frozenset:
        c = self._check(c)
        if c == self.leaves:
            raise ValueError("the root cluster has no parent")
        return self._parent[c]

    def sibling(self, c) -> frozenset:
        """Local complement: parent(c) minus c."""
        c = self._check(c)
        if c == self.leaves:
            raise ValueError("the root cluster has no sibling")
        return self._parent[c] - c

    def ancestors(self, c) -> list:
        """Proper ancestors, nearest first."""
        c = self._check(c)
        out = []
        while c in self._parent:
            c = self._parent[c]
            out.append(c)
        return out

    def descendants(self, c) -> set:
        c = self._check(c)
        out: set = set()
        stack = list(self._children[c])
        while stack:
            d = stack.pop()
            out.add(d)
            stack.extend(self._children[d])
        return out

    def relations(self, c) -> dict:
        c = self._check(c)
        root = c == self.leaves
        return {
            "parent": None if root else self._parent[c],
            "children": self._children[c],
            "ancestors": self.ancestors(c),
            "descendants": self.descendants(c),
            "local_complement": None if root else self._parent[c] - c,
        }

    def interior(self) -> list:
        return [c for c in self._post if len(c) > 1]

    # -- dunder -------------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return self.root == other.root

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Tree({to_newick(self)!r})"

    def __str__(self):
        return to_newick(self)


# -- Newick ---------------------------------------------------------------

_TOKEN = re.compile(r"\s*(\d+|[(),;])")


def parse_newick(text: str) -> Tree:
    """Parse ``tree := node ";"``, ``node := int | "(" node "," node ")"``."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise TreeParseError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    k = 0

    def peek():
        return tokens[k] if k < len(tokens) else None

    def take(expected=None):
        nonlocal k
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise TreeParseError(f"expected {expected or 'token'} at token {k}, got {tok!r}")
        k += 1
        return tok

    def node():
        tok = peek()
        if tok == "(":
            take("(")
            a = node()
            take(",")
            b = node()
            take(")")
            return (a, b)
        if tok is not None and tok.isdigit():
            if int(tok) < 1:
                raise TreeParseError(f"labels start at 1, got {tok}")
            return int(take())
        raise TreeParseError(f"expected leaf or '(' at token {k}, got {tok!r}")

    root = node()
    take(";")
    if k != len(tokens):
        raise TreeParseError("trailing input after ';'")
    try:
        return Tree(root)
    except ValueError as exc:
        raise TreeParseError(str(exc)) from exc


def to_newick(tree: Tree) -> str:
    def fmt(nd):
        if isinstance(nd, int):
            return str(nd)
        return f"({fmt(nd[0])},{fmt(nd[1])})"

    return fmt(tree.root) + ";"


# -- enumeration and counting --------------------------------------------

def count_trees(n: int) -> int:
    """Number of rooted binary trees on n labeled leaves, (2n - 3)!!."""
    if n < 2:
        raise ValueError("count_trees needs n >= 2")
    out = 1
    for k in range(2 * n - 3, 1, -2):
        out *= k
    return out


def enumerate_trees(labels: Iterable[int]) -> Iterator[Tree]:
    """Every rooted binary tree over ``labels`` (by leaf insertion)."""
    labels = sorted(labels)
    if len(labels) < 2:
        raise ValueError("need at least two labels")

    def insert(node, leaf):
        yield (node, leaf)
        if not isinstance(node, int):
            for sub in insert(node[0], leaf):
                yield (sub, node[1])
            for sub in insert(node[1], leaf):
                yield (node[0], sub)

    def grow(node, rest):
        if not rest:
            yield Tree(node)
            return
        for bigger in insert(node, rest[0]):
            yield from grow(bigger, rest[1:])

    yield from grow((labels[0], labels[1]), labels[2:])


# -- NNI --------------------------------------------------------------------

def nni_move(tree: Tree, g) -> Tree:
    """Swap cluster ``g`` with its parent's sibling; the empty cluster is the identity move."""
    g = frozenset(g)
    if not g:
        return tree
    tree._check(g)
    ancestors = tree.ancestors(g)
    if len(ancestors) < 2:
        raise ValueError(f"cluster {sorted(g)} has no grandparent")
    p, gp = ancestors[0], ancestors[1]
    nodes = tree._nodes
    swapped = (nodes[g], (nodes[p - g], nodes[gp - p]))
    path = set(ancestors[1:])

    def rebuild(c):
        if c == gp:
            return swapped
        left, right = tree._children[c]
        return (rebuild(left) if left in path else nodes[left],
                rebuild(right) if right in path else nodes[right])

    return Tree(rebuild(tree.leaves))


def nni_neighbors(tree: Tree) -> list:
    """All trees one NNI move away (two per interior non-root edge)."""
    out = []
    for g in tree.postorder():
        if len(tree.ancestors(g)) >= 2:
            out.append(nni_move(tree, g))
    return out


@dataclass(frozen=True)
class NniTriplet:
    a: frozenset
    b: frozenset
    c: frozenset

    @property
    def p(self) -> frozenset:
        return self.a | self.b | self.c


def nni_adjacent(sigma: Tree, tau: Tree) -> bool:
    if sigma.leaves != tau.leaves or sigma == tau:
        return False
    if len(sigma.clusters - tau.clusters) != 1:
        return False
    return tau in nni_neighbors(sigma)


def nni_triplet(sigma: Tree, tau: Tree) -> NniTriplet:
    """(A, B, C) with A|B the cluster only sigma has and B|C the one only tau has."""
    if not nni_adjacent(sigma, tau):
        raise ValueError(f"{sigma} and {tau} are not NNI-adjacent")
    (ab,) = sigma.clusters - tau.clusters
    (bc,) = tau.clusters - sigma.clusters
    b = ab & bc
    return NniTriplet(ab - b, b, bc - b)


def nni_control(sigma: Tree, tau: Tree) -> frozenset:
    """Grandchild cluster G of sigma whose NNI move steps toward tau (empty iff equal)."""
    if sigma.leaves != tau.leaves:
        raise ValueError("trees are over different leaf sets")
    if sigma == tau:
        return EMPTY
    cands = [k for k in sigma.clusters & tau.clusters
             if len(k) > 1 and set(sigma.children(k)) != set(tau.children(k))]
    k = min(cands, key=lambda c: (len(c), min(c)))
    k_left, k_right = tau.children(k)
    best = None
    for i in sigma.postorder():
        if len(i) < 2 or not i <= k:
            continue
        a, b = sigma.children(i)
        if a <= k_left and b <= k_right:
            found = (i, a, b)
        elif b <= k_left and a <= k_right:
            found = (i, b, a)
        else:
            continue
        if best is None or (len(i), min(i)) < (len(best[0]), min(best[0])):
            best = found
    i, i_left, i_right = best
    sib = sigma.sibling(i)
    if sib <= k_left:
        return i_right
    if sib <= k_right:
        return i_left
    return i_left


def nni_step(sigma: Tree, tau: Tree) -> Tree:
    return nni_move(sigma, nni_control(sigma, tau))


def nni_path_bound(n: int) -> int:
    return (n - 1) * (n - 2) // 2


def nni_navigate(sigma: Tree, tau: Tree) -> list:
    """Trees visited by the closed-loop NNI law from sigma until it reaches tau."""
    bound = nni_path_bound(sigma.n) if sigma.n >= 2 else 0
    path = [sigma]
    while path[-1] != tau:
        if len(path) - 1 >= bound:
            raise RuntimeError(
                f"NNI navigation from {sigma} to {tau} exceeded {bound} steps")
        path.append(nni_step(path[-1], tau))
    return path
