"""Random configurations for property tests and experiments."""
from __future__ import annotations

import numpy as np

from .clustering import INTERIOR, hc_2means, stratum_contains
from .configuration import Configuration, validate
from .hierarchy import Tree


def random_directions(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_valid(rng: np.random.Generator, n: int, d: int, radius: float = 1.0,
                 density: float = 0.25, max_tries: int = 10_000) -> Configuration:
    """Disks placed one by one uniformly in a box, rejecting overlaps.

    ``density`` is roughly the fraction of the box volume covered by disks.
    """
    side = (n * (2.0 * radius) ** d / density) ** (1.0 / d)
    pts = []
    tries = 0
    while len(pts) < n:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("could not place disks; lower the density")
        p = rng.uniform(0.0, side, size=d)
        if all(np.linalg.norm(p - q) > 2.0 * radius for q in pts):
            pts.append(p)
    return Configuration(np.array(pts), np.full(n, radius))


def random_in_stratum(rng: np.random.Generator, n: int, d: int, radius: float = 1.0,
                      interior: bool = True, density: float = 0.25) -> tuple[Configuration, Tree]:
    """A random valid configuration together with its 2-means tree."""
    while True:
        x = random_valid(rng, n, d, radius, density)
        tree = hc_2means(x)
        if not interior or stratum_contains(x, tree, INTERIOR):
            return x, tree


def random_standard(rng: np.random.Generator, tree: Tree, d: int, radius: float = 1.0,
                    spread: tuple = (1.1, 2.5), extra: float = 0.5) -> Configuration:
    """A configuration built split by split so every split is narrow.

    Narrow splits keep every disk clear of its bisector, so the result is valid
    and lies in the interior of the stratum of ``tree``. ``spread[0]`` must be
    at least 1 for the splits to be narrow.
    """
    n = tree.n
    pos = np.zeros((n, d))

    def place(c):
        """Place cluster c centered at the origin; return its cluster radius."""
        idx = [j - 1 for j in sorted(c)]
        ch = tree.children(c)
        if not ch:
            pos[idx] = 0.0
            return radius
        a, b = ch
        ra, rb = place(a), place(b)
        gap = 2.0 * max(ra, rb) * rng.uniform(*spread) + extra
        u = random_directions(rng, d)
        ia = [j - 1 for j in sorted(a)]
        ib = [j - 1 for j in sorted(b)]
        pos[ia] += len(b) / len(c) * gap * u
        pos[ib] -= len(a) / len(c) * gap * u
        pts = pos[idx]
        return float(np.max(np.linalg.norm(pts - pts.mean(axis=0), axis=1)) + radius)

    place(tree.leaves)
    pos += rng.uniform(-5.0, 5.0, size=d)
    config = Configuration(pos, np.full(n, radius))
    if validate(config):
        raise ValueError("spread too small: the sampled configuration has collisions")
    return config
