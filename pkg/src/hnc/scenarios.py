"""Scenario records, their JSON form, and the benchmark layouts."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .clustering import CLOSED, stratum_contains
from .configuration import Configuration, DegenerateHyperplaneError, validate
from .hierarchy import Tree, TreeParseError, parse_newick, to_newick

DEFAULTS = dict(alpha=0.2, beta=1.0, dt=5e-3, t_max=500.0)


class ScenarioError(ValueError):
    """A scenario is malformed; the message names the offending field."""


@dataclass(frozen=True, eq=False)
class Scenario:
    initial: Configuration
    goal: Configuration
    goal_tree: Tree | None = None
    alpha: float = DEFAULTS["alpha"]
    beta: float = DEFAULTS["beta"]
    dt: float = DEFAULTS["dt"]
    t_max: float = DEFAULTS["t_max"]
    goal_tol: float | None = None
    perturb_seed: int | None = None
    name: str = ""

    def __post_init__(self):
        if self.initial.n != self.goal.n or self.initial.dim != self.goal.dim:
            raise ScenarioError("goal: shape differs from initial")
        if not np.array_equal(self.initial.radii, self.goal.radii):
            raise ScenarioError("radii: initial and goal radii differ")
        for name, cfg in (("initial", self.initial), ("goal", self.goal)):
            bad = validate(cfg)
            if bad:
                v = bad[0]
                raise ScenarioError(
                    f"{name}: disks {v.i} and {v.j} overlap (gap {v.gap:.6g})"
                    + (f" and {len(bad) - 1} more pairs" if len(bad) > 1 else ""))
        if not self.alpha > 0:
            raise ScenarioError("alpha: must be positive")
        if not self.beta > self.alpha:
            raise ScenarioError("beta: must exceed alpha")
        if not self.dt > 0:
            raise ScenarioError("dt: must be positive")
        if not self.t_max > 0:
            raise ScenarioError("t_max: must be positive")
        if self.goal_tol is not None and not self.goal_tol > 0:
            raise ScenarioError("goal_tol: must be positive")
        if self.goal_tree is not None:
            if self.goal_tree.leaves != self.goal.labels:
                raise ScenarioError("goal_tree: leaves must be the labels 1..n")
            try:
                ok = stratum_contains(self.goal, self.goal_tree, CLOSED)
            except DegenerateHyperplaneError:
                ok = False
            if not ok:
                raise ScenarioError("goal_tree: the goal configuration does not support this tree")

    @property
    def n(self) -> int:
        return self.initial.n

    def replace(self, **changes) -> "Scenario":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return Scenario(**fields)

    # -- JSON ----------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dimension": self.initial.dim,
            "radii": self.initial.radii.tolist(),
            "initial": self.initial.positions.tolist(),
            "goal": self.goal.positions.tolist(),
            "goal_tree": None if self.goal_tree is None else to_newick(self.goal_tree),
            "alpha": self.alpha,
            "beta": self.beta,
            "dt": self.dt,
            "t_max": self.t_max,
            "goal_tol": self.goal_tol,
            "perturb_seed": self.perturb_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        if not isinstance(data, dict):
            raise ScenarioError("scenario: expected a JSON object")
        known = {"name", "dimension", "radii", "initial", "goal", "goal_tree", "alpha", "beta",
                 "dt", "t_max", "goal_tol", "perturb_seed"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ScenarioError(f"{unknown[0]}: unknown field")
        for key in ("dimension", "radii", "initial", "goal"):
            if key not in data:
                raise ScenarioError(f"{key}: missing required field")
        d = data["dimension"]
        if not isinstance(d, int) or isinstance(d, bool) or d < 1:
            raise ScenarioError("dimension: must be a positive integer")
        initial = _matrix(data["initial"], "initial", d)
        goal = _matrix(data["goal"], "goal", d)
        radii = _vector(data["radii"], "radii")
        n = len(initial)
        if len(radii) != n:
            raise ScenarioError(f"radii: expected {n} values, got {len(radii)}")
        if len(goal) != n:
            raise ScenarioError(f"goal: expected {n} positions, got {len(goal)}")
        if np.any(radii < 0):
            raise ScenarioError("radii: must be non-negative")
        tree = data.get("goal_tree")
        if tree is not None:
            try:
                tree = parse_newick(str(tree))
            except TreeParseError as exc:
                raise ScenarioError(f"goal_tree: {exc}") from None
        kw: dict[str, Any] = {}
        for key in ("alpha", "beta", "dt", "t_max", "goal_tol"):
            if data.get(key) is not None:
                kw[key] = _number(data[key], key)
        seed = data.get("perturb_seed")
        if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
            raise ScenarioError("perturb_seed: must be an integer")
        return cls(Configuration(initial, radii), Configuration(goal, radii), tree,
                   perturb_seed=seed, name=str(data.get("name") or ""), **kw)

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ScenarioError(f"scenario: cannot read {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        return cls.from_dict(data)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def _number(v, name) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ScenarioError(f"{name}: must be a finite number")
    return float(v)


def _vector(v, name) -> np.ndarray:
    if not isinstance(v, list):
        raise ScenarioError(f"{name}: must be a list of numbers")
    return np.array([_number(a, name) for a in v], dtype=float)


def _matrix(v, name, d) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ScenarioError(f"{name}: must be a non-empty list of positions")
    rows = []
    for i, row in enumerate(v):
        if not isinstance(row, list) or len(row) != d:
            raise ScenarioError(f"{name}: position {i + 1} must have {d} coordinates")
        rows.append([_number(a, name) for a in row])
    return np.array(rows, dtype=float)


# -- benchmark layouts ---------------------------------------------------------------

#: Default start-position jitter of the mirror-symmetric layouts. An exactly
#: symmetric start stays on a symmetric invariant set of the field and never
#: reaches the goal; a tiny seeded offset puts it in generic position.
SYMMETRY_JITTER = 1e-3


def _scenario(name, start, goal, radius=1.0, jitter=0.0, seed=0, **kw) -> Scenario:
    start, goal = np.asarray(start, float), np.asarray(goal, float)
    if jitter:
        start = start + jitter * np.random.default_rng(seed).normal(size=start.shape)
    r = np.full(len(start), radius)
    return Scenario(Configuration(start, r), Configuration(goal, r), name=name, **kw)


def line_order(order, spacing: float = 3.0) -> np.ndarray:
    """Positions on the x-axis with ``order[k]`` at slot k."""
    pos = np.zeros((len(order), 2))
    for slot, label in enumerate(order):
        pos[label - 1, 0] = slot * spacing
    return pos


def four_disk_line(spacing: float = 3.0, **kw) -> Scenario:
    """Left-to-right order (1,2,3,4) at the start and (3,1,4,2) at the goal."""
    return _scenario("four_disk_line", line_order([1, 2, 3, 4], spacing),
                     line_order([3, 1, 4, 2], spacing), **kw)


def six_disk_row_swap(spacing: float = 3.0, jitter: float = SYMMETRY_JITTER, **kw) -> Scenario:
    """Six evenly spaced disks on a line reverse their order."""
    return _scenario("six_disk_row_swap", line_order(range(1, 7), spacing),
                     line_order(range(6, 0, -1), spacing), jitter=jitter, **kw)


def eight_disk_squares(inner_side: float = 4.0, jitter: float = SYMMETRY_JITTER, **kw) -> Scenario:
    """Two concentric squares (side ratio 2); inner and outer disks trade places
    with the diagonally opposite corner of the other square."""
    corners = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float)
    inner = 0.5 * inner_side * corners
    outer = inner_side * corners
    start = np.vstack([inner, outer])
    goal = np.vstack([np.roll(outer, -2, axis=0), np.roll(inner, -2, axis=0)])
    return _scenario("eight_disk_squares", start, goal, jitter=jitter, **kw)


def sixteen_disk_grid(spacing: float = 3.0, jitter: float = SYMMETRY_JITTER, **kw) -> Scenario:
    """A 4 by 4 grid whose disks move to the point-reflected grid slot."""
    ii, jj = np.meshgrid(np.arange(4), np.arange(4), indexing="ij")
    start = spacing * np.stack([ii.ravel(), jj.ravel()], axis=1).astype(float)
    goal = spacing * np.stack([3 - ii.ravel(), 3 - jj.ravel()], axis=1).astype(float)
    return _scenario("sixteen_disk_grid", start, goal, jitter=jitter, **kw)


def two_disk_swap(distance: float = 4.0, jitter: float = SYMMETRY_JITTER, **kw) -> Scenario:
    start = [[0.0, 0.0], [distance, 0.0]]
    return _scenario("two_disk_swap", start, start[::-1], jitter=jitter, **kw)


BENCHMARKS = {
    "four_disk_line": four_disk_line,
    "six_disk_row_swap": six_disk_row_swap,
    "eight_disk_squares": eight_disk_squares,
    "sixteen_disk_grid": sixteen_disk_grid,
    "two_disk_swap": two_disk_swap,
}

#: Number of local controllers reported for each benchmark in the literature.
REPORTED_DEPLOYED = {"four_disk_line": 4, "six_disk_row_swap": 6,
                     "eight_disk_squares": 9, "sixteen_disk_grid": 19}
