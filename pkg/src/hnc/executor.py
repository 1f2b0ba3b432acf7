"""The hybrid navigation loop: integrate a stratum field, hop trees through portals.

In GOAL mode the active field is f_{goal tree, y}. In TRANSIT mode the
executor holds a current tree sigma and the NNI-adjacent tree sigma' chosen
by ``nni_control``; it integrates f_{sigma, x'} where x' is the portal image
of the configuration at the moment sigma' was proposed, and switches as soon
as x enters the interior of the goal stratum or of sigma'.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from ._index import EvalStats
from .clustering import CLOSED, hc_2means, stratum_contains, stratum_margin
from .configuration import EPS_GEOM, Configuration, min_clearance
from .field import FieldParams
from .hierarchy import Tree, nni_path_bound, nni_step, to_newick
from .portal import PortalContext, portal_map
from .scenarios import Scenario

GOAL_TOL_FRACTION = 1e-3
STALL_SPEED = 1e-9
STALL_STEPS = 1000
KICK_SIZE = 1e-6


class Mode(str, Enum):
    GOAL_STRATUM = "goal_stratum"
    TRANSIT = "transit"


class IntegrationError(RuntimeError):
    """A step left the closed stratum of the active tree or brought two disks into contact."""


@dataclass
class HybridState:
    t: float
    x: np.ndarray
    sigma: Tree
    local_goal: np.ndarray
    mode: Mode
    params: FieldParams
    # Proposed next tree in TRANSIT mode.
    target: Tree | None = None

    @property
    def radii(self) -> np.ndarray:
        return self.params.goal.radii


@dataclass(frozen=True)
class TraceEvent:
    t: float
    kind: str
    from_tree: Tree | None = None
    to_tree: Tree | None = None
    local_goal: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "kind": self.kind,
            "from_tree": None if self.from_tree is None else to_newick(self.from_tree),
            "to_tree": None if self.to_tree is None else to_newick(self.to_tree),
            "local_goal": None if self.local_goal is None else self.local_goal.tolist(),
        }


@dataclass
class RunStats:
    deployed_trees: int = 0
    transitions: int = 0
    min_clearance: float = float("inf")
    final_error: float = float("nan")
    steps: int = 0
    wall_ms: float = 0.0

    def to_dict(self) -> dict:
        return dict(deployed_trees=self.deployed_trees, transitions=self.transitions,
                    min_clearance=self.min_clearance, final_error=self.final_error,
                    steps=self.steps, wall_ms=self.wall_ms)


@dataclass
class RunResult:
    status: str  # goal_reached, stall or timeout
    times: np.ndarray
    trajectory: np.ndarray  # (emitted steps, n, d)
    events: list[TraceEvent]
    stats: RunStats
    deployed: list[Tree] = field(default_factory=list)

    @property
    def reached(self) -> bool:
        return self.status == "goal_reached"


def _rk4(params: FieldParams, x: np.ndarray, dt: float, stats: EvalStats | None):
    if stats is not None:
        stats.separations += 4 * params.index.npairs
    # Intermediate stages may graze the stratum boundary; only the step result is checked.
    f, args = _kernels.hier_field_kernel, params._kernel_args
    k1 = f(x, *args)[0]
    k2 = f(x + 0.5 * dt * k1, *args)[0]
    k3 = f(x + 0.5 * dt * k2, *args)[0]
    k4 = f(x + dt * k3, *args)[0]
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), k1


def step(state: HybridState, dt: float, stats: EvalStats | None = None) -> HybridState:
    """One RK4 step of the active field, then the closed-stratum and clearance checks."""
    x_new, _ = _rk4(state.params, state.x, dt, stats)
    _check_step(state, x_new)
    return HybridState(state.t + dt, x_new, state.sigma, state.local_goal, state.mode,
                       state.params, state.target)


def _check_step(state: HybridState, x_new: np.ndarray) -> float:
    margin = stratum_margin(x_new, state.sigma)
    if state.sigma.n > 1 and margin < -EPS_GEOM:
        raise IntegrationError(
            f"t={state.t:.6g}: left the closed stratum of {state.sigma} (margin {margin:.3g}); "
            "reduce dt")
    gap = float(_kernels.min_clearance(x_new, state.radii))
    if gap <= -EPS_GEOM:
        raise IntegrationError(f"t={state.t:.6g}: disks overlap (clearance {gap:.3g}); reduce dt")
    return gap


def _interior(x, tree: Tree) -> bool:
    # Same test as stratum_contains(..., INTERIOR), through the compiled margin.
    return stratum_margin(x, tree) > EPS_GEOM


def diameter(positions: np.ndarray) -> float:
    diff = positions[:, None, :] - positions[None, :, :]
    return float(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff).max()))


class _Run:
    """Mutable bookkeeping of one run_hnc call."""

    def __init__(self, sc: Scenario, record: bool, stride: int):
        self.sc = sc
        self.y = sc.goal.positions
        self.radii = sc.goal.radii
        self.goal_tree = sc.goal_tree if sc.goal_tree is not None else hc_2means(sc.goal)
        self.goal_params = FieldParams(sc.goal, self.goal_tree, sc.alpha, sc.beta)
        self.scale = max(diameter(sc.initial.positions), diameter(self.y), 1e-12)
        self.goal_tol = sc.goal_tol if sc.goal_tol is not None else GOAL_TOL_FRACTION * diameter(self.y)
        self.events: list[TraceEvent] = []
        self.deployed: list[Tree] = []
        self.stats = RunStats()
        self.record, self.stride = record, stride
        self.times: list[float] = []
        self.traj: list[np.ndarray] = []

    def event(self, t, kind, a=None, b=None, goal=None):
        self.events.append(TraceEvent(t, kind, a, b, None if goal is None else goal.copy()))

    def deploy(self, tree: Tree):
        if tree not in self.deployed:
            self.deployed.append(tree)

    def goal_state(self, t, x, sigma) -> HybridState:
        if sigma != self.goal_tree:
            self.stats.transitions += 1
            self.event(t, "tree_transition", sigma, self.goal_tree, self.y)
        self.event(t, "entered_goal_stratum", self.goal_tree, self.goal_tree, self.y)
        self.deploy(self.goal_tree)
        return HybridState(t, x, self.goal_tree, self.y, Mode.GOAL_STRATUM, self.goal_params)

    def transit_state(self, t, x, sigma) -> HybridState:
        target = nni_step(sigma, self.goal_tree)
        ctx = PortalContext(sigma, target, self.sc.alpha)
        xp = portal_map(Configuration(x, self.radii), ctx).positions
        params = FieldParams(Configuration(xp, self.radii), sigma, self.sc.alpha, self.sc.beta)
        self.deploy(sigma)
        return HybridState(t, x, sigma, xp, Mode.TRANSIT, params, target)

    def in_goal_interior(self, x) -> bool:
        return _interior(x, self.goal_tree)

    def emit(self, t, x):
        self.times.append(t)
        self.traj.append(x.copy())


def run_hnc(scenario: Scenario, dt: float | None = None, record: bool = True,
            stride: int = 1, stats_out: EvalStats | None = None,
            stall_speed: float = STALL_SPEED, stall_steps: int = STALL_STEPS) -> RunResult:
    """Run the hybrid loop from ``scenario.initial`` until the goal, a stall, or t_max.

    A stall is ``stall_steps`` consecutive steps with ||f|| below
    ``stall_speed`` times the scenario scale. With ``scenario.perturb_seed``
    set, the first stall gets one random kick instead of ending the run.
    """
    wall0 = time.perf_counter()
    sc = scenario
    dt = sc.dt if dt is None else dt
    run = _Run(sc, record, max(1, int(stride)))
    x = sc.initial.positions.copy()
    t = 0.0
    sigma0 = hc_2means(sc.initial)
    run.event(t, "start", None, sigma0, None)
    if sigma0 == run.goal_tree or run.in_goal_interior(x):
        state = run.goal_state(t, x, sigma0)
    else:
        state = run.transit_state(t, x, sigma0)
    # The start event carries the first local goal, known only now.
    run.events[0] = TraceEvent(t, "start", None, sigma0, state.local_goal.copy())

    run.stats.min_clearance = min_clearance(x, run.radii)
    if record:
        run.emit(t, x)
    rng = np.random.default_rng(sc.perturb_seed) if sc.perturb_seed is not None else None
    kicked = False
    slow = 0
    status = None
    nsteps = 0
    while True:
        # Guards, polled before every step.
        if state.mode is Mode.TRANSIT:
            if run.in_goal_interior(state.x):
                state = run.goal_state(state.t, state.x, state.sigma)
                slow = 0
                continue
            if _interior(state.x, state.target):
                # Transition events carry the local goal that becomes active.
                run.stats.transitions += 1
                if state.target == run.goal_tree:
                    run.event(state.t, "tree_transition", state.sigma, state.target, run.y)
                    state = run.goal_state(state.t, state.x, state.target)
                else:
                    nxt = run.transit_state(state.t, state.x, state.target)
                    run.event(state.t, "tree_transition", state.sigma, state.target, nxt.local_goal)
                    state = nxt
                slow = 0
                continue
        elif np.linalg.norm(state.x - run.y) <= run.goal_tol:
            status = "goal_reached"
            run.event(state.t, "goal_reached", state.sigma, state.sigma, run.y)
            break
        if state.t > sc.t_max:
            status = "timeout"
            break

        x_new, k1 = _rk4(state.params, state.x, dt, stats_out)
        gap = _check_step(state, x_new)
        nsteps += 1
        state = HybridState(nsteps * dt, x_new, state.sigma, state.local_goal, state.mode,
                            state.params, state.target)
        run.stats.min_clearance = min(run.stats.min_clearance, gap)
        if record and nsteps % run.stride == 0:
            run.emit(state.t, state.x)

        if np.linalg.norm(k1) < stall_speed * run.scale:
            slow += 1
        else:
            slow = 0
        if slow >= stall_steps:
            if rng is not None and not kicked:
                kicked = True
                slow = 0
                kick = rng.normal(size=state.x.shape)
                kick *= KICK_SIZE * run.scale / np.linalg.norm(kick)
                if stratum_contains(state.x + kick, state.sigma, CLOSED):
                    state.x = state.x + kick
                continue
            status = "stall"
            run.event(state.t, "stall", state.sigma, state.target, state.local_goal)
            break

    if record and (not run.times or run.times[-1] != state.t):
        run.emit(state.t, state.x)
    st = run.stats
    st.deployed_trees = len(run.deployed)
    st.final_error = float(np.linalg.norm(state.x - run.y))
    st.steps = nsteps
    st.wall_ms = 1e3 * (time.perf_counter() - wall0)
    n, d = sc.initial.positions.shape
    traj = np.array(run.traj) if run.traj else np.zeros((0, n, d))
    return RunResult(status, np.array(run.times), traj, run.events, st, run.deployed)


def transition_budget(n: int) -> int:
    """Most tree transitions a run can make: the NNI path bound plus the final hop."""
    return (nni_path_bound(n) if n >= 2 else 0) + 1
