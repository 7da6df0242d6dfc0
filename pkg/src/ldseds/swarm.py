"""PSO and CLPSO engines driven by an :class:`~ldseds.stream.EpsilonStream`.

Every uniform vector entering the velocity update or the initialization comes
from the stream. CLPSO's exemplar bookkeeping (tournaments, the learn/self
coin flips, forced dimensions) uses a separate generator seeded by
``aux_seed``.

Objectives are callables mapping an ``(n, D)`` array of positions to ``n``
fitness values.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ldseds.errors import InvalidArgument, NonFiniteFitness, ObjectiveError
from ldseds.stream import BlockRole, EpsilonStream, Mode, stream_block


@dataclass(frozen=True)
class SearchSpace:
    lower: np.ndarray
    upper: np.ndarray
    velocity_min: np.ndarray
    velocity_max: np.ndarray

    def __post_init__(self):
        for name in ("lower", "upper", "velocity_min", "velocity_max"):
            arr = np.array(getattr(self, name), dtype=float, ndmin=1)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not np.all(self.lower < self.upper):
            raise InvalidArgument("search space needs lower < upper in every coordinate")
        if not np.all(self.velocity_max > 0):
            raise InvalidArgument("velocity_max must be positive")
        if not np.all(self.velocity_min < self.velocity_max):
            raise InvalidArgument("velocity_min must be below velocity_max")

    @classmethod
    def box(cls, lower, upper, dim: int | None = None, vmax_fraction: float = 0.2):
        """Box bounds with symmetric velocity limits ``+-vmax_fraction * (b - a)``."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if dim is not None:
            lower = np.broadcast_to(lower, (dim,))
            upper = np.broadcast_to(upper, (dim,))
        vmax = vmax_fraction * (upper - lower)
        return cls(lower, upper, -vmax, vmax)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def linear_schedule(start: float, end: float, g: int, horizon: int) -> float:
    """``start + (end - start) * g / (G - 1)``, clamped to the segment."""
    if horizon <= 1:
        return float(start)
    t = min(max(g / (horizon - 1), 0.0), 1.0)
    return start + (end - start) * t


@dataclass(frozen=True)
class PsoSchedule:
    horizon: int
    omega: tuple = (0.9, 0.4)
    c1: tuple = (2.5, 0.5)
    c2: tuple = (0.5, 2.5)

    def at(self, g: int):
        G = self.horizon
        return (linear_schedule(*self.omega, g, G),
                linear_schedule(*self.c1, g, G),
                linear_schedule(*self.c2, g, G))


@dataclass(frozen=True)
class ClpsoSchedule:
    horizon: int
    omega: tuple = (0.9, 0.2)
    c: float = 1.49445
    refresh_gap: int = 7

    def __post_init__(self):
        if self.c <= 0:
            raise InvalidArgument("acceleration coefficient must be positive")
        if self.refresh_gap < 1:
            raise InvalidArgument("refresh_gap must be >= 1")

    def at(self, g: int):
        return linear_schedule(*self.omega, g, self.horizon), self.c


@dataclass
class SwarmState:
    positions: np.ndarray
    velocities: np.ndarray
    pbest_pos: np.ndarray
    pbest_fit: np.ndarray
    gbest_pos: np.ndarray
    gbest_fit: float
    iteration: int = 0
    evaluations: int = 0
    # CLPSO only
    exemplars: np.ndarray | None = None
    stagnation: np.ndarray | None = None
    pc: np.ndarray | None = None

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return self.positions.shape[1]


def evaluate(objective, positions: np.ndarray, iteration: int = 0, rows=None) -> np.ndarray:
    """Evaluate a batch, attaching the offending particle to any failure."""
    rows = np.arange(len(positions)) if rows is None else np.asarray(rows)
    try:
        fit = np.asarray(objective(positions), dtype=float).reshape(-1)
    except Exception as exc:
        for k, row in enumerate(rows):
            try:
                objective(positions[k : k + 1])
            except Exception as inner:
                raise ObjectiveError(
                    f"objective failed for particle {row} at iteration {iteration}: {inner}",
                    particle=int(row), iteration=iteration, position=positions[k].copy(),
                ) from inner
        raise ObjectiveError(f"objective failed at iteration {iteration}: {exc}", iteration=iteration) from exc
    if fit.shape != (len(positions),):
        raise ObjectiveError(f"objective returned shape {fit.shape} for {len(positions)} positions")
    bad = np.flatnonzero(~np.isfinite(fit))
    if bad.size:
        k = int(bad[0])
        raise NonFiniteFitness(
            f"non-finite fitness {fit[k]} at iteration {iteration}, particle {rows[k]}, "
            f"position {positions[k].tolist()}",
            particle=int(rows[k]), iteration=iteration, position=positions[k].copy(),
        )
    return fit


def init_swarm(eps_pos, eps_vel, space: SearchSpace, objective) -> SwarmState:
    a, b = space.lower, space.upper
    x = a + eps_pos * (b - a)
    v = space.velocity_min + eps_vel * (space.velocity_max - space.velocity_min)
    fit = evaluate(objective, x, iteration=0)
    best = int(np.argmin(fit))
    return SwarmState(
        positions=x, velocities=v, pbest_pos=x.copy(), pbest_fit=fit.copy(),
        gbest_pos=x[best].copy(), gbest_fit=float(fit[best]), iteration=0, evaluations=len(x),
    )


def _update_bests(state: SwarmState, fit: np.ndarray, rows: np.ndarray):
    """Synchronous personal/global best update; strict improvement only."""
    pbest_pos = state.pbest_pos.copy()
    pbest_fit = state.pbest_fit.copy()
    improved = np.zeros(state.n, dtype=bool)
    better = fit < pbest_fit[rows]
    improved[rows[better]] = True
    pbest_fit[rows[better]] = fit[better]
    pbest_pos[rows[better]] = state.positions[rows[better]]
    gbest_pos, gbest_fit = state.gbest_pos, state.gbest_fit
    best = int(np.argmin(pbest_fit))
    if pbest_fit[best] < gbest_fit:
        gbest_pos, gbest_fit = pbest_pos[best].copy(), float(pbest_fit[best])
    return pbest_pos, pbest_fit, gbest_pos, gbest_fit, improved


def pso_step(state: SwarmState, omega: float, c1: float, c2: float, eps_cognitive, eps_social,
             space: SearchSpace, objective) -> SwarmState:
    x = state.positions
    v = (omega * state.velocities
         + c1 * eps_cognitive * (state.pbest_pos - x)
         + c2 * eps_social * (state.gbest_pos[None, :] - x))
    v = np.clip(v, space.velocity_min, space.velocity_max)
    x = np.clip(x + v, space.lower, space.upper)
    g = state.iteration + 1
    fit = evaluate(objective, x, iteration=g)
    moved = dataclasses.replace(state, positions=x, velocities=v)
    pbest_pos, pbest_fit, gbest_pos, gbest_fit, _ = _update_bests(moved, fit, np.arange(len(x)))
    return dataclasses.replace(
        moved, pbest_pos=pbest_pos, pbest_fit=pbest_fit, gbest_pos=gbest_pos, gbest_fit=gbest_fit,
        iteration=g, evaluations=state.evaluations + len(x),
    )


# ---------------------------------------------------------------------------
# CLPSO


def clpso_pc(i: int, n: int) -> float:
    """Learning probability of particle ``i`` (1-based) in a swarm of ``n``."""
    if n < 2:
        raise InvalidArgument("learning probabilities need at least two particles")
    return 0.05 + 0.45 * (math.exp(10.0 * (i - 1) / (n - 1)) - 1.0) / (math.exp(10.0) - 1.0)


def _tournament(pbest_fit: np.ndarray, i: int, rng: np.random.Generator) -> int:
    others = np.delete(np.arange(len(pbest_fit)), i)
    p, q = rng.choice(others, size=2, replace=False)
    return int(q) if pbest_fit[q] < pbest_fit[p] else int(p)


def assign_exemplars(pbest_fit, i: int, pc_i: float, rng: np.random.Generator, dim: int) -> np.ndarray:
    """Per-dimension exemplar indices for particle ``i`` (0-based).

    Each dimension learns from a tournament winner with probability ``pc_i``
    and from the particle itself otherwise. If no dimension learned from
    another particle, one random dimension is forced to.
    """
    pbest_fit = np.asarray(pbest_fit)
    if len(pbest_fit) < 3:
        raise InvalidArgument("exemplar tournaments need at least 3 particles")
    ex = np.full(dim, i, dtype=np.int64)
    for d in range(dim):
        if rng.random() < pc_i:
            ex[d] = _tournament(pbest_fit, i, rng)
    if np.all(ex == i):
        d = int(rng.integers(dim))
        ex[d] = _tournament(pbest_fit, i, rng)
    return ex


def clpso_prepare(state: SwarmState, rng: np.random.Generator) -> SwarmState:
    n, dim = state.n, state.dim
    pc = np.array([clpso_pc(i + 1, n) for i in range(n)])
    ex = np.stack([assign_exemplars(state.pbest_fit, i, pc[i], rng, dim) for i in range(n)])
    return dataclasses.replace(state, exemplars=ex, stagnation=np.zeros(n, dtype=np.int64), pc=pc)


def clpso_step(state: SwarmState, omega: float, c: float, eps_learning, space: SearchSpace, objective,
               rng: np.random.Generator, refresh_gap: int = 7) -> SwarmState:
    if state.exemplars is None:
        raise InvalidArgument("exemplars not assigned; call clpso_prepare first")
    x = state.positions
    cols = np.arange(state.dim)[None, :]
    guide = state.pbest_pos[state.exemplars, cols]
    v = omega * state.velocities + c * eps_learning * (guide - x)
    v = np.clip(v, space.velocity_min, space.velocity_max)
    x = x + v
    g = state.iteration + 1
    inside = np.all((x >= space.lower) & (x <= space.upper), axis=1)
    rows = np.flatnonzero(inside)
    fit = evaluate(objective, x[rows], iteration=g, rows=rows) if rows.size else np.empty(0)
    moved = dataclasses.replace(state, positions=x, velocities=v)
    pbest_pos, pbest_fit, gbest_pos, gbest_fit, improved = _update_bests(moved, fit, rows)
    stagnation = np.where(improved, 0, state.stagnation + 1)
    exemplars = state.exemplars.copy()
    for i in np.flatnonzero(stagnation >= refresh_gap):
        exemplars[i] = assign_exemplars(pbest_fit, int(i), state.pc[i], rng, state.dim)
        stagnation[i] = 0
    return dataclasses.replace(
        moved, pbest_pos=pbest_pos, pbest_fit=pbest_fit, gbest_pos=gbest_pos, gbest_fit=gbest_fit,
        iteration=g, evaluations=state.evaluations + rows.size, exemplars=exemplars, stagnation=stagnation,
    )


# ---------------------------------------------------------------------------
# driver


@dataclass
class RunRecord:
    curve: np.ndarray
    evaluations: int
    wall_time: float
    engine: str
    provenance: dict = field(default_factory=dict)
    final_state: SwarmState | None = field(default=None, repr=False)

    @property
    def best_fitness(self) -> float:
        return float(self.curve[-1])


def run_optimizer(engine, schedule, space: SearchSpace, objective, stream: EpsilonStream,
                  aux_seed: int = 0) -> RunRecord:
    """Run ``schedule.horizon`` iterations; ``curve[g]`` is gbest after iteration ``g``."""
    mode = Mode(engine)
    G = schedule.horizon
    expected = PsoSchedule if mode is Mode.PSO else ClpsoSchedule
    if not isinstance(schedule, expected):
        raise InvalidArgument(f"{mode.value} engine needs a {expected.__name__}")
    if stream.mode is not mode:
        raise InvalidArgument(f"stream mode {stream.mode.value} does not match engine {mode.value}")
    if stream.horizon < G:
        raise InvalidArgument(f"stream horizon {stream.horizon} shorter than run horizon {G}")
    if stream.dim != space.dim:
        raise InvalidArgument(f"stream dimension {stream.dim} != search space dimension {space.dim}")
    if mode is Mode.CLPSO and stream.n_particles < 3:
        raise InvalidArgument("CLPSO needs at least 3 particles")

    t0 = time.perf_counter()
    state = init_swarm(stream_block(stream, BlockRole.init_position()),
                       stream_block(stream, BlockRole.init_velocity()), space, objective)
    curve = np.empty(G + 1)
    curve[0] = state.gbest_fit
    if mode is Mode.PSO:
        for g in range(1, G + 1):
            omega, c1, c2 = schedule.at(g - 1)
            state = pso_step(state, omega, c1, c2,
                             stream_block(stream, BlockRole.cognitive(g)),
                             stream_block(stream, BlockRole.social(g)), space, objective)
            curve[g] = state.gbest_fit
    else:
        rng = np.random.default_rng(aux_seed)
        state = clpso_prepare(state, rng)
        for g in range(1, G + 1):
            omega, c = schedule.at(g - 1)
            state = clpso_step(state, omega, c, stream_block(stream, BlockRole.learning(g)),
                               space, objective, rng, schedule.refresh_gap)
            curve[g] = state.gbest_fit
    provenance = dict(stream.provenance, construction=stream.construction.value, aux_seed=aux_seed)
    return RunRecord(curve, state.evaluations, time.perf_counter() - t0, mode.value, provenance, state)
