"""Expanded-dimensional sample streams.

A run of a swarm optimizer with horizon ``G`` consumes a fixed set of
``N x D`` uniform blocks: two for initialization and one or two per
iteration. An :class:`EpsilonStream` owns those blocks and serves them by
role, so the engines never touch a random generator for the update terms.

Block layout (``b`` is the block index):

========  =================  ======================
mode      role               block
========  =================  ======================
both      InitPosition       0
both      InitVelocity       1
PSO       Cognitive(g)       2g
PSO       Social(g)          2g + 1
CLPSO     Learning(g)        g + 1
========  =================  ======================
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ldseds import lds
from ldseds.errors import InvalidArgument
from ldseds.lds import GeneratorId, PointSet


class Mode(str, enum.Enum):
    PSO = "pso"
    CLPSO = "clpso"


class Construction(str, enum.Enum):
    RANDOM = "random"
    DIRECT = "direct"  # LDSEDS1
    COMBINED = "combined"  # LDSEDS2


class RoleKind(str, enum.Enum):
    INIT_POSITION = "init_position"
    INIT_VELOCITY = "init_velocity"
    COGNITIVE = "cognitive"
    SOCIAL = "social"
    LEARNING = "learning"


@dataclass(frozen=True)
class BlockRole:
    kind: RoleKind
    g: int = 0

    @classmethod
    def init_position(cls):
        return cls(RoleKind.INIT_POSITION)

    @classmethod
    def init_velocity(cls):
        return cls(RoleKind.INIT_VELOCITY)

    @classmethod
    def cognitive(cls, g):
        return cls(RoleKind.COGNITIVE, g)

    @classmethod
    def social(cls, g):
        return cls(RoleKind.SOCIAL, g)

    @classmethod
    def learning(cls, g):
        return cls(RoleKind.LEARNING, g)


def block_count(mode, horizon: int) -> int:
    mode = Mode(mode)
    if horizon < 0:
        raise InvalidArgument("horizon must be nonnegative")
    return 2 * horizon + 2 if mode is Mode.PSO else horizon + 2


def role_index(role: BlockRole, mode, horizon: int) -> int:
    mode = Mode(mode)
    kind = role.kind
    if kind is RoleKind.INIT_POSITION:
        return 0
    if kind is RoleKind.INIT_VELOCITY:
        return 1
    if not 1 <= role.g <= horizon:
        raise InvalidArgument(f"iteration {role.g} outside 1..{horizon}")
    if mode is Mode.PSO and kind is RoleKind.COGNITIVE:
        return 2 * role.g
    if mode is Mode.PSO and kind is RoleKind.SOCIAL:
        return 2 * role.g + 1
    if mode is Mode.CLPSO and kind is RoleKind.LEARNING:
        return role.g + 1
    raise InvalidArgument(f"role {kind.value} is not valid for {mode.value} streams")


def random_permutation(length: int, draw_source: np.random.Generator) -> np.ndarray:
    """Fisher-Yates shuffle of ``0..length-1``."""
    if length < 1:
        raise InvalidArgument("permutation length must be >= 1")
    perm = np.arange(length)
    for i in range(length - 1, 0, -1):
        j = int(draw_source.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm


@dataclass(frozen=True, eq=False)
class EpsilonStream:
    """Role-addressed ``N x D`` blocks of one expanded-dimensional sample set.

    Blocks are produced by ``_block_fn`` on demand; it is a pure function of
    the block index, so concurrent readers always see the same data.
    """

    mode: Mode
    n_particles: int
    dim: int
    horizon: int
    construction: Construction
    provenance: dict
    _block_fn: object = field(repr=False)

    @property
    def n_blocks(self) -> int:
        return block_count(self.mode, self.horizon)

    def block(self, b: int) -> np.ndarray:
        if not 0 <= b < self.n_blocks:
            raise InvalidArgument(f"block {b} outside 0..{self.n_blocks - 1}")
        out = self._block_fn(b)
        out.flags.writeable = False
        return out

    @property
    def blocks(self):
        return [self.block(b) for b in range(self.n_blocks)]

    def flatten(self) -> np.ndarray:
        """The full ``N x (blocks * D)`` sample set, block 0 in the leading columns."""
        return np.hstack(self.blocks)


def stream_block(stream: EpsilonStream, role: BlockRole) -> np.ndarray:
    return stream.block(role_index(role, stream.mode, stream.horizon))


def build_stream_random(n: int, d: int, horizon: int, mode, seed: int) -> EpsilonStream:
    mode = Mode(mode)

    def block(b):
        return lds.uniform_columns(n, range(b * d, (b + 1) * d), seed)

    return EpsilonStream(
        mode, n, d, horizon, Construction.RANDOM,
        {"generator": GeneratorId.UNIFORM.value, "seed": seed},
        block,
    )


def build_stream_direct(generator_id, n: int, d: int, horizon: int, mode, seed: int = 0,
                        point_set: PointSet | None = None) -> EpsilonStream:
    """Generate the whole expanded sample set in one call to a generator.

    ``point_set`` supplies an external ``N x total`` set instead of generating.
    """
    mode = Mode(mode)
    gid = GeneratorId(generator_id)
    total = block_count(mode, horizon) * d
    provenance = {"generator": gid.value, "seed": seed}
    if gid is GeneratorId.UNIFORM:
        # column-keyed draws: identical to the random construction with the same seed
        stream = build_stream_random(n, d, horizon, mode, seed)
        return EpsilonStream(mode, n, d, horizon, Construction.DIRECT, provenance, stream._block_fn)
    if gid is GeneratorId.EXTERNAL:
        if point_set is None:
            raise InvalidArgument("external generator requires a point_set")
        if point_set.points.shape != (n, total):
            raise InvalidArgument(
                f"external point set has shape {point_set.points.shape}, need ({n}, {total})"
            )
        full = point_set.points
    else:
        limit = lds.max_dim(gid)
        if total > limit:
            raise InvalidArgument(
                f"expanded dimension {total} exceeds the {gid.value} limit of {limit}"
            )
        full = lds.generate(gid, n, total, seed).points

    def block(b):
        return full[:, b * d : (b + 1) * d].copy()

    return EpsilonStream(mode, n, d, horizon, Construction.DIRECT, provenance, block)


def block_permutation(d: int, permutation_seed: int, b: int) -> np.ndarray:
    """Row permutation used for block ``b``; independent of the horizon."""
    return random_permutation(d, np.random.default_rng([permutation_seed, b]))


def build_stream_combined(seed_set: PointSet, horizon: int, mode, permutation_seed: int,
                          d: int | None = None) -> EpsilonStream:
    """Stack dimension-permuted copies of one low-dimensional seed set.

    ``seed_set`` holds ``N`` samples of dimension ``D`` (one sample per row).
    Block 0 is the seed set itself; block ``b >= 1`` applies an independent
    uniform permutation ``pi_b`` to its ``D`` coordinates, so column ``j`` of
    block ``b`` is column ``pi_b[j]`` of the seed set.
    """
    mode = Mode(mode)
    pts = seed_set.points
    n, dim = pts.shape
    if d is not None and d != dim:
        raise InvalidArgument(f"seed set has dimension {dim}, requested {d}")

    def block(b):
        if b == 0:
            return pts.copy()
        return pts[:, block_permutation(dim, permutation_seed, b)]

    provenance = {
        "generator": seed_set.generator_id.value,
        "seed": seed_set.seed,
        "start_index": seed_set.start_index,
        "permutation_seed": permutation_seed,
    }
    return EpsilonStream(mode, n, dim, horizon, Construction.COMBINED, provenance, block)


def build_stream(construction, n: int, d: int, horizon: int, mode, *, generator_id=None,
                 seed: int = 0, permutation_seed: int = 0, point_set: PointSet | None = None) -> EpsilonStream:
    """Single entry point used by the harness and the CLI."""
    construction = Construction(construction)
    if construction is Construction.RANDOM:
        return build_stream_random(n, d, horizon, mode, seed)
    if generator_id is None:
        raise InvalidArgument(f"{construction.value} construction needs a generator")
    if construction is Construction.DIRECT:
        return build_stream_direct(generator_id, n, d, horizon, mode, seed, point_set)
    if GeneratorId(generator_id) is GeneratorId.EXTERNAL:
        if point_set is None:
            raise InvalidArgument("external generator requires a point_set")
        seed_set = point_set
    else:
        seed_set = lds.generate(generator_id, n, d, seed)
    if seed_set.points.shape != (n, d):
        raise InvalidArgument(f"seed set has shape {seed_set.points.shape}, need ({n}, {d})")
    return build_stream_combined(seed_set, horizon, mode, permutation_seed, d)
