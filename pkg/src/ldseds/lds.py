"""Low-discrepancy and random point sets in the unit hypercube, plus dispersion.

All generators are pure functions of ``(n, d, seed, start_index)``; every
returned :class:`PointSet` is read-only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from ldseds.errors import InvalidArgument

N_PRIMES = 2000
SOBOL_BITS = 32


class GeneratorId(str, enum.Enum):
    HALTON = "halton"
    SCRAMBLED_HALTON = "scrambled_halton"
    SOBOL = "sobol"
    HUA_WANG = "hua_wang"
    UNIFORM = "uniform"
    EXTERNAL = "external"


@dataclass(frozen=True, eq=False)
class PointSet:
    """An ``N x D`` sample matrix with the parameters that produced it."""

    points: np.ndarray
    generator_id: GeneratorId
    seed: int = 0
    start_index: int = 1

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim != 2:
            raise InvalidArgument(f"points must be a 2-D array, got shape {pts.shape}")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class DispersionEstimate:
    value: float
    probe_count: int
    probe_seed: int | None
    exact: bool


# ---------------------------------------------------------------------------
# primes and radical inverses


@lru_cache(maxsize=None)
def primes(count: int = N_PRIMES) -> np.ndarray:
    """First ``count`` primes (sieve of Eratosthenes)."""
    limit = 32
    while True:
        sieve = np.ones(limit + 1, dtype=bool)
        sieve[:2] = False
        for p in range(2, int(limit**0.5) + 1):
            if sieve[p]:
                sieve[p * p :: p] = False
        found = np.flatnonzero(sieve)
        if len(found) >= count:
            out = found[:count].astype(np.int64)
            out.flags.writeable = False
            return out
        limit *= 2


def _check_prime_dim(d: int):
    if d < 1:
        raise InvalidArgument(f"dimension must be >= 1, got {d}")
    if d > N_PRIMES:
        raise InvalidArgument(
            f"dimension {d} exceeds the prime table; supported maximum is {N_PRIMES}"
        )


def radical_inverse(index, base: int, digit_permutation=None):
    """Mirror the base-``base`` digits of ``index`` about the radix point.

    ``index`` may be a scalar or an integer array. ``digit_permutation`` maps
    each digit before it is mirrored; it must fix 0.
    """
    if base < 2:
        raise InvalidArgument(f"base must be >= 2, got {base}")
    perm = None
    if digit_permutation is not None:
        perm = np.asarray(digit_permutation, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(base)) or perm[0] != 0:
            raise InvalidArgument("digit_permutation must be a bijection on 0..base-1 fixing 0")
    scalar = np.ndim(index) == 0
    idx = np.array(index, dtype=np.int64, ndmin=1, copy=True)
    if np.any(idx < 0):
        raise InvalidArgument("index must be nonnegative")
    result = np.zeros(idx.shape, dtype=float)
    factor = 1.0 / base
    while np.any(idx > 0):
        digit = idx % base
        if perm is not None:
            digit = perm[digit]
        result += digit * factor
        idx //= base
        factor /= base
    return float(result[0]) if scalar else result


def digit_permutation(base: int, seed: int) -> np.ndarray:
    """Seeded random permutation of ``0..base-1`` that keeps 0 in place."""
    rng = np.random.default_rng([seed, base])
    return np.concatenate([[0], 1 + rng.permutation(base - 1)])


def generate_halton(n: int, d: int, scramble_seed: int | None = None, start_index: int = 1) -> PointSet:
    """Halton points for indices ``start_index .. start_index + n - 1``.

    Column ``j`` uses the ``j``-th prime as base. With ``scramble_seed`` each
    base gets its own seeded digit permutation (digit 0 fixed).
    """
    _check_prime_dim(d)
    if start_index < 0:
        raise InvalidArgument("start_index must be nonnegative")
    idx = np.arange(start_index, start_index + n, dtype=np.int64)
    bases = primes()[:d]
    out = np.empty((n, d))
    for j, p in enumerate(bases):
        perm = None if scramble_seed is None else digit_permutation(int(p), scramble_seed)
        out[:, j] = radical_inverse(idx, int(p), perm)
    gid = GeneratorId.HALTON if scramble_seed is None else GeneratorId.SCRAMBLED_HALTON
    return PointSet(out, gid, seed=scramble_seed or 0, start_index=start_index)


# ---------------------------------------------------------------------------
# Sobol (natural order)


@lru_cache(maxsize=1)
def _sobol_table():
    with resources.files("ldseds").joinpath("data/sobol_joe_kuo_1024.npz").open("rb") as fh:
        data = np.load(fh)
        return data["poly"].astype(np.int64), data["vinit"].astype(np.int64)


def sobol_max_dim() -> int:
    return len(_sobol_table()[0])


@lru_cache(maxsize=None)
def _direction_numbers(d: int) -> np.ndarray:
    """``(d, SOBOL_BITS)`` direction integers ``V[j, k]``."""
    poly, vinit = _sobol_table()
    v = np.zeros((d, SOBOL_BITS), dtype=np.uint64)
    for j in range(d):
        m = np.zeros(SOBOL_BITS, dtype=np.int64)
        if j == 0:
            m[:] = 1
        else:
            p = int(poly[j])
            s = p.bit_length() - 1
            m[:s] = vinit[j, :s]
            for k in range(s, SOBOL_BITS):
                new = m[k - s] ^ (m[k - s] << s)
                for i in range(1, s):
                    if (p >> (s - i)) & 1:
                        new ^= m[k - i] << i
                m[k] = new
        v[j] = [int(m[k]) << (SOBOL_BITS - 1 - k) for k in range(SOBOL_BITS)]
    v.flags.writeable = False
    return v


def generate_sobol(n: int, d: int, start_index: int = 0) -> PointSet:
    """Unscrambled Sobol points in natural (binary, not Gray-code) index order."""
    limit = sobol_max_dim()
    if d < 1 or d > limit:
        raise InvalidArgument(f"Sobol dimension {d} outside the direction table (1..{limit})")
    if start_index < 0:
        raise InvalidArgument("start_index must be nonnegative")
    if start_index + n > 2**SOBOL_BITS:
        raise InvalidArgument(f"Sobol index exceeds 2**{SOBOL_BITS}")
    v = _direction_numbers(d)
    idx = np.arange(start_index, start_index + n, dtype=np.uint64)
    acc = np.zeros((n, d), dtype=np.uint64)
    for k in range(SOBOL_BITS):
        bit = ((idx >> np.uint64(k)) & np.uint64(1)).astype(bool)
        if not bit.any():
            continue
        acc[bit] ^= v[:, k]
    pts = acc.astype(float) / float(2**SOBOL_BITS)
    return PointSet(pts, GeneratorId.SOBOL, seed=0, start_index=start_index)


def generate_hua_wang(n: int, d: int, start_index: int = 1) -> PointSet:
    """Square-root good-point set: ``frac(i * frac(sqrt(p_j)))``."""
    _check_prime_dim(d)
    gamma = np.modf(np.sqrt(primes()[:d].astype(float)))[0]
    i = np.arange(start_index, start_index + n, dtype=float)[:, None]
    pts = np.modf(i * gamma[None, :])[0]
    return PointSet(pts, GeneratorId.HUA_WANG, seed=0, start_index=start_index)


# ---------------------------------------------------------------------------
# pseudorandom


def uniform_columns(n: int, columns, seed: int) -> np.ndarray:
    """Uniform draws for the requested column indices.

    Column ``c`` is the first ``n`` outputs of a Philox stream keyed by
    ``(seed, c)``, so any slice of columns can be produced independently.
    """
    if seed < 0:
        raise InvalidArgument("seed must be nonnegative")
    columns = np.atleast_1d(np.asarray(columns, dtype=np.int64))
    out = np.empty((n, len(columns)))
    for k, c in enumerate(columns):
        key = (int(seed) << 64) | int(c)
        out[:, k] = np.random.Generator(np.random.Philox(key=key)).random(n)
    return out


def random_uniform(n: int, d: int, seed: int) -> PointSet:
    return PointSet(uniform_columns(n, range(d), seed), GeneratorId.UNIFORM, seed=seed, start_index=0)


def generate(generator_id, n: int, d: int, seed: int = 0, start_index: int | None = None) -> PointSet:
    """Dispatch by generator id. ``seed`` is ignored by unseeded generators."""
    gid = GeneratorId(generator_id)
    if gid is GeneratorId.HALTON:
        return generate_halton(n, d, None, 1 if start_index is None else start_index)
    if gid is GeneratorId.SCRAMBLED_HALTON:
        return generate_halton(n, d, seed, 1 if start_index is None else start_index)
    if gid is GeneratorId.SOBOL:
        return generate_sobol(n, d, 0 if start_index is None else start_index)
    if gid is GeneratorId.HUA_WANG:
        return generate_hua_wang(n, d, 1 if start_index is None else start_index)
    if gid is GeneratorId.UNIFORM:
        return random_uniform(n, d, seed)
    raise InvalidArgument("external point sets must be loaded with load_point_set")


def max_dim(generator_id) -> int | None:
    gid = GeneratorId(generator_id)
    if gid in (GeneratorId.HALTON, GeneratorId.SCRAMBLED_HALTON, GeneratorId.HUA_WANG):
        return N_PRIMES
    if gid is GeneratorId.SOBOL:
        return sobol_max_dim()
    return None


# ---------------------------------------------------------------------------
# plain-text point files


def load_point_set(path, d: int | None = None) -> PointSet:
    """Read whitespace-separated coordinates, one point per line."""
    path = Path(path)
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(tok) for tok in line.split()])
        except ValueError as exc:
            raise InvalidArgument(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise InvalidArgument(f"{path}: no points")
    width = len(rows[0])
    for lineno, row in enumerate(rows, 1):
        if len(row) != width:
            raise InvalidArgument(f"{path}: point {lineno} has {len(row)} columns, expected {width}")
    pts = np.array(rows)
    if d is not None and width != d:
        raise InvalidArgument(f"{path}: expected {d} columns, found {width}")
    if not np.all((pts >= 0.0) & (pts < 1.0)):
        raise InvalidArgument(f"{path}: coordinates must lie in [0, 1)")
    return PointSet(pts, GeneratorId.EXTERNAL, seed=0, start_index=0)


def format_points(points) -> str:
    return "".join(" ".join(repr(float(x)) for x in row) + "\n" for row in np.asarray(points))


def save_point_set(points, path):
    Path(path).write_text(format_points(getattr(points, "points", points)))


# ---------------------------------------------------------------------------
# dispersion


def dispersion_exact_1d(points) -> DispersionEstimate:
    """Covering radius of a point set on ``[0, 1]``."""
    x = np.sort(np.asarray(points, dtype=float).ravel())
    if x.size == 0:
        raise InvalidArgument("dispersion of an empty point set is undefined")
    value = max(x[0], 1.0 - x[-1])
    if x.size > 1:
        value = max(value, float(np.max(np.diff(x))) / 2.0)
    return DispersionEstimate(float(value), probe_count=0, probe_seed=None, exact=True)


def dispersion_mc(points, probe_count: int, probe_seed: int, chunk: int = 4096) -> DispersionEstimate:
    """Monte Carlo estimate of sup over the cube of the nearest-point distance.

    Probes are uniform in the cube; the estimate never exceeds the true value.
    """
    pts = np.asarray(getattr(points, "points", points), dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if probe_count < 1:
        raise InvalidArgument("probe_count must be >= 1")
    n, d = pts.shape
    rng = np.random.default_rng(probe_seed)
    # keep each chunk's distance tensor around a few million entries
    chunk = max(1, min(chunk, 4_000_000 // max(1, n * d)))
    best = 0.0
    remaining = probe_count
    while remaining > 0:
        m = min(chunk, remaining)
        probes = rng.random((m, d))
        sq = np.zeros((m, n))
        for j in range(d):
            diff = probes[:, j, None] - pts[None, :, j]
            sq += diff * diff
        best = max(best, float(np.sqrt(sq.min(axis=1).max())))
        remaining -= m
    return DispersionEstimate(best, probe_count=probe_count, probe_seed=probe_seed, exact=False)
