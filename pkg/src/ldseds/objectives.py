"""Shifted/rotated benchmark objectives modelled on the CEC-2017 suite.

Shift vectors, rotation matrices and hybrid permutations are drawn from
seeded generators; they are stand-ins for the official data files, so
absolute fitness values are not comparable with published CEC tables.
Every base function is normalized so that ``base(0) == 0`` and carries its
CEC input scaling internally (e.g. Rastrigin maps ``[-100, 100]`` onto
``[-5.12, 5.12]``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ldseds.errors import InvalidArgument

LOWER, UPPER = -100.0, 100.0
SHIFT_FRACTION = 0.8


# ---------------------------------------------------------------------------
# base functions; all take z of shape (..., D) and reduce the last axis


def sphere(z):
    return np.sum(z * z, axis=-1)


def zakharov(z):
    i = np.arange(1, z.shape[-1] + 1)
    s1 = np.sum(z * z, axis=-1)
    s2 = np.sum(0.5 * i * z, axis=-1)
    return s1 + s2**2 + s2**4


def rosenbrock(z):
    z = z * (2.048 / 100.0) + 1.0
    a, b = z[..., :-1], z[..., 1:]
    return np.sum(100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2, axis=-1)


def _rastrigin_raw(z):
    return np.sum(z * z - 10.0 * np.cos(2.0 * np.pi * z) + 10.0, axis=-1)


def rastrigin(z):
    return _rastrigin_raw(z * (5.12 / 100.0))


def noncontinuous_rastrigin(z):
    z = z * (5.12 / 100.0)
    z = np.where(np.abs(z) > 0.5, np.floor(2.0 * z + 0.5) / 2.0, z)
    return _rastrigin_raw(z)


def _schaffer_f6_pair(a, b):
    r2 = a * a + b * b
    t = 1.0 + 0.001 * r2
    return 0.5 + (np.sin(np.sqrt(r2)) ** 2 - 0.5) / (t * t)


def expanded_schaffer_f6(z):
    return np.sum(_schaffer_f6_pair(z, np.roll(z, -1, axis=-1)), axis=-1)


def schaffer_f7(z):
    if z.shape[-1] == 1:
        s = np.abs(z)
    else:
        s = np.sqrt(z[..., :-1] ** 2 + z[..., 1:] ** 2)
    root = np.sqrt(s)
    total = np.sum(root + root * np.sin(50.0 * s**0.2) ** 2, axis=-1)
    return (total / s.shape[-1]) ** 2


def lunacek_bi_rastrigin(z):
    D = z.shape[-1]
    if D < 2:
        raise InvalidArgument("lunacek_bi_rastrigin needs at least 2 dimensions")
    mu0, d = 2.5, 1.0
    s = 1.0 - 1.0 / (2.0 * math.sqrt(D + 20.0) - 8.2)
    mu1 = -math.sqrt((mu0 * mu0 - d) / s)
    y = 2.0 * z * (10.0 / 100.0)
    t1 = np.sum(y * y, axis=-1)
    t2 = d * D + s * np.sum((y + mu0 - mu1) ** 2, axis=-1)
    return np.minimum(t1, t2) + 10.0 * np.sum(1.0 - np.cos(2.0 * np.pi * y), axis=-1)


def levy(z):
    w = 1.0 + z / 4.0
    # sin(pi * w) written as sin(pi * (w - 1)) so levy(0) is exactly zero
    head = np.sin(np.pi * (w[..., 0] - 1.0)) ** 2
    mid = np.sum((w[..., :-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * w[..., :-1] + 1.0) ** 2), axis=-1)
    last = w[..., -1]
    tail = (last - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * (last - 1.0)) ** 2)
    return head + mid + tail


def ackley(z):
    D = z.shape[-1]
    rms = np.sqrt(np.sum(z * z, axis=-1) / D)
    mean_cos = np.sum(np.cos(2.0 * np.pi * z), axis=-1) / D
    # grouped so that ackley(0) is exactly zero
    return 20.0 * (1.0 - np.exp(-0.2 * rms)) + (np.e - np.exp(mean_cos))


def griewank(z):
    z = z * (600.0 / 100.0)
    i = np.arange(1, z.shape[-1] + 1)
    return 1.0 + np.sum(z * z, axis=-1) / 4000.0 - np.prod(np.cos(z / np.sqrt(i)), axis=-1)


def griewank_rosenbrock(z):
    z = z * (5.0 / 100.0) + 1.0
    nxt = np.roll(z, -1, axis=-1)
    t = 100.0 * (z * z - nxt) ** 2 + (z - 1.0) ** 2
    return np.sum(t * t / 4000.0 - np.cos(t) + 1.0, axis=-1)


def bent_cigar(z):
    return z[..., 0] ** 2 + 1e6 * np.sum(z[..., 1:] ** 2, axis=-1)


def discus(z):
    return 1e6 * z[..., 0] ** 2 + np.sum(z[..., 1:] ** 2, axis=-1)


def high_conditioned_elliptic(z):
    D = z.shape[-1]
    expo = 6.0 * np.arange(D) / (D - 1) if D > 1 else np.zeros(1)
    return np.sum(10.0**expo * z * z, axis=-1)


def hgbat(z):
    D = z.shape[-1]
    z = z * (5.0 / 100.0) - 1.0
    r2 = np.sum(z * z, axis=-1)
    sz = np.sum(z, axis=-1)
    return np.sqrt(np.abs(r2 * r2 - sz * sz)) + (0.5 * r2 + sz) / D + 0.5


def katsuura(z):
    D = z.shape[-1]
    z = z * (5.0 / 100.0)
    p = 2.0 ** np.arange(1, 33)
    t = p * z[..., None]
    inner = np.sum(np.abs(t - np.round(t)) / p, axis=-1)
    i = np.arange(1, D + 1)
    prod = np.prod((1.0 + i * inner) ** (10.0 / D**1.2), axis=-1)
    return 10.0 / D**2 * (prod - 1.0)


_SCHWEFEL_SHIFT = 4.209687462275036e2
_SCHWEFEL_CONST = 4.189828872724338e2


def _schwefel_terms(z):
    z = z * (1000.0 / 100.0) + _SCHWEFEL_SHIFT
    D = z.shape[-1]
    m = np.fmod(np.abs(z), 500.0)
    inside = z * np.sin(np.sqrt(np.abs(z)))
    above = (500.0 - m) * np.sin(np.sqrt(np.abs(500.0 - m))) - (z - 500.0) ** 2 / (10000.0 * D)
    below = (m - 500.0) * np.sin(np.sqrt(np.abs(500.0 - m))) - (z + 500.0) ** 2 / (10000.0 * D)
    g = np.where(z > 500.0, above, np.where(z < -500.0, below, inside))
    return _SCHWEFEL_CONST - g


# per-coordinate residual of the CEC constants at the optimum
_SCHWEFEL_ZERO = float(_schwefel_terms(np.zeros(1))[0])


def modified_schwefel(z):
    return np.sum(_schwefel_terms(z) - _SCHWEFEL_ZERO, axis=-1)


MIN_DIM = {"lunacek_bi_rastrigin": 2, "schaffer_f7": 2}

BASES = {
    "sphere": sphere,
    "zakharov": zakharov,
    "rosenbrock": rosenbrock,
    "rastrigin": rastrigin,
    "expanded_schaffer_f6": expanded_schaffer_f6,
    "lunacek_bi_rastrigin": lunacek_bi_rastrigin,
    "noncontinuous_rastrigin": noncontinuous_rastrigin,
    "levy": levy,
    "ackley": ackley,
    "griewank": griewank,
    "griewank_rosenbrock": griewank_rosenbrock,
    "bent_cigar": bent_cigar,
    "hgbat": hgbat,
    "high_conditioned_elliptic": high_conditioned_elliptic,
    "discus": discus,
    "katsuura": katsuura,
    "modified_schwefel": modified_schwefel,
    "schaffer_f7": schaffer_f7,
}


def eval_base(name: str, z):
    """Evaluate a base function at one point (or a batch along the last axis)."""
    try:
        fn = BASES[name]
    except KeyError:
        raise InvalidArgument(f"unknown base function {name!r}; choose from {sorted(BASES)}") from None
    z = np.asarray(z, dtype=float)
    if z.ndim == 0 or z.shape[-1] == 0:
        raise InvalidArgument("base functions need at least one coordinate")
    if not np.all(np.isfinite(z)):
        raise InvalidArgument("base functions need finite input")
    if z.shape[-1] < MIN_DIM.get(name, 1):
        raise InvalidArgument(f"{name} needs at least {MIN_DIM[name]} coordinates")
    out = fn(z)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# transforms


def make_rotation(d: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix from a seeded Gaussian QR."""
    if d < 1:
        raise InvalidArgument("rotation dimension must be >= 1")
    a = np.random.default_rng(seed).standard_normal((d, d))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))[None, :]
    return q


def make_shift(d: int, seed: int, lower=LOWER, upper=UPPER, fraction=SHIFT_FRACTION) -> np.ndarray:
    half = 0.5 * (upper - lower) * fraction
    center = 0.5 * (upper + lower)
    return np.random.default_rng(seed).uniform(center - half, center + half, d)


def partition_sizes(proportions, d: int) -> list[int]:
    """CEC-style split: ceil for all but the last component, remainder last."""
    props = [float(p) for p in proportions]
    if not props:
        raise InvalidArgument("at least one component is required")
    if abs(sum(props) - 1.0) > 1e-9:
        raise InvalidArgument(f"proportions must sum to 1, got {sum(props)}")
    sizes = [math.ceil(p * d) for p in props[:-1]]
    sizes.append(d - sum(sizes))
    if min(sizes) < 1:
        raise InvalidArgument(f"dimension {d} too small for proportions {props}")
    return sizes


@dataclass(frozen=True)
class CompositionPart:
    base: str
    shift: np.ndarray
    rotation: np.ndarray
    sigma: float
    scale: float = 1.0
    offset: float = 0.0


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    """A batch-callable objective ``f(x) = base(M (x - o)) + bias``.

    Hybrid specs permute and partition ``M (x - o)`` across several bases;
    composition specs blend several shifted/rotated parts with Gaussian
    distance weights.
    """

    base: str | None
    dim: int
    shift: np.ndarray
    rotation: np.ndarray
    bias: float
    hybrid_layout: tuple | None = None  # (components, sizes, permutation)
    composition: tuple | None = None  # CompositionPart, ...
    name: str = ""
    provenance: dict = field(default_factory=dict)

    @property
    def z_star(self) -> float:
        return self.bias

    @property
    def optimum(self) -> np.ndarray:
        return self.shift

    def search_space(self, vmax_fraction: float = 0.2):
        from ldseds.swarm import SearchSpace

        return SearchSpace.box(LOWER, UPPER, self.dim, vmax_fraction)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise InvalidArgument(f"expected {self.dim} coordinates, got {x.shape[-1]}")
        if self.composition is not None:
            return self._composite(x) + self.bias
        z = (x - self.shift) @ self.rotation.T
        if self.hybrid_layout is None:
            return BASES[self.base](z) + self.bias
        components, sizes, perm = self.hybrid_layout
        if len(components) == 1:
            return BASES[components[0]](z) + self.bias
        z = z[..., perm]
        total = 0.0
        start = 0
        for name, size in zip(components, sizes):
            total = total + BASES[name](z[..., start : start + size])
            start += size
        return total + self.bias

    def _composite(self, x):
        values, weights = [], []
        for part in self.composition:
            diff = x - part.shift
            dist2 = np.sum(diff * diff, axis=-1)
            z = diff @ part.rotation.T
            values.append(part.scale * BASES[part.base](z) + part.offset)
            with np.errstate(divide="ignore"):
                weights.append(np.exp(-dist2 / (2.0 * self.dim * part.sigma**2)) / np.sqrt(dist2))
        values = np.stack(values, axis=-1)
        weights = np.stack(weights, axis=-1)
        exact = np.isinf(weights)
        weights = np.where(exact.any(axis=-1, keepdims=True), exact.astype(float), weights)
        wsum = np.sum(weights, axis=-1, keepdims=True)
        weights = np.where(wsum > 0, weights / np.where(wsum > 0, wsum, 1.0), 1.0 / weights.shape[-1])
        return np.sum(weights * values, axis=-1)

    def evaluate(self, x) -> float:
        return float(self(np.asarray(x, dtype=float)[None, :])[0])


def make_objective(base: str, d: int, shift_seed: int | None, rot_seed: int | None, bias: float,
                   name: str = "") -> ObjectiveSpec:
    if base not in BASES:
        raise InvalidArgument(f"unknown base function {base!r}")
    if d < MIN_DIM.get(base, 1):
        raise InvalidArgument(f"{base} is not supported in dimension {d}")
    shift = np.zeros(d) if shift_seed is None else make_shift(d, shift_seed)
    rot = np.eye(d) if rot_seed is None else make_rotation(d, rot_seed)
    return ObjectiveSpec(base, d, shift, rot, float(bias), name=name or base,
                         provenance={"shift_seed": shift_seed, "rot_seed": rot_seed})


def make_hybrid(components, proportions, d: int, shift_seed: int | None, rot_seed: int | None,
                perm_seed: int | None, bias: float, name: str = "") -> ObjectiveSpec:
    """Shift, rotate, permute the coordinates, then feed contiguous slices to each base."""
    components = list(components)
    if not components:
        raise InvalidArgument("hybrid needs at least one component")
    for c in components:
        if c not in BASES:
            raise InvalidArgument(f"unknown base function {c!r}")
    if len(proportions) != len(components):
        raise InvalidArgument("one proportion per component is required")
    sizes = partition_sizes(proportions, d)
    for c, size in zip(components, sizes):
        if size < MIN_DIM.get(c, 1):
            raise InvalidArgument(f"{c} gets {size} dimension(s) in a {d}-D hybrid; needs {MIN_DIM[c]}")
    if len(components) == 1:
        perm = np.arange(d)
    else:
        rng = np.random.default_rng(perm_seed)
        perm = rng.permutation(d)
    shift = np.zeros(d) if shift_seed is None else make_shift(d, shift_seed)
    rot = np.eye(d) if rot_seed is None else make_rotation(d, rot_seed)
    return ObjectiveSpec(
        None if len(components) > 1 else components[0], d, shift, rot, float(bias),
        hybrid_layout=(tuple(components), tuple(sizes), perm), name=name or "hybrid",
        provenance={"shift_seed": shift_seed, "rot_seed": rot_seed, "perm_seed": perm_seed},
    )


def make_composition(parts, d: int, shift_seed: int, rot_seed: int, bias: float, name: str = "") -> ObjectiveSpec:
    """Gaussian-weighted blend of shifted/rotated bases (not CEC-faithful).

    ``parts`` is a sequence of ``(base, sigma, scale, offset)``; the first
    part's offset should be 0 so that its optimum is the global one.
    """
    parts = list(parts)
    if not parts:
        raise InvalidArgument("composition needs at least one part")
    built = []
    for k, (base, sigma, scale, offset) in enumerate(parts):
        if base not in BASES:
            raise InvalidArgument(f"unknown base function {base!r}")
        built.append(CompositionPart(base, make_shift(d, shift_seed + k * 7919),
                                     make_rotation(d, rot_seed + k * 7919), float(sigma),
                                     float(scale), float(offset)))
    return ObjectiveSpec(None, d, built[0].shift, built[0].rotation, float(bias),
                         composition=tuple(built), name=name or "composition",
                         provenance={"shift_seed": shift_seed, "rot_seed": rot_seed})


def relative_error(fitness, z_star):
    if z_star == 0:
        raise InvalidArgument("relative error is undefined for a zero optimum")
    return (np.asarray(fitness, dtype=float) - z_star) / abs(z_star)


# ---------------------------------------------------------------------------
# registry


def _simple(base, z):
    return lambda d, s, r: make_objective(base, d, s, r, z)


def _hybrid(parts, props, z):
    return lambda d, s, r: make_hybrid(parts, props, d, s, r, s + 104729, z)


def _comp(parts, z):
    return lambda d, s, r: make_composition(parts, d, s, r, z)


FUNCTIONS = {
    "f01_zakharov_sr": (300.0, _simple("zakharov", 300.0)),
    "f02_rosenbrock_sr": (400.0, _simple("rosenbrock", 400.0)),
    "f03_rastrigin_sr": (500.0, _simple("rastrigin", 500.0)),
    "f04_expanded_schaffer_f6_sr": (600.0, _simple("expanded_schaffer_f6", 600.0)),
    "f05_lunacek_bi_rastrigin_sr": (700.0, _simple("lunacek_bi_rastrigin", 700.0)),
    "f06_noncontinuous_rastrigin_sr": (800.0, _simple("noncontinuous_rastrigin", 800.0)),
    "f07_levy_sr": (900.0, _simple("levy", 900.0)),
    "h1100_zakharov_rosenbrock_rastrigin": (
        1100.0, _hybrid(["zakharov", "rosenbrock", "rastrigin"], [0.2, 0.4, 0.4], 1100.0)),
    "h1300_bentcigar_rosenbrock_lunacek": (
        1300.0, _hybrid(["bent_cigar", "rosenbrock", "lunacek_bi_rastrigin"], [0.3, 0.3, 0.4], 1300.0)),
    "h1400_elliptic_ackley_schaffer_rastrigin": (
        1400.0, _hybrid(["high_conditioned_elliptic", "ackley", "schaffer_f7", "rastrigin"],
                        [0.2, 0.2, 0.2, 0.4], 1400.0)),
    "h1500_bentcigar_hgbat_rastrigin_rosenbrock": (
        1500.0, _hybrid(["bent_cigar", "hgbat", "rastrigin", "rosenbrock"], [0.2, 0.2, 0.3, 0.3], 1500.0)),
    "h1600_schaffer_hgbat_rosenbrock_schwefel_rastrigin": (
        1600.0, _hybrid(["expanded_schaffer_f6", "hgbat", "rosenbrock", "modified_schwefel", "rastrigin"],
                        [0.2, 0.2, 0.2, 0.2, 0.2], 1600.0)),
    "h1700_katsuura_ackley_grierosen_schwefel_rastrigin": (
        1700.0, _hybrid(["katsuura", "ackley", "griewank_rosenbrock", "modified_schwefel", "rastrigin"],
                        [0.1, 0.2, 0.2, 0.2, 0.3], 1700.0)),
    "h1900_elliptic_ackley_rastrigin_hgbat_discus": (
        1900.0, _hybrid(["high_conditioned_elliptic", "ackley", "rastrigin", "hgbat", "discus"],
                        [0.2, 0.2, 0.2, 0.2, 0.2], 1900.0)),
    "h2000_bentcigar_grierosen_rastrigin_schaffer": (
        2000.0, _hybrid(["bent_cigar", "griewank_rosenbrock", "rastrigin", "expanded_schaffer_f6"],
                        [0.2, 0.2, 0.3, 0.3], 2000.0)),
    "c2100_katsuura_ackley_rastrigin_schaffer_schwefel": (
        2100.0, _comp([("katsuura", 10, 1.0, 0), ("ackley", 20, 1.0, 100), ("rastrigin", 30, 1.0, 200),
                       ("schaffer_f7", 40, 1.0, 300), ("modified_schwefel", 50, 1.0, 400)], 2100.0)),
    "c2200_griewank_rastrigin_schwefel": (
        2200.0, _comp([("griewank", 10, 10.0, 0), ("rastrigin", 20, 1.0, 100),
                       ("modified_schwefel", 30, 1.0, 200)], 2200.0)),
    "c2400_ackley_griewank_rastrigin_elliptic": (
        2400.0, _comp([("ackley", 10, 10.0, 0), ("griewank", 20, 10.0, 100), ("rastrigin", 30, 1.0, 200),
                       ("high_conditioned_elliptic", 40, 1e-6, 300)], 2400.0)),
    "c2600_schwefel_rastrigin_rosenbrock_griewank_schaffer": (
        2600.0, _comp([("modified_schwefel", 10, 1.0, 0), ("rastrigin", 20, 1.0, 100),
                       ("rosenbrock", 30, 1.0, 200), ("griewank", 40, 10.0, 300),
                       ("expanded_schaffer_f6", 50, 10.0, 400)], 2600.0)),
}

# the 15 functions used with PSO and the 19 used with CLPSO, in table order
SUITE_PSO = [
    "f01_zakharov_sr", "f02_rosenbrock_sr", "f03_rastrigin_sr", "f04_expanded_schaffer_f6_sr",
    "f05_lunacek_bi_rastrigin_sr", "f06_noncontinuous_rastrigin_sr", "f07_levy_sr",
    "h1100_zakharov_rosenbrock_rastrigin", "h1400_elliptic_ackley_schaffer_rastrigin",
    "h1500_bentcigar_hgbat_rastrigin_rosenbrock", "h1600_schaffer_hgbat_rosenbrock_schwefel_rastrigin",
    "h1700_katsuura_ackley_grierosen_schwefel_rastrigin", "h1900_elliptic_ackley_rastrigin_hgbat_discus",
    "h2000_bentcigar_grierosen_rastrigin_schaffer", "c2200_griewank_rastrigin_schwefel",
]
SUITE_CLPSO = SUITE_PSO[:8] + [
    "h1300_bentcigar_rosenbrock_lunacek",
] + SUITE_PSO[8:14] + [
    "c2100_katsuura_ackley_rastrigin_schaffer_schwefel", "c2200_griewank_rastrigin_schwefel",
    "c2400_ackley_griewank_rastrigin_elliptic", "c2600_schwefel_rastrigin_rosenbrock_griewank_schaffer",
]
SUITES = {"pso": SUITE_PSO, "clpso": SUITE_CLPSO}


def make_registered(function_id: str, d: int, shift_seed: int = 1, rot_seed: int = 2) -> ObjectiveSpec:
    try:
        _, build = FUNCTIONS[function_id]
    except KeyError:
        raise InvalidArgument(f"unknown function id {function_id!r}") from None
    spec = build(d, shift_seed, rot_seed)
    return ObjectiveSpec(spec.base, spec.dim, spec.shift, spec.rotation, spec.bias, spec.hybrid_layout,
                         spec.composition, function_id, dict(spec.provenance, id=function_id))
