"""Convergence speed, tied ranks, and the modified Friedman / Nemenyi tests.

A convergence speed (CS) is the first iteration at which a best-fitness
curve comes within a relative tolerance of the known optimum. A failed cell
is represented by ``None`` and ranks below every finite value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ldseds.errors import DegenerateStatistic, InvalidArgument, NumericError
from ldseds.objectives import relative_error

FAIL = None

# Two-tailed Nemenyi q values at alpha = 0.05, i.e. studentized range
# quantiles divided by sqrt(2), for k = 2..10.
NEMENYI_Q = {
    0.05: {
        2: 1.960, 3: 2.343, 4: 2.569, 5: 2.728, 6: 2.850,
        7: 2.949, 8: 3.031, 9: 3.102, 10: 3.164,
    },
}


@dataclass(frozen=True)
class ConvergenceOutcome:
    cs: int | None
    tolerance: float

    @property
    def failed(self) -> bool:
        return self.cs is None


def convergence_speed(curve, z_star: float, eps_tol: float) -> ConvergenceOutcome:
    """First 1-based index whose relative error is strictly below ``eps_tol``.

    Parameters
    ----------
    curve : array_like
        Best fitness per iteration. Pass the pointwise mean over runs to get
        the headline CS of a cell.
    z_star : float
        Known optimum value, must be nonzero.
    eps_tol : float
        Tolerance in (0, 1).
    """
    c = np.asarray(curve, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise InvalidArgument("curve must be a nonempty 1-D sequence")
    if not 0.0 < eps_tol < 1.0:
        raise InvalidArgument(f"tolerance {eps_tol} outside (0, 1)")
    err = relative_error(c, z_star)
    hit = np.flatnonzero(err < eps_tol)
    cs = int(hit[0]) + 1 if hit.size else None
    return ConvergenceOutcome(cs, float(eps_tol))


def _as_metric(row) -> np.ndarray:
    # Fail becomes +inf so it loses to every finite value and ties with other Fails
    return np.array([np.inf if v is None else float(v) for v in row], dtype=float)


def ranks_with_ties(row) -> np.ndarray:
    """Average ranks (1 = best, lower value is better) with Fail ranked worst."""
    vals = _as_metric(row)
    k = vals.size
    if k < 2:
        raise InvalidArgument("need at least two entries to rank")
    if np.isnan(vals).any():
        raise InvalidArgument("metric row contains NaN")
    order = np.argsort(vals, kind="stable")
    ranks = np.empty(k)
    sv = vals[order]
    i = 0
    while i < k:
        j = i
        while j + 1 < k and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def rank_rows(matrix: np.ndarray) -> np.ndarray:
    """Vectorized tied ranks of every row of a finite ``m x k`` array."""
    a = np.asarray(matrix, dtype=float)
    # rank = (#smaller) + (#equal + 1) / 2
    less = (a[:, None, :] < a[:, :, None]).sum(axis=2)
    equal = (a[:, None, :] == a[:, :, None]).sum(axis=2)
    return less + (equal + 1) / 2.0


@dataclass(frozen=True)
class RankTable:
    """``m x k`` metric table (functions by algorithms) with its ranks."""

    metric: tuple
    ranks: np.ndarray
    avg_ranks: np.ndarray
    row_labels: tuple = ()
    col_labels: tuple = ()

    @property
    def m(self) -> int:
        return self.ranks.shape[0]

    @property
    def k(self) -> int:
        return self.ranks.shape[1]

    @classmethod
    def from_metric(cls, metric, row_labels=(), col_labels=()):
        rows = tuple(tuple(None if v is None else v for v in r) for r in metric)
        if not rows:
            raise InvalidArgument("metric table is empty")
        k = len(rows[0])
        if any(len(r) != k for r in rows):
            raise InvalidArgument("metric rows have unequal length")
        if k == 1:
            ranks = np.ones((len(rows), 1))
        else:
            ranks = np.array([ranks_with_ties(r) for r in rows])
        ranks.flags.writeable = False
        avg = ranks.mean(axis=0)
        avg.flags.writeable = False
        return cls(rows, ranks, avg, tuple(row_labels), tuple(col_labels))


@dataclass(frozen=True)
class TestReport:
    chi_f: float
    tau_f: float
    tau_critical: float
    significant: bool
    cd: float | None
    pairwise_significant: np.ndarray = field(repr=False)
    alpha: float = 0.05


def friedman_modified(avg_ranks, m: int, k: int | None = None):
    """Friedman chi-square and its F-distributed correction.

    Returns
    -------
    (chi_f, tau_f) : tuple of float
    """
    r = np.asarray(avg_ranks, dtype=float)
    if k is None:
        k = r.size
    if r.size != k:
        raise InvalidArgument(f"got {r.size} average ranks for k={k}")
    if m < 2 or k < 2:
        raise InvalidArgument("need m >= 2 and k >= 2")
    chi = 12.0 * m / (k * (k + 1)) * (np.sum(r ** 2) - k * (k + 1) ** 2 / 4.0)
    denom = m * (k - 1) - chi
    if abs(denom) < 1e-12 * max(1.0, m * (k - 1)):
        raise DegenerateStatistic(
            f"m(k-1) - chi_f = {denom:g} (m={m}, k={k}, chi_f={chi:g}); ranks are perfectly consistent"
        )
    tau = (m - 1) * chi / denom
    return float(chi), float(tau)


def _betacf(a, b, x, max_iter=500, eps=1e-15):
    # modified Lentz evaluation of the incomplete beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for it in range(1, max_iter + 1):
        m2 = 2 * it
        aa = it * (b - it) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + it) * (qab + it) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise NumericError(
        f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x}, "
        f"last step {delta!r} after {max_iter} iterations)"
    )


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise InvalidArgument("betainc needs a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise InvalidArgument(f"betainc argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    lbt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
           + a * math.log(x) + b * math.log1p(-x))
    bt = math.exp(lbt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def f_cdf(x: float, df1: float, df2: float) -> float:
    if x <= 0:
        return 0.0
    return betainc(df1 / 2.0, df2 / 2.0, df1 * x / (df1 * x + df2))


def f_critical(alpha: float, df1: float, df2: float, tol: float = 1e-6, max_iter: int = 200) -> float:
    """Upper ``alpha`` quantile of the F distribution by bisection on its CDF."""
    if not 0.0 < alpha < 1.0:
        raise InvalidArgument(f"alpha {alpha} outside (0, 1)")
    if df1 < 1 or df2 < 1:
        raise InvalidArgument("degrees of freedom must be >= 1")
    target = 1.0 - alpha
    lo, hi = 0.0, 1.0
    while f_cdf(hi, df1, df2) < target:
        lo, hi = hi, hi * 2.0
        if hi > 1e12:
            raise NumericError(f"could not bracket F quantile (alpha={alpha}, df=({df1}, {df2}))")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if f_cdf(mid, df1, df2) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            return 0.5 * (lo + hi)
    raise NumericError(
        f"bisection did not reach {tol} in {max_iter} steps (alpha={alpha}, df=({df1}, {df2}), "
        f"bracket [{lo}, {hi}])"
    )


def nemenyi_cd(k: int, m: int, alpha: float = 0.05) -> float:
    table = NEMENYI_Q.get(alpha)
    if table is None or k not in table:
        raise InvalidArgument(
            f"no q value for k={k}, alpha={alpha}; supported alpha {sorted(NEMENYI_Q)} "
            f"with k in {min(NEMENYI_Q[0.05])}..{max(NEMENYI_Q[0.05])}"
        )
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    return table[k] * math.sqrt(k * (k + 1) / (6.0 * m))


def pairwise_significance(avg_ranks, cd: float) -> np.ndarray:
    r = np.asarray(avg_ranks, dtype=float)
    out = np.abs(r[:, None] - r[None, :]) >= cd
    np.fill_diagonal(out, False)
    return out


def significance_report(table: RankTable, alpha: float = 0.05) -> TestReport:
    """Friedman test plus Nemenyi post-hoc on a rank table."""
    m, k = table.m, table.k
    chi, tau = friedman_modified(table.avg_ranks, m, k)
    tau_c = f_critical(alpha, k - 1, (k - 1) * (m - 1))
    try:
        cd = nemenyi_cd(k, m, alpha)
        pair = pairwise_significance(table.avg_ranks, cd)
    except InvalidArgument:
        cd, pair = None, np.zeros((k, k), dtype=bool)
    return TestReport(chi, tau, tau_c, bool(tau > tau_c), cd, pair, alpha)


# not a pytest class
TestReport.__test__ = False
