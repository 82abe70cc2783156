"""Point counts of the curve family y^2 = x^3 - d^2 x over prime fields and
the cumulative product diagnostic whose log-log slope estimates the rank.

The d-th family member is the congruent-number curve (coefficients a = -d^2,
b = 0); its historical ranks for d in {1, 5, 34, 1254, 29274} are 0..4.
N_p is the AFFINE solution count by default (no point at infinity); the
projective count N_p + 1 sits behind a flag and is the convention whose
product series actually grows like C (log X)^rank - the affine product picks
up an extra factor ~1/log X (Mertens), shifting the slope down by one.
Primes dividing 2d are "bad" and skipped entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Above this, the O(p)-memory residue table is abandoned for the (slow)
# scalar Euler-criterion fallback.
_TABLE_LIMIT = 10_000_000


class BadPrimeError(ValueError):
    """The prime divides 2d, where the reduction is singular or even."""

    def __init__(self, p: int, d: int):
        super().__init__(f"p={p} divides 2d for d={d}; no good reduction")
        self.p = p
        self.d = d


@dataclass(frozen=True)
class CurveD:
    """The curve y^2 = x^3 - d^2 x; smooth for every d >= 1."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be a positive integer")

    @property
    def a_coeff(self) -> int:
        return -self.d * self.d


@dataclass
class ProductSeries:
    """Cumulative log products sum(ln(N_q/q)) over good primes q <= p."""

    primes: np.ndarray        # increasing good primes
    log_products: np.ndarray  # same length
    d: int
    X: int
    projective: bool = False
    bad_primes: list[int] = field(default_factory=list)


@dataclass
class SlopeFit:
    slope: float       # estimates the rank
    intercept: float   # estimates ln C
    residual: float    # RMS of fit residuals
    p_min_used: int


def primes_upto(X: int) -> list[int]:
    """All primes <= X, ascending; empty for X < 2."""
    if X < 2:
        return []
    sieve = np.ones(X + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(math.isqrt(X)) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return [int(p) for p in np.flatnonzero(sieve)]


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    # Deterministic Miller-Rabin for 64-bit range.
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def count_points_mod_p(curve: CurveD, p: int, projective: bool = False) -> int:
    """N_p = sum over x of (1 + chi(x^3 - d^2 x)), chi the quadratic character.

    Equals the brute-force count of (x, y) pairs satisfying the curve
    equation mod p.  ``projective`` adds the point at infinity.
    """
    if not _is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if (2 * curve.d) % p == 0:
        raise BadPrimeError(p, curve.d)
    dsq = curve.d * curve.d
    if p <= _TABLE_LIMIT:
        n = _count_table(dsq, p)
    else:
        n = _count_scalar(dsq, p)
    return n + 1 if projective else n


def _count_table(dsq: int, p: int) -> int:
    ys = np.arange(1, p, dtype=np.int64)
    chi = np.full(p, -1, dtype=np.int64)
    chi[(ys * ys) % p] = 1
    chi[0] = 0
    x = np.arange(p, dtype=np.int64)
    # Interleave reductions so intermediates stay within int64 for any p that
    # fits in memory.
    rhs = ((x * x % p) * x - (dsq % p) * x) % p
    return int(p + chi[rhs].sum())


def _count_scalar(dsq: int, p: int) -> int:
    half = (p - 1) // 2
    total = p
    for x in range(p):
        t = (x * x % p * x - dsq * x) % p
        if t == 0:
            continue
        total += 1 if pow(t, half, p) == 1 else -1
    return total


def count_points_brute(curve: CurveD, p: int) -> int:
    """Exhaustive affine count over all (x, y) in [0, p)^2.  Oracle-grade;
    O(p^2) work and only sensible for small p."""
    dsq = curve.d * curve.d
    count = 0
    for x in range(p):
        rhs = (x * x * x - dsq * x) % p
        for y in range(p):
            if (y * y) % p == rhs:
                count += 1
    return count


def product_series(curve: CurveD, X: int, projective: bool = False) -> ProductSeries:
    """Cumulative sums of ln(N_p / p) over good primes p <= X, ascending.

    Use ``projective=True`` when fitting rank slopes: only that convention
    has the C (log X)^rank growth.
    """
    if X < 3:
        raise ValueError("X must be >= 3")
    logs = []
    good = []
    bad = []
    acc = 0.0
    for p in primes_upto(X):
        if (2 * curve.d) % p == 0:
            bad.append(p)
            continue
        n_p = count_points_mod_p(curve, p, projective=projective)
        if n_p <= 0:
            raise RuntimeError(
                f"count {n_p} <= 0 at p={p}; implementation bug")
        acc += math.log(n_p / p)
        good.append(p)
        logs.append(acc)
    return ProductSeries(primes=np.array(good), log_products=np.array(logs),
                         d=curve.d, X=X, projective=projective,
                         bad_primes=bad)


def rank_slope(series: ProductSeries, p_min: int = 100) -> SlopeFit:
    """OLS fit of log products against ln ln p over primes >= p_min.

    The slope estimates the rank and the intercept ln C of the conjectured
    C (log X)^r growth (projective series; the affine slope sits one lower).
    """
    mask = series.primes >= p_min
    if int(mask.sum()) < 10:
        raise ValueError(
            f"need at least 10 points with p >= {p_min}, have {int(mask.sum())}")
    x = np.log(np.log(series.primes[mask].astype(float)))
    y = series.log_products[mask]
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return SlopeFit(slope=float(slope), intercept=float(intercept),
                    residual=float(np.sqrt(np.mean(resid ** 2))),
                    p_min_used=p_min)
