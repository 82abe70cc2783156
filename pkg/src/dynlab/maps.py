"""Discrete-time dynamics: the logistic map (bifurcation diagram, superstable
parameters, period-doubling ratio estimates) and the quadratic planar map with
its strange attractor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Superstable parameter searches bracket against the period-doubling
# accumulation point; this guard sits just above it.
ACCUMULATION_GUARD = 3.5699457

HENON_ESCAPE_RADIUS = 1e6


class BracketError(RuntimeError):
    """No sign change found while isolating a superstable parameter."""

    def __init__(self, m: int, message: str):
        super().__init__(message)
        self.m = m


class EscapeError(RuntimeError):
    """A planar-map orbit left the escape radius."""

    def __init__(self, iteration: int, point: tuple[float, float]):
        super().__init__(f"orbit escaped at iteration {iteration}: {point}")
        self.iteration = iteration
        self.point = point


@dataclass(frozen=True)
class LogisticParams:
    r: float

    def __post_init__(self):
        if not (0 < self.r <= 4):
            raise ValueError("r must lie in (0, 4]")


@dataclass(frozen=True)
class HenonParams:
    a: float = 1.4
    b: float = 0.3

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("parameters must be finite")


@dataclass
class BifurcationCloud:
    points: np.ndarray        # shape (n, 2) of (r, x) pairs
    r_min: float
    r_max: float
    samples_per_r: int
    transient: int


def logistic_orbit(params: LogisticParams, x0: float, transient: int,
                   n: int) -> np.ndarray:
    """n post-transient iterates of x -> r x (1 - x); stays in [0, 1]."""
    if not (0.0 <= x0 <= 1.0):
        raise ValueError("x0 must lie in [0, 1]")
    if transient < 0 or n < 0:
        raise ValueError("transient and n must be >= 0")
    r = params.r
    x = x0
    for _ in range(transient):
        x = r * x * (1.0 - x)
    out = np.empty(n)
    for i in range(n):
        x = r * x * (1.0 - x)
        out[i] = x
    return out


def bifurcation_diagram(r_min: float, r_max: float, n_r: int, transient: int,
                        samples: int, x0: float = 0.5) -> BifurcationCloud:
    """Post-transient iterates for n_r evenly spaced r values.

    Every column starts from the same x0 (default: the critical point 1/2,
    which lies in the basin of the attracting cycle whenever one exists).
    Deterministic: identical inputs give bit-identical clouds.
    """
    if not (0 < r_min < r_max <= 4):
        raise ValueError("need 0 < r_min < r_max <= 4")
    if n_r < 2:
        raise ValueError("n_r must be >= 2")
    if not (0.0 <= x0 <= 1.0):
        raise ValueError("x0 must lie in [0, 1]")
    rs = np.linspace(r_min, r_max, n_r)
    x = np.full(n_r, x0)
    for _ in range(transient):
        x = rs * x * (1.0 - x)
    pts = np.empty((n_r * samples, 2))
    for i in range(samples):
        x = rs * x * (1.0 - x)
        pts[i::samples, 0] = rs
        pts[i::samples, 1] = x
    return BifurcationCloud(points=pts, r_min=r_min, r_max=r_max,
                            samples_per_r=samples, transient=transient)


def _critical_orbit_offset(r: float, n: int) -> float:
    """f_r^n(1/2) - 1/2 for the logistic map."""
    x = 0.5
    for _ in range(n):
        x = r * x * (1.0 - x)
    return x - 0.5


def superstable_params(count: int, tol: float = 1e-12,
                       scan_points: int = 256) -> list[float]:
    """Parameters R_1..R_count where the critical point is 2^(m-1)-periodic.

    R_1 = 2 has a closed form; each later R_m is the unique zero of
    f^(2^(m-1))(1/2) - 1/2 between R_(m-1) and the accumulation guard,
    isolated by a scan for a sign change and refined by bisection.  Raises
    BracketError when double precision can no longer separate the bracket.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    rs = [2.0]
    for m in range(2, count + 1):
        n = 2 ** (m - 1)
        lo = rs[-1]
        hi = ACCUMULATION_GUARD
        grid = np.linspace(lo, hi, scan_points + 1)[1:]
        vals = [_critical_orbit_offset(r, n) for r in grid]
        bracket = None
        for i in range(len(grid) - 1):
            if vals[i] == 0.0:
                bracket = (grid[i], grid[i])
                break
            if vals[i] * vals[i + 1] < 0:
                bracket = (grid[i], grid[i + 1])
                break
        if bracket is None:
            raise BracketError(
                m, f"no sign change isolating R_{m}; double precision "
                   f"exhausted past R_{m - 1} = {lo!r}")
        a, b = bracket
        fa = _critical_orbit_offset(a, n)
        while b - a > tol:
            mid = 0.5 * (a + b)
            if mid == a or mid == b:
                break
            fm = _critical_orbit_offset(mid, n)
            if fm == 0.0:
                a = b = mid
                break
            if fa * fm < 0:
                b = mid
            else:
                a, fa = mid, fm
        root = 0.5 * (a + b)
        if root <= rs[-1]:
            raise BracketError(m, f"R_{m} bracket collapsed onto R_{m - 1}")
        rs.append(root)
    return rs


def feigenbaum_delta(count: int) -> list[float]:
    """Ratio estimates (R_m - R_(m-1)) / (R_(m+1) - R_m) for m = 2..count-1."""
    if count < 4:
        raise ValueError("count must be >= 4")
    rs = superstable_params(count)
    return [(rs[m - 1] - rs[m - 2]) / (rs[m] - rs[m - 1])
            for m in range(2, count)]


def henon_map(params: HenonParams, x: float, y: float) -> tuple[float, float]:
    return y + 1.0 - params.a * x * x, params.b * x


def henon_orbit(params: HenonParams, x0: float, y0: float, transient: int,
                n: int) -> np.ndarray:
    """n post-transient iterates of (x, y) -> (y + 1 - a x^2, b x).

    Raises EscapeError with the iteration index once |x| exceeds the escape
    radius; runaway orbits are never silently clipped.
    """
    if transient < 0 or n < 0:
        raise ValueError("transient and n must be >= 0")
    x, y = float(x0), float(y0)
    out = np.empty((n, 2))
    for i in range(transient + n):
        x, y = henon_map(params, x, y)
        if abs(x) > HENON_ESCAPE_RADIUS:
            raise EscapeError(i + 1, (x, y))
        if i >= transient:
            out[i - transient] = (x, y)
    return out


def henon_fixed_points(params: HenonParams) -> list[tuple[float, float]]:
    """Real solutions of a x^2 + (1-b) x - 1 = 0 with y = b x, sorted by x."""
    a, b = params.a, params.b
    if a == 0:
        raise ValueError("a = 0 is degenerate (map is affine)")
    disc = (1.0 - b) ** 2 + 4.0 * a
    if disc < 0:
        return []
    root = math.sqrt(disc)
    xs = sorted([(-(1.0 - b) + root) / (2.0 * a),
                 (-(1.0 - b) - root) / (2.0 * a)])
    return [(x, b * x) for x in xs]
