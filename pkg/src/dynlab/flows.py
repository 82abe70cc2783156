"""Continuous-time chaotic flows: the Lorenz system and the Henon-Heiles
Hamiltonian, with attractor sampling, a sensitive-dependence diagnostic and
Poincare sections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import (Field, SectionSpec, StepFailureError, Trajectory,
                       as_state, integrate, poincare_crossings, rk4_step)


@dataclass(frozen=True)
class LorenzParams:
    """sigma: Prandtl number, r: driving temperature difference, b: geometry."""

    sigma: float = 10.0
    r: float = 28.0
    b: float = 8.0 / 3.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.sigma, self.r, self.b)):
            raise ValueError("Lorenz parameters must be finite")


def lorenz_field(params: LorenzParams) -> Field:
    """Vector field (sigma*(y-x), r*x - y - x*z, x*y - b*z)."""
    sigma, r, b = params.sigma, params.r, params.b

    def fn(state: np.ndarray) -> np.ndarray:
        if len(state) != 3:
            raise ValueError(f"Lorenz state must have dimension 3, got {len(state)}")
        x, y, z = state
        return np.array([sigma * (y - x), r * x - y - x * z, x * y - b * z])

    return fn


def lorenz_fixed_points(params: LorenzParams) -> list[np.ndarray]:
    """Zeros of the field: origin, plus the symmetric pair when r > 1."""
    pts = [np.zeros(3)]
    if params.r > 1:
        c = math.sqrt(params.b * (params.r - 1))
        pts.append(np.array([c, c, params.r - 1]))
        pts.append(np.array([-c, -c, params.r - 1]))
    return pts


def lorenz_attractor(params: LorenzParams, state0, dt: float,
                     transient_steps: int, sample_steps: int) -> Trajectory:
    """Discard ``transient_steps``, then record every post-transient step."""
    if not (0 < dt <= 0.05):
        raise ValueError("dt must lie in (0, 0.05]")
    if transient_steps < 0 or sample_steps < 0:
        raise ValueError("step counts must be >= 0")
    fn = lorenz_field(params)
    state = as_state(state0)
    for step in range(transient_steps):
        try:
            state = rk4_step(fn, state, dt)
        except StepFailureError as err:
            raise StepFailureError(f"{err} (transient step {step + 1})",
                                   step_index=step + 1,
                                   component=err.component) from None
    return integrate(fn, state, dt, sample_steps, record_every=1)


def separation_growth(params: LorenzParams, state0, delta0: float, dt: float,
                      n_steps: int) -> list[tuple[float, float]]:
    """log10 distance between twin runs offset by (delta0, 0, 0) at t=0.

    No renormalization is applied; identical trajectories report -inf.
    """
    if delta0 < 0:
        raise ValueError("delta0 must be >= 0")
    fn = lorenz_field(params)
    a = as_state(state0)
    b = a.copy()
    b[0] += delta0
    out: list[tuple[float, float]] = []
    for step in range(n_steps + 1):
        sep = float(np.linalg.norm(a - b))
        out.append((step * dt, math.log10(sep) if sep > 0 else -math.inf))
        if step < n_steps:
            a = rk4_step(fn, a, dt)
            b = rk4_step(fn, b, dt)
    return out


# --- Henon-Heiles -----------------------------------------------------------
#
# H = (px^2 + py^2)/2 + (x^2 + y^2)/2 + x^2 y - y^3/3, escape energy 1/6.
# Sections follow the standard presentation: plane x = 0 crossed with px > 0,
# recording (y, py).

HH_ESCAPE_ENERGY = 1.0 / 6.0


@dataclass(frozen=True)
class HHState:
    x: float
    y: float
    px: float
    py: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.px, self.py)):
            raise ValueError("state components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.px, self.py])


@dataclass
class PoincareSection:
    """(y, py) crossing points of the x=0, px>0 section at fixed energy."""

    points: np.ndarray           # shape (n, 2)
    energy: float
    seed_count: int
    skipped_seeds: int = 0
    crossing_times: np.ndarray = field(default_factory=lambda: np.empty(0))


def hh_field(state: np.ndarray) -> np.ndarray:
    x, y, px, py = state
    return np.array([px, py, -x - 2.0 * x * y, -y - x * x + y * y])


def hh_energy(state: HHState | np.ndarray) -> float:
    """Hamiltonian value of a phase point."""
    if isinstance(state, HHState):
        x, y, px, py = state.x, state.y, state.px, state.py
    else:
        x, y, px, py = np.asarray(state, dtype=float)
    return float(0.5 * (px * px + py * py) + 0.5 * (x * x + y * y)
                 + x * x * y - y ** 3 / 3.0)


def hh_momentum_on_section(energy: float, y: float, py: float) -> float | None:
    """px > 0 solving H = energy on x = 0; None if the radicand is negative."""
    rad = 2.0 * energy - py * py - y * y + (2.0 / 3.0) * y ** 3
    if rad < 0:
        return None
    return math.sqrt(rad)


def _section_y_bounds(energy: float) -> tuple[float, float]:
    # Feasible y-range for py=0 seeds, restricted to the connected branch
    # around the origin: the cubic opens a second, unbounded branch past
    # y ~ 1.4 whose orbits escape.  Fine-grid scan avoids root bookkeeping.
    ys = np.linspace(-1.5, 1.5, 3001)
    rad = 2.0 * energy - ys ** 2 + (2.0 / 3.0) * ys ** 3
    ok = rad >= 0
    mid = len(ys) // 2            # y = 0, always feasible for energy > 0
    lo = hi = mid
    while lo > 0 and ok[lo - 1]:
        lo -= 1
    while hi < len(ys) - 1 and ok[hi + 1]:
        hi += 1
    return float(ys[lo]), float(ys[hi])


def hh_seeds(energy: float, n_seeds: int, seed_rule: str) -> tuple[list[tuple[float, float]], int]:
    """Propose (y, py) seeds; infeasible proposals are skipped and counted.

    Rules: "grid" lays a near-square lattice over the section's bounding box,
    "axis" spreads seeds along py = 0.
    """
    y_lo, y_hi = _section_y_bounds(energy)
    p_max = math.sqrt(2.0 * energy)
    if seed_rule == "axis":
        candidates = [(y, 0.0) for y in np.linspace(y_lo, y_hi, n_seeds)]
    elif seed_rule == "grid":
        cols = math.ceil(math.sqrt(n_seeds))
        rows = math.ceil(n_seeds / cols)
        ys = np.linspace(y_lo + 1e-3, y_hi - 1e-3, cols)
        ps = np.linspace(-0.9 * p_max, 0.9 * p_max, rows) if rows > 1 else [0.0]
        candidates = [(float(y), float(p)) for p in ps for y in ys][:n_seeds]
    else:
        raise ValueError(f"unknown seed_rule {seed_rule!r}")
    seeds: list[tuple[float, float]] = []
    skipped = 0
    for y, py in candidates:
        if hh_momentum_on_section(energy, y, py) is None:
            skipped += 1
        else:
            seeds.append((y, py))
    return seeds, skipped


def hh_section(energy: float, n_seeds: int, n_crossings: int, dt: float = 1e-2,
               seed_rule: str = "grid",
               max_steps_per_seed: int = 2_000_000) -> PoincareSection:
    """Collect (y, py) at x=0, px>0 crossings for each feasible seed.

    Seeds start on the section with px solved from the energy.  Crossing
    points are linearly interpolated between RK4 samples; seeds are integrated
    independently and merged in seed order.
    """
    if not (0 < energy <= HH_ESCAPE_ENERGY):
        raise ValueError(f"energy must lie in (0, {HH_ESCAPE_ENERGY}]")
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    seeds, skipped = hh_seeds(energy, n_seeds, seed_rule)
    section = SectionSpec(coordinate_index=0, level=0.0, direction=+1)
    points: list[tuple[float, float]] = []
    times: list[float] = []
    for y0, py0 in seeds:
        px0 = hh_momentum_on_section(energy, y0, py0)
        assert px0 is not None
        state = np.array([0.0, y0, px0, py0])
        collected = 0
        # Chunked integration: scan each chunk for crossings until quota met.
        chunk = 4096
        steps_done = 0
        t_base = 0.0
        while collected < n_crossings and steps_done < max_steps_per_seed:
            traj = integrate(hh_field, state, dt, chunk, record_every=1)
            for t, s in poincare_crossings(traj, section):
                if s[2] <= 0:
                    continue
                points.append((float(s[1]), float(s[3])))
                times.append(t_base + t)
                collected += 1
                if collected >= n_crossings:
                    break
            state = traj.states[-1]
            t_base += traj.times[-1]
            steps_done += chunk
    pts = np.array(points) if points else np.empty((0, 2))
    return PoincareSection(points=pts, energy=energy, seed_count=len(seeds),
                           skipped_seeds=skipped,
                           crossing_times=np.array(times))
