"""Shared fixed-step integration and hyperplane-crossing machinery.

All continuous-time experiments in this package integrate with the classical
4th-order Runge-Kutta scheme (fixed step, bit-reproducible) or, for
Hamiltonian lattices, the velocity-Verlet leapfrog.  Every accepted step is
checked for non-finite components so a blow-up is reported at the step where
it happened instead of surfacing later as NaN soup.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Field = Callable[[np.ndarray], np.ndarray]


class StepFailureError(RuntimeError):
    """An integration step produced a non-finite state component."""

    def __init__(self, message: str, step_index: int | None = None,
                 component: int | None = None):
        super().__init__(message)
        self.step_index = step_index
        self.component = component


class InstabilityError(StepFailureError):
    """A simulation left its stability envelope (energy drift, NaN field...)."""


def as_state(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Coerce to a 1-D float64 state vector and validate it."""
    state = np.asarray(values, dtype=float)
    if state.ndim != 1 or state.size == 0:
        raise ValueError("state vector must be 1-D and non-empty")
    return state


def _check_finite(state: np.ndarray, step_index: int | None = None) -> np.ndarray:
    bad = np.flatnonzero(~np.isfinite(state))
    if bad.size:
        comp = int(bad[0])
        where = "" if step_index is None else f" at step {step_index}"
        raise StepFailureError(
            f"non-finite value in component {comp}{where}",
            step_index=step_index, component=comp)
    return state


@dataclass
class Trajectory:
    """Time-ordered state samples: ``times[i]`` is when ``states[i]`` held."""

    times: np.ndarray   # shape (n,), strictly increasing
    states: np.ndarray  # shape (n, dim)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.times.ndim != 1 or self.states.ndim != 2:
            raise ValueError("times must be 1-D and states 2-D")
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class SectionSpec:
    """Hyperplane section: coordinate ``coordinate_index`` crossing ``level``.

    ``direction`` is +1 for upward crossings, -1 for downward, 0 for both.
    """

    coordinate_index: int
    level: float = 0.0
    direction: int = 0

    def __post_init__(self):
        if self.direction not in (-1, 0, 1):
            raise ValueError("direction must be -1, 0 or +1")


def rk4_step(field: Field, state: np.ndarray, dt: float) -> np.ndarray:
    """One classical RK4 step of ``dstate/dt = field(state)``.

    Pure function; raises StepFailureError naming the offending component if
    the update is non-finite.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    state = np.asarray(state, dtype=float)
    k1 = field(state)
    k2 = field(state + 0.5 * dt * k1)
    k3 = field(state + 0.5 * dt * k2)
    k4 = field(state + dt * k3)
    out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _check_finite(out)


def leapfrog_step(accel: Field, positions: np.ndarray, velocities: np.ndarray,
                  dt: float) -> tuple[np.ndarray, np.ndarray]:
    """One velocity-Verlet step for ``d2x/dt2 = accel(x)``.

    Symplectic and exactly time-reversible: stepping +dt then -dt returns the
    inputs to round-off.  ``accel`` must depend on positions only.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    positions = np.asarray(positions, dtype=float)
    velocities = np.asarray(velocities, dtype=float)
    if positions.shape != velocities.shape:
        raise ValueError(
            f"positions shape {positions.shape} != velocities shape "
            f"{velocities.shape}")
    a0 = accel(positions)
    x1 = positions + dt * velocities + (0.5 * dt * dt) * a0
    a1 = accel(x1)
    v1 = velocities + (0.5 * dt) * (a0 + a1)
    return _check_finite(x1), _check_finite(v1)


def integrate(field: Field, state0: np.ndarray, dt: float, n_steps: int,
              record_every: int = 1) -> Trajectory:
    """Fixed-step RK4 run recording every ``record_every``-th step.

    Returns floor(n_steps/record_every)+1 samples starting with state0 at
    t=0.  Step failures are re-raised with the step index attached.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    state = as_state(state0)
    times = [0.0]
    states = [state.copy()]
    for step in range(1, n_steps + 1):
        try:
            state = rk4_step(field, state, dt)
        except StepFailureError as err:
            raise StepFailureError(
                f"{err} (step {step})", step_index=step,
                component=err.component) from None
        if step % record_every == 0:
            times.append(step * dt)
            states.append(state.copy())
    return Trajectory(np.array(times), np.array(states))


def poincare_crossings(traj: Trajectory,
                       section: SectionSpec) -> list[tuple[float, np.ndarray]]:
    """Linearly interpolated section crossings of a sampled trajectory.

    For each consecutive sample pair straddling ``section.level`` in the
    requested direction, returns (time, state) of the interpolated crossing,
    ordered by time.  No crossings yields an empty list.
    """
    idx = section.coordinate_index
    if idx >= traj.dim:
        raise ValueError(
            f"coordinate_index {idx} out of range for dimension {traj.dim}")
    level = section.level
    coord = traj.states[:, idx]
    out: list[tuple[float, np.ndarray]] = []
    for i in range(len(traj) - 1):
        a, b = coord[i], coord[i + 1]
        up = a < level <= b
        down = a > level >= b
        if section.direction == 1 and not up:
            continue
        if section.direction == -1 and not down:
            continue
        if section.direction == 0 and not (up or down):
            continue
        theta = 0.0 if b == a else (level - a) / (b - a)
        t = traj.times[i] + theta * (traj.times[i + 1] - traj.times[i])
        state = traj.states[i] + theta * (traj.states[i + 1] - traj.states[i])
        out.append((float(t), state))
    return out
