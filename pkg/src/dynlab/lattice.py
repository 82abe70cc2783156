"""Nonlinear one-dimensional wave experiments.

Two systems live here: a fixed-end chain of unit masses with quadratically
nonlinear springs (normal-mode energy bookkeeping and recurrence detection),
and a periodic dispersive wave equation advanced with the explicit
three-level leapfrog scheme in conservation form, with pulse tracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import InstabilityError


@dataclass(frozen=True)
class FputParams:
    """Chain with n_masses+1 nodes; endpoints u_0 = u_N = 0 are pinned."""

    n_masses: int = 32       # N; interior masses are j = 1..N-1
    alpha: float = 0.25      # quadratic nonlinearity strength
    dt: float = 0.05

    def __post_init__(self):
        if self.n_masses < 2:
            raise ValueError("n_masses must be >= 2")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass
class FieldHistory:
    """Snapshots of a 1-D field at strictly increasing times."""

    times: np.ndarray    # shape (n,)
    fields: np.ndarray   # shape (n, m)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.fields = np.asarray(self.fields, dtype=float)
        if len(self.times) != len(self.fields):
            raise ValueError("times and fields must have equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")


@dataclass
class ModeEnergySeries:
    """Per-mode energies E_k(t), k = 1..k_max, for the chain."""

    times: np.ndarray     # shape (n,)
    energies: np.ndarray  # shape (n, k_max)
    k_max: int

    def total(self) -> np.ndarray:
        return self.energies.sum(axis=1)

    def share(self, mode: int) -> np.ndarray:
        """Fraction of the mode-sum carried by ``mode`` (1-based)."""
        if not (1 <= mode <= self.k_max):
            raise ValueError(f"mode must be in 1..{self.k_max}")
        tot = self.total()
        out = np.ones_like(tot)
        nz = tot > 0
        out[nz] = self.energies[nz, mode - 1] / tot[nz]
        return out


def fput_accel(u: np.ndarray, alpha: float) -> np.ndarray:
    """Accelerations u_{j+1} - 2u_j + u_{j-1} + alpha[(u_{j+1}-u_j)^2 - (u_j-u_{j-1})^2].

    ``u`` holds N+1 node displacements with pinned endpoints; the returned
    array has zero endpoint entries.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or len(u) < 3:
        raise ValueError("u must be 1-D with at least 3 nodes")
    if u[0] != 0.0 or u[-1] != 0.0:
        raise ValueError("endpoint displacements must be zero (fixed ends)")
    d = np.diff(u)                       # d[j] = u[j+1] - u[j]
    acc = np.zeros_like(u)
    acc[1:-1] = d[1:] - d[:-1] + alpha * (d[1:] ** 2 - d[:-1] ** 2)
    return acc


def fput_energy(u: np.ndarray, udot: np.ndarray, alpha: float) -> float:
    """Total energy: kinetic + harmonic + cubic spring potential."""
    d = np.diff(u)
    return float(0.5 * np.dot(udot, udot) + 0.5 * np.dot(d, d)
                 + (alpha / 3.0) * np.sum(d ** 3))


def _mode_matrix(n: int) -> np.ndarray:
    j = np.arange(1, n)
    k = np.arange(1, n)
    return np.sin(np.outer(k, j) * math.pi / n)


def mode_energies(u: np.ndarray, udot: np.ndarray, n: int) -> np.ndarray:
    """Energies of the N-1 sine normal modes of the linear chain.

    a_k = sqrt(2/N) sum_j u_j sin(jk pi/N), omega_k = 2 sin(k pi / 2N),
    E_k = (adot_k^2 + omega_k^2 a_k^2) / 2.  The sum over k equals the
    harmonic part of the total energy.
    """
    u = np.asarray(u, dtype=float)
    udot = np.asarray(udot, dtype=float)
    if len(u) != n + 1 or len(udot) != n + 1:
        raise ValueError(f"arrays must have length N+1 = {n + 1}")
    scale = math.sqrt(2.0 / n)
    basis = _mode_matrix(n)
    a = scale * basis @ u[1:-1]
    adot = scale * basis @ udot[1:-1]
    omega = 2.0 * np.sin(np.arange(1, n) * math.pi / (2 * n))
    return 0.5 * (adot ** 2 + omega ** 2 * a ** 2)


def fput_simulate(params: FputParams, init_mode: int, amplitude: float,
                  t_end: float, record_dt: float,
                  drift_tol: float = 1e-4) -> tuple[FieldHistory, ModeEnergySeries]:
    """Velocity-Verlet run from a single sine mode at rest.

    Initial condition u_j = amplitude * sin(j * init_mode * pi / N) with zero
    velocities.  Displacements and mode energies are recorded every
    ``record_dt``; the run aborts if total energy drifts more than
    ``drift_tol`` relative.
    """
    n = params.n_masses
    if not (1 <= init_mode <= n - 1):
        raise ValueError(f"init_mode must be in 1..{n - 1}")
    if t_end < 0 or record_dt <= 0:
        raise ValueError("t_end must be >= 0 and record_dt > 0")
    dt, alpha = params.dt, params.alpha
    stride = max(1, round(record_dt / dt))
    n_steps = round(t_end / dt)

    j = np.arange(n + 1)
    u = amplitude * np.sin(j * init_mode * math.pi / n)
    u[0] = u[-1] = 0.0
    udot = np.zeros(n + 1)

    e0 = fput_energy(u, udot, alpha)
    e_ref = max(abs(e0), 1e-12)
    times = [0.0]
    fields = [u.copy()]
    energies = [mode_energies(u, udot, n)]

    a = fput_accel(u, alpha)
    for step in range(1, n_steps + 1):
        u = u + dt * udot + (0.5 * dt * dt) * a
        u[0] = u[-1] = 0.0
        a_new = fput_accel(u, alpha)
        udot = udot + (0.5 * dt) * (a + a_new)
        a = a_new
        if step % stride == 0 or step == n_steps:
            if not np.all(np.isfinite(u)):
                raise InstabilityError(
                    f"non-finite displacement at step {step}", step_index=step)
            drift = abs(fput_energy(u, udot, alpha) - e0) / e_ref
            if drift > drift_tol:
                raise InstabilityError(
                    f"energy drift {drift:.3e} exceeds {drift_tol:.0e} "
                    f"at t={step * dt:g}", step_index=step)
            times.append(step * dt)
            fields.append(u.copy())
            energies.append(mode_energies(u, udot, n))

    history = FieldHistory(np.array(times), np.array(fields))
    series = ModeEnergySeries(np.array(times), np.array(energies), k_max=n - 1)
    return history, series


def recurrence_time(series: ModeEnergySeries, mode: int,
                    share: float = 0.95) -> float | None:
    """First time after the initial collapse at which the mode regains ``share``.

    The collapse marker t_drop is the first time the mode's share falls below
    share/2; returns the first later time with share >= ``share``, or None if
    the share never drops or never recovers.
    """
    if not (0 < share < 1):
        raise ValueError("share must lie in (0, 1)")
    if len(series.times) == 0:
        raise ValueError("empty series")
    shares = series.share(mode)
    dropped = np.flatnonzero(shares < share / 2.0)
    if dropped.size == 0:
        return None
    after = np.flatnonzero((series.times > series.times[dropped[0]])
                           & (shares >= share))
    if after.size == 0:
        return None
    return float(series.times[after[0]])


# --- Periodic dispersive wave (Zabusky-Kruskal discretization) ---------------


@dataclass(frozen=True)
class KdvParams:
    """Periodic grid and step sizes for v_t + v v_x + delta^2 v_xxx = 0.

    The explicit three-level scheme is stable for
    dt <= dx^3 / (4 delta^2 + u_ref dx^2); u_ref bounds the field amplitude
    expected during the run and the bound is enforced at construction.
    """

    delta: float = 0.022
    dx: float = 2.0 / 256
    dt: float = 1e-4
    length: float = 2.0
    u_ref: float = 3.0

    def __post_init__(self):
        if self.dx <= 0 or self.dt <= 0 or self.length <= 0:
            raise ValueError("dx, dt and length must be positive")
        n = self.length / self.dx
        if abs(n - round(n)) > 1e-9:
            raise ValueError("length must be an integer multiple of dx")
        if self.dt > self.dt_max():
            raise ValueError(
                f"dt={self.dt:g} violates the stability bound {self.dt_max():g}")

    def dt_max(self) -> float:
        return self.dx ** 3 / (4.0 * self.delta ** 2 + self.u_ref * self.dx ** 2)

    @property
    def n_cells(self) -> int:
        return round(self.length / self.dx)

    def grid(self) -> np.ndarray:
        return np.arange(self.n_cells) * self.dx


def _kdv_rhs(v: np.ndarray, params: KdvParams) -> np.ndarray:
    vp = np.roll(v, -1)   # v_{i+1}
    vm = np.roll(v, 1)    # v_{i-1}
    vpp = np.roll(v, -2)
    vmm = np.roll(v, 2)
    nonlin = (vp + v + vm) * (vp - vm) / (6.0 * params.dx)
    dispersive = (vpp - 2.0 * vp + 2.0 * vm - vmm) \
        * params.delta ** 2 / (2.0 * params.dx ** 3)
    return -nonlin - dispersive


def kdv_step(v: np.ndarray, prev_v: np.ndarray, params: KdvParams) -> np.ndarray:
    """Three-level leapfrog update; the nonlinear term is in conservation form
    so the lattice sum of v is preserved to round-off.
    """
    v = np.asarray(v, dtype=float)
    prev_v = np.asarray(prev_v, dtype=float)
    if v.shape != prev_v.shape or v.ndim != 1 or len(v) < 5:
        raise ValueError("v and prev_v must be equal-length 1-D arrays of >= 5 cells")
    with np.errstate(over="ignore", invalid="ignore"):
        out = prev_v + 2.0 * params.dt * _kdv_rhs(v, params)
    if not np.all(np.isfinite(out)):
        raise InstabilityError("non-finite field value after step")
    return out


def kdv_simulate(params: KdvParams, init: np.ndarray, t_end: float,
                 record_dt: float) -> FieldHistory:
    """Advance ``init`` to ``t_end`` recording every ``record_dt``.

    The three-level scheme is bootstrapped with a single forward-Euler step.
    """
    v_prev = np.asarray(init, dtype=float).copy()
    if len(v_prev) != params.n_cells:
        raise ValueError(f"init must have {params.n_cells} cells")
    if t_end < 0 or record_dt <= 0:
        raise ValueError("t_end must be >= 0 and record_dt > 0")
    dt = params.dt
    stride = max(1, round(record_dt / dt))
    n_steps = round(t_end / dt)
    times = [0.0]
    fields = [v_prev.copy()]
    if n_steps == 0:
        return FieldHistory(np.array(times), np.array(fields))

    v = v_prev + dt * _kdv_rhs(v_prev, params)
    if 1 % stride == 0 or n_steps == 1:
        times.append(dt)
        fields.append(v.copy())
    for step in range(2, n_steps + 1):
        try:
            v, v_prev = kdv_step(v, v_prev, params), v
        except InstabilityError:
            raise InstabilityError(
                f"instability at step {step} (t={step * dt:g})",
                step_index=step) from None
        if step % stride == 0 or step == n_steps:
            times.append(step * dt)
            fields.append(v.copy())
    return FieldHistory(np.array(times), np.array(fields))


def soliton_field(params: KdvParams, amplitude: float,
                  center: float) -> np.ndarray:
    """Solitary-wave profile A sech^2(k(x - center)), k = sqrt(A/(12 delta^2)).

    Travels at speed A/3 under the lattice dynamics; used for collision
    experiments and as a canonical initial condition.
    """
    if amplitude <= 0:
        raise ValueError("amplitude must be positive")
    x = params.grid()
    k = math.sqrt(amplitude / (12.0 * params.delta ** 2))
    return amplitude / np.cosh(k * (x - center)) ** 2


def two_soliton_field(params: KdvParams) -> np.ndarray:
    """Canonical collision setup: a tall pulse chasing a short one."""
    return (soliton_field(params, 1.0, 0.25 * params.length)
            + soliton_field(params, 0.4, 0.6 * params.length))


def detect_pulses(field: np.ndarray, dx: float,
                  min_height: float) -> list[tuple[float, float]]:
    """Local maxima above ``min_height`` with parabolic sub-grid refinement.

    Periodic neighbours are used at the ends; pulses come back sorted by
    position.
    """
    if min_height <= 0:
        raise ValueError("min_height must be positive")
    f = np.asarray(field, dtype=float)
    left = np.roll(f, 1)
    right = np.roll(f, -1)
    peaks = np.flatnonzero((f > left) & (f >= right) & (f > min_height))
    out = []
    n = len(f)
    for i in peaks:
        a, b, c = left[i], f[i], right[i]
        denom = a - 2.0 * b + c
        offset = 0.0 if denom == 0 else 0.5 * (a - c) / denom
        height = b + 0.25 * (c - a) * offset
        pos = ((i + offset) % n) * dx
        out.append((float(pos), float(height)))
    return sorted(out)
