import math

import numpy as np
import pytest

from dynlab.numerics import (SectionSpec, StepFailureError, Trajectory,
                             integrate, leapfrog_step, poincare_crossings,
                             rk4_step)


def test_rk4_zero_field_fixes_state():
    state = np.array([1.0, 2.0])
    out = rk4_step(lambda s: np.zeros_like(s), state, 0.1)
    assert np.array_equal(out, state)


def test_rk4_exponential_step():
    out = rk4_step(lambda s: s, np.array([1.0]), 0.01)
    assert abs(out[0] - math.exp(0.01)) < 1e-10


def _global_error(dt):
    state = np.array([1.0])
    for _ in range(round(1.0 / dt)):
        state = rk4_step(lambda s: s, state, dt)
    return abs(state[0] - math.e)


def test_rk4_fourth_order_convergence():
    """Global error on xdot = x over [0,1] shrinks ~16x per dt halving."""
    errors = [_global_error(dt) for dt in (1e-2, 5e-3, 2.5e-3)]
    for e_coarse, e_fine in zip(errors, errors[1:]):
        order = math.log2(e_coarse / e_fine)
        assert 3.8 <= order <= 4.2


def test_rk4_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        rk4_step(lambda s: s, np.array([1.0]), 0.0)


def test_rk4_step_failure_names_component():
    def blowup(s):
        with np.errstate(over="ignore"):
            return np.array([s[0], s[1] ** 3])

    with pytest.raises(StepFailureError) as info:
        state = np.array([0.0, 1e200])
        rk4_step(blowup, state, 10.0)
    assert info.value.component == 1


def test_leapfrog_free_motion():
    x, v = leapfrog_step(lambda p: np.zeros_like(p),
                         np.array([0.0]), np.array([1.0]), 0.5)
    assert x[0] == 0.5 and v[0] == 1.0


def test_leapfrog_harmonic_energy_drift():
    """Symplectic: the energy wobbles within O(dt^2) but shows no secular
    drift over 1e4 steps (windowed means agree to 1e-6)."""
    accel = lambda p: -p
    x, v = np.array([1.0]), np.array([0.0])
    energies = [0.5 * (v[0] ** 2 + x[0] ** 2)]
    for _ in range(10_000):
        x, v = leapfrog_step(accel, x, v, 0.01)
        energies.append(0.5 * (v[0] ** 2 + x[0] ** 2))
    energies = np.array(energies)
    assert np.abs(energies - energies[0]).max() < 2e-5  # bounded wobble
    assert abs(energies[-1000:].mean() - energies[:1000].mean()) < 1e-6


def test_leapfrog_time_reversible():
    accel = lambda p: -np.sin(p)
    x0, v0 = np.array([0.3, -0.7]), np.array([0.2, 0.9])
    x1, v1 = leapfrog_step(accel, x0, v0, 0.05)
    # Reverse: negate velocity, step, negate again.
    x2, v2 = leapfrog_step(accel, x1, -v1, 0.05)
    assert np.max(np.abs(x2 - x0)) < 1e-12
    assert np.max(np.abs(-v2 - v0)) < 1e-12


def test_leapfrog_dimension_mismatch():
    with pytest.raises(ValueError):
        leapfrog_step(lambda p: -p, np.zeros(2), np.zeros(3), 0.1)


def test_integrate_zero_steps():
    traj = integrate(lambda s: s, np.array([2.0]), 0.1, 0)
    assert len(traj) == 1
    assert traj.times[0] == 0.0
    assert traj.states[0, 0] == 2.0


def test_integrate_exponential():
    traj = integrate(lambda s: s, np.array([1.0]), 0.01, 100)
    assert abs(traj.states[-1, 0] - math.e) < 1e-8


def test_integrate_record_cadence():
    traj = integrate(lambda s: s, np.array([1.0]), 0.01, 100, record_every=10)
    assert len(traj) == 11


def test_integrate_attaches_step_index():
    def blowup(s):
        with np.errstate(over="ignore"):
            return s ** 3

    with pytest.raises(StepFailureError) as info:
        integrate(blowup, np.array([10.0]), 1.0, 50)
    assert info.value.step_index is not None


def test_trajectory_invariants():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0]), np.zeros((2, 1)))


def test_section_spec_validation():
    with pytest.raises(ValueError):
        SectionSpec(coordinate_index=0, direction=2)


def test_crossing_straight_line():
    traj = Trajectory(np.array([0.0, 1.0]),
                      np.array([[-1.0, 0.0], [1.0, 0.0]]))
    hits = poincare_crossings(traj, SectionSpec(0, 0.0, 0))
    assert len(hits) == 1
    t, state = hits[0]
    assert t == 0.5
    assert np.allclose(state, [0.0, 0.0])


def test_crossing_circle_direction():
    t = np.linspace(0.1, 19.5, 4000)
    traj = Trajectory(t, np.column_stack([np.cos(t), np.sin(t)]))
    hits = poincare_crossings(traj, SectionSpec(1, 0.0, +1))
    # Upward y-crossings of the unit circle happen near x = +1, 2*pi apart.
    assert len(hits) == 3
    for time, state in hits:
        assert abs(state[0] - 1.0) < 1e-5
    gaps = np.diff([h[0] for h in hits])
    assert np.allclose(gaps, 2 * math.pi, atol=1e-5)


def test_crossing_constant_trajectory_empty():
    traj = Trajectory(np.array([0.0, 1.0, 2.0]), np.full((3, 2), 5.0))
    assert poincare_crossings(traj, SectionSpec(0, 0.0, 0)) == []


def test_crossing_times_increasing_and_on_level():
    """Property: crossing times strictly increase and the section coordinate
    lands on the level to 1e-12 of the segment span."""
    rng = np.random.default_rng(42)
    for _ in range(20):
        n = 50
        times = np.cumsum(rng.uniform(0.01, 0.3, n))
        states = rng.normal(0.0, 2.0, (n, 3))
        traj = Trajectory(times, states)
        level = rng.normal()
        hits = poincare_crossings(traj, SectionSpec(1, level, 0))
        ts = [h[0] for h in hits]
        assert all(a < b for a, b in zip(ts, ts[1:]))
        for i, (t, state) in enumerate(hits):
            span = np.abs(np.diff(states[:, 1])).max()
            assert abs(state[1] - level) <= 1e-12 * max(span, 1.0)


def test_crossing_index_out_of_range():
    traj = Trajectory(np.array([0.0, 1.0]), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        poincare_crossings(traj, SectionSpec(5, 0.0, 0))
