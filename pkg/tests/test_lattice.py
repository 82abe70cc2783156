import math

import numpy as np
import pytest

from dynlab.lattice import (FieldHistory, FputParams, KdvParams,
                            ModeEnergySeries, detect_pulses, fput_accel,
                            fput_energy, fput_simulate, kdv_simulate,
                            kdv_step, mode_energies, recurrence_time)
from dynlab.numerics import InstabilityError


def test_fput_accel_equilibrium():
    assert np.array_equal(fput_accel(np.zeros(9), 0.25), np.zeros(9))


def test_fput_accel_single_mass():
    # Lone interior mass: the quadratic terms cancel by symmetry.
    u = np.array([0.0, 0.1, 0.0])
    assert abs(fput_accel(u, 0.0)[1] + 0.2) < 1e-15
    assert abs(fput_accel(u, 1.0)[1] + 0.2) < 1e-15


def test_fput_accel_rejects_moving_endpoints():
    with pytest.raises(ValueError):
        fput_accel(np.array([0.1, 0.0, 0.0]), 0.0)


def test_mode_energies_pure_displacement_mode():
    n = 16
    j = np.arange(n + 1)
    u = 0.8 * np.sin(3 * j * math.pi / n)
    u[0] = u[-1] = 0.0
    e = mode_energies(u, np.zeros(n + 1), n)
    assert e[2] > 0
    others = np.delete(e, 2)
    assert np.all(others < 1e-12 * e[2])


def test_mode_energies_pure_velocity_mode():
    n = 12
    j = np.arange(n + 1)
    udot = 0.5 * np.sin(1 * j * math.pi / n)
    udot[0] = udot[-1] = 0.0
    e = mode_energies(np.zeros(n + 1), udot, n)
    # E_1 = adot_1^2 / 2 with adot_1 = sqrt(2/N) sum udot_j sin(j pi/N).
    adot = math.sqrt(2.0 / n) * sum(udot[j] * math.sin(j * math.pi / n)
                                    for j in range(1, n))
    assert abs(e[0] - 0.5 * adot ** 2) < 1e-14
    assert np.all(np.delete(e, 0) < 1e-14)


def test_mode_energies_zeros_and_validation():
    n = 8
    assert np.array_equal(mode_energies(np.zeros(n + 1), np.zeros(n + 1), n),
                          np.zeros(n - 1))
    with pytest.raises(ValueError):
        mode_energies(np.zeros(n), np.zeros(n + 1), n)


def test_mode_energy_sum_matches_harmonic_total():
    rng = np.random.default_rng(17)
    n = 24
    for _ in range(10):
        u = rng.normal(0, 0.3, n + 1)
        udot = rng.normal(0, 0.3, n + 1)
        u[0] = u[-1] = udot[0] = udot[-1] = 0.0
        total = fput_energy(u, udot, alpha=0.0)
        assert abs(mode_energies(u, udot, n).sum() - total) < 1e-10


def test_fput_harmonic_modes_constant():
    """alpha=0: each mode energy is individually conserved.  dt sized so the
    symplectic energy wobble (omega*dt)^2/4 of mode 3 stays under 1e-8."""
    params = FputParams(n_masses=16, alpha=0.0, dt=2.5e-4)
    _, series = fput_simulate(params, init_mode=3, amplitude=1.0,
                              t_end=20.0, record_dt=0.5)
    e3 = series.energies[:, 2]
    assert np.abs(e3 - e3[0]).max() < 1e-8 * e3[0]
    others = np.delete(series.energies, 2, axis=1)
    assert others.max() < 1e-10 * series.total().max()


def test_fput_zero_amplitude():
    _, series = fput_simulate(FputParams(8, 0.25, 0.05), 1, 0.0, 10.0, 1.0)
    assert np.array_equal(series.energies, np.zeros_like(series.energies))


def test_fput_mirror_symmetry():
    """u -> -u commutes with the evolution only in the harmonic chain."""
    for alpha, should_match in ((0.0, True), (0.25, False)):
        params = FputParams(n_masses=16, alpha=alpha, dt=0.05)
        h_pos, _ = fput_simulate(params, 2, 0.7, 30.0, 5.0)
        h_neg, _ = fput_simulate(params, 2, -0.7, 30.0, 5.0)
        diff = np.abs(h_pos.fields[-1] + h_neg.fields[-1]).max()
        if should_match:
            assert diff < 1e-12
        else:
            assert diff > 1e-3


def test_fput_instability_aborts():
    with pytest.raises(InstabilityError) as info:
        fput_simulate(FputParams(n_masses=32, alpha=0.25, dt=2.1), 1, 1.0,
                      50.0, 2.1)
    assert info.value.step_index is not None


def test_fput_validates_mode():
    with pytest.raises(ValueError):
        fput_simulate(FputParams(n_masses=8), init_mode=8, amplitude=1.0,
                      t_end=1.0, record_dt=1.0)


def test_recurrence_none_without_drop():
    series = ModeEnergySeries(times=np.array([0.0, 1.0, 2.0]),
                              energies=np.array([[1.0, 0.0]] * 3), k_max=2)
    assert recurrence_time(series, 1, 0.95) is None


def test_recurrence_synthetic():
    energies = np.array([[1.0, 0.0], [0.2, 0.8], [0.97, 0.03]])
    series = ModeEnergySeries(times=np.array([0.0, 1.0, 5.0]),
                              energies=energies, k_max=2)
    assert recurrence_time(series, 1, 0.95) == 5.0


def test_recurrence_validation():
    series = ModeEnergySeries(times=np.array([]), energies=np.empty((0, 2)),
                              k_max=2)
    with pytest.raises(ValueError):
        recurrence_time(series, 1, 0.95)
    good = ModeEnergySeries(times=np.array([0.0]),
                            energies=np.array([[1.0, 0.0]]), k_max=2)
    with pytest.raises(ValueError):
        recurrence_time(good, 1, 1.5)


# --- KdV -------------------------------------------------------------------


def test_kdv_params_stability_guard():
    with pytest.raises(ValueError):
        KdvParams(delta=0.022, dx=2.0 / 256, dt=1e-2, length=2.0)


def test_kdv_constant_field_unchanged():
    params = KdvParams()
    v = np.full(params.n_cells, 0.7)
    out = kdv_step(v, v, params)
    assert np.array_equal(out, v)


def test_kdv_step_conserves_mass():
    params = KdvParams()
    rng = np.random.default_rng(4)
    for _ in range(10):
        prev = rng.normal(0, 1, params.n_cells)
        v = prev + rng.normal(0, 0.01, params.n_cells)
        out = kdv_step(v, prev, params)
        norm = np.linalg.norm(v)
        assert abs(out.sum() - prev.sum()) < 1e-12 * max(norm, 1.0)


def test_kdv_step_validation():
    params = KdvParams()
    with pytest.raises(ValueError):
        kdv_step(np.zeros(4), np.zeros(4), params)
    with pytest.raises(ValueError):
        kdv_step(np.zeros(params.n_cells), np.zeros(params.n_cells - 1), params)


def test_kdv_small_amplitude_dispersion():
    """Tiny sine: the wave advances at the linear dispersion rate
    delta^2 k^2 with amplitude preserved (near-linear regime)."""
    n, length = 64, 2.0
    dx = length / n
    params = KdvParams(delta=0.15, dx=dx, dt=3e-4, length=length)
    x = params.grid()
    k = 2 * math.pi / length
    hist = kdv_simulate(params, 1e-3 * np.sin(k * x), 100 * params.dt,
                        100 * params.dt)
    f0 = np.fft.rfft(hist.fields[0])[1]
    f1 = np.fft.rfft(hist.fields[-1])[1]
    assert abs(abs(f1) - abs(f0)) / abs(f0) < 1e-3
    shift = np.angle(f1) - np.angle(f0)
    expected = params.delta ** 2 * k ** 3 * hist.times[-1]
    assert abs(shift - expected) / expected < 0.02


def test_kdv_simulate_zero_field():
    params = KdvParams()
    hist = kdv_simulate(params, np.zeros(params.n_cells), 0.01, 0.005)
    assert np.array_equal(hist.fields, np.zeros_like(hist.fields))


def test_kdv_cosine_develops_pulses():
    params = KdvParams()
    x = params.grid()
    hist = kdv_simulate(params, np.cos(math.pi * x), 1.0, 1.0)
    pulses = detect_pulses(hist.fields[-1], params.dx, 0.5)
    assert len(pulses) >= 2
    mass0 = hist.fields[0].sum()
    assert abs(hist.fields[-1].sum() - mass0) < 1e-10 * params.n_cells


def test_detect_pulses_flat():
    assert detect_pulses(np.zeros(32), 0.1, 0.5) == []


def test_detect_pulses_gaussian():
    dx = 0.01
    x = np.arange(0, 1.0, dx)
    field = np.exp(-((x - 0.5) ** 2) / (2 * 0.05 ** 2))
    pulses = detect_pulses(field, dx, 0.5)
    assert len(pulses) == 1
    pos, height = pulses[0]
    assert abs(pos - 0.5) <= dx
    assert abs(height - 1.0) < 1e-3


def test_detect_pulses_threshold():
    dx = 0.01
    x = np.arange(0, 1.0, dx)
    field = (np.exp(-((x - 0.3) ** 2) / 1e-3)
             + 0.4 * np.exp(-((x - 0.7) ** 2) / 1e-3))
    pulses = detect_pulses(field, dx, 0.5)
    assert len(pulses) == 1
    assert abs(pulses[0][0] - 0.3) <= dx


def test_field_history_validation():
    with pytest.raises(ValueError):
        FieldHistory(np.array([0.0, 0.0]), np.zeros((2, 4)))
