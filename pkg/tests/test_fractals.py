import cmath

import numpy as np
import pytest

from dynlab.fractals import (GridJob, NEWTON_ROOTS, Viewport, escape_time,
                             julia_grid, mandelbrot_grid, newton_basins,
                             render_tiles)


def test_escape_time_origin_fixed():
    count, z = escape_time(0j, 0j, max_iter=64)
    assert count == 64 and z == 0j


def test_escape_time_hand_iterated():
    # Orbit 0, 1, 2, 5, 26: the fourth member is the first beyond 2.
    count, z = escape_time(1 + 0j, 0j, max_iter=64)
    assert count == 4 and z == 5 + 0j


def test_escape_time_boundary_orbit():
    # Orbit 0, -2, 2, 2, ... never exceeds the bailout disk.
    count, z = escape_time(-2 + 0j, 0j, max_iter=64)
    assert count == 64 and z == 2 + 0j


def test_escape_time_seed_already_out():
    count, z = escape_time(0.3 + 0j, 3 + 0j, max_iter=64)
    assert count == 1 and z == 3 + 0j


def test_escape_time_validation():
    with pytest.raises(ValueError):
        escape_time(0j, 0j, max_iter=0)
    with pytest.raises(ValueError):
        escape_time(0j, 0j, max_iter=10, bailout=1.0)


def test_julia_unit_disk():
    vp = Viewport(center=0j, width=4.0, pixel_cols=64, pixel_rows=64)
    grid = julia_grid(0j, vp, max_iter=200)
    centers = vp.pixel_centers(0, 64, 0, 64)
    inside = np.abs(centers) < 0.95
    outside = np.abs(centers) > 2.0
    assert np.all(grid.counts[inside] == 200)
    assert np.all(grid.counts[outside] == 1)


def test_julia_rotation_symmetry():
    """Counts are invariant under 180-degree rotation for a frame centered
    at the origin (dyadic geometry makes mirrored centers bitwise negatives)."""
    vp = Viewport(center=0j, width=4.0, pixel_cols=128, pixel_rows=64)
    grid = julia_grid(-0.8 + 0.156j, vp, max_iter=150)
    assert np.array_equal(grid.counts, grid.counts[::-1, ::-1])


def test_julia_single_pixel():
    vp = Viewport(center=3 + 0j, width=1.0, pixel_cols=1, pixel_rows=1)
    grid = julia_grid(1 + 1j, vp, max_iter=50)
    assert grid.counts[0, 0] == 1


def test_mandelbrot_reference_pixels():
    vp = Viewport(center=0j, width=1.0, pixel_cols=1, pixel_rows=1)
    assert mandelbrot_grid(vp, 300).counts[0, 0] == 300
    vp = Viewport(center=0.26 + 0j, width=1e-9, pixel_cols=1, pixel_rows=1)
    assert mandelbrot_grid(vp, 300).counts[0, 0] < 300


def test_mandelbrot_conjugation_symmetry():
    vp = Viewport(center=-0.5 + 0j, width=4.0, pixel_cols=64, pixel_rows=64)
    grid = mandelbrot_grid(vp, max_iter=120)
    assert np.array_equal(grid.counts, grid.counts[::-1, :])


def test_escape_certificate_property():
    """No pixel holding a certified-escape witness (some orbit member with
    |z| > max(2, |c|)) may be labeled non-escaped."""
    vp = Viewport(center=-0.5 + 0j, width=3.5, pixel_cols=48, pixel_rows=48)
    max_iter = 120
    grid = mandelbrot_grid(vp, max_iter)
    centers = vp.pixel_centers(0, 48, 0, 48)
    rng = np.random.default_rng(12)
    for _ in range(150):
        i = rng.integers(0, 48)
        j = rng.integers(0, 48)
        c = complex(centers[i, j])
        z = 0j
        certified = abs(z) > max(2.0, abs(c))
        for _ in range(max_iter - 1):
            if certified:
                break
            z = z * z + c
            certified = abs(z) > max(2.0, abs(c))
        if certified:
            assert grid.counts[i, j] < max_iter


def test_smooth_layer():
    vp = Viewport(center=-0.5 + 0j, width=3.0, pixel_cols=32, pixel_rows=32)
    grid = mandelbrot_grid(vp, max_iter=100, smooth=True)
    assert grid.smooth is not None
    escaped = grid.counts < 100
    assert np.all(grid.smooth[~escaped] == 100.0)
    diff = np.abs(grid.smooth[escaped] - grid.counts[escaped])
    assert np.all(diff <= 2.0)


def test_newton_roots_and_iterations():
    vp = Viewport(center=1 + 0j, width=1e-6, pixel_cols=1, pixel_rows=1)
    basins = newton_basins(vp, max_iter=40, tol=1e-9)
    assert basins.labels[0, 0] == 0
    assert basins.iterations[0, 0] == 0

    vp = Viewport(center=2 + 0j, width=1e-6, pixel_cols=1, pixel_rows=1)
    basins = newton_basins(vp, max_iter=40, tol=1e-9)
    assert basins.labels[0, 0] == 0
    assert 0 < basins.iterations[0, 0] <= 8


def test_newton_third_root_seed():
    z0 = 1.5 * cmath.exp(2j * cmath.pi / 3)
    vp = Viewport(center=z0, width=1e-9, pixel_cols=1, pixel_rows=1)
    basins = newton_basins(vp, max_iter=40, tol=1e-9)
    assert basins.labels[0, 0] == 1


def test_newton_real_seeds_stay_real():
    """Real seeds iterate inside the real line, so the only root they can
    reach is the real one (e.g. N(-0.5) = 1 exactly, N(-2) gets there in
    three steps)."""
    vp = Viewport(center=-2 + 0j, width=3.0, pixel_cols=33, pixel_rows=1)
    basins = newton_basins(vp, max_iter=200, tol=1e-9)
    converged = basins.labels[basins.labels >= 0]
    assert converged.size > 0
    assert np.all(converged == 0)


def test_newton_conjugate_mirror_basins():
    """Conjugating the seed conjugates the whole orbit, so the two complex
    roots' basins are mirror images across the real axis and the real root's
    basin is symmetric."""
    vp = Viewport(center=-1 + 0j, width=4.0, pixel_cols=64, pixel_rows=64)
    basins = newton_basins(vp, max_iter=60, tol=1e-9)
    mirrored = basins.labels[::-1, :]
    swap = {0: 0, 1: 2, 2: 1, -1: -1}
    expected = np.vectorize(swap.get)(mirrored)
    assert np.array_equal(basins.labels, expected)


def test_newton_zero_seed_perturbed():
    # The tol-sized nudge sends the first step to ~1/(3 tol^2); the walk
    # back shrinks by 2/3 per step, needing ~105 iterations.
    vp = Viewport(center=0j, width=1e-12, pixel_cols=1, pixel_rows=1)
    basins = newton_basins(vp, max_iter=200, tol=1e-9)
    assert basins.meta["perturbed_zero_seeds"] >= 1
    assert basins.labels[0, 0] >= 0


def test_newton_residual_property():
    """Stored (label, iterations) replayed independently satisfies the
    first-order residual bound |z^3 - 1| < 3 tol |z|^2 + tol."""
    vp = Viewport(center=0.2 + 0.1j, width=5.0, pixel_cols=40, pixel_rows=40)
    tol = 1e-9
    basins = newton_basins(vp, max_iter=60, tol=tol)
    centers = vp.pixel_centers(0, 40, 0, 40)
    rng = np.random.default_rng(3)
    for _ in range(100):
        i, j = rng.integers(0, 40, 2)
        label = basins.labels[i, j]
        if label < 0:
            continue
        z = complex(centers[i, j])
        if z == 0:
            z = tol
        for _ in range(int(basins.iterations[i, j])):
            z = z - (z ** 3 - 1.0) / (3.0 * z ** 2)
        assert abs(z ** 3 - 1.0) < 3 * tol * abs(z) ** 2 + tol
        nearest = min(range(3), key=lambda k: abs(z - NEWTON_ROOTS[k]))
        assert nearest == label


def test_invariants_label_iff_max_iter():
    vp = Viewport(center=0j, width=4.0, pixel_cols=32, pixel_rows=32)
    basins = newton_basins(vp, max_iter=30, tol=1e-9)
    at_cap = basins.iterations == 30
    assert np.array_equal(basins.labels == -1, at_cap)


@pytest.mark.parametrize("kind,kwargs", [
    ("mandelbrot", {}),
    ("julia", {"c": -0.8 + 0.156j}),
    ("newton", {"tol": 1e-9}),
])
def test_render_tiles_bit_identical(kind, kwargs):
    vp = Viewport(center=-0.25 + 0.1j, width=3.0, pixel_cols=100,
                  pixel_rows=70)
    job = GridJob(kind=kind, viewport=vp, max_iter=80, **kwargs)
    serial = render_tiles(job, tile_size=1000, workers=1)   # one tile
    tiled = render_tiles(job, tile_size=17, workers=8)      # ragged tiles
    if kind == "newton":
        assert np.array_equal(serial.labels, tiled.labels)
        assert np.array_equal(serial.iterations, tiled.iterations)
        direct = newton_basins(vp, 80, kwargs["tol"])
        assert np.array_equal(direct.labels, tiled.labels)
    else:
        assert np.array_equal(serial.counts, tiled.counts)
        direct = (mandelbrot_grid(vp, 80) if kind == "mandelbrot"
                  else julia_grid(kwargs["c"], vp, 80))
        assert np.array_equal(direct.counts, tiled.counts)
    assert tiled.throughput_pps > 0


def test_render_tiles_smooth_layer_identical():
    vp = Viewport(center=-0.5 + 0j, width=3.0, pixel_cols=64, pixel_rows=48)
    job = GridJob(kind="mandelbrot", viewport=vp, max_iter=60, smooth=True)
    a = render_tiles(job, tile_size=9, workers=4)
    b = mandelbrot_grid(vp, 60, smooth=True)
    assert np.array_equal(a.smooth, b.smooth)


def test_render_tiles_failure_names_tile():
    vp = Viewport(center=0j, width=2.0, pixel_cols=8, pixel_rows=8)
    job = GridJob(kind="bogus", viewport=vp, max_iter=10)  # type: ignore[arg-type]
    with pytest.raises(RuntimeError, match="tile at rows 0:8"):
        render_tiles(job, tile_size=8, workers=1)


def test_viewport_validation():
    with pytest.raises(ValueError):
        Viewport(width=0.0)
    with pytest.raises(ValueError):
        Viewport(pixel_cols=0)
