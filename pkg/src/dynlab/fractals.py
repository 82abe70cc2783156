"""Escape-time grids for z -> z^2 + c and Newton basins for z^3 = 1, plus a
tiled, deterministic, parallel rendering pipeline.

Escape counts are 1-based over the orbit including the seed: a pixel whose
k-th orbit member (k = 1 for the seed itself) is the first with |z| beyond
the bailout radius gets count k; pixels that never escape carry the sentinel
``max_iter``.  All kernels derive pixel coordinates from global frame
indices, so any tiling of the frame reproduces the single-pass render
bit-for-bit.
"""

from __future__ import annotations

import cmath
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

DEFAULT_BAILOUT = 2.0
SMOOTH_BAILOUT = 256.0

NEWTON_ROOTS = (
    complex(1.0, 0.0),
    cmath.exp(2j * cmath.pi / 3),
    cmath.exp(4j * cmath.pi / 3),
)


@dataclass(frozen=True)
class Viewport:
    """Axis-aligned window in the complex plane with square pixels."""

    center: complex = 0.0 + 0.0j
    width: float = 4.0
    pixel_cols: int = 256
    pixel_rows: int = 256

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")
        if self.pixel_cols < 1 or self.pixel_rows < 1:
            raise ValueError("pixel dimensions must be >= 1")

    @property
    def height(self) -> float:
        return self.width * self.pixel_rows / self.pixel_cols

    @property
    def pitch(self) -> float:
        return self.width / self.pixel_cols

    def pixel_centers(self, row0: int, rows: int, col0: int,
                      cols: int) -> np.ndarray:
        """Complex coordinates of pixel centers for a sub-rectangle.

        Row 0 is the top of the frame.  Coordinates are computed from global
        indices so tiles agree bitwise with the full frame.
        """
        pitch = self.pitch
        left = self.center.real - self.width / 2.0
        top = self.center.imag + self.height / 2.0
        j = np.arange(col0, col0 + cols)
        i = np.arange(row0, row0 + rows)
        re = left + (j + 0.5) * pitch
        im = top - (i + 0.5) * pitch
        return re[None, :] + 1j * im[:, None]


@dataclass
class EscapeGrid:
    counts: np.ndarray                  # int32 (rows, cols), max_iter = not escaped
    max_iter: int
    viewport: Viewport
    smooth: np.ndarray | None = None    # fractional iteration layer
    throughput_pps: float | None = field(default=None, compare=False)


@dataclass
class BasinGrid:
    labels: np.ndarray                  # int32 in {0, 1, 2, -1}
    iterations: np.ndarray              # int32, max_iter where label is -1
    viewport: Viewport
    meta: dict = field(default_factory=dict, compare=False)
    throughput_pps: float | None = field(default=None, compare=False)


def escape_time(c: complex, z0: complex, max_iter: int,
                bailout: float = DEFAULT_BAILOUT) -> tuple[int, complex]:
    """Scalar escape count and the orbit member seen last.

    Returns (k, z) where z is the k-th orbit member (1-based, the seed
    counts) and the first with |z| > bailout, or (max_iter, z_last) when the
    orbit stays within the bailout disk.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if bailout < 2:
        raise ValueError("bailout must be >= 2")
    z = complex(z0)
    bb = bailout * bailout
    for k in range(1, max_iter):
        if z.real * z.real + z.imag * z.imag > bb:
            return k, z
        z = z * z + c
    return max_iter, z


def _escape_kernel(c_grid: np.ndarray, z_grid: np.ndarray, max_iter: int,
                   bailout: float,
                   want_smooth: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Vectorized escape loop; per-pixel arithmetic matches escape_time."""
    z = z_grid.astype(complex).copy()
    c = c_grid
    counts = np.full(z.shape, max_iter, dtype=np.int32)
    smooth = np.full(z.shape, float(max_iter)) if want_smooth else None
    alive = np.ones(z.shape, dtype=bool)
    bb = bailout * bailout
    log_bail = math.log(bailout)
    for k in range(1, max_iter):
        mag2 = z.real * z.real + z.imag * z.imag
        escaped = alive & (mag2 > bb)
        if escaped.any():
            counts[escaped] = k
            if smooth is not None:
                zm = np.abs(z[escaped])
                smooth[escaped] = k + 1.0 - np.log2(np.log(zm) / log_bail)
            alive &= ~escaped
        if not alive.any():
            break
        zc = z[alive]
        z[alive] = zc * zc + (c[alive] if isinstance(c, np.ndarray) else c)
    return counts, smooth


def julia_grid(c: complex, viewport: Viewport, max_iter: int,
               smooth: bool = False,
               bailout: float | None = None) -> EscapeGrid:
    """Escape counts with z0 at every pixel center and fixed parameter c."""
    return _render_full("julia", viewport, max_iter, c=c, smooth=smooth,
                        bailout=bailout)


def mandelbrot_grid(viewport: Viewport, max_iter: int, smooth: bool = False,
                    bailout: float | None = None) -> EscapeGrid:
    """Escape counts with c at every pixel center and z0 = 0."""
    return _render_full("mandelbrot", viewport, max_iter, smooth=smooth,
                        bailout=bailout)


def _newton_kernel(z0_grid: np.ndarray, max_iter: int,
                   tol: float) -> tuple[np.ndarray, np.ndarray, int]:
    """Vectorized Newton iteration for z^3 - 1; returns labels, iterations and
    the number of zero seeds perturbed to avoid the singular derivative."""
    z = z0_grid.astype(complex).copy()
    zero_seeds = z == 0
    n_perturbed = int(zero_seeds.sum())
    if n_perturbed:
        z[zero_seeds] = tol
    labels = np.full(z.shape, -1, dtype=np.int32)
    iters = np.full(z.shape, max_iter, dtype=np.int32)
    active = np.ones(z.shape, dtype=bool)
    for it in range(max_iter):
        dist = np.stack([np.abs(z - r) for r in NEWTON_ROOTS])
        nearest = dist.argmin(axis=0)
        converged = active & (dist.min(axis=0) < tol)
        if converged.any():
            labels[converged] = nearest[converged].astype(np.int32)
            iters[converged] = it
            active &= ~converged
        if not active.any():
            break
        za = z[active]
        singular = za == 0
        if singular.any():
            za[singular] = tol
            n_perturbed += int(singular.sum())
        z[active] = za - (za ** 3 - 1.0) / (3.0 * za ** 2)
    return labels, iters, n_perturbed


def newton_basins(viewport: Viewport, max_iter: int, tol: float) -> BasinGrid:
    """Basin labels for Newton's iteration on z^3 - 1 over the viewport.

    Labels index the cube roots of unity (0: 1, 1 and 2: the conjugate
    pair); -1 marks pixels that did not come within ``tol`` of a root in
    ``max_iter`` steps.  Zero seeds are nudged by ``tol`` before the first
    step; the count of nudged pixels is recorded in ``meta``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _render_full("newton", viewport, max_iter, tol=tol)


@dataclass(frozen=True)
class GridJob:
    """A full-frame rendering request, the unit of work for render_tiles."""

    kind: Literal["mandelbrot", "julia", "newton"]
    viewport: Viewport
    max_iter: int
    c: complex = 0j                # julia only
    tol: float = 1e-9              # newton only
    smooth: bool = False
    bailout: float | None = None   # None: 2, or 256 when smooth


def _job_bailout(job_smooth: bool, bailout: float | None) -> float:
    if bailout is not None:
        return bailout
    return SMOOTH_BAILOUT if job_smooth else DEFAULT_BAILOUT


def _render_region(kind: str, viewport: Viewport, max_iter: int, row0: int,
                   rows: int, col0: int, cols: int, c: complex, tol: float,
                   smooth: bool, bailout: float | None):
    centers = viewport.pixel_centers(row0, rows, col0, cols)
    if kind == "mandelbrot":
        return _escape_kernel(centers, np.zeros_like(centers), max_iter,
                              _job_bailout(smooth, bailout), smooth)
    if kind == "julia":
        return _escape_kernel(c, centers, max_iter,
                              _job_bailout(smooth, bailout), smooth)
    if kind == "newton":
        return _newton_kernel(centers, max_iter, tol)
    raise ValueError(f"unknown grid kind {kind!r}")


def _render_full(kind: str, viewport: Viewport, max_iter: int,
                 c: complex = 0j, tol: float = 1e-9, smooth: bool = False,
                 bailout: float | None = None):
    out = _render_region(kind, viewport, max_iter, 0, viewport.pixel_rows, 0,
                         viewport.pixel_cols, c, tol, smooth, bailout)
    if kind == "newton":
        labels, iters, n_perturbed = out
        return BasinGrid(labels, iters, viewport,
                         meta={"perturbed_zero_seeds": n_perturbed,
                               "tol": tol, "max_iter": max_iter})
    counts, smooth_layer = out
    return EscapeGrid(counts, max_iter, viewport, smooth=smooth_layer)


def render_tiles(job: GridJob, tile_size: int = 64,
                 workers: int = 1) -> EscapeGrid | BasinGrid:
    """Render a frame as independent tiles on a thread pool.

    The output is bit-identical to the single-pass render regardless of
    ``workers`` or ``tile_size``; tiles write disjoint regions of
    preallocated arrays.  Worker failures are re-raised naming the tile.
    Throughput in pixels/second is attached to the returned grid.
    """
    if tile_size < 1:
        raise ValueError("tile_size must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    vp = job.viewport
    rows, cols = vp.pixel_rows, vp.pixel_cols
    grid_a = np.empty((rows, cols), dtype=np.int32)
    grid_b: np.ndarray | None = None
    if job.kind == "newton":
        grid_b = np.empty((rows, cols), dtype=np.int32)
    elif job.smooth:
        grid_b = np.empty((rows, cols), dtype=float)
    extra = {"perturbed": 0}

    tiles = [(r, min(tile_size, rows - r), co, min(tile_size, cols - co))
             for r in range(0, rows, tile_size)
             for co in range(0, cols, tile_size)]

    def run_tile(tile):
        row0, trows, col0, tcols = tile
        try:
            out = _render_region(job.kind, vp, job.max_iter, row0, trows,
                                 col0, tcols, job.c, job.tol, job.smooth,
                                 job.bailout)
        except Exception as err:
            raise RuntimeError(
                f"tile at rows {row0}:{row0 + trows}, cols "
                f"{col0}:{col0 + tcols} failed: {err}") from err
        return tile, out

    started = time.perf_counter()
    if workers == 1:
        results = map(run_tile, tiles)
        for tile, out in results:
            _store_tile(job, grid_a, grid_b, extra, tile, out)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for tile, out in pool.map(run_tile, tiles):
                _store_tile(job, grid_a, grid_b, extra, tile, out)
    elapsed = max(time.perf_counter() - started, 1e-9)
    pps = rows * cols / elapsed

    if job.kind == "newton":
        return BasinGrid(grid_a, grid_b, vp,
                         meta={"perturbed_zero_seeds": extra["perturbed"],
                               "tol": job.tol, "max_iter": job.max_iter},
                         throughput_pps=pps)
    return EscapeGrid(grid_a, job.max_iter, vp, smooth=grid_b,
                      throughput_pps=pps)


def _store_tile(job, grid_a, grid_b, extra, tile, out):
    row0, trows, col0, tcols = tile
    sl = (slice(row0, row0 + trows), slice(col0, col0 + tcols))
    if job.kind == "newton":
        labels, iters, n_pert = out
        grid_a[sl] = labels
        grid_b[sl] = iters
        extra["perturbed"] += n_pert
    else:
        counts, smooth_layer = out
        grid_a[sl] = counts
        if grid_b is not None:
            grid_b[sl] = smooth_layer
