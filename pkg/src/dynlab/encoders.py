"""Binary image (PGM P5 / PPM P6) and CSV encoders, plus the versioned
palettes that turn escape grids into color rasters.

All output is byte-deterministic: CSV reals use the shortest representation
that round-trips double precision, and palettes are pure integer math so a
named palette can never drift under a golden-file test.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np


def encode_pgm(grid: np.ndarray, max_value: int) -> bytes:
    """Binary PGM: ``P5\\n<w> <h>\\n<maxval>\\n`` then the row-major raster,
    2-byte big-endian samples when max_value > 255."""
    if not (0 < max_value <= 65535):
        raise ValueError("max_value must lie in [1, 65535]")
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ValueError("grid must be 2-D")
    if not np.issubdtype(grid.dtype, np.integer):
        raise ValueError("grid must be integer-valued")
    if grid.min() < 0 or grid.max() > max_value:
        raise ValueError(
            f"sample range [{grid.min()}, {grid.max()}] exceeds "
            f"[0, {max_value}]")
    rows, cols = grid.shape
    header = f"P5\n{cols} {rows}\n{max_value}\n".encode("ascii")
    if max_value > 255:
        raster = grid.astype(">u2").tobytes()
    else:
        raster = grid.astype(np.uint8).tobytes()
    return header + raster


def encode_ppm(rgb: np.ndarray) -> bytes:
    """Binary PPM (P6) from an (rows, cols, 3) uint8 array."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("rgb must have shape (rows, cols, 3)")
    if rgb.dtype != np.uint8:
        raise ValueError("rgb must be uint8")
    rows, cols = rgb.shape[:2]
    return f"P6\n{cols} {rows}\n255\n".encode("ascii") + rgb.tobytes()


def _format_real(value: float) -> str:
    # %.17g is the shortest fixed rule that always round-trips float64.
    return format(float(value), ".17g")


def encode_csv(columns: Mapping[str, Sequence[float]] |
               Iterable[tuple[str, Sequence[float]]]) -> bytes:
    """Named equal-length columns to CSV with round-trip-exact reals."""
    pairs = list(columns.items()) if isinstance(columns, Mapping) \
        else list(columns)
    if not pairs:
        raise ValueError("no columns")
    lengths = {len(values) for _, values in pairs}
    if len(lengths) != 1:
        raise ValueError(f"ragged columns: lengths {sorted(lengths)}")
    lines = [",".join(name for name, _ in pairs)]
    n = lengths.pop()
    series = [values for _, values in pairs]
    for i in range(n):
        lines.append(",".join(_format_real(col[i]) for col in series))
    return ("\n".join(lines) + "\n").encode("ascii")


# --- palettes ----------------------------------------------------------------
#
# Palettes are versioned by name: changing one means adding a new name, so
# recorded images stay reproducible.


def _palette_ember(norm: np.ndarray) -> np.ndarray:
    """Dark blue through amber to white, gamma-bent for contrast."""
    t = np.clip(norm, 0.0, 1.0) ** 0.65
    r = np.clip(3.0 * t - 0.6, 0.0, 1.0)
    g = np.clip(2.2 * t - 0.35, 0.0, 1.0) ** 1.1
    b = np.clip(0.35 + 1.8 * t * (1.0 - t) + (2.0 * t - 1.4), 0.0, 1.0)
    return (np.stack([r, g, b], axis=-1) * 255.0 + 0.5).astype(np.uint8)


def _palette_gray(norm: np.ndarray) -> np.ndarray:
    v = (np.clip(norm, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    return np.stack([v, v, v], axis=-1)


def apply_escape_palette(name: str, smooth: np.ndarray,
                         max_iter: int) -> np.ndarray:
    """Color an escape grid's smooth layer; non-escaped pixels go black."""
    smooth = np.asarray(smooth, dtype=float)
    inside = smooth >= max_iter
    norm = np.log1p(np.where(inside, 0.0, smooth)) / np.log1p(max_iter)
    if name == "ember-v1":
        rgb = _palette_ember(norm)
    elif name == "gray-v1":
        rgb = _palette_gray(norm)
    else:
        raise ValueError(f"unknown palette {name!r}")
    rgb[inside] = 0
    return rgb


BASIN_HUES = np.array([[224, 84, 48], [64, 160, 224], [240, 196, 64]],
                      dtype=float)


def apply_basin_palette(name: str, labels: np.ndarray, iterations: np.ndarray,
                        max_iter: int) -> np.ndarray:
    """One hue per root, darkened with the iteration count; -1 goes black."""
    if name != "basins-v1":
        raise ValueError(f"unknown palette {name!r}")
    labels = np.asarray(labels)
    iterations = np.asarray(iterations, dtype=float)
    shade = 1.0 - 0.85 * np.clip(iterations / max(max_iter, 1), 0.0, 1.0)
    rgb = np.zeros(labels.shape + (3,), dtype=np.uint8)
    for k in range(3):
        mask = labels == k
        for c in range(3):
            rgb[mask, c] = (BASIN_HUES[k, c] * shade[mask] + 0.5).astype(np.uint8)
    return rgb
