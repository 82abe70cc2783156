import io

import numpy as np
import pytest
from PIL import Image

from dynlab.encoders import (apply_basin_palette, apply_escape_palette,
                             encode_csv, encode_pgm, encode_ppm)


def test_pgm_smallest_image():
    assert encode_pgm(np.array([[0]]), 255) == b"P5\n1 1\n255\n\x00"


def test_pgm_two_pixel_raster():
    out = encode_pgm(np.array([[0, 255]]), 255)
    assert out == b"P5\n2 1\n255\n\x00\xff"


def test_pgm_sixteen_bit_big_endian():
    out = encode_pgm(np.array([[256]]), 65535)
    assert out.endswith(b"\x01\x00")
    assert b"65535" in out


def test_pgm_range_checked():
    with pytest.raises(ValueError):
        encode_pgm(np.array([[300]]), 255)
    with pytest.raises(ValueError):
        encode_pgm(np.array([[-1]]), 255)
    with pytest.raises(ValueError):
        encode_pgm(np.array([[0.5]]), 255)


def test_pgm_roundtrip_third_party_reader():
    rng = np.random.default_rng(8)
    grid = rng.integers(0, 256, (13, 7))
    data = encode_pgm(grid, 255)
    img = Image.open(io.BytesIO(data))
    assert img.size == (7, 13)
    assert np.array_equal(np.asarray(img), grid)


def test_ppm_roundtrip_third_party_reader():
    rng = np.random.default_rng(9)
    rgb = rng.integers(0, 256, (5, 6, 3), dtype=np.uint8)
    img = Image.open(io.BytesIO(encode_ppm(rgb)))
    assert np.array_equal(np.asarray(img), rgb)


def test_csv_simple_column():
    assert encode_csv([("t", [0.0, 0.5])]) == b"t\n0\n0.5\n"


def test_csv_ragged_rejected():
    with pytest.raises(ValueError):
        encode_csv([("a", [1.0]), ("b", [1.0, 2.0])])


def test_csv_roundtrip_exact():
    rng = np.random.default_rng(10)
    values = np.concatenate([rng.normal(0, 1e10, 50),
                             rng.normal(0, 1e-10, 50),
                             [0.0, 1.0, -1.5, 2 ** -52, 1e308]])
    data = encode_csv([("v", values)]).decode()
    lines = data.strip().split("\n")[1:]
    parsed = np.array([float(s) for s in lines])
    assert np.array_equal(parsed, values)


def test_escape_palette_deterministic_and_versioned():
    smooth = np.array([[1.0, 5.5], [100.0, 42.0]])
    a = apply_escape_palette("ember-v1", smooth, 100)
    b = apply_escape_palette("ember-v1", smooth, 100)
    assert np.array_equal(a, b)
    assert a.shape == (2, 2, 3) and a.dtype == np.uint8
    assert np.array_equal(a[1, 0], [0, 0, 0])  # interior pixel is black
    with pytest.raises(ValueError):
        apply_escape_palette("ember-v2", smooth, 100)


def test_basin_palette():
    labels = np.array([[0, 1], [2, -1]])
    iters = np.array([[0, 5], [10, 30]])
    rgb = apply_basin_palette("basins-v1", labels, iters, 30)
    assert rgb.shape == (2, 2, 3)
    assert np.array_equal(rgb[1, 1], [0, 0, 0])
    assert not np.array_equal(rgb[0, 0], rgb[0, 1])
