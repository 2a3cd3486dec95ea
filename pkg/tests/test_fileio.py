import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oslalm.ct import Geometry, ImageGrid
from oslalm.fileio import (
    export_pgm,
    geometry_from_meta,
    geometry_meta,
    grid_from_meta,
    grid_meta,
    load_image,
    read_pgm,
    read_raw,
    read_sidecar,
    save_image,
    write_raw,
    write_sidecar,
)

f32 = arrays(np.float32, st.integers(1, 64), elements=st.floats(width=32, allow_nan=False, allow_infinity=False))


@settings(max_examples=50, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(f32)
def test_raw_round_trip_is_bitwise(tmp_path, values):
    p = tmp_path / "a.f32"
    write_raw(p, values)
    back = read_raw(p, values.size)
    assert back.dtype == np.float64
    np.testing.assert_array_equal(back.astype(np.float32).view(np.uint32), values.view(np.uint32))


def test_raw_layout_and_errors(tmp_path):
    p = tmp_path / "a.f32"
    write_raw(p, [1.0, -2.0])
    assert p.read_bytes() == np.array([1.0, -2.0], "<f4").tobytes()
    with pytest.raises(ValueError, match="expected 3"):
        read_raw(p, 3)
    with pytest.raises(ValueError, match="non-finite"):
        write_raw(p, [np.nan])


def test_sidecar_round_trip(tmp_path):
    p = tmp_path / "s.txt"
    meta = {"nx": 12, "pixel_size": 0.1 + 0.2, "label": "OS-LALM-8-0.1-1", "I0": 1e5}
    write_sidecar(p, meta)
    assert read_sidecar(p) == meta
    p.write_text("# comment\n\nnx = 3\nbroken line\n")
    with pytest.raises(ValueError, match=":4:"):
        read_sidecar(p)


def test_grid_and_geometry_meta():
    grid, geo = ImageGrid(8, 6, 0.5, 1.25), Geometry(10, 7, 0.3)
    assert grid_from_meta(grid_meta(grid)) == grid
    assert geometry_from_meta(geometry_meta(geo)) == geo
    with pytest.raises(ValueError, match="lacks ny"):
        grid_from_meta({"nx": 3, "pixel_size": 1.0})


def test_image_round_trip_with_dotted_stem(tmp_path, rng):
    grid = ImageGrid(5, 4)
    x = rng.standard_normal(grid.size).astype(np.float32)
    raw, side = save_image(tmp_path / "OS-LALM-8-0.1-1", x, grid, algorithm="OS-LALM-8-0.1-1")
    assert raw.name == "OS-LALM-8-0.1-1.f32" and side.name == "OS-LALM-8-0.1-1.txt"
    back, g = load_image(tmp_path / "OS-LALM-8-0.1-1")
    assert g == grid
    np.testing.assert_array_equal(back, x)
    with pytest.raises(ValueError):
        save_image(tmp_path / "bad", x[:-1], grid)


def test_pgm_orientation_and_window(tmp_path):
    grid = ImageGrid(3, 2)
    x = np.array([0.0, 0.5, 1.0, 2.0, 2.0, 2.0])  # bottom row first
    export_pgm(tmp_path / "a.pgm", x, grid, window=(0.0, 1.0))
    img = read_pgm(tmp_path / "a.pgm")
    assert img.shape == (2, 3)
    np.testing.assert_array_equal(img[0], [65535, 65535, 65535])
    np.testing.assert_array_equal(img[1], [0, 32768, 65535])
    export_pgm(tmp_path / "b.pgm", np.full(6, 3.0), grid)
    assert read_pgm(tmp_path / "b.pgm").max() == 0
