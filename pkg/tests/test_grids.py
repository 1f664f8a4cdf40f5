"""Raster model: geometry, interpolation, masked calculus."""

import numpy as np
import pytest

from miseal.errors import GeometryMismatch
from miseal.grids import (
    OrientationGrid,
    RegionOfInterest,
    ScalarGrid,
    bilinear_lookup,
    masked_gaussian,
    masked_gradient,
)


def test_pixel_indexing_round_trip():
    roi = RegionOfInterest.full((7, 9), pixel_size=2.0, origin=(10.0, -4.0))
    xs, ys = roi.pixel_centers()
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    rows, cols = roi.pixel_indices(pts)
    ii, jj = np.meshgrid(np.arange(9), np.arange(7))
    assert np.array_equal(cols, ii.ravel())
    assert np.array_equal(rows, jj.ravel())


def test_pixel_cells_cover_half_open_intervals():
    roi = RegionOfInterest.full((4, 4))
    # Just below the cell edge belongs to pixel 0, the edge itself to pixel 1.
    rows, cols = roi.pixel_indices([[0.499, 0.0], [0.5, 0.0], [-0.499, 0.0]])
    assert list(cols) == [0, 1, 0]


def test_area_and_bounding_box():
    mask = np.zeros((10, 10), dtype=bool)
    mask[2:5, 3:9] = True
    roi = RegionOfInterest(mask, pixel_size=0.5, origin=(1.0, 2.0))
    assert roi.area == pytest.approx(18 * 0.25)
    xmin, xmax, ymin, ymax = roi.bounding_box()
    assert xmin == pytest.approx(1.0 + (3 - 0.5) * 0.5)
    assert xmax == pytest.approx(1.0 + (8 + 0.5) * 0.5)
    assert ymin == pytest.approx(2.0 + (2 - 0.5) * 0.5)
    assert ymax == pytest.approx(2.0 + (4 + 0.5) * 0.5)


def test_scalar_grid_masks_values_and_rejects_bad_shapes():
    mask = np.zeros((3, 3), dtype=bool)
    mask[1, 1] = True
    roi = RegionOfInterest(mask)
    grid = ScalarGrid(np.ones((3, 3)), roi)
    assert np.isnan(grid.values[0, 0])
    assert grid.values[1, 1] == 1.0
    assert grid.integral() == pytest.approx(1.0)
    with pytest.raises(GeometryMismatch):
        ScalarGrid(np.ones((2, 3)), roi)


def test_bilinear_matches_hand_computation():
    roi = RegionOfInterest.full((2, 2))
    values = np.array([[1.0, 2.0], [3.0, 5.0]])
    # At (0.25, 0.75): t = 0.25, u = 0.75.
    expect = (1 - 0.25) * (1 - 0.75) * 1 + 0.25 * (1 - 0.75) * 2 \
        + (1 - 0.25) * 0.75 * 3 + 0.25 * 0.75 * 5
    got = bilinear_lookup(values, roi, np.array([0.25]), np.array([0.75]))
    assert got[0] == pytest.approx(expect)


def test_bilinear_renormalises_over_missing_corners():
    roi = RegionOfInterest.full((2, 2))
    values = np.array([[1.0, np.nan], [3.0, np.nan]])
    got = bilinear_lookup(values, roi, np.array([0.5]), np.array([0.5]))
    # Right column is excluded; the two finite corners share the weight.
    assert got[0] == pytest.approx(2.0)
    nothing = bilinear_lookup(np.full((2, 2), np.nan), roi,
                              np.array([0.5]), np.array([0.5]))
    assert np.isnan(nothing[0])


def test_bilinear_is_exact_on_linear_surfaces():
    rng = np.random.default_rng(7)
    roi = RegionOfInterest.full((20, 30), pixel_size=0.5, origin=(-3.0, 2.0))
    xs, ys = roi.pixel_centers()
    values = 0.7 * xs - 1.3 * ys + 0.25
    px = rng.uniform(-2.8, 11.0, size=200)
    py = rng.uniform(2.2, 11.2, size=200)
    got = bilinear_lookup(values, roi, px, py)
    assert np.allclose(got, 0.7 * px - 1.3 * py + 0.25, atol=1e-12)


def test_masked_gaussian_preserves_constants_and_support():
    mask = np.zeros((20, 20), dtype=bool)
    mask[4:16, 6:18] = True
    values = np.where(mask, 3.25, 100.0)
    sm = masked_gaussian(values, mask, sigma=2.5)
    assert np.allclose(sm[mask], 3.25)
    assert np.all(np.isnan(sm[~mask]))


def test_masked_gradient_matches_plain_gradient_inside():
    rng = np.random.default_rng(3)
    values = rng.normal(size=(12, 15))
    mask = np.ones((12, 15), dtype=bool)
    gx, gy = masked_gradient(values, mask, spacing=2.0)
    ref_gy, ref_gx = np.gradient(values, 2.0)
    assert np.allclose(gx, ref_gx)
    assert np.allclose(gy, ref_gy)


def test_masked_gradient_one_sided_at_mask_edge():
    mask = np.zeros((3, 5), dtype=bool)
    mask[1, 1:4] = True
    values = np.where(mask, np.arange(15, dtype=float).reshape(3, 5), np.nan)
    gx, gy = masked_gradient(values, mask, spacing=1.0)
    # Row 1 holds 6, 7, 8 on the three masked pixels.
    assert gx[1, 1] == pytest.approx(1.0)   # forward difference
    assert gx[1, 2] == pytest.approx(1.0)   # central
    assert gx[1, 3] == pytest.approx(1.0)   # backward
    assert gy[1, 2] == pytest.approx(0.0)   # isolated in y
    assert np.isnan(gx[0, 0])


def test_orientation_grid_normalises_and_reports_angles():
    roi = RegionOfInterest.full((2, 2))
    theta = np.array([[0.0, 0.4], [1.2, 3.0]])
    of = OrientationGrid.from_angles(theta, roi)
    norms = np.hypot(of.cos2, of.sin2)
    assert np.allclose(norms, 1.0, atol=1e-6)
    back = of.angles()
    assert np.allclose(np.cos(2 * back), np.cos(2 * theta), atol=1e-12)
    assert np.all((back >= 0) & (back < np.pi))


def test_orientation_grid_rejects_zero_vectors_in_mask():
    roi = RegionOfInterest.full((2, 2))
    c = np.array([[1.0, 0.0], [1.0, 1.0]])
    s = np.array([[0.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        OrientationGrid(c, s, roi)
