"""Region geometry and quadrature rules against closed forms."""

import numpy as np
import pytest

from miseal.regions import AnnularSectorRegion, PolygonRegion, RectangleRegion


REGIONS = [
    RectangleRegion(1.0, -2.0, 4.5, 1.0),
    AnnularSectorRegion((0.0, 0.0), 0.3, np.pi / 5, 8.0, 15.0),
    PolygonRegion([(0, 0), (4, 0), (5, 3), (2, 5), (-1, 2)]),
]


@pytest.mark.parametrize("region", REGIONS, ids=lambda r: r.kind)
def test_interior_quadrature_reproduces_area(region):
    _, weights = region.interior_quadrature(step=0.5)
    assert weights.sum() == pytest.approx(region.area, rel=1e-12)


@pytest.mark.parametrize("region", REGIONS, ids=lambda r: r.kind)
def test_interior_quadrature_integrates_linear_functions(region):
    # Midpoint/centroid rules are exact for affine integrands, up to the
    # polar area element of the sector which is quadratic in rho.
    pts, weights = region.interior_quadrature(step=0.25)
    val = np.sum((2.0 * pts[:, 0] - 0.5 * pts[:, 1] + 1.0) * weights)
    fine_pts, fine_w = region.interior_quadrature(step=0.02)
    ref = np.sum((2.0 * fine_pts[:, 0] - 0.5 * fine_pts[:, 1] + 1.0) * fine_w)
    assert val == pytest.approx(ref, rel=1e-4)


@pytest.mark.parametrize("region", REGIONS, ids=lambda r: r.kind)
def test_boundary_quadrature_total_weight_is_perimeter(region):
    _, _, weights = region.boundary_quadrature(step=0.25)
    if isinstance(region, RectangleRegion):
        perim = 2 * (3.5 + 3.0)
    elif isinstance(region, AnnularSectorRegion):
        perim = 2 * (np.pi / 5) * (8.0 + 15.0) + 2 * 7.0
    else:
        v = region.vertices
        perim = np.hypot(*(np.roll(v, -1, axis=0) - v).T).sum()
    assert weights.sum() == pytest.approx(perim, rel=1e-12)


@pytest.mark.parametrize("region", REGIONS, ids=lambda r: r.kind)
def test_constant_flow_has_zero_net_flux(region):
    # A closed boundary integrates any constant vector field to zero.
    # Straight edges are exact; arcs carry the midpoint rule's O(step^2)
    # error, so check the tolerance and the convergence order there.
    def flux(step, f):
        _, normals, weights = region.boundary_quadrature(step)
        return np.sum((normals @ np.asarray(f)) * weights)

    for f in ([1.0, 0.0], [0.3, -0.8]):
        coarse = flux(0.1, f)
        if isinstance(region, AnnularSectorRegion):
            assert abs(coarse) < 1e-4
            assert abs(flux(0.05, f)) < 0.3 * abs(coarse)
        else:
            assert coarse == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("region", REGIONS, ids=lambda r: r.kind)
def test_divergence_theorem_on_linear_field(region):
    # F = (x, y) has div F = 2, so the net flux must equal 2 |A|.
    pts, normals, weights = region.boundary_quadrature(step=0.02)
    flux = np.sum(np.sum(pts * normals, axis=1) * weights)
    assert flux == pytest.approx(2.0 * region.area, rel=1e-4)


@pytest.mark.parametrize("region", REGIONS, ids=lambda r: r.kind)
def test_contains_agrees_with_quadrature_support(region):
    pts, _ = region.interior_quadrature(step=0.3)
    assert region.contains(pts).all()
    x0, x1, y0, y1 = region.bounding_box()
    outside = np.array([[x0 - 1.0, y0 - 1.0], [x1 + 1.0, y1 + 1.0]])
    assert not region.contains(outside).any()


def test_reference_points_and_radii():
    rect = RectangleRegion(0.0, 0.0, 2.0, 4.0)
    assert np.allclose(rect.reference_point, [1.0, 2.0])
    assert rect.radius == pytest.approx(np.hypot(1.0, 2.0))

    sector = AnnularSectorRegion((1.0, 1.0), 0.0, np.pi / 4, 2.0, 6.0)
    assert np.allclose(sector.reference_point, [5.0, 1.0])
    corners = [
        (1.0 + r * np.cos(a), 1.0 + r * np.sin(a))
        for r in (2.0, 6.0)
        for a in (-np.pi / 4, np.pi / 4)
    ]
    far = max(np.hypot(c[0] - 5.0, c[1] - 1.0) for c in corners)
    assert sector.radius == pytest.approx(far)

    assert sector.area == pytest.approx((np.pi / 4) * (36.0 - 4.0))


def test_sector_contains_uses_wrapped_angles():
    sector = AnnularSectorRegion((0.0, 0.0), np.pi, np.pi / 6, 1.0, 2.0)
    # The axis crosses the atan2 branch cut; both sides must count.
    inside = [[-1.5 * np.cos(0.1), 1.5 * np.sin(0.1)],
              [-1.5 * np.cos(0.1), -1.5 * np.sin(0.1)]]
    assert sector.contains(inside).all()


def test_polygon_orientation_is_normalised():
    cw = PolygonRegion([(0, 0), (0, 2), (2, 2), (2, 0)])
    ccw = PolygonRegion([(0, 0), (2, 0), (2, 2), (0, 2)])
    assert cw.area == ccw.area == pytest.approx(4.0)
    # Outward normals must point away regardless of input winding.
    for region in (cw, ccw):
        pts, normals, weights = region.boundary_quadrature(step=0.5)
        centre = np.array([1.0, 1.0])
        assert np.all(np.sum((pts - centre) * normals, axis=1) > 0)


def test_degenerate_regions_rejected():
    with pytest.raises(ValueError):
        RectangleRegion(0, 0, 0, 1)
    with pytest.raises(ValueError):
        AnnularSectorRegion((0, 0), 0.0, np.pi / 4, 5.0, 3.0)
    with pytest.raises(ValueError):
        PolygonRegion([(0, 0), (1, 1), (2, 2)])
