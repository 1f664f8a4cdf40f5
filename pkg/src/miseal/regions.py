"""Star-shaped integration regions with piecewise-smooth boundaries.

Each region knows its reference point ``z0`` (the point it is star-shaped
around), its exact area, and how to produce midpoint quadrature rules for
its boundary (with outward unit normals) and its interior.  Boundary
quadrature drives the flux form of the minutiae count, interior
quadrature the divergence form; both use the region's natural
parameterisation so the domain itself is represented exactly.
"""

import numpy as np


class StarRegion:
    """Base class; concrete regions implement geometry and quadrature."""

    kind = "star"

    @property
    def reference_point(self):
        return self._z0

    @property
    def area(self):
        raise NotImplementedError

    @property
    def radius(self):
        """sup of |z - z0| over the region (the r(A) of the local limit)."""
        raise NotImplementedError

    def contains(self, points):
        raise NotImplementedError

    def bounding_box(self):
        raise NotImplementedError

    def boundary_quadrature(self, step):
        """Midpoint rule along the boundary.

        Returns ``(points, normals, weights)`` where weights are arc
        lengths and normals are outward unit vectors.
        """
        raise NotImplementedError

    def interior_quadrature(self, step):
        """Midpoint rule over the interior: ``(points, weights)``."""
        raise NotImplementedError


def _segment_rule(a, b, step):
    """Midpoints and spacing for one straight segment."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = float(np.hypot(*(b - a)))
    n = max(1, int(np.ceil(length / step)))
    s = (np.arange(n) + 0.5) / n
    pts = a[None, :] + s[:, None] * (b - a)[None, :]
    return pts, length / n


class RectangleRegion(StarRegion):
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]``."""

    kind = "rectangle"

    def __init__(self, x0, y0, x1, y1, reference_point=None):
        if not (x1 > x0 and y1 > y0):
            raise ValueError("rectangle must have positive width and height")
        self.x0, self.y0, self.x1, self.y1 = map(float, (x0, y0, x1, y1))
        if reference_point is None:
            reference_point = (0.5 * (x0 + x1), 0.5 * (y0 + y1))
        self._z0 = np.asarray(reference_point, dtype=float)
        if not self.contains(self._z0[None, :])[0]:
            raise ValueError("reference point must lie inside the rectangle")

    @classmethod
    def centred(cls, centre, half_width, half_height=None):
        cx, cy = float(centre[0]), float(centre[1])
        hw = float(half_width)
        hh = hw if half_height is None else float(half_height)
        return cls(cx - hw, cy - hh, cx + hw, cy + hh, reference_point=(cx, cy))

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def radius(self):
        corners = np.array(
            [
                [self.x0, self.y0],
                [self.x1, self.y0],
                [self.x1, self.y1],
                [self.x0, self.y1],
            ]
        )
        return float(np.max(np.hypot(*(corners - self._z0).T)))

    def contains(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (
            (pts[:, 0] >= self.x0)
            & (pts[:, 0] <= self.x1)
            & (pts[:, 1] >= self.y0)
            & (pts[:, 1] <= self.y1)
        )

    def bounding_box(self):
        return self.x0, self.x1, self.y0, self.y1

    def boundary_quadrature(self, step):
        # Counter-clockwise: bottom, right, top, left.
        corners = [
            (self.x0, self.y0),
            (self.x1, self.y0),
            (self.x1, self.y1),
            (self.x0, self.y1),
        ]
        normals = [(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]
        pts_all, nrm_all, wgt_all = [], [], []
        for k in range(4):
            pts, h = _segment_rule(corners[k], corners[(k + 1) % 4], step)
            pts_all.append(pts)
            nrm_all.append(np.tile(normals[k], (len(pts), 1)))
            wgt_all.append(np.full(len(pts), h))
        return np.vstack(pts_all), np.vstack(nrm_all), np.concatenate(wgt_all)

    def interior_quadrature(self, step):
        nx = max(1, int(np.ceil((self.x1 - self.x0) / step)))
        ny = max(1, int(np.ceil((self.y1 - self.y0) / step)))
        hx = (self.x1 - self.x0) / nx
        hy = (self.y1 - self.y0) / ny
        xs = self.x0 + (np.arange(nx) + 0.5) * hx
        ys = self.y0 + (np.arange(ny) + 0.5) * hy
        gx, gy = np.meshgrid(xs, ys)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        return pts, np.full(len(pts), hx * hy)


class AnnularSectorRegion(StarRegion):
    """Sector of an annulus: radii in ``[r_inner, r_outer]``, angles within
    ``half_angle`` of ``axis_angle`` around ``centre``.

    The reference point sits on the axis at the middle radius, so the
    region is star-shaped around it for any half angle up to pi/2.
    """

    kind = "annular_sector"

    def __init__(self, centre, axis_angle, half_angle, r_inner, r_outer):
        if not (0.0 < half_angle <= 0.5 * np.pi):
            raise ValueError("half_angle must lie in (0, pi/2]")
        if not (0.0 < r_inner < r_outer):
            raise ValueError("need 0 < r_inner < r_outer")
        self.centre = np.asarray(centre, dtype=float)
        self.axis_angle = float(axis_angle)
        self.half_angle = float(half_angle)
        self.r_inner = float(r_inner)
        self.r_outer = float(r_outer)
        mid = 0.5 * (r_inner + r_outer)
        self._z0 = self.centre + mid * np.array(
            [np.cos(self.axis_angle), np.sin(self.axis_angle)]
        )

    @property
    def area(self):
        return self.half_angle * (self.r_outer ** 2 - self.r_inner ** 2)

    @property
    def radius(self):
        # The farthest boundary point from z0 is always one of the corners.
        corners = []
        for rho in (self.r_inner, self.r_outer):
            for phi in (self.axis_angle - self.half_angle, self.axis_angle + self.half_angle):
                corners.append(self.centre + rho * np.array([np.cos(phi), np.sin(phi)]))
        return float(np.max(np.hypot(*(np.array(corners) - self._z0).T)))

    def contains(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = pts - self.centre
        rho = np.hypot(rel[:, 0], rel[:, 1])
        dphi = np.arctan2(rel[:, 1], rel[:, 0]) - self.axis_angle
        dphi = (dphi + np.pi) % (2.0 * np.pi) - np.pi
        return (
            (rho >= self.r_inner)
            & (rho <= self.r_outer)
            & (np.abs(dphi) <= self.half_angle)
        )

    def bounding_box(self):
        phis = np.linspace(
            self.axis_angle - self.half_angle, self.axis_angle + self.half_angle, 181
        )
        ring = np.concatenate([phis, phis])
        rhos = np.concatenate(
            [np.full(len(phis), self.r_inner), np.full(len(phis), self.r_outer)]
        )
        xs = self.centre[0] + rhos * np.cos(ring)
        ys = self.centre[1] + rhos * np.sin(ring)
        return float(xs.min()), float(xs.max()), float(ys.min()), float(ys.max())

    def _arc_rule(self, rho, step):
        length = 2.0 * self.half_angle * rho
        n = max(1, int(np.ceil(length / step)))
        phi = self.axis_angle - self.half_angle + (np.arange(n) + 0.5) * (
            2.0 * self.half_angle / n
        )
        pts = self.centre + rho * np.column_stack([np.cos(phi), np.sin(phi)])
        radial = np.column_stack([np.cos(phi), np.sin(phi)])
        return pts, radial, length / n

    def boundary_quadrature(self, step):
        pts_all, nrm_all, wgt_all = [], [], []
        # Outer arc, outward normal points away from the centre.
        pts, radial, h = self._arc_rule(self.r_outer, step)
        pts_all.append(pts)
        nrm_all.append(radial)
        wgt_all.append(np.full(len(pts), h))
        # Inner arc, outward normal points toward the centre.
        pts, radial, h = self._arc_rule(self.r_inner, step)
        pts_all.append(pts)
        nrm_all.append(-radial)
        wgt_all.append(np.full(len(pts), h))
        # Two radial sides; outward normals are the tangential directions.
        for sign in (-1.0, 1.0):
            phi = self.axis_angle + sign * self.half_angle
            e = np.array([np.cos(phi), np.sin(phi)])
            perp = sign * np.array([-np.sin(phi), np.cos(phi)])
            a = self.centre + self.r_inner * e
            b = self.centre + self.r_outer * e
            pts, h = _segment_rule(a, b, step)
            pts_all.append(pts)
            nrm_all.append(np.tile(perp, (len(pts), 1)))
            wgt_all.append(np.full(len(pts), h))
        return np.vstack(pts_all), np.vstack(nrm_all), np.concatenate(wgt_all)

    def interior_quadrature(self, step):
        # Midpoint rule in polar coordinates; the area element rho drho dphi
        # makes the weights exact for the domain.
        nr = max(1, int(np.ceil((self.r_outer - self.r_inner) / step)))
        na = max(1, int(np.ceil(2.0 * self.half_angle * self.r_outer / step)))
        dr = (self.r_outer - self.r_inner) / nr
        da = 2.0 * self.half_angle / na
        rho = self.r_inner + (np.arange(nr) + 0.5) * dr
        phi = self.axis_angle - self.half_angle + (np.arange(na) + 0.5) * da
        rr, pp = np.meshgrid(rho, phi)
        pts = self.centre + np.column_stack(
            [(rr * np.cos(pp)).ravel(), (rr * np.sin(pp)).ravel()]
        )
        wgt = (rr * dr * da).ravel()
        return pts, wgt


class PolygonRegion(StarRegion):
    """Simple polygon, star-shaped around a given reference point."""

    kind = "polygon"

    def __init__(self, vertices, reference_point=None):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[0] < 3 or verts.shape[1] != 2:
            raise ValueError("need at least three 2-d vertices")
        area2 = _signed_area2(verts)
        if abs(area2) < 1e-12:
            raise ValueError("polygon is degenerate")
        if area2 < 0:
            verts = verts[::-1].copy()
        self.vertices = verts
        if reference_point is None:
            reference_point = verts.mean(axis=0)
        self._z0 = np.asarray(reference_point, dtype=float)
        if not self.contains(self._z0[None, :])[0]:
            raise ValueError("reference point must lie inside the polygon")

    @property
    def area(self):
        return 0.5 * abs(_signed_area2(self.vertices))

    @property
    def radius(self):
        return float(np.max(np.hypot(*(self.vertices - self._z0).T)))

    def contains(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = pts[:, 0], pts[:, 1]
        inside = np.zeros(len(pts), dtype=bool)
        v = self.vertices
        n = len(v)
        for k in range(n):
            x0, y0 = v[k]
            x1, y1 = v[(k + 1) % n]
            crosses = (y0 > y) != (y1 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            inside ^= crosses & (x < np.where(crosses, xi, np.inf))
        return inside

    def bounding_box(self):
        v = self.vertices
        return (
            float(v[:, 0].min()),
            float(v[:, 0].max()),
            float(v[:, 1].min()),
            float(v[:, 1].max()),
        )

    def boundary_quadrature(self, step):
        pts_all, nrm_all, wgt_all = [], [], []
        v = self.vertices
        n = len(v)
        for k in range(n):
            a, b = v[k], v[(k + 1) % n]
            d = b - a
            length = np.hypot(*d)
            outward = np.array([d[1], -d[0]]) / length
            pts, h = _segment_rule(a, b, step)
            pts_all.append(pts)
            nrm_all.append(np.tile(outward, (len(pts), 1)))
            wgt_all.append(np.full(len(pts), h))
        return np.vstack(pts_all), np.vstack(nrm_all), np.concatenate(wgt_all)

    def interior_quadrature(self, step):
        # Fan triangulation around z0 (valid because the region is star
        # shaped there), each triangle subdivided uniformly.
        pts_all, wgt_all = [], []
        v = self.vertices
        n = len(v)
        for k in range(n):
            a, b = v[k], v[(k + 1) % n]
            pts, wgt = _triangle_rule(self._z0, a, b, step)
            pts_all.append(pts)
            wgt_all.append(wgt)
        return np.vstack(pts_all), np.concatenate(wgt_all)


def _signed_area2(verts):
    x, y = verts[:, 0], verts[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _triangle_rule(p0, p1, p2, step):
    """Centroid rule on a uniform barycentric subdivision of a triangle.

    Splitting each edge into n parts yields n^2 congruent sub-triangles
    (upright and inverted); their centroids with equal weights integrate
    linear functions exactly.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    sides = [np.hypot(*(p1 - p0)), np.hypot(*(p2 - p1)), np.hypot(*(p0 - p2))]
    n = max(1, int(np.ceil(max(sides) / step)))
    area = abs(
        (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])
    ) / 2.0
    e1 = (p1 - p0) / n
    e2 = (p2 - p0) / n
    pts = []
    for i in range(n):
        for j in range(n - i):
            base = p0 + i * e1 + j * e2
            pts.append(base + (e1 + e2) / 3.0)
            # Inverted companion triangle, absent on the diagonal row.
            if i + j <= n - 2:
                pts.append(base + 2.0 * (e1 + e2) / 3.0)
    pts = np.array(pts)
    return pts, np.full(len(pts), area / (n * n))
