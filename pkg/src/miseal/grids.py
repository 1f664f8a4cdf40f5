"""Raster data model: observation masks, orientation grids, scalar grids.

Conventions used throughout the package: arrays are indexed ``[row, col]``
with rows running along y and columns along x, so pixel ``(i, j)`` is the
square cell of side ``pixel_size`` centred at

    x = origin[0] + j * pixel_size,   y = origin[1] + i * pixel_size.

``NaN`` marks excluded pixels in scalar grids; every raster is stored as
NaN outside its mask so arithmetic cannot silently leak values across the
mask boundary.
"""

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import GeometryMismatch


class RegionOfInterest:
    """Binary pixel mask plus the geometry shared by all rasters on it."""

    def __init__(self, mask, pixel_size=1.0, origin=(0.0, 0.0)):
        mask = np.ascontiguousarray(mask, dtype=bool)
        if mask.ndim != 2:
            raise ValueError("mask must be a 2-d array")
        if not np.isfinite(pixel_size) or pixel_size <= 0:
            raise ValueError("pixel_size must be a positive number")
        if not mask.any():
            raise ValueError("mask is empty: the region of interest has no area")
        self.mask = mask
        self.pixel_size = float(pixel_size)
        self.origin = (float(origin[0]), float(origin[1]))

    @classmethod
    def full(cls, shape, pixel_size=1.0, origin=(0.0, 0.0)):
        """Rectangular region covering the whole grid."""
        return cls(np.ones(shape, dtype=bool), pixel_size, origin)

    @property
    def shape(self):
        return self.mask.shape

    @property
    def area(self):
        """Total in-mask area, counting pixels as full cells."""
        return float(self.mask.sum()) * self.pixel_size ** 2

    def same_geometry(self, other):
        return (
            self.shape == other.shape
            and self.pixel_size == other.pixel_size
            and self.origin == other.origin
        )

    def pixel_indices(self, points):
        """Row/column indices of the cells containing ``points`` (may be off-grid)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cols = np.floor((pts[:, 0] - self.origin[0]) / self.pixel_size + 0.5).astype(np.int64)
        rows = np.floor((pts[:, 1] - self.origin[1]) / self.pixel_size + 0.5).astype(np.int64)
        return rows, cols

    def contains(self, points):
        """Boolean array: does the containing pixel lie in the mask?"""
        rows, cols = self.pixel_indices(points)
        h, w = self.mask.shape
        ok = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
        out = np.zeros(rows.shape, dtype=bool)
        out[ok] = self.mask[rows[ok], cols[ok]]
        return out

    def pixel_centers(self):
        """Coordinate arrays ``(xs, ys)`` of every pixel centre, shape = mask shape."""
        h, w = self.mask.shape
        xs = self.origin[0] + np.arange(w) * self.pixel_size
        ys = self.origin[1] + np.arange(h) * self.pixel_size
        return np.meshgrid(xs, ys)

    def bounding_box(self):
        """Tight bounding box ``(xmin, xmax, ymin, ymax)`` of the in-mask cells."""
        rows, cols = np.nonzero(self.mask)
        ps = self.pixel_size
        xmin = self.origin[0] + (cols.min() - 0.5) * ps
        xmax = self.origin[0] + (cols.max() + 0.5) * ps
        ymin = self.origin[1] + (rows.min() - 0.5) * ps
        ymax = self.origin[1] + (rows.max() + 0.5) * ps
        return float(xmin), float(xmax), float(ymin), float(ymax)


class ScalarGrid:
    """Real-valued raster bound to a :class:`RegionOfInterest`.

    ``NaN`` marks excluded pixels.  Values outside the mask are forced to
    NaN on construction, so the usable support is ``mask & isfinite``.
    """

    def __init__(self, values, roi):
        values = np.asarray(values, dtype=float)
        if values.shape != roi.shape:
            raise GeometryMismatch(
                f"grid shape {values.shape} does not match mask shape {roi.shape}"
            )
        self.values = np.where(roi.mask, values, np.nan)
        self.roi = roi

    @property
    def support(self):
        """Pixels that are in-mask and not excluded."""
        return self.roi.mask & np.isfinite(self.values)

    def value_at(self, points):
        """NaN-aware bilinear interpolation at continuous coordinates."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return bilinear_lookup(self.values, self.roi, pts[:, 0], pts[:, 1])

    def integral(self):
        """Sum over the support times the pixel area."""
        return float(np.nansum(self.values)) * self.roi.pixel_size ** 2


class OrientationGrid:
    """Undirected orientation raster stored as doubled-angle components.

    An orientation is a line element, not a vector: theta and theta + pi
    describe the same ridge.  Storing ``(cos 2*theta, sin 2*theta)`` makes
    the representation continuous across that identification, which is
    what smoothing and interpolation need.
    """

    def __init__(self, cos2theta, sin2theta, roi):
        c = np.asarray(cos2theta, dtype=float)
        s = np.asarray(sin2theta, dtype=float)
        if c.shape != roi.shape or s.shape != roi.shape:
            raise GeometryMismatch(
                f"orientation shape {c.shape}/{s.shape} does not match mask {roi.shape}"
            )
        norm = np.hypot(c, s)
        bad = roi.mask & np.isfinite(norm) & (norm < 1e-12)
        if bad.any():
            raise ValueError("orientation grid has zero-length entries inside the mask")
        with np.errstate(invalid="ignore"):
            c = np.where(roi.mask, c / norm, np.nan)
            s = np.where(roi.mask, s / norm, np.nan)
        self.cos2 = c
        self.sin2 = s
        self.roi = roi

    @classmethod
    def from_angles(cls, theta, roi):
        theta = np.asarray(theta, dtype=float)
        return cls(np.cos(2.0 * theta), np.sin(2.0 * theta), roi)

    def angles(self):
        """Representative angles in ``[0, pi)``; NaN outside the support."""
        theta = 0.5 * np.arctan2(self.sin2, self.cos2)
        return np.where(theta < 0, theta + np.pi, theta)

    @property
    def support(self):
        return self.roi.mask & np.isfinite(self.cos2) & np.isfinite(self.sin2)


def bilinear_lookup(values, roi, xs, ys):
    """Bilinear interpolation that renormalises over finite corners.

    Corners that are off-grid or NaN drop out and the remaining weights
    are rescaled; the result is NaN only where no finite corner is left.
    This keeps interpolation usable up to the mask boundary without
    bleeding excluded values inward.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    h, w = values.shape
    jf = (xs - roi.origin[0]) / roi.pixel_size
    if_ = (ys - roi.origin[1]) / roi.pixel_size
    j0 = np.floor(jf).astype(np.int64)
    i0 = np.floor(if_).astype(np.int64)
    t = jf - j0
    u = if_ - i0
    acc = np.zeros(xs.shape)
    wacc = np.zeros(xs.shape)
    for di, dj, wgt in (
        (0, 0, (1 - t) * (1 - u)),
        (0, 1, t * (1 - u)),
        (1, 0, (1 - t) * u),
        (1, 1, t * u),
    ):
        i = i0 + di
        j = j0 + dj
        ok = (i >= 0) & (i < h) & (j >= 0) & (j < w)
        val = values[np.clip(i, 0, h - 1), np.clip(j, 0, w - 1)]
        good = ok & np.isfinite(val)
        acc += np.where(good, wgt * np.where(good, val, 0.0), 0.0)
        wacc += np.where(good, wgt, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(wacc > 1e-12, acc / np.where(wacc > 0, wacc, 1.0), np.nan)
    return out


def masked_gaussian(values, mask, sigma):
    """Gaussian smoothing restricted to a mask (normalised convolution).

    The kernel never sees values outside ``mask`` or NaN entries; output
    is NaN off the mask.  ``sigma`` is in pixels.
    """
    values = np.asarray(values, dtype=float)
    support = mask & np.isfinite(values)
    if sigma <= 0:
        return np.where(support, values, np.nan)
    filled = np.where(support, values, 0.0)
    weight = gaussian_filter(support.astype(float), sigma, mode="constant")
    smooth = gaussian_filter(filled, sigma, mode="constant")
    out = np.full(values.shape, np.nan)
    ok = mask & (weight > 1e-12)
    out[ok] = smooth[ok] / weight[ok]
    return out


def masked_gradient(values, mask, spacing):
    """First derivatives ``(d/dx, d/dy)`` inside a mask.

    Central differences where both neighbours exist, one-sided at the
    mask boundary, zero for isolated pixels.  NaN outside the mask.
    """
    v = np.where(mask & np.isfinite(np.asarray(values, dtype=float)), values, np.nan)
    valid = np.isfinite(v)
    gx = _axis_gradient(v, valid, axis=1, spacing=spacing)
    gy = _axis_gradient(v, valid, axis=0, spacing=spacing)
    return gx, gy


def _axis_gradient(v, valid, axis, spacing):
    minus = np.zeros_like(valid)
    plus = np.zeros_like(valid)
    vminus = np.full_like(v, np.nan)
    vplus = np.full_like(v, np.nan)
    if axis == 1:
        minus[:, 1:] = valid[:, :-1]
        plus[:, :-1] = valid[:, 1:]
        vminus[:, 1:] = v[:, :-1]
        vplus[:, :-1] = v[:, 1:]
    else:
        minus[1:, :] = valid[:-1, :]
        plus[:-1, :] = valid[1:, :]
        vminus[1:, :] = v[:-1, :]
        vplus[:-1, :] = v[1:, :]
    g = np.full_like(v, np.nan)
    central = valid & minus & plus
    g[central] = (vplus[central] - vminus[central]) / (2.0 * spacing)
    fwd = valid & plus & ~minus
    g[fwd] = (vplus[fwd] - v[fwd]) / spacing
    bwd = valid & minus & ~plus
    g[bwd] = (v[bwd] - vminus[bwd]) / spacing
    lone = valid & ~minus & ~plus
    g[lone] = 0.0
    return g
