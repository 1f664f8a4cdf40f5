"""Synthetic orientation and ridge-frequency fields with known closed forms.

These generators exist so that every numerical routine in the package can
be checked against hand-computable answers: a radial orientation field
has divergence 1/rho, a tangential one is divergence free, and constant
or separable frequency surfaces make the flux integrals elementary.
"""

import numpy as np

from .grids import OrientationGrid, RegionOfInterest, ScalarGrid


def square_roi(size, pixel_size=1.0, origin=(0.0, 0.0)):
    """Full square region of ``size`` x ``size`` pixels."""
    return RegionOfInterest.full((size, size), pixel_size, origin)


def constant_orientation(roi, theta=0.0):
    """Parallel ridges at angle ``theta`` everywhere."""
    shape = roi.shape
    return OrientationGrid.from_angles(np.full(shape, float(theta)), roi)


def radial_orientation(roi, centre):
    """Orientations along rays from ``centre`` (undirected version of z/|z|)."""
    xs, ys = roi.pixel_centers()
    theta = np.arctan2(ys - centre[1], xs - centre[0])
    return OrientationGrid.from_angles(theta, roi)


def tangential_orientation(roi, centre):
    """Orientations along circles around ``centre`` (divergence-free flow)."""
    xs, ys = roi.pixel_centers()
    theta = np.arctan2(ys - centre[1], xs - centre[0]) + 0.5 * np.pi
    return OrientationGrid.from_angles(theta, roi)


def constant_frequency(roi, inter_ridge=8.0):
    """Constant ridge frequency; ``inter_ridge`` is the ridge distance d."""
    return ScalarGrid(np.full(roi.shape, 1.0 / float(inter_ridge)), roi)


def linear_frequency(roi, base, slope, axis="x"):
    """Frequency varying linearly along one coordinate axis."""
    xs, ys = roi.pixel_centers()
    coord = xs if axis == "x" else ys
    return ScalarGrid(base + slope * coord, roi)


def arc_length_frequency(roi, centre, base, slope):
    """Frequency linear in the tangential arc length around ``centre``.

    Along the clockwise tangential flow (y, -x)/|z| the arc length from
    the positive x axis is -rho*phi, so the flow sees slope ``-slope``.
    The polar angle phi has its branch cut on the negative x axis; keep
    test regions away from it.
    """
    xs, ys = roi.pixel_centers()
    dx = xs - centre[0]
    dy = ys - centre[1]
    rho = np.hypot(dx, dy)
    phi = np.arctan2(dy, dx)
    return ScalarGrid(base + slope * rho * phi, roi)


def annulus_roi(size, centre, r_inner, r_outer, pixel_size=1.0, origin=(0.0, 0.0)):
    """Square grid masked to an annulus; excludes the singular centre."""
    roi = RegionOfInterest.full((size, size), pixel_size, origin)
    xs, ys = roi.pixel_centers()
    rho = np.hypot(xs - centre[0], ys - centre[1])
    mask = (rho >= r_inner) & (rho <= r_outer)
    return RegionOfInterest(mask, pixel_size, origin)
