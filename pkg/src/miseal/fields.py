"""Directed ridge flow and the necessary-minutiae count.

An orientation field only defines ridge directions up to sign.  On a
patch free of singularities one can pick signs so that neighbouring
pixels agree; the resulting unit field F, weighted by the ridge
frequency, is the flow whose boundary flux counts how many ridges must
end inside a region.  Two equivalent forms are implemented:

* boundary form: the absolute flux of F scaled by the frequency through
  the region boundary,
* area form: the integral of ``phi * div F + grad(phi) . F`` over the
  region, which the divergence theorem ties to the boundary form.

Shrinking the region around a point turns either form into the local
intensity ``mu = |phi * div F + grad(phi) . F|``, the density used as
the trend of the point process models elsewhere in the package.
"""

import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_dilation

from .errors import (
    DataError,
    EmptyPatch,
    GeometryMismatch,
    OutOfMask,
    SingularityInPatch,
)
from .grids import ScalarGrid, bilinear_lookup, masked_gaussian, masked_gradient

# A patch counts as singular when the mean doubled-angle vector is this
# short, or when |div F| exceeds 2 per pixel anywhere on it.
COHERENCE_THRESHOLD = 0.3
MAX_ABS_DIVERGENCE_PER_PIXEL = 2.0


def check_frequency(rf):
    """Validate a ridge-frequency grid.

    Strictly positive values are required wherever the grid is defined;
    inter-ridge distances outside the plausible 6..15 pixel band only
    draw a warning because coarse scans do produce them.
    """
    vals = rf.values[rf.support]
    if vals.size and np.any(vals <= 0):
        raise DataError("ridge frequency must be strictly positive inside the mask")
    if vals.size:
        spacing = 1.0 / vals / rf.roi.pixel_size
        lo, hi = float(spacing.min()), float(spacing.max())
        if lo < 6.0 or hi > 15.0:
            warnings.warn(
                f"inter-ridge distances span [{lo:.2f}, {hi:.2f}] px, "
                "outside the usual 6..15 px range",
                stacklevel=2,
            )


def _nearest_set_pixel(pixel_set, row, col):
    rows, cols = np.nonzero(pixel_set)
    if len(rows) == 0:
        raise EmptyPatch("patch contains no usable pixels")
    k = np.argmin((rows - row) ** 2 + (cols - col) ** 2)
    return int(rows[k]), int(cols[k])


def _coherence(cos2, sin2, pixels):
    c = cos2[pixels]
    s = sin2[pixels]
    good = np.isfinite(c) & np.isfinite(s)
    if not good.any():
        raise EmptyPatch("patch contains no defined orientations")
    return float(np.hypot(c[good].mean(), s[good].mean()))


def _select_signs(cos2, sin2, pixel_set, seed_pixel, seed_direction):
    """Choose a consistent direction per pixel of ``pixel_set``.

    Halving the doubled angle gives one of the two unit directions per
    pixel; a breadth-first sweep flips signs so that 4-neighbours never
    point against each other.  Components not reached from the seed are
    aligned with ``seed_direction`` independently.
    """
    h, w = pixel_set.shape
    theta = 0.5 * np.arctan2(sin2, cos2)
    ux = np.where(pixel_set, np.cos(theta), np.nan)
    uy = np.where(pixel_set, np.sin(theta), np.nan)
    sign = np.zeros((h, w), dtype=np.int8)

    sx, sy = float(seed_direction[0]), float(seed_direction[1])
    if np.hypot(sx, sy) < 1e-12:
        raise ValueError("seed direction must be a nonzero vector")

    def start(r, c):
        d = ux[r, c] * sx + uy[r, c] * sy
        sign[r, c] = 1 if d >= 0 else -1
        return deque([(r, c)])

    queue = start(*seed_pixel)
    remaining = pixel_set.copy()
    remaining[seed_pixel] = False
    while True:
        while queue:
            r, c = queue.popleft()
            for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= rr < h and 0 <= cc < w and remaining[rr, cc]:
                    d = ux[r, c] * ux[rr, cc] + uy[r, c] * uy[rr, cc]
                    sign[rr, cc] = sign[r, c] if d >= 0 else -sign[r, c]
                    remaining[rr, cc] = False
                    queue.append((rr, cc))
        left = np.argwhere(remaining)
        if len(left) == 0:
            break
        r, c = left[0]
        queue = start(int(r), int(c))
        remaining[r, c] = False

    fx = np.where(pixel_set, sign * ux, np.nan)
    fy = np.where(pixel_set, sign * uy, np.nan)
    _check_adjacent_agreement(fx, fy, pixel_set)
    return np.dstack([fx, fy])


def _check_adjacent_agreement(fx, fy, pixel_set):
    # The sweep only fixes tree edges; a genuine singularity shows up as
    # a remaining adjacent pair pointing against each other.
    for axis in (0, 1):
        a = pixel_set & np.roll(pixel_set, -1, axis=axis)
        if axis == 0:
            a[-1, :] = False
        else:
            a[:, -1] = False
        dot = fx * np.roll(fx, -1, axis=axis) + fy * np.roll(fy, -1, axis=axis)
        if np.any(a & (dot < -1e-9)):
            raise SingularityInPatch(
                "no sign choice makes neighbouring directions agree on this patch"
            )


def _smoothed_components(of, sigma):
    support = of.support
    cs = masked_gaussian(of.cos2, support, sigma)
    ss = masked_gaussian(of.sin2, support, sigma)
    return cs, ss, support


def local_direction_field(of, seed_direction, patch, smoothing_sigma=0.0,
                          coherence_threshold=COHERENCE_THRESHOLD):
    """Directed unit flow on a patch, aligned with ``seed_direction``.

    Returns an ``(H, W, 2)`` array, NaN outside the patch.  Raises
    :class:`SingularityInPatch` when orientations on the patch cannot be
    directed consistently and :class:`EmptyPatch` when the patch misses
    the mask entirely.
    """
    roi = of.roi
    xs, ys = roi.pixel_centers()
    inside = patch.contains(np.column_stack([xs.ravel(), ys.ravel()])).reshape(roi.shape)
    cs, ss, support = _smoothed_components(of, smoothing_sigma)
    pixel_set = inside & support
    if not pixel_set.any():
        raise EmptyPatch("patch does not intersect the usable orientation raster")
    if _coherence(cs, ss, pixel_set) < coherence_threshold:
        raise SingularityInPatch("orientation coherence below threshold on this patch")
    ref = patch.reference_point
    rows, cols = roi.pixel_indices(ref[None, :])
    seed_pixel = (int(rows[0]), int(cols[0]))
    if not (
        0 <= seed_pixel[0] < roi.shape[0]
        and 0 <= seed_pixel[1] < roi.shape[1]
        and pixel_set[seed_pixel]
    ):
        seed_pixel = _nearest_set_pixel(pixel_set, *seed_pixel)
    return _select_signs(cs, ss, pixel_set, seed_pixel, seed_direction)


def divergence(direction_field, smoothing_sigma=0.0, roi=None):
    """Divergence of a directed flow raster.

    ``direction_field`` is an ``(H, W, 2)`` array, NaN where undefined.
    Central differences in the interior, one-sided at the support
    boundary.  The support must be at least 3 pixels wide in each
    direction for the interior to exist at all.
    """
    f = np.asarray(direction_field, dtype=float)
    if f.ndim != 3 or f.shape[2] != 2:
        raise ValueError("direction field must have shape (H, W, 2)")
    from .grids import RegionOfInterest

    if roi is None:
        roi = RegionOfInterest.full(f.shape[:2])
    elif f.shape[:2] != roi.shape:
        raise GeometryMismatch("direction field shape does not match the mask")
    valid = roi.mask & np.isfinite(f[:, :, 0]) & np.isfinite(f[:, :, 1])
    rows, cols = np.nonzero(valid)
    if len(rows) == 0 or np.ptp(rows) < 2 or np.ptp(cols) < 2:
        raise ValueError("direction field support is too small to differentiate")
    fx = np.where(valid, f[:, :, 0], np.nan)
    fy = np.where(valid, f[:, :, 1], np.nan)
    if smoothing_sigma > 0:
        fx = masked_gaussian(fx, valid, smoothing_sigma)
        fy = masked_gaussian(fy, valid, smoothing_sigma)
    dfx_dx, _ = masked_gradient(fx, valid, roi.pixel_size)
    _, dfy_dy = masked_gradient(fy, valid, roi.pixel_size)
    return ScalarGrid(dfx_dx + dfy_dy, roi)


@dataclass
class _RegionField:
    """Selected flow and integrand pieces prepared for one region."""

    fx: np.ndarray
    fy: np.ndarray
    phi: np.ndarray
    integrand: np.ndarray
    inside: np.ndarray
    max_abs_div: float


def _prepare_region(region, of, rf, smoothing_sigma, seed_direction,
                    coherence_threshold, clip_to_mask, need_integrand):
    roi = of.roi
    if not roi.same_geometry(rf.roi):
        raise GeometryMismatch("orientation and frequency grids disagree on geometry")
    check_frequency(rf)

    xs, ys = roi.pixel_centers()
    inside = region.contains(np.column_stack([xs.ravel(), ys.ravel()])).reshape(roi.shape)
    if not clip_to_mask and np.any(inside & ~roi.mask):
        raise OutOfMask("region leaves the region of interest")

    cs, ss, osupport = _smoothed_components(of, smoothing_sigma)
    patch_pixels = inside & osupport
    if not patch_pixels.any():
        raise EmptyPatch("region does not intersect the usable orientation raster")
    if _coherence(cs, ss, patch_pixels) < coherence_threshold:
        raise SingularityInPatch("orientation coherence below threshold on this region")

    # Work on a dilated pixel set so that interpolation at the boundary
    # and central differences just inside it have full stencils.
    pixel_set = binary_dilation(inside, iterations=3) & osupport
    rows, cols = roi.pixel_indices(region.reference_point[None, :])
    seed_pixel = (int(rows[0]), int(cols[0]))
    if not (
        0 <= seed_pixel[0] < roi.shape[0]
        and 0 <= seed_pixel[1] < roi.shape[1]
        and pixel_set[seed_pixel]
    ):
        seed_pixel = _nearest_set_pixel(patch_pixels, *seed_pixel)
    field = _select_signs(cs, ss, pixel_set, seed_pixel, seed_direction)
    fx, fy = field[:, :, 0], field[:, :, 1]

    phi = masked_gaussian(rf.values, rf.support, smoothing_sigma)

    integrand = None
    max_abs_div = np.nan
    if need_integrand:
        dfx_dx, _ = masked_gradient(fx, pixel_set, roi.pixel_size)
        _, dfy_dy = masked_gradient(fy, pixel_set, roi.pixel_size)
        div = dfx_dx + dfy_dy
        patch_div = div[patch_pixels]
        patch_div = patch_div[np.isfinite(patch_div)]
        max_abs_div = float(np.max(np.abs(patch_div))) if patch_div.size else 0.0
        if max_abs_div > MAX_ABS_DIVERGENCE_PER_PIXEL / roi.pixel_size:
            raise SingularityInPatch(
                f"|div F| reaches {max_abs_div:.3g}, beyond the singularity threshold"
            )
        gpx, gpy = masked_gradient(phi, rf.support, roi.pixel_size)
        integrand = phi * div + fx * gpx + fy * gpy
    return _RegionField(fx, fy, phi, integrand, inside, max_abs_div)


def signed_ridge_flux(region, of, rf, smoothing_sigma=0.0, step=None,
                      seed_direction=(1.0, 0.0),
                      coherence_threshold=COHERENCE_THRESHOLD):
    """Signed boundary flux of the frequency-weighted directed flow.

    The sign depends on the seed direction; flipping the seed negates
    the result.  The absolute value is the necessary-minutiae count.
    """
    roi = of.roi
    if step is None:
        step = 0.5 * roi.pixel_size
    prep = _prepare_region(region, of, rf, smoothing_sigma, seed_direction,
                           coherence_threshold, clip_to_mask=False,
                           need_integrand=False)
    pts, normals, weights = region.boundary_quadrature(step)
    fxq = bilinear_lookup(prep.fx, roi, pts[:, 0], pts[:, 1])
    fyq = bilinear_lookup(prep.fy, roi, pts[:, 0], pts[:, 1])
    norm = np.hypot(fxq, fyq)
    phiq = bilinear_lookup(prep.phi, roi, pts[:, 0], pts[:, 1])
    bad = ~np.isfinite(norm) | (norm < 1e-9) | ~np.isfinite(phiq)
    if bad.any():
        raise OutOfMask("region boundary leaves the usable field support")
    # Interpolated unit vectors land slightly inside the unit circle;
    # renormalise so the flux sees a genuine unit flow.
    fxq /= norm
    fyq /= norm
    flux = phiq * (fxq * normals[:, 0] + fyq * normals[:, 1]) * weights
    return float(flux.sum())


def necessary_minutiae_number_boundary(region, of, rf, smoothing_sigma=0.0,
                                       step=None, seed_direction=(1.0, 0.0)):
    """Necessary-minutiae count of a region, boundary form."""
    return abs(signed_ridge_flux(region, of, rf, smoothing_sigma, step,
                                 seed_direction))


def signed_ridge_divergence_integral(region, of, rf, smoothing_sigma=0.0,
                                     step=None, seed_direction=(1.0, 0.0),
                                     clip_to_mask=False,
                                     coherence_threshold=COHERENCE_THRESHOLD):
    """Signed area integral of ``phi div F + grad(phi) . F`` over a region."""
    roi = of.roi
    if step is None:
        step = 0.5 * roi.pixel_size
    prep = _prepare_region(region, of, rf, smoothing_sigma, seed_direction,
                           coherence_threshold, clip_to_mask=clip_to_mask,
                           need_integrand=True)
    pts, weights = region.interior_quadrature(step)
    if clip_to_mask:
        keep = roi.contains(pts)
        pts, weights = pts[keep], weights[keep]
        if len(pts) == 0:
            raise EmptyPatch("region does not intersect the mask")
    vals = bilinear_lookup(prep.integrand, roi, pts[:, 0], pts[:, 1])
    bad = ~np.isfinite(vals)
    if bad.any():
        if not clip_to_mask:
            raise OutOfMask("region reaches pixels where the integrand is undefined")
        vals, weights = vals[~bad], weights[~bad]
    return float(np.sum(vals * weights))


def necessary_minutiae_number_area(region, of, rf, smoothing_sigma=0.0,
                                   step=None, seed_direction=(1.0, 0.0),
                                   clip_to_mask=False):
    """Necessary-minutiae count of a region, divergence-theorem form."""
    return abs(signed_ridge_divergence_integral(
        region, of, rf, smoothing_sigma, step, seed_direction, clip_to_mask))


def necessary_intensity(of, rf, roi=None, smoothing_sigma=8.0, patch_size=32,
                        coherence_threshold=COHERENCE_THRESHOLD):
    """Per-pixel intensity of necessary minutiae.

    The raster is processed in square patches; each patch gets its own
    directed flow (the sign ambiguity cancels in the absolute value).
    Patches where no consistent flow exists, by low coherence of the
    smoothed orientations or a blowing-up divergence, come back as NaN.

    Parameters
    ----------
    of, rf : OrientationGrid, ScalarGrid
        Orientation and ridge-frequency rasters on a shared geometry.
    roi : RegionOfInterest, optional
        Restriction mask; defaults to the grids' own.
    smoothing_sigma : float
        Gaussian presmoothing, in pixels, for both inputs.
    patch_size : int
        Patch side length in pixels.

    Returns
    -------
    ScalarGrid
        The intensity ``mu``; NaN on excluded (singular) patches.
    """
    base = of.roi if roi is None else roi
    if not base.same_geometry(of.roi) or not base.same_geometry(rf.roi):
        raise GeometryMismatch("orientation, frequency and mask must share geometry")
    check_frequency(rf)
    h, w = base.shape
    ps = base.pixel_size

    cs, ss, osupport = _smoothed_components(of, smoothing_sigma)
    support = osupport & base.mask
    phi = masked_gaussian(rf.values, rf.support, smoothing_sigma)
    gpx, gpy = masked_gradient(phi, rf.support, ps)

    out = np.full((h, w), np.nan)
    for r0 in range(0, h, patch_size):
        for c0 in range(0, w, patch_size):
            r1, c1 = min(r0 + patch_size, h), min(c0 + patch_size, w)
            tile = np.zeros((h, w), dtype=bool)
            tile[r0:r1, c0:c1] = support[r0:r1, c0:c1]
            if not tile.any():
                continue
            try:
                if _coherence(cs, ss, tile) < coherence_threshold:
                    continue
                pixel_set = binary_dilation(tile, iterations=1) & support
                seed = _nearest_set_pixel(tile, (r0 + r1) // 2, (c0 + c1) // 2)
                field = _select_signs(cs, ss, pixel_set, seed, (1.0, 0.0))
            except SingularityInPatch:
                continue
            fx, fy = field[:, :, 0], field[:, :, 1]
            dfx_dx, _ = masked_gradient(fx, pixel_set, ps)
            _, dfy_dy = masked_gradient(fy, pixel_set, ps)
            div = dfx_dx + dfy_dy
            tile_div = div[tile]
            tile_div = tile_div[np.isfinite(tile_div)]
            if tile_div.size and np.max(np.abs(tile_div)) > MAX_ABS_DIVERGENCE_PER_PIXEL / ps:
                continue
            mu = np.abs(phi * div + fx * gpx + fy * gpy)
            out[tile] = mu[tile]
    return ScalarGrid(out, base)


@dataclass
class LimitCheck:
    """Shrinking-region comparison of ``m(A)/|A|`` against ``mu(z0)``."""

    mu0: float
    errors: list

    def __iter__(self):
        return iter(self.errors)


def local_limit_check(z0, of, rf, half_widths=(16.0, 8.0, 4.0, 2.0),
                      smoothing_sigma=0.0):
    """Check the local limit ``m(A) ~ mu(z0) |A|`` on shrinking squares.

    Returns per-square pairs ``(r(A), |m(A)/|A| - mu(z0)|)`` together
    with ``mu(z0)`` itself, largest square first.
    """
    z0 = np.asarray(z0, dtype=float)
    from .regions import RectangleRegion

    largest = RectangleRegion.centred(z0, max(half_widths))
    prep = _prepare_region(largest, of, rf, smoothing_sigma, (1.0, 0.0),
                           COHERENCE_THRESHOLD, clip_to_mask=False,
                           need_integrand=True)
    mu0 = float(abs(bilinear_lookup(prep.integrand, of.roi,
                                    z0[None, 0], z0[None, 1])[0]))
    pairs = []
    for hw in sorted(half_widths, reverse=True):
        square = RectangleRegion.centred(z0, hw)
        m = necessary_minutiae_number_boundary(square, of, rf, smoothing_sigma)
        pairs.append((square.radius, abs(m / square.area - mu0)))
    return LimitCheck(mu0, pairs)
