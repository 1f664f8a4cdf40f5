"""Maximum pseudo-likelihood for the Strauss-with-hard-core model.

The pseudo-likelihood replaces the intractable normalising constant with
a product of conditional intensities, turned into a tractable objective
by Berman-Turner quadrature: the window is tiled into square cells, each
cell contributes one dummy point at its centre, and every quadrature
point (data or dummy) carries the cell's in-mask area split evenly over
the points it hosts.  With the trend shape known, the free parameters
are (log beta, log gamma) and the objective is concave, so a Newton
iteration suffices.
"""

import math
import warnings

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .pointprocess import _points_of

# Fallback estimates for degenerate inputs: the prior means of the
# interaction model used elsewhere in the package.
FALLBACK_BETA = 1.0
FALLBACK_GAMMA = 2.0 / 7.0
GAMMA_CLIP = 1e-4


def _quadrature(eta, radii, trend, dummy_spacing):
    """Quadrature points, weights, trend values, neighbour counts."""
    roi = trend.roi
    pts = _points_of(eta)
    xmin, xmax, ymin, ymax = roi.bounding_box()
    if dummy_spacing is None:
        dummy_spacing = max(2.0 * roi.pixel_size, math.sqrt(roi.area / 800.0))
    nx = max(1, int(math.ceil((xmax - xmin) / dummy_spacing)))
    ny = max(1, int(math.ceil((ymax - ymin) / dummy_spacing)))
    sx = (xmax - xmin) / nx
    sy = (ymax - ymin) / ny

    # Cell areas from the pixels where the trend is actually defined:
    # that is the domain the model lives on.
    support = trend.support
    cxs, cys = roi.pixel_centers()
    px = cxs[support]
    py = cys[support]
    cell_area, _, _ = np.histogram2d(
        px, py, bins=[nx, ny], range=[[xmin, xmax], [ymin, ymax]],
        weights=np.full(px.shape, roi.pixel_size ** 2),
    )

    def cell_of(x, y):
        cx = np.clip(((x - xmin) / sx).astype(int), 0, nx - 1)
        cy = np.clip(((y - ymin) / sy).astype(int), 0, ny - 1)
        return cx, cy

    dummy_x, dummy_y = np.meshgrid(
        xmin + (np.arange(nx) + 0.5) * sx, ymin + (np.arange(ny) + 0.5) * sy
    )
    dummies = np.column_stack([dummy_x.ravel(), dummy_y.ravel()])
    dmu = trend.value_at(dummies)
    keep = np.isfinite(dmu) & (cell_area[cell_of(dummies[:, 0], dummies[:, 1])] > 0)
    dummies = dummies[keep]
    dmu = dmu[keep]

    counts = np.zeros((nx, ny), dtype=int)
    cx, cy = cell_of(dummies[:, 0], dummies[:, 1])
    np.add.at(counts, (cx, cy), 1)
    if len(pts):
        cx, cy = cell_of(pts[:, 0], pts[:, 1])
        np.add.at(counts, (cx, cy), 1)

    def weights_for(xy):
        cx, cy = cell_of(xy[:, 0], xy[:, 1])
        return cell_area[cx, cy] / np.maximum(counts[cx, cy], 1)

    # Neighbour counts against the data pattern and hard-core feasibility.
    if len(pts):
        d_dummy = cdist(dummies, pts)
        t_dummy = (d_dummy <= radii.interaction).sum(axis=1)
        ok_dummy = d_dummy.min(axis=1) > radii.hard_core
        dd = squareform(pdist(pts))
        np.fill_diagonal(dd, np.inf)
        t_data = (dd <= radii.interaction).sum(axis=1)
    else:
        t_dummy = np.zeros(len(dummies), dtype=int)
        ok_dummy = np.ones(len(dummies), dtype=bool)
        t_data = np.zeros(0, dtype=int)

    mu_data = trend.value_at(pts) if len(pts) else np.empty(0)
    q_pts = np.vstack([pts, dummies[ok_dummy]]) if len(pts) else dummies[ok_dummy]
    q_mu = np.concatenate([mu_data, dmu[ok_dummy]])
    q_t = np.concatenate([t_data, t_dummy[ok_dummy]])
    q_w = weights_for(q_pts)
    return mu_data, t_data, q_mu, q_t, q_w


def mple_fit(eta, radii, trend, dummy_spacing=None, max_iter=100, tol=1e-8):
    """Fit (beta, gamma) by maximum pseudo-likelihood with known trend.

    Returns the prior-mean fallback ``(1, 2/7)`` for patterns with fewer
    than two points, and falls back to the last Newton iterate with a
    warning if 100 steps do not converge.  The gamma estimate is clipped
    to ``(1e-4, 1 - 1e-4)``.
    """
    pts = _points_of(eta)
    if len(pts) < 2:
        return FALLBACK_BETA, FALLBACK_GAMMA
    mu_data, t_data, q_mu, q_t, q_w = _quadrature(eta, radii, trend, dummy_spacing)
    if np.any(~np.isfinite(mu_data) | (mu_data <= 0)):
        raise ValueError("pattern points must sit where the trend is positive")
    n = len(pts)
    sum_t = float(t_data.sum())
    wmu = q_w * q_mu

    if q_t.max(initial=0) == 0 and sum_t == 0:
        # No quadrature point sees a neighbour: gamma drops out of the
        # objective entirely and only the Poisson part identifies beta.
        beta = n / float(wmu.sum())
        return float(beta), FALLBACK_GAMMA

    lo, hi = math.log(GAMMA_CLIP), math.log(1.0 - GAMMA_CLIP)

    def series(g):
        e = wmu * np.exp(g * q_t)
        return float(e.sum()), float((e * q_t).sum()), float((e * q_t ** 2).sum())

    g = math.log(0.5)
    s0, _, _ = series(g)
    b = math.log(n / s0)
    converged = False
    for _ in range(max_iter):
        s0, s1, s2 = series(g)
        eb = math.exp(b)
        grad_b = n - eb * s0
        grad_g = sum_t - eb * s1
        # At a clipped boundary an outward-pointing gamma gradient is
        # as converged as the constrained problem gets.
        if (g <= lo and grad_g < 0) or (g >= hi and grad_g > 0):
            grad_g = 0.0
        if math.hypot(grad_b, grad_g) < tol * max(1.0, n):
            converged = True
            break
        if grad_g == 0.0:
            b = math.log(n / s0)
            continue
        h_bb = -eb * s0
        h_bg = -eb * s1
        h_gg = -eb * s2
        det = h_bb * h_gg - h_bg * h_bg
        if abs(det) < 1e-300:
            # Flat gamma direction: profile beta and pin gamma in place.
            b = math.log(n / s0)
            converged = True
            break
        b -= (h_gg * grad_b - h_bg * grad_g) / det
        g -= (h_bb * grad_g - h_bg * grad_b) / det
        g = min(max(g, lo), hi)
    if not converged:
        warnings.warn("pseudo-likelihood Newton iteration did not converge; "
                      "returning the last iterate", stacklevel=2)
    return float(math.exp(b)), float(min(max(math.exp(g), GAMMA_CLIP),
                                         1.0 - GAMMA_CLIP))
