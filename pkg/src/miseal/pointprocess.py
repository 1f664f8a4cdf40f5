"""Point patterns and the two finite point process models on a window.

Densities are taken with respect to the unit-rate Poisson process on the
region of interest.  The homogeneous Poisson model has density
``exp((1 - lam) |X|) lam^n``; the Strauss model with a hard core weights
each point by an inhomogeneous activity ``beta * mu(z)``, every pair
closer than the interaction radius by ``gamma``, and forbids pairs at or
under the hard-core distance outright.  Its normalising constant is
intractable and never computed; everything downstream works with ratios.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import DegenerateTrend, DuplicatePoints, OutOfMask


@dataclass(frozen=True)
class InteractionRadii:
    """Hard-core distance h and interaction distance R, 0 < h < R."""

    hard_core: float
    interaction: float

    def __post_init__(self):
        if not (0.0 < self.hard_core < self.interaction):
            raise ValueError("need 0 < hard_core < interaction")


class PointPattern:
    """Finite set of points inside a region of interest."""

    def __init__(self, points, roi, validate=True):
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            pts = np.empty((0, 2))
        pts = np.atleast_2d(pts)
        if pts.shape[1] != 2:
            raise ValueError("points must be an (n, 2) array")
        self.points = pts.copy()
        self.roi = roi
        if validate and len(pts):
            if not roi.contains(pts).all():
                raise OutOfMask("point pattern leaves the region of interest")
            order = np.lexsort((pts[:, 1], pts[:, 0]))
            srt = pts[order]
            if np.any(np.all(srt[1:] == srt[:-1], axis=1)):
                raise DuplicatePoints("pattern contains coincident points")

    @property
    def n(self):
        return len(self.points)

    def __len__(self):
        return len(self.points)


def _points_of(pattern):
    return np.asarray(getattr(pattern, "points", pattern), dtype=float).reshape(-1, 2)


def min_pair_distance(pattern):
    """Smallest inter-point distance; inf for fewer than two points."""
    pts = _points_of(pattern)
    if len(pts) < 2:
        return math.inf
    return float(pdist(pts).min())


def close_pair_count(pattern, r):
    """Number of unordered pairs at distance <= r."""
    pts = _points_of(pattern)
    if len(pts) < 2:
        return 0
    return int(np.count_nonzero(pdist(pts) <= r))


def neighbour_count(z, pattern, r):
    """Points of the pattern within distance r of z, z itself excluded."""
    pts = _points_of(pattern)
    if len(pts) == 0:
        return 0
    d = np.hypot(pts[:, 0] - z[0], pts[:, 1] - z[1])
    return int(np.count_nonzero((d <= r) & (d > 0.0)))


def log_poisson_density(pattern, lam):
    """Log density of the homogeneous Poisson model, unit-rate reference."""
    if lam < 0:
        raise ValueError("intensity must be non-negative")
    area = pattern.roi.area
    n = len(pattern)
    if lam == 0.0:
        return (1.0 - lam) * area if n == 0 else -math.inf
    return (1.0 - lam) * area + n * math.log(lam)


@dataclass
class ModelParams:
    """Parameters of the Strauss-with-hard-core model plus the Poisson rate.

    ``trend`` is the necessary-minutiae intensity ``mu``; the activity at
    z is ``beta * mu(z)``.  ``lam`` rides along for the joint model used
    during label inference and is ignored by the Strauss sampler.
    """

    lam: float
    beta: float
    gamma: float
    radii: InteractionRadii
    trend: object  # ScalarGrid

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError("gamma must lie in [0, 1]")


def log_strauss_density_unnorm(pattern, params):
    """Log of the unnormalised Strauss-with-hard-core density.

    -inf when the hard core is violated or a point sits where the trend
    is zero or excluded.
    """
    pts = _points_of(pattern)
    radii = params.radii
    if len(pts) >= 2:
        d = pdist(pts)
        if d.min() <= radii.hard_core:
            return -math.inf
        s = int(np.count_nonzero(d <= radii.interaction))
    else:
        s = 0
    total = 0.0
    if len(pts):
        mu = params.trend.value_at(pts)
        w = params.beta * mu
        if np.any(~np.isfinite(w) | (w <= 0)):
            return -math.inf
        total += float(np.sum(np.log(w)))
    if s:
        if params.gamma == 0.0:
            return -math.inf
        total += s * math.log(params.gamma)
    return total


class TrendLookup:
    """Scalar fast path of ``ScalarGrid.value_at`` for tight loops.

    Mirrors the bilinear corner weights and NaN renormalisation exactly,
    with plain Python arithmetic so samplers avoid per-call numpy
    overhead.
    """

    def __init__(self, grid):
        vals = grid.values
        self.filled = np.where(np.isfinite(vals), vals, 0.0)
        self.finite = np.isfinite(vals).astype(float)
        self.h, self.w = vals.shape
        self.ox, self.oy = grid.roi.origin
        self.ps = grid.roi.pixel_size

    def __call__(self, x, y):
        jf = (x - self.ox) / self.ps
        if_ = (y - self.oy) / self.ps
        j0 = math.floor(jf)
        i0 = math.floor(if_)
        t = jf - j0
        u = if_ - i0
        acc = 0.0
        wacc = 0.0
        for di, dj, wgt in ((0, 0, (1 - t) * (1 - u)), (0, 1, t * (1 - u)),
                            (1, 0, (1 - t) * u), (1, 1, t * u)):
            i = i0 + di
            j = j0 + dj
            if 0 <= i < self.h and 0 <= j < self.w and self.finite[i, j]:
                acc += wgt * self.filled[i, j]
                wacc += wgt
        if wacc <= 1e-12:
            return math.nan
        return acc / wacc


def sample_poisson(roi, lam, rng=None):
    """Draw a homogeneous Poisson pattern on the mask."""
    if lam < 0:
        raise ValueError("intensity must be non-negative")
    rng = np.random.default_rng(rng)
    n = int(rng.poisson(lam * roi.area))
    xmin, xmax, ymin, ymax = roi.bounding_box()
    out = np.empty((n, 2))
    have = 0
    while have < n:
        todo = n - have
        batch = max(32, int(todo / max(roi.area / ((xmax - xmin) * (ymax - ymin)), 0.05)))
        cand = np.column_stack([
            rng.uniform(xmin, xmax, size=batch),
            rng.uniform(ymin, ymax, size=batch),
        ])
        keep = cand[roi.contains(cand)]
        take = min(len(keep), todo)
        out[have:have + take] = keep[:take]
        have += take
    return PointPattern(out, roi)


def sample_strauss_hardcore(params, steps=None, rng=None, start=None):
    """Sample the Strauss-with-hard-core model by birth-death-move moves.

    Each step picks birth, death or move with probability 1/3.  Births
    propose a uniform location on the mask; moves jitter a point by a
    Gaussian of scale R/2.  Acceptance ratios follow from the model's
    conditional intensity; death and move proposals on an empty pattern
    count as rejections.

    Parameters
    ----------
    params : ModelParams
        beta, gamma, radii and the trend surface (lam is ignored).
    steps : int, optional
        Chain length; default scales with the expected count.
    rng : seed or numpy Generator
    start : PointPattern, optional
        Initial state, hard-core feasible; empty by default.
    """
    rng = np.random.default_rng(rng)
    trend = params.trend
    roi = trend.roi
    usable = roi.mask & np.isfinite(trend.values) & (trend.values > 0)
    if not usable.any():
        raise DegenerateTrend("trend has no positive values inside the mask")
    lookup = TrendLookup(trend)
    area = roi.area
    beta = params.beta
    gamma = params.gamma
    h2 = params.radii.hard_core ** 2
    r2 = params.radii.interaction ** 2
    if steps is None:
        expected = beta * trend.integral()
        steps = max(10_000, int(50 * math.ceil(max(expected, 1.0))))

    cap = 256
    px = np.empty(cap)
    py = np.empty(cap)
    n = 0
    if start is not None:
        pts = _points_of(start)
        if len(pts) >= 2 and pdist(pts).min() <= params.radii.hard_core:
            raise ValueError("start pattern violates the hard core")
        n = len(pts)
        while cap < n:
            cap *= 2
        px = np.empty(cap)
        py = np.empty(cap)
        px[:n] = pts[:, 0]
        py[:n] = pts[:, 1]

    xmin, xmax, ymin, ymax = roi.bounding_box()
    mask = roi.mask
    hgt, wid = mask.shape
    ox, oy = roi.origin
    ps = roi.pixel_size
    sigma_move = 0.5 * params.radii.interaction

    def in_mask(x, y):
        j = math.floor((x - ox) / ps + 0.5)
        i = math.floor((y - oy) / ps + 0.5)
        return 0 <= i < hgt and 0 <= j < wid and mask[i, j]

    def draw_location():
        while True:
            x = xmin + (xmax - xmin) * rng.random()
            y = ymin + (ymax - ymin) * rng.random()
            if in_mask(x, y):
                return x, y

    def pair_stats(x, y, skip=-1):
        # Neighbour count within R and hard-core feasibility against the
        # current points, optionally ignoring one index.
        if n == 0:
            return 0, True
        d2 = (px[:n] - x) ** 2 + (py[:n] - y) ** 2
        if skip >= 0:
            d2[skip] = math.inf
        if bool((d2 <= h2).any()):
            return 0, False
        return int(np.count_nonzero(d2 <= r2)), True

    for _ in range(steps):
        move = rng.random()
        if move < 1.0 / 3.0:
            x, y = draw_location()
            t, feasible = pair_stats(x, y)
            if not feasible:
                continue
            w = beta * lookup(x, y)
            if not (w > 0):
                continue
            ratio = w * gamma ** t * area / (n + 1)
            if rng.random() < ratio:
                if n == cap:
                    cap *= 2
                    px = np.concatenate([px, np.empty(cap - len(px))])
                    py = np.concatenate([py, np.empty(cap - len(py))])
                px[n] = x
                py[n] = y
                n += 1
        elif move < 2.0 / 3.0:
            if n == 0:
                continue
            i = int(rng.integers(n))
            d2 = (px[:n] - px[i]) ** 2 + (py[:n] - py[i]) ** 2
            d2[i] = math.inf
            t = int(np.count_nonzero(d2 <= r2))
            w = beta * lookup(px[i], py[i])
            denom = area * w * gamma ** t if w > 0 else 0.0
            # Zero density at the current point: removal is free.
            accept = denom == 0.0 or rng.random() < n / denom
            if accept:
                px[i] = px[n - 1]
                py[i] = py[n - 1]
                n -= 1
        else:
            if n == 0:
                continue
            i = int(rng.integers(n))
            x = px[i] + sigma_move * rng.standard_normal()
            y = py[i] + sigma_move * rng.standard_normal()
            if not in_mask(x, y):
                continue
            t_new, feasible = pair_stats(x, y, skip=i)
            if not feasible:
                continue
            w_new = beta * lookup(x, y)
            if not (w_new > 0):
                continue
            d2 = (px[:n] - px[i]) ** 2 + (py[:n] - py[i]) ** 2
            d2[i] = math.inf
            t_old = int(np.count_nonzero(d2 <= r2))
            w_old = beta * lookup(px[i], py[i])
            denom = w_old * gamma ** t_old if w_old > 0 else 0.0
            accept = denom == 0.0 or \
                rng.random() < (w_new * gamma ** t_new) / denom
            if accept:
                px[i] = x
                py[i] = y
    return PointPattern(np.column_stack([px[:n], py[:n]]), roi)
