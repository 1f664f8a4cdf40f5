"""Patch regression, simulation studies and the deletion experiment.

Three evidence pipelines sit on top of the field and inference layers.
Patch counting tiles the mask into roughly equal rectangles, evaluates
the geometric minutiae number on each and pairs it with the observed
count; an identity-link Poisson regression of count on number then
quantifies how much of the empirical intensity the geometry explains.
The simulation study draws ground truth from the priors, simulates a
superposition of necessary and random points and checks that the
posterior recovers what was planted.  The deletion experiment compares
two patterns after removing the posterior-random points against removing
equally many uniformly chosen ones, scored by a pluggable matcher.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import norm

from .errors import (
    EmptyPatch,
    NonConvergence,
    ScorerFailure,
    Separation,
    SingularityInPatch,
)
from .fields import necessary_minutiae_number_area
from .inference import Priors, run_miseal
from .pointprocess import (
    ModelParams,
    _points_of,
    sample_poisson,
    sample_strauss_hardcore,
)
from .regions import RectangleRegion

MATCH_RADIUS = 15.0
Z_95 = norm.ppf(0.975)
BARRIER_WEIGHTS = tuple(10.0 ** -k for k in range(2, 9))


# ---------------------------------------------------------------------------
# Patch counting


@dataclass(frozen=True)
class Patch:
    """One rectangle of the tiling with its in-mask area."""

    row: int
    col: int
    x0: float
    y0: float
    x1: float
    y1: float
    area: float

    def region(self):
        return RectangleRegion(self.x0, self.y0, self.x1, self.y1)


class PatchGrid:
    """Disjoint rectangular patches tiling the mask's bounding box.

    The row and column counts are chosen from the bounding-box aspect
    ratio so that the patch count is close to ``patches`` and patches
    are near square.  Rectangles whose in-mask area is zero are dropped,
    so every retained patch has positive area.
    """

    def __init__(self, roi, patches=100):
        if patches < 1:
            raise ValueError("patches must be positive")
        self.roi = roi
        xmin, xmax, ymin, ymax = roi.bounding_box()
        width = xmax - xmin
        height = ymax - ymin
        cols = max(1, int(round(math.sqrt(patches * width / height))))
        rows = max(1, int(round(patches / cols)))
        self.rows, self.cols = rows, cols
        self.x_edges = xmin + width * np.arange(cols + 1) / cols
        self.y_edges = ymin + height * np.arange(rows + 1) / rows

        xs, ys = roi.pixel_centers()
        in_mask = roi.mask
        # Pixel-count area per cell; histogram2d closes the last bin, so
        # boundary pixels land in the outermost patches.
        counts, _, _ = np.histogram2d(
            xs[in_mask], ys[in_mask],
            bins=[self.x_edges, self.y_edges])
        areas = counts.T * roi.pixel_size ** 2  # [row, col]
        kept = []
        for r in range(rows):
            for c in range(cols):
                if areas[r, c] > 0.0:
                    kept.append(Patch(
                        r, c,
                        float(self.x_edges[c]), float(self.y_edges[r]),
                        float(self.x_edges[c + 1]), float(self.y_edges[r + 1]),
                        float(areas[r, c])))
        self.patches = tuple(kept)

    def __len__(self):
        return len(self.patches)

    def count_points(self, points):
        """Observed count per patch, outermost bin edges closed."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if len(pts) == 0:
            return {(p.row, p.col): 0 for p in self.patches}
        counts, _, _ = np.histogram2d(
            pts[:, 0], pts[:, 1], bins=[self.x_edges, self.y_edges])
        grid = counts.T
        return {(p.row, p.col): int(grid[p.row, p.col]) for p in self.patches}


@dataclass(frozen=True)
class PatchRecord:
    """Geometric minutiae number and observed count on one patch."""

    patch: Patch
    number: float
    count: int


@dataclass(frozen=True)
class PatchData:
    """Per-patch regression input plus the patches that dropped out."""

    records: tuple
    excluded: tuple  # (patch, reason) pairs

    def pairs(self):
        """Array of (number, count) rows over the retained patches."""
        return np.array([[r.number, float(r.count)] for r in self.records])


def patch_counts(minutiae, of, rf, patch_grid, smoothing_sigma=0.0,
                 step=None):
    """Pair each patch's geometric minutiae number with its point count.

    Patches where the number cannot be evaluated, by a singularity or by
    missing field support, are excluded and reported with the reason.
    The count uses closed outermost bin edges, so the counts over all
    patches of a full tiling sum to the pattern size exactly.

    Parameters
    ----------
    minutiae : PointPattern or (n, 2) array
    of, rf : OrientationGrid, ScalarGrid
    patch_grid : PatchGrid
    smoothing_sigma : float, optional
        Gaussian scale passed through to the field integrals.
    step : float, optional
        Quadrature step; defaults to half a pixel.

    Returns
    -------
    PatchData
    """
    pts = _points_of(minutiae)
    counts = patch_grid.count_points(pts)
    records, excluded = [], []
    for patch in patch_grid.patches:
        try:
            number = necessary_minutiae_number_area(
                patch.region(), of, rf, smoothing_sigma, step,
                clip_to_mask=True)
        except (SingularityInPatch, EmptyPatch) as exc:
            excluded.append((patch, str(exc)))
            continue
        records.append(PatchRecord(patch, number, counts[(patch.row, patch.col)]))
    return PatchData(tuple(records), tuple(excluded))


# ---------------------------------------------------------------------------
# Identity-link Poisson regression


@dataclass(frozen=True)
class RegressionResult:
    """Identity-link Poisson fit of count on geometric number.

    ``p_intercept`` is the one-sided signed-root likelihood-ratio
    p-value for the intercept being positive (H0: beta0 = 0).
    """

    beta0: float
    beta1: float
    se0: float
    se1: float
    ci0: tuple
    ci1: tuple
    p_intercept: float
    log_lik: float
    data: np.ndarray

    def fitted(self, m):
        return self.beta0 + self.beta1 * np.asarray(m, dtype=float)


def _poisson_identity_loglik(y, mu):
    # Constant log(y!) terms dropped; y = 0 contributes -mu alone.
    pos = y > 0
    return float(np.sum(y[pos] * np.log(mu[pos])) - np.sum(mu))


def _newton_identity(y, X, start, weights, max_iter=200, tol=1e-10):
    """Barrier-damped Fisher scoring for the identity-link Poisson MLE."""
    beta = np.asarray(start, dtype=float).copy()
    for w in weights:
        for _ in range(max_iter):
            mu = X @ beta
            if np.any(mu <= 0):
                raise NonConvergence("mean left the positive cone")
            resid = y / mu - 1.0
            score = X.T @ (resid + w / mu)
            info = X.T @ (X * ((1.0 + w / mu) / mu)[:, None])
            try:
                step = np.linalg.solve(info, score)
            except np.linalg.LinAlgError as exc:
                raise NonConvergence("singular information matrix") from exc
            # Backtrack into the positive cone.
            scale = 1.0
            for _ in range(60):
                trial = beta + scale * step
                if np.all(X @ trial > 0):
                    break
                scale *= 0.5
            else:
                raise NonConvergence("no feasible step length")
            beta = beta + scale * step
            if np.max(np.abs(score)) < tol * (1.0 + len(y)):
                break
        else:
            raise NonConvergence(
                f"Fisher scoring did not converge at barrier weight {w:g}")
    return beta


def poisson_regression_identity(data, max_iter=200, tol=1e-10):
    """Fit count ~ Poisson(beta0 + beta1 * m) by maximum likelihood.

    Fisher scoring under the positivity constraint on the fitted means,
    enforced by a logarithmic barrier whose weight decays to 1e-8.
    Confidence intervals are Wald intervals from the observed
    information at the optimum.

    Parameters
    ----------
    data : sequence of (m, count) pairs or (n, 2) array

    Returns
    -------
    RegressionResult

    Raises
    ------
    ValueError
        Fewer than 3 points, or all m equal.
    Separation
        All counts zero; the intercept runs to the boundary.
    NonConvergence
        Scoring failed to reach the optimum.
    """
    arr = np.atleast_2d(np.asarray(data, dtype=float))
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("data must be (m, count) pairs")
    if len(arr) < 3:
        raise ValueError("need at least 3 patches to fit two parameters")
    m, y = arr[:, 0], arr[:, 1]
    if np.ptp(m) == 0.0:
        raise ValueError("all geometric numbers equal: slope unidentifiable")
    if np.any(y < 0):
        raise ValueError("counts must be non-negative")
    if not np.any(y > 0):
        raise Separation("all counts are zero: the MLE sits on the boundary")

    X = np.column_stack([np.ones(len(m)), m])
    # Least-squares start, shifted into the positive cone if needed.
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    lift = np.min(X @ beta)
    if lift <= 0:
        beta[0] += 1e-3 - lift
    beta = _newton_identity(y, X, beta, BARRIER_WEIGHTS, max_iter, tol)

    mu = X @ beta
    log_lik = _poisson_identity_loglik(y, mu)
    observed = X.T @ (X * (y / mu ** 2)[:, None])
    try:
        cov = np.linalg.inv(observed)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence("observed information is singular") from exc
    se = np.sqrt(np.diag(cov))
    ci0 = (beta[0] - Z_95 * se[0], beta[0] + Z_95 * se[0])
    ci1 = (beta[1] - Z_95 * se[1], beta[1] + Z_95 * se[1])

    p_intercept = _intercept_p_value(y, m, log_lik, max_iter, tol,
                                     positive=beta[0] > 0)
    return RegressionResult(float(beta[0]), float(beta[1]),
                            float(se[0]), float(se[1]),
                            (float(ci0[0]), float(ci0[1])),
                            (float(ci1[0]), float(ci1[1])),
                            p_intercept, log_lik, arr)


def _intercept_p_value(y, m, log_lik_full, max_iter, tol, positive):
    """Signed-root likelihood-ratio p-value for the intercept."""
    # Restricted model mu = beta1 * m.  Points with m = 0 force mu = 0
    # there; a positive count at such a point kills the restricted
    # likelihood outright.
    at_zero = m == 0.0
    if np.any(at_zero & (y > 0)):
        return 0.0 if positive else 1.0
    ym, mm = y[~at_zero], m[~at_zero]
    if len(mm) == 0 or not np.any(ym > 0):
        # Restricted fit degenerate; no evidence either way.
        return 0.5
    X1 = mm[:, None]
    start = np.array([max(np.sum(ym) / np.sum(mm), 1e-8)])
    beta1 = _newton_identity(ym, X1, start, BARRIER_WEIGHTS, max_iter, tol)
    log_lik_null = _poisson_identity_loglik(ym, X1 @ beta1)
    stat = max(0.0, 2.0 * (log_lik_full - log_lik_null))
    z = math.sqrt(stat)
    return float(norm.sf(z) if positive else norm.cdf(z))


# ---------------------------------------------------------------------------
# Simulation study


@dataclass(frozen=True)
class StudyReplicate:
    """Ground truth, posterior summary and label confusion of one run."""

    index: int
    truth: tuple  # (lam, beta, gamma)
    n_necessary: int
    n_random: int
    posterior_mean: tuple
    interval: tuple  # three (low, high) pairs, central 90%
    covered: tuple  # three bools
    beta_over: bool
    random_mislabelled: float  # fraction of planted-random with freq >= 0.5
    necessary_mislabelled: float
    acceptance: dict


@dataclass(frozen=True)
class StudyReport:
    """All replicates plus the prior means they were drawn from."""

    replicates: tuple
    prior_means: tuple  # (lam, beta, gamma)
    master_seed: int

    def coverage(self):
        """How many replicates covered each of (lam, beta, gamma)."""
        if not self.replicates:
            return (0, 0, 0)
        return tuple(int(sum(r.covered[i] for r in self.replicates))
                     for i in range(3))

    def beta_over_count(self):
        return int(sum(r.beta_over for r in self.replicates))

    def posterior_means(self):
        """Mean posterior means; the prior means when nothing ran."""
        if not self.replicates:
            return self.prior_means
        arr = np.array([r.posterior_mean for r in self.replicates])
        return tuple(float(v) for v in arr.mean(axis=0))


def _draw_truth(priors, rng):
    lam = rng.gamma(priors.a0, 1.0 / priors.b0)
    beta = rng.gamma(priors.a1, 1.0 / priors.b1)
    gamma = rng.beta(priors.p1, priors.q1)
    return lam, beta, gamma


def _simulate_superposition(trend, radii, truth, rng, steps=None):
    """Superpose a Strauss-with-hard-core sample and a Poisson sample."""
    lam, beta, gamma = truth
    params = ModelParams(lam, beta, gamma, radii, trend)
    for _ in range(100):
        necessary = _points_of(sample_strauss_hardcore(params, steps, rng))
        random = _points_of(sample_poisson(trend.roi, lam, rng))
        if len(necessary) + len(random) > 0:
            break
    else:
        raise RuntimeError("simulated pattern stayed empty after 100 tries")
    zeta = np.vstack([necessary, random]) if len(random) or len(necessary) \
        else np.empty((0, 2))
    labels = np.concatenate([np.ones(len(necessary), dtype=np.int8),
                             np.zeros(len(random), dtype=np.int8)])
    return zeta, labels


def simulation_study(field_sets, radii, priors=None, settings=None,
                     schedule=None, replicates=20, master_seed=0,
                     sampler_steps=None):
    """Prior-draw, simulate, infer and score over many replicates.

    Each replicate r draws (lam, beta, gamma) from the priors with the
    dedicated stream ``default_rng([master_seed, r])``, simulates the
    superposition on ``field_sets[r % len(field_sets)]``, runs the
    label-separation chain and records coverage of the central 90%
    posterior intervals along with the label confusion against the
    planted truth.  With ``replicates=0`` the report simply echoes the
    prior means.

    Parameters
    ----------
    field_sets : ScalarGrid or sequence of ScalarGrid
        Trend surface(s); replicates cycle through the sequence.
    radii : InteractionRadii
    priors, settings, schedule : optional, defaults as in run_miseal
    replicates : int
    master_seed : int
    sampler_steps : int, optional
        Chain length of the pattern simulator; default adapts to size.

    Returns
    -------
    StudyReport
    """
    if hasattr(field_sets, "roi"):
        field_sets = [field_sets]
    if len(field_sets) == 0:
        raise ValueError("need at least one field set")
    if priors is None:
        priors = Priors()
    prior_means = (priors.a0 / priors.b0, priors.a1 / priors.b1,
                   priors.p1 / (priors.p1 + priors.q1))

    out = []
    for r in range(replicates):
        rng = np.random.default_rng([master_seed, r])
        truth = _draw_truth(priors, rng)
        trend = field_sets[r % len(field_sets)]
        zeta, planted = _simulate_superposition(trend, radii, truth, rng,
                                                sampler_steps)
        trace = run_miseal(zeta, trend, radii, priors, settings, schedule,
                           seed=[master_seed, r, 1])
        chains = (trace.lam, trace.beta, trace.gamma)
        means = tuple(float(np.mean(c)) for c in chains)
        intervals = [tuple(float(q) for q in np.quantile(c, (0.05, 0.95)))
                     for c in chains]
        covered = tuple(lo <= t <= hi
                        for t, (lo, hi) in zip(truth, intervals))
        freq = trace.label_freq
        rand_mask = planted == 0
        nec_mask = ~rand_mask
        random_mis = float(np.mean(freq[rand_mask] >= 0.5)) \
            if rand_mask.any() else math.nan
        nec_mis = float(np.mean(freq[nec_mask] < 0.5)) \
            if nec_mask.any() else math.nan
        out.append(StudyReplicate(
            r, tuple(float(t) for t in truth),
            int(planted.sum()), int(len(planted) - planted.sum()),
            means, tuple(intervals), covered, means[1] > truth[1],
            random_mis, nec_mis,
            {k: trace.acceptance_rate(k) for k in trace.acceptance}))
    return StudyReport(tuple(out), prior_means, int(master_seed))


# ---------------------------------------------------------------------------
# Deletion experiment


def greedy_match_score(points1, points2, radius=MATCH_RADIUS):
    """Symmetrized greedy nearest-neighbour assignment score.

    Candidate pairs within ``radius`` are visited by increasing
    distance; each point matches at most once.  The score is
    2 |matches| / (n1 + n2), which is 1 for identical patterns and 0
    for disjoint ones.  Two empty patterns count as identical.  This is
    a purely positional stand-in for descriptor-based matchers, not a
    re-implementation of any of them.
    """
    p1 = np.atleast_2d(np.asarray(points1, dtype=float))
    p2 = np.atleast_2d(np.asarray(points2, dtype=float))
    n1 = 0 if p1.size == 0 else len(p1)
    n2 = 0 if p2.size == 0 else len(p2)
    if n1 + n2 == 0:
        return 1.0
    if n1 == 0 or n2 == 0:
        return 0.0
    d = cdist(p1, p2)
    ii, jj = np.nonzero(d <= radius)
    order = np.lexsort((jj, ii, d[ii, jj]))
    used1 = np.zeros(n1, dtype=bool)
    used2 = np.zeros(n2, dtype=bool)
    matches = 0
    for k in order:
        a, b = ii[k], jj[k]
        if not used1[a] and not used2[b]:
            used1[a] = used2[b] = True
            matches += 1
    return 2.0 * matches / (n1 + n2)


@dataclass(frozen=True)
class DeletionReplicate:
    """Scores of one posterior-deletion draw and its uniform control."""

    index: int
    n_deleted: tuple  # per pattern
    score_necessary: float
    score_random: float


@dataclass(frozen=True)
class DeletionReport:
    """Monte Carlo comparison of posterior versus uniform deletion.

    ``share`` is the fraction of effective replicates where the
    necessary-only patterns score strictly higher than the uniformly
    thinned controls; ties count as non-greater.  Relative differences
    (S_n - S_r) / S_r skip replicates with S_r = 0, reported in
    ``n_rel_skipped``.
    """

    share: float
    share_se: float
    rel_diff_mean: float
    rel_diff_se: float
    replicates: tuple
    n_requested: int
    n_failed: int
    n_rel_skipped: int
    hist_centers: np.ndarray
    hist_counts: np.ndarray
    bin_width: float


def _score_checked(scorer, a, b):
    s = scorer(a, b)
    if not np.isscalar(s) or not math.isfinite(s) or not 0.0 <= s <= 1.0:
        raise ScorerFailure(f"score {s!r} is not a number in [0, 1]")
    return float(s)


def _freedman_diaconis(values):
    """Histogram with Freedman-Diaconis bin width; returns centers too."""
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return np.empty(0), np.empty(0, dtype=int), 0.0
    q75, q25 = np.percentile(values, [75, 25])
    width = 2.0 * (q75 - q25) / len(values) ** (1.0 / 3.0)
    span = np.ptp(values)
    if width <= 0.0 or span == 0.0:
        center = float(values.mean())
        return (np.array([center]), np.array([len(values)]),
                float(width if width > 0 else 0.0))
    bins = int(min(200, max(1, math.ceil(span / width))))
    counts, edges = np.histogram(values, bins=bins)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, counts, float(edges[1] - edges[0])


def deletion_experiment(zeta1, zeta2, trace1, trace2, scorer=None,
                        replicates=1000, rng=None):
    """Compare matching after posterior versus uniform deletion.

    For each replicate and each pattern, a joint label vector is drawn
    uniformly with replacement from the thinned label samples of the
    corresponding trace.  Points labelled random are deleted, giving the
    necessary-only pattern; deleting equally many uniformly chosen
    points gives the control.  Both reduced pairs are scored and the
    share of replicates with S_n > S_r, the mean relative difference
    and a Freedman-Diaconis histogram of the relative differences are
    reported.  Replicates where the scorer fails are excluded and
    counted.

    Parameters
    ----------
    zeta1, zeta2 : PointPattern or (n, 2) arrays
    trace1, trace2 : PosteriorTrace
        Must contain joint label samples for their pattern.
    scorer : callable, optional
        S(points1, points2) -> [0, 1]; greedy_match_score by default.
    replicates : int
    rng : seed or numpy Generator

    Returns
    -------
    DeletionReport
    """
    if scorer is None:
        scorer = greedy_match_score
    rng = np.random.default_rng(rng)
    pts = (_points_of(zeta1), _points_of(zeta2))
    samples = (trace1.label_samples, trace2.label_samples)
    for p, s in zip(pts, samples):
        if s.ndim != 2 or s.shape[1] != len(p):
            raise ValueError("label samples do not match the pattern size")
        if len(s) == 0:
            raise ValueError("trace contains no label samples")

    records = []
    n_failed = 0
    for t in range(replicates):
        necessary, control, n_del = [], [], []
        for p, s in zip(pts, samples):
            w = s[rng.integers(len(s))]
            keep = w == 1
            deleted = int(len(p) - keep.sum())
            drop = rng.choice(len(p), size=deleted, replace=False) \
                if deleted else np.empty(0, dtype=np.int64)
            mask = np.ones(len(p), dtype=bool)
            mask[drop] = False
            necessary.append(p[keep])
            control.append(p[mask])
            n_del.append(deleted)
        try:
            s_n = _score_checked(scorer, necessary[0], necessary[1])
            s_r = _score_checked(scorer, control[0], control[1])
        except ScorerFailure:
            n_failed += 1
            continue
        records.append(DeletionReplicate(t, tuple(n_del), s_n, s_r))

    m = len(records)
    if m == 0:
        raise ScorerFailure("every replicate failed to score")
    wins = np.array([r.score_necessary > r.score_random for r in records])
    share = float(wins.mean())
    share_se = float(math.sqrt(share * (1.0 - share) / m))
    base = np.array([r.score_random for r in records])
    diff = np.array([r.score_necessary - r.score_random for r in records])
    ok = base > 0
    rel = diff[ok] / base[ok]
    n_rel_skipped = int(m - ok.sum())
    if len(rel):
        rel_mean = float(rel.mean())
        rel_se = float(rel.std(ddof=1) / math.sqrt(len(rel))) \
            if len(rel) > 1 else 0.0
    else:
        rel_mean, rel_se = 0.0, 0.0
    centers, counts, width = _freedman_diaconis(rel)
    return DeletionReport(share, share_se, rel_mean, rel_se, tuple(records),
                          replicates, n_failed, n_rel_skipped,
                          centers, counts, width)
