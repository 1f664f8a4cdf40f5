"""Patch regression, simulation study and deletion experiment."""

import numpy as np
import pytest

from miseal.analysis import (
    PatchGrid,
    deletion_experiment,
    greedy_match_score,
    patch_counts,
    poisson_regression_identity,
    simulation_study,
)
from miseal.errors import ScorerFailure, Separation
from miseal.fields import necessary_minutiae_number_area
from miseal.grids import RegionOfInterest, ScalarGrid
from miseal.inference import Priors, ProposalSettings, Schedule
from miseal.pointprocess import InteractionRadii
from miseal.synthetic import (
    annulus_roi,
    constant_frequency,
    constant_orientation,
    linear_frequency,
    radial_orientation,
    square_roi,
)

RADII = InteractionRadii(3.0, 8.0)


def constant_trend(roi, value):
    return ScalarGrid(np.full(roi.shape, value), roi)


class _FakeTrace:
    """Just enough of a posterior trace for the deletion experiment."""

    def __init__(self, label_samples):
        self.label_samples = np.asarray(label_samples, dtype=np.int8)


# ----------------------------------------------------------- patch grid

def test_patch_grid_hits_target_count_and_average_area():
    # The classic acquisition geometry: 374 rows by 388 columns.
    roi = RegionOfInterest.full((374, 388))
    grid = PatchGrid(roi, patches=100)
    assert len(grid) == 100
    areas = np.array([p.area for p in grid.patches])
    assert abs(areas.mean() - 1451.12) < 1.0


def test_patch_grid_partitions_mask_area_exactly():
    roi = RegionOfInterest.full((374, 388))
    grid = PatchGrid(roi, patches=100)
    assert abs(sum(p.area for p in grid.patches) - roi.area) < 1e-6


def test_patch_grid_drops_empty_patches_on_masked_roi():
    roi = annulus_roi(80, (40.0, 40.0), 12.0, 38.0)
    grid = PatchGrid(roi, patches=60)
    areas = np.array([p.area for p in grid.patches])
    assert np.all(areas > 0)
    assert abs(areas.sum() - roi.area) < 1e-6
    # The all-masked corner rectangles are gone.
    assert len(grid) < grid.rows * grid.cols


def test_patch_grid_rectangles_are_disjoint():
    roi = RegionOfInterest.full((50, 70))
    grid = PatchGrid(roi, patches=12)
    for a in grid.patches:
        for b in grid.patches:
            if a is b:
                continue
            overlap_x = min(a.x1, b.x1) - max(a.x0, b.x0)
            overlap_y = min(a.y1, b.y1) - max(a.y0, b.y0)
            assert min(overlap_x, overlap_y) <= 1e-12


# --------------------------------------------------------- patch counts

def _smooth_fields(size=64):
    roi = RegionOfInterest.full((size, size))
    of = constant_orientation(roi, theta=0.0)
    rf = linear_frequency(roi, 0.1, 0.0005, axis="x")
    return roi, of, rf


def test_patch_counts_totals_match_pattern_size():
    roi, of, rf = _smooth_fields()
    grid = PatchGrid(roi, patches=16)
    rng = np.random.default_rng(5)
    pts = rng.uniform(2.0, float(roi.shape[0]) - 3.0, size=(40, 2))
    data = patch_counts(pts, of, rf, grid)
    assert len(data.excluded) == 0
    assert sum(r.count for r in data.records) == 40


def test_patch_counts_empty_pattern_all_zero():
    roi, of, rf = _smooth_fields()
    grid = PatchGrid(roi, patches=9)
    data = patch_counts(np.empty((0, 2)), of, rf, grid)
    assert len(data.records) == len(grid)
    assert all(r.count == 0 for r in data.records)


def test_patch_counts_delegates_number_to_area_form():
    roi, of, rf = _smooth_fields()
    grid = PatchGrid(roi, patches=9)
    data = patch_counts(np.empty((0, 2)), of, rf, grid)
    for rec in data.records:
        direct = necessary_minutiae_number_area(
            rec.patch.region(), of, rf, clip_to_mask=True)
        assert abs(rec.number - direct) < 1e-12


def test_patch_counts_excludes_singular_patches():
    size = 90
    centre = (45.0, 45.0)
    roi = RegionOfInterest.full((size, size))
    of = radial_orientation(roi, centre)
    rf = constant_frequency(roi, inter_ridge=8.0)
    grid = PatchGrid(roi, patches=36)
    data = patch_counts(np.empty((0, 2)), of, rf, grid)
    assert len(data.excluded) >= 1
    assert len(data.records) + len(data.excluded) == len(grid)
    for patch, reason in data.excluded:
        assert isinstance(reason, str) and reason
        # The dropped rectangles hug the singular centre.
        assert patch.x0 <= centre[0] <= patch.x1 + (patch.x1 - patch.x0) \
            or patch.y0 <= centre[1] <= patch.y1 + (patch.y1 - patch.y0)


def test_patch_data_pairs_layout():
    roi, of, rf = _smooth_fields()
    grid = PatchGrid(roi, patches=4)
    pts = np.array([[10.0, 10.0], [50.0, 50.0]])
    data = patch_counts(pts, of, rf, grid)
    pairs = data.pairs()
    assert pairs.shape == (len(data.records), 2)
    assert pairs[:, 1].sum() == 2


# ----------------------------------------------- identity-link regression

def test_regression_exact_on_noiseless_line():
    res = poisson_regression_identity([(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)])
    assert abs(res.beta0 - 1.0) < 1e-4
    assert abs(res.beta1 - 1.0) < 1e-4
    assert res.ci0[0] <= res.beta0 <= res.ci0[1]
    assert res.ci1[0] <= res.beta1 <= res.ci1[1]
    assert np.all(res.fitted(res.data[:, 0]) > 0)


def test_regression_score_identity_fitted_mean_equals_count_mean():
    rng = np.random.default_rng(11)
    m = rng.uniform(0.0, 3.0, size=200)
    y = rng.poisson(0.5 + 1.2 * m).astype(float)
    res = poisson_regression_identity(np.column_stack([m, y]))
    assert abs(res.fitted(m.mean()) - y.mean()) < 1e-6


def test_regression_rejects_degenerate_inputs():
    with pytest.raises(ValueError):
        poisson_regression_identity([(0.0, 1.0), (1.0, 2.0)])
    with pytest.raises(ValueError):
        poisson_regression_identity([(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)])
    with pytest.raises(Separation):
        poisson_regression_identity([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])


def test_regression_interval_coverage_on_simulated_truth():
    truth = (0.14, 1.0)
    rng = np.random.default_rng(7)
    hits0 = hits1 = 0
    reps = 40
    for _ in range(reps):
        m = rng.uniform(0.0, 2.5, size=500)
        y = rng.poisson(truth[0] + truth[1] * m).astype(float)
        res = poisson_regression_identity(np.column_stack([m, y]))
        hits0 += res.ci0[0] <= truth[0] <= res.ci0[1]
        hits1 += res.ci1[0] <= truth[1] <= res.ci1[1]
    assert hits0 >= 32
    assert hits1 >= 32


def test_regression_null_slope_interval_contains_zero():
    rng = np.random.default_rng(13)
    hits = 0
    reps = 40
    for _ in range(reps):
        m = rng.uniform(0.0, 2.0, size=400)
        y = rng.poisson(1.5, size=400).astype(float)
        res = poisson_regression_identity(np.column_stack([m, y]))
        hits += res.ci1[0] <= 0.0 <= res.ci1[1]
    assert hits >= 32


def test_regression_intercept_p_value_detects_offset():
    rng = np.random.default_rng(3)
    m = rng.uniform(0.5, 3.0, size=600)
    y = rng.poisson(2.0 + 1.0 * m).astype(float)
    res = poisson_regression_identity(np.column_stack([m, y]))
    assert res.p_intercept < 1e-6


def test_regression_intercept_p_value_is_calibrated_under_null():
    rng = np.random.default_rng(29)
    small = 0
    reps = 40
    for _ in range(reps):
        m = rng.uniform(0.5, 2.5, size=300)
        y = rng.poisson(1.0 * m).astype(float)
        res = poisson_regression_identity(np.column_stack([m, y]))
        small += res.p_intercept < 0.05
    # One-sided 5% test under the null; allow generous binomial slack.
    assert small <= 8


# ------------------------------------------------------ simulation study

def test_simulation_study_zero_replicates_echoes_priors():
    roi = square_roi(40)
    trend = constant_trend(roi, 1e-3)
    priors = Priors()
    report = simulation_study(trend, RADII, priors, replicates=0)
    assert report.replicates == ()
    means = report.posterior_means()
    assert abs(means[0] - priors.lambda0) < 1e-15
    assert abs(means[1] - 1.0) < 1e-15
    assert abs(means[2] - 2.0 / 7.0) < 1e-15
    assert report.coverage() == (0, 0, 0)


def _desk_schedule():
    return Schedule(burn_in=200, iterations=1200, thinning=10,
                    refit_interval=100)


def _desk_settings():
    return ProposalSettings(aux_chain_steps=300)


def test_simulation_study_runs_and_scores_replicates():
    roi = square_roi(70)
    trend = constant_trend(roi, 1e-3)
    report = simulation_study(
        trend, RADII, Priors(), _desk_settings(), _desk_schedule(),
        replicates=2, master_seed=42)
    assert len(report.replicates) == 2
    for rep in report.replicates:
        assert len(rep.truth) == 3
        assert all(v > 0 for v in rep.truth)
        assert rep.truth[2] < 1.0
        assert len(rep.posterior_mean) == 3
        assert all(isinstance(c, bool) for c in rep.covered)
        assert rep.n_necessary + rep.n_random > 0
        assert set(rep.acceptance) == {"lambda", "beta_gamma", "flip"}
        for lo, hi in rep.interval:
            assert lo <= hi
    assert 0 <= report.beta_over_count() <= 2


def test_simulation_study_is_deterministic():
    roi = square_roi(60)
    trend = constant_trend(roi, 1e-3)
    kwargs = dict(radii=RADII, priors=Priors(), settings=_desk_settings(),
                  schedule=_desk_schedule(), replicates=2, master_seed=9)
    a = simulation_study(trend, **kwargs)
    b = simulation_study(trend, **kwargs)
    for ra, rb in zip(a.replicates, b.replicates):
        assert ra == rb


def test_simulation_study_cycles_field_sets():
    trends = [constant_trend(square_roi(60), 1e-3),
              constant_trend(square_roi(80), 1e-3)]
    report = simulation_study(
        trends, RADII, Priors(), _desk_settings(), _desk_schedule(),
        replicates=2, master_seed=4)
    assert len(report.replicates) == 2


# -------------------------------------------------------- match scorer

def test_greedy_score_identical_and_disjoint():
    pts = np.array([[1.0, 1.0], [20.0, 5.0], [40.0, 30.0]])
    assert greedy_match_score(pts, pts) == 1.0
    far = pts + 1000.0
    assert greedy_match_score(pts, far) == 0.0


def test_greedy_score_empty_edge_cases():
    empty = np.empty((0, 2))
    pts = np.array([[0.0, 0.0]])
    assert greedy_match_score(empty, empty) == 1.0
    assert greedy_match_score(empty, pts) == 0.0
    assert greedy_match_score(pts, empty) == 0.0


def test_greedy_score_matches_each_point_once():
    p1 = np.array([[0.0, 0.0], [10.0, 0.0]])
    p2 = np.array([[0.0, 1.0], [100.0, 100.0]])
    # Only one point of p2 is reachable; it pairs with its nearest.
    assert greedy_match_score(p1, p2) == pytest.approx(0.5)


def test_greedy_score_is_symmetric():
    rng = np.random.default_rng(17)
    p1 = rng.uniform(0.0, 60.0, size=(12, 2))
    p2 = rng.uniform(0.0, 60.0, size=(9, 2))
    assert greedy_match_score(p1, p2) == greedy_match_score(p2, p1)


def test_greedy_score_prefers_closer_pairs():
    # Two candidates for one target; greedy takes the closer, score
    # counts a single match.
    p1 = np.array([[0.0, 0.0], [4.0, 0.0]])
    p2 = np.array([[1.0, 0.0]])
    assert greedy_match_score(p1, p2) == pytest.approx(2.0 / 3.0)


# ------------------------------------------------- deletion experiment

def _shared_necessary_patterns(rng, n_shared=12, n_extra=6, size=100.0):
    shared = rng.uniform(0.0, size, size=(n_shared, 2))
    extra1 = rng.uniform(0.0, size, size=(n_extra, 2))
    extra2 = rng.uniform(0.0, size, size=(n_extra, 2))
    zeta1 = np.vstack([shared, extra1])
    zeta2 = np.vstack([shared, extra2])
    labels = np.concatenate([np.ones(n_shared, dtype=np.int8),
                             np.zeros(n_extra, dtype=np.int8)])
    return zeta1, zeta2, labels


def test_deletion_all_necessary_labels_tie_every_replicate():
    rng = np.random.default_rng(1)
    zeta1, zeta2, _ = _shared_necessary_patterns(rng)
    ones1 = _FakeTrace(np.ones((3, len(zeta1))))
    ones2 = _FakeTrace(np.ones((3, len(zeta2))))
    report = deletion_experiment(zeta1, zeta2, ones1, ones2,
                                 replicates=50, rng=2)
    assert report.share == 0.0
    assert report.rel_diff_mean == 0.0
    assert all(r.score_necessary == r.score_random
               for r in report.replicates)
    assert report.n_failed == 0


def test_deletion_constant_scorer_degenerates():
    rng = np.random.default_rng(8)
    zeta1, zeta2, labels = _shared_necessary_patterns(rng)
    tr1 = _FakeTrace(labels[None, :])
    tr2 = _FakeTrace(labels[None, :])
    report = deletion_experiment(zeta1, zeta2, tr1, tr2,
                                 scorer=lambda a, b: 0.5,
                                 replicates=40, rng=3)
    assert report.share == 0.0
    assert report.share_se == 0.0
    assert report.rel_diff_mean == 0.0


def test_deletion_true_labels_beat_uniform_deletion():
    rng = np.random.default_rng(23)
    zeta1, zeta2, labels = _shared_necessary_patterns(rng)
    tr1 = _FakeTrace(labels[None, :])
    tr2 = _FakeTrace(labels[None, :])
    report = deletion_experiment(zeta1, zeta2, tr1, tr2,
                                 replicates=100, rng=4)
    # Posterior deletion recovers the shared core exactly; uniform
    # deletion usually destroys part of it.
    assert report.share > 0.6
    assert report.rel_diff_mean > 0.0
    assert report.share_se >= 0.0


def test_deletion_scorer_failures_are_counted():
    rng = np.random.default_rng(31)
    zeta1, zeta2, labels = _shared_necessary_patterns(rng)
    tr1 = _FakeTrace(labels[None, :])
    tr2 = _FakeTrace(labels[None, :])
    calls = {"n": 0}

    def flaky(a, b):
        calls["n"] += 1
        if calls["n"] % 5 == 0:
            raise ScorerFailure("synthetic failure")
        return greedy_match_score(a, b)

    report = deletion_experiment(zeta1, zeta2, tr1, tr2, scorer=flaky,
                                 replicates=30, rng=5)
    assert report.n_failed > 0
    assert len(report.replicates) + report.n_failed == 30


def test_deletion_invalid_score_raises_and_all_failures_propagate():
    rng = np.random.default_rng(37)
    zeta1, zeta2, labels = _shared_necessary_patterns(rng)
    tr1 = _FakeTrace(labels[None, :])
    tr2 = _FakeTrace(labels[None, :])
    with pytest.raises(ScorerFailure):
        deletion_experiment(zeta1, zeta2, tr1, tr2,
                            scorer=lambda a, b: 1.5,
                            replicates=5, rng=6)


def test_deletion_mismatched_samples_rejected():
    rng = np.random.default_rng(41)
    zeta1, zeta2, labels = _shared_necessary_patterns(rng)
    short = _FakeTrace(np.ones((2, len(zeta1) - 1)))
    good = _FakeTrace(labels[None, :])
    with pytest.raises(ValueError):
        deletion_experiment(zeta1, zeta2, short, good, replicates=3, rng=7)


def test_deletion_is_deterministic_and_histogram_consistent():
    rng = np.random.default_rng(43)
    zeta1, zeta2, labels = _shared_necessary_patterns(rng)
    noisy = np.vstack([labels, 1 - labels, np.ones_like(labels)])
    tr1 = _FakeTrace(noisy)
    tr2 = _FakeTrace(noisy)
    a = deletion_experiment(zeta1, zeta2, tr1, tr2, replicates=60, rng=9)
    b = deletion_experiment(zeta1, zeta2, tr1, tr2, replicates=60, rng=9)
    assert a.share == b.share
    assert a.rel_diff_mean == b.rel_diff_mean
    assert np.array_equal(a.hist_counts, b.hist_counts)
    effective = len(a.replicates) - a.n_rel_skipped
    assert a.hist_counts.sum() == effective
    if len(a.hist_centers) > 1:
        assert a.bin_width > 0
