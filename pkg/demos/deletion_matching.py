"""
Random minutiae carry the individual information
================================================

Two imprints of the same finger share their necessary minutiae but not
the random ones.  Deleting points the posterior calls random should
therefore *raise* a matching score between the imprints, while deleting
the same number of uniformly chosen points dilutes it.  This demo
plants a shared necessary pattern inside two noisy imprints, runs the
label sampler on each, and compares the two deletion strategies.
"""

import numpy as np

from miseal.analysis import deletion_experiment
from miseal.grids import RegionOfInterest, ScalarGrid
from miseal.inference import Priors, ProposalSettings, Schedule, run_miseal
from miseal.pointprocess import (
    InteractionRadii,
    ModelParams,
    PointPattern,
    sample_poisson,
    sample_strauss_hardcore,
)

rng = np.random.default_rng(31)
roi = RegionOfInterest.full((140, 140))
trend = ScalarGrid(np.full(roi.shape, 3e-3), roi)
radii = InteractionRadii(3.0, 8.0)
lam, beta, gamma = 6e-4, 1.2, 0.3

# One shared necessary pattern, two independent batches of clutter.
eta = sample_strauss_hardcore(
    ModelParams(lam=0.0, beta=beta, gamma=gamma, radii=radii, trend=trend),
    rng=rng)
zetas, traces = [], []
for s in range(2):
    xi = sample_poisson(roi, lam, rng=rng)
    zeta = PointPattern(np.vstack([eta.points, xi.points]), roi)
    zetas.append(zeta)
    traces.append(run_miseal(
        zeta, trend, radii, priors=Priors(lambda0=lam, p_label=0.5),
        settings=ProposalSettings(p_theta=0.0),
        schedule=Schedule(burn_in=5000, iterations=55_000, thinning=50),
        seed=[32, s], initial_theta=(lam, beta, gamma)))
    print(f"imprint {s}: {eta.n} shared + {xi.n} own points")

# Each replicate draws one posterior label vector per imprint, deletes
# the random-labelled points, and scores the remaining patterns against
# the control that deletes uniformly.
report = deletion_experiment(zetas[0], zetas[1], traces[0], traces[1],
                             replicates=300, rng=np.random.default_rng(33))
print(f"posterior-guided deletion scored higher in "
      f"{report.share:.1%} of {len(report.replicates)} replicates")
print(f"mean relative score gain {report.rel_diff_mean:.3f} "
      f"+- {report.rel_diff_se:.3f}")
