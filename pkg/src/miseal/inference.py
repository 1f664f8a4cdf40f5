"""Posterior separation of minutiae into necessary and random parts.

The observed pattern ``zeta`` is modelled as the superposition of a
homogeneous Poisson process with rate ``lam`` (the random part) and a
Strauss-with-hard-core process with trend ``mu`` (the necessary part).
Latent labels ``W_i`` mark membership of the necessary part, with an
independent Bernoulli prior whose success probability defaults to
``max(1 - lambda0 |X| / k, 0)``.

The sampler is a random-scan Metropolis-within-Gibbs chain with three
move types: a conjugate Gibbs draw for ``lam``, an auxiliary-pattern
exchange step for ``(beta, gamma)`` that cancels the intractable
Strauss normalising constant against a freshly simulated pattern, and
single-site label flips.  The exchange step keeps a persistent
auxiliary pattern whose reference density ``phi`` is the Strauss model
at a pseudo-likelihood estimate ``theta_hat``; ``theta_hat`` is refit
on a fixed schedule during burn-in and then frozen, so the ``phi``
ratio attached to label flips is exactly one between refits and the
flip ratio reduces to closed form.
"""

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import (
    AuxSamplerFailure,
    DegenerateMarginal,
    ExcludedTrendWarning,
    GeometryMismatch,
    TooFewPoints,
)
from .mple import mple_fit
from .pointprocess import (
    ModelParams,
    PointPattern,
    _points_of,
    log_poisson_density,
    log_strauss_density_unnorm,
    min_pair_distance,
    sample_strauss_hardcore,
)

MOVE_LAMBDA = 0
MOVE_BETA_GAMMA = 1
MOVE_FLIP = 2
MOVE_NAMES = ("lambda", "beta_gamma", "flip")


@dataclass
class Priors:
    """Prior specification for the superposition model.

    ``lam ~ Gamma(a0, b0)`` (rate parameterisation) with ``b0``
    defaulting to ``a0 / lambda0`` so the prior mean is ``lambda0``;
    ``beta ~ Gamma(a1, b1)``; ``gamma ~ Beta(p1, q1)``.  The label
    success probability is ``p_label`` when set, otherwise resolved per
    dataset by :meth:`label_success`.
    """

    a0: float = 5.0
    b0: float = None
    a1: float = 5.0
    b1: float = 5.0
    p1: float = 2.0
    q1: float = 5.0
    lambda0: float = 1e-4
    p_label: float = None

    def __post_init__(self):
        if self.lambda0 <= 0:
            raise ValueError("lambda0 must be positive")
        if self.b0 is None:
            self.b0 = self.a0 / self.lambda0
        for name in ("a0", "b0", "a1", "b1", "p1", "q1"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.p_label is not None and not 0.0 <= self.p_label <= 1.0:
            raise ValueError("p_label must lie in [0, 1]")

    def label_success(self, area, k):
        """Bernoulli success probability for the labels of a dataset."""
        if self.p_label is not None:
            return float(self.p_label)
        return max(1.0 - self.lambda0 * area / k, 0.0)


@dataclass
class ProposalSettings:
    """Move mix and proposal parameters of the Gibbs chain.

    ``(beta, gamma)`` proposals are jointly log-normal with log-scale
    standard deviations ``sigma_log_beta``, ``sigma_log_gamma`` and
    correlation ``correlation``; zero sigmas give a degenerate proposal
    used in tests.  A parameter move is attempted with probability
    ``p_theta`` (otherwise a label flip), and a parameter move updates
    ``lam`` with probability ``p_lambda`` (otherwise ``(beta, gamma)``).
    """

    sigma_log_beta: float = 0.07
    sigma_log_gamma: float = 0.05
    correlation: float = -0.7
    p_theta: float = 0.05
    p_lambda: float = 0.2
    aux_chain_steps: int = 5000

    def __post_init__(self):
        if self.sigma_log_beta < 0 or self.sigma_log_gamma < 0:
            raise ValueError("proposal sigmas must be non-negative")
        if not -1.0 < self.correlation < 1.0:
            raise ValueError("proposal correlation must lie in (-1, 1)")
        for name in ("p_theta", "p_lambda"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.aux_chain_steps < 1:
            raise ValueError("aux_chain_steps must be positive")


@dataclass
class Schedule:
    """Iteration plan of the chain.

    ``iterations`` counts all updates including the ``burn_in`` prefix.
    During burn-in ``theta_hat`` is refit every ``refit_interval``
    iterations and frozen at the end of burn-in at the component-wise
    mean of the refits, taken in the original or log parameter space.
    """

    burn_in: int = 10_000
    iterations: int = 1_010_000
    thinning: int = 100
    refit_interval: int = 1000
    theta_hat_mean: str = "original"
    feasibility_interval: int = 1000

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if self.iterations <= self.burn_in:
            raise ValueError("iterations must exceed burn_in")
        if self.thinning < 1 or self.refit_interval < 1:
            raise ValueError("thinning and refit_interval must be positive")
        if self.theta_hat_mean not in ("original", "log"):
            raise ValueError("theta_hat_mean must be 'original' or 'log'")
        if self.feasibility_interval < 1:
            raise ValueError("feasibility_interval must be positive")


class PatternStats(NamedTuple):
    """Sufficient statistics of the unnormalised Strauss density."""

    n: int
    sum_log_mu: float
    close_pairs: int


def strauss_sufficient_stats(pattern, trend, radii):
    """(n, sum log mu, close pair count) of a pattern under a trend."""
    pts = _points_of(pattern)
    if len(pts) == 0:
        return PatternStats(0, 0.0, 0)
    mu = trend.value_at(pts)
    if np.any(~np.isfinite(mu) | (mu <= 0)):
        raise ValueError("pattern points must sit where the trend is positive")
    d = pdist(pts) if len(pts) >= 2 else np.empty(0)
    return PatternStats(len(pts), float(np.log(mu).sum()),
                        int(np.count_nonzero(d <= radii.interaction)))


def _log_unnorm(stats, beta, gamma):
    """Log unnormalised Strauss density from sufficient statistics."""
    total = stats.n * math.log(beta) + stats.sum_log_mu
    if stats.close_pairs:
        if gamma == 0.0:
            return -math.inf
        total += stats.close_pairs * math.log(gamma)
    return total


def _theta3(theta):
    if hasattr(theta, "lam"):
        return theta.lam, theta.beta, theta.gamma
    lam, beta, gamma = theta
    return lam, beta, gamma


def _log_odds(p):
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    return math.log(p / (1.0 - p))


def log_prior_ratio(theta_new, labels_new, theta_old, labels_old, priors,
                    feasible_new=True):
    """Log prior ratio of two chain states.

    Both states share the observed points; a label vector enters only
    through its sum.  ``feasible_new=False`` (the proposed labels break
    the hard core) forces ``-inf``.  The label prior must already be
    resolved (``priors.p_label`` set) whenever the label sums differ.
    """
    if not feasible_new:
        return -math.inf
    lam_n, beta_n, gamma_n = _theta3(theta_new)
    lam_o, beta_o, gamma_o = _theta3(theta_old)
    total = 0.0
    if lam_n != lam_o:
        if lam_n <= 0:
            return -math.inf
        total += (priors.a0 - 1.0) * math.log(lam_n / lam_o) \
            - priors.b0 * (lam_n - lam_o)
    if beta_n != beta_o:
        if beta_n <= 0:
            return -math.inf
        total += (priors.a1 - 1.0) * math.log(beta_n / beta_o) \
            - priors.b1 * (beta_n - beta_o)
    if gamma_n != gamma_o:
        if not 0.0 < gamma_n < 1.0:
            return -math.inf
        total += (priors.p1 - 1.0) * math.log(gamma_n / gamma_o) \
            + (priors.q1 - 1.0) * math.log((1.0 - gamma_n) / (1.0 - gamma_o))
    dl = int(np.sum(labels_new)) - int(np.sum(labels_old))
    if dl:
        if priors.p_label is None:
            raise ValueError("label prior not resolved; set priors.p_label")
        total += dl * _log_odds(priors.p_label)
    return total


def gibbs_update_lambda(n_random, area, priors, rng):
    """Draw ``lam`` from its conjugate conditional Gamma(a0+n0, b0+|X|)."""
    return float(rng.gamma(priors.a0 + n_random, 1.0 / (priors.b0 + area)))


def propose_beta_gamma(beta, gamma, settings, rng):
    """Correlated log-normal proposal for ``(beta, gamma)``.

    Returns ``(beta_new, gamma_new, log_ratio)`` where ``log_ratio`` is
    the log proposal ratio ``log(beta' gamma' / (beta gamma))`` arising
    from the log-scale random walk.
    """
    z1 = rng.standard_normal()
    z2 = rng.standard_normal()
    rho = settings.correlation
    step_b = settings.sigma_log_beta * z1
    step_g = settings.sigma_log_gamma * (rho * z1 + math.sqrt(1.0 - rho * rho) * z2)
    return beta * math.exp(step_b), gamma * math.exp(step_g), step_b + step_g


def log_flip_hastings(labelled, lam, beta, gamma, log_mu, n_close, p_label,
                      hard_core_ok=True):
    """Log Hastings ratio for flipping a single label.

    ``labelled`` is the current label of the point, ``log_mu`` the log
    trend at it, and ``n_close`` the number of labelled points within
    the interaction radius (the point itself excluded).  Unlabelling
    trades the point's Strauss factors for a Poisson factor; labelling
    is the reciprocal and requires the hard core to stay intact.
    """
    if lam <= 0.0:
        log_lam = -math.inf
    else:
        log_lam = math.log(lam)
    gain = log_lam - math.log(beta) - log_mu - n_close * math.log(gamma) \
        - _log_odds(p_label)
    if labelled:
        return gain
    if not hard_core_ok:
        return -math.inf
    return -gain


def _log_aux_hastings(theta_new, theta_old, aux_new, aux_old, theta_hat,
                      eta_stats, priors):
    """Log Hastings ratio of the auxiliary-pattern exchange step.

    ``aux_new`` was simulated from the Strauss model at ``theta_new``;
    the persistent auxiliary pattern has density ``phi``, the Strauss
    model at ``theta_hat``.  Pairing the intractable likelihood
    normaliser with the auxiliary proposal density cancels both, and
    the ``phi`` normaliser cancels because ``theta_hat`` is shared.
    The result is antisymmetric under swapping the two states.
    """
    lam_n, beta_n, gamma_n = _theta3(theta_new)
    lam_o, beta_o, gamma_o = _theta3(theta_old)
    beta_h, gamma_h = theta_hat
    no_labels = np.empty(0)
    return (
        _log_unnorm(eta_stats, beta_n, gamma_n)
        - _log_unnorm(eta_stats, beta_o, gamma_o)
        + _log_unnorm(aux_new, beta_h, gamma_h)
        - _log_unnorm(aux_old, beta_h, gamma_h)
        + _log_unnorm(aux_old, beta_o, gamma_o)
        - _log_unnorm(aux_new, beta_n, gamma_n)
        + log_prior_ratio(theta_new, no_labels, theta_old, no_labels, priors)
        + math.log((beta_n * gamma_n) / (beta_o * gamma_o))
    )


@dataclass
class PosteriorTrace:
    """Thinned posterior sample of the chain plus label summaries.

    ``label_freq`` averages the labels over every post-burn-in
    iteration; ``label_samples`` stores the label vector at the thinned
    iterations only.  ``acceptance`` maps move names to (attempts,
    accepts) over the whole run including burn-in.
    """

    points: np.ndarray
    t: np.ndarray
    lam: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    move: np.ndarray
    accepted: np.ndarray
    label_freq: np.ndarray
    label_samples: np.ndarray
    excluded: np.ndarray
    burn_in: int
    iterations: int
    thinning: int
    p_label: float
    acceptance: dict
    theta_hat: tuple = None
    refits: list = field(default_factory=list)

    def acceptance_rate(self, name):
        attempts, accepts = self.acceptance[name]
        return accepts / attempts if attempts else math.nan


def _hard_core_repair(labels, hc_neighbours):
    """Greedily unlabel the later point of each hard-core conflict."""
    for i in range(len(labels)):
        if labels[i]:
            for j in hc_neighbours[i]:
                if j > i:
                    labels[j] = 0


def _check_feasible(labels, hc_neighbours):
    for i in range(len(labels)):
        if labels[i] and any(labels[j] for j in hc_neighbours[i]):
            raise RuntimeError("labelled points violate the hard core; "
                               "the chain state is corrupt")


def run_miseal(zeta, trend, radii, priors=None, settings=None, schedule=None,
               seed=0, initial_theta=None):
    """Run the label-separation chain and return its posterior trace.

    ``zeta`` is the observed pattern (a point pattern or an (k, 2)
    array on the trend's region), ``trend`` the necessary-minutiae
    intensity as a scalar grid, ``radii`` the interaction radii.
    Points where the trend is undefined or zero are forced to label 0
    for the whole run and flagged with :class:`ExcludedTrendWarning`.
    By default ``lam`` starts at its prior mean while ``(beta, gamma)``
    start at the pseudo-likelihood estimate of the initial labelling,
    the same parameter the auxiliary density is anchored to; starting
    far from that anchor suppresses every exchange move by the
    auxiliary mismatch penalty.  ``initial_theta`` overrides all three
    (with ``p_theta = 0`` the override is the only source, since no
    pseudo-likelihood fit happens).  Identical inputs and seed
    reproduce the trace bit for bit.
    """
    priors = priors if priors is not None else Priors()
    settings = settings if settings is not None else ProposalSettings()
    schedule = schedule if schedule is not None else Schedule()
    rng = np.random.default_rng(seed)

    roi = trend.roi
    if isinstance(zeta, PointPattern):
        if not roi.same_geometry(zeta.roi):
            raise GeometryMismatch("pattern and trend geometry disagree")
        pattern = zeta
    else:
        pattern = PointPattern(zeta, roi)
    pts = pattern.points
    k = len(pts)
    if k == 0:
        raise TooFewPoints("need at least one observed point")

    area = roi.area
    priors = replace(priors, p_label=priors.label_success(area, k))
    p_label = priors.p_label

    mu = trend.value_at(pts)
    excluded = ~np.isfinite(mu) | (mu <= 0.0)
    if excluded.any():
        warnings.warn(
            f"{int(excluded.sum())} of {k} points sit where the trend is "
            "undefined or zero; they are forced to the random part",
            ExcludedTrendWarning, stacklevel=2)
    log_mu = np.full(k, -math.inf)
    log_mu[~excluded] = np.log(mu[~excluded])

    dist = squareform(pdist(pts)) if k >= 2 else np.zeros((k, k))
    idx = np.arange(k)
    neighbours = [np.nonzero((dist[i] <= radii.interaction) & (idx != i))[0].tolist()
                  for i in range(k)]
    hc_neighbours = [np.nonzero((dist[i] <= radii.hard_core) & (idx != i))[0].tolist()
                     for i in range(k)]

    labels = [0 if excluded[i] else 1 for i in range(k)]
    _hard_core_repair(labels, hc_neighbours)
    labels_np = np.array(labels, dtype=np.uint8)

    if initial_theta is None:
        lam = priors.a0 / priors.b0
        beta = priors.a1 / priors.b1
        gamma = priors.p1 / (priors.p1 + priors.q1)
    else:
        lam, beta, gamma = _theta3(initial_theta)
    if not (lam > 0 and beta > 0 and 0.0 < gamma < 1.0):
        raise ValueError("initial theta must satisfy lam, beta > 0 and "
                         "0 < gamma < 1")

    # Running sufficient statistics of the labelled pattern, updated in
    # O(1) per accepted flip.
    lab_idx = [i for i in range(k) if labels[i]]
    n_eta = len(lab_idx)
    slm_eta = float(sum(log_mu[i] for i in lab_idx))
    s_eta = sum(1 for a in lab_idx for b in lab_idx
                if a < b and dist[a, b] <= radii.interaction)

    def current_eta_pattern():
        sel = [i for i in range(k) if labels[i]]
        return PointPattern(pts[sel], roi, validate=False)

    def sample_aux(beta_at, gamma_at):
        params = ModelParams(lam=0.0, beta=beta_at, gamma=gamma_at,
                             radii=radii, trend=trend)
        aux = sample_strauss_hardcore(params, steps=settings.aux_chain_steps,
                                      rng=rng)
        if min_pair_distance(aux) <= radii.hard_core:
            raise AuxSamplerFailure("auxiliary pattern violates the hard core")
        return strauss_sufficient_stats(aux, trend, radii)

    use_theta_moves = settings.p_theta > 0.0
    theta_hat = None
    aux_stats = None
    refits = []
    if use_theta_moves:
        theta_hat = mple_fit(current_eta_pattern(), radii, trend)
        if initial_theta is None:
            beta, gamma = theta_hat
        aux_stats = sample_aux(*theta_hat)

    counters = {name: [0, 0] for name in MOVE_NAMES}
    n_post = schedule.iterations - schedule.burn_in
    n_rec = n_post // schedule.thinning
    rec_t = np.zeros(n_rec, dtype=np.int64)
    rec_lam = np.zeros(n_rec)
    rec_beta = np.zeros(n_rec)
    rec_gamma = np.zeros(n_rec)
    rec_move = np.zeros(n_rec, dtype=np.int8)
    rec_accepted = np.zeros(n_rec, dtype=bool)
    rec_labels = np.zeros((n_rec, k), dtype=np.uint8)
    freq_acc = np.zeros(k, dtype=np.int64)

    log_p_odds = _log_odds(p_label)

    for t in range(1, schedule.iterations + 1):
        if rng.random() < settings.p_theta:
            if rng.random() < settings.p_lambda:
                move = MOVE_LAMBDA
                lam = gibbs_update_lambda(k - n_eta, area, priors, rng)
                accepted = True
            else:
                move = MOVE_BETA_GAMMA
                beta_p, gamma_p, _ = propose_beta_gamma(beta, gamma, settings,
                                                        rng)
                accepted = False
                if 0.0 < gamma_p < 1.0:
                    aux_new = sample_aux(beta_p, gamma_p)
                    eta_stats = PatternStats(n_eta, slm_eta, s_eta)
                    log_h = _log_aux_hastings(
                        (lam, beta_p, gamma_p), (lam, beta, gamma),
                        aux_new, aux_stats, theta_hat, eta_stats, priors)
                    if math.log(rng.random()) < log_h:
                        beta, gamma = beta_p, gamma_p
                        aux_stats = aux_new
                        accepted = True
        else:
            move = MOVE_FLIP
            i = int(rng.integers(k))
            n_close = sum(1 for j in neighbours[i] if labels[j])
            if labels[i]:
                log_h = log_flip_hastings(1, lam, beta, gamma, log_mu[i],
                                          n_close, p_label)
            else:
                hc_ok = not any(labels[j] for j in hc_neighbours[i])
                log_h = log_flip_hastings(0, lam, beta, gamma, log_mu[i],
                                          n_close, p_label, hc_ok)
            accepted = math.log(rng.random()) < log_h
            if accepted:
                if labels[i]:
                    labels[i] = 0
                    labels_np[i] = 0
                    n_eta -= 1
                    slm_eta -= log_mu[i]
                    s_eta -= n_close
                else:
                    labels[i] = 1
                    labels_np[i] = 1
                    n_eta += 1
                    slm_eta += log_mu[i]
                    s_eta += n_close
        counters[MOVE_NAMES[move]][0] += 1
        counters[MOVE_NAMES[move]][1] += int(accepted)

        if use_theta_moves and t <= schedule.burn_in:
            if t % schedule.refit_interval == 0:
                theta_hat = mple_fit(current_eta_pattern(), radii, trend)
                refits.append(theta_hat)
            if t == schedule.burn_in and refits:
                fits = np.array(refits)
                if schedule.theta_hat_mean == "log":
                    theta_hat = tuple(np.exp(np.mean(np.log(fits), axis=0)))
                else:
                    theta_hat = tuple(np.mean(fits, axis=0))

        if t > schedule.burn_in:
            freq_acc += labels_np
            d = t - schedule.burn_in
            if d % schedule.thinning == 0:
                r = d // schedule.thinning - 1
                rec_t[r] = t
                rec_lam[r] = lam
                rec_beta[r] = beta
                rec_gamma[r] = gamma
                rec_move[r] = move
                rec_accepted[r] = accepted
                rec_labels[r] = labels_np
        if t % schedule.feasibility_interval == 0:
            _check_feasible(labels, hc_neighbours)

    return PosteriorTrace(
        points=pts.copy(), t=rec_t, lam=rec_lam, beta=rec_beta,
        gamma=rec_gamma, move=rec_move, accepted=rec_accepted,
        label_freq=freq_acc / float(n_post), label_samples=rec_labels,
        excluded=excluded, burn_in=schedule.burn_in,
        iterations=schedule.iterations, thinning=schedule.thinning,
        p_label=p_label,
        acceptance={name: tuple(v) for name, v in counters.items()},
        theta_hat=theta_hat, refits=refits)


def exact_label_posterior(zeta, params, p_label):
    """Marginal label-1 probabilities by explicit enumeration.

    Sums the joint density over all ``2**k`` label vectors, composing
    the Poisson density of the unlabelled part, the unnormalised
    Strauss density of the labelled part, and the Bernoulli label
    prior.  Only feasible for small patterns (``k <= 16``).
    """
    pts = _points_of(zeta)
    k = len(pts)
    if k > 16:
        raise ValueError("exact enumeration is limited to 16 points")
    roi = params.trend.roi
    if p_label <= 0.0:
        return np.zeros(k)
    log_p = math.log(p_label) if p_label > 0 else -math.inf
    log_q = math.log(1.0 - p_label) if p_label < 1 else -math.inf
    log_w = np.full(1 << k, -math.inf)
    masks = np.arange(1 << k, dtype=np.uint32)
    for m in range(1 << k):
        sel = [(m >> i) & 1 for i in range(k)]
        sel = np.array(sel, dtype=bool)
        eta = PointPattern(pts[sel], roi, validate=False)
        xi = PointPattern(pts[~sel], roi, validate=False)
        lg = log_strauss_density_unnorm(eta, params)
        if lg == -math.inf:
            continue
        n1 = int(sel.sum())
        prior = (n1 * log_p if n1 else 0.0) \
            + ((k - n1) * log_q if k > n1 else 0.0)
        if prior == -math.inf:
            continue
        log_w[m] = lg + log_poisson_density(xi, params.lam) + prior
    top = log_w.max()
    if top == -math.inf:
        raise ValueError("every label vector has zero posterior weight")
    w = np.exp(log_w - top)
    total = w.sum()
    marginals = np.empty(k)
    for i in range(k):
        marginals[i] = w[((masks >> i) & 1) == 1].sum() / total
    return marginals


@dataclass
class DependenceReport:
    """Pairwise label dependence summary for two observed points."""

    counts: np.ndarray
    expected: np.ndarray
    kl_bits: float
    corr_mean: float
    corr_se: float
    batches_used: int
    samples_used: int


def label_dependence_report(trace, i, j, thin=1, batches=100):
    """Dependence between the labels of points ``i`` and ``j``.

    Builds the 2x2 contingency table of the thinned label samples (rows
    and columns ordered label 1 first), the expected table under
    independence, the Kullback-Leibler divergence of the joint from the
    product of marginals in bits, and the Matthews correlation averaged
    over consecutive batches with its standard error.
    """
    if i == j:
        raise ValueError("need two distinct point indices")
    samples = trace.label_samples[::thin]
    a = samples[:, i].astype(np.int64)
    b = samples[:, j].astype(np.int64)
    n = len(a)
    if n == 0:
        raise ValueError("no label samples in the trace")
    if a.min() == a.max() or b.min() == b.max():
        raise DegenerateMarginal(
            "a label is constant over the samples; correlation is undefined")

    n11 = int(np.sum(a & b))
    n10 = int(np.sum(a & (1 - b)))
    n01 = int(np.sum((1 - a) & b))
    n00 = n - n11 - n10 - n01
    counts = np.array([[n11, n10], [n01, n00]])
    row = counts.sum(axis=1)
    col = counts.sum(axis=0)
    expected = np.outer(row, col) / n

    p = counts / n
    q = np.outer(row / n, col / n)
    nz = p > 0
    kl_bits = float(np.sum(p[nz] * np.log2(p[nz] / q[nz])))

    corrs = []
    for chunk in np.array_split(np.arange(n), batches):
        if len(chunk) == 0:
            continue
        ca, cb = a[chunk], b[chunk]
        c11 = np.sum(ca & cb)
        c10 = np.sum(ca & (1 - cb))
        c01 = np.sum((1 - ca) & cb)
        c00 = len(chunk) - c11 - c10 - c01
        denom = (c11 + c10) * (c01 + c00) * (c11 + c01) * (c10 + c00)
        if denom > 0:
            corrs.append((c11 * c00 - c10 * c01) / math.sqrt(denom))
    if not corrs:
        raise DegenerateMarginal("correlation is undefined in every batch")
    corrs = np.array(corrs)
    m = len(corrs)
    corr_se = float(corrs.std(ddof=1) / math.sqrt(m)) if m > 1 else math.nan
    return DependenceReport(counts=counts, expected=expected, kl_bits=kl_bits,
                            corr_mean=float(corrs.mean()), corr_se=corr_se,
                            batches_used=m, samples_used=n)
