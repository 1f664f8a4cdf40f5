"""Command-line front end: one subcommand per pipeline stage.

Every stochastic command takes a mandatory ``--seed``; identical command
lines on identical inputs produce identical output files.  A flat
key=value ``--config`` file can preload any long flag of the chosen
subcommand (keys use underscores); explicit flags win over the config.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
failure.
"""

import argparse
import os
import sys
from types import SimpleNamespace

import numpy as np

from . import fileio
from .analysis import (
    PatchGrid,
    deletion_experiment,
    greedy_match_score,
    patch_counts,
    poisson_regression_identity,
    simulation_study,
)
from .errors import DataError, NumericalError, UsageError
from .fields import necessary_intensity
from .grids import OrientationGrid, ScalarGrid
from .inference import (
    Priors,
    ProposalSettings,
    Schedule,
    label_dependence_report,
    run_miseal,
)
from .pcf import pcf_estimate, pcf_pool
from .pointprocess import (
    InteractionRadii,
    ModelParams,
    sample_poisson,
    sample_strauss_hardcore,
)
from .synthetic import (
    constant_frequency,
    constant_orientation,
    radial_orientation,
    square_roi,
    tangential_orientation,
)


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as exceptions."""

    def error(self, message):
        raise UsageError(message)


def _read_scalar(path, what):
    grid = fileio.read_fieldgrid(path)
    if not isinstance(grid, ScalarGrid):
        raise DataError(f"{what} must be a scalar grid: {path}")
    return grid


def _read_orientation(path):
    grid = fileio.read_fieldgrid(path)
    if not isinstance(grid, OrientationGrid):
        raise DataError(f"expected an orientation grid: {path}")
    return grid


def _read_pattern(path):
    points, _ = fileio.read_points(path)
    return points


def _radii(args):
    return InteractionRadii(args.h, args.R)


def _schedule(args):
    return Schedule(burn_in=args.burnin, iterations=args.iters,
                    thinning=args.thin, refit_interval=args.refit_interval)


def _settings(args):
    return ProposalSettings(p_theta=args.p_theta, p_lambda=args.p_lambda,
                            aux_chain_steps=args.aux_steps)


def _priors(args):
    return Priors(lambda0=args.lambda0)


def _write_run(out_dir, zeta, trace):
    os.makedirs(out_dir, exist_ok=True)
    fileio.write_trace(os.path.join(out_dir, "trace.txt"), trace)
    fileio.write_labels(os.path.join(out_dir, "labels.txt"),
                        zeta, trace.label_freq)
    fileio.write_label_samples(os.path.join(out_dir, "wsamples.txt"),
                               trace.label_samples)


# ---------------------------------------------------------------------------
# Command bodies


def _cmd_synth(args):
    roi = square_roi(args.size, args.pixel_size)
    centre = args.centre
    if centre is None:
        centre = ((args.size - 1) / 2.0, (args.size - 1) / 2.0)
    if args.kind == "constant":
        of = constant_orientation(roi, args.theta)
    elif args.kind == "radial":
        of = radial_orientation(roi, centre)
    else:
        of = tangential_orientation(roi, centre)
    rf = constant_frequency(roi, args.inter_ridge)
    of_path, rf_path = args.out
    fileio.write_fieldgrid(of_path, of)
    fileio.write_fieldgrid(rf_path, rf)


def _cmd_fields(args):
    of = _read_orientation(args.of)
    rf = _read_scalar(args.rf, "ridge frequency")
    mu = necessary_intensity(of, rf, smoothing_sigma=args.sigma,
                             patch_size=args.patch_size)
    fileio.write_fieldgrid(args.out, mu)


def _cmd_simulate(args):
    trend = _read_scalar(args.mu, "trend")
    rng = np.random.default_rng(args.seed)
    if args.model == "poisson":
        if args.lam is None:
            raise UsageError("poisson simulation needs --lam")
        pattern = sample_poisson(trend.roi, args.lam, rng)
        fileio.write_points(args.out, pattern.points)
        return
    for name in ("beta", "gamma", "h", "R"):
        if getattr(args, name) is None:
            raise UsageError(f"strauss simulation needs --{name}")
    params = ModelParams(args.lam or 0.0, args.beta, args.gamma,
                         _radii(args), trend)
    necessary = sample_strauss_hardcore(params, args.steps, rng)
    if args.model == "strauss":
        fileio.write_points(args.out, necessary.points)
        return
    if args.lam is None:
        raise UsageError("superposition needs --lam")
    random = sample_poisson(trend.roi, args.lam, rng)
    zeta = np.vstack([necessary.points, random.points])
    labels = np.concatenate([
        np.ones(len(necessary.points), dtype=np.int8),
        np.zeros(len(random.points), dtype=np.int8)])
    fileio.write_points(args.out, zeta, labels)


def _cmd_infer(args):
    zeta = _read_pattern(args.pattern)
    trend = _read_scalar(args.mu, "trend")
    trace = run_miseal(zeta, trend, _radii(args), _priors(args),
                       _settings(args), _schedule(args), seed=args.seed)
    _write_run(args.out, zeta, trace)


def _cmd_pcf(args):
    paths = args.pattern
    if args.mu is not None:
        trend = _read_scalar(args.mu, "trend")
        roi, intensity = trend.roi, trend
    elif args.intensity is not None and args.window is not None:
        roi, intensity = square_roi(args.window), args.intensity
    else:
        raise UsageError("pcf needs --mu, or --intensity with --window")
    r_grid = np.linspace(args.r_min, args.r_max, args.bins)
    curves = []
    for path in paths:
        points = _read_pattern(path)
        pattern = SimpleNamespace(points=points, roi=roi)
        curves.append(pcf_estimate(pattern, intensity, r_grid,
                                   bandwidth=args.bandwidth))
    if len(curves) == 1:
        fileio.write_columns(args.out, "pcf",
                             {"r": curves[0].r, "g": curves[0].g})
        return
    pooled = pcf_pool(curves)
    fileio.write_columns(args.out, "pcf-pooled",
                         {"r": pooled.r, "mean": pooled.mean,
                          "lower": pooled.lower, "upper": pooled.upper})


def _cmd_regress(args):
    minutiae = _read_pattern(args.pattern)
    of = _read_orientation(args.of)
    rf = _read_scalar(args.rf, "ridge frequency")
    grid = PatchGrid(of.roi, patches=args.patches)
    data = patch_counts(minutiae, of, rf, grid, smoothing_sigma=args.sigma)
    if not data.records:
        raise DataError("no usable patches: nothing to regress on")
    result = poisson_regression_identity(data.pairs())
    with open(args.out, "w", encoding="ascii", newline="\n") as fh:
        fh.write(fileio.format_regression_result(result))
    if args.pairs_out:
        pairs = data.pairs()
        fileio.write_columns(args.pairs_out, "patch-pairs",
                             {"number": pairs[:, 0], "count": pairs[:, 1]})


def _cmd_study(args):
    trend = _read_scalar(args.mu, "trend")
    report = simulation_study(
        trend, _radii(args), _priors(args), _settings(args),
        _schedule(args), replicates=args.replicates,
        master_seed=args.seed)
    with open(args.out, "w", encoding="ascii", newline="\n") as fh:
        fh.write(fileio.format_study_report(report))


def _cmd_dependence(args):
    samples = fileio.read_label_samples(args.wsamples)
    trace = SimpleNamespace(label_samples=samples)
    report = label_dependence_report(trace, args.i, args.j,
                                     thin=args.thin, batches=args.batches)
    counts = report.counts
    expected = report.expected
    block = fileio.format_key_value("DEPENDENCE v1", {
        "i": args.i, "j": args.j,
        "n11": int(counts[0, 0]), "n10": int(counts[0, 1]),
        "n01": int(counts[1, 0]), "n00": int(counts[1, 1]),
        "e11": float(expected[0, 0]), "e10": float(expected[0, 1]),
        "e01": float(expected[1, 0]), "e00": float(expected[1, 1]),
        "kl_bits": report.kl_bits,
        "corr_mean": report.corr_mean,
        "corr_se": report.corr_se,
        "batches_used": report.batches_used,
        "samples_used": report.samples_used,
    })
    with open(args.out, "w", encoding="ascii", newline="\n") as fh:
        fh.write(block)


def _cmd_delete_experiment(args):
    zeta1 = _read_pattern(args.pattern1)
    zeta2 = _read_pattern(args.pattern2)
    tr1 = SimpleNamespace(label_samples=fileio.read_label_samples(args.wsamples1))
    tr2 = SimpleNamespace(label_samples=fileio.read_label_samples(args.wsamples2))

    def scorer(a, b):
        return greedy_match_score(a, b, radius=args.radius)

    report = deletion_experiment(zeta1, zeta2, tr1, tr2, scorer=scorer,
                                 replicates=args.replicates,
                                 rng=args.seed)
    block = fileio.format_key_value("DELETION v1", {
        "share": report.share,
        "share_se": report.share_se,
        "rel_diff_mean": report.rel_diff_mean,
        "rel_diff_se": report.rel_diff_se,
        "n_requested": report.n_requested,
        "n_failed": report.n_failed,
        "n_rel_skipped": report.n_rel_skipped,
        "bin_width": report.bin_width,
    })
    with open(args.out, "w", encoding="ascii", newline="\n") as fh:
        fh.write(block)
    if args.hist_out:
        with open(args.hist_out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(fileio.format_histogram(
                report.hist_centers, report.hist_counts, report.bin_width))


# ---------------------------------------------------------------------------
# Parser assembly


def _add_radii(p):
    p.add_argument("--h", type=float, default=None,
                   help="hard-core distance in pixels")
    p.add_argument("--R", type=float, default=None,
                   help="interaction distance in pixels")


def _add_chain_flags(p):
    p.add_argument("--burnin", type=int, default=10_000)
    p.add_argument("--iters", type=int, default=1_010_000,
                   help="total iterations including burn-in")
    p.add_argument("--thin", type=int, default=100)
    p.add_argument("--refit-interval", type=int, default=1000)
    p.add_argument("--p-theta", type=float, default=0.05)
    p.add_argument("--p-lambda", type=float, default=0.2)
    p.add_argument("--aux-steps", type=int, default=5000)
    p.add_argument("--lambda0", type=float, default=1e-4)


def build_parser():
    parser = _Parser(prog="miseal", description=__doc__)
    parser.add_argument("--config", default=None,
                        help="flat key=value file preloading flag defaults")
    sub = parser.add_subparsers(dest="command", metavar="command")
    commands = {}

    p = sub.add_parser("synth", help="emit built-in test fields")
    p.add_argument("--kind", required=True,
                   choices=("constant", "radial", "tangential"))
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--pixel-size", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--inter-ridge", type=float, default=8.0)
    p.add_argument("--centre", type=float, nargs=2, default=None)
    p.add_argument("--out", nargs=2, required=True,
                   metavar=("OF", "RF"))
    p.set_defaults(func=_cmd_synth)
    commands["synth"] = p

    p = sub.add_parser("fields", help="necessary-minutiae intensity map")
    p.add_argument("--of", required=True)
    p.add_argument("--rf", required=True)
    p.add_argument("--sigma", type=float, default=8.0)
    p.add_argument("--patch-size", type=int, default=32)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fields)
    commands["fields"] = p

    p = sub.add_parser("simulate", help="sample point patterns")
    p.add_argument("model", choices=("poisson", "strauss", "superposition"))
    p.add_argument("--mu", required=True, help="trend grid file")
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    _add_radii(p)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)
    commands["simulate"] = p

    p = sub.add_parser("infer", help="run the label-separation chain")
    p.add_argument("--pattern", required=True)
    p.add_argument("--mu", required=True)
    _add_radii(p)
    p.add_argument("--seed", type=int, required=True)
    _add_chain_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_infer)
    commands["infer"] = p

    p = sub.add_parser("pcf", help="pair correlation estimate")
    p.add_argument("--pattern", action="append", required=True)
    p.add_argument("--intensity", type=float, default=None)
    p.add_argument("--window", type=int, default=None,
                   help="square window size for a constant intensity")
    p.add_argument("--mu", default=None)
    p.add_argument("--r-min", type=float, default=1.0)
    p.add_argument("--r-max", type=float, default=50.0)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pcf)
    commands["pcf"] = p

    p = sub.add_parser("regress", help="patch counts and Poisson regression")
    p.add_argument("--pattern", required=True)
    p.add_argument("--of", required=True)
    p.add_argument("--rf", required=True)
    p.add_argument("--patches", type=int, default=100)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.add_argument("--pairs-out", default=None)
    p.set_defaults(func=_cmd_regress)
    commands["regress"] = p

    p = sub.add_parser("study", help="prior-draw simulation study")
    p.add_argument("--mu", required=True)
    _add_radii(p)
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    _add_chain_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_study)
    commands["study"] = p

    p = sub.add_parser("dependence", help="pairwise label dependence")
    p.add_argument("--wsamples", required=True)
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--batches", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_dependence)
    commands["dependence"] = p

    p = sub.add_parser("delete-experiment",
                       help="posterior versus uniform deletion")
    p.add_argument("--pattern1", required=True)
    p.add_argument("--pattern2", required=True)
    p.add_argument("--wsamples1", required=True)
    p.add_argument("--wsamples2", required=True)
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--radius", type=float, default=15.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hist-out", default=None)
    p.set_defaults(func=_cmd_delete_experiment)
    commands["delete-experiment"] = p

    return parser, commands


def _apply_config(argv, parser, commands):
    """Load --config, lower it into the subcommand's defaults and strip it.

    Returns ``argv`` without the ``--config FILE`` tokens so the flag may
    appear before or after the command name.
    """
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        raise UsageError("--config needs a file argument")
    config = fileio.read_config(argv[at + 1])
    argv = argv[:at] + argv[at + 2:]
    command = next((a for a in argv if a in commands), None)
    sub = commands.get(command)
    if sub is None:
        raise UsageError("--config needs a command to apply to")
    known = {}
    for action in sub._actions:
        if action.option_strings and action.dest in config:
            raw = config[action.dest]
            known[action.dest] = action.type(raw) if action.type else raw
    unknown = set(config) - set(known)
    if unknown:
        raise UsageError(
            f"config keys not understood by {command}: {sorted(unknown)}")
    sub.set_defaults(**known)
    return argv


def parse_and_dispatch(argv):
    """Parse ``argv`` (no program name) and run one command.

    Returns the process exit code instead of raising, so both tests and
    ``main`` share the error policy.
    """
    parser, commands = build_parser()
    try:
        argv = _apply_config(list(argv), parser, commands)
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError("choose a command")
        args.func(args)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
