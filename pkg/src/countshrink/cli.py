"""Command line interface.

Subcommands: simulate, fit, risk-curve, analyze. Matrices travel as
headerless CSV (counts as integers, reals in full precision), totals
as one integer per line, curves as a headered CSV. Every run writes a
manifest.json naming the command, resolved configuration, seed, and
versions. Outputs carry no timestamps, so a rerun with the same flags
is byte-identical.

Exit codes: 0 success, 2 bad configuration or flags, 3 unreadable or
malformed data, 4 numerical failure.
"""

import argparse
import os
import sys

import numpy as np

from . import _io, _rng, analysis, models, simulate
from ._version import SCHEMA_VERSION, __version__
from .estimators import LowRankMLE, MaximumLikelihood, SimpleShrinkage, ZeroReplacement
from .exceptions import DataError, NumericalError
from .optim import FistaConfig
from .risk import CvConfig, TaylorConfig, risk_curve


class ConfigError(ValueError):
    """Flag combination rejected before any work happens."""


def _parse_grid(text, log_spaced):
    """Parse 'LO:HI:N' into N grid points, geometric or linear."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError("--grid expects LO:HI:N")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        n = int(parts[2])
    except ValueError:
        raise ConfigError("--grid expects numeric LO:HI and integer N")
    if n < 1:
        raise ConfigError("--grid needs N >= 1")
    if n == 1:
        return np.array([lo])
    if not lo < hi:
        raise ConfigError("--grid needs LO < HI")
    if log_spaced:
        if lo <= 0:
            raise ConfigError("log grids need LO > 0")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _manifest(command, config, outputs):
    return {
        "command": command,
        "config": config,
        "outputs": sorted(outputs),
        "rng_algorithm": _rng.RNG_ALGORITHM,
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
    }


def _write_all(out_dir, files):
    os.makedirs(out_dir, exist_ok=True)
    for name, text in files.items():
        with open(os.path.join(out_dir, name), "w", newline="") as fh:
            fh.write(text)


def _build_estimator(args):
    kind = args.estimator
    if kind == "ml":
        return MaximumLikelihood()
    if kind == "zr":
        return ZeroReplacement(z=args.z)
    return SimpleShrinkage(w=args.w, eps=args.eps)


def cmd_simulate(args):
    spec = simulate.SimSpec(
        scenario=args.scenario, m=args.rows, k=args.cols, n0=args.n0,
        rank=args.rank, amplitude=args.amplitude, seed=args.seed,
    )
    try:
        spec.validate()
    except DataError as e:
        raise ConfigError(str(e))
    data = simulate.generate(spec)
    totals = data.row_totals
    if totals is None:
        totals = data.counts.sum(axis=1)  # observed sums for the Poisson model
    files = {
        "truth.csv": _io.float_matrix_text(data.truth),
        "counts.csv": _io.int_matrix_text(data.counts),
        "row_totals.csv": _io.int_vector_text(totals),
    }
    config = spec.to_dict()
    config["model"] = data.model.value
    if spec.scenario == "lowrank":
        config["column_factor_construction"] = simulate.LOWRANK_V_NOTE
    files["manifest.json"] = _io.json_text(_manifest("simulate", config, files))
    _write_all(args.out, files)
    return 0


def cmd_fit(args):
    if args.counts is None:
        raise ConfigError("--counts is required")
    y = _io.read_count_matrix(args.counts)
    lam = 1.0 if args.lam is None else args.lam
    if args.estimator == "lowrank":
        est = LowRankMLE(model=args.model, lam=lam, iters=args.iters,
                         step=args.step, record_objective=True)
        est.fit(y)
        result = est.fit_result_
        report = {
            "model": args.model,
            "lambda": lam,
            "iters": args.iters,
            "effective_rank": result.effective_rank,
            "objective_trace": list(result.objective_trace),
            "final_objective": result.objective_trace[-1],
            "warnings": (["intensity left the range justifying the default step"]
                         if result.intensity_bound_exceeded else []),
        }
        files = {
            "z_hat.csv": _io.float_matrix_text(result.z_hat),
            "estimate.csv": _io.float_matrix_text(est.estimate_),
            "fit.json": _io.json_text(report),
        }
    else:
        if args.model == "poisson":
            raise ConfigError("estimator %r fits the multinomial model only"
                              % args.estimator)
        est = _build_estimator(args)
        try:
            est.fit(y)
        except DataError as e:
            raise DataError(f"cannot fit on {args.counts}: {e}")
        report = {"model": args.model, "estimator": args.estimator,
                  "params": _io.json_safe(est.get_params())}
        files = {
            "estimate.csv": _io.float_matrix_text(est.estimate_),
            "fit.json": _io.json_text(report),
        }
    config = {
        "counts": args.counts, "model": args.model, "estimator": args.estimator,
        "lambda": lam, "iters": args.iters, "step": args.step,
    }
    files["manifest.json"] = _io.json_text(_manifest("fit", config, files))
    _write_all(args.out, files)
    return 0


def cmd_risk_curve(args):
    if args.counts is None:
        raise ConfigError("--counts is required")
    if args.estimator not in ("lowrank", "simple"):
        raise ConfigError("risk-curve sweeps need --estimator lowrank or simple")
    if (args.grid is None) == (args.lam is None):
        raise ConfigError("give exactly one of --grid or --lambda")
    log_spaced = args.estimator == "lowrank"  # penalty grids are geometric
    if args.grid is not None:
        grid = _parse_grid(args.grid, log_spaced)
    else:
        grid = np.array([args.lam])
    if args.cv is not None and args.model == "poisson":
        raise ConfigError("--cv applies to the multinomial model only")

    y = _io.read_count_matrix(args.counts)
    truth = _io.read_matrix(args.truth, "truth") if args.truth else None
    taylor = TaylorConfig(order=args.order, num_probe_draws=args.probes,
                          seed=args.seed)
    cv = (CvConfig(folds=args.cv, splits=args.cv_splits, seed=args.seed)
          if args.cv is not None else None)
    fista = FistaConfig(max_iters=args.iters, step=args.step)
    if args.estimator == "simple":
        eps = args.eps

        def factory(value):
            return SimpleShrinkage(w=float(value), eps=eps)

        curve = risk_curve(args.model, y, grid, fista=fista, taylor=taylor,
                           cv=cv, truth=truth, fix_probes=args.fix_probes,
                           estimator_factory=factory)
    else:
        curve = risk_curve(args.model, y, grid, fista=fista, taylor=taylor,
                           cv=cv, truth=truth, fix_probes=args.fix_probes)
    files = {
        "risk_curve.csv": curve.to_csv_text(),
        "risk_curve.json": curve.to_json_text(),
    }
    config = {
        "counts": args.counts, "model": args.model, "estimator": args.estimator,
        "grid": args.grid, "lambda": args.lam, "iters": args.iters,
        "order": args.order, "probes": args.probes, "seed": args.seed,
        "cv": args.cv, "cv_splits": args.cv_splits, "truth": args.truth,
        "fix_probes": args.fix_probes, "w": args.w, "eps": args.eps,
        "step": args.step,
    }
    files["manifest.json"] = _io.json_text(_manifest("risk-curve", config, files))
    _write_all(args.out, files)
    return 0


def cmd_analyze(args):
    if args.fitted is None or args.totals is None:
        raise ConfigError("--fitted and --totals are required")
    p_hat = _io.read_matrix(args.fitted, "fitted composition")
    totals = _io.read_vector(args.totals, "row totals")
    freq = analysis.column_frequencies(p_hat, totals)
    cooc = analysis.cosine_cooccurrence(p_hat)
    top_f = analysis.top_frequencies(freq, args.top)
    top_p = analysis.top_pairs(cooc.values, args.top)
    freq_lines = ["column,frequency"]
    freq_lines += [f"{j},{_io.fmt_float(v)}" for j, v in top_f]
    pair_lines = ["column_a,column_b,cooccurrence"]
    pair_lines += [f"{a},{b},{_io.fmt_float(v)}" for a, b, v in top_p]
    files = {
        "frequencies.csv": _io.float_matrix_text(freq[None, :]),
        "cooccurrence.csv": _io.float_matrix_text(cooc.values),
        "top_frequencies.csv": "\n".join(freq_lines) + "\n",
        "top_pairs.csv": "\n".join(pair_lines) + "\n",
    }
    config = {"fitted": args.fitted, "totals": args.totals, "top": args.top,
              "degenerate_columns": [int(j) for j in
                                     np.nonzero(cooc.degenerate_columns)[0]]}
    files["manifest.json"] = _io.json_text(_manifest("analyze", config, files))
    _write_all(args.out, files)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="countshrink",
        description="Estimate count-matrix compositions and intensities, "
                    "select regularization by unbiased risk estimates.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a synthetic scenario")
    sim.add_argument("--scenario", choices=simulate.SCENARIOS, required=True)
    sim.add_argument("--rows", type=int, required=True)
    sim.add_argument("--cols", type=int, required=True)
    sim.add_argument("--n0", type=float, default=10.0,
                     help="mean row total (multinomial scenarios)")
    sim.add_argument("--rank", type=int, default=20)
    sim.add_argument("--amplitude", type=float, default=5.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)

    fit = sub.add_parser("fit", help="fit one estimator to a counts file")
    fit.add_argument("--counts", required=True)
    fit.add_argument("--model", choices=("poisson", "multinomial"),
                     default="multinomial")
    fit.add_argument("--estimator", choices=("ml", "zr", "simple", "lowrank"),
                     default="lowrank")
    fit.add_argument("--lambda", dest="lam", type=float, default=None)
    fit.add_argument("--iters", type=int, default=100)
    fit.add_argument("--step", type=float, default=None)
    fit.add_argument("--w", type=float, default=1.0)
    fit.add_argument("--eps", type=float, default=0.5)
    fit.add_argument("--z", type=float, default=0.5)
    fit.add_argument("--out", required=True)

    rc = sub.add_parser("risk-curve", help="sweep a grid, select the minimizer")
    rc.add_argument("--counts", required=True)
    rc.add_argument("--model", choices=("poisson", "multinomial"),
                    default="multinomial")
    rc.add_argument("--estimator", choices=("ml", "zr", "simple", "lowrank"),
                    default="lowrank")
    rc.add_argument("--grid", default=None,
                    help="LO:HI:N, geometric for lowrank, linear for simple")
    rc.add_argument("--lambda", dest="lam", type=float, default=None,
                    help="single grid point instead of --grid")
    rc.add_argument("--iters", type=int, default=100)
    rc.add_argument("--step", type=float, default=None)
    rc.add_argument("--order", type=int, default=2)
    rc.add_argument("--probes", type=int, default=1)
    rc.add_argument("--seed", type=int, default=0)
    rc.add_argument("--truth", default=None)
    rc.add_argument("--cv", type=int, default=None)
    rc.add_argument("--cv-splits", dest="cv_splits", type=int, default=20)
    rc.add_argument("--fix-probes", dest="fix_probes", action="store_true",
                    help="reuse one probe set across the whole grid")
    rc.add_argument("--w", type=float, default=1.0)
    rc.add_argument("--eps", type=float, default=0.5)
    rc.add_argument("--z", type=float, default=0.5)
    rc.add_argument("--out", required=True)

    an = sub.add_parser("analyze", help="summarize a fitted composition")
    an.add_argument("--fitted", required=True)
    an.add_argument("--totals", required=True)
    an.add_argument("--top", type=int, default=30)
    an.add_argument("--out", required=True)
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "risk-curve": cmd_risk_curve,
    "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
