"""Command line entry point: ``ellipvol {theory,simulate,gof,validate,bench}``."""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from ..errors import ConfigError, NumericalError
from ..linalg import log_det_gram, perpendicular_log_det
from ..sampling import EllipticalModel, RandomStream, elliptical_sample, stable_reference_sample
from ..linalg import Spectrum
from ..stats import ks_one_sample_normal, ks_two_sample, mixed_reference_sample
from ..theory import b2_deficit, condition_bound
from .config import ExperimentConfig
from .experiment import ReplicateFailure, prepare, read_samples, run_experiment, write_samples
from .validate import validate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4


def _write_json(path, obj):
    text = json.dumps(obj, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_theory(args):
    config = ExperimentConfig.load(args.config)
    spectrum, t, norming, regime = prepare(config)
    _write_json(args.out, {
        "config": config.to_dict(),
        "norming": norming.to_dict(),
        "t_summary": t.summary(),
        "regime": regime.to_dict(),
        "diagnostics": {
            "b2_deficit": b2_deficit(spectrum),
            "condition_bound": condition_bound(spectrum),
        },
    })
    return EXIT_OK


def cmd_simulate(args):
    config = ExperimentConfig.load(args.config)
    if args.seed is not None:
        config.master_seed = args.seed
    if args.threads is not None:
        config.threads = args.threads if args.threads == "auto" else int(args.threads)
    config.__post_init__()
    report = run_experiment(config)
    write_samples(args.out_samples, report.samples)
    with open(args.out_report, "w") as fh:
        fh.write(report.to_json())
    g = report.gof
    if g is None:
        print(f"{report.regime.regime}: {len(report.samples)} samples, too few for a KS test")
        return EXIT_OK
    print(f"{report.regime.regime}: KS D={g.ks_statistic:.4f} p={g.ks_p_value:.4f} "
          f"mean={g.mean:.4f} var={g.variance:.4f} ({g.reference})")
    return EXIT_OK


def _parse_reference(text):
    parts = text.split(":")
    if parts[0] == "normal" and len(parts) == 1:
        return ("normal",)
    try:
        if parts[0] == "stable" and len(parts) == 2:
            return ("stable", float(parts[1]))
        if parts[0] == "mixed" and len(parts) == 3:
            return ("mixed", float(parts[1]), float(parts[2]))
    except ValueError:
        pass
    raise ConfigError(f"bad reference {text!r}; use normal, stable:ALPHA or mixed:TAU:ALPHA")


def cmd_gof(args):
    ref = _parse_reference(args.reference)
    try:
        values = np.array([r.standardized for r in read_samples(args.samples)])
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read samples: {exc}") from exc
    stream = RandomStream(args.seed, 0)
    size = 10 * values.size
    if ref[0] == "normal":
        report = ks_one_sample_normal(values)
    elif ref[0] == "stable":
        report = ks_two_sample(values, stable_reference_sample(ref[1], size, stream),
                               f"StableTwoSample({ref[1]:g})")
    else:
        report = ks_two_sample(values, mixed_reference_sample(ref[1], ref[2], size, stream),
                               f"MixedTwoSample({ref[1]:g},{ref[2]:g})")
    _write_json(args.out, report.to_dict())
    if args.out_ecdf:
        x = np.sort(values)
        with open(args.out_ecdf, "w") as fh:
            fh.write("x,ecdf\n")
            for k, v in enumerate(x, 1):
                fh.write(f"{v!r},{k / x.size!r}\n")
    if args.out_hist:
        counts, edges = np.histogram(values, bins=args.bins)
        with open(args.out_hist, "w") as fh:
            fh.write("left,right,count\n")
            for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
                fh.write(f"{lo!r},{hi!r},{int(c)}\n")
    return EXIT_OK


def cmd_validate(args):
    suite = validate()
    return EXIT_OK if suite.ok else EXIT_VALIDATION


def cmd_bench(args):
    model = EllipticalModel(args.n, args.p, Spectrum.identity(args.n))
    perp_t = chol_t = 0.0
    worst = 0.0
    for r in range(args.reps):
        _, _, Y = elliptical_sample(model, RandomStream(args.seed, r))
        t0 = time.perf_counter()
        a = perpendicular_log_det(Y).log_det
        t1 = time.perf_counter()
        b = log_det_gram(Y)
        t2 = time.perf_counter()
        perp_t += t1 - t0
        chol_t += t2 - t1
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    _write_json(None, {
        "n": args.n, "p": args.p, "reps": args.reps,
        "perpendicular_s": perp_t, "cholesky_s": chol_t,
        "max_relative_deviation": worst,
    })
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ellipvol",
        description="Log-volumes of random simplices from elliptical distributions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="norming constants and diagnostics for a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("simulate", help="simulate standardized log-volumes")
    p.add_argument("--config", required=True)
    p.add_argument("--out-samples", required=True)
    p.add_argument("--out-report", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gof", help="goodness of fit of a samples CSV")
    p.add_argument("--samples", required=True)
    p.add_argument("--reference", default="normal",
                   help="normal | stable:ALPHA | mixed:TAU:ALPHA")
    p.add_argument("--seed", type=int, default=0, help="seed for simulated references")
    p.add_argument("--out", default="-")
    p.add_argument("--out-ecdf", help="write the empirical CDF as CSV")
    p.add_argument("--out-hist", help="write histogram bins as CSV")
    p.add_argument("--bins", type=int, default=40)
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("validate", help="run the oracle suite")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="perpendicular vs Cholesky timing")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReplicateFailure as exc:
        print(f"numerical error: {exc} (seed {exc.seed})", file=sys.stderr)
        return EXIT_NUMERICAL
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
