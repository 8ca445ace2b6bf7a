"""Run a log-volume experiment end to end and persist the results."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..errors import NumericalError
from ..geometry import body_log_volume, log_factorial
from ..linalg import perpendicular_log_det
from ..sampling import EllipticalModel, derive_replicate_seed, elliptical_sample, stable_reference_sample
from ..stats import MIN_SAMPLES, classify_regime, ks_one_sample_normal, ks_two_sample, mixed_reference_sample
from ..theory import b2_deficit, condition_bound, estimate_t_matrix, norming_constants, t_matrix_identity

logger = logging.getLogger(__name__)

# reserved stream indices; replicates use 0, 1, 2, ...
T_MATRIX_STREAM = 1 << 63
REFERENCE_STREAM = (1 << 63) + 1
REFERENCE_FACTOR = 10

SAMPLE_COLUMNS = ("replicate", "seed", "log_det", "sum_log_radii", "log_volume", "standardized")


class ReplicateFailure(NumericalError):
    def __init__(self, replicate, seed, cause):
        super().__init__(f"replicate {replicate} (seed {seed}) failed: {cause}")
        self.replicate = replicate
        self.seed = seed


@dataclass(frozen=True)
class SampleRecord:
    replicate: int
    seed: int
    log_det: float
    sum_log_radii: float
    log_volume: float
    standardized: float


@dataclass
class ExperimentReport:
    config: dict
    norming: object
    t_summary: dict
    samples: list
    gof: object
    regime: object
    diagnostics: dict
    timings: dict = field(default_factory=dict)

    def to_dict(self, include_timings=True):
        out = {
            "config": self.config,
            "norming": self.norming.to_dict(),
            "t_summary": self.t_summary,
            "gof": None if self.gof is None else self.gof.to_dict(),
            "regime": self.regime.to_dict(),
            "diagnostics": self.diagnostics,
        }
        if include_timings:
            out["timings"] = self.timings
        return out

    def to_json(self, include_timings=True):
        return json.dumps(self.to_dict(include_timings), indent=2) + "\n"


def prepare(config):
    """Spectrum, t-matrix, norming constants and regime for a config."""
    spectrum = config.spectrum()
    n, p = config.n, config.p
    if spectrum.is_identity:
        t = t_matrix_identity(n, p)
    else:
        t = estimate_t_matrix(
            spectrum,
            p,
            config.mc_draws,
            derive_replicate_seed(config.master_seed, T_MATRIX_STREAM),
            workers=config.worker_count(),
        )
    norming = norming_constants(spectrum, p, t, config.variance_variant)
    regime = classify_regime(config.radial(), p, norming.sigma)
    return spectrum, t, norming, regime


def _replicate(index, model, master, body_logvol, center, scale):
    stream = derive_replicate_seed(master, index)
    _, log_radii, Y = elliptical_sample(model, stream)
    try:
        log_det = perpendicular_log_det(Y).log_det
    except NumericalError as exc:
        raise ReplicateFailure(index, stream.key, exc) from exc
    sum_log_radii = math.fsum(log_radii)
    log_volume = body_logvol + sum_log_radii + 0.5 * log_det
    # computed without the body term so every body gives bit-identical V_n
    standardized = (sum_log_radii + 0.5 * log_det - center) / scale
    return SampleRecord(index, stream.key, log_det, sum_log_radii, log_volume, standardized)


def run_experiment(config):
    """Simulate ``config.replicates`` log-volumes and test them against the limit law.

    V_n = (log Vol - log Vol(body) - mu_n/2 - m_n) / max(sigma_n/2, s_n); for the
    default simplex body -log Vol(body) is +log p!.  Replicate j always uses
    stream (master_seed, j), so output is identical for any thread count.
    """
    t0 = time.perf_counter()
    spectrum, t, norming, regime = prepare(config)
    t1 = time.perf_counter()

    n, p = config.n, config.p
    model = EllipticalModel(n, p, spectrum, config.radial())
    body = config.body_kind()
    body_logvol = body_log_volume(body) if body is not None else -log_factorial(p)
    center = norming.mu / 2.0 + regime.m_n
    scale = regime.scale

    def task(j):
        return _replicate(j, model, config.master_seed, body_logvol, center, scale)

    workers = config.worker_count()
    if workers == 1:
        samples = [task(j) for j in range(config.replicates)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            samples = list(pool.map(task, range(config.replicates)))
    samples.sort(key=lambda r: r.replicate)
    t2 = time.perf_counter()

    values = [r.standardized for r in samples]
    gof = _goodness_of_fit(values, regime, config.master_seed)
    t3 = time.perf_counter()

    return ExperimentReport(
        config=config.to_dict(),
        norming=norming,
        t_summary=t.summary(),
        samples=samples,
        gof=gof,
        regime=regime,
        diagnostics={
            "b2_deficit": b2_deficit(spectrum),
            "condition_bound": condition_bound(spectrum),
            "log_factorial_p": log_factorial(p),
        },
        timings={"setup_s": t1 - t0, "replicates_s": t2 - t1, "gof_s": t3 - t2},
    )


def _goodness_of_fit(values, regime, master):
    if len(values) < MIN_SAMPLES:
        logger.warning("only %d replicates; goodness of fit skipped", len(values))
        return None
    if regime.regime == "NormalLimit":
        return ks_one_sample_normal(values)
    stream = derive_replicate_seed(master, REFERENCE_STREAM)
    size = REFERENCE_FACTOR * len(values)
    if regime.regime == "StableLimit":
        ref = stable_reference_sample(regime.alpha, size, stream)
        return ks_two_sample(values, ref, f"StableTwoSample({regime.alpha:g})")
    ref = mixed_reference_sample(regime.tau, regime.alpha, size, stream)
    return ks_two_sample(values, ref, f"MixedTwoSample({regime.tau:g},{regime.alpha:g})")


def samples_to_csv(samples):
    """CSV text with floats written as shortest round-trip decimals."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SAMPLE_COLUMNS)
    for r in samples:
        w.writerow(
            [r.replicate, r.seed, repr(r.log_det), repr(r.sum_log_radii),
             repr(r.log_volume), repr(r.standardized)]
        )
    return buf.getvalue()


def samples_from_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != SAMPLE_COLUMNS:
        raise ValueError(f"samples CSV header must be {','.join(SAMPLE_COLUMNS)}")
    return [
        SampleRecord(int(r[0]), int(r[1]), float(r[2]), float(r[3]), float(r[4]), float(r[5]))
        for r in rows[1:]
        if r
    ]


def write_samples(path, samples):
    with open(path, "w", newline="") as fh:
        fh.write(samples_to_csv(samples))


def read_samples(path):
    with open(path, newline="") as fh:
        return samples_from_csv(fh.read())
