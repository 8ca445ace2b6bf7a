"""Goodness-of-fit checks for simulated log-volumes and limit-regime logic."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats as sps
from scipy.special import kolmogorov, ndtr

from ._validation import as_vector, check_symmetric
from .errors import DomainError, TooFewSamples
from .sampling import stable_reference_sample
from .theory import beta_moment

MIN_SAMPLES = 20
MIXED_WINDOW = (0.1, 10.0)


@dataclass(frozen=True)
class GofReport:
    sample_size: int
    ks_statistic: float
    ks_p_value: float
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    reference: str

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class RegimeClassification:
    """Which limit law V_n should follow.

    ``regime`` is ``NormalLimit``, ``StableLimit`` or ``Mixed``; ``alpha`` is
    the stability index of the radial part and ``tau`` = s_n / (sigma_n / 2)
    (set for Mixed only).
    """

    regime: str
    alpha: float
    s_n: float
    m_n: float
    sigma_half: float
    tau: float | None = None

    @property
    def scale(self):
        return max(self.sigma_half, self.s_n)

    def to_dict(self):
        return asdict(self)


def standardize(samples, center, scale):
    if not scale > 0:
        raise DomainError("scale must be > 0")
    return (np.asarray(samples, dtype=np.float64) - center) / scale


def _moments(x):
    if x.size < 3:
        return float(x.mean()), float(x.var(ddof=1)) if x.size > 1 else 0.0, 0.0, 0.0
    var = float(x.var(ddof=1))
    if var == 0:
        return float(x.mean()), 0.0, 0.0, 0.0
    return (
        float(x.mean()),
        var,
        float(sps.skew(x, bias=False)),
        float(sps.kurtosis(x, bias=False)),
    )


def _ks_pvalue(d, m_eff):
    """Asymptotic Kolmogorov tail with Stephens' finite-size adjustment."""
    rt = math.sqrt(m_eff)
    return float(min(1.0, max(0.0, kolmogorov((rt + 0.12 + 0.11 / rt) * d))))


def ks_one_sample_normal(samples):
    """One-sample Kolmogorov-Smirnov test against N(0, 1)."""
    x = np.sort(as_vector(samples, "samples"))
    m = x.size
    if m < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} samples, got {m}")
    cdf = ndtr(x)
    i = np.arange(1, m + 1)
    d = float(max(np.max(i / m - cdf), np.max(cdf - (i - 1) / m)))
    return GofReport(m, d, _ks_pvalue(d, m), *_moments(x), "Normal")


def ks_two_sample(a, b, reference="TwoSample"):
    """Two-sample Kolmogorov-Smirnov test; moments describe ``a``."""
    a = np.sort(as_vector(a, "a"))
    b = np.sort(as_vector(b, "b"))
    if a.size < MIN_SAMPLES or b.size < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} samples in each sample")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    m_eff = a.size * b.size / (a.size + b.size)
    return GofReport(a.size, d, _ks_pvalue(d, m_eff), *_moments(a), reference)


def radial_norming(law, p):
    """(m_n, s_n, alpha) for sum_{i<=p} log R_i."""
    if law.kind == "Degenerate1":
        return 0.0, 0.0, 2.0
    if law.kind == "LogNormal":
        return p * law.loc, law.scale * math.sqrt(p), 2.0
    if law.kind == "LogCauchy":
        return p * law.loc, p * law.scale, 1.0
    return 0.0, law.scale * p ** (1.0 / law.alpha), law.alpha


def classify_regime(law, p, sigma_n):
    """Normal, stable or mixed limit for the standardized log-volume."""
    if not sigma_n > 0:
        raise DomainError("sigma_n must be > 0")
    m_n, s_n, alpha = radial_norming(law, p)
    half = sigma_n / 2.0
    if s_n == 0:
        return RegimeClassification("NormalLimit", alpha, s_n, m_n, half)
    ratio = s_n / half
    lo, hi = MIXED_WINDOW
    if lo < ratio < hi:
        return RegimeClassification("Mixed", alpha, s_n, m_n, half, ratio)
    if ratio >= hi:
        return RegimeClassification("StableLimit", alpha, s_n, m_n, half)
    return RegimeClassification("NormalLimit", alpha, s_n, m_n, half)


def mixed_reference_sample(tau, alpha, size, stream):
    """Draws of min(1, tau) S_alpha + min(1, 1/tau) N(0, 1).

    This is the limit of V_n when s_n / (sigma_n / 2) -> tau: the radial sum
    is divided by max(sigma_n / 2, s_n), leaving weight min(1, tau), and the
    Gaussian part keeps weight min(1, 1/tau).
    """
    if not tau > 0:
        raise DomainError("tau must be > 0")
    s = stable_reference_sample(alpha, size, stream)
    g = stream.generator.standard_normal(size)
    return min(1.0, tau) * s + min(1.0, 1.0 / tau) * g


def quadratic_form_moment_check(A, B, n, mc_draws, stream):
    """Monte Carlo check of E[z^T A z z^T B z] for z uniform on the sphere.

    Returns (empirical, theoretical, z_score).
    """
    A = check_symmetric(A, name="A")
    B = check_symmetric(B, name="B")
    if A.shape != (n, n) or B.shape != (n, n):
        raise DomainError(f"A and B must be {n} x {n}")
    b22 = beta_moment(n, [1, 1]) if n >= 2 else 0.0
    b4 = beta_moment(n, [2])
    theo = b22 * (np.trace(A) * np.trace(B) + 2.0 * np.sum(A * B.T)) + (
        b4 - 3.0 * b22
    ) * float(np.sum(np.diag(A) * np.diag(B)))
    G = stream.generator.standard_normal((mc_draws, n))
    Z = G / np.linalg.norm(G, axis=1)[:, None]
    vals = np.einsum("di,ij,dj->d", Z, A, Z) * np.einsum("di,ij,dj->d", Z, B, Z)
    emp = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(mc_draws))
    diff = emp - float(theo)
    if se == 0 or se < 1e-14 * max(1.0, abs(emp)):
        zscore = 0.0 if abs(diff) <= 1e-12 * max(1.0, abs(emp)) else math.inf
    else:
        zscore = diff / se
    return emp, float(theo), zscore
