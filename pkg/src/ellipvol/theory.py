"""Deterministic quantities behind the log-determinant CLT.

Sphere moments, the t_{i,k} matrix (exact for the identity spectrum, Monte
Carlo otherwise), the centering/scaling constants (mu_n, sigma_n^2), the
spectrum diagnostics, and the second moment of the martingale increments
Z~_{i+1} = n u^T Q_i u - 1.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ._validation import check_positive_int
from .errors import DomainError, NonPositiveVariance, OverflowGuard, SingularInner
from .linalg import Spectrum, nested_projection_diagonals
from .sampling import RandomStream

logger = logging.getLogger(__name__)

DEFAULT_MC_DRAWS = 200
MAX_MOMENT_ORDER = 30
# draws per accumulation chunk; fixed so results do not depend on worker count
CHUNK = 16


def beta_moment(n, exponents):
    """E[U_1^{2m_1} ... U_r^{2m_r}] for u uniform on the sphere in R^n.

    prod (2m_j - 1)!! / prod_{j=0}^{M-1} (n + 2j) with M = sum m_j, evaluated
    in log space.
    """
    n = check_positive_int(n, "n")
    ms = [check_positive_int(m, "exponent") for m in exponents]
    if not ms:
        return 1.0
    if len(ms) > n:
        raise DomainError(f"{len(ms)} coordinates requested in dimension {n}")
    total = sum(ms)
    if total > MAX_MOMENT_ORDER:
        raise OverflowGuard(f"sum of exponents {total} > {MAX_MOMENT_ORDER}")
    # (2m-1)!! = (2m)! / (2^m m!)
    log_num = sum(gammaln(2 * m + 1) - m * math.log(2) - gammaln(m + 1) for m in ms)
    log_den = sum(math.log(n + 2 * j) for j in range(total))
    return math.exp(log_num - log_den)


@dataclass(frozen=True)
class TMatrix:
    """t_{i,k} for i = 1..p-1 (rows) and k = 1..n (columns)."""

    n: int
    p: int
    values: np.ndarray = field(repr=False)
    std_errors: np.ndarray = field(repr=False)
    mc_draws: int = 0
    row_renormalized: bool = False
    discarded: int = 0

    def __post_init__(self):
        shape = (self.p - 1, self.n)
        if self.values.shape != shape or self.std_errors.shape != shape:
            raise DomainError(f"t-matrix must have shape {shape}")
        if np.any(self.values < 0) or np.any(self.values > 1):
            raise DomainError("t-matrix entries must lie in [0, 1]")

    @property
    def row_sums(self):
        return self.values.sum(axis=1)

    @property
    def row_targets(self):
        return self.n - np.arange(1, self.p, dtype=np.float64)

    @property
    def row_std_errors(self):
        """Entry standard errors combined in quadrature along each row."""
        return np.sqrt(np.sum(self.std_errors**2, axis=1))

    def summary(self):
        resid = self.row_sums - self.row_targets
        return {
            "max_row_sum_residual": float(np.max(np.abs(resid))),
            "max_std_error": float(np.max(self.std_errors)),
            "mc_draws": self.mc_draws,
            "row_renormalized": self.row_renormalized,
            "discarded_draws": self.discarded,
        }


def t_matrix_identity(n, p):
    """Exact t_{i,k}(I_n) = (n - i) / n."""
    if not 2 <= p <= n:
        raise DomainError(f"need 2 <= p <= n, got p={p}, n={n}")
    i = np.arange(1, p, dtype=np.float64)[:, None]
    values = np.broadcast_to((n - i) / n, (p - 1, n)).copy()
    return TMatrix(n, p, values, np.zeros_like(values), 0, False)


def _draw_chunk(spectrum, p, stream, draws):
    """Mean and sum of squared deviations of the nested diagonals over a chunk."""
    n = spectrum.n
    rows = []
    discarded = 0
    for d in draws:
        N = stream.child(d).generator.standard_normal((p, n))
        try:
            rows.append(nested_projection_diagonals(N, spectrum))
        except SingularInner:
            logger.warning("t-matrix draw %d discarded: singular inner system", d)
            discarded += 1
    if not rows:
        return 0, None, None, discarded
    block = np.stack(rows)
    mean = block.mean(axis=0)
    m2 = np.sum((block - mean) ** 2, axis=0)
    return len(rows), mean, m2, discarded


def estimate_t_matrix(
    spectrum, p, mc_draws=DEFAULT_MC_DRAWS, stream=None, renormalize=True, workers=1
):
    """Monte Carlo estimate of t_{i,k} = E[p_{i,kk}].

    Each draw samples one p x n Gaussian matrix; its first i rows give P_i for
    every i at once.  Chunks of draws are merged in a fixed order with Chan's
    parallel variance update, so the estimate depends on (stream, mc_draws)
    only.  With ``renormalize`` each row is rescaled to sum exactly to n - i.
    """
    if not isinstance(spectrum, Spectrum):
        raise DomainError("spectrum must be a Spectrum")
    n = spectrum.n
    if not 2 <= p <= n:
        raise DomainError(f"need 2 <= p <= n, got p={p}, n={n}")
    mc_draws = check_positive_int(mc_draws, "mc_draws", minimum=2)
    stream = stream if stream is not None else RandomStream(0, 0)

    chunks = [range(s, min(s + CHUNK, mc_draws)) for s in range(0, mc_draws, CHUNK)]
    workers = max(1, int(workers or os.cpu_count() or 1))
    if workers == 1:
        parts = [_draw_chunk(spectrum, p, stream, c) for c in chunks]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda c: _draw_chunk(spectrum, p, stream, c), chunks))

    count, mean, m2, discarded = 0, None, None, 0
    for cnt, cmean, cm2, disc in parts:
        discarded += disc
        if cnt == 0:
            continue
        if count == 0:
            count, mean, m2 = cnt, cmean, cm2
            continue
        tot = count + cnt
        delta = cmean - mean
        mean = mean + delta * (cnt / tot)
        m2 = m2 + cm2 + delta**2 * (count * cnt / tot)
        count = tot
    if discarded > 0.01 * mc_draws:
        raise SingularInner(f"{discarded} of {mc_draws} draws had singular inner systems")
    if count < 2:
        raise SingularInner("fewer than two usable draws")

    se = np.sqrt(m2 / (count - 1) / count)
    values = np.clip(mean, 0.0, 1.0)
    if renormalize:
        targets = n - np.arange(1, p, dtype=np.float64)
        values = values * (targets / values.sum(axis=1))[:, None]
        values = np.clip(values, 0.0, 1.0)
    return TMatrix(n, p, values, se, count, bool(renormalize), discarded)


def t_entry_quadratic_form(spectrum, i, k, mc_draws, stream):
    """t_{i,k} from its quadratic-form definition, one k at a time.

    E[1 / (1 + lambda_k w_k^T (sum_{l != k} lambda_l w_l w_l^T)^{-1} w_k)]
    with w_l i.i.d. N(0, I_i).  Slow; kept as an independent cross-check of
    the projection-diagonal route.  Returns (mean, standard error).
    """
    lam = spectrum.values
    n = lam.size
    vals = np.empty(mc_draws)
    for d in range(mc_draws):
        W = stream.child(d).generator.standard_normal((i, n))
        others = np.delete(np.arange(n), k)
        M = (W[:, others] * lam[others]) @ W[:, others].T
        wk = W[:, k]
        vals[d] = 1.0 / (1.0 + lam[k] * wk @ np.linalg.solve(M, wk))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(mc_draws))


@dataclass(frozen=True)
class NormingConstants:
    mu: float
    sigma2: float
    per_i_log_terms: np.ndarray = field(repr=False)
    per_i_var_terms: np.ndarray = field(repr=False)
    variant: str = "theorem"
    gamma: float = 0.0
    log_trace: float = 0.0
    n: int = 0
    p: int = 0

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)

    def reassemble(self):
        """Rebuild (mu, sigma^2) from the stored per-i terms."""
        sigma2 = -2.0 * self.p / self.n + math.fsum(self.per_i_var_terms)
        mu = (
            self.log_trace
            - self.p * math.log(self.n)
            - sigma2 / 2.0
            + math.fsum(self.per_i_log_terms)
        )
        return mu, sigma2

    def to_dict(self):
        return {
            "mu": self.mu,
            "sigma2": self.sigma2,
            "sigma": self.sigma,
            "variant": self.variant,
            "gamma": self.gamma,
            "per_i_log_terms": [float(x) for x in self.per_i_log_terms],
            "per_i_var_terms": [float(x) for x in self.per_i_var_terms],
        }


VARIANTS = ("theorem", "with_i0")


def norming_constants(spectrum, p, t, variant="theorem"):
    """Centering mu_n and variance sigma_n^2 for log det(YY^T).

    sigma^2 = -2p/n + 2 sum_{i=1}^{p-1} (sum_k lam_k^2 t_ik) / (sum_k lam_k t_ik)^2
    mu = log tr(AA^T) - p log n - sigma^2/2 + sum_{i=1}^{p-1} log(sum_k lam_k t_ik)

    ``with_i0`` also adds the i = 0 term 2 sum(lam^2) / sum(lam)^2, the leading
    finite-n correction.  log(p!) is not part of mu (see geometry).
    """
    if variant not in VARIANTS:
        raise DomainError(f"variant must be one of {VARIANTS}")
    lam = spectrum.values
    n = lam.size
    if (t.n, t.p) != (n, p):
        raise DomainError(f"t-matrix is for (n={t.n}, p={t.p}), need ({n}, {p})")
    first = t.values @ lam
    second = t.values @ (lam * lam)
    var_terms = 2.0 * second / first**2
    if variant == "with_i0":
        i0 = 2.0 * float(lam @ lam) / float(lam.sum()) ** 2
        var_terms = np.concatenate([[i0], var_terms])
    log_terms = np.log(first)
    log_trace = math.log(math.fsum(lam))
    sigma2 = -2.0 * p / n + math.fsum(var_terms)
    if not sigma2 > 0:
        raise NonPositiveVariance(
            f"sigma_n^2 = {sigma2:.6g} <= 0 for n={n}, p={p} ({variant} variant)"
        )
    mu = log_trace - p * math.log(n) - sigma2 / 2.0 + math.fsum(log_terms)
    log_terms.setflags(write=False)
    var_terms.setflags(write=False)
    return NormingConstants(
        mu, sigma2, log_terms, var_terms, variant, p / n, log_trace, n, p
    )


def variance_limit(gamma):
    """-2 gamma - 2 log(1 - gamma), the limit of sigma_n^2 for A = I."""
    if not 0 < gamma < 1:
        raise DomainError("gamma must lie in (0, 1)")
    return -2.0 * gamma - 2.0 * math.log1p(-gamma)


def b2_deficit(spectrum):
    """sum_k (lam_k - mean lam)^2; zero for a flat spectrum, should vanish as n grows."""
    lam = spectrum.values
    return float(np.sum((lam - lam.mean()) ** 2))


def condition_bound(spectrum):
    """Smallest C with C^-1 <= lam_min <= lam_max <= C."""
    lam = spectrum.values
    return float(max(lam[0], 1.0 / lam[-1]))


@dataclass(frozen=True)
class ZtildeMoment:
    value: float
    components: tuple


def ztilde_second_moment(n, mean_tr_Q2, var_tr_Q):
    """E[Z~^2] from E[tr Q_i^2] and Var(tr Q_i).

    (n^2 b4 - 1)(E tr Q^2 - 1/(n-1)) + E tr Q^2 (n^2 b4 - 1)/(n-1)
    + n^2 b22 Var(tr Q), with b4 = E U_1^4 and b22 = E U_1^2 U_2^2.
    """
    n = check_positive_int(n, "n", minimum=2)
    if not (math.isfinite(mean_tr_Q2) and math.isfinite(var_tr_Q)) or var_tr_Q < 0:
        raise DomainError("need finite inputs and var_tr_Q >= 0")
    k4 = n * n * beta_moment(n, [2]) - 1.0
    b22 = beta_moment(n, [1, 1])
    comps = (
        k4 * (mean_tr_Q2 - 1.0 / (n - 1)),
        mean_tr_Q2 * k4 / (n - 1),
        n * n * b22 * var_tr_Q,
    )
    return ZtildeMoment(math.fsum(comps), comps)


def simulate_ztilde(spectrum, i, draws, stream, T_i=None):
    """Draws of Z~_{i+1} = n u^T A P_i A u / T_i - 1 with tr(Q_i), tr(Q_i^2).

    P_i comes from i fresh Gaussian rows and u is an independent uniform
    direction.  ``T_i`` defaults to n - i, exact for the identity spectrum;
    for other spectra pass sum_k lam_k t_{i,k}.
    Returns a dict of arrays ``z``, ``tr_q``, ``tr_q2``.
    """
    lam = spectrum.values
    n = lam.size
    if not 0 <= i < n:
        raise DomainError("need 0 <= i < n")
    T = float(n - i) if T_i is None else float(T_i)
    a = np.sqrt(lam)
    z = np.empty(draws)
    tr_q = np.empty(draws)
    tr_q2 = np.empty(draws)
    for d in range(draws):
        rng = stream.child(d).generator
        G = rng.standard_normal((i + 1, n))
        u = G[i] / np.linalg.norm(G[i])
        au = a * u
        if i == 0:
            r2 = float(au @ au)
            tr_apa, frob2 = float(lam.sum()), float(lam @ lam)
        else:
            B = G[:i] * a
            Q, _ = np.linalg.qr(B.T)
            r = au - Q @ (Q.T @ au)
            r2 = float(r @ r)
            # A P A = diag(lam) - C C^T with C = A Q
            C = a[:, None] * Q
            tr_apa = float(lam.sum() - np.sum(C * C))
            frob2 = float(
                lam @ lam - 2.0 * np.sum(lam[:, None] * C * C) + np.sum((C.T @ C) ** 2)
            )
        z[d] = n * r2 / T - 1.0
        tr_q[d] = tr_apa / T
        tr_q2[d] = frob2 / T**2
    return {"z": z, "tr_q": tr_q, "tr_q2": tr_q2}
