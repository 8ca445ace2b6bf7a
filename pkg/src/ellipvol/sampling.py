"""Seeded random generation for the elliptical model x_i = R_i A u_i.

Streams are Philox4x64 generators (256-bit counter, 128-bit key).  The key is
an injective mix of (master seed, stream index), so any replicate can be
regenerated on its own and streams never depend on worker scheduling.
Gaussians come from numpy's ziggurat sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int
from .errors import DomainError
from .linalg import Spectrum

MASK64 = (1 << 64) - 1

# murmur3 fmix64 multipliers; the finalizer is a bijection on 64-bit words
FMIX_C1 = 0xFF51AFD7ED558CCD
FMIX_C2 = 0xC4CEB9FE1A85EC53
# golden-ratio increment from splitmix64, used to separate child streams
GOLDEN = 0x9E3779B97F4A7C15


def fmix64(x):
    x &= MASK64
    x ^= x >> 33
    x = (x * FMIX_C1) & MASK64
    x ^= x >> 33
    x = (x * FMIX_C2) & MASK64
    x ^= x >> 33
    return x


def mix128(master, index):
    """Injective map (master, index) -> 128-bit Philox key.

    k0 = fmix64(master); k1 = fmix64(index XOR k0).  Both steps invert, so
    distinct pairs always give distinct keys.
    """
    k0 = fmix64(master)
    k1 = fmix64((index & MASK64) ^ k0)
    return k0 | (k1 << 64)


class RandomStream:
    """A reproducible random stream identified by (master seed, index)."""

    def __init__(self, master, index=0):
        self.master = int(master) & MASK64
        self.index = int(index) & MASK64
        self.key = mix128(self.master, self.index)
        self.generator = np.random.Generator(np.random.Philox(key=self.key))

    @property
    def origin(self):
        return (self.master, self.index)

    def child(self, j):
        """Independent sub-stream j, e.g. one per Monte Carlo draw."""
        sub_master = fmix64(self.key ^ (self.key >> 64) ^ GOLDEN)
        return RandomStream(sub_master, j)

    def __repr__(self):
        return f"RandomStream(master={self.master}, index={self.index})"


def derive_replicate_seed(master, index):
    """Stream for replicate ``index`` of an experiment seeded by ``master``."""
    return RandomStream(master, index)


@dataclass(frozen=True)
class RadialLaw:
    """Law of the radius R through log R.

    kinds: ``Degenerate1`` (R = 1), ``LogNormal`` (loc = mean, scale = sd),
    ``LogCauchy`` (loc, scale), ``LogPareto`` (alpha, scale).

    LogPareto draws log R = scale * sign * D_alpha * W with W Pareto(alpha) on
    [1, inf) and D_alpha = (2/pi * Gamma(alpha) sin(pi alpha / 2))^(1/alpha).
    The constant matches the tails of the standard symmetric alpha-stable law,
    so sum(log R) / (scale * p^(1/alpha)) tends to S_alpha itself.
    """

    kind: str = "Degenerate1"
    loc: float = 0.0
    scale: float = 1.0
    alpha: float = 2.0

    KINDS = ("Degenerate1", "LogNormal", "LogCauchy", "LogPareto")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown radial law {self.kind!r}")
        if self.kind != "Degenerate1" and not self.scale > 0:
            raise DomainError("radial scale must be > 0")
        if self.kind == "LogPareto" and not 0 < self.alpha < 2:
            raise DomainError("LogPareto needs alpha in (0, 2)")
        if self.kind == "LogNormal":
            object.__setattr__(self, "alpha", 2.0)
        elif self.kind == "LogCauchy":
            object.__setattr__(self, "alpha", 1.0)

    @classmethod
    def degenerate(cls):
        return cls("Degenerate1")

    @classmethod
    def lognormal(cls, mean=0.0, sd=1.0):
        return cls("LogNormal", loc=mean, scale=sd)

    @classmethod
    def logcauchy(cls, location=0.0, scale=1.0):
        return cls("LogCauchy", loc=location, scale=scale)

    @classmethod
    def logpareto(cls, alpha, scale=1.0):
        return cls("LogPareto", scale=scale, alpha=alpha)

    def to_dict(self):
        if self.kind == "Degenerate1":
            return {"kind": self.kind}
        if self.kind == "LogNormal":
            return {"kind": self.kind, "mean": self.loc, "sd": self.scale}
        if self.kind == "LogCauchy":
            return {"kind": self.kind, "location": self.loc, "scale": self.scale}
        return {"kind": self.kind, "alpha": self.alpha, "scale": self.scale}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind", None)
        allowed = {
            "Degenerate1": set(),
            "LogNormal": {"mean", "sd"},
            "LogCauchy": {"location", "scale"},
            "LogPareto": {"alpha", "scale"},
        }
        if kind not in allowed:
            raise DomainError(f"unknown radial law {kind!r}")
        extra = set(d) - allowed[kind]
        if extra:
            raise DomainError(f"unknown keys for {kind}: {sorted(extra)}")
        if kind == "LogNormal":
            return cls.lognormal(d.get("mean", 0.0), d.get("sd", 1.0))
        if kind == "LogCauchy":
            return cls.logcauchy(d.get("location", 0.0), d.get("scale", 1.0))
        if kind == "LogPareto":
            return cls.logpareto(d["alpha"], d.get("scale", 1.0))
        return cls.degenerate()


def pareto_tail_constant(alpha):
    return (2.0 / math.pi * math.gamma(alpha) * math.sin(math.pi * alpha / 2)) ** (
        1.0 / alpha
    )


@dataclass(frozen=True)
class EllipticalModel:
    n: int
    p: int
    spectrum: Spectrum
    radial: RadialLaw = RadialLaw()

    def __post_init__(self):
        if not 2 <= self.p <= self.n:
            raise DomainError(f"need 2 <= p <= n, got p={self.p}, n={self.n}")
        if self.spectrum.n != self.n:
            raise DomainError("spectrum length must equal n")
        if not self.spectrum.normalized:
            raise DomainError("model spectrum must be normalized")


def gaussian_matrix(p, n, stream):
    """p x n matrix of i.i.d. standard normals."""
    p = check_positive_int(p, "p")
    n = check_positive_int(n, "n")
    return stream.generator.standard_normal((p, n))


def unit_sphere_vector(n, stream):
    """Uniform direction on the unit sphere in R^n."""
    n = check_positive_int(n, "n")
    while True:
        g = stream.generator.standard_normal(n)
        norm = np.linalg.norm(g)
        if norm > 0:
            return g / norm


def _sphere_rows(p, n, stream):
    G = gaussian_matrix(p, n, stream)
    norms = np.linalg.norm(G, axis=1)
    while np.any(norms == 0):  # pragma: no cover - probability zero
        bad = norms == 0
        G[bad] = stream.generator.standard_normal((int(bad.sum()), n))
        norms = np.linalg.norm(G, axis=1)
    return G / norms[:, None]


def sample_radii(law, p, stream):
    """p i.i.d. radii with log R distributed according to ``law``."""
    if law.kind == "Degenerate1":
        return np.ones(check_positive_int(p, "p"))
    with np.errstate(over="ignore"):
        return np.exp(sample_log_radii(law, p, stream))


def sample_log_radii(law, p, stream):
    """i.i.d. draws of log R; never overflows, unlike exp of a Cauchy tail."""
    p = check_positive_int(p, "p")
    rng = stream.generator
    if law.kind == "Degenerate1":
        return np.zeros(p)
    if law.kind == "LogNormal":
        return law.loc + law.scale * rng.standard_normal(p)
    if law.kind == "LogCauchy":
        return law.loc + law.scale * rng.standard_cauchy(p)
    w = rng.pareto(law.alpha, p) + 1.0
    sign = np.where(rng.random(p) < 0.5, -1.0, 1.0)
    return law.scale * pareto_tail_constant(law.alpha) * sign * w


def elliptical_sample(model, stream):
    """Draw (X, radii, Y) with Y = U A and X = diag(R) Y.

    Radii are returned as log R: heavy-tailed laws overflow exp() long before
    they stop being interesting, and the log-volume only needs sum(log R).
    ``X`` is formed from exp(log R) and may contain inf in that case.
    """
    U = _sphere_rows(model.p, model.n, stream)
    Y = U * np.sqrt(model.spectrum.values)
    log_radii = sample_log_radii(model.radial, model.p, stream)
    with np.errstate(over="ignore"):
        X = np.exp(log_radii)[:, None] * Y
    return X, log_radii, Y


def stable_reference_sample(alpha, size, stream):
    """Standard symmetric alpha-stable draws (Chambers-Mallows-Stuck).

    Convention: characteristic function exp(-|t|^alpha) for alpha < 2, so
    alpha = 1 is the standard Cauchy.  At alpha = 2 that law is N(0, 2); the
    draws are divided by sqrt(2) to return N(0, 1).
    """
    if not 0 < alpha <= 2:
        raise DomainError("alpha must lie in (0, 2]")
    size = check_positive_int(size, "size")
    rng = stream.generator
    v = rng.uniform(-math.pi / 2, math.pi / 2, size)
    w = rng.standard_exponential(size)
    if alpha == 1.0:
        return np.tan(v)
    x = (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)) * (
        np.cos((1.0 - alpha) * v) / w
    ) ** ((1.0 - alpha) / alpha)
    if alpha == 2.0:
        x = x / math.sqrt(2.0)
    return x
