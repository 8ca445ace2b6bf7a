"""Experiment configuration: JSON in, validated dataclass out."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, EllipvolError
from ..geometry import BODY_KINDS, ConvexBodyKind
from ..linalg import Spectrum
from ..sampling import RadialLaw
from ..theory import DEFAULT_MC_DRAWS, VARIANTS

CONFIG_KEYS = (
    "n",
    "p",
    "gamma",
    "spectrum_spec",
    "radial_spec",
    "replicates",
    "mc_draws",
    "variance_variant",
    "body",
    "master_seed",
    "threads",
)


def near_identity_spectrum(n, c):
    """lambda_k = 1 +/- delta with sum(delta) = 0 and sum(delta^2) = c / n.

    Signs alternate over the first 2*floor(n/2) entries; an odd n leaves the
    last eigenvalue at exactly 1.  Requires delta < 1 so all values stay > 0.
    """
    m = 2 * (n // 2)
    if c < 0:
        raise ConfigError("near_identity deficit c must be >= 0")
    if c == 0 or m == 0:
        return Spectrum.identity(n)
    delta = math.sqrt(c / (n * m))
    if delta >= 1:
        raise ConfigError(f"near_identity c={c} too large for n={n}")
    d = np.zeros(n)
    d[:m:2] = delta
    d[1:m:2] = -delta
    return Spectrum.from_values(1.0 + d, normalize=True)


def build_spectrum(spec, n):
    kind = spec.get("kind")
    extra = set(spec) - {"kind", "values", "c"}
    if extra:
        raise ConfigError(f"unknown spectrum_spec keys: {sorted(extra)}")
    if kind == "identity":
        return Spectrum.identity(n)
    if kind == "explicit":
        values = spec.get("values")
        if values is None or len(values) != n:
            raise ConfigError("explicit spectrum needs exactly n values")
        try:
            return Spectrum.from_values(values, normalize=True)
        except EllipvolError as exc:
            raise ConfigError(f"invalid explicit spectrum: {exc}") from exc
    if kind == "near_identity":
        return near_identity_spectrum(n, float(spec.get("c", 1.0)))
    raise ConfigError(f"unknown spectrum kind {kind!r}")


@dataclass
class ExperimentConfig:
    n: int
    p: int | None = None
    gamma: float | None = None
    spectrum_spec: dict = field(default_factory=lambda: {"kind": "identity"})
    radial_spec: dict = field(default_factory=lambda: {"kind": "Degenerate1"})
    replicates: int = 1000
    mc_draws: int = DEFAULT_MC_DRAWS
    variance_variant: str = "theorem"
    body: str | None = None
    master_seed: int = 0
    threads: int | str = 1

    def __post_init__(self):
        def _int(name, lo):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < lo:
                raise ConfigError(f"{name} must be an integer >= {lo}, got {v!r}")

        _int("n", 2)
        if self.p is None:
            if self.gamma is None:
                raise ConfigError("give either p or gamma")
            if not 0 < self.gamma < 1:
                raise ConfigError("gamma must lie in (0, 1)")
            self.p = int(math.floor(self.gamma * self.n + 0.5))
        elif self.gamma is not None and int(math.floor(self.gamma * self.n + 0.5)) != self.p:
            raise ConfigError("p and gamma disagree")
        _int("p", 2)
        if self.p > self.n:
            raise ConfigError(f"need p <= n, got p={self.p}, n={self.n}")
        _int("replicates", 1)
        _int("mc_draws", 2)
        _int("master_seed", 0)
        if self.variance_variant not in VARIANTS:
            raise ConfigError(f"variance_variant must be one of {VARIANTS}")
        if self.body is not None and self.body not in BODY_KINDS:
            raise ConfigError(f"body must be null or one of {BODY_KINDS}")
        if self.threads != "auto":
            _int("threads", 1)
        if not isinstance(self.spectrum_spec, dict) or not isinstance(self.radial_spec, dict):
            raise ConfigError("spectrum_spec and radial_spec must be objects")
        # fail early on bad sub-specs
        self.spectrum()
        self.radial()

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - set(CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "n" not in d:
            raise ConfigError("config needs n")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self):
        return {k: getattr(self, k) for k in CONFIG_KEYS}

    def spectrum(self):
        return build_spectrum(self.spectrum_spec, self.n)

    def radial(self):
        try:
            return RadialLaw.from_dict(self.radial_spec)
        except EllipvolError as exc:
            raise ConfigError(f"invalid radial_spec: {exc}") from exc
        except KeyError as exc:
            raise ConfigError(f"radial_spec missing {exc}") from exc

    def body_kind(self):
        return None if self.body is None else ConvexBodyKind(self.body, self.p)

    def worker_count(self):
        if self.threads == "auto":
            return os.cpu_count() or 1
        return int(self.threads)
