"""scikit-learn style transformer: point sets in, standardized log-volumes out."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DomainError
from .geometry import pinned_simplex_log_volume
from .linalg import Spectrum
from .sampling import RadialLaw, RandomStream
from .stats import classify_regime
from .theory import DEFAULT_MC_DRAWS, estimate_t_matrix, norming_constants, t_matrix_identity


class LogVolumeStandardizer(TransformerMixin, BaseEstimator):
    """Map point sets to V_n = (log Vol - log Vol(simplex) - mu_n/2 - m_n) / scale.

    Each sample is a (n_points, n_dims) array whose rows x_i = R_i A u_i span a
    pinned simplex conv{0, x_1, ..., x_p}; ``transform`` takes a stack of them,
    shape (m, n_points, n_dims), and returns V_n with shape (m, 1).

    ``spectrum`` holds the eigenvalues of AA^T (any positive scale; None means
    the identity).  ``fit`` only needs the model, so its X is checked for shape
    and otherwise ignored.

    Attributes set by fit: ``spectrum_``, ``t_matrix_``, ``norming_``,
    ``regime_``, ``center_``, ``scale_``.
    """

    def __init__(self, n_dims=2, n_points=2, spectrum=None, radial=None,
                 variant="theorem", mc_draws=DEFAULT_MC_DRAWS, random_state=0):
        self.n_dims = n_dims
        self.n_points = n_points
        self.spectrum = spectrum
        self.radial = radial
        self.variant = variant
        self.mc_draws = mc_draws
        self.random_state = random_state

    def _radial_law(self):
        if self.radial is None:
            return RadialLaw.degenerate()
        if isinstance(self.radial, RadialLaw):
            return self.radial
        return RadialLaw.from_dict(self.radial)

    def fit(self, X=None, y=None):
        n, p = int(self.n_dims), int(self.n_points)
        if not 2 <= p <= n:
            raise DomainError(f"need 2 <= n_points <= n_dims, got {p}, {n}")
        if self.spectrum is None:
            raw_sum = float(n)
            spectrum = Spectrum.identity(n)
        else:
            raw = np.sort(np.asarray(self.spectrum, dtype=np.float64))[::-1]
            if raw.shape != (n,):
                raise DomainError(f"spectrum must have n_dims={n} values")
            raw_sum = math.fsum(raw)
            spectrum = Spectrum.from_values(raw, normalize=True)
        if spectrum.is_identity:
            t = t_matrix_identity(n, p)
        else:
            t = estimate_t_matrix(spectrum, p, self.mc_draws, RandomStream(self.random_state, 0))
        norming = norming_constants(spectrum, p, t, self.variant)
        regime = classify_regime(self._radial_law(), p, norming.sigma)
        if X is not None:
            self._check_points(X, reset=True)

        self.spectrum_ = spectrum
        self.t_matrix_ = t
        self.norming_ = norming
        self.regime_ = regime
        # points drawn with the raw scatter carry an extra -p/2 log(raw_sum/n)
        self._log_scale = 0.5 * p * math.log(n / raw_sum)
        self.center_ = norming.mu / 2.0 + regime.m_n
        self.scale_ = regime.scale
        return self

    def _check_points(self, X, reset=False):
        X = check_array(X, allow_nd=True, ensure_2d=False, dtype=np.float64)
        if X.ndim == 2:
            X = X[None]
        if X.ndim != 3 or X.shape[1:] != (self.n_points, self.n_dims):
            raise DomainError(
                f"expected shape (m, {self.n_points}, {self.n_dims}), got {X.shape}"
            )
        if reset:
            self.n_features_in_ = self.n_points * self.n_dims
        return X

    def log_volumes(self, X):
        """log Vol_p of the pinned simplex of each point set."""
        check_is_fitted(self, "norming_")
        X = self._check_points(X)
        return np.array([pinned_simplex_log_volume(x) for x in X])

    def transform(self, X):
        check_is_fitted(self, "norming_")
        lv = self.log_volumes(X)
        body = -math.lgamma(self.n_points + 1)
        v = (lv - body + self._log_scale - self.center_) / self.scale_
        return v[:, None]
