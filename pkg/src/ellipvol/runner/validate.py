"""Cross-module oracle suite behind ``ellipvol validate``.

Every check runs on fixed seeds and records the measured deviation next to
its tolerance.  Module functions are looked up through their modules at call
time so a patched implementation is what gets checked.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .. import geometry, linalg, sampling, stats, theory
from ..linalg import Spectrum
from .config import near_identity_spectrum

SEEDS = range(1, 21)
GRID = (8, 16, 32, 64)
SPHERE_GRID = (2, 3, 10, 50)
SPHERE_PATTERNS = ([1], [2], [1, 1], [2, 1], [3])
SPHERE_DRAWS = 100_000
QUF_DRAWS = 100_000
ROTATION_REPS = 2000


@dataclass
class Check:
    name: str
    measured: float
    tolerance: float
    passed: bool

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: measured {self.measured:.3e} (tolerance {self.tolerance:.3e})"


class Suite:
    def __init__(self):
        self.checks = []

    def record(self, name, measured, tolerance, passed=None):
        measured = float(measured)
        if passed is None:
            passed = bool(measured <= tolerance)
        self.checks.append(Check(name, measured, float(tolerance), bool(passed)))

    @property
    def ok(self):
        return all(c.passed for c in self.checks)


def _model_spectrum(n, rng):
    return Spectrum.from_values(rng.uniform(0.5, 2.0, n), normalize=True)


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


def check_exact_identities(suite, seeds=SEEDS, grid=GRID):
    """Per-realization identities of the determinant and projection machinery."""
    for n in grid:
        p = n // 2
        worst = dict.fromkeys(
            ("perp", "reassemble", "trace", "idem", "sym", "bounds", "diag",
             "nested", "trq2_scalar", "trq2_bound", "ti_bounds", "linear_image", "factor", "rotation"),
            0.0,
        )
        upsilon_exact = True
        identity = Spectrum.identity(n)
        for seed in seeds:
            rng = np.random.default_rng([seed, n])
            spec = _model_spectrum(n, rng)
            C = theory.condition_bound(spec)
            stream = sampling.RandomStream(seed, n)
            model = sampling.EllipticalModel(n, p, spec, sampling.RadialLaw.lognormal(0.0, 0.5))
            X, log_radii, Y = sampling.elliptical_sample(model, stream)

            chol = linalg.log_det_gram(Y)
            dec = linalg.perpendicular_log_det(Y)
            worst["perp"] = max(worst["perp"], _rel(dec.log_det, chol))
            worst["reassemble"] = max(worst["reassemble"], _rel(dec.reassemble(), dec.log_det))

            N = sampling.gaussian_matrix(p, n, stream)
            lam = spec.values
            nested = linalg.nested_projection_diagonals(N, spec)
            for i in range(1, p):
                P = linalg.projection_matrix(N[:i], spec)
                d = linalg.projection_diagonal(N[:i], spec)
                worst["trace"] = max(worst["trace"], abs(np.trace(P) - (n - i)))
                worst["idem"] = max(worst["idem"], np.max(np.abs(P @ P - P)))
                worst["sym"] = max(worst["sym"], np.max(np.abs(P - P.T)))
                off = P[~np.eye(n, dtype=bool)]
                excess = max(
                    -np.min(np.diag(P)), np.max(np.diag(P)) - 1.0,
                    np.max(np.abs(off)) - 0.5, 0.0,
                )
                worst["bounds"] = max(worst["bounds"], excess)
                worst["diag"] = max(worst["diag"], np.max(np.abs(np.diag(P) - d)))
                worst["nested"] = max(worst["nested"], np.max(np.abs(nested[i - 1] - d)))
                T = float(lam @ d)
                Q = (np.sqrt(lam)[:, None] * P * np.sqrt(lam)[None, :]) / T
                lhs = float(np.sum(Q * Q))
                rhs = float((lam * lam) @ d) / T**2
                # equality needs a scalar spectrum; in general ||PBP||_F <= ||BP||_F
                worst["trq2_bound"] = max(worst["trq2_bound"], (lhs - rhs) / rhs)
                P0 = linalg.projection_matrix(N[:i], identity)
                d0 = np.diag(P0)
                T0 = float(np.sum(d0))
                lhs0 = float(np.sum(P0 * P0)) / T0**2
                rhs0 = float(np.sum(d0)) / T0**2
                worst["trq2_scalar"] = max(worst["trq2_scalar"], abs(lhs0 - rhs0) / rhs0)
                # positive when T leaves [C^-1 (n-i), C (n-i)]
                viol = max((n - i) / C - T, T - C * (n - i), 0.0)
                worst["ti_bounds"] = max(worst["ti_bounds"], viol)

            simplex = geometry.ConvexBodyKind("StandardSimplex", p)
            if geometry.upsilon_log_volume(simplex, Y) != geometry.pinned_simplex_log_volume(Y):
                upsilon_exact = False
            M = rng.standard_normal((p, p)) + 2.0 * np.eye(p)
            via_det = geometry.linear_image_log_volume(M, Y, check=False)
            direct = geometry.pinned_simplex_log_volume(M @ Y)
            worst["linear_image"] = max(worst["linear_image"], _rel(via_det, direct))
            split = -geometry.log_factorial(p) + math.fsum(log_radii) + 0.5 * chol
            worst["factor"] = max(
                worst["factor"], _rel(geometry.pinned_simplex_log_volume(X), split)
            )
            O, _ = np.linalg.qr(rng.standard_normal((n, n)))
            worst["rotation"] = max(
                worst["rotation"],
                _rel(geometry.pinned_simplex_log_volume(Y @ O), geometry.pinned_simplex_log_volume(Y)),
            )

        tag = f"n={n} p={p}"
        suite.record(f"perpendicular vs Cholesky log-det ({tag})", worst["perp"], 1e-8)
        suite.record(f"perpendicular reassembly ({tag})", worst["reassemble"], 1e-10)
        suite.record(f"tr P_i = n - i ({tag})", worst["trace"], 1e-8)
        suite.record(f"P_i idempotent ({tag})", worst["idem"], 1e-8)
        suite.record(f"P_i symmetric ({tag})", worst["sym"], 1e-10)
        suite.record(f"P_i entry bounds ({tag})", worst["bounds"], 1e-10)
        suite.record(f"Sherman-Morrison diagonal ({tag})", worst["diag"], 1e-8)
        suite.record(f"nested diagonals ({tag})", worst["nested"], 1e-8)
        suite.record(f"tr Q_i^2 = tr(A^4 P_i)/T_i^2, identity spectrum ({tag})",
                     worst["trq2_scalar"], 1e-8)
        suite.record(f"tr Q_i^2 <= tr(A^4 P_i)/T_i^2, general spectrum ({tag})",
                     worst["trq2_bound"], 1e-12)
        suite.record(f"C^-1 (n-i) <= T_i <= C (n-i) ({tag})", worst["ti_bounds"], 0.0)
        suite.record(f"simplex body = pinned simplex, exact ({tag})",
                     0.0 if upsilon_exact else 1.0, 0.0, upsilon_exact)
        suite.record(f"linear image two routes ({tag})", worst["linear_image"], 1e-8)
        suite.record(f"radial factorization ({tag})", worst["factor"], 1e-8)
        suite.record(f"rotation invariance of volume ({tag})", worst["rotation"], 1e-8)


def check_sphere_moments(suite, grid=SPHERE_GRID, draws=SPHERE_DRAWS):
    for n in range(2, 65):
        b4 = theory.beta_moment(n, [2])
        b22 = theory.beta_moment(n, [1, 1])
        dev = abs(n * b4 + n * (n - 1) * b22 - 1.0)
        if n in grid or dev > 1e-12:
            suite.record(f"n b4 + n(n-1) b22 = 1 (n={n})", dev, 1e-12)
        exact = abs(b4 - 3.0 / (n * (n + 2))) * n * (n + 2)
        if n in grid or exact > 1e-12:
            suite.record(f"E[U^4] = 3/(n(n+2)) (n={n})", exact, 1e-12)
    for n in grid:
        stream = sampling.RandomStream(2024, n)
        G = sampling.gaussian_matrix(draws, n, stream)
        U2 = (G / np.linalg.norm(G, axis=1)[:, None]) ** 2
        worst = 0.0
        for pattern in SPHERE_PATTERNS:
            vals = np.prod([U2[:, j] ** m for j, m in enumerate(pattern)], axis=0)
            se = vals.std(ddof=1) / math.sqrt(draws)
            worst = max(worst, abs(vals.mean() - theory.beta_moment(n, pattern)) / se)
        suite.record(f"sphere moments vs beta formula, max |z| (n={n})", worst, 5.0)


def check_t_matrix(suite):
    n, p = 8, 4
    exact = theory.t_matrix_identity(n, p)
    suite.record(
        "identity t-matrix row sums = n - i (n=8 p=4)",
        np.max(np.abs(exact.row_sums - exact.row_targets)), 1e-12,
    )
    est = theory.estimate_t_matrix(
        Spectrum.identity(n), p, 400, sampling.RandomStream(31, 0), renormalize=False
    )
    z = np.abs(est.values - exact.values) / est.std_errors
    suite.record("MC t-matrix vs (n-i)/n, max |z| (n=8 p=4)", np.max(z), 5.0)
    near = near_identity_spectrum(n, 1.0)
    est = theory.estimate_t_matrix(near, p, 400, sampling.RandomStream(32, 0), renormalize=False)
    z = np.abs(est.row_sums - est.row_targets) / est.row_std_errors
    suite.record("MC t-matrix row sums, near-identity (n=8 p=4)", np.max(z), 5.0)
    entry_range = max(-np.min(est.values), np.max(est.values) - 1.0, 0.0)
    suite.record("MC t-matrix entries in [0, 1]", entry_range, 0.0)


def check_norming(suite):
    n, p = 400, 200
    nc = theory.norming_constants(Spectrum.identity(n), p, theory.t_matrix_identity(n, p))
    i = np.arange(1, p)
    sigma2 = -2 * p / n + 2 * math.fsum(1.0 / (n - i))
    mu = math.log(n) - p * math.log(n) - sigma2 / 2 + math.fsum(np.log(n - i))
    suite.record("identity sigma^2 closed form (n=400 p=200)", abs(nc.sigma2 - sigma2), 1e-12)
    suite.record("identity mu closed form (n=400 p=200)", _rel(nc.mu, mu), 1e-12)
    suite.record(
        "sigma^2 vs variance limit (gamma=0.5, n=400)",
        abs(nc.sigma2 - theory.variance_limit(0.5)), 0.02,
    )


def check_quadratic_forms(suite, draws=QUF_DRAWS):
    rng = np.random.default_rng(77)
    worst = 0.0
    ns = (2, 3, 5, 10)
    for k in range(10):
        n = ns[k % len(ns)]
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, n))
        A, B = A + A.T, B + B.T
        _, _, z = stats.quadratic_form_moment_check(A, B, n, draws, sampling.RandomStream(500 + k, 0))
        worst = max(worst, abs(z))
    suite.record("quadratic-form moment identity, max |z| (10 pairs)", worst, 5.0)


def check_rotation(suite, reps=ROTATION_REPS):
    n, p = 16, 8
    rng = np.random.default_rng(99)
    spec = _model_spectrum(n, rng)
    O, _ = np.linalg.qr(rng.standard_normal((n, n)))
    full = (O * spec.values) @ O.T
    worst = np.max(np.abs(linalg.jacobi_spectrum(full).values - spec.values))
    suite.record("Jacobi spectrum under orthogonal similarity", worst, 1e-9)
    root = (O * np.sqrt(spec.values)) @ O.T
    stream_a = sampling.RandomStream(123, 0)
    stream_b = sampling.RandomStream(123, 1)
    diag_vals, full_vals = np.empty(reps), np.empty(reps)
    sqrt_lam = np.sqrt(spec.values)
    for r in range(reps):
        Ga = sampling.gaussian_matrix(p, n, stream_a)
        Ua = Ga / np.linalg.norm(Ga, axis=1)[:, None]
        diag_vals[r] = linalg.log_det_gram(Ua * sqrt_lam)
        Gb = sampling.gaussian_matrix(p, n, stream_b)
        Ub = Gb / np.linalg.norm(Gb, axis=1)[:, None]
        full_vals[r] = linalg.log_det_gram(Ub @ root)
    rep = stats.ks_two_sample(diag_vals, full_vals)
    suite.record("rotation invariance of log det law, KS p-value", rep.ks_p_value, 0.01,
                 rep.ks_p_value > 0.01)


def validate(out=print):
    """Run the whole suite; returns the Suite (``suite.ok`` is the verdict)."""
    suite = Suite()
    start = time.perf_counter()
    for step in (check_exact_identities, check_sphere_moments, check_t_matrix,
                 check_norming, check_quadratic_forms, check_rotation):
        step(suite)
    for c in suite.checks:
        out(c.line())
    failed = sum(not c.passed for c in suite.checks)
    out(f"{len(suite.checks) - failed}/{len(suite.checks)} checks passed "
        f"in {time.perf_counter() - start:.1f} s")
    return suite
