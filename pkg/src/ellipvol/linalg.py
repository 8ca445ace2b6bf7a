"""Dense linear algebra for Gram log-determinants and projection matrices.

Matrices are plain ``numpy.ndarray`` objects; a p x n matrix ``Y`` holds one
point per row.  The model matrix A is never stored: everything downstream
works with the eigenvalues of AA^T (a :class:`Spectrum`) and takes
A = diag(sqrt(lambda)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ._validation import as_matrix, as_vector, check_symmetric, check_wide
from .errors import DomainError, NotPositive, RankDeficient, SingularInner

EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of AA^T, positive and sorted in descending order."""

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64).ravel()
        if vals.size == 0:
            raise DomainError("spectrum is empty")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise NotPositive("spectrum values must be finite and > 0")
        if np.any(np.diff(vals) > 0):
            raise DomainError("spectrum values must be sorted descending")
        if self.normalized:
            n = vals.size
            if abs(vals.sum() - n) > 1e-12 * n:
                raise DomainError("normalized spectrum must sum to its length")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_values(cls, values, normalize=False):
        """Build a spectrum from unsorted eigenvalues."""
        vals = np.sort(as_vector(values, "spectrum"))[::-1]
        spec = cls(vals)
        return normalize_spectrum(spec) if normalize else spec

    @classmethod
    def identity(cls, n):
        return cls(np.ones(int(n)), normalized=True)

    @property
    def n(self):
        return self.values.size

    @property
    def is_identity(self):
        return bool(np.all(self.values == self.values[0]))

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, Spectrum):
            return NotImplemented
        return self.normalized == other.normalized and np.array_equal(
            self.values, other.values
        )

    def __hash__(self):
        return hash((self.values.tobytes(), self.normalized))


@dataclass(frozen=True)
class PerpendicularDecomposition:
    """log det(YY^T) together with the squared perpendicular lengths.

    ``z_values[i]`` is the squared distance of row i to the span of rows
    0..i-1, so ``log_det == sum(log(z_values))``.  The scaled form
    ``n * z_values`` is what the martingale decomposition calls Z_{i+1}.
    """

    log_det: float
    z_values: np.ndarray = field(repr=False)
    n: int = 0

    @property
    def scaled_z(self):
        return self.n * self.z_values

    def reassemble(self):
        """-p log n + sum_i log(n z_i); equals ``log_det`` up to rounding."""
        p = self.z_values.size
        return -p * np.log(self.n) + float(np.sum(np.log(self.scaled_z)))


def log_det_gram(Y):
    """log det(YY^T) through a Cholesky factorization of the Gram matrix.

    Raises RankDeficient when a pivot falls below p*n*eps*max(diag(YY^T)).
    """
    Y = check_wide(Y)
    p, n = Y.shape
    G = Y @ Y.T
    thresh = p * n * EPS * float(np.max(np.diag(G)))
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient("Gram matrix is not positive definite") from exc
    pivots = np.diag(L) ** 2
    if np.min(pivots) <= thresh:
        raise RankDeficient(
            f"Cholesky pivot {np.min(pivots):.3e} <= threshold {thresh:.3e}"
        )
    return float(np.sum(np.log(pivots)))


def perpendicular_log_det(Y):
    """log det(YY^T) as a product of perpendiculars (base times height).

    Classical Gram-Schmidt over the rows with one full re-orthogonalization
    pass; no pivoting.
    """
    Y = check_wide(Y)
    p, n = Y.shape
    basis = np.empty((p, n))
    z = np.empty(p)
    for i in range(p):
        v = Y[i].copy()
        if i:
            Q = basis[:i]
            v -= Q.T @ (Q @ v)
            v -= Q.T @ (Q @ v)
        zi = float(v @ v)
        row_norm2 = float(Y[i] @ Y[i])
        if zi <= n * EPS * row_norm2 or zi == 0.0:
            raise RankDeficient(f"row {i} lies in the span of the previous rows")
        z[i] = zi
        basis[i] = v / np.sqrt(zi)
    z.setflags(write=False)
    return PerpendicularDecomposition(float(np.sum(np.log(z))), z, n)


def _scaled_rows(N_i, spectrum):
    N_i = as_matrix(N_i, "N_i")
    i, n = N_i.shape
    if n != spectrum.n:
        raise DomainError(f"N_i has {n} columns but spectrum has length {n}")
    if not 1 <= i < n:
        raise DomainError(f"need 1 <= i < n, got i={i}, n={n}")
    return N_i * np.sqrt(spectrum.values)


def _inner_cholesky(NA):
    """Lower Cholesky factor of N A^2 N^T, or SingularInner."""
    M = NA @ NA.T
    i, n = NA.shape
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise SingularInner("inner system N A^2 N^T is singular") from exc
    if np.min(np.diag(L)) ** 2 <= i * n * EPS * float(np.max(np.diag(M))):
        raise SingularInner("inner system N A^2 N^T is numerically singular")
    return L


def projection_matrix(N_i, spectrum):
    """P_i = I - A N^T (N A^2 N^T)^{-1} N A for the first i Gaussian rows."""
    NA = _scaled_rows(N_i, spectrum)
    L = _inner_cholesky(NA)
    W = sla.solve_triangular(L, NA, lower=True)
    P = -(W.T @ W)
    P[np.diag_indices_from(P)] += 1.0
    return 0.5 * (P + P.T)


def projection_diagonal(N_i, spectrum):
    """Diagonal of P_i without forming the n x n matrix.

    p_kk = 1 - lambda_k w_k^T (N A^2 N^T)^{-1} w_k with w_k the k-th column;
    one i x i factorization serves every k, so the cost is O(i^3 + n i^2).
    """
    NA = _scaled_rows(N_i, spectrum)
    L = _inner_cholesky(NA)
    W = sla.solve_triangular(L, NA, lower=True)
    return 1.0 - np.einsum("jk,jk->k", W, W)


def nested_projection_diagonals(N, spectrum):
    """Diagonals of P_1, ..., P_{p-1} from a single p x n Gaussian matrix.

    Row i-1 of the result is ``projection_diagonal(N[:i], spectrum)``.  The
    leading i x i block of the Cholesky factor of N A^2 N^T is the factor of
    the i-row inner system, and forward substitution is nested too, so the
    running sum of squared rows of L^{-1} N A yields every P_i at once.
    """
    N = as_matrix(N, "N")
    p, n = N.shape
    if p < 2:
        raise DomainError("need at least two rows")
    NA = N[: p - 1] * np.sqrt(spectrum.values)
    L = _inner_cholesky(NA)
    W = sla.solve_triangular(L, NA, lower=True)
    return 1.0 - np.cumsum(W * W, axis=0)


def _round_robin(n):
    """Pairings of a cyclic tournament; every pair meets once per sweep."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [
            (players[k], players[m - 1 - k])
            for k in range(m // 2)
            if players[k] < n and players[m - 1 - k] < n
        ]
        rounds.append(
            (np.array([min(a, b) for a, b in pairs], dtype=np.intp),
             np.array([max(a, b) for a, b in pairs], dtype=np.intp))
        )
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_spectrum(S, tol=1e-12, max_sweeps=60):
    """Eigenvalues of a symmetric positive definite matrix by cyclic Jacobi.

    Disjoint rotation pairs (round-robin ordering) are applied together, which
    is exact because their 2x2 blocks do not interact.  Iterates until the
    off-diagonal Frobenius mass is <= tol * ||S||_F.
    """
    S = check_symmetric(S).copy()
    S = 0.5 * (S + S.T)
    n = S.shape[0]
    fro = np.linalg.norm(S)
    rounds = _round_robin(n) if n > 1 else []

    offdiag = ~np.eye(n, dtype=bool)

    def off_exact(M):
        return float(np.linalg.norm(M[offdiag]))

    for _ in range(max_sweeps):
        if off_exact(S) <= tol * fro:
            break
        for ip, iq in rounds:
            apq = S[ip, iq]
            active = apq != 0.0
            if not np.any(active):
                continue
            ip, iq, apq = ip[active], iq[active], apq[active]
            theta = (S[iq, iq] - S[ip, ip]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rp, rq = S[ip].copy(), S[iq].copy()
            S[ip] = c[:, None] * rp - s[:, None] * rq
            S[iq] = s[:, None] * rp + c[:, None] * rq
            cp, cq = S[:, ip].copy(), S[:, iq].copy()
            S[:, ip] = cp * c - cq * s
            S[:, iq] = cp * s + cq * c
            S[ip, iq] = 0.0
            S[iq, ip] = 0.0
    else:
        if off_exact(S) > tol * fro:
            raise ArithmeticError("Jacobi iteration did not converge")
    vals = np.sort(np.diag(S))[::-1]
    if vals[-1] <= 0:
        raise NotPositive(f"smallest eigenvalue {vals[-1]:.3e} is not positive")
    return Spectrum(vals)


def normalize_spectrum(s):
    """Rescale so the eigenvalues sum to n, i.e. tr(AA^T) = n."""
    if s.normalized:
        return s
    n = s.n
    vals = s.values * (n / float(np.sum(s.values)))
    # guard the sum-to-n invariant against accumulated rounding
    vals = vals * (n / float(np.sum(vals)))
    return Spectrum(vals, normalized=True)
