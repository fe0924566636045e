"""Integer toral endomorphisms and their hyperbolic splittings.

An integer matrix A with det A != 0 induces a degree-|det A| covering
endomorphism of T^n.  This module classifies the spectrum, extracts the
expanding/contracting splitting, and enumerates the deck data (coset
representatives of Z^n / A Z^n) that labels preimage branches.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LinearEndo",
    "HyperbolicSplitting",
    "NonHyperbolicError",
    "SplittingPolicyError",
    "analyze",
    "coset_representatives",
    "preimages_linear",
]


class NonHyperbolicError(ValueError):
    """Raised when some eigenvalue sits on (or too near) the unit circle."""


class SplittingPolicyError(ValueError):
    """Raised when the splitting has no stable part or no unstable part."""


@dataclass(frozen=True)
class HyperbolicSplitting:
    """Expanding/contracting invariant splitting of R^n under A."""

    unstable_dim: int
    stable_dim: int
    unstable_basis: np.ndarray  # (n, unstable_dim), unit columns
    stable_basis: np.ndarray    # (n, stable_dim), unit columns
    expansion_rate: float       # min |mu| over expanding eigenvalues
    contraction_rate: float     # max |mu| over contracting eigenvalues


@dataclass(frozen=True)
class LinearEndo:
    """Analyzed hyperbolic integer matrix acting on T^n."""

    matrix: np.ndarray          # (n, n) integer entries, float dtype
    matrix_int: np.ndarray      # same entries, int64 dtype
    degree: int                 # |det|, number of preimages of a point
    determinant: int
    splitting: HyperbolicSplitting
    unstable_eigenvalue: float | None   # real mu, |mu| > 1 (1-dim E^u only)
    stable_eigenvalue: float | None     # real mu, |mu| < 1 (1-dim E^s only)
    stable_spectrum: tuple              # contracting eigenvalues, may be complex
    unstable_spectrum: tuple            # expanding eigenvalues, may be complex
    e_u: np.ndarray | None      # unit spanning vector of E^u when 1-dim
    e_s: np.ndarray | None      # unit spanning vector of E^s when 1-dim
    lambda_u: float | None      # log|mu| for the 1-dim unstable eigenvalue
    inverse: np.ndarray         # A^{-1} as floats
    adjugate: np.ndarray        # integer adjugate, A^{-1} = adj / det
    coset_reps: np.ndarray = field(repr=False, default=None)  # (degree, n) int64

    @property
    def dim(self):
        return self.matrix.shape[0]

    def in_image_lattice(self, k):
        """Exact test whether integer vectors k lie in A Z^n.

        Uses the integer identity A^{-1} k = adj(A) k / det A, so the
        answer is a divisibility check with no floating-point tolerance.
        """
        k = np.asarray(k, dtype=np.int64)
        z = k @ self.adjugate.T
        return np.all(z % self.determinant == 0, axis=-1)

    def branch_of_offset(self, k):
        """Index of the coset representative equivalent to integer vector k."""
        k = np.asarray(k, dtype=np.int64)
        hits = self.in_image_lattice(k[..., None, :] - self.coset_reps)
        idx = np.argmax(hits, axis=-1)
        if not np.all(np.take_along_axis(hits, idx[..., None], -1)):
            raise ValueError("offset matches no coset representative")
        return idx if idx.ndim else int(idx)


def _integer_matrix(matrix):
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    mf = m.astype(float)
    mi = np.rint(mf).astype(np.int64)
    if np.max(np.abs(mf - mi)) > 0:
        raise ValueError("matrix entries must be integers")
    return mi


def _int_det(mi):
    n = mi.shape[0]
    if n == 1:
        return int(mi[0, 0])
    if n == 2:
        return int(mi[0, 0] * mi[1, 1] - mi[0, 1] * mi[1, 0])
    # Laplace expansion; fine for the small n used here
    total = 0
    for j in range(n):
        minor = np.delete(np.delete(mi, 0, axis=0), j, axis=1)
        total += (-1) ** j * int(mi[0, j]) * _int_det(minor)
    return total


def _int_adjugate(mi, det):
    n = mi.shape[0]
    if n == 1:
        return np.array([[1]], dtype=np.int64)
    adj = np.rint(det * np.linalg.inv(mi.astype(float))).astype(np.int64)
    # cofactors are integers; the rounded product must reproduce det * I
    if not np.array_equal(mi @ adj, det * np.eye(n, dtype=np.int64)):
        raise ValueError("adjugate reconstruction failed")
    return adj


def _unit(v):
    return v / np.linalg.norm(v)


def _eigenpair_2x2(mi):
    """Both real eigenvalues and unit eigenvectors of an integer 2x2 matrix.

    Returns None when the discriminant is negative (complex pair).
    """
    a, b, c, d = (float(mi[0, 0]), float(mi[0, 1]),
                  float(mi[1, 0]), float(mi[1, 1]))
    tr = a + d
    det = a * d - b * c
    disc = tr * tr - 4.0 * det
    if disc < 0.0:
        return None
    s = math.sqrt(disc)
    mu1 = (tr + s) / 2.0 if tr >= 0 else (tr - s) / 2.0
    mu2 = det / mu1 if mu1 != 0.0 else (tr - s) / 2.0
    pairs = []
    for mu in (mu1, mu2):
        v1 = np.array([b, mu - a])
        v2 = np.array([mu - d, c])
        v = v1 if np.dot(v1, v1) >= np.dot(v2, v2) else v2
        if np.dot(v, v) == 0.0:  # diagonal matrix
            v = np.array([1.0, 0.0]) if abs(a - mu) <= abs(d - mu) else np.array([0.0, 1.0])
        pairs.append((mu, _unit(v)))
    return pairs


def _spectrum(mi):
    """Eigenvalues with unit eigenvectors, closed-form for n = 2."""
    if mi.shape[0] == 2:
        pairs = _eigenpair_2x2(mi)
        if pairs is not None:
            return [(mu, vec, True) for mu, vec in pairs]
    vals, vecs = np.linalg.eig(mi.astype(float))
    out = []
    for j, mu in enumerate(vals):
        v = vecs[:, j]
        is_real = abs(mu.imag) <= 1e-12 * (1.0 + abs(mu.real))
        if is_real:
            mu = mu.real
            v = np.real(v) if np.max(np.abs(np.imag(v))) < 1e-9 else v
        out.append((mu, _unit(v), is_real))
    return out


def analyze(matrix, tol_hyp=1e-9):
    """Classify an integer matrix as a hyperbolic toral endomorphism.

    Raises NonHyperbolicError when an eigenvalue modulus is within
    tol_hyp of 1, and SplittingPolicyError unless both the expanding
    and the contracting subspace are nontrivial (1 <= dim E^u <= n-1).
    An invertible matrix (|det| = 1) is accepted with a warning since
    it is a true Anosov diffeomorphism rather than a strict covering.
    """
    mi = _integer_matrix(matrix)
    n = mi.shape[0]
    det = _int_det(mi)
    if det == 0:
        raise ValueError("matrix is singular; it does not cover the torus")
    if abs(det) == 1:
        warnings.warn(
            "matrix is invertible over Z, so the endomorphism is a "
            "diffeomorphism (degree 1)",
            stacklevel=2,
        )

    spectrum = _spectrum(mi)
    for mu, _, _ in spectrum:
        if abs(abs(mu) - 1.0) <= tol_hyp:
            raise NonHyperbolicError(
                f"eigenvalue {mu} has modulus within {tol_hyp} of the unit circle"
            )
    expanding = [(mu, v, r) for mu, v, r in spectrum if abs(mu) > 1.0]
    contracting = [(mu, v, r) for mu, v, r in spectrum if abs(mu) < 1.0]
    if not expanding or not contracting:
        raise SplittingPolicyError(
            "splitting must satisfy 1 <= dim E^u <= n-1: purely expanding or "
            "purely contracting matrices are outside this laboratory's scope "
            f"(dim E^u = {len(expanding)}, n = {n})"
        )

    u_basis = np.stack([np.real(v) if r else v for mu, v, r in expanding], axis=1)
    s_basis = np.stack([np.real(v) if r else v for mu, v, r in contracting], axis=1)
    splitting = HyperbolicSplitting(
        unstable_dim=len(expanding),
        stable_dim=len(contracting),
        unstable_basis=np.real(u_basis).astype(float),
        stable_basis=np.real(s_basis).astype(float),
        expansion_rate=min(abs(mu) for mu, _, _ in expanding),
        contraction_rate=max(abs(mu) for mu, _, _ in contracting),
    )

    mu_u = e_u = lam_u = None
    if len(expanding) == 1 and expanding[0][2]:
        mu_u = float(expanding[0][0])
        e_u = np.real(expanding[0][1]).astype(float)
        lam_u = math.log(abs(mu_u))
    mu_s = e_s = None
    if len(contracting) == 1 and contracting[0][2]:
        mu_s = float(contracting[0][0])
        e_s = np.real(contracting[0][1]).astype(float)

    adj = _int_adjugate(mi, det)
    endo = LinearEndo(
        matrix=mi.astype(float),
        matrix_int=mi,
        degree=abs(det),
        determinant=det,
        splitting=splitting,
        unstable_eigenvalue=mu_u,
        stable_eigenvalue=mu_s,
        stable_spectrum=tuple(mu for mu, _, _ in contracting),
        unstable_spectrum=tuple(mu for mu, _, _ in expanding),
        e_u=e_u,
        e_s=e_s,
        lambda_u=lam_u,
        inverse=adj.astype(float) / det,
        adjugate=adj,
        coset_reps=None,
    )
    object.__setattr__(endo, "coset_reps", coset_representatives(endo))
    return endo


def coset_representatives(endo):
    """Canonical representatives of Z^n / A Z^n in lexicographic order.

    Scans the box [0, |det|)^n and keeps each vector not equivalent to a
    previously kept one; two vectors are equivalent when their difference
    lies in A Z^n.  The result has exactly |det| rows and row 0 is zero.
    """
    d = endo.degree
    n = endo.dim
    reps = []
    for cand in itertools.product(range(d), repeat=n):
        k = np.array(cand, dtype=np.int64)
        if not reps:
            reps.append(k)
            continue
        diffs = k - np.stack(reps)
        if not np.any(endo.in_image_lattice(diffs)):
            reps.append(k)
        if len(reps) == d:
            break
    if len(reps) != d:
        raise RuntimeError(f"found {len(reps)} coset representatives, expected {d}")
    return np.stack(reps)


def preimages_linear(endo, x):
    """All degree-many preimages of a torus point under the linear map.

    Row b of the result is A^{-1}(x + k_b) mod 1 for the b-th coset
    representative k_b, so row order *is* the branch labelling.
    """
    from .torus import project

    x = project(x)
    targets = x + endo.coset_reps
    return project(targets @ endo.inverse.T)
