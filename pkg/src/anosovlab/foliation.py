"""Unstable leaves on the universal cover and their large-scale geometry.

On the cover the unstable direction field of a special endomorphism is
single-valued; integrating it yields unstable leaves.  The checks here
quantify how closely leaves of a perturbed map shadow straight lines of
the reference linear map: quasi-isometry constants, growth ratios of
iterated separations, and chord-direction alignment at large scale.
"""

import math
from dataclasses import dataclass

import numpy as np

from .directions import canonical_direction, projective_angle
from .smooth import NEWTON_MAX_ITER, NEWTON_MAX_STEP, NEWTON_TOL

__all__ = [
    "LeafSegment",
    "LeafTraceError",
    "cover_unstable_direction",
    "trace_leaf",
    "quasi_isometry_fit",
    "QuasiIsometryFit",
    "growth_ratio_check",
    "GrowthRatioReport",
    "asymptotic_direction_check",
    "AsymptoticDirectionReport",
    "linear_sandwich_check",
    "SandwichResult",
]

COVER_DEPTH = 30
LEAF_STEP = 0.01
MAX_TURN = 0.1


class LeafTraceError(RuntimeError):
    """Raised when leaf integration fails (Newton chain or sharp turn)."""


def _shear_arrays(f):
    sax = np.array([s.axis for s in f.shears], dtype=np.int64)
    sdr = np.array([s.driver for s in f.shears], dtype=np.int64)
    samp = np.array([s.amplitude for s in f.shears], dtype=float)
    sfrq = np.array([float(s.frequency) for s in f.shears], dtype=float)
    sph = np.array([s.phase for s in f.shears], dtype=float)
    return sax, sdr, samp, sfrq, sph


def cover_unstable_direction(f, p, depth=COVER_DEPTH, probe=None):
    """Unstable direction at cover points via the canonical backward chain.

    On the cover the inverse of f is single-valued, so no branch word is
    needed: chain inverse lifts down `depth` levels, then push a probe
    forward through the Jacobians.  Broadcasts over leading axes of p.
    """
    if probe is None:
        probe = f.base.e_u
    p = np.asarray(p, dtype=float)
    chain = [p]
    for _ in range(depth):
        chain.append(f.inverse_lift(chain[-1]))
    v = np.broadcast_to(np.asarray(probe, float), p.shape).copy()
    for i in range(depth, 0, -1):
        jac = f.derivative(chain[i])
        v = np.einsum("...ij,...j->...i", jac, v)
        v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return canonical_direction(v)


@dataclass(frozen=True)
class LeafSegment:
    """Sampled arc of an unstable leaf on the cover.

    points[j] sits at signed arclength (j - center_index) * step from
    the seed point; directions[j] is the unit field there, oriented
    along increasing arclength.
    """

    points: np.ndarray        # (M, 2)
    directions: np.ndarray    # (M, 2)
    arclength: np.ndarray     # (M,) signed, 0 at the seed
    center_index: int
    step: float
    depth: int

    @property
    def length(self):
        return float(self.arclength[-1] - self.arclength[0])


def trace_leaf(f, x, arclength, step=LEAF_STEP, depth=COVER_DEPTH,
               max_turn=MAX_TURN):
    """Trace the unstable leaf through x for `arclength` in each direction.

    Fixed-step RK4 on the unit unstable direction field, evaluated by
    compiled backward-chain kernels; consecutive Newton chains reuse the
    previous chain as seeds.  Only implemented for n = 2.
    """
    from ._leafkernel import trace_kernel

    if f.dim != 2 or f.base.e_u is None:
        raise NotImplementedError("leaf tracing requires n = 2 with dim E^u = 1")
    x = np.asarray(x, dtype=float)
    n_steps = int(math.ceil(arclength / step))
    A = f.base.matrix
    Ainv = f.base.inverse
    sax, sdr, samp, sfrq, sph = _shear_arrays(f)
    e_u = f.base.e_u

    halves = []
    for sign in (1.0, -1.0):
        samples = np.empty((n_steps + 1, 2))
        dirs = np.empty((n_steps + 1, 2))
        status, at = trace_kernel(
            A, Ainv, sax, sdr, samp, sfrq, sph,
            float(x[0]), float(x[1]), sign * e_u[0], sign * e_u[1],
            n_steps, float(step), int(depth), float(max_turn),
            NEWTON_TOL, NEWTON_MAX_ITER, NEWTON_MAX_STEP,
            samples, dirs,
        )
        if status == 1:
            raise LeafTraceError(
                f"backward Newton chain failed at step {at} "
                f"(orientation {sign:+.0f})"
            )
        if status == 2:
            raise LeafTraceError(
                f"direction field turned more than {max_turn} rad in one "
                f"step at step {at}; reduce the step size"
            )
        halves.append((samples, dirs))

    pos_samples, pos_dirs = halves[0]
    neg_samples, neg_dirs = halves[1]
    points = np.vstack([neg_samples[:0:-1], pos_samples])
    directions = np.vstack([-neg_dirs[:0:-1], pos_dirs])
    s = (np.arange(2 * n_steps + 1) - n_steps) * step
    return LeafSegment(
        points=points,
        directions=directions,
        arclength=s,
        center_index=n_steps,
        step=step,
        depth=depth,
    )


def _subsample_pairs(segment, max_pairs):
    m = segment.points.shape[0]
    target = int(math.sqrt(2.0 * max_pairs)) + 1
    stride = max(1, -(-m // target))
    idx = np.arange(0, m, stride)
    if idx[-1] != m - 1:
        idx = np.append(idx, m - 1)
    pts = segment.points[idx]
    s = segment.arclength[idx]
    ii, jj = np.triu_indices(idx.size, k=1)
    chord = np.linalg.norm(pts[ii] - pts[jj], axis=-1)
    along = np.abs(s[ii] - s[jj])
    return pts, ii, jj, chord, along, stride


@dataclass(frozen=True)
class QuasiIsometryFit:
    """Fitted constants for leaf-arclength vs straight-line distance.

    q_fit dominates along/chord over pairs separated by at least
    pair_floor; b_fit is the smallest additive slack making
    along <= q_fit * chord + b_fit hold over every sampled pair.
    """

    q_fit: float
    b_fit: float
    far_ratio_max: float      # max along/chord at chord >= ratio_floor
    pair_floor: float
    ratio_floor: float
    n_pairs: int
    n_far_pairs: int
    stride: int


def quasi_isometry_fit(segment, pair_floor=1.0, ratio_floor=10.0,
                       max_pairs=200_000, min_pairs=100):
    """Fit quasi-isometry constants of a traced leaf against the plane."""
    pts, ii, jj, chord, along, stride = _subsample_pairs(segment, max_pairs)
    floor_mask = chord >= pair_floor
    if int(np.sum(floor_mask)) < min_pairs:
        raise ValueError(
            f"only {int(np.sum(floor_mask))} pairs at separation >= "
            f"{pair_floor}; trace a longer leaf"
        )
    q = float(np.max(along[floor_mask] / chord[floor_mask]))
    b = float(max(0.0, np.max(along - q * chord)))
    far_mask = chord >= ratio_floor
    far = float(np.max(along[far_mask] / chord[far_mask])) if np.any(far_mask) else float("nan")
    return QuasiIsometryFit(
        q_fit=q,
        b_fit=b,
        far_ratio_max=far,
        pair_floor=pair_floor,
        ratio_floor=ratio_floor,
        n_pairs=int(np.sum(floor_mask)),
        n_far_pairs=int(np.sum(far_mask)),
        stride=stride,
    )


@dataclass(frozen=True)
class AsymptoticDirectionReport:
    """Worst chord-direction misalignment with e_u^A per separation floor."""

    floors: tuple
    max_angles: tuple
    pair_counts: tuple
    c_fit: float              # smallest c with angle <= arctan(c / floor)
    decreasing: bool

    def rows(self):
        return list(zip(self.floors, self.pair_counts, self.max_angles))


def asymptotic_direction_check(segment, e_u, floors=(5.0, 10.0, 20.0, 40.0),
                               max_pairs=200_000):
    """Chord directions of far-apart leaf points align with e_u^A."""
    pts, ii, jj, chord, along, _ = _subsample_pairs(segment, max_pairs)
    vecs = pts[ii] - pts[jj]
    angles = projective_angle(vecs, np.asarray(e_u, float))
    max_angles = []
    counts = []
    for fl in floors:
        mask = chord >= fl
        counts.append(int(np.sum(mask)))
        if not np.any(mask):
            raise ValueError(f"no pairs at separation >= {fl}; trace a longer leaf")
        max_angles.append(float(np.max(angles[mask])))
    c_fit = max(fl * math.tan(a) for fl, a in zip(floors, max_angles))
    decreasing = all(b <= a + 1e-15 for a, b in zip(max_angles, max_angles[1:]))
    return AsymptoticDirectionReport(
        floors=tuple(floors),
        max_angles=tuple(max_angles),
        pair_counts=tuple(counts),
        c_fit=c_fit,
        decreasing=decreasing,
    )


@dataclass(frozen=True)
class GrowthRatioReport:
    """Iterated separation growth of f against its linear part."""

    ratios: np.ndarray        # (m,) |F^k x - F^k y| / |A^k x - A^k y|
    k: int
    sep_floor: float
    max_abs_dev: float        # max |ratio - 1|


def growth_ratio_check(f, pairs, k, sep_floor=10.0):
    """Compare k-step cover growth of pair separations under f and A.

    pairs has shape (m, 2, n): rows of far-apart cover points.  For
    separations at or above sep_floor the two growths agree within a
    factor controlled by the quasi-isometry constants.
    """
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 3 or pairs.shape[1] != 2:
        raise ValueError("pairs must have shape (m, 2, n)")
    sep = np.linalg.norm(pairs[:, 0] - pairs[:, 1], axis=-1)
    if np.any(sep < sep_floor):
        raise ValueError(
            f"pair separation {float(np.min(sep)):.3g} below floor {sep_floor}"
        )
    flat = pairs.reshape(-1, pairs.shape[-1])
    cur = flat.copy()
    lin = flat.copy()
    # iterate the linear part the same way as the lift so that for f = A
    # the two orbits are computed by identical arithmetic
    for _ in range(k):
        cur = f.lift_apply(cur)
        lin = lin @ f.base.matrix.T
    fgrow = cur.reshape(pairs.shape)
    agrow = lin.reshape(pairs.shape)
    num = np.linalg.norm(fgrow[:, 0] - fgrow[:, 1], axis=-1)
    den = np.linalg.norm(agrow[:, 0] - agrow[:, 1], axis=-1)
    ratios = num / den
    return GrowthRatioReport(
        ratios=ratios,
        k=k,
        sep_floor=sep_floor,
        max_abs_dev=float(np.max(np.abs(ratios - 1.0))),
    )


@dataclass(frozen=True)
class SandwichResult:
    """Two-sided growth bound for one linear orbit pair."""

    holds: bool
    ratio: float              # |A^n (y - x)| / (e^{n lambda_u} |y - x|)
    lower_margin: float       # ratio - (1 - eps)
    upper_margin: float       # (1 + eps) - ratio
    alignment_angle: float    # angle between y - x and e_u^A
    n: int
    eps: float


def linear_sandwich_check(lin, x, y, n, eps):
    """Check (1-eps) e^{n lambda_u} |y-x| <= |A^n(y-x)| <= (1+eps) e^{n lambda_u} |y-x|.

    Meaningful when y - x is nearly aligned with e_u^A; the alignment
    angle is reported so violations can be traced to misaligned input.
    """
    lin = getattr(lin, "base", lin)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d0 = y - x
    An = np.linalg.matrix_power(lin.matrix, n)
    dn = An @ d0
    ratio = float(
        np.linalg.norm(dn) / (math.exp(n * lin.lambda_u) * np.linalg.norm(d0))
    )
    lower = ratio - (1.0 - eps)
    upper = (1.0 + eps) - ratio
    return SandwichResult(
        holds=lower >= 0.0 and upper >= 0.0,
        ratio=ratio,
        lower_margin=lower,
        upper_margin=upper,
        alignment_angle=float(projective_angle(d0, lin.e_u)),
        n=n,
        eps=eps,
    )
