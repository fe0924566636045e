"""Unstable and stable directions attached to pre-histories.

For a non-invertible hyperbolic map the unstable direction at a point
depends on the chosen backward orbit: push a probe vector forward along
the pre-history's derivative chain and renormalize.  A census over many
pre-histories of one point then distinguishes maps with a single
direction field from maps with genuinely many directions per point.
"""

from dataclasses import dataclass

import numpy as np

from .prehistory import _realize_words

__all__ = [
    "DirectionConvergenceError",
    "canonical_direction",
    "projective_angle",
    "max_pairwise_angle",
    "unstable_direction",
    "stable_direction",
    "census",
    "DirectionCensus",
    "monotonicity_check",
    "MonotonicityReport",
    "angle_decay",
]

DEFAULT_DEPTH = 40
MIN_DEPTH = 10
DIAGNOSTIC_GAP = 5
CLUSTER_TOLERANCE = 1e-4
DISPERSION_THRESHOLD = 1e-3


class DirectionConvergenceError(RuntimeError):
    """Raised when the push-forward direction estimate fails to settle."""


def canonical_direction(v):
    """Unit vector with canonical sign: first nonzero coordinate positive."""
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(nrm == 0.0):
        raise ValueError("cannot canonicalize a zero vector")
    u = v / nrm
    lead_idx = np.argmax(u != 0.0, axis=-1)
    lead = np.take_along_axis(u, lead_idx[..., None], axis=-1)[..., 0]
    return u * np.where(lead < 0.0, -1.0, 1.0)[..., None]


def projective_angle(u, v):
    """Angle in [0, pi/2] between the lines spanned by u and v.

    Uses 2*arcsin(min(|u-v|, |u+v|)/2) on normalized inputs, which stays
    accurate down to machine precision for nearly parallel lines where
    the arccos of a dot product loses every significant digit.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    d1 = np.linalg.norm(u - v, axis=-1)
    d2 = np.linalg.norm(u + v, axis=-1)
    return 2.0 * np.arcsin(np.clip(np.minimum(d1, d2) / 2.0, 0.0, 1.0))


def max_pairwise_angle(dirs, block=512):
    """Largest projective angle over all pairs of direction rows."""
    dirs = np.asarray(dirs, dtype=float)
    m = dirs.shape[0]
    if m < 2:
        return 0.0
    worst = 0.0
    for lo in range(0, m, block):
        chunk = dirs[lo : lo + block]
        ang = projective_angle(chunk[:, None, :], dirs[None, lo:, :])
        worst = max(worst, float(np.max(ang)))
    return worst


def _push_chain(f, points, probe, gap):
    """Push a probe along derivative chains of realized backward orbits.

    points has shape (m, depth+1, n) with row i holding x_{-i}.  Returns
    canonical directions at the base points and the angle between the
    full-depth estimate and the one started `gap` levels shallower.
    """
    m, rows, n = points.shape
    depth = rows - 1
    jac = f.derivative(points[:, 1:].reshape(-1, n)).reshape(m, depth, n, n)
    v = np.broadcast_to(probe, (m, n)).copy()
    w = None
    for i in range(depth, 0, -1):
        if i == depth - gap:
            w = np.broadcast_to(probe, (m, n)).copy()
        v = np.einsum("mij,mj->mi", jac[:, i - 1], v)
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        if w is not None:
            w = np.einsum("mij,mj->mi", jac[:, i - 1], w)
            w /= np.linalg.norm(w, axis=-1, keepdims=True)
    diag = projective_angle(v, w) if w is not None else np.full(m, np.nan)
    return canonical_direction(v), diag


def unstable_direction(f, p, probe=None, gap=DIAGNOSTIC_GAP, min_depth=MIN_DEPTH,
                       diag_tol=None):
    """Unstable direction selected by the pre-history p, with diagnostic.

    Returns (direction, diagnostic) where the diagnostic is the angle
    between the depth-N and depth-(N-gap) estimates; it contracts
    geometrically in N at the rate set by the spectral gap.
    """
    if p.depth < min_depth:
        raise ValueError(f"pre-history depth {p.depth} below minimum {min_depth}")
    if probe is None:
        probe = f.base.e_u
    dirs, diag = _push_chain(f, p.points[None, :, :], np.asarray(probe, float), gap)
    if diag_tol is not None and not diag[0] < diag_tol:
        raise DirectionConvergenceError(
            f"diagnostic angle {diag[0]:.3e} exceeds tolerance {diag_tol:.3e}"
        )
    return dirs[0], float(diag[0])


def stable_direction(f, x, depth=DEFAULT_DEPTH, probe=None, gap=DIAGNOSTIC_GAP):
    """Stable direction at x via pullback along the forward orbit.

    The stable line is forward-determined: pull a probe back through the
    inverse derivatives of the orbit x, f(x), ..., f^depth(x).  Returns
    (direction, diagnostic) like unstable_direction.
    """
    if probe is None:
        probe = f.base.e_s
    x = np.asarray(x, dtype=float)
    orbit = np.empty((depth + 1, x.shape[-1]))
    orbit[0] = x
    for j in range(depth):
        orbit[j + 1] = f.apply(orbit[j])
    jac = f.derivative(orbit[:-1])
    w = np.asarray(probe, dtype=float).copy()
    w2 = None
    for j in range(depth - 1, -1, -1):
        if j == depth - 1 - gap:
            w2 = np.asarray(probe, dtype=float).copy()
        w = np.linalg.solve(jac[j], w)
        w /= np.linalg.norm(w)
        if w2 is not None:
            w2 = np.linalg.solve(jac[j], w2)
            w2 /= np.linalg.norm(w2)
    diag = float(projective_angle(w, w2)) if w2 is not None else float("nan")
    return canonical_direction(w), diag


# -- clustering ---------------------------------------------------------


def _cluster_circle(dirs, tol):
    """Single-linkage clusters of 2-d lines via sorted angles on [0, pi)."""
    theta = np.arctan2(dirs[:, 1], dirs[:, 0])
    order = np.argsort(theta, kind="stable")
    ts = theta[order]
    m = ts.size
    labels_sorted = np.zeros(m, dtype=np.int64)
    if m > 1:
        gaps = np.diff(ts)
        labels_sorted[1:] = np.cumsum(gaps > tol)
        wrap = ts[0] + np.pi - ts[-1]
        last = labels_sorted[-1]
        if last > 0 and wrap <= tol:
            labels_sorted[labels_sorted == last] = 0
    labels = np.empty(m, dtype=np.int64)
    labels[order] = labels_sorted
    return _relabel_first_seen(labels)


def _cluster_union_find(dirs, tol, block=512):
    """Single-linkage via union-find on pairwise angles; any dimension."""
    m = dirs.shape[0]
    parent = np.arange(m)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for lo in range(0, m, block):
        chunk = dirs[lo : lo + block]
        ang = projective_angle(chunk[:, None, :], dirs[None, :, :])
        ii, jj = np.nonzero(ang <= tol)
        for a, b in zip(ii + lo, jj):
            ra, rb = find(a), find(int(b))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    labels = np.array([find(i) for i in range(m)])
    return _relabel_first_seen(labels)


def _relabel_first_seen(labels):
    _, first = np.unique(labels, return_index=True)
    mapping = {labels[i]: rank for rank, i in enumerate(np.sort(first))}
    return np.array([mapping[l] for l in labels], dtype=np.int64)


def cluster_directions(dirs, tol=CLUSTER_TOLERANCE):
    """Single-linkage cluster labels for canonical direction rows."""
    dirs = np.asarray(dirs, dtype=float)
    if dirs.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    if dirs.shape[-1] == 2:
        return _cluster_circle(dirs, tol)
    return _cluster_union_find(dirs, tol)


# -- census -------------------------------------------------------------


@dataclass(frozen=True)
class DirectionCensus:
    """Unstable directions of one point over many pre-histories."""

    base: np.ndarray
    depth: int
    mode: str                  # "sampled" or "exhaustive"
    words: tuple               # branch words, one per direction row
    directions: np.ndarray     # (m, n) canonical unit rows
    labels: np.ndarray         # (m,) cluster ids
    cluster_count: int
    dispersion: float          # max pairwise projective angle
    cluster_tolerance: float
    dispersion_threshold: float
    max_diagnostic: float      # worst convergence diagnostic in the batch

    @property
    def special(self):
        """True when all sampled directions agree at the census resolution."""
        return self.dispersion < self.dispersion_threshold

    def summary(self):
        return {
            "base": [float(c) for c in np.asarray(self.base)],
            "depth": self.depth,
            "mode": self.mode,
            "n_directions": int(self.directions.shape[0]),
            "dispersion": self.dispersion,
            "cluster_count": self.cluster_count,
            "cluster_tolerance": self.cluster_tolerance,
            "dispersion_threshold": self.dispersion_threshold,
            "special": bool(self.special),
            "max_diagnostic": self.max_diagnostic,
        }


def census(
    f,
    x,
    depth=DEFAULT_DEPTH,
    samples=200,
    seed=None,
    rng=None,
    exhaustive=False,
    cluster_tolerance=CLUSTER_TOLERANCE,
    dispersion_threshold=DISPERSION_THRESHOLD,
    probe=None,
    gap=DIAGNOSTIC_GAP,
):
    """Census of unstable directions at x over pre-histories of given depth.

    Sampled mode draws `samples` uniform branch words; exhaustive mode
    enumerates all degree^depth of them (subject to the enumeration cap
    checked by all_prehistories).
    """
    from .prehistory import all_prehistories

    x = np.asarray(x, dtype=float)
    if exhaustive:
        phs = all_prehistories(f, x, depth)
        words = np.array([p.word for p in phs], dtype=np.int64)
        pts = np.stack([p.points for p in phs])
        mode = "exhaustive"
    else:
        if rng is None:
            rng = np.random.default_rng(seed)
        words = rng.integers(0, f.degree, size=(samples, depth))
        # realized via the same batched backward solver as Prehistory
        pts = _realize_words(f, np.broadcast_to(x, (samples, f.dim)), words)
        mode = "sampled"
    if probe is None:
        probe = f.base.e_u
    dirs, diags = _push_chain(f, pts, np.asarray(probe, float), gap)
    labels = cluster_directions(dirs, cluster_tolerance)
    return DirectionCensus(
        base=x,
        depth=depth,
        mode=mode,
        words=tuple(tuple(int(b) for b in w) for w in words),
        directions=dirs,
        labels=labels,
        cluster_count=int(labels.max()) + 1 if labels.size else 0,
        dispersion=max_pairwise_angle(dirs),
        cluster_tolerance=cluster_tolerance,
        dispersion_threshold=dispersion_threshold,
        max_diagnostic=float(np.max(diags)),
    )


@dataclass(frozen=True)
class MonotonicityReport:
    """Cluster counts of accumulated directions along a forward orbit."""

    points: np.ndarray         # (steps+1, n) orbit points
    counts: tuple              # cluster count at each orbit point
    set_sizes: tuple           # directions tracked at each point
    dispersions: tuple
    tolerances: tuple          # per-level clustering tolerance
    non_decreasing: bool


# Pushing a direction pair forward contracts its angle by roughly the
# stable/unstable stretch ratio, so distinctions resolved at one orbit
# point reappear this much closer at the next.  The clustering tolerance
# must shrink at least that fast or resolved clusters spuriously merge.
TOLERANCE_DECAY_SAFETY = 0.7


def monotonicity_check(
    f,
    x,
    steps,
    depth=DEFAULT_DEPTH,
    samples=200,
    seed=0,
    cluster_tolerance=CLUSTER_TOLERANCE,
    tolerance_decay=None,
):
    """Track how the set of unstable directions grows along a forward orbit.

    At each orbit point the directions carried from the previous point
    are pushed by the derivative and merged with a fresh census.  The
    cluster count of the merged set should never decrease: pushing
    forward maps distinct pre-histories to distinct pre-histories.  At
    a fixed tolerance that is invisible numerically, because the push
    also contracts every angle; the per-level tolerance therefore decays
    geometrically at the linear model's projective contraction rate
    (times a safety factor), keeping once-resolved clusters resolved.
    """
    x = np.asarray(x, dtype=float)
    root = np.random.default_rng(seed)
    seeds = root.integers(0, 2**63 - 1, size=steps + 1)
    if tolerance_decay is None:
        ratio = abs(f.base.stable_eigenvalue / f.base.unstable_eigenvalue)
        tolerance_decay = TOLERANCE_DECAY_SAFETY * ratio

    pts = [x]
    c0 = census(f, x, depth=depth, samples=samples, seed=int(seeds[0]),
                cluster_tolerance=cluster_tolerance)
    carried = c0.directions
    counts = [c0.cluster_count]
    sizes = [carried.shape[0]]
    disps = [c0.dispersion]
    tols = [cluster_tolerance]
    current = x
    for j in range(1, steps + 1):
        jac = f.derivative(current)
        pushed = canonical_direction(carried @ jac.T)
        current = f.apply(current)
        pts.append(current)
        fresh = census(f, current, depth=depth, samples=samples,
                       seed=int(seeds[j]), cluster_tolerance=cluster_tolerance)
        carried = np.vstack([pushed, fresh.directions])
        tols.append(tols[-1] * tolerance_decay)
        labels = cluster_directions(carried, tols[-1])
        counts.append(int(labels.max()) + 1)
        sizes.append(carried.shape[0])
        disps.append(max_pairwise_angle(carried))
    non_dec = all(b >= a for a, b in zip(counts, counts[1:]))
    return MonotonicityReport(
        points=np.stack(pts),
        counts=tuple(counts),
        set_sizes=tuple(sizes),
        dispersions=tuple(disps),
        tolerances=tuple(tols),
        non_decreasing=non_dec,
    )


def angle_decay(f, x, u, v, steps):
    """Projective angles between two pushed tangent lines along an orbit.

    Both lines converge to the orbit's unstable direction, so the angle
    sequence decays geometrically at the stable/unstable spectral ratio.
    Broadcasts over leading axes of x; returns (steps+1,) + batch shape.
    """
    from .torus import project

    x = np.asarray(x, dtype=float)
    batch = x.shape[:-1]
    u = np.broadcast_to(np.asarray(u, dtype=float), x.shape).copy()
    v = np.broadcast_to(np.asarray(v, dtype=float), x.shape).copy()
    angles = np.empty((steps + 1,) + batch)
    angles[0] = projective_angle(u, v)
    for j in range(steps):
        z, (u, v) = f._apply_and_tangent(x, (u, v))
        x = project(z)
        u = u / np.linalg.norm(u, axis=-1, keepdims=True)
        v = v / np.linalg.norm(v, axis=-1, keepdims=True)
        angles[j + 1] = projective_angle(u, v)
    return angles
