"""Flat-torus arithmetic on T^n = R^n / Z^n and its universal cover R^n.

Points on the torus are represented by coordinates in the fundamental
domain [0, 1)^n; cover points are arbitrary real vectors.  All functions
broadcast over leading axes, with coordinates on the last axis.
"""

import numpy as np

__all__ = [
    "project",
    "lift_near",
    "torus_distance",
    "prehistory_metric",
    "DepthMismatchError",
]


class DepthMismatchError(ValueError):
    """Raised when two pre-history truncations have different depths."""


def project(p):
    """Reduce cover coordinates mod 1 into the fundamental domain [0, 1)^n."""
    r = np.asarray(p, dtype=float) % 1.0
    # x % 1.0 can round up to exactly 1.0 for tiny negative x
    return np.where(r == 1.0, 0.0, r)


def lift_near(x, ref):
    """Lift the torus point x to the cover representative nearest to ref.

    Each coordinate of the result differs from ref by an offset in
    (-1/2, 1/2]; ties at distance exactly 1/2 resolve to +1/2.
    """
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref, dtype=float)
    delta = project(x - ref)
    delta = np.where(delta > 0.5, delta - 1.0, delta)
    return ref + delta


def torus_distance(x, y):
    """Geodesic distance on the flat torus (Euclidean on shortest offsets)."""
    d = project(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    d = np.minimum(d, 1.0 - d)
    return np.sqrt(np.sum(d * d, axis=-1))


def _points_of(obj):
    pts = getattr(obj, "points", obj)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2:
        raise ValueError(f"expected a (depth+1, n) array of points, got shape {pts.shape}")
    return pts


def prehistory_metric(a, b):
    """Weighted distance sum_i d(a_i, b_i) / 2^i over two equal-depth truncations.

    Accepts (depth+1, n) arrays or any objects exposing one via a
    ``points`` attribute.  Row i holds the i-th backward iterate, so the
    present-day points carry weight 1 and deeper past fades geometrically.
    """
    pa = _points_of(a)
    pb = _points_of(b)
    if pa.shape != pb.shape:
        raise DepthMismatchError(
            f"truncation shapes differ: {pa.shape} vs {pb.shape}"
        )
    weights = 0.5 ** np.arange(pa.shape[0])
    return float(np.sum(weights * torus_distance(pa, pb)))
