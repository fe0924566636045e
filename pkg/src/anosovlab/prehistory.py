"""Pre-histories: backward orbits of a torus endomorphism.

A degree-d endomorphism has d preimage branches at every point, so a
backward orbit of depth N is coded by a word (b_1, ..., b_N) over the
branch alphabet {0, ..., d-1}.  Realizing the word gives the points
x_0, x_{-1}, ..., x_{-N} with f(x_{-i}) = x_{-i+1} and b_i naming the
branch chosen at step i.
"""

from dataclasses import dataclass

import numpy as np

from .torus import project, torus_distance

__all__ = [
    "Prehistory",
    "EnumerationCapError",
    "prehistory_from_word",
    "random_prehistory",
    "random_prehistories",
    "all_prehistories",
    "extend",
    "shift_forward",
    "truncate",
    "verify",
    "word_index",
]

ENUMERATION_CAP = 2 ** 20
MIN_WORD_DEPTH = 0


class EnumerationCapError(ValueError):
    """Raised when exhaustive enumeration would exceed the size cap."""


@dataclass(frozen=True, eq=False)
class Prehistory:
    """One realized backward orbit: points[i] = x_{-i}, word[i-1] = branch b_i."""

    points: np.ndarray        # (depth+1, n) torus points
    word: tuple               # (depth,) branch labels in {0, ..., degree-1}

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "word", tuple(int(b) for b in self.word))
        if pts.shape[0] != len(self.word) + 1:
            raise ValueError(
                f"points rows ({pts.shape[0]}) must be word length + 1 "
                f"({len(self.word) + 1})"
            )
        pts.setflags(write=False)

    @property
    def base(self):
        return self.points[0]

    @property
    def depth(self):
        return len(self.word)

    @property
    def dim(self):
        return self.points.shape[1]

    def __repr__(self):
        word = "".join(str(b) for b in self.word[:12])
        if self.depth > 12:
            word += "..."
        return f"Prehistory(base={self.base.tolist()}, depth={self.depth}, word='{word}')"


def _realize_words(f, bases, words):
    """Batch-realize backward orbits: bases (m, n), words (m, depth) ints.

    Returns points (m, depth+1, n).  All rows advance one backward step
    together, so the Newton solves are vectorized across the batch.
    """
    bases = project(np.asarray(bases, dtype=float))
    words = np.asarray(words, dtype=np.int64)
    m, depth = words.shape
    pts = np.empty((m, depth + 1, bases.shape[-1]))
    pts[:, 0] = bases
    current = bases
    for i in range(depth):
        current = f.preimage_branches(current, words[:, i])
        pts[:, i + 1] = current
    return pts


def prehistory_from_word(f, x, word):
    """Realize the backward orbit of x coded by the given branch word."""
    word = tuple(int(b) for b in word)
    for b in word:
        if not 0 <= b < f.degree:
            raise ValueError(f"branch label {b} outside alphabet of degree {f.degree}")
    pts = _realize_words(f, np.asarray(x, dtype=float)[None, :],
                         np.array([word], dtype=np.int64).reshape(1, len(word)))
    return Prehistory(points=pts[0], word=word)


def random_prehistory(f, x, depth, seed=None, rng=None):
    """One uniformly random depth-N pre-history of x."""
    if rng is None:
        rng = np.random.default_rng(seed)
    word = tuple(int(b) for b in rng.integers(0, f.degree, size=depth))
    return prehistory_from_word(f, x, word)


def random_prehistories(f, x, count, depth, seed=None, rng=None):
    """Independent uniformly random pre-histories of a common base point."""
    if rng is None:
        rng = np.random.default_rng(seed)
    words = rng.integers(0, f.degree, size=(count, depth))
    bases = np.broadcast_to(np.asarray(x, dtype=float), (count, f.dim))
    pts = _realize_words(f, bases, words)
    return [Prehistory(points=pts[i], word=tuple(words[i])) for i in range(count)]


def all_prehistories(f, x, depth, cap=ENUMERATION_CAP):
    """Every depth-N pre-history of x, in lexicographic word order."""
    d = f.degree
    total = d ** depth
    if total > cap:
        raise EnumerationCapError(
            f"degree {d} at depth {depth} yields {total} pre-histories, "
            f"more than the cap of {cap}"
        )
    digits = np.arange(total, dtype=np.int64)
    words = np.empty((total, depth), dtype=np.int64)
    for i in range(depth - 1, -1, -1):
        words[:, i] = digits % d
        digits //= d
    bases = np.broadcast_to(np.asarray(x, dtype=float), (total, f.dim))
    pts = _realize_words(f, bases, words)
    return [Prehistory(points=pts[i], word=tuple(words[i])) for i in range(total)]


def word_index(word, degree):
    """Lexicographic rank of a word within all words of its length."""
    idx = 0
    for b in word:
        idx = idx * degree + int(b)
    return idx


def extend(p, f, branch):
    """Deepen a pre-history by one more backward step along `branch`."""
    branch = int(branch)
    if not 0 <= branch < f.degree:
        raise ValueError(f"branch label {branch} outside alphabet of degree {f.degree}")
    tail = f.preimage_branches(p.points[-1][None, :], np.array([branch]))[0]
    pts = np.vstack([p.points, tail[None, :]])
    return Prehistory(points=pts, word=p.word + (branch,))


def shift_forward(p, f):
    """Pre-history of f(base) obtained by prepending the forward image.

    The old base becomes step -1; its branch label with respect to the
    new base is recovered from the deck offset of the lift.
    """
    new_base = f.apply(p.base)
    b = f.branch_of(p.base, new_base)
    pts = np.vstack([new_base[None, :], p.points])
    return Prehistory(points=pts, word=(int(b),) + p.word)


def truncate(p, depth):
    """Shallower view of the same pre-history."""
    if depth > p.depth:
        raise ValueError(f"cannot truncate depth {p.depth} to {depth}")
    return Prehistory(points=p.points[: depth + 1].copy(), word=p.word[:depth])


def verify(p, f, tol=1e-9):
    """Check f(x_{-i}) = x_{-i+1} on the torus for every step; max defect."""
    images = f.apply(p.points[1:])
    defect = float(np.max(torus_distance(images, p.points[:-1]))) if p.depth else 0.0
    if defect > tol:
        raise ValueError(f"pre-history violates the orbit relation by {defect:.3e}")
    return defect
