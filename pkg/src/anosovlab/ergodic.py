"""Birkhoff averages of trigonometric observables.

Volume is invariant for the conservative maps built here, and the
integral of any nonconstant character cos/sin(2 pi k.x) against volume
is exactly zero.  Comparing time averages over many starts against
those exact space averages gives a cheap equidistribution check, and
the spread across starts should shrink like 1/sqrt(n).

A warning about pure float orbits of the linear model: every binary
double is a dyadic rational, and an integer matrix with even
determinant eventually annihilates the dyadic lattice.  For the
reference matrix A = [[3, 1], [1, 1]] one has A^2 = 2 B with B
invertible over Z, so every representable point lands exactly on the
fixed point 0 within about two iterations per mantissa bit (~110
steps), and long time averages measure the fixed point instead of
volume.  The averaging loop therefore adds a deterministic, seeded
dither far below every test tolerance (default 2^-30) to each iterate.
By the shadowing property of Anosov maps such a pseudo-orbit stays
uniformly close to a true orbit of the same map, so the dithered
average is a Birkhoff average of the map at a nearby, non-dyadic
start.  Pass dither=0.0 to recover the literal single-orbit formula.
"""

from dataclasses import dataclass

import numpy as np

from .torus import project

__all__ = [
    "Observable",
    "ObservableRow",
    "ErgodicityReport",
    "ConservativityError",
    "birkhoff_average",
    "birkhoff_averages",
    "ergodicity_test",
    "spread_scaling",
]

TWO_PI = 2.0 * np.pi
MEAN_TOL = 0.01
STD_TOL = 0.02
DITHER = 2.0**-30
_DITHER_SEED = 0x5EED


class ConservativityError(RuntimeError):
    """Raised when a map fails the Jacobian-determinant volume check."""


@dataclass(frozen=True)
class Observable:
    """Trigonometric character cos/sin(2 pi k.x) or a constant."""

    kind: str                  # "cos", "sin", or "const"
    k: tuple = ()
    value: float = 1.0         # constant observables only

    def __post_init__(self):
        if self.kind not in ("cos", "sin", "const"):
            raise ValueError(f"unknown observable kind {self.kind!r}")
        object.__setattr__(self, "k", tuple(int(c) for c in self.k))
        if self.kind != "const" and not any(self.k):
            raise ValueError(
                "trigonometric observables need a nonzero frequency vector; "
                "use kind='const' for constants"
            )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "const":
            return np.full(x.shape[:-1], self.value)
        phase = TWO_PI * (x @ np.asarray(self.k, dtype=float))
        return np.cos(phase) if self.kind == "cos" else np.sin(phase)

    @property
    def exact_mean(self):
        """Integral against normalized volume on the torus."""
        return self.value if self.kind == "const" else 0.0

    @property
    def label(self):
        if self.kind == "const":
            return f"const:{self.value}"
        return f"{self.kind}:" + ",".join(str(c) for c in self.k)

    @classmethod
    def parse(cls, text):
        """Parse 'cos:1,0', 'sin:2,-1', or 'const:0.5'."""
        kind, _, rest = text.partition(":")
        kind = kind.strip()
        if kind == "const":
            return cls(kind="const", value=float(rest))
        return cls(kind=kind, k=tuple(int(c) for c in rest.split(",")))


def _check_conservative(f, tol=1e-9, samples=512, seed=12345):
    rng = np.random.default_rng(seed)
    pts = rng.random((samples, f.dim))
    dets = np.abs(f.jacobian_determinant(pts))
    target = abs(float(f.base.determinant))
    worst = float(np.max(np.abs(dets - target))) / target
    if worst > tol:
        raise ConservativityError(
            f"|det Df| deviates from |det A| by relative {worst:.3e}; "
            "the ergodicity checks assume a volume-preserving map"
        )
    return worst


def birkhoff_averages(f, observables, starts, steps, checkpoints=None,
                      dither=DITHER, rng=None):
    """Time averages of several observables over a batch of orbits.

    starts has shape (m, n).  Returns (len(observables), m) averages
    after `steps` iterates; with `checkpoints` (sorted step counts) it
    instead returns {checkpoint: (len(observables), m)} from one pass.

    Each iterate is displaced by a deterministic uniform dither of
    amplitude `dither` (see the module docstring for why the linear
    model needs this); dither=0.0 averages the literal float orbit.
    """
    starts = project(np.asarray(starts, dtype=float))
    if starts.ndim == 1:
        starts = starts[None, :]
    marks = sorted(checkpoints) if checkpoints is not None else [steps]
    if marks[-1] != steps:
        raise ValueError("last checkpoint must equal steps")
    if dither > 0.0 and rng is None:
        rng = np.random.default_rng(_DITHER_SEED)
    x = starts.copy()
    acc = np.zeros((len(observables), starts.shape[0]))
    out = {}
    done = 0
    for mark in marks:
        while done < mark:
            for i, phi in enumerate(observables):
                acc[i] += phi(x)
            x = f.apply(x)
            if dither > 0.0:
                x = project(x + rng.uniform(-dither, dither, size=x.shape))
            done += 1
        out[mark] = acc / mark
    return out if checkpoints is not None else out[steps]


def birkhoff_average(f, phi, x, steps, dither=DITHER, rng=None):
    """Time average of one observable along one orbit."""
    return float(
        birkhoff_averages(f, [phi], np.asarray(x)[None, :], steps,
                          dither=dither, rng=rng)[0, 0]
    )


@dataclass(frozen=True)
class ObservableRow:
    """Equidistribution verdict for one observable across many starts."""

    label: str
    exact_mean: float
    mean: float                # mean of per-start time averages
    std: float                 # spread across starts
    min: float
    max: float
    mean_ok: bool
    std_ok: bool


@dataclass(frozen=True)
class ErgodicityReport:
    """Birkhoff-average equidistribution test against exact volume integrals."""

    rows: tuple
    averages: np.ndarray       # (n_observables, n_starts)
    starts: np.ndarray
    steps: int
    mean_tol: float
    std_tol: float
    det_defect: float
    passed: bool


def ergodicity_test(
    f,
    observables,
    n_starts=100,
    steps=100_000,
    seed=0,
    mean_tol=MEAN_TOL,
    std_tol=STD_TOL,
    det_tol=1e-9,
    dither=DITHER,
):
    """Compare orbit averages of characters with their volume integrals.

    Refuses non-conservative maps.  Passes when, for every observable,
    the mean of per-start averages is within mean_tol of the exact
    integral and the spread across starts is below std_tol.
    """
    defect = _check_conservative(f, tol=det_tol)
    rng = np.random.default_rng(seed)
    starts = rng.random((n_starts, f.dim))
    avgs = birkhoff_averages(f, observables, starts, steps,
                             dither=dither, rng=rng)
    rows = []
    for phi, vals in zip(observables, avgs):
        mean = float(np.mean(vals))
        std = float(np.std(vals))
        rows.append(
            ObservableRow(
                label=phi.label,
                exact_mean=phi.exact_mean,
                mean=mean,
                std=std,
                min=float(np.min(vals)),
                max=float(np.max(vals)),
                mean_ok=abs(mean - phi.exact_mean) <= mean_tol,
                std_ok=std <= std_tol,
            )
        )
    return ErgodicityReport(
        rows=tuple(rows),
        averages=avgs,
        starts=starts,
        steps=steps,
        mean_tol=mean_tol,
        std_tol=std_tol,
        det_defect=defect,
        passed=all(r.mean_ok and r.std_ok for r in rows),
    )


def spread_scaling(f, observables, n_starts, steps_list, seed=0,
                   dither=DITHER):
    """Spread of per-start averages at several orbit lengths, one pass.

    Returns {steps: (len(observables),) std across starts}; for an
    equidistributing conservative map the spread drops like 1/sqrt(n).
    """
    rng = np.random.default_rng(seed)
    starts = rng.random((n_starts, f.dim))
    marks = sorted(int(s) for s in steps_list)
    per_mark = birkhoff_averages(f, observables, starts, max(marks),
                                 checkpoints=marks, dither=dither, rng=rng)
    return {m: np.std(per_mark[m], axis=1) for m in marks}
