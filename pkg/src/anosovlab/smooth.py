"""Conservative smooth perturbations of hyperbolic toral endomorphisms.

A map is built as f = S_m o ... o S_1 o A where A is an analyzed integer
matrix and each S_j is a sinusoidal shear moving one coordinate by a
periodic function of another.  Every such composition is volume
preserving, descends to the torus, and keeps the deck transformation
group of A: the lift satisfies F(p + k) = F(p) + A k for k in Z^n.
"""

import math
from dataclasses import dataclass

import numpy as np

from .torus import project
from .linear import LinearEndo, analyze

__all__ = [
    "ShearMap",
    "SmoothEndo",
    "HyperbolicityCertificate",
    "NewtonDivergenceError",
    "ConeVerificationError",
    "build_endo",
    "shipped_endo",
    "SHIPPED_COMPOSITIONS",
    "REFERENCE_MATRIX",
    "verify_cones",
    "cone_fields",
    "c1_distance_to_linear",
]

TWO_PI = 2.0 * math.pi

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
NEWTON_MAX_STEP = 0.5


class NewtonDivergenceError(RuntimeError):
    """Raised when an inverse-branch Newton solve fails to converge."""


class ConeVerificationError(RuntimeError):
    """Raised when cone-field certification is required but fails."""


@dataclass(frozen=True)
class ShearMap:
    """Volume-preserving shear z[axis] += amplitude * sin(2*pi*(freq*z[driver] + phase))."""

    axis: int
    driver: int
    amplitude: float
    frequency: int = 1
    phase: float = 0.0

    def __post_init__(self):
        if self.axis == self.driver:
            raise ValueError("shear axis must differ from its driver coordinate")
        if self.frequency < 1 or self.frequency != int(self.frequency):
            raise ValueError("shear frequency must be a positive integer")

    def displacement(self, t):
        # reducing the phase argument mod 1 keeps F(p + k) = F(p) + A k
        # exact to the last bit, not just up to trig argument drift
        arg = (self.frequency * np.asarray(t, dtype=float) + self.phase) % 1.0
        return self.amplitude * np.sin(TWO_PI * arg)

    def slope(self, t):
        arg = (self.frequency * np.asarray(t, dtype=float) + self.phase) % 1.0
        return self.amplitude * TWO_PI * self.frequency * np.cos(TWO_PI * arg)

    def apply(self, z):
        z = np.array(z, dtype=float, copy=True)
        z[..., self.axis] += self.displacement(z[..., self.driver])
        return z

    def invert(self, w):
        # the driver coordinate is untouched, so the shear inverts in closed form
        w = np.array(w, dtype=float, copy=True)
        w[..., self.axis] -= self.displacement(w[..., self.driver])
        return w


class SmoothEndo:
    """Composition f = S_m o ... o S_1 o A acting on T^n and its cover."""

    def __init__(self, base: LinearEndo, shears=()):
        self.base = base
        self.shears = tuple(shears)
        n = base.dim
        for s in self.shears:
            if not (0 <= s.axis < n and 0 <= s.driver < n):
                raise ValueError(f"shear indices out of range for dimension {n}")

    @property
    def dim(self):
        return self.base.dim

    @property
    def degree(self):
        return self.base.degree

    @property
    def is_linear(self):
        return all(s.amplitude == 0.0 for s in self.shears)

    # -- forward map ---------------------------------------------------

    def lift_apply(self, p):
        """Canonical lift F: R^n -> R^n, equivariant under k -> A k."""
        z = np.asarray(p, dtype=float) @ self.base.matrix.T
        for s in self.shears:
            z = s.apply(z)
        return z

    def apply(self, x):
        """Induced torus map: project(F(x)) with x read in [0, 1)^n."""
        return project(self.lift_apply(x))

    def derivative(self, x):
        """Jacobian Df at torus or cover points, shape (..., n, n)."""
        x = np.asarray(x, dtype=float)
        z = x @ self.base.matrix.T
        jac = np.broadcast_to(
            self.base.matrix, z.shape[:-1] + (self.dim, self.dim)
        ).copy()
        for s in self.shears:
            c = s.slope(z[..., s.driver])
            jac[..., s.axis, :] += c[..., None] * jac[..., s.driver, :]
            z = s.apply(z)
        return jac

    def _apply_and_tangent(self, x, vectors):
        """One map step together with pushed tangent vectors.

        vectors is a tuple of (..., n) arrays over the same base points;
        returns (f(x) on the cover, pushed tuple).  Avoids materializing
        full Jacobians in long orbit loops.
        """
        x = np.asarray(x, dtype=float)
        z = x @ self.base.matrix.T
        pushed = [np.asarray(v, dtype=float) @ self.base.matrix.T for v in vectors]
        for s in self.shears:
            c = s.slope(z[..., s.driver])
            for w in pushed:
                w[..., s.axis] += c * w[..., s.driver]
            z = s.apply(z)
        return z, tuple(pushed)

    def jacobian_determinant(self, x):
        """det Df(x); constant at det A for any shear composition."""
        jac = self.derivative(x)
        return np.linalg.det(jac)

    # -- inverse branches ----------------------------------------------

    def _newton_inverse(self, targets, seeds, context="inverse"):
        """Solve F(y) = target rows by damped Newton from the given seeds.

        The residual tolerance scales with the target magnitude: deep
        backward chains on the cover reach points where an absolute
        1e-12 would be smaller than one ulp of the arithmetic.
        """
        y = np.array(seeds, dtype=float, copy=True)
        targets = np.asarray(targets, dtype=float)
        tol = NEWTON_TOL * np.maximum(
            1.0, np.sqrt(np.sum(targets * targets, axis=-1))
        )
        remaining = np.arange(y.shape[0])
        for _ in range(NEWTON_MAX_ITER):
            res = self.lift_apply(y[remaining]) - targets[remaining]
            good = np.sqrt(np.sum(res * res, axis=-1)) < tol[remaining]
            remaining = remaining[~good]
            if remaining.size == 0:
                break
            res = res[~good]
            jac = self.derivative(y[remaining])
            step = np.linalg.solve(jac, res[..., None])[..., 0]
            norms = np.sqrt(np.sum(step * step, axis=-1))
            over = norms > NEWTON_MAX_STEP
            if np.any(over):
                step[over] *= (NEWTON_MAX_STEP / norms[over])[:, None]
            y[remaining] -= step
        else:
            res = self.lift_apply(y[remaining]) - targets[remaining]
            good = np.sqrt(np.sum(res * res, axis=-1)) < tol[remaining]
            remaining = remaining[~good]
        if remaining.size:
            bad = int(remaining[0])
            res = self.lift_apply(y[bad]) - targets[bad]
            raise NewtonDivergenceError(
                f"{context}: Newton failed to reach residual {NEWTON_TOL} "
                f"for row {bad} (|residual| = {np.linalg.norm(res):.3e})"
            )
        return y

    def inverse_lift(self, q, seed=None):
        """The unique cover preimage F^{-1}(q), Newton-seeded at A^{-1} q."""
        q = np.asarray(q, dtype=float)
        single = q.ndim == 1
        q2 = q[None, :] if single else q.reshape(-1, self.dim)
        if seed is None:
            seeds = q2 @ self.base.inverse.T
        else:
            seeds = np.asarray(seed, dtype=float).reshape(q2.shape)
        y = self._newton_inverse(q2, seeds, context="inverse_lift")
        return y[0] if single else y.reshape(q.shape)

    def preimages(self, x):
        """All degree-many torus preimages of x, rows ordered by branch label.

        Row b solves F(y) = x + k_b for the b-th coset representative k_b.
        """
        x = project(np.asarray(x, dtype=float))
        if x.ndim != 1:
            raise ValueError("preimages expects a single torus point")
        targets = x + self.base.coset_reps
        seeds = targets @ self.base.inverse.T
        y = self._newton_inverse(targets, seeds, context="preimages")
        return project(y)

    def preimage_branches(self, x, branches):
        """Branch-labelled preimages for a batch: x (m, n), branches (m,) ints."""
        x = project(np.asarray(x, dtype=float))
        targets = x + self.base.coset_reps[branches]
        seeds = targets @ self.base.inverse.T
        y = self._newton_inverse(targets, seeds, context="preimage_branches")
        return project(y)

    def branch_of(self, y, x):
        """Which branch label sends preimage y to x, i.e. F(y) = x + k_b."""
        offset = self.lift_apply(project(y)) - project(x)
        k = np.rint(offset).astype(np.int64)
        if np.max(np.abs(offset - k)) > 1e-9:
            raise ValueError("y is not a preimage of x")
        return self.base.branch_of_offset(k)

    def __repr__(self):
        return (
            f"SmoothEndo(matrix={self.base.matrix_int.tolist()}, "
            f"shears={list(self.shears)!r})"
        )


def build_endo(matrix, shears=(), tol_hyp=1e-9):
    """Analyze the integer part and attach shears in one call."""
    return SmoothEndo(analyze(matrix, tol_hyp=tol_hyp), shears)


# Named shear compositions shipped with the package, all on the reference
# matrix [[3, 1], [1, 1]].  Every entry is volume preserving by construction
# and (except "linear") breaks the constancy of the unstable direction.
SHIPPED_COMPOSITIONS = {
    "linear": (),
    "shear02": (ShearMap(0, 1, 0.02),),
    "shear05": (ShearMap(0, 1, 0.05),),
    "shear10": (ShearMap(0, 1, 0.10),),
    "two_shears": (
        ShearMap(0, 1, 0.02),
        ShearMap(1, 0, 0.015, frequency=2, phase=0.25),
    ),
}

REFERENCE_MATRIX = ((3, 1), (1, 1))


def shipped_endo(name):
    """Build one of the named compositions on the reference matrix."""
    try:
        shears = SHIPPED_COMPOSITIONS[name]
    except KeyError:
        raise KeyError(
            f"unknown composition {name!r}; choose from "
            f"{sorted(SHIPPED_COMPOSITIONS)}"
        ) from None
    return build_endo(REFERENCE_MATRIX, shears)


# -- C1 distance and cone certification --------------------------------


def _grid(resolution, dim):
    axes = [np.arange(resolution) / resolution] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def c1_distance_to_linear(f, resolution=128):
    """Max over a grid of |F(x) - A x| and the spectral norm of Df(x) - A.

    Returns (displacement, derivative_gap); both vanish identically when
    every shear has zero amplitude.
    """
    pts = _grid(resolution, f.dim)
    disp = f.lift_apply(pts) - pts @ f.base.matrix.T
    d0 = float(np.max(np.sqrt(np.sum(disp * disp, axis=-1)))) if pts.size else 0.0
    gap = f.derivative(pts) - f.base.matrix
    sv = np.linalg.svd(gap, compute_uv=False)
    return d0, float(np.max(sv[..., 0]))


@dataclass(frozen=True)
class HyperbolicityCertificate:
    """Grid-checked invariant-cone certificate in the axes of the linear part.

    Expansion and contraction are measured through projection onto the
    reference unstable/stable axes of A, so for f = A the bounds equal
    the eigenvalue moduli exactly.  constant_c = 1/cos(halfangle) converts
    projected growth into a norm bound for vectors inside the cone.
    """

    cone_halfangle_u: float
    cone_halfangle_s: float
    expansion_bound: float     # lambda_min^u, want > 1
    contraction_bound: float   # lambda_max^s, want < 1
    constant_c: float
    grid_resolution: int
    verified: bool
    unstable_angle_margin: float  # halfangle minus worst image angle
    stable_angle_margin: float
    witness: tuple | None      # worst grid point when not verified

    def summary(self):
        return {
            "verified": self.verified,
            "expansion_bound": self.expansion_bound,
            "contraction_bound": self.contraction_bound,
            "constant_c": self.constant_c,
            "cone_halfangle_u": self.cone_halfangle_u,
            "cone_halfangle_s": self.cone_halfangle_s,
            "unstable_angle_margin": self.unstable_angle_margin,
            "stable_angle_margin": self.stable_angle_margin,
            "grid_resolution": self.grid_resolution,
            "witness": None if self.witness is None else list(self.witness),
        }


def _cone_directions(center, normal, halfangle, samples):
    t = np.linspace(-halfangle, halfangle, samples)
    return np.cos(t)[:, None] * center + np.sin(t)[:, None] * normal


def cone_fields(
    f,
    halfangle_u=0.3,
    halfangle_s=0.3,
    grid_resolution=256,
    cone_samples=9,
):
    """Per-grid-point cone statistics used by verify_cones and reports.

    Returns a dict with the grid points, the worst image angle of each
    cone, the minimal projected unstable stretch under Df, and the
    minimal projected stable stretch under Df^{-1}.
    """
    if f.dim != 2 or f.base.e_u is None or f.base.e_s is None:
        raise NotImplementedError("cone verification requires a 2-d one-dim splitting")
    e_u = f.base.e_u
    e_s = f.base.e_s
    u_perp = np.array([-e_u[1], e_u[0]])
    s_perp = np.array([-e_s[1], e_s[0]])

    pts = _grid(grid_resolution, 2)
    jac = f.derivative(pts)                      # (G, 2, 2)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    inv = np.empty_like(jac)
    inv[:, 0, 0] = jac[:, 1, 1] / det
    inv[:, 1, 1] = jac[:, 0, 0] / det
    inv[:, 0, 1] = -jac[:, 0, 1] / det
    inv[:, 1, 0] = -jac[:, 1, 0] / det

    vu = _cone_directions(e_u, u_perp, halfangle_u, cone_samples)   # (T, 2)
    vs = _cone_directions(e_s, s_perp, halfangle_s, cone_samples)

    img_u = np.einsum("gij,tj->gti", jac, vu)
    ang_u = np.arctan2(np.abs(img_u @ u_perp), np.abs(img_u @ e_u))
    stretch_u = np.abs(img_u @ e_u) / np.abs(vu @ e_u)[None, :]

    img_s = np.einsum("gij,tj->gti", inv, vs)
    ang_s = np.arctan2(np.abs(img_s @ s_perp), np.abs(img_s @ e_s))
    stretch_s = np.abs(img_s @ e_s) / np.abs(vs @ e_s)[None, :]

    return {
        "points": pts,
        "max_angle_u": np.max(ang_u, axis=1),
        "max_angle_s": np.max(ang_s, axis=1),
        "min_stretch_u": np.min(stretch_u, axis=1),
        "min_stretch_s": np.min(stretch_s, axis=1),
    }


def verify_cones(
    f,
    halfangle_u=0.3,
    halfangle_s=0.3,
    grid_resolution=256,
    cone_samples=9,
    fields=None,
):
    """Certify strict cone invariance with expansion/contraction on a grid.

    Only implemented for n = 2 with one-dimensional reference splitting.
    The unstable cone around e_u^A must map strictly into itself with
    projected stretch > 1 at every grid point; the stable cone around
    e_s^A must do the same under the inverse derivative.
    """
    if fields is None:
        fields = cone_fields(f, halfangle_u, halfangle_s, grid_resolution,
                             cone_samples)
    pts = fields["points"]
    margin_u = halfangle_u - float(np.max(fields["max_angle_u"]))
    margin_s = halfangle_s - float(np.max(fields["max_angle_s"]))
    lam_u = float(np.min(fields["min_stretch_u"]))
    lam_s = 1.0 / float(np.min(fields["min_stretch_s"]))

    verified = margin_u > 0.0 and margin_s > 0.0 and lam_u > 1.0 and lam_s < 1.0
    witness = None
    if not verified:
        scores = np.stack(
            [
                fields["max_angle_u"] - halfangle_u,
                fields["max_angle_s"] - halfangle_s,
                1.0 - fields["min_stretch_u"],
                1.0 - fields["min_stretch_s"],
            ]
        )
        witness = tuple(float(c) for c in pts[int(np.argmax(np.max(scores, axis=0)))])

    return HyperbolicityCertificate(
        cone_halfangle_u=halfangle_u,
        cone_halfangle_s=halfangle_s,
        expansion_bound=lam_u,
        contraction_bound=lam_s,
        constant_c=1.0 / min(math.cos(halfangle_u), math.cos(halfangle_s)),
        grid_resolution=grid_resolution,
        verified=verified,
        unstable_angle_margin=margin_u,
        stable_angle_margin=margin_s,
        witness=witness,
    )
