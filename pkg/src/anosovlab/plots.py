"""Figure builders for the command-line driver (Agg backend, file output)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "cone_heatmaps",
    "preimage_scatter",
    "dispersion_histogram",
    "decay_curves",
    "exponent_histogram",
    "leaf_figure",
    "ratio_scatter",
    "ergodic_figure",
]

plt.rcParams.update({
    "figure.figsize": (7.0, 5.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.bbox": "tight",
})


def cone_heatmaps(res, min_stretch_u, min_stretch_s, title):
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
    for ax, field, label in (
        (axes[0], min_stretch_u, "min projected unstable stretch"),
        (axes[1], min_stretch_s, "min projected inverse stable stretch"),
    ):
        im = ax.imshow(
            field.reshape(res, res).T,
            origin="lower",
            extent=(0, 1, 0, 1),
            cmap="viridis",
        )
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_title(label)
        ax.grid(False)
        fig.colorbar(im, ax=ax)
    fig.suptitle(title)
    return fig


def preimage_scatter(points_by_level, base):
    fig, ax = plt.subplots()
    cmap = plt.get_cmap("viridis")
    depth = max(points_by_level)
    for level in sorted(points_by_level):
        pts = points_by_level[level]
        ax.scatter(
            pts[:, 0], pts[:, 1],
            s=max(2.0, 24.0 / (1 + level)),
            color=cmap(level / max(depth, 1)),
            label=f"level {level}" if level in (0, depth) else None,
        )
    ax.scatter([base[0]], [base[1]], marker="*", s=120, color="crimson",
               label="base point", zorder=5)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("backward-orbit levels (color = depth)")
    ax.legend(loc="upper right")
    return fig


def dispersion_histogram(dispersions, threshold):
    fig, ax = plt.subplots()
    vals = np.maximum(np.asarray(dispersions, float), 1e-18)
    bins = np.logspace(np.log10(vals.min()) - 0.5, np.log10(vals.max()) + 0.5, 40)
    ax.hist(vals, bins=bins, color="steelblue", edgecolor="black")
    ax.axvline(threshold, color="crimson", ls="--", label="special threshold")
    ax.set_xscale("log")
    ax.set_xlabel("census dispersion (rad)")
    ax.set_ylabel("points")
    ax.set_title("unstable-direction dispersion across sampled points")
    ax.legend()
    return fig


def decay_curves(angles, final_tol):
    fig, ax = plt.subplots()
    steps = np.arange(angles.shape[0])
    floor = 1e-18
    for col in range(angles.shape[1]):
        ax.semilogy(steps, np.maximum(angles[:, col], floor), alpha=0.6, lw=1)
    ax.axhline(final_tol, color="crimson", ls="--", label="final tolerance")
    ax.set_xlabel("iterate")
    ax.set_ylabel("angle between pushed lines (rad)")
    ax.set_title("projective contraction along orbits")
    ax.legend()
    return fig


def exponent_histogram(estimates, lambda_linear, slack):
    fig, ax = plt.subplots()
    ax.hist(estimates, bins=30, color="steelblue", edgecolor="black")
    ax.axvline(lambda_linear, color="crimson", lw=2, label="linear-map exponent")
    ax.axvline(lambda_linear + slack, color="darkorange", ls="--",
               label="exponent + slack")
    ax.set_xlabel("finite-time unstable exponent")
    ax.set_ylabel("orbits")
    ax.set_title("unstable Lyapunov exponents over random orbits")
    ax.legend()
    return fig


def leaf_figure(segment, e_u):
    fig, ax = plt.subplots(figsize=(7, 7))
    pts = segment.points
    sc = ax.scatter(pts[:, 0], pts[:, 1], c=segment.arclength, s=1,
                    cmap="viridis")
    fig.colorbar(sc, ax=ax, label="signed arclength")
    center = pts[segment.center_index]
    span = segment.arclength[-1]
    line = np.outer(np.linspace(-span, span, 9), e_u) + center
    ax.plot(line[:, 0], line[:, 1], color="crimson", ls="--", lw=1,
            label="reference line along e_u")
    ax.scatter([center[0]], [center[1]], marker="*", s=120, color="crimson")
    ax.set_aspect("equal")
    ax.set_xlabel("cover x")
    ax.set_ylabel("cover y")
    ax.set_title("unstable leaf on the universal cover")
    ax.legend()
    return fig


def ratio_scatter(chord, ratio, q_fit, pair_floor):
    fig, ax = plt.subplots()
    ax.scatter(chord, ratio, s=2, alpha=0.4)
    ax.axhline(q_fit, color="crimson", ls="--", label=f"fitted slope {q_fit:.4f}")
    ax.axvline(pair_floor, color="gray", ls=":", label="pair floor")
    ax.set_xlabel("straight-line separation")
    ax.set_ylabel("arclength / separation")
    ax.set_title("leaf arclength against straight-line distance")
    ax.legend()
    return fig


def ergodic_figure(report, scaling):
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
    ax = axes[0]
    for i, row in enumerate(report.rows):
        vals = report.averages[i]
        ax.scatter(np.full(vals.size, i), vals, s=6, alpha=0.5)
        ax.scatter([i], [row.exact_mean], marker="_", s=500, color="crimson")
    ax.set_xticks(range(len(report.rows)))
    ax.set_xticklabels([r.label for r in report.rows], rotation=20)
    ax.set_ylabel("orbit average")
    ax.set_title("orbit averages vs exact integrals")

    ax = axes[1]
    marks = sorted(scaling)
    stds = np.stack([scaling[m] for m in marks])
    for i, row in enumerate(report.rows):
        ax.loglog(marks, stds[:, i], marker="o", label=row.label)
    guide = stds[0].mean() * np.sqrt(marks[0] / np.asarray(marks, float))
    ax.loglog(marks, guide, ls="--", color="gray", label="1/sqrt(n)")
    ax.set_xlabel("orbit length")
    ax.set_ylabel("spread across starts")
    ax.set_title("central-limit scaling of averages")
    ax.legend(fontsize=8)
    return fig
