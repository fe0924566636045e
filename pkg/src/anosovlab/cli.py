"""Command-line driver: one subcommand per experiment, one directory per run.

Every subcommand reads a TOML config, validates it strictly, runs the
experiment, and writes CSV tables, a JSON summary with a one-line
verdict, and rendered PNG figures into the output directory.

Exit codes: 0 when the run's verdict passes (or the subcommand has no
pass/fail semantics), 1 when a verdict fails, 2 for configuration or
usage errors (including maps that fail the hyperbolicity gate).
"""

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import directions as dirs_mod
from . import ergodic as ergodic_mod
from . import foliation as fol_mod
from . import lyapunov as lyap_mod
from . import prehistory as ph_mod
from .config import ConfigError, build_endomorphism, load_config, resolve
from .reports import RunWriter
from .smooth import cone_fields, verify_cones, c1_distance_to_linear

GATE_GRID = 64


def _setup(args, command):
    data, text = load_config(args.config)
    overrides = {"seed": args.seed, "threads": args.threads, "out_dir": args.out}
    resolved = resolve(data, command=command, overrides=overrides)
    f = build_endomorphism(resolved)
    writer = RunWriter(resolved["run"]["out_dir"], command, text, resolved)
    return f, resolved, writer


def _gate(f, writer):
    """Hyperbolicity gate for experiment subcommands (coarse grid)."""
    cert = verify_cones(f, grid_resolution=GATE_GRID)
    if not cert.verified:
        print(
            "error: endomorphism fails cone certification "
            f"(expansion {cert.expansion_bound:.4f}, "
            f"contraction {cert.contraction_bound:.4f}, "
            f"witness {cert.witness}); not a certified Anosov map",
            file=sys.stderr,
        )
        return False
    return True


def _verdict_line(command, passed, detail):
    status = "PASS" if passed else ("FAIL" if passed is not None else "DONE")
    print(f"[{command}] {status}: {detail}")


def _parallel_map(fn, items, threads):
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- subcommands ---------------------------------------------------------


def cmd_verify_anosov(args):
    f, resolved, writer = _setup(args, "verify_anosov")
    p = resolved["verify_anosov"]
    fields = cone_fields(
        f,
        halfangle_u=p["halfangle_u"],
        halfangle_s=p["halfangle_s"],
        grid_resolution=p["grid_resolution"],
        cone_samples=p["cone_samples"],
    )
    cert = verify_cones(
        f,
        halfangle_u=p["halfangle_u"],
        halfangle_s=p["halfangle_s"],
        grid_resolution=p["grid_resolution"],
        cone_samples=p["cone_samples"],
        fields=fields,
    )
    disp, deriv_gap = c1_distance_to_linear(f, resolution=p["c1_resolution"])

    pts = fields["points"]
    writer.write_csv(
        "cone_grid.csv",
        ["x", "y", "min_stretch_u", "min_stretch_s", "max_angle_u", "max_angle_s"],
        zip(
            pts[:, 0], pts[:, 1],
            fields["min_stretch_u"], fields["min_stretch_s"],
            fields["max_angle_u"], fields["max_angle_s"],
        ),
    )
    from . import plots

    writer.savefig(
        "cone_fields.png",
        plots.cone_heatmaps(
            p["grid_resolution"],
            fields["min_stretch_u"],
            fields["min_stretch_s"],
            "projected cone stretches over the torus grid",
        ),
    )
    metrics = cert.summary()
    metrics["c1_displacement"] = disp
    metrics["c1_derivative_gap"] = deriv_gap
    metrics["lambda_u_linear"] = f.base.lambda_u
    metrics["degree"] = f.degree
    writer.write_summary(
        {"passed": cert.verified, "kind": "certificate"}, metrics
    )
    _verdict_line(
        "verify-anosov",
        cert.verified,
        f"expansion {cert.expansion_bound:.5f}, contraction "
        f"{cert.contraction_bound:.5f}, C1 gap {deriv_gap:.4f} "
        f"-> {writer.dir}",
    )
    return 0 if cert.verified else 1


def cmd_preimage_tree(args):
    f, resolved, writer = _setup(args, "preimage_tree")
    if not _gate(f, writer):
        return 2
    p = resolved["preimage_tree"]
    x = np.asarray(p["point"], dtype=float)
    if p["mode"] == "exhaustive":
        phs = ph_mod.all_prehistories(f, x, p["depth"], cap=p["cap"])
    elif p["mode"] == "sampled":
        phs = ph_mod.random_prehistories(
            f, x, p["samples"], p["depth"], seed=resolved["run"]["seed"]
        )
    else:
        raise ConfigError(f"preimage_tree.mode must be exhaustive or sampled, got {p['mode']!r}")

    depth = p["depth"]
    header = ["depth", "word"]
    for i in range(depth + 1):
        header += [f"x_minus{i}_0", f"x_minus{i}_1"]
    rows = []
    for ph in phs:
        row = [depth, "".join(str(b) for b in ph.word)]
        row += [c for pt in ph.points for c in pt]
        rows.append(row)
    writer.write_csv("prehistories.csv", header, rows)

    from . import plots

    by_level = {
        lev: np.stack([ph.points[lev] for ph in phs]) for lev in range(depth + 1)
    }
    writer.savefig("preimage_tree.png", plots.preimage_scatter(by_level, x))

    distinct = [
        int(np.unique(np.round(by_level[lev], 9), axis=0).shape[0])
        for lev in range(depth + 1)
    ]
    metrics = {
        "mode": p["mode"],
        "depth": depth,
        "n_prehistories": len(phs),
        "degree": f.degree,
        "distinct_points_per_level": distinct,
    }
    writer.write_summary({"passed": None, "kind": "enumeration"}, metrics)
    _verdict_line(
        "preimage-tree",
        None,
        f"{len(phs)} pre-histories at depth {depth} -> {writer.dir}",
    )
    return 0


def cmd_dichotomy_scan(args):
    f, resolved, writer = _setup(args, "dichotomy_scan")
    if not _gate(f, writer):
        return 2
    p = resolved["dichotomy_scan"]
    seed = resolved["run"]["seed"]
    threads = resolved["run"]["threads"]
    rng = np.random.default_rng(seed)
    pts = rng.random((p["points"], f.dim))
    seeds = np.random.SeedSequence(seed).spawn(p["points"])

    def one(i):
        return dirs_mod.census(
            f,
            pts[i],
            depth=p["depth"],
            samples=p["samples"],
            rng=np.random.default_rng(seeds[i]),
            cluster_tolerance=p["cluster_tolerance"],
            dispersion_threshold=p["dispersion_threshold"],
        )

    censuses = _parallel_map(one, range(p["points"]), threads)

    writer.write_csv(
        "points.csv",
        ["index", "x", "y", "dispersion", "cluster_count", "special", "max_diagnostic"],
        [
            (i, c.base[0], c.base[1], c.dispersion, c.cluster_count,
             c.special, c.max_diagnostic)
            for i, c in enumerate(censuses)
        ],
    )
    writer.write_csv(
        "directions.csv",
        ["point_index", "word", "dir_0", "dir_1", "cluster"],
        [
            (i, "".join(str(b) for b in w), d[0], d[1], int(lab))
            for i, c in enumerate(censuses)
            for w, d, lab in zip(c.words, c.directions, c.labels)
        ],
    )

    from . import plots

    disps = [c.dispersion for c in censuses]
    writer.savefig(
        "dispersions.png",
        plots.dispersion_histogram(disps, p["dispersion_threshold"]),
    )

    mono_metrics = None
    if p["monotonicity_steps"] > 0:
        rep = dirs_mod.monotonicity_check(
            f, pts[0], p["monotonicity_steps"],
            depth=p["depth"], samples=p["samples"], seed=seed,
            cluster_tolerance=p["cluster_tolerance"],
        )
        writer.write_csv(
            "monotonicity.csv",
            ["step", "x", "y", "cluster_count", "set_size", "dispersion"],
            [
                (j, rep.points[j][0], rep.points[j][1], rep.counts[j],
                 rep.set_sizes[j], rep.dispersions[j])
                for j in range(len(rep.counts))
            ],
        )
        mono_metrics = {
            "counts": list(rep.counts),
            "non_decreasing": rep.non_decreasing,
        }

    special_count = sum(1 for c in censuses if c.special)
    frac = special_count / len(censuses)
    metrics = {
        "points": len(censuses),
        "special_fraction": frac,
        "max_dispersion": float(np.max(disps)),
        "min_dispersion": float(np.min(disps)),
        "median_dispersion": float(np.median(disps)),
        "max_cluster_count": int(max(c.cluster_count for c in censuses)),
        "monotonicity": mono_metrics,
    }
    writer.write_summary({"passed": None, "kind": "scan"}, metrics)
    label = (
        "special at sampled resolution" if frac == 1.0
        else f"non-special at {1 - frac:.0%} of points"
    )
    _verdict_line(
        "dichotomy-scan",
        None,
        f"{label} (max dispersion {float(np.max(disps)):.3e}) -> {writer.dir}",
    )
    return 0


def cmd_angle_decay(args):
    f, resolved, writer = _setup(args, "angle_decay")
    if not _gate(f, writer):
        return 2
    p = resolved["angle_decay"]
    seed = resolved["run"]["seed"]
    rng = np.random.default_rng(seed)
    m = p["pairs"]
    starts = rng.random((m, f.dim))
    # transversal pair at a uniform random projective angle per start
    phi = rng.uniform(0.2, np.pi / 2, size=m)
    base_angle = rng.uniform(0.0, np.pi, size=m)
    u = np.stack([np.cos(base_angle), np.sin(base_angle)], axis=-1)
    v = np.stack([np.cos(base_angle + phi), np.sin(base_angle + phi)], axis=-1)
    angles = dirs_mod.angle_decay(f, starts, u, v, p["steps"])   # (steps+1, m)

    writer.write_csv(
        "decay.csv",
        ["step"] + [f"pair_{i}" for i in range(m)],
        [(j, *angles[j]) for j in range(p["steps"] + 1)],
    )
    from . import plots

    writer.savefig("decay.png", plots.decay_curves(angles, p["final_tol"]))

    final = angles[-1]
    passed = bool(np.all(final <= p["final_tol"]))
    # per-step contraction ratio after transients, for the summary
    tail = angles[max(1, p["steps"] - 10):]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = tail[1:] / tail[:-1]
    ratios = ratios[np.isfinite(ratios) & (ratios > 0)]
    metrics = {
        "pairs": m,
        "steps": p["steps"],
        "final_tol": p["final_tol"],
        "max_final_angle": float(np.max(final)),
        "median_tail_ratio": float(np.median(ratios)) if ratios.size else None,
        "linear_ratio": float(
            f.base.splitting.contraction_rate / f.base.splitting.expansion_rate
        ),
    }
    writer.write_summary({"passed": passed, "kind": "decay"}, metrics)
    _verdict_line(
        "angle-decay",
        passed,
        f"max final angle {float(np.max(final)):.3e} vs tol {p['final_tol']:g} "
        f"-> {writer.dir}",
    )
    return 0 if passed else 1


def cmd_lyapunov_census(args):
    f, resolved, writer = _setup(args, "lyapunov_census")
    if not _gate(f, writer):
        return 2
    p = resolved["lyapunov_census"]
    census = lyap_mod.exponent_census(
        f,
        count=p["count"],
        steps=p["steps"],
        depth=p["depth"],
        seed=resolved["run"]["seed"],
        burn_in=p["burn_in"],
        slack=p["slack"],
    )
    writer.write_csv(
        "estimates.csv",
        ["index", "x", "y", "exponent"],
        [
            (i, census.points[i][0], census.points[i][1], census.estimates[i])
            for i in range(census.estimates.size)
        ],
    )
    from . import plots

    writer.savefig(
        "exponents.png",
        plots.exponent_histogram(
            census.estimates, census.lambda_u_linear, census.slack
        ),
    )
    summary = census.summary()
    passed = summary["all_below_slack"]
    writer.write_summary({"passed": passed, "kind": "census"}, summary)
    _verdict_line(
        "lyapunov-census",
        passed,
        f"max exponent {summary['max']:.6f} vs linear {summary['lambda_u_linear']:.6f} "
        f"+ slack {summary['slack']:g} -> {writer.dir}",
    )
    return 0 if passed else 1


def cmd_quasi_iso(args):
    f, resolved, writer = _setup(args, "quasi_iso")
    if not _gate(f, writer):
        return 2
    p = resolved["quasi_iso"]
    seed = resolved["run"]["seed"]
    seg = fol_mod.trace_leaf(
        f,
        np.asarray(p["point"], dtype=float),
        arclength=p["arclength"],
        step=p["step"],
        depth=p["depth"],
        max_turn=p["max_turn"],
    )
    fit = fol_mod.quasi_isometry_fit(
        seg, pair_floor=p["pair_floor"], ratio_floor=p["ratio_floor"]
    )
    asym = fol_mod.asymptotic_direction_check(
        seg, f.base.e_u, floors=tuple(float(v) for v in p["direction_floors"])
    )

    rng = np.random.default_rng(seed)
    offsets = rng.uniform(-1.0, 1.0, size=(p["growth_pairs"], f.dim))
    gaps = rng.uniform(p["growth_sep"], 2.0 * p["growth_sep"], size=p["growth_pairs"])
    first = rng.uniform(0.0, 1.0, size=(p["growth_pairs"], f.dim))
    second = first + gaps[:, None] * f.base.e_u + 0.05 * offsets
    growth = fol_mod.growth_ratio_check(
        f,
        np.stack([first, second], axis=1),
        k=p["growth_k"],
        sep_floor=p["growth_sep"] * 0.5,
    )

    x0 = np.zeros(f.dim)
    y0 = x0 + p["sandwich_offset"] * f.base.e_u
    sandwich = fol_mod.linear_sandwich_check(
        f.base, x0, y0, n=p["sandwich_n"], eps=p["sandwich_eps"]
    )

    writer.write_csv(
        "leaf.csv",
        ["arclength", "x", "y", "dir_x", "dir_y"],
        zip(
            seg.arclength, seg.points[:, 0], seg.points[:, 1],
            seg.directions[:, 0], seg.directions[:, 1],
        ),
    )
    writer.write_csv(
        "growth_ratios.csv",
        ["pair", "separation", "ratio"],
        [
            (i, float(np.linalg.norm(first[i] - second[i])), growth.ratios[i])
            for i in range(p["growth_pairs"])
        ],
    )
    writer.write_csv(
        "chord_directions.csv",
        ["floor", "pairs", "max_angle"],
        asym.rows(),
    )

    from . import plots

    writer.savefig("leaf.png", plots.leaf_figure(seg, f.base.e_u))
    pts, ii, jj, chord, along, _ = fol_mod._subsample_pairs(seg, 50_000)
    keep = chord >= p["pair_floor"]
    writer.savefig(
        "ratios.png",
        plots.ratio_scatter(chord[keep], along[keep] / chord[keep],
                            fit.q_fit, p["pair_floor"]),
    )

    passed = bool(
        fit.q_fit <= p["ratio_bound"]
        and growth.max_abs_dev <= p["growth_bound"] - 1.0
        and sandwich.holds
        and asym.decreasing
    )
    metrics = {
        "q_fit": fit.q_fit,
        "b_fit": fit.b_fit,
        "far_ratio_max": fit.far_ratio_max,
        "ratio_bound": p["ratio_bound"],
        "n_pairs": fit.n_pairs,
        "growth_max_abs_dev": growth.max_abs_dev,
        "growth_bound": p["growth_bound"],
        "chord_floors": list(asym.floors),
        "chord_max_angles": list(asym.max_angles),
        "chord_c_fit": asym.c_fit,
        "chord_decreasing": asym.decreasing,
        "sandwich": {
            "holds": sandwich.holds,
            "ratio": sandwich.ratio,
            "lower_margin": sandwich.lower_margin,
            "upper_margin": sandwich.upper_margin,
        },
        "leaf_length": seg.length,
    }
    writer.write_summary({"passed": passed, "kind": "quasi_isometry"}, metrics)
    _verdict_line(
        "quasi-iso",
        passed,
        f"Q {fit.q_fit:.5f} (bound {p['ratio_bound']:g}), b {fit.b_fit:.4f}, "
        f"growth dev {growth.max_abs_dev:.4f} -> {writer.dir}",
    )
    return 0 if passed else 1


def cmd_ergodic_test(args):
    f, resolved, writer = _setup(args, "ergodic_test")
    if not _gate(f, writer):
        return 2
    p = resolved["ergodic_test"]
    seed = resolved["run"]["seed"]
    observables = [ergodic_mod.Observable.parse(s) for s in p["observables"]]
    try:
        report = ergodic_mod.ergodicity_test(
            f,
            observables,
            n_starts=p["starts"],
            steps=p["steps"],
            seed=seed,
            mean_tol=p["mean_tol"],
            std_tol=p["std_tol"],
            dither=p["dither"],
        )
    except ergodic_mod.ConservativityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    scaling = ergodic_mod.spread_scaling(
        f, observables, p["starts"],
        sorted(set(int(s) for s in p["scaling_steps"])), seed=seed + 1,
        dither=p["dither"],
    )

    writer.write_csv(
        "averages.csv",
        ["observable", "start_index", "average"],
        [
            (row.label, j, report.averages[i][j])
            for i, row in enumerate(report.rows)
            for j in range(report.averages.shape[1])
        ],
    )
    writer.write_csv(
        "observables.csv",
        ["observable", "exact_mean", "mean", "std", "min", "max",
         "mean_ok", "std_ok"],
        [
            (r.label, r.exact_mean, r.mean, r.std, r.min, r.max,
             r.mean_ok, r.std_ok)
            for r in report.rows
        ],
    )
    writer.write_csv(
        "spread_scaling.csv",
        ["steps"] + [r.label for r in report.rows],
        [(m, *scaling[m]) for m in sorted(scaling)],
    )

    from . import plots

    writer.savefig("ergodic.png", plots.ergodic_figure(report, scaling))

    marks = sorted(scaling)
    slope = None
    if len(marks) >= 2:
        stds = np.stack([scaling[m] for m in marks])
        mean_std = np.mean(stds, axis=1)
        slope = float(
            np.polyfit(np.log(marks), np.log(np.maximum(mean_std, 1e-300)), 1)[0]
        )
    metrics = {
        "steps": p["steps"],
        "starts": p["starts"],
        "det_defect": report.det_defect,
        "rows": [
            {
                "label": r.label,
                "exact_mean": r.exact_mean,
                "mean": r.mean,
                "std": r.std,
                "mean_ok": r.mean_ok,
                "std_ok": r.std_ok,
            }
            for r in report.rows
        ],
        "scaling_slope": slope,
    }
    writer.write_summary({"passed": report.passed, "kind": "ergodicity"}, metrics)
    worst = max(abs(r.mean - r.exact_mean) for r in report.rows)
    _verdict_line(
        "ergodic-test",
        report.passed,
        f"worst mean defect {worst:.5f} (tol {p['mean_tol']:g}), "
        f"scaling slope {slope if slope is None else round(slope, 3)} -> {writer.dir}",
    )
    return 0 if report.passed else 1


# -- entry point ---------------------------------------------------------


_SUBCOMMANDS = [
    ("verify-anosov", cmd_verify_anosov, [],
     "certify cone invariance and report C1 distance to the linear part"),
    ("preimage-tree", cmd_preimage_tree, [],
     "enumerate or sample pre-histories of a point and dump the tree"),
    ("dichotomy-scan", cmd_dichotomy_scan, ["dispersion"],
     "census unstable directions at random points; special vs non-special"),
    ("angle-decay", cmd_angle_decay, [],
     "push transversal line pairs forward and record projective contraction"),
    ("lyapunov-census", cmd_lyapunov_census, [],
     "estimate unstable exponents over random orbits and pre-histories"),
    ("quasi-iso", cmd_quasi_iso, [],
     "trace an unstable leaf and fit quasi-isometry constants"),
    ("ergodic-test", cmd_ergodic_test, [],
     "compare Birkhoff averages of characters with exact integrals"),
]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="anosovlab",
        description="numerical experiments on Anosov endomorphisms of the torus",
    )
    parser.add_argument("--version", action="version",
                        version=f"anosovlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, func, aliases, help_text in _SUBCOMMANDS:
        sp = sub.add_parser(name, aliases=aliases, help=help_text)
        sp.add_argument("--config", required=True, help="TOML config file")
        sp.add_argument("--out", default=None, help="output directory override")
        sp.add_argument("--seed", type=int, default=None, help="seed override")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads override")
        sp.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
