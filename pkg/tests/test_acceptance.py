"""Acceptance gate: ten end-to-end criteria, one printed verdict line each.

Each test pins the tolerances and sample sizes of one shipped guarantee,
prints `[acceptance NN] PASS/FAIL: ...` straight to the terminal (outside
pytest's capture), and asserts the same condition so the suite fails
loudly if a guarantee regresses.  Wall-clock budgets are asserted where
the artifact declares one; the JIT-warmup fixture keeps kernel
compilation out of every timed region.
"""

import itertools
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from anosovlab import shipped_endo
from anosovlab.cli import main
from anosovlab.directions import (
    angle_decay,
    canonical_direction,
    census,
    projective_angle,
    unstable_direction,
)
from anosovlab.ergodic import Observable, ergodicity_test, spread_scaling
from anosovlab.foliation import (
    asymptotic_direction_check,
    growth_ratio_check,
    linear_sandwich_check,
    trace_leaf,
)
from anosovlab.lyapunov import exponent_census
from anosovlab.prehistory import (
    prehistory_from_word,
    random_prehistories,
    shift_forward,
)
from anosovlab.smooth import SHIPPED_COMPOSITIONS
from anosovlab.torus import prehistory_metric, torus_distance

from conftest import DECAY_RATIO, E_U, LAMBDA_U

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

pytestmark = pytest.mark.usefixtures("leaf_warmup")


def _verdict(capsys, num, ok, detail):
    line = f"[acceptance {num:02d}] {'PASS' if ok else 'FAIL'}: {detail}"
    with capsys.disabled():
        print(flush=True)
        print(line, flush=True)
    assert ok, line


def test_criterion_01_linear_oracle_suite(capsys, A, f_lin):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)

    eig_dev = max(
        abs(A.unstable_eigenvalue - (2.0 + math.sqrt(2.0))),
        abs(A.stable_eigenvalue - (2.0 - math.sqrt(2.0))),
        abs(A.lambda_u - math.log(2.0 + math.sqrt(2.0))),
    )
    ok_eigs = A.degree == 2 and eig_dev < 1e-12

    disps = [
        census(f_lin, pt, depth=40, samples=200,
               rng=np.random.default_rng(200 + i)).dispersion
        for i, pt in enumerate(rng.random((50, 2)))
    ]
    max_disp = max(disps)

    cens = exponent_census(f_lin, count=50, steps=200, depth=10, seed=7)
    lyap_dev = float(np.max(np.abs(cens.estimates - A.lambda_u)))

    seg = trace_leaf(f_lin, np.array([0.2, 0.7]), arclength=20.0, step=0.01)
    perp = np.array([-A.e_u[1], A.e_u[0]])
    leaf_dev = float(np.max(np.abs((seg.points - seg.points[0]) @ perp)))

    first = rng.random((10, 2))
    gaps = rng.uniform(10.0, 50.0, size=10)
    second = first + gaps[:, None] * A.e_u + 0.05 * rng.uniform(-1, 1, (10, 2))
    growth = growth_ratio_check(f_lin, np.stack([first, second], axis=1),
                                k=5, sep_floor=5.0)
    ok_growth = bool(np.all(growth.ratios == 1.0))

    elapsed = time.perf_counter() - t0
    ok = (ok_eigs and max_disp < 1e-9 and lyap_dev <= 1e-12
          and leaf_dev < 1e-10 and ok_growth and elapsed < 10.0)
    _verdict(
        capsys, 1, ok,
        f"linear oracle suite: eig dev {eig_dev:.1e}, max dispersion "
        f"{max_disp:.1e} (< 1e-9), exponent dev {lyap_dev:.1e} (<= 1e-12), "
        f"leaf dev {leaf_dev:.1e} (< 1e-10), growth ratios exactly 1: "
        f"{ok_growth} ({elapsed:.1f}s < 10s)",
    )


def test_criterion_02_covering_preimages(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    worst = 0.0
    counts_ok = True
    for name in ("linear", "shear02", "shear05"):
        f = shipped_endo(name)
        for y in rng.random((1000, 2)):
            pres = f.preimages(y)
            counts_ok &= len(pres) == 2
            res = max(torus_distance(f.apply(p), y) for p in pres)
            worst = max(worst, float(res))
    elapsed = time.perf_counter() - t0
    ok = counts_ok and worst < 1e-10 and elapsed < 5.0
    _verdict(
        capsys, 2, ok,
        f"covering preimages: 2 per target at 3x1000 targets "
        f"({counts_ok}), worst forward residual {worst:.1e} (< 1e-10) "
        f"({elapsed:.1f}s < 5s)",
    )


def test_criterion_03_conservativity(capsys):
    rng = np.random.default_rng(103)
    worst = 0.0
    for name in sorted(SHIPPED_COMPOSITIONS):
        f = shipped_endo(name)
        pts = rng.random((10_000, 2))
        dets = np.linalg.det(f.derivative(pts))
        worst = max(worst, float(np.max(np.abs(np.abs(dets) - f.degree))))
    ok = worst < 1e-12
    _verdict(
        capsys, 3, ok,
        f"conservativity: worst |det Df| deviation from 2 over "
        f"{len(SHIPPED_COMPOSITIONS)} compositions x 10^4 points "
        f"{worst:.1e} (< 1e-12)",
    )


def test_criterion_04_cone_certification_cli(capsys, tmp_path):
    t0 = time.perf_counter()
    out = tmp_path / "verify"
    code = main(["verify-anosov",
                 "--config", str(CONFIG_DIR / "verify_anosov.toml"),
                 "--out", str(out)])
    capsys.readouterr()  # swallow the subcommand's own verdict line
    doc = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    expansion = doc["metrics"]["expansion_bound"]
    contraction = doc["metrics"]["contraction_bound"]
    elapsed = time.perf_counter() - t0
    ok = (code == 0 and doc["verdict"]["passed"] is True
          and expansion > 1.0 and contraction < 1.0 and elapsed < 30.0)
    _verdict(
        capsys, 4, ok,
        f"cone certification CLI (256^2 grid, half-angles 0.3): exit {code}, "
        f"expansion {expansion:.4f} > 1, contraction {contraction:.4f} < 1 "
        f"({elapsed:.1f}s < 30s)",
    )


def test_criterion_05_exponent_semi_rigidity(capsys, f_small):
    t0 = time.perf_counter()
    cens = exponent_census(f_small, count=500, steps=20_000, depth=40, seed=5)
    p99 = float(np.percentile(cens.estimates, 99))
    elapsed = time.perf_counter() - t0
    ok = p99 <= LAMBDA_U + 0.01 and elapsed < 120.0
    _verdict(
        capsys, 5, ok,
        f"exponent semi-rigidity: p99 {p99:.6f} <= {LAMBDA_U:.6f} + 0.01 "
        f"over 500 points, 2e4 steps, depth 40 ({elapsed:.1f}s < 120s)",
    )


def test_criterion_06_direction_dichotomy(capsys, f_lin, f_big):
    t0 = time.perf_counter()
    rng = np.random.default_rng(106)
    pts = rng.random((100, 2))

    def nonspecial_fraction(f):
        flags = [
            not census(f, pts[i], depth=40, samples=200,
                       rng=np.random.default_rng(600 + i),
                       dispersion_threshold=1e-3).special
            for i in range(100)
        ]
        return sum(flags) / len(flags)

    frac_lin = nonspecial_fraction(f_lin)
    frac_big = nonspecial_fraction(f_big)
    elapsed = time.perf_counter() - t0
    ok = frac_lin == 0.0 and frac_big >= 0.9 and elapsed < 120.0
    _verdict(
        capsys, 6, ok,
        f"direction dichotomy: linear non-special fraction {frac_lin} "
        f"(= 0.0), sheared-0.10 fraction {frac_big} (>= 0.9) at threshold "
        f"1e-3 over 100 points ({elapsed:.1f}s < 120s)",
    )


def test_criterion_07_angle_decay(capsys, f_lin, f_mid):
    rng = np.random.default_rng(107)
    xs, us, vs = [], [], []
    for i, pt in enumerate(rng.random((20, 2))):
        c = census(f_mid, pt, depth=40, samples=10,
                   rng=np.random.default_rng(700 + i))
        for a, b in itertools.combinations(range(len(c.directions)), 2):
            if projective_angle(c.directions[a], c.directions[b]) > 0.0:
                xs.append(pt)
                us.append(c.directions[a])
                vs.append(c.directions[b])
    angles = angle_decay(f_mid, np.array(xs), np.array(us), np.array(vs),
                         steps=15)
    collapsed = float(np.max(angles[15]))
    monotone = bool(np.all(np.diff(angles[3:], axis=0) <= 1e-15))

    u = np.array([math.cos(0.06), math.sin(0.06)])
    rot = np.array([[u[0], -u[1]], [u[1], u[0]]])
    lin_angles = angle_decay(f_lin, np.array([0.2, 0.8]), rot @ E_U,
                             rot.T @ E_U, steps=12)
    ratios = lin_angles[4:9] / lin_angles[3:8]
    ratio_dev = float(np.max(np.abs(ratios - DECAY_RATIO)))

    ok = collapsed < 1e-8 and monotone and ratio_dev < 1e-6
    _verdict(
        capsys, 7, ok,
        f"angle decay: {len(xs)} sampled pairs at shear-0.05 reach "
        f"{collapsed:.1e} (< 1e-8) by step 15, non-increasing after 3: "
        f"{monotone}; linear ratio dev {ratio_dev:.1e} (< 1e-6)",
    )


def test_criterion_08_cover_geometry(capsys, A, f_small):
    rng = np.random.default_rng(108)
    first = rng.random((10, 2))
    gaps = rng.uniform(10.0, 50.0, size=10)
    second = first + gaps[:, None] * E_U + 0.05 * rng.uniform(-1, 1, (10, 2))
    growth = growth_ratio_check(f_small, np.stack([first, second], axis=1),
                                k=5, sep_floor=5.0)
    lo, hi = float(np.min(growth.ratios)), float(np.max(growth.ratios))
    ok_growth = 1.0 / 1.2 <= lo and hi <= 1.2

    seg = trace_leaf(f_small, np.array([0.2, 0.7]), arclength=50.0)
    chords = asymptotic_direction_check(seg, E_U, floors=(20.0, 40.0))
    max_chord = max(chords.max_angles)
    ok_chords = max_chord <= 0.05

    x0 = np.array([0.3, 0.4])
    sandwich = linear_sandwich_check(A, x0, x0 + 20.0 * E_U, n=5, eps=0.05)
    ok_sandwich = (sandwich.holds and sandwich.lower_margin > 0.0
                   and sandwich.upper_margin > 0.0)

    ok = ok_growth and ok_chords and ok_sandwich
    _verdict(
        capsys, 8, ok,
        f"cover geometry: growth ratios [{lo:.4f}, {hi:.4f}] within "
        f"[1/1.2, 1.2], chord misalignment {max_chord:.4f} <= 0.05 rad at "
        f"separation >= 20, sandwich margins ({sandwich.lower_margin:.3f}, "
        f"{sandwich.upper_margin:.3f}) > 0",
    )


def test_criterion_09_ergodic_averages(capsys, f_lin, f_small):
    t0 = time.perf_counter()
    obs = [Observable.parse(s) for s in ("cos:1,0", "sin:0,1", "cos:1,1")]
    worst_mean = 0.0
    worst_std = 0.0
    slopes = []
    for f in (f_lin, f_small):
        report = ergodicity_test(f, obs, n_starts=100, steps=100_000, seed=9,
                                 mean_tol=0.01, std_tol=0.02)
        worst_mean = max(worst_mean,
                         max(abs(r.mean - r.exact_mean) for r in report.rows))
        worst_std = max(worst_std, max(r.std for r in report.rows))
        marks = [1000, 10_000, 100_000]
        spreads = spread_scaling(f, obs, n_starts=60, steps_list=marks,
                                 seed=10)
        stds = np.array([float(np.mean(spreads[m])) for m in marks])
        slopes.append(float(np.polyfit(np.log10(marks), np.log10(stds), 1)[0]))
    elapsed = time.perf_counter() - t0
    ok_slopes = all(-0.65 < s < -0.35 for s in slopes)
    ok = (worst_mean < 0.01 and worst_std < 0.02 and ok_slopes
          and elapsed < 120.0)
    _verdict(
        capsys, 9, ok,
        f"ergodic averages: worst mean defect {worst_mean:.4f} (< 0.01), "
        f"worst across-start std {worst_std:.4f} (< 0.02), spread slopes "
        f"{[round(s, 2) for s in slopes]} near -1/2 ({elapsed:.1f}s < 120s)",
    )


def test_criterion_10_structural_invariants(capsys, f_mid, f_small):
    rng = np.random.default_rng(110)

    # metric axioms on the torus and on pre-history space
    xs = rng.random((200, 2))
    ys = rng.random((200, 2))
    zs = rng.random((200, 2))
    dxy = torus_distance(xs, ys)
    ok_metric = (
        np.all(torus_distance(xs, xs) == 0.0)
        and np.all(np.abs(dxy - torus_distance(ys, xs)) < 1e-15)
        and np.all(dxy <= torus_distance(xs, zs) + torus_distance(zs, ys)
                   + 1e-12)
        and np.all(dxy <= math.sqrt(2.0) / 2.0 + 1e-15)
    )
    p, q, r = random_prehistories(f_mid, np.array([0.31, 0.77]), 3, depth=25,
                                  seed=11)
    ok_metric = bool(
        ok_metric
        and prehistory_metric(p, p) == 0.0
        and abs(prehistory_metric(p, q) - prehistory_metric(q, p)) < 1e-15
        and prehistory_metric(p, q) > 0.0
        and prehistory_metric(p, r)
        <= prehistory_metric(p, q) + prehistory_metric(q, r) + 1e-15
    )

    # equivariance: Df pushes the direction at p to the one at its shift
    equi_dev = 0.0
    for x in rng.random((5, 2)):
        ph = random_prehistories(f_mid, x, 1, depth=40, seed=12)[0]
        d, _ = unstable_direction(f_mid, ph)
        pushed = canonical_direction(f_mid.derivative(x) @ d)
        there, _ = unstable_direction(f_mid, shift_forward(ph, f_mid))
        equi_dev = max(equi_dev, float(projective_angle(pushed, there)))
    ok_equi = equi_dev < 1e-8

    # exponential locality of the direction in shared-prefix depth
    x = np.array([0.42, 0.58])
    depths = np.arange(2, 13)
    angles = []
    for j in depths:
        wa = np.concatenate([np.zeros(j, np.int64), np.zeros(30 - j, np.int64)])
        wb = np.concatenate([np.zeros(j, np.int64), np.ones(30 - j, np.int64)])
        da, _ = unstable_direction(f_small, prehistory_from_word(f_small, x, wa))
        db, _ = unstable_direction(f_small, prehistory_from_word(f_small, x, wb))
        angles.append(projective_angle(da, db))
    rho = float(np.exp(np.polyfit(depths, np.log(angles), 1)[0]))
    ok_local = rho <= 0.23

    # push-forward membership: Df(x) maps the direction carried by each
    # depth-10 pre-history of x onto the direction the depth-11 census at
    # f(x) assigns to its one-step continuation, so the pushed direction
    # set is contained in the successor's direction set
    xm = np.array([0.15, 0.62])
    cx = census(f_mid, xm, depth=10, exhaustive=True)
    ym = f_mid.apply(xm)
    cy = census(f_mid, ym, depth=11, exhaustive=True)
    pushed = (f_mid.derivative(xm) @ cx.directions.T).T
    pushed /= np.linalg.norm(pushed, axis=1, keepdims=True)
    branch = int(np.argmin(torus_distance(f_mid.preimages(ym), xm)))
    index_of = {w: j for j, w in enumerate(cy.words)}
    successors = np.array([index_of[(branch,) + w] for w in cx.words])
    member_dev = float(
        np.max(projective_angle(pushed, cy.directions[successors]))
    )
    ok_member = member_dev < 1e-8

    # seed-determinism of both census families
    ca = census(f_mid, xm, depth=20, samples=50, seed=13)
    cb = census(f_mid, xm, depth=20, samples=50, seed=13)
    ea = exponent_census(f_small, count=10, steps=500, depth=15, seed=14)
    eb = exponent_census(f_small, count=10, steps=500, depth=15, seed=14)
    ok_seed = (
        np.array_equal(ca.directions, cb.directions)
        and ca.words == cb.words
        and np.array_equal(ca.labels, cb.labels)
        and np.array_equal(ea.estimates, eb.estimates)
        and np.array_equal(ea.points, eb.points)
    )

    ok = ok_metric and ok_equi and ok_local and ok_member and ok_seed
    _verdict(
        capsys, 10, ok,
        f"structural invariants: metric axioms {ok_metric}, equivariance "
        f"dev {equi_dev:.1e} (< 1e-8), locality rho {rho:.3f} (<= 0.23), "
        f"push-forward membership dev {member_dev:.1e} (< 1e-8), "
        f"seed-determinism {ok_seed}",
    )
