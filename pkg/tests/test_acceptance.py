"""End-to-end release checks, one test per numbered criterion.

Heavier than the unit suites: the full-size fit runs the sampler for a few
minutes and several checks rebuild their expected values from scratch
(exhaustive placement enumeration, quadrature over a discretized location
posterior, pair-counting AUROC).  Each test finishes by printing a single
``criterion N PASS`` line with the measured numbers, so

    pytest tests/test_acceptance.py -v -s

reads as a checklist.
"""

import itertools
import math
import struct
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform
from scipy.special import log_ndtr

from refined import (
    BmdsConfig,
    DataError,
    DistanceMatrix,
    Embedding2D,
    FeatureGridMap,
    ImageStack,
    SynthSpec,
    classification_eval,
    cost_delta,
    discretize,
    feature_distances,
    generate,
    generate_with_weights,
    gibbs_sigma2,
    hill_climb,
    map_cost,
    mcnemar,
    mds_embed,
    minmax_normalize,
    normalize_max,
    random_embed,
    read_map,
    read_pgm,
    read_tensor,
    regression_eval,
    run_mcmc,
    write_pgm,
    write_tensor,
)


def report(num: int, detail: str) -> None:
    print(f"criterion {num} PASS: {detail}")


def run_cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "refined", *args],
        cwd=cwd, capture_output=True,
    )


def random_reference(rng, p):
    """Max-normalized planar distances with generic (untied) values."""
    dv = pdist(rng.random((p, 2)))
    dv = dv / dv.max()
    m = np.zeros((p, p))
    iu = np.triu_indices(p, k=1)
    m[iu] = dv
    m += m.T
    return DistanceMatrix(m, [f"f{i}" for i in range(p)])


def random_map(rng, p, g):
    cells = rng.choice(g * g, size=p, replace=False)
    return FeatureGridMap(
        g, np.column_stack([cells // g, cells % g]), [f"f{i}" for i in range(p)]
    )


# --- 1: grid capacity and runtime at small, medium, full size ---------------


def test_criterion_01_fit_capacity_and_runtime(tmp_path):
    grids = {}
    skip_times = {}
    for p in (10, 100, 672):
        data = tmp_path / f"s{p}.csv"
        r = run_cli(["synth", "--n", "50", "--p", str(p), "--gamma", "0.7",
                     "--seed", "0", "--out", str(data)], tmp_path)
        assert r.returncode == 0, r.stderr
        out = tmp_path / f"m{p}.txt"
        t0 = time.perf_counter()
        r = run_cli(["fit", "--input", str(data), "--out", str(out),
                     "--skip-bmds", "--seed", "0"], tmp_path)
        skip_times[p] = time.perf_counter() - t0
        assert r.returncode == 0, r.stderr
        m = read_map(out)
        assert m.grid_size == math.ceil(math.sqrt(p))
        pixels = {tuple(rc) for rc in m.assignment.tolist()}
        assert len(pixels) == len(m.labels) == p
        grids[p] = m.grid_size
    assert grids[672] == 26
    assert skip_times[672] < 300.0

    out = tmp_path / "m672_full.txt"
    t0 = time.perf_counter()
    r = run_cli(["fit", "--input", str(tmp_path / "s672.csv"),
                 "--out", str(out), "--seed", "0"], tmp_path)
    full_time = time.perf_counter() - t0
    assert r.returncode == 0, r.stderr
    m = read_map(out)
    assert m.grid_size == 26
    assert len({tuple(rc) for rc in m.assignment.tolist()}) == 672
    assert full_time < 3600.0
    report(1, f"grids {grids}, p=672 fit {skip_times[672]:.1f}s sampler-free / "
              f"{full_time:.1f}s with sampler")


# --- 2: hill climb is monotone and locally optimal --------------------------


def exhaustive_best_cost(p, g, ref_upper):
    """Global optimum over every ordered placement of p features on g*g
    pixels; each placement normalized by its own largest pixel distance."""
    cells = np.arange(g * g)
    centers = np.column_stack([(cells % g + 0.5) / g, (cells // g + 0.5) / g])
    lut = np.sqrt(((centers[:, None, :] - centers[None, :, :]) ** 2).sum(2))
    placements = np.array(list(itertools.permutations(cells.tolist(), p)))
    iu, ju = np.triu_indices(p, k=1)
    pd_ = lut[placements[:, iu], placements[:, ju]]
    cost = np.abs(pd_ / pd_.max(axis=1, keepdims=True) - ref_upper[None, :]).sum(1)
    return float(cost.min())


def neighbor_targets(row, col, g):
    steps = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]
    return [(row + dr, col + dc) for dr, dc in steps
            if 0 <= row + dr < g and 0 <= col + dc < g]


def test_criterion_02_hill_climb_monotone_and_local_optimum():
    rng = np.random.default_rng(20)
    for _ in range(50):
        p = int(rng.integers(4, 31))
        g = math.ceil(math.sqrt(p)) + int(rng.integers(0, 2))
        ref = random_reference(rng, p)
        final, history = hill_climb(random_map(rng, p, g), ref)
        drops = np.diff(history)
        assert np.all(drops <= 1e-9), f"cost rose within a run (p={p}, g={g})"
        assert abs(history[-1] - map_cost(final, ref).value) <= 1e-9

    hits = total = 0
    worst_gap = 0.0
    for p, g in [(2, 2), (3, 2), (4, 2), (2, 3), (3, 3), (4, 3), (5, 3)]:
        for _ in range(4):
            ref = random_reference(rng, p)
            final, history = hill_climb(random_map(rng, p, g), ref)
            # no single swap or move may lower the exact renormalized cost
            for j in range(p):
                row, col = final.assignment[j]
                for tgt in neighbor_targets(int(row), int(col), g):
                    moved = final.assignment.copy()
                    occ = np.nonzero((moved[:, 0] == tgt[0])
                                     & (moved[:, 1] == tgt[1]))[0]
                    if occ.size:
                        moved[occ[0]] = moved[j]
                    moved[j] = tgt
                    variant = FeatureGridMap(g, moved, final.labels)
                    assert (map_cost(variant, ref).value
                            >= history[-1] - 1e-9)
            best = exhaustive_best_cost(p, g, ref.upper())
            assert history[-1] >= best - 1e-9
            gap = history[-1] - best
            worst_gap = max(worst_gap, gap)
            hits += gap <= 1e-9
            total += 1
    report(2, f"50 runs monotone; {total} tiny instances locally optimal, "
              f"{hits}/{total} globally optimal, worst gap {worst_gap:.3f}")


# --- 3: incremental cost agrees with recomputation --------------------------


def test_criterion_03_move_delta_matches_recompute():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(10_000):
        p = int(rng.integers(3, 13))
        g = math.ceil(math.sqrt(p)) + int(rng.integers(0, 2))
        ref = random_reference(rng, p)
        m = random_map(rng, p, g)
        norm = float(pdist(m.pixel_centers()).max())
        j = int(rng.integers(p))
        cell = int(rng.integers(g * g))
        tgt = (cell // g, cell % g)
        delta = cost_delta(m, j, tgt, ref, norm=norm)

        moved = m.assignment.copy()
        occ = np.nonzero((moved[:, 0] == tgt[0]) & (moved[:, 1] == tgt[1]))[0]
        if occ.size:
            moved[occ[0]] = moved[j]
        moved[j] = tgt
        m2 = FeatureGridMap(g, moved, m.labels)
        before = np.abs(pdist(m.pixel_centers()) / norm - ref.upper()).sum()
        after = np.abs(pdist(m2.pixel_centers()) / norm - ref.upper()).sum()
        worst = max(worst, abs(delta - (after - before)))
    assert worst <= 1e-9
    report(3, f"10000 random moves, worst |delta - recompute| = {worst:.2e}")


# --- 4: sampler recovers geometry, matches its own math ---------------------


def noisy_normalized(points, rng):
    d = squareform(pdist(points))
    noise = rng.normal(0.0, 0.01, size=d.shape)
    noise = np.triu(noise, k=1)
    d = np.abs(d + noise + noise.T)
    d = d / d.max()
    return DistanceMatrix(d, [f"f{i}" for i in range(len(points))])


def quadrature_marginals(d_upper, sigma0, mq, bins):
    """Per-feature location marginals of the fixed-noise posterior for three
    features, by mq*mq midpoint quadrature, summed onto a bins*bins grid."""
    centers = (np.arange(mq) + 0.5) / mq
    gx, gy = np.meshgrid(centers, centers, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    nq = pts.shape[0]
    lut = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(2))

    def pair_term(dobs):
        return -((dobs - lut) ** 2) / (2 * sigma0**2) - log_ndtr(lut / sigma0)

    t01, t02, t12 = (pair_term(v) for v in d_upper)
    peak = -np.inf
    for i in range(nq):
        peak = max(peak, (t01[i][:, None] + t02[i][None, :] + t12).max())
    marg = np.zeros((3, nq))
    for i in range(nq):
        block = np.exp(t01[i][:, None] + t02[i][None, :] + t12 - peak)
        marg[0, i] = block.sum()
        marg[1] += block.sum(axis=1)
        marg[2] += block.sum(axis=0)
    marg /= marg[0].sum()
    sub = mq // bins
    ix, iy = np.divmod(np.arange(nq), mq)
    cell = (ix // sub) * bins + (iy // sub)
    out = np.zeros((3, bins * bins))
    for f in range(3):
        np.add.at(out[f], cell, marg[f])
    return out


def test_criterion_04_sampler_recovery_and_exactness():
    # (a) pairwise-distance recovery from noisy planar data, 10 seeds
    wins = 0
    pccs = []
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        points = rng.random((12, 2))
        d = noisy_normalized(points, rng)
        cfg = BmdsConfig(iterations=800, burn_in=400, thin=5, seed=seed)
        result = run_mcmc(d, mds_embed(d), cfg)
        pcc = float(np.corrcoef(result.delta_hat.upper(), pdist(points))[0, 1])
        pccs.append(pcc)
        wins += pcc >= 0.95
    assert wins >= 9, f"recovery PCC >= 0.95 in only {wins}/10 seeds: {pccs}"

    # (b) noise-variance full conditional matches its closed-form mean
    rng = np.random.default_rng(9)
    obs_pts, cfg_pts = rng.random((6, 2)), rng.random((6, 2))
    d = DistanceMatrix(
        squareform(pdist(obs_pts) / pdist(obs_pts).max()),
        [f"f{i}" for i in range(6)],
    )
    s = Embedding2D(cfg_pts, d.labels)
    a, b = 3.0, 1.0
    resid = d.upper() - s.distances()
    shape = 0.5 * resid.size + a
    scale = 0.5 * float(resid @ resid) + b
    exact_mean = scale / (shape - 1.0)
    draws = np.fromiter(
        (gibbs_sigma2(d, s, a, b, rng) for _ in range(100_000)), dtype=float
    )
    rel = abs(draws.mean() - exact_mean) / exact_mean
    assert rel < 0.01

    # (c) with the noise variance pinned, binned location visits match the
    # quadrature-enumerated posterior in total variation
    sigma0 = 0.2
    d_upper = np.array([0.6, 0.8, 1.0])
    d3 = DistanceMatrix(squareform(d_upper), ["f1", "f2", "f3"])
    quad = quadrature_marginals(d_upper, sigma0, mq=18, bins=6)
    coarse = quadrature_marginals(d_upper, sigma0, mq=12, bins=6)
    assert 0.5 * np.abs(quad - coarse).sum(axis=1).max() < 0.01

    a_big = 1e8  # pins sigma2 at b/a to a relative sd of 1e-4
    cfg = BmdsConfig(a=a_big, b=sigma0**2 * a_big,
                     iterations=110_000, burn_in=10_000, thin=2, seed=11)
    res = run_mcmc(d3, mds_embed(d3), cfg)
    assert abs(res.trace.sigma2_chain.mean() - sigma0**2) < 1e-4 * sigma0**2 * 10
    coords = np.stack([e.coords for e in res.trace.location_samples])
    emp = np.zeros((3, 36))
    for f in range(3):
        ix = np.clip((coords[:, f, 0] * 6).astype(int), 0, 5)
        iy = np.clip((coords[:, f, 1] * 6).astype(int), 0, 5)
        emp[f] = np.bincount(ix * 6 + iy, minlength=36) / coords.shape[0]
    tv = 0.5 * np.abs(emp - quad).sum(axis=1)
    assert tv.max() < 0.05, f"visit distribution off by TV {tv}"
    report(4, f"recovery {wins}/10 seeds (min PCC {min(pccs):.3f}), "
              f"gibbs mean off by {rel * 100:.2f}%, max visit TV {tv.max():.3f}")


# --- 5: fitted maps beat random placement -----------------------------------


def test_criterion_05_fitted_map_beats_random_placement():
    wins = 0
    ratios = []
    for seed in range(20):
        table = minmax_normalize(generate(SynthSpec(n=60, p=400, gamma=0.7,
                                                    seed=seed)))
        d = normalize_max(feature_distances(table))
        # fewer passes than the default only handicaps the fitted map
        fitted, _ = hill_climb(discretize(mds_embed(d)), d, max_passes=30)
        rand = discretize(random_embed(400, seed=seed, labels=d.labels))
        c_fit = map_cost(fitted, d).value
        c_rand = map_cost(rand, d).value
        ratios.append(c_fit / c_rand)
        wins += c_fit < c_rand
    assert wins >= 19, f"fitted map won only {wins}/20 seeds"
    report(5, f"fitted < random in {wins}/20 seeds, "
              f"cost ratio {min(ratios):.3f}..{max(ratios):.3f}")


# --- 6: metric values rebuilt from first principles -------------------------


def pair_counted_auroc(labels, scores):
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    gt = float((pos[:, None] > neg[None, :]).sum())
    eq = float((pos[:, None] == neg[None, :]).sum())
    return (gt + 0.5 * eq) / (pos.size * neg.size)


def test_criterion_06_metric_oracles():
    rng = np.random.default_rng(6)
    y = rng.normal(size=200)
    flat = regression_eval(y, np.full_like(y, y.mean()))
    assert flat.nrmse == 1.0
    assert flat.nmae == 1.0
    assert abs(flat.bias_angle_deg - 45.0) <= 1e-9

    labels = (rng.random(200) < 0.4).astype(int)
    scores = np.round(rng.random(200), 1)  # coarse grid forces ties
    ev = classification_eval(labels, scores)
    assert abs(ev.auroc - pair_counted_auroc(labels, scores)) <= 1e-12

    conf_labels = np.array([1] * 3 + [0] * 7)
    conf_scores = np.array([0.9, 0.8, 0.1, 0.7, 0.2, 0.3, 0.1, 0.4, 0.2, 0.3])
    ev = classification_eval(conf_labels, conf_scores)
    assert (ev.tp, ev.fp, ev.fn, ev.tn) == (2, 1, 1, 6)
    assert ev.f1 == pytest.approx(4.0 / 6.0, abs=1e-12)
    assert ev.accuracy == pytest.approx(0.8, abs=1e-12)

    a = np.ones(25, dtype=bool)
    b = np.concatenate([np.zeros(20, dtype=bool), np.ones(5, dtype=bool)])
    res = mcnemar(a, b)
    assert (res.b, res.c) == (20, 0)
    assert abs(res.p_value - 2.0 ** -19) <= 1e-9
    report(6, f"flat predictor nrmse exactly 1, auroc == pair count, "
              f"f1 {ev.f1:.4f}, mcnemar p {res.p_value:.3e}")


# --- 7: synthetic generator hits its covariance target ----------------------


def test_criterion_07_synthetic_covariance_and_spurious_count():
    table = generate(SynthSpec(n=10_000, p=20, gamma=0.9, seed=0))
    cov = np.cov(table.values[:, :10], rowvar=False)
    idx = np.arange(10)
    target = 0.9 ** np.abs(idx[:, None] - idx[None, :])
    dev = float(np.abs(cov - target).max())
    assert dev < 0.08

    _, w = generate_with_weights(SynthSpec(n=50, p=100, gamma=0.7,
                                           spurious_fraction=0.2, seed=1))
    zeros = int((w == 0).sum())
    assert zeros == 20
    report(7, f"covariance off target by {dev:.3f}, spurious count {zeros}/100")


# --- 8: file formats survive round trips ------------------------------------


def test_criterion_08_format_round_trips(tmp_path):
    rng = np.random.default_rng(8)
    stack = ImageStack(rng.random((3, 5, 5)), ["a", "b", "c"])

    paths = write_pgm(stack, tmp_path / "pgm")
    first = [p.read_bytes() for p in paths]
    levels = np.stack([read_pgm(p) for p in paths]).astype(float) / 255.0
    again = write_pgm(ImageStack(levels, stack.sample_ids), tmp_path / "pgm2")
    assert [p.read_bytes() for p in again] == first

    tpath = tmp_path / "stack.bin"
    write_tensor(stack, tpath)
    blob = tpath.read_bytes()
    assert blob.startswith(b"REFINED-TENSOR v1 3 5 5\n")
    arr = read_tensor(tpath)
    assert arr.dtype == np.float32
    assert np.array_equal(arr, stack.pixels.astype(np.float32))
    write_tensor(ImageStack(arr, stack.sample_ids), tmp_path / "stack2.bin")
    assert (tmp_path / "stack2.bin").read_bytes() == blob

    dup = tmp_path / "dup.map"
    dup.write_text("REFINED-MAP v1\ngrid 3 3\nf1 0 0\nf2 0 0\n")
    with pytest.raises(DataError):
        read_map(dup)
    report(8, "pgm and tensor files byte-stable, duplicate pixel rejected")


# --- 9: command line is byte-deterministic ----------------------------------


TRUTH_TEXT = "id,y\n" + "".join(f"{i},{i / 24}\n" for i in range(1, 25))
PRED_TEXT = "id,y\n" + "".join(f"{i},{(i + 1) / 25}\n" for i in range(1, 25))


def cli_artifacts(base, threads):
    base.mkdir()
    def cli(*args):
        r = run_cli(["--threads", str(threads), *args], base)
        assert r.returncode == 0, r.stderr
        return r

    cli("synth", "--n", "30", "--p", "25", "--gamma", "0.7",
        "--spurious", "0.2", "--seed", "5", "--out", "data.csv")
    cli("fit", "--input", "data.csv", "--out", "map.txt", "--seed", "7",
        "--bmds-iters", "150", "--burnin", "50",
        "--trace-out", "trace.csv", "--locations-dir", "locs")
    cli("transform", "--input", "data.csv", "--map", "map.txt",
        "--out-dir", "imgs", "--format", "both", "--augment-automorphs")
    (base / "truth.csv").write_text(TRUTH_TEXT)
    (base / "pred.csv").write_text(PRED_TEXT)
    r = cli("eval", "--pred", "pred.csv", "--truth", "truth.csv",
            "--bootstrap", "300", "--seed", "1", "--out", "report.csv")

    art = {"eval-stdout": r.stdout}
    for path in sorted(base.rglob("*")):
        if path.is_file():
            art[str(path.relative_to(base))] = path.read_bytes()
    return art


def test_criterion_09_cli_byte_determinism(tmp_path):
    first = cli_artifacts(tmp_path / "r1", 1)
    repeat = cli_artifacts(tmp_path / "r2", 1)
    threaded = cli_artifacts(tmp_path / "r8", 8)
    assert first.keys() == repeat.keys() == threaded.keys()
    diff_repeat = [k for k in first if first[k] != repeat[k]]
    diff_threads = [k for k in first if first[k] != threaded[k]]
    assert not diff_repeat, f"unstable across runs: {diff_repeat}"
    assert not diff_threads, f"unstable across thread counts: {diff_threads}"
    report(9, f"{len(first)} artifacts byte-identical across runs "
              f"and across 1 vs 8 threads")
