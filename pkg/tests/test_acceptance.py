"""Acceptance criteria, one test each, with a printed PASS/FAIL line per criterion."""

import math
import re
import time

import numpy as np
import pytest

from _oracles import brute_force_jipda, central_difference, min_cost_by_permutation, textbook_kalman_update
from conftest import DATA, random_psd
from jipdatrack.appearance import angular_margin_loss, angular_margin_loss_grad, normalize, solve_assignment
from jipdatrack.association import ValidationContext, build_validation_context
from jipdatrack.cli import main
from jipdatrack.config import load_config, read_seqinfo
from jipdatrack.formats import read_keyvalue, read_results
from jipdatrack.jipda import JipdaParams, TrackStatus, compute_posterior, enumerate_joint_events, jipda_step
from jipdatrack.kinematics import GaussianState, MotionParams, is_psd, jipda_update, predict_measurement
from jipdatrack.metrics import evaluate, rows_to_frames
from jipdatrack.pipeline import track_sequence
from jipdatrack.sim import ScenarioSpec, benchmark_spec, generate, write_scenario

H = np.array([[1.0, 0, 0, 0], [0, 0, 1.0, 0]])


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def test_01_jipda_oracle_equivalence(report):
    rng = np.random.default_rng(101)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(500):
        m, n = int(rng.integers(0, 4)), int(rng.integers(1, 4))
        g = rng.uniform(0.01, 10.0, size=(m, n)) * (rng.random((m, n)) < 0.75)
        p = rng.uniform(0.0, 1.0, size=n)
        lam = rng.uniform(0.01, 3.0)
        params = JipdaParams(clutter_density=lam)
        ctx = ValidationContext(9.21, g > 0, g)
        post = compute_posterior(enumerate_joint_events(ctx), ctx, list(p), params)
        ex, beta, beta0, _ = brute_force_jipda(g.tolist(), p.tolist(), params.P_D, params.P_G, lam)
        worst = max(worst,
                    float(np.max(np.abs(post.existence_post - ex), initial=0.0)),
                    float(np.max(np.abs(post.beta - np.array(beta).reshape(m, n)), initial=0.0)),
                    float(np.max(np.abs(post.beta0 - beta0), initial=0.0)))
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1e-9 and elapsed < 10.0,
           f"max abs deviation {worst:.2e} over 500 instances in {elapsed:.2f} s")


def test_02_normalization_and_psd_on_long_run(report):
    spec = ScenarioSpec(seed=21, duration=1000, area=(0.0, 0.0, 200.0, 200.0), n_targets=10,
                        P_D=0.99, clutter_rate=15.0, crossing=False, embedding_dim=2, name="LONG")
    sc = generate(spec)
    params = JipdaParams(clutter_density=spec.clutter_density)
    motion = MotionParams(spec.dt, 0.836, 0.141)
    frames = {f: [] for f in range(1, spec.duration + 1)}
    for d in sc.detections:
        frames[d.frame].append(d)
    tracks, next_id = [], 1
    worst_norm, bad_psd = 0.0, 0
    t0 = time.perf_counter()
    for frame, dets in frames.items():
        tracks, post = jipda_step(tracks, dets, params, motion, next_id, frame)
        alive = post.existence_post > 0
        total = post.beta0 + post.beta.sum(axis=0)
        if alive.any():
            worst_norm = max(worst_norm, float(np.max(np.abs(total[alive] - 1.0))))
        bad_psd += sum(not is_psd(t.state.covariance) for t in tracks)
        if tracks:
            next_id = max(next_id, max(t.id for t in tracks) + 1)
        tracks = [t for t in tracks if t.status is not TrackStatus.DELETED]
    elapsed = time.perf_counter() - t0
    report(2, worst_norm <= 1e-9 and bad_psd == 0,
           f"1000 frames, max |beta0 + sum beta - 1| = {worst_norm:.2e}, "
           f"non-PSD covariances = {bad_psd}, {elapsed:.1f} s")


def test_03_kalman_collapse(report):
    rng = np.random.default_rng(303)
    motion = MotionParams(0.04, 0.836, 0.141)
    R = 0.141**2 * np.eye(2)
    worst = 0.0
    for _ in range(1000):
        P = random_psd(rng, scale=rng.uniform(0.05, 3.0))
        x = rng.standard_normal(4) * 10
        s = GaussianState(x, P)
        pred = predict_measurement(s, motion)
        z = pred.z_hat + rng.multivariate_normal(np.zeros(2), pred.S)
        out = jipda_update(s, pred, [z], [1.0], 0.0)
        x_ref, P_ref = textbook_kalman_update(x, P, z, H, R)
        worst = max(worst,
                    np.linalg.norm(out.mean - x_ref) / np.linalg.norm(x_ref),
                    np.linalg.norm(out.covariance - P_ref) / np.linalg.norm(P_ref))
    report(3, worst <= 1e-10, f"max relative deviation {worst:.2e} over 1000 states")


def test_04_gate_coverage(report):
    rng = np.random.default_rng(404)
    A = rng.standard_normal((2, 2))
    S = A @ A.T + 0.05 * np.eye(2)
    s = GaussianState([3.0, 0.0, -1.0, 0.0], np.zeros((4, 4)))
    pred = predict_measurement(s, MotionParams(0.04, 0.836, 0.141))
    pred = type(pred)(pred.z_hat, S, pred.gain)
    z = rng.multivariate_normal(pred.z_hat, S, size=100_000)
    ctx = build_validation_context([pred], list(z), 0.99)
    frac = float(ctx.gate_matrix.mean())
    report(4, abs(frac - 0.990) <= 0.005, f"in-gate fraction {frac:.4f} over 1e5 samples (target 0.990)")


def test_05_benchmark_tracking_quality(report, tmp_path):
    seq_dir = write_scenario(generate(benchmark_spec(seed=7)), tmp_path / "BENCH")
    seq = read_seqinfo(seq_dir)
    cfg = load_config()
    t0 = time.perf_counter()
    rows, run = track_sequence(seq, cfg)
    elapsed = time.perf_counter() - t0
    gt = read_results(seq.gt_path)
    n = seq.length
    score = evaluate(rows_to_frames(gt, n), rows_to_frames(rows, n), 1.0)
    gt_count = np.bincount([r.frame for r in gt], minlength=n + 1)[1:]
    hyp_count = np.bincount([r.frame for r in rows], minlength=n + 1)[1:]
    within = float(np.mean(np.abs(gt_count - hyp_count) <= 1))
    ok = score.mota >= 0.90 and within >= 0.95 and elapsed < 30.0
    report(5, ok, f"MOTA {score.mota:.4f} (FP {score.fp}, FN {score.fn}, IDs {score.ids}), "
                  f"track count within +-1 in {100 * within:.1f}% of frames, {elapsed:.1f} s, "
                  f"max joint events {run.max_joint_events}")


def test_06_assignment_optimality(report):
    rng = np.random.default_rng(606)
    worst = 0.0
    for _ in range(1000):
        r, c = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        cost = rng.uniform(0.0, 1.0, size=(r, c))
        pairs = solve_assignment(cost)
        total = sum(cost[i, j] for i, j in pairs)
        worst = max(worst, abs(total - min_cost_by_permutation(cost.tolist())))
    report(6, worst <= 1e-12, f"max gap to exhaustive optimum {worst:.2e} over 1000 matrices")


def test_07_angular_loss_gradient(report):
    rng = np.random.default_rng(707)
    worst, checked, negative = 0.0, 0, 0
    while checked < 1000:
        dim = int(rng.integers(2, 17))
        alpha = math.radians(rng.uniform(5.0, 40.0))
        m = rng.uniform(0.0, 0.5)
        r, p, q = (normalize(rng.standard_normal(dim)) for _ in range(3))
        negative += angular_margin_loss(r, p, q, alpha, m) < 0
        x = np.concatenate([r, p, q])

        def f(v):
            return angular_margin_loss(v[:dim], v[dim:2 * dim], v[2 * dim:], alpha, m)

        if f(x) <= 1e-3:
            continue
        analytic = np.concatenate(angular_margin_loss_grad(r, p, q, alpha, m))
        numeric = central_difference(f, x)
        worst = max(worst, np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric))
        checked += 1
    report(7, worst <= 1e-5 and negative == 0,
           f"max relative gradient error {worst:.2e} over 1000 active triplets; negative losses {negative}")


def test_08_similarity_separation(report):
    from jipdatrack.appearance import similarity_histograms

    sc = generate(benchmark_spec(seed=7))
    assert sc.spec.embedding_noise == 0.15
    obs, index = {}, {}
    for row in sc.ground_truth:
        i = index.get(row.frame, 0)
        index[row.frame] = i + 1
        obs.setdefault(row.frame, {})[row.track_id] = sc.gt_embeddings[(row.frame, i)]
    s = similarity_histograms(obs, lags=[1, 3, 5]).summary()
    lag1, cross, lag5 = s["lag1"], s["cross"], s["lag5"]
    separated = cross["q3"] < lag1["q1"] or lag1["q3"] < cross["q1"]
    ok = separated and lag5["mean"] <= lag1["mean"]
    report(8, ok, f"lag-1 IQR [{lag1['q1']:.3f}, {lag1['q3']:.3f}], cross IQR [{cross['q1']:.3f}, {cross['q3']:.3f}], "
                  f"lag-5 mean {lag5['mean']:.4f} vs lag-1 mean {lag1['mean']:.4f}")


def test_09_metric_fixtures(report):
    results = []
    for name in ("perfect", "mixed", "sticky"):
        d = DATA / "metrics" / name
        exp = read_keyvalue(d / "expected.txt")
        n = int(exp["frames"])
        s = evaluate(rows_to_frames(read_results(d / "gt.txt"), n), rows_to_frames(read_results(d / "hyp.txt"), n),
                     float(exp["threshold"]))
        got = (s.mota, s.fp, s.fn, s.ids)
        want = (float(exp["mota"]), int(exp["fp"]), int(exp["fn"]), int(exp["ids"]))
        results.append((name, got == want, got))
    detail = "; ".join(f"{name} MOTA {g[0]} FP {g[1]} FN {g[2]} IDs {g[3]}" for name, _, g in results)
    report(9, all(ok for _, ok, _ in results), detail)


TIMING = re.compile(r"^wall_clock_per_frame_ms=.*$", re.MULTILINE)


def _run_all(root, capsys):
    """Every subcommand once; returns stdout per command with timing lines removed."""
    root.mkdir(parents=True)
    cfg = root / "small.cfg"
    cfg.write_text("sim_duration=60\nsim_clutter_rate=5\n")
    outputs = {}

    def run(key, argv):
        capsys.readouterr()
        assert main(argv) == 0, key
        outputs[key] = TIMING.sub("", capsys.readouterr().out)

    run("simulate_a", ["simulate", "--config", str(cfg), "--seed", "3", "--out", str(root / "seqs" / "A")])
    run("simulate_b", ["simulate", "--config", str(cfg), "--seed", "4", "--out", str(root / "seqs" / "B")])
    run("track_jipda", ["track", "--config", str(cfg), "--seq-dir", str(root / "seqs"), "--out", str(root / "jipda")])
    run("track_gnn", ["track", "--config", str(cfg), "--mode", "gnn", "--seq-dir", str(root / "seqs"),
                      "--out", str(root / "gnn")])
    run("eval", ["eval", "--config", str(cfg), "--seq-dir", str(root / "seqs"), "--results", str(root / "jipda"),
                 "--out", str(root / "scores")])
    run("simhist", ["simhist", "--config", str(cfg), "--seq-dir", str(root / "seqs"), "--out", str(root / "hist")])
    files = {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
    return outputs, files


def test_10_cli_determinism(report, tmp_path, capsys):
    out1, files1 = _run_all(tmp_path / "run1", capsys)
    out2, files2 = _run_all(tmp_path / "run2", capsys)
    same_names = sorted(files1) == sorted(files2)
    differing = [k for k in files1 if files1[k] != files2.get(k)]
    stdout_diff = [k for k in out1 if out1[k] != out2[k]]
    ok = same_names and not differing and not stdout_diff
    report(10, ok, f"{len(files1)} output files over 6 commands; differing files {differing or 'none'}, "
                   f"differing stdout {stdout_diff or 'none'} (timing line excluded)")
