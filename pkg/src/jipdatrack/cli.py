"""Command-line driver: ``track``, ``eval``, ``simulate`` and ``simhist``.

Exit codes: 0 success, 1 other tracking error, 2 usage error,
3 configuration error, 4 parse/format error, 5 joint-event blow-up.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import RunConfig, discover_sequences, load_config
from .errors import (
    CombinatorialBlowupError,
    ConfigError,
    DomainError,
    FormatError,
    ParseError,
    TrackingError,
)
from .formats import atomic_write_text, read_results, write_results
from .pipeline import (
    read_ground_truth,
    score_fields,
    score_rows,
    sequence_length,
    sequence_similarity,
    track_sequence,
)
from .plotting import plot_scores, plot_similarity_histograms, plot_tracks
from .sim import generate, write_scenario

log = logging.getLogger("jipdatrack")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 3
EXIT_PARSE = 4
EXIT_BLOWUP = 5

EFFECTIVE_CONFIG = "effective_config.txt"


def _config(args) -> RunConfig:
    overrides = {}
    if getattr(args, "mode", None):
        overrides["mode"] = args.mode
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "metric", None):
        overrides["metric_mode"] = args.metric
    if getattr(args, "threshold", None) is not None:
        overrides["metric_threshold"] = args.threshold
    return load_config(args.config, overrides)


def _emit_config(cfg: RunConfig, out: Path, args) -> None:
    atomic_write_text(out / EFFECTIVE_CONFIG, cfg.dump())
    if args.emit_effective_config:
        sys.stdout.write(cfg.dump())
    for w in cfg.warnings:
        log.warning(w)


def _track_one(seq, cfg, out: Path):
    rows, report = track_sequence(seq, cfg)
    write_results(out / f"{seq.name}.txt", rows)
    gt = read_ground_truth(seq) if seq.gt_path.is_file() else None
    plot_tracks(out / f"{seq.name}_tracks.png", rows, gt, title=f"{seq.name} ({cfg.mode})")
    return report


def cmd_track(args) -> int:
    cfg = _config(args)
    seq_root = args.seq_dir or cfg["seq_dir"]
    if seq_root is None:
        raise ConfigError("no sequence directory given (--seq-dir or seq_dir=)")
    seqs = discover_sequences(seq_root)
    out = Path(args.out)
    _emit_config(cfg, out, args)
    if len(seqs) == 1:
        reports = [_track_one(seqs[0], cfg, out)]
    else:
        with ProcessPoolExecutor(max_workers=min(len(seqs), args.workers)) as pool:
            reports = list(pool.map(_track_one, seqs, [cfg] * len(seqs), [out] * len(seqs)))
    for report in reports:
        sys.stdout.write("[run-report]\n" + "\n".join(report.lines()) + "\n")
    return EXIT_OK


def _results_path(results: Path, name: str) -> Path:
    if results.is_file():
        return results
    path = results / f"{name}.txt"
    if not path.is_file():
        raise ConfigError(f"no results file {str(path)!r} for sequence {name!r}")
    return path


def cmd_eval(args) -> int:
    cfg = _config(args)
    seqs = discover_sequences(args.seq_dir or cfg["seq_dir"])
    results = Path(args.results)
    if not results.exists():
        raise ConfigError(f"results path {str(results)!r} does not exist")
    table = {}
    totals = dict(fp=0, fn=0, ids=0, gt=0, matches=0, dist=0.0)
    for seq in seqs:
        gt = read_ground_truth(seq)
        hyp = read_results(_results_path(results, seq.name))
        n_frames = sequence_length(seq, gt)
        score = score_rows(gt, hyp, n_frames, cfg)
        table[seq.name] = score
        totals["fp"] += score.fp
        totals["fn"] += score.fn
        totals["ids"] += score.ids
        totals["gt"] += score.gt_total
        totals["matches"] += score.matches
        if score.matches:
            totals["dist"] += score.mean_distance * score.matches

    header = ["sequence", "mota", "motp", "fp", "fn", "ids", "gt_total", "matches"]
    lines = [",".join(header)]
    for name, score in table.items():
        f = score_fields(score)
        lines.append(",".join([name] + [f[k] for k in header[1:]]))
    if len(table) > 1:
        mota = 1.0 - (totals["fp"] + totals["fn"] + totals["ids"]) / totals["gt"]
        mean_d = totals["dist"] / totals["matches"] if totals["matches"] else float("nan")
        motp = 1.0 - mean_d / cfg.metric_threshold if cfg.metric_mode == "point" else 1.0 - mean_d
        lines.append(",".join(["TOTAL", f"{mota:.6f}", f"{motp:.6f}", str(totals["fp"]), str(totals["fn"]),
                               str(totals["ids"]), str(totals["gt"]), str(totals["matches"])]))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        _emit_config(cfg, out, args)
        atomic_write_text(out / "scores.txt", text)
        plot_scores(out / "scores.png", {k: {"mota": v.mota} for k, v in table.items()})
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    spec = cfg.scenario_spec(args.seed)
    out = Path(args.out)
    scenario = generate(spec)
    write_scenario(scenario, out)
    _emit_config(cfg, out, args)
    plot_tracks(out / "scenario.png", scenario.ground_truth, None, title=f"{spec.name} ground truth")
    meta = scenario.metadata()
    sys.stdout.write("[scenario]\n" + "\n".join(f"{k}={v}" for k, v in meta.items())
                     + f"\ndetections={len(scenario.detections)}\n")
    return EXIT_OK


def _parse_lags(text: str) -> list[int]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise DomainError("at least one frame lag is required")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise DomainError(f"lags must be integers, got {text!r}") from None


def cmd_simhist(args) -> int:
    cfg = _config(args)
    seqs = discover_sequences(args.seq_dir or cfg["seq_dir"])
    lags = _parse_lags(args.lags)
    out = Path(args.out)
    _emit_config(cfg, out, args)
    for seq in seqs:
        hist = sequence_similarity(seq, lags)
        names = list(hist.counts)
        lines = [",".join(["bin_lo", "bin_hi"] + names)]
        for b in range(len(hist.edges) - 1):
            lines.append(",".join([f"{hist.edges[b]:.2f}", f"{hist.edges[b + 1]:.2f}"]
                                  + [str(int(hist.counts[n][b])) for n in names]))
        atomic_write_text(out / f"{seq.name}_simhist.txt", "\n".join(lines) + "\n")
        plot_similarity_histograms(out / f"{seq.name}_simhist.png", hist.edges, hist.counts,
                                   title=f"{seq.name} embedding similarity")
        sys.stdout.write(f"[simhist {seq.name}]\n")
        for name, stats in hist.summary().items():
            sys.stdout.write(f"{name}: n={stats['n']} mean={stats['mean']:.4f} q1={stats['q1']:.4f} "
                             f"median={stats['median']:.4f} q3={stats['q3']:.4f}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jipdatrack", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seq=True):
        p.add_argument("--config", default=None, help="key=value configuration file")
        if seq:
            p.add_argument("--seq-dir", default=None, help="sequence directory or directory of sequences")
        p.add_argument("--emit-effective-config", action="store_true",
                       help="also print the effective configuration to stdout")

    p = sub.add_parser("track", help="run a tracker over sequences")
    common(p)
    p.add_argument("--mode", choices=("jipda", "gnn"), default=None)
    p.add_argument("--out", required=True, help="output directory for results and figures")
    p.add_argument("--workers", type=int, default=4)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="CLEAR-MOT scores of results against ground truth")
    common(p)
    p.add_argument("--results", required=True, help="results file or directory of <sequence>.txt files")
    p.add_argument("--metric", choices=("point", "box"), default=None)
    p.add_argument("--threshold", type=float, default=None,
                   help="max distance (point) or min IoU (box)")
    p.add_argument("--out", default=None, help="directory for scores.txt and scores.png")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="write a synthetic sequence directory")
    common(p, seq=False)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("simhist", help="embedding similarity histograms at frame lags")
    common(p)
    p.add_argument("--lags", default="1,3,5", help="comma-separated frame lags")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simhist)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (ParseError, FormatError) as exc:
        log.error("input error: %s", exc)
        return EXIT_PARSE
    except CombinatorialBlowupError as exc:
        log.error("%s", exc)
        return EXIT_BLOWUP
    except TrackingError as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    except FileNotFoundError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
