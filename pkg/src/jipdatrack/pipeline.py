"""Per-sequence drivers shared by the command line and the tests."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .appearance import GnnTracker, similarity_histograms
from .config import RunConfig, SequenceInfo
from .errors import EvaluationError, FormatError
from .formats import Detection, ResultRow, group_by_frame, read_detections, read_embeddings, read_results
from .jipda import JipdaTracker
from .metrics import MotScore, evaluate, rows_to_frames


@dataclass
class RunReport:
    sequence: str
    mode: str
    frames: int
    detections: int
    tracks_reported: int
    max_joint_events: int
    mean_frame_seconds: float
    config_hash: str
    score: MotScore | None = None
    extra: dict = field(default_factory=dict)

    def lines(self, timing: bool = True) -> list[str]:
        out = [
            f"sequence={self.sequence}",
            f"mode={self.mode}",
            f"frames={self.frames}",
            f"detections={self.detections}",
            f"tracks_reported={self.tracks_reported}",
            f"max_joint_events={self.max_joint_events}",
            f"config_hash={self.config_hash}",
        ]
        if timing:
            out.append(f"wall_clock_per_frame_ms={1000.0 * self.mean_frame_seconds:.3f}")
        if self.score is not None:
            out += [f"{k}={v}" for k, v in score_fields(self.score).items()]
        return out


def score_fields(score: MotScore) -> dict[str, str]:
    return {
        "mota": f"{score.mota:.6f}",
        "motp": f"{score.motp:.6f}",
        "fp": str(score.fp),
        "fn": str(score.fn),
        "ids": str(score.ids),
        "gt_total": str(score.gt_total),
        "matches": str(score.matches),
    }


def sequence_length(seq: SequenceInfo, *row_lists) -> int:
    if seq.length is not None:
        return seq.length
    frames = [r.frame for rows in row_lists for r in rows]
    return max(frames, default=0)


def attach_embeddings(detections: list[Detection], table) -> list[Detection]:
    out = []
    for d in detections:
        key = (d.frame, d.embedding_index)
        if key not in table:
            raise FormatError(f"no embedding for frame {d.frame}, detection {d.embedding_index}")
        out.append(replace(d, embedding=table[key]))
    return out


def read_ground_truth(seq: SequenceInfo) -> list[ResultRow]:
    """Ground-truth rows; rows whose flag column is 0 are ignored as in MOT files."""
    return [r for r in read_results(seq.gt_path) if r.confidence != 0]


def track_sequence(seq: SequenceInfo, cfg: RunConfig) -> tuple[list[ResultRow], RunReport]:
    detections = read_detections(seq.det_path, cfg["conf_threshold"]) if seq.det_path.is_file() else []
    gt = read_ground_truth(seq) if seq.gt_path.is_file() else None
    n_frames = sequence_length(seq, detections, gt or [])
    frames = group_by_frame(detections, n_frames)

    rows: list[ResultRow] = []
    max_events = 0
    t0 = time.perf_counter()
    if cfg.mode == "jipda":
        tracker = JipdaTracker(cfg.jipda_params(seq.volume), cfg.motion(seq.frame_rate))
        for frame, dets in frames.items():
            tracker.step(dets, frame)
            for t in tracker.confirmed():
                rows.append(ResultRow(frame, t.id, tuple(float(v) for v in t.state.position),
                                      None, t.existence))
        max_events = tracker.max_events
    else:
        table = read_embeddings(seq.det_embeddings_path)
        tracker = GnnTracker(cfg.gnn_params())
        for frame, dets in frames.items():
            tracker.step(attach_embeddings(dets, table))
            for t in tracker.reported():
                rows.append(ResultRow(frame, t.id, tuple(float(v) for v in t.position), t.box, 1.0))
    elapsed = time.perf_counter() - t0

    score = None
    if gt is not None:
        score = score_rows(gt, rows, n_frames, cfg)
    report = RunReport(
        sequence=seq.name,
        mode=cfg.mode,
        frames=n_frames,
        detections=len(detections),
        tracks_reported=len({r.track_id for r in rows}),
        max_joint_events=max_events,
        mean_frame_seconds=elapsed / max(n_frames, 1),
        config_hash=cfg.digest(),
        score=score,
    )
    return rows, report


def score_rows(gt: list[ResultRow], hyp: list[ResultRow], n_frames: int, cfg: RunConfig) -> MotScore:
    mode = cfg.metric_mode
    last_hyp = max((r.frame for r in hyp), default=0)
    if last_hyp > n_frames:
        raise EvaluationError(f"results reach frame {last_hyp} but the sequence has {n_frames} frames")
    return evaluate(rows_to_frames(gt, n_frames, mode), rows_to_frames(hyp, n_frames, mode),
                    cfg.metric_threshold, mode)


def gt_observations(seq: SequenceInfo) -> dict[int, dict[int, np.ndarray]]:
    """Ground-truth embeddings keyed by frame and identity."""
    table = read_embeddings(seq.gt_embeddings_path)
    records = read_results(seq.gt_path)
    obs: dict[int, dict[int, np.ndarray]] = {}
    index: dict[int, int] = {}
    for r in records:
        i = index.get(r.frame, 0)
        index[r.frame] = i + 1
        if r.confidence == 0:
            continue
        key = (r.frame, i)
        if key not in table:
            raise FormatError(f"no ground-truth embedding for frame {r.frame}, row {i}")
        obs.setdefault(r.frame, {})[r.track_id] = table[key]
    return obs


def sequence_similarity(seq: SequenceInfo, lags):
    return similarity_histograms(gt_observations(seq), lags)
