"""CLEAR-MOT scoring (MOTA, MOTP, FP, FN, identity switches)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .appearance import solve_assignment
from .errors import EvaluationError, ShapeError
from .formats import ResultRow

POINT = "point"
BOX = "box"
_INFEASIBLE = 1e9


@dataclass(frozen=True)
class FrameAnnotations:
    frame: int
    objects: list[tuple[int, tuple[float, ...]]] = field(default_factory=list)

    def __post_init__(self):
        ids = [o[0] for o in self.objects]
        if len(ids) != len(set(ids)):
            raise EvaluationError(f"frame {self.frame}: duplicate identities {sorted(ids)}")


@dataclass(frozen=True)
class MotScore:
    mota: float
    motp: float
    fp: int
    fn: int
    ids: int
    gt_total: int
    matches: int
    hyp_total: int
    mean_distance: float


def iou(a: Sequence[float], b: Sequence[float]) -> float:
    """IoU of two ``(left, top, width, height)`` boxes."""
    ax0, ay0, aw, ah = a
    bx0, by0, bw, bh = b
    iw = min(ax0 + aw, bx0 + bw) - max(ax0, bx0)
    ih = min(ay0 + ah, by0 + bh) - max(ay0, by0)
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


class _Distance:
    """Distance and acceptance test for one evaluation mode.

    In point mode ``threshold`` is a maximum Euclidean distance; in box mode it
    is a minimum IoU and the distance is ``1 - IoU``.
    """

    def __init__(self, mode: str, threshold: float):
        if mode not in (POINT, BOX):
            raise EvaluationError(f"unknown metric mode {mode!r}")
        if threshold <= 0 or (mode == BOX and threshold > 1):
            raise EvaluationError(f"invalid threshold {threshold!r} for {mode} mode")
        self.mode = mode
        self.threshold = threshold
        self.max_distance = threshold if mode == POINT else 1.0 - threshold

    def __call__(self, a, b) -> float:
        if self.mode == POINT:
            return float(np.hypot(a[0] - b[0], a[1] - b[1]))
        return 1.0 - iou(a, b)

    def accepts(self, d: float) -> bool:
        return d <= self.max_distance + 1e-12


def evaluate(
    gt: Sequence[FrameAnnotations],
    hyp: Sequence[FrameAnnotations],
    dist_threshold: float = 1.0,
    mode: str = POINT,
) -> MotScore:
    """Score a hypothesis sequence against ground truth, frame by frame.

    Correspondences from the previous frame are kept while still within the
    threshold; the remaining objects are matched by minimum total distance.
    An identity switch is counted when a ground-truth object is matched to a
    different hypothesis than at its last match.

    MOTP is reported on a higher-is-better [0, 1] scale: mean IoU in box mode,
    ``1 - mean_distance / threshold`` in point mode.
    """
    if len(gt) != len(hyp):
        raise EvaluationError(f"frame count mismatch: {len(gt)} ground-truth vs {len(hyp)} hypothesis frames")
    dist = _Distance(mode, dist_threshold)
    previous: dict[int, int] = {}
    last_match: dict[int, int] = {}
    fp = fn = ids = gt_total = hyp_total = matches = 0
    dist_sum = 0.0

    for g_frame, h_frame in zip(gt, hyp):
        if g_frame.frame != h_frame.frame:
            raise EvaluationError(f"frames not aligned: {g_frame.frame} vs {h_frame.frame}")
        g_objs = dict(g_frame.objects)
        h_objs = dict(h_frame.objects)
        gt_total += len(g_objs)
        hyp_total += len(h_objs)

        current: dict[int, int] = {}
        frame_dists: list[float] = []
        for g_id, h_id in previous.items():
            if g_id in g_objs and h_id in h_objs:
                d = dist(g_objs[g_id], h_objs[h_id])
                if dist.accepts(d):
                    current[g_id] = h_id
                    frame_dists.append(d)

        used_h = set(current.values())
        free_g = [g for g in g_objs if g not in current]
        free_h = [h for h in h_objs if h not in used_h]
        if free_g and free_h:
            cost = np.full((len(free_g), len(free_h)), _INFEASIBLE)
            for a, g_id in enumerate(free_g):
                for b, h_id in enumerate(free_h):
                    d = dist(g_objs[g_id], h_objs[h_id])
                    if dist.accepts(d):
                        cost[a, b] = d
            for a, b in solve_assignment(cost):
                if cost[a, b] < _INFEASIBLE:
                    current[free_g[a]] = free_h[b]
                    frame_dists.append(cost[a, b])

        for g_id, h_id in current.items():
            if g_id in last_match and last_match[g_id] != h_id:
                ids += 1
            last_match[g_id] = h_id

        matches += len(current)
        fn += len(g_objs) - len(current)
        fp += len(h_objs) - len(current)
        dist_sum += sum(frame_dists)
        previous = current

    if gt_total == 0:
        raise EvaluationError("ground truth is empty; MOTA is undefined")
    mean_distance = dist_sum / matches if matches else float("nan")
    if mode == POINT:
        motp = 1.0 - mean_distance / dist_threshold if matches else float("nan")
    else:
        motp = 1.0 - mean_distance if matches else float("nan")
    mota = 1.0 - (fp + fn + ids) / gt_total
    return MotScore(mota, motp, fp, fn, ids, gt_total, matches, hyp_total, mean_distance)


def rows_to_frames(rows: Iterable[ResultRow], n_frames: int, mode: str = POINT) -> list[FrameAnnotations]:
    """Group result/gt rows into one FrameAnnotations per frame ``1..n_frames``."""
    frames: dict[int, list] = {f: [] for f in range(1, n_frames + 1)}
    for r in rows:
        if r.frame not in frames:
            raise EvaluationError(f"row for frame {r.frame} outside 1..{n_frames}")
        if mode == POINT:
            if r.position is None:
                raise ShapeError(f"frame {r.frame}, id {r.track_id}: no position for point-mode evaluation")
            value = tuple(r.position)
        else:
            if r.box is None:
                raise ShapeError(f"frame {r.frame}, id {r.track_id}: no box for box-mode evaluation")
            value = tuple(r.box)
        frames[r.frame].append((r.track_id, value))
    return [FrameAnnotations(f, objs) for f, objs in sorted(frames.items())]
