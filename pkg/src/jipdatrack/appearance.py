"""Appearance cues: embedding similarity, the margin-extended angular loss, and
a position-agnostic global-nearest-neighbour (GNN) tracker."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DomainError, ParameterError, ShapeError
from .formats import Detection

DEFAULT_DIM = 64
DEFAULT_ALPHA = math.radians(45.0)
DEFAULT_MARGIN = 0.1


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0 or not np.isfinite(norm):
        raise DomainError("cannot normalize a zero or non-finite vector")
    return v / norm


def similarity(a, b) -> float:
    """Inner product of two unit embeddings mapped from [-1, 1] to [0, 1]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"embedding shapes differ: {a.shape} vs {b.shape}")
    return float(np.clip((1.0 + a @ b) / 2.0, 0.0, 1.0))


def similarity_matrix(A, B) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.size and B.size and A.shape[1] != B.shape[1]:
        raise ShapeError(f"embedding dimensions differ: {A.shape[1]} vs {B.shape[1]}")
    if A.size == 0 or B.size == 0:
        return np.zeros((A.shape[0] if A.size else 0, B.shape[0] if B.size else 0))
    return np.clip((1.0 + A @ B.T) / 2.0, 0.0, 1.0)


def _check_alpha(alpha: float) -> float:
    if not (0.0 < alpha < math.pi / 2):
        raise DomainError(f"alpha must lie in (0, pi/2), got {alpha!r}")
    return 4.0 * math.tan(alpha) ** 2


def angular_margin_loss(r, p, q, alpha: float = DEFAULT_ALPHA, m: float = DEFAULT_MARGIN) -> float:
    """Hinge ``max(0, m + |r - p| - 4 tan^2(alpha) |q - c|)`` with ``c = (r + p) / 2``.

    ``r`` and ``p`` share an identity, ``q`` is the negative. Vectors are used
    as given (no re-normalization), so the value is a plain function of the
    raw coordinates.
    """
    k = _check_alpha(alpha)
    r, p, q = (np.asarray(v, dtype=float) for v in (r, p, q))
    c = 0.5 * (r + p)
    return max(0.0, m + float(np.linalg.norm(r - p)) - k * float(np.linalg.norm(q - c)))


def angular_margin_loss_grad(r, p, q, alpha: float = DEFAULT_ALPHA, m: float = DEFAULT_MARGIN):
    """Analytic gradient of :func:`angular_margin_loss` w.r.t. ``(r, p, q)``.

    Zero when the hinge is inactive. Where a norm is exactly zero, its
    gradient contribution is taken as zero.
    """
    k = _check_alpha(alpha)
    r, p, q = (np.asarray(v, dtype=float) for v in (r, p, q))
    zeros = (np.zeros_like(r), np.zeros_like(p), np.zeros_like(q))
    c = 0.5 * (r + p)
    rp = r - p
    qc = q - c
    n_rp = float(np.linalg.norm(rp))
    n_qc = float(np.linalg.norm(qc))
    if m + n_rp - k * n_qc <= 0.0:
        return zeros
    a = rp / n_rp if n_rp > 0 else np.zeros_like(rp)
    u = qc / n_qc if n_qc > 0 else np.zeros_like(qc)
    # dc/dr = dc/dp = I/2, so -k|q - c| contributes +k u / 2 to both
    grad_r = a + 0.5 * k * u
    grad_p = -a + 0.5 * k * u
    grad_q = -k * u
    return grad_r, grad_p, grad_q


def solve_assignment(cost) -> list[tuple[int, int]]:
    """Exact minimum-cost rectangular assignment as sorted (row, col) pairs."""
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ShapeError(f"cost matrix must be 2-D, got shape {cost.shape}")
    if cost.size == 0:
        return []
    rows, cols = linear_sum_assignment(cost)
    return sorted(zip(rows.tolist(), cols.tolist()))


@dataclass(frozen=True)
class GnnParams:
    sim_gate: float = 0.5
    max_age: int = 30
    min_hits: int = 2
    smoothing: float = 0.3
    smooth_embeddings: bool = True

    def __post_init__(self):
        if not (0.0 <= self.sim_gate <= 1.0):
            raise ParameterError(f"sim_gate must lie in [0, 1], got {self.sim_gate!r}")
        if self.max_age < 1 or self.min_hits < 1:
            raise ParameterError("max_age and min_hits must be >= 1")
        if not (0.0 <= self.smoothing <= 1.0):
            raise ParameterError(f"smoothing must lie in [0, 1], got {self.smoothing!r}")


@dataclass(frozen=True)
class GnnTrack:
    id: int
    embedding: np.ndarray = field(repr=False)
    position: np.ndarray
    box: tuple | None = None
    hits: int = 1
    time_since_update: int = 0
    age: int = 0

    @property
    def reportable(self) -> bool:
        return self.time_since_update == 0


def gnn_step(
    tracks: Sequence[GnnTrack],
    detections: Sequence[Detection],
    params: GnnParams,
    next_id: int = 1,
) -> list[GnnTrack]:
    """One frame of appearance-only global nearest neighbour tracking.

    The returned list holds surviving tracks followed by tracks spawned from
    unmatched detections (ids ``next_id, next_id + 1, ...`` in detection order).
    """
    for d in detections:
        if d.embedding is None:
            raise ShapeError(f"detection in frame {d.frame} has no embedding")
    T = np.array([t.embedding for t in tracks]) if tracks else np.zeros((0, 0))
    D = np.array([d.embedding for d in detections]) if detections else np.zeros((0, 0))
    sim = similarity_matrix(T, D)
    matches = [(j, i) for j, i in solve_assignment(1.0 - sim) if sim[j, i] >= params.sim_gate]
    matched_tracks = {j: i for j, i in matches}
    matched_dets = {i for _, i in matches}

    out = []
    for j, t in enumerate(tracks):
        if j in matched_tracks:
            det = detections[matched_tracks[j]]
            if params.smooth_embeddings:
                emb = normalize((1.0 - params.smoothing) * t.embedding + params.smoothing * det.embedding)
            else:
                emb = det.embedding
            out.append(replace(t, embedding=emb, position=det.position, box=det.box,
                               hits=t.hits + 1, time_since_update=0, age=t.age + 1))
        elif t.time_since_update + 1 <= params.max_age:
            out.append(replace(t, time_since_update=t.time_since_update + 1, age=t.age + 1))
    k = 0
    for i, det in enumerate(detections):
        if i in matched_dets:
            continue
        out.append(GnnTrack(id=next_id + k, embedding=det.embedding, position=det.position, box=det.box))
        k += 1
    return out


class GnnTracker:
    def __init__(self, params: GnnParams):
        self.params = params
        self.tracks: list[GnnTrack] = []
        self.next_id = 1

    def step(self, detections: Sequence[Detection]) -> list[GnnTrack]:
        self.tracks = gnn_step(self.tracks, detections, self.params, self.next_id)
        if self.tracks:
            self.next_id = max(self.next_id, max(t.id for t in self.tracks) + 1)
        return self.tracks

    def reported(self) -> list[GnnTrack]:
        """Tracks matched this frame with at least ``min_hits`` matches."""
        return [t for t in self.tracks if t.reportable and t.hits >= self.params.min_hits]


HIST_BINS = 50


@dataclass
class SimilarityHistograms:
    edges: np.ndarray
    counts: dict[str, np.ndarray]
    samples: dict[str, np.ndarray] = field(repr=False)

    def summary(self) -> dict[str, dict[str, float]]:
        out = {}
        for name, s in self.samples.items():
            if s.size:
                q1, med, q3 = np.quantile(s, [0.25, 0.5, 0.75])
                out[name] = {"n": int(s.size), "mean": float(s.mean()), "q1": float(q1),
                             "median": float(med), "q3": float(q3)}
            else:
                out[name] = {"n": 0, "mean": float("nan"), "q1": float("nan"),
                             "median": float("nan"), "q3": float("nan")}
        return out


def similarity_histograms(
    observations: dict[int, dict[int, np.ndarray]],
    lags: Sequence[int] = (1, 3, 5),
    bins: int = HIST_BINS,
) -> SimilarityHistograms:
    """Binned similarity distributions for same-identity pairs and cross-identity pairs.

    ``observations`` maps frame -> {identity: unit embedding}. For each lag
    ``l`` the same-identity distribution collects ``similarity(e_t, e_{t+l})``
    over every identity seen in both frames. The cross-identity distribution
    collects all pairs of distinct identities within a frame.
    """
    lags = [int(l) for l in lags]
    if not lags:
        raise DomainError("at least one frame lag is required")
    if any(l < 1 for l in lags):
        raise DomainError(f"lags must be >= 1, got {lags}")
    samples: dict[str, list] = {f"lag{l}": [] for l in lags}
    cross = []
    for frame in sorted(observations):
        objs = observations[frame]
        ids = sorted(objs)
        if len(ids) > 1:
            E = np.array([objs[i] for i in ids])
            S = similarity_matrix(E, E)
            iu = np.triu_indices(len(ids), k=1)
            cross.append(S[iu])
        for l in lags:
            later = observations.get(frame + l)
            if not later:
                continue
            for ident in ids:
                if ident in later:
                    samples[f"lag{l}"].append(similarity(objs[ident], later[ident]))
    arrays = {k: np.asarray(v, dtype=float) for k, v in samples.items()}
    arrays["cross"] = np.concatenate(cross) if cross else np.zeros(0)
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts = {k: np.histogram(v, bins=edges)[0] for k, v in arrays.items()}
    return SimilarityHistograms(edges, counts, arrays)
