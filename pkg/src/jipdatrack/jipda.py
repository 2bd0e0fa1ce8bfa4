"""Exact joint integrated probabilistic data association (JIPDA).

Every feasible joint association event of a frame is enumerated, weighted,
and marginalised into per-track existence and association probabilities.
Those drive a soft Kalman update and a simple birth/confirm/delete lifecycle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .association import ValidationContext, build_validation_context, gate_threshold_from_pg
from .errors import (
    CombinatorialBlowupError,
    ConsistencyError,
    ParameterError,
    SingularInnovationError,
    TrackingError,
)
from .formats import Detection
from .kinematics import (
    GaussianState,
    MotionParams,
    jipda_update,
    predict_measurement,
    predict_state,
)

DEFAULT_MAX_EVENTS = 5_000_000
UNASSIGNED = -1


class TrackStatus(str, enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DELETED = "deleted"


_ALLOWED = {
    TrackStatus.TENTATIVE: {TrackStatus.TENTATIVE, TrackStatus.CONFIRMED, TrackStatus.DELETED},
    TrackStatus.CONFIRMED: {TrackStatus.CONFIRMED, TrackStatus.DELETED},
    TrackStatus.DELETED: {TrackStatus.DELETED},
}


@dataclass(frozen=True)
class Track:
    id: int
    state: GaussianState
    existence: float
    status: TrackStatus = TrackStatus.TENTATIVE
    age: int = 0
    embedding: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not (0.0 <= self.existence <= 1.0):
            raise ParameterError(f"track {self.id}: existence {self.existence!r} outside [0, 1]")

    def transition(self, status: TrackStatus, **changes) -> "Track":
        if status not in _ALLOWED[self.status]:
            raise TrackingError(f"track {self.id}: illegal transition {self.status.value} -> {status.value}")
        return replace(self, status=status, **changes)


@dataclass(frozen=True)
class JointEvent:
    """One-to-one partial assignment of measurements to tracks.

    ``assignment[j]`` is the measurement index given to track ``j`` or -1.
    """

    assignment: tuple[int, ...]
    weight: float = 1.0

    def pairs(self) -> list[tuple[int, int]]:
        """(measurement, track) pairs of the assigned tracks."""
        return [(i, j) for j, i in enumerate(self.assignment) if i != UNASSIGNED]

    def measurement_map(self) -> dict[int, int]:
        return {i: j for i, j in self.pairs()}


@dataclass(frozen=True)
class AssociationPosterior:
    beta: np.ndarray
    beta0: np.ndarray
    existence_post: np.ndarray
    n_events: int = 0


@dataclass(frozen=True)
class JipdaParams:
    P_S: float = 0.999
    P_D: float = 0.990
    P_G: float = 0.990
    clutter_density: float = 15.0 / 100.0
    init_threshold: float = 0.7
    w_init: float = 0.65
    w_confirm: float = 0.85
    w_delete: float = 0.003
    conf_threshold: float = 0.95
    v0_std: float = 10.0
    max_events: int = DEFAULT_MAX_EVENTS

    def __post_init__(self):
        for name in ("P_S", "P_D", "P_G"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ParameterError(f"{name} must lie in (0, 1), got {v!r}")
        if not (self.clutter_density > 0 and math.isfinite(self.clutter_density)):
            raise ParameterError(f"clutter density must be > 0, got {self.clutter_density!r}")
        if not (self.w_delete < self.w_init < self.w_confirm):
            raise ParameterError("require w_delete < w_init < w_confirm")
        if self.v0_std <= 0:
            raise ParameterError("v0_std must be > 0")
        if self.max_events < 1:
            raise ParameterError("max_events must be >= 1")

    @property
    def detect_gate(self) -> float:
        return self.P_D * self.P_G


def predict_existence(p_prev: float, P_S: float) -> float:
    return P_S * p_prev


def enumerate_joint_events(
    ctx: ValidationContext,
    cap: int = DEFAULT_MAX_EVENTS,
    frame: int | None = None,
) -> list[JointEvent]:
    """All injective partial assignments allowed by the gate matrix.

    Depth-first over tracks; each track takes either no measurement or one
    gated measurement not yet used. The empty assignment comes first.
    """
    gated = [np.flatnonzero(ctx.gate_matrix[:, j]).tolist() for j in range(ctx.n_tracks)]
    events: list[JointEvent] = []
    current = [UNASSIGNED] * ctx.n_tracks
    taken: set[int] = set()

    def visit(j: int) -> None:
        if j == ctx.n_tracks:
            if len(events) >= cap:
                raise CombinatorialBlowupError(len(events) + 1, cap, frame)
            events.append(JointEvent(tuple(current)))
            return
        current[j] = UNASSIGNED
        visit(j + 1)
        for i in gated[j]:
            if i in taken:
                continue
            taken.add(i)
            current[j] = i
            visit(j + 1)
            taken.discard(i)
        current[j] = UNASSIGNED

    visit(0)
    return events


def _factor_table(ctx: ValidationContext, existence: np.ndarray, params: JipdaParams) -> np.ndarray:
    """Per-track multiplicative factors; column 0 is 'missed', column i+1 is measurement i."""
    d = params.detect_gate
    table = np.empty((ctx.n_tracks, ctx.n_measurements + 1))
    table[:, 0] = 1.0 - d * existence
    table[:, 1:] = (d * existence)[:, None] * ctx.likelihoods.T / params.clutter_density
    return table


def _existences(tracks) -> np.ndarray:
    return np.array([t.existence if isinstance(t, Track) else float(t) for t in tracks], dtype=float)


def event_probability(
    e: JointEvent,
    ctx: ValidationContext,
    tracks: Sequence[Track],
    params: JipdaParams,
) -> float:
    """Unnormalised joint-event weight.

    ``tracks`` supplies the predicted existence of each column of ``ctx``
    (Track objects or bare probabilities).
    """
    if params.clutter_density <= 0:
        raise ParameterError("clutter density must be > 0")
    existence = _existences(tracks)
    d = params.detect_gate
    weight = 1.0
    for j, i in enumerate(e.assignment):
        if i == UNASSIGNED:
            weight *= 1.0 - d * existence[j]
        else:
            weight *= d * existence[j] * ctx.likelihoods[i, j] / params.clutter_density
    return weight


def compute_posterior(
    events: Sequence[JointEvent],
    ctx: ValidationContext,
    tracks: Sequence[Track],
    params: JipdaParams,
) -> AssociationPosterior:
    """Marginal existence and association probabilities from the event list.

    ``beta0[j]`` is the missed-detection share of track ``j``'s posterior
    existence, so that ``beta0[j] + beta[:, j].sum() == 1``.
    """
    m, n = ctx.n_measurements, ctx.n_tracks
    existence = _existences(tracks)
    if n == 0:
        return AssociationPosterior(np.zeros((m, 0)), np.zeros(0), np.zeros(0), len(events))

    A = np.array([e.assignment for e in events], dtype=np.int64).reshape(len(events), n)
    table = _factor_table(ctx, existence, params)
    weights = np.prod(table[np.arange(n)[None, :], A + 1], axis=1)
    total = math.fsum(weights)
    if not (total > 0 and math.isfinite(total)):
        raise ConsistencyError(f"joint-event normaliser is {total!r}")
    probs = weights / total

    joint = np.zeros((m, n))
    missed_mass = np.zeros(n)
    for j in range(n):
        col = A[:, j]
        missed = col == UNASSIGNED
        missed_mass[j] = math.fsum(probs[missed])
        if m:
            joint[:, j] = np.bincount(col[~missed], weights=probs[~missed], minlength=m)

    d = params.detect_gate
    prefactor = (1.0 - d) * existence / (1.0 - d * existence)
    joint_missed = prefactor * missed_mass
    existence_post = joint_missed + joint.sum(axis=0)

    beta = np.zeros((m, n))
    beta0 = np.ones(n)
    alive = existence_post > 0
    if np.any(~alive & ((joint.sum(axis=0) > 0) | (joint_missed > 0))):
        raise ConsistencyError("zero posterior existence with non-zero association mass")
    beta[:, alive] = joint[:, alive] / existence_post[alive]
    beta0[alive] = joint_missed[alive] / existence_post[alive]
    existence_post = np.clip(existence_post, 0.0, 1.0)
    return AssociationPosterior(beta, beta0, existence_post, len(events))


def _birth_state(position: np.ndarray, sigma_r: float, v0_std: float) -> GaussianState:
    mean = np.array([position[0], 0.0, position[1], 0.0])
    cov = np.diag([sigma_r**2, v0_std**2, sigma_r**2, v0_std**2])
    return GaussianState(mean, cov)


def lifecycle_update(
    tracks: Sequence[Track],
    posterior: AssociationPosterior,
    unassigned_detections: Sequence[Detection],
    params: JipdaParams,
    motion: MotionParams,
    next_id: int,
) -> list[Track]:
    """Confirm, delete and spawn tracks.

    ``tracks`` must already carry their posterior existence.
    ``unassigned_detections`` are the measurements whose probability of
    belonging to no existing track exceeds ``init_threshold``; each becomes a
    tentative track with zero velocity and inflated velocity covariance.
    Deleted tracks are returned with status ``DELETED``.
    """
    out = []
    for t in tracks:
        if t.existence < params.w_delete:
            out.append(t.transition(TrackStatus.DELETED))
        elif t.status is TrackStatus.TENTATIVE and t.existence > params.w_confirm:
            out.append(t.transition(TrackStatus.CONFIRMED))
        else:
            out.append(t)
    for k, det in enumerate(unassigned_detections):
        out.append(Track(
            id=next_id + k,
            state=_birth_state(det.position, motion.sigma_r, params.v0_std),
            existence=params.w_init,
            status=TrackStatus.TENTATIVE,
            age=0,
            embedding=det.embedding,
        ))
    return out


def birth_candidates(posterior: AssociationPosterior, params: JipdaParams) -> np.ndarray:
    """Indices of measurements not explained by existing tracks."""
    unexplained = 1.0 - posterior.beta.sum(axis=1)
    return np.flatnonzero(unexplained > params.init_threshold)


def jipda_step(
    tracks: Sequence[Track],
    detections: Sequence[Detection],
    params: JipdaParams,
    motion: MotionParams,
    next_id: int = 1,
    frame: int | None = None,
) -> tuple[list[Track], AssociationPosterior]:
    """Advance every active track by one frame.

    Returns the new track list (including tracks deleted in this frame, with
    status ``DELETED``) and the frame's association posterior.
    """
    try:
        return _jipda_step(tracks, detections, params, motion, next_id, frame)
    except TrackingError as exc:
        if frame is not None and not str(exc).startswith("frame "):
            exc.args = (f"frame {frame}: {exc}",) + exc.args[1:]
        raise


def _jipda_step(tracks, detections, params, motion, next_id, frame):
    gamma = gate_threshold_from_pg(params.P_G)
    predicted = []
    for t in tracks:
        predicted.append(replace(
            t,
            state=predict_state(t.state, motion),
            existence=predict_existence(t.existence, params.P_S),
        ))
    preds = []
    for t in predicted:
        try:
            preds.append(predict_measurement(t.state, motion))
        except SingularInnovationError as exc:
            raise SingularInnovationError(str(exc), track_index=t.id) from exc
    Z = [d.position for d in detections]
    ctx = build_validation_context(preds, Z, params.P_G, gamma)
    events = enumerate_joint_events(ctx, params.max_events, frame)
    posterior = compute_posterior(events, ctx, predicted, params)

    updated = []
    for j, t in enumerate(predicted):
        rows = np.flatnonzero(ctx.gate_matrix[:, j])
        state = jipda_update(
            t.state, preds[j], [Z[i] for i in rows], posterior.beta[rows, j], posterior.beta0[j]
        )
        updated.append(replace(t, state=state, existence=float(posterior.existence_post[j]), age=t.age + 1))

    births = [detections[i] for i in birth_candidates(posterior, params)]
    return lifecycle_update(updated, posterior, births, params, motion, next_id), posterior


class JipdaTracker:
    """Stateful driver that keeps the active track set and the deleted history."""

    def __init__(self, params: JipdaParams, motion: MotionParams):
        self.params = params
        self.motion = motion
        self.tracks: list[Track] = []
        self.deleted: list[Track] = []
        self.next_id = 1
        self.frame = 0
        self.max_events = 0
        self.last_posterior: AssociationPosterior | None = None

    def step(self, detections: Sequence[Detection], frame: int | None = None) -> list[Track]:
        self.frame = frame if frame is not None else self.frame + 1
        tracks, posterior = jipda_step(
            self.tracks, detections, self.params, self.motion, self.next_id, self.frame
        )
        self.next_id = max([self.next_id - 1] + [t.id for t in tracks]) + 1
        self.tracks = [t for t in tracks if t.status is not TrackStatus.DELETED]
        self.deleted.extend(t for t in tracks if t.status is TrackStatus.DELETED)
        self.max_events = max(self.max_events, posterior.n_events)
        self.last_posterior = posterior
        return self.tracks

    def confirmed(self) -> list[Track]:
        return [t for t in self.tracks if t.status is TrackStatus.CONFIRMED]
