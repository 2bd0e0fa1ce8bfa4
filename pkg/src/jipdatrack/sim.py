"""Synthetic multi-target scenarios with Poisson clutter and appearance embeddings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .formats import (
    Detection,
    ResultRow,
    write_detections,
    write_embeddings,
    write_ground_truth,
    write_keyvalue,
)


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int = 7
    duration: int = 500
    area: tuple[float, float, float, float] = (0.0, 0.0, 30.0, 30.0)
    n_targets: int = 5
    windows: tuple[tuple[int, int], ...] | None = None
    frame_rate: float = 25.0
    sigma_q: float = 0.836
    sigma_r: float = 0.141
    P_D: float = 0.99
    clutter_rate: float = 15.0
    speed: tuple[float, float] = (0.8, 1.5)
    crossing: bool = True
    start_radius: float | None = None
    embedding_dim: int = 64
    embedding_noise: float = 0.15
    embedding_correlation: float = 0.9
    name: str = "SIM"

    def __post_init__(self):
        x0, y0, x1, y1 = self.area
        if not (x1 > x0 and y1 > y0):
            raise ParameterError(f"area {self.area} has non-positive extent")
        if not (0.0 < self.P_D <= 1.0):
            raise ParameterError(f"P_D must lie in (0, 1], got {self.P_D!r}")
        if self.duration < 1 or self.n_targets < 0 or self.clutter_rate < 0:
            raise ParameterError("duration must be >= 1; n_targets and clutter_rate >= 0")
        if self.embedding_noise < 0 or not (0.0 <= self.embedding_correlation < 1.0):
            raise ParameterError("embedding_noise must be >= 0 and embedding_correlation in [0, 1)")
        if self.windows is not None and len(self.windows) != self.n_targets:
            raise ParameterError("one (birth, death) window per target is required")

    @property
    def volume(self) -> float:
        x0, y0, x1, y1 = self.area
        return (x1 - x0) * (y1 - y0)

    @property
    def clutter_density(self) -> float:
        return self.clutter_rate / self.volume

    @property
    def dt(self) -> float:
        return 1.0 / self.frame_rate


@dataclass
class Scenario:
    spec: ScenarioSpec
    ground_truth: list[ResultRow]
    detections: list[Detection]
    embeddings: dict[tuple[int, int], np.ndarray]
    gt_embeddings: dict[tuple[int, int], np.ndarray]
    detection_labels: list[int] = field(default_factory=list)

    def metadata(self) -> dict[str, object]:
        x0, y0, x1, y1 = self.spec.area
        return {
            "name": self.spec.name,
            "frameRate": _num(self.spec.frame_rate),
            "seqLength": self.spec.duration,
            "areaMinX": _num(x0),
            "areaMinY": _num(y0),
            "areaMaxX": _num(x1),
            "areaMaxY": _num(y1),
            "surveillanceArea": _num(self.spec.volume),
            "clutterPerFrame": _num(self.spec.clutter_rate),
            "seed": self.spec.seed,
        }


def _num(v: float) -> str:
    v = float(v)
    return str(int(v)) if v == int(v) else repr(v)


def _initial_states(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    x0, y0, x1, y1 = spec.area
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    n = spec.n_targets
    states = np.zeros((n, 4))
    speeds = rng.uniform(spec.speed[0], spec.speed[1], size=n)
    if spec.crossing:
        radius = spec.start_radius if spec.start_radius is not None else 0.4 * min(x1 - x0, y1 - y0)
        angles = 2.0 * math.pi * np.arange(n) / max(n, 1) + rng.uniform(-0.2, 0.2, size=n)
        offsets = rng.uniform(-0.15, 0.15, size=(n, 2)) * radius
        for k in range(n):
            start = np.array([cx + radius * math.cos(angles[k]), cy + radius * math.sin(angles[k])])
            heading = np.array([cx, cy]) + offsets[k] - start
            heading /= np.linalg.norm(heading)
            v = speeds[k] * heading
            states[k] = [start[0], v[0], start[1], v[1]]
    else:
        pos = rng.uniform([x0, y0], [x1, y1], size=(n, 2))
        heading = rng.uniform(0.0, 2.0 * math.pi, size=n)
        states[:, 0], states[:, 2] = pos[:, 0], pos[:, 1]
        states[:, 1] = speeds * np.cos(heading)
        states[:, 3] = speeds * np.sin(heading)
    return states


def _reflect(states: np.ndarray, area) -> None:
    x0, y0, x1, y1 = area
    for pos, vel, lo, hi in ((0, 1, x0, x1), (2, 3, y0, y1)):
        below = states[:, pos] < lo
        states[below, pos] = 2 * lo - states[below, pos]
        states[below, vel] = np.abs(states[below, vel])
        above = states[:, pos] > hi
        states[above, pos] = 2 * hi - states[above, pos]
        states[above, vel] = -np.abs(states[above, vel])


def _unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def generate(spec: ScenarioSpec) -> Scenario:
    """Simulate ground truth, noisy detections, clutter and embeddings.

    Targets follow a constant-velocity model driven by white acceleration
    noise and bounce off the area walls. Each target is detected with
    probability ``P_D`` with Gaussian position noise; clutter is Poisson in
    count and uniform in position. Appearance noise is an AR(1) process per
    target whose stationary per-component deviation is ``embedding_noise``.
    Same seed, same scenario.
    """
    rng = np.random.default_rng(spec.seed)
    dt = spec.dt
    x0, y0, x1, y1 = spec.area
    n, dim = spec.n_targets, spec.embedding_dim
    states = _initial_states(spec, rng)
    windows = spec.windows or tuple((1, spec.duration) for _ in range(n))
    means = _unit_rows(rng, n, dim) if n else np.zeros((0, dim))
    noise = spec.embedding_noise * rng.standard_normal((n, dim))
    rho = spec.embedding_correlation
    innov_scale = spec.embedding_noise * math.sqrt(1.0 - rho**2)

    gt_rows: list[ResultRow] = []
    detections: list[Detection] = []
    labels: list[int] = []
    det_emb: dict[tuple[int, int], np.ndarray] = {}
    gt_emb: dict[tuple[int, int], np.ndarray] = {}

    for frame in range(1, spec.duration + 1):
        if frame > 1:
            accel = spec.sigma_q * rng.standard_normal((n, 2))
            states[:, 0] += states[:, 1] * dt + 0.5 * accel[:, 0] * dt**2
            states[:, 1] += accel[:, 0] * dt
            states[:, 2] += states[:, 3] * dt + 0.5 * accel[:, 1] * dt**2
            states[:, 3] += accel[:, 1] * dt
            _reflect(states, spec.area)
            noise = rho * noise + innov_scale * rng.standard_normal((n, dim))

        frame_dets: list[tuple[np.ndarray, np.ndarray, int]] = []
        gt_index = 0
        for k in range(n):
            birth, death = windows[k]
            if not (birth <= frame <= death):
                continue
            pos = (states[k, 0], states[k, 2])
            gt_rows.append(ResultRow(frame, k + 1, (float(pos[0]), float(pos[1]))))
            emb = means[k] + noise[k]
            emb = emb / np.linalg.norm(emb)
            gt_emb[(frame, gt_index)] = emb
            gt_index += 1
            if rng.random() < spec.P_D:
                z = np.array(pos) + spec.sigma_r * rng.standard_normal(2)
                frame_dets.append((z, emb, k + 1))

        n_clutter = rng.poisson(spec.clutter_rate)
        if n_clutter:
            cz = rng.uniform([x0, y0], [x1, y1], size=(n_clutter, 2))
            ce = _unit_rows(rng, n_clutter, dim)
            frame_dets.extend((cz[c], ce[c], 0) for c in range(n_clutter))

        order = rng.permutation(len(frame_dets))
        for index, o in enumerate(order):
            z, emb, label = frame_dets[o]
            detections.append(Detection(frame, z, None, 1.0, index, emb))
            det_emb[(frame, index)] = emb
            labels.append(label)

    return Scenario(spec, gt_rows, detections, det_emb, gt_emb, labels)


def write_scenario(scenario: Scenario, seq_dir) -> Path:
    """Write a sequence directory readable by the tracker and evaluator.

    Layout::

        seqinfo.ini          sequence metadata (frame rate, length, area)
        det/det.txt          detections
        det/embeddings.txt   detection embeddings
        gt/gt.txt            ground truth
        gt/embeddings.txt    ground-truth embeddings
    """
    seq_dir = Path(seq_dir)
    write_keyvalue(seq_dir / "seqinfo.ini", scenario.metadata(), section="Sequence")
    write_detections(seq_dir / "det" / "det.txt", scenario.detections)
    write_embeddings(seq_dir / "det" / "embeddings.txt", scenario.embeddings)
    write_ground_truth(seq_dir / "gt" / "gt.txt", scenario.ground_truth)
    write_embeddings(seq_dir / "gt" / "embeddings.txt", scenario.gt_embeddings)
    return seq_dir


def benchmark_spec(seed: int = 7) -> ScenarioSpec:
    """The frozen desk-scale benchmark: five crossing targets over 500 frames."""
    return ScenarioSpec(seed=seed, duration=500, area=(0.0, 0.0, 200.0, 200.0), n_targets=5,
                        frame_rate=25.0, sigma_r=0.141, P_D=0.99, clutter_rate=15.0,
                        crossing=True, start_radius=12.0, name="BENCH")
