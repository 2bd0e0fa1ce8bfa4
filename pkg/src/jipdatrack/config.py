"""Run configuration, sequence metadata and sequence-directory discovery.

Configuration files are plain ``key=value`` text. Keys are case-insensitive;
anything not given falls back to the defaults below. The operating point of
the tracker (noise deviations, survival/detection/gating probabilities,
clutter rate, lifecycle thresholds, confidence cut) comes from the published
pedestrian-tracking setup; everything else is an implementation default and
is labelled as such in the effective-config dump.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

from .appearance import GnnParams
from .errors import ConfigError, TrackingError
from .formats import read_keyvalue
from .jipda import DEFAULT_MAX_EVENTS, JipdaParams
from .kinematics import MotionParams
from .sim import ScenarioSpec, benchmark_spec

PUBLISHED = "published"
DEFAULT = "default"
OVERRIDE = "override"

# key -> (default, parser)
PUBLISHED_DEFAULTS = {
    "sigma_q": 0.836,
    "sigma_r": 0.141,
    "p_s": 0.999,
    "p_d": 0.990,
    "p_g": 0.990,
    "lambda_v": 15.0,
    "init_threshold": 0.7,
    "w_init": 0.65,
    "w_confirm": 0.85,
    "w_delete": 0.003,
    "conf_threshold": 0.95,
}

_bench = benchmark_spec()

INVENTED_DEFAULTS = {
    "mode": "jipda",
    "v0_std": 10.0,
    "frame_rate": 25.0,
    "surveillance_area": 100.0,
    "max_events": DEFAULT_MAX_EVENTS,
    "sim_gate": 0.5,
    "max_age": 30,
    "min_hits": 2,
    "smoothing": 0.3,
    "smooth_embeddings": True,
    "alpha_deg": 45.0,
    "margin": 0.1,
    "metric_mode": "point",
    "metric_threshold": None,
    "seq_dir": None,
    "seed": _bench.seed,
    "sim_name": _bench.name,
    "sim_duration": _bench.duration,
    "sim_n_targets": _bench.n_targets,
    "sim_area": ",".join(str(v) for v in _bench.area),
    "sim_frame_rate": _bench.frame_rate,
    "sim_sigma_q": _bench.sigma_q,
    "sim_sigma_r": _bench.sigma_r,
    "sim_p_d": _bench.P_D,
    "sim_clutter_rate": _bench.clutter_rate,
    "sim_speed_min": _bench.speed[0],
    "sim_speed_max": _bench.speed[1],
    "sim_crossing": _bench.crossing,
    "sim_start_radius": _bench.start_radius,
    "sim_embedding_dim": _bench.embedding_dim,
    "sim_embedding_noise": _bench.embedding_noise,
    "sim_embedding_correlation": _bench.embedding_correlation,
}

_INT_KEYS = {"max_events", "max_age", "min_hits", "seed", "sim_duration", "sim_n_targets", "sim_embedding_dim"}
_BOOL_KEYS = {"smooth_embeddings", "sim_crossing"}
_STR_KEYS = {"mode", "metric_mode", "seq_dir", "sim_name", "sim_area"}
_MODES = ("jipda", "gnn")
_METRIC_MODES = ("point", "box")


def _parse_value(key: str, raw: str):
    if raw.lower() in ("", "none", "null"):
        return None
    if key in _STR_KEYS:
        return raw
    if key in _BOOL_KEYS:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if key in _INT_KEYS:
            return int(raw)
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as a number") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite")
    return value


def _render(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    sources: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def mode(self) -> str:
        return self.values["mode"]

    def motion(self, frame_rate: float | None = None) -> MotionParams:
        rate = frame_rate if frame_rate is not None else self.values["frame_rate"]
        return MotionParams(dt=1.0 / rate, sigma_q=self["sigma_q"], sigma_r=self["sigma_r"])

    def jipda_params(self, volume: float | None = None) -> JipdaParams:
        volume = volume if volume is not None else self["surveillance_area"]
        return JipdaParams(
            P_S=self["p_s"], P_D=self["p_d"], P_G=self["p_g"],
            clutter_density=self["lambda_v"] / volume,
            init_threshold=self["init_threshold"], w_init=self["w_init"],
            w_confirm=self["w_confirm"], w_delete=self["w_delete"],
            conf_threshold=self["conf_threshold"], v0_std=self["v0_std"],
            max_events=self["max_events"],
        )

    def gnn_params(self) -> GnnParams:
        return GnnParams(sim_gate=self["sim_gate"], max_age=self["max_age"], min_hits=self["min_hits"],
                         smoothing=self["smoothing"], smooth_embeddings=self["smooth_embeddings"])

    @property
    def metric_mode(self) -> str:
        return self["metric_mode"]

    @property
    def metric_threshold(self) -> float:
        t = self["metric_threshold"]
        if t is None:
            return 1.0 if self.metric_mode == "point" else 0.5
        return t

    @property
    def alpha(self) -> float:
        return math.radians(self["alpha_deg"])

    def scenario_spec(self, seed: int | None = None) -> ScenarioSpec:
        try:
            area = tuple(float(v) for v in self["sim_area"].split(","))
        except ValueError:
            raise ConfigError(f"sim_area: expected x0,y0,x1,y1, got {self['sim_area']!r}") from None
        if len(area) != 4:
            raise ConfigError(f"sim_area: expected 4 numbers, got {len(area)}")
        try:
            return ScenarioSpec(
                seed=self["seed"] if seed is None else seed,
                duration=self["sim_duration"],
                area=area,
                n_targets=self["sim_n_targets"],
                frame_rate=self["sim_frame_rate"],
                sigma_q=self["sim_sigma_q"],
                sigma_r=self["sim_sigma_r"],
                P_D=self["sim_p_d"],
                clutter_rate=self["sim_clutter_rate"],
                speed=(self["sim_speed_min"], self["sim_speed_max"]),
                crossing=self["sim_crossing"],
                start_radius=self["sim_start_radius"],
                embedding_dim=self["sim_embedding_dim"],
                embedding_noise=self["sim_embedding_noise"],
                embedding_correlation=self["sim_embedding_correlation"],
                name=self["sim_name"],
            )
        except TrackingError as exc:
            raise ConfigError(f"invalid simulation settings: {exc}") from exc

    def dump(self) -> str:
        """Effective configuration as re-loadable ``key=value`` text."""
        lines = [
            "# effective configuration",
            "# published: reference operating point; default: implementation choice; override: set by user",
        ]
        for key in list(PUBLISHED_DEFAULTS) + list(INVENTED_DEFAULTS):
            lines.append(f"{key}={_render(self.values[key])}  # {self.sources[key]}")
        for w in self.warnings:
            lines.append(f"# warning: {w}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.dump().encode("utf-8")).hexdigest()[:16]

    def validate(self) -> None:
        if self.mode not in _MODES:
            raise ConfigError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.metric_mode not in _METRIC_MODES:
            raise ConfigError(f"metric_mode must be one of {_METRIC_MODES}, got {self.metric_mode!r}")
        if self["frame_rate"] <= 0 or self["surveillance_area"] <= 0:
            raise ConfigError("frame_rate and surveillance_area must be > 0")
        seq_dir = self["seq_dir"]
        if seq_dir is not None and not Path(seq_dir).exists():
            raise ConfigError(f"seq_dir {seq_dir!r} does not exist")
        try:
            self.motion()
            self.jipda_params()
            self.gnn_params()
        except TrackingError as exc:
            raise ConfigError(str(exc)) from exc
        if not (0.0 < self.alpha < math.pi / 2):
            raise ConfigError("alpha_deg must lie in (0, 90)")


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional file plus explicit overrides.

    Unknown keys produce a warning in the dump instead of an error.
    """
    values = dict(PUBLISHED_DEFAULTS)
    values.update(INVENTED_DEFAULTS)
    sources = {k: PUBLISHED for k in PUBLISHED_DEFAULTS}
    sources.update({k: DEFAULT for k in INVENTED_DEFAULTS})
    warnings = []

    raw: dict[str, str] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {str(path)!r} does not exist")
        try:
            raw = read_keyvalue(path)
        except TrackingError as exc:
            raise ConfigError(str(exc)) from exc
    for key, value in raw.items():
        k = key.strip().lower()
        if k not in values:
            warnings.append(f"unknown key {key!r} ignored")
            continue
        values[k] = _parse_value(k, value)
        sources[k] = OVERRIDE
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        values[key] = value
        sources[key] = OVERRIDE

    cfg = RunConfig(values, sources, warnings)
    cfg.validate()
    return cfg


@dataclass(frozen=True)
class SequenceInfo:
    name: str
    path: Path
    frame_rate: float | None
    length: int | None
    volume: float | None

    @property
    def det_path(self) -> Path:
        return self.path / "det" / "det.txt"

    @property
    def det_embeddings_path(self) -> Path:
        return self.path / "det" / "embeddings.txt"

    @property
    def gt_path(self) -> Path:
        return self.path / "gt" / "gt.txt"

    @property
    def gt_embeddings_path(self) -> Path:
        return self.path / "gt" / "embeddings.txt"


def read_seqinfo(seq_dir) -> SequenceInfo:
    """Read ``seqinfo.ini`` if present; missing keys become ``None``."""
    seq_dir = Path(seq_dir)
    meta = {}
    ini = seq_dir / "seqinfo.ini"
    if ini.is_file():
        meta = read_keyvalue(ini)

    def num(key, cast=float):
        if key not in meta:
            return None
        try:
            return cast(meta[key])
        except ValueError:
            raise ConfigError(f"{ini}: {key} is not a number: {meta[key]!r}") from None

    volume = num("surveillanceArea")
    if volume is None and all(k in meta for k in ("areaMinX", "areaMinY", "areaMaxX", "areaMaxY")):
        volume = (num("areaMaxX") - num("areaMinX")) * (num("areaMaxY") - num("areaMinY"))
    return SequenceInfo(
        name=meta.get("name", seq_dir.name),
        path=seq_dir,
        frame_rate=num("frameRate"),
        length=num("seqLength", int),
        volume=volume,
    )


def discover_sequences(root) -> list[SequenceInfo]:
    """A sequence directory itself, or every sequence directory directly below ``root``."""
    root = Path(root)
    if not root.is_dir():
        raise ConfigError(f"sequence directory {str(root)!r} does not exist")

    def is_seq(p: Path) -> bool:
        return (p / "seqinfo.ini").is_file() or (p / "det" / "det.txt").is_file() or (p / "gt" / "gt.txt").is_file()

    if is_seq(root):
        return [read_seqinfo(root)]
    seqs = [read_seqinfo(p) for p in sorted(root.iterdir()) if p.is_dir() and is_seq(p)]
    if not seqs:
        raise ConfigError(f"no sequences found under {str(root)!r}")
    return seqs
