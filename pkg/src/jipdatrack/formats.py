"""MOTChallenge-style text formats: detections, ground truth, results and embedding sidecars.

All files are UTF-8, comma separated, one record per line, with the column order::

    frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z

Floats are written with Python's shortest round-trip ``repr`` so that
reading back a written file reproduces the same values exactly.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError, ParseError

N_COLUMNS = 10
MIN_COLUMNS = 7


@dataclass(frozen=True)
class Detection:
    frame: int
    position: np.ndarray
    box: tuple[float, float, float, float] | None = None
    confidence: float = 1.0
    embedding_index: int | None = None
    embedding: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(2))
        if self.box is not None:
            box = tuple(float(v) for v in self.box)
            if box[2] <= 0 or box[3] <= 0:
                raise FormatError(f"box width and height must be > 0, got {box}")
            object.__setattr__(self, "box", box)


@dataclass(frozen=True)
class ResultRow:
    frame: int
    track_id: int
    position: tuple[float, float] | None
    box: tuple[float, float, float, float] | None = None
    confidence: float = 1.0


@dataclass(frozen=True)
class MotRecord:
    """One raw line of a MOT text file."""

    frame: int
    ident: int
    box: tuple[float, float, float, float] | None
    confidence: float
    point: tuple[float, float] | None
    line_no: int


def _fmt(value: float) -> str:
    value = float(value)
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _point_absent(x: float, y: float, z: float) -> bool:
    if not (math.isfinite(x) and math.isfinite(y)):
        return True
    trio = (x, y, z if math.isfinite(z) else x)
    return all(v == 0.0 for v in trio) or all(v == -1.0 for v in trio)


def _parse_line(path, line_no: int, line: str) -> MotRecord:
    fields = [f.strip() for f in line.split(",")]
    if len(fields) < MIN_COLUMNS or len(fields) > N_COLUMNS:
        raise ParseError(path, line_no, f"expected {MIN_COLUMNS}..{N_COLUMNS} fields, got {len(fields)}")
    try:
        frame_f = float(fields[0])
        ident_f = float(fields[1])
        left, top, width, height, conf = (float(v) for v in fields[2:7])
        rest = [float(v) if v else math.nan for v in fields[7:]]
    except ValueError as exc:
        raise ParseError(path, line_no, str(exc)) from None
    if frame_f != int(frame_f) or frame_f < 1:
        raise ParseError(path, line_no, f"frame must be a positive integer, got {fields[0]!r}")
    if ident_f != int(ident_f):
        raise ParseError(path, line_no, f"id must be an integer, got {fields[1]!r}")
    rest += [math.nan] * (3 - len(rest))
    x, y, z = rest
    box = (left, top, width, height) if width > 0 and height > 0 else None
    point = None if _point_absent(x, y, z) else (x, y)
    return MotRecord(int(frame_f), int(ident_f), box, conf, point, line_no)


def read_records(path) -> list[MotRecord]:
    """Parse every non-blank line of a MOT text file, in file order."""
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            records.append(_parse_line(path, line_no, line))
    return records


def box_foot(box: Sequence[float]) -> tuple[float, float]:
    left, top, width, height = box
    return (left + width / 2.0, top + height)


def read_detections(path, conf_threshold: float = 0.0) -> list[Detection]:
    """Read a detection file, dropping rows with confidence below ``conf_threshold``.

    The position is taken from the ``x, y`` columns when present, otherwise
    from the bottom-centre of the bounding box. ``embedding_index`` is the
    row's 0-based position among all rows of its frame, before filtering, so
    it lines up with the embedding sidecar.
    """
    records = read_records(path)
    per_frame: dict[int, int] = {}
    detections = []
    for rec in records:
        index = per_frame.get(rec.frame, 0)
        per_frame[rec.frame] = index + 1
        if rec.confidence < conf_threshold:
            continue
        if rec.point is not None:
            position = rec.point
        elif rec.box is not None:
            position = box_foot(rec.box)
        else:
            raise ParseError(path, rec.line_no, "row has neither a position nor a valid box")
        detections.append(Detection(rec.frame, np.array(position), rec.box, rec.confidence, index))
    # stable sort keeps file order within a frame
    detections.sort(key=lambda d: d.frame)
    return detections


def group_by_frame(items: Iterable, n_frames: int | None = None) -> dict[int, list]:
    grouped: dict[int, list] = {}
    for item in items:
        grouped.setdefault(item.frame, []).append(item)
    if n_frames is not None:
        for f in range(1, n_frames + 1):
            grouped.setdefault(f, [])
    return dict(sorted(grouped.items()))


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_row(frame: int, ident: int, box, conf: float, point, z: float = -1.0) -> str:
    left, top, width, height = box if box is not None else (-1, -1, -1, -1)
    x, y = point if point is not None else (-1, -1)
    return ",".join(_fmt(v) for v in (frame, ident, left, top, width, height, conf, x, y, z))


def write_results(path, rows: Iterable[ResultRow]) -> None:
    """Write tracker output sorted by (frame, track id)."""
    rows = sorted(rows, key=lambda r: (r.frame, r.track_id))
    lines = [format_row(r.frame, r.track_id, r.box, r.confidence, r.position) for r in rows]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def read_results(path) -> list[ResultRow]:
    rows = []
    for rec in read_records(path):
        rows.append(ResultRow(rec.frame, rec.ident, rec.point, rec.box, rec.confidence))
    return rows


def write_ground_truth(path, rows: Iterable[ResultRow]) -> None:
    write_results(path, rows)


def write_detections(path, detections: Iterable[Detection]) -> None:
    """Write detections in file order; the id column is always -1."""
    lines = [
        format_row(d.frame, -1, d.box, d.confidence, tuple(d.position), z=0.0)
        for d in detections
    ]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def read_embeddings(path) -> dict[tuple[int, int], np.ndarray]:
    """Read ``frame,det_index,v1,...,vD`` rows into a table keyed by ``(frame, det_index)``.

    Vectors are re-normalized to unit length.
    """
    path = Path(path)
    table: dict[tuple[int, int], np.ndarray] = {}
    dim = None
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if len(fields) < 3:
                raise ParseError(path, line_no, "embedding row needs frame, index and at least one value")
            try:
                frame, index = int(fields[0]), int(fields[1])
                vec = np.array([float(v) for v in fields[2:]])
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from None
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise FormatError(f"{path}:{line_no}: embedding dimension {vec.size}, expected {dim}")
            norm = np.linalg.norm(vec)
            if not np.isfinite(norm) or norm == 0.0:
                raise ParseError(path, line_no, "embedding has zero or non-finite norm")
            table[(frame, index)] = vec / norm
    return table


def write_embeddings(path, table: dict[tuple[int, int], np.ndarray]) -> None:
    lines = []
    for (frame, index), vec in sorted(table.items()):
        lines.append(",".join([str(frame), str(index)] + [repr(float(v)) for v in vec]))
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def read_keyvalue(path) -> dict[str, str]:
    """Read ``key=value`` lines; ``[section]`` headers and ``#``/``;`` comments are skipped."""
    path = Path(path)
    out: dict[str, str] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line[0] in "#;" or (line.startswith("[") and line.endswith("]")):
                continue
            if "=" not in line:
                raise ParseError(path, line_no, f"expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.split("#", 1)[0].strip()
    return out


def write_keyvalue(path, values: dict[str, object], section: str | None = None) -> None:
    lines = [f"[{section}]"] if section else []
    lines += [f"{k}={v}" for k, v in values.items()]
    atomic_write_text(path, "\n".join(lines) + "\n")
