"""Atomic file output, CSV/SVG writers and run manifests."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable, List, Sequence

import numpy as np

from .numeric import fmt, json_number

FLOAT_FORMAT = "{:.12g}"


def write_atomic(path: str, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return FLOAT_FORMAT.format(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return fmt(x) if not isinstance(x, str) else x


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(c) for c in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(json_number(obj), indent=2, sort_keys=True) + "\n"


def points_csv(points: np.ndarray, scale=None) -> str:
    pts = np.asarray(points)
    d = pts.shape[1] if pts.ndim == 2 else 0
    header = [f"x{i}" for i in range(d)]
    if scale is None:
        rows = pts.tolist()
    else:
        rows = (pts / float(scale)).tolist()
    return csv_text(header, rows)


def points_svg(points: np.ndarray, cell: float = 4.0, color: str = "#3b6ea5") -> str:
    """Planar point set as unit squares; raises ValueError outside d=2."""
    pts = np.asarray(points, dtype=np.int64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("SVG output is planar only")
    if len(pts) == 0:
        return '<svg xmlns="http://www.w3.org/2000/svg" width="0" height="0"/>\n'
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    w = (hi[0] - lo[0] + 1) * cell
    h = (hi[1] - lo[1] + 1) * cell
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:g}" height="{h:g}" '
           f'viewBox="0 0 {w:g} {h:g}">']
    for x, y in pts.tolist():
        px = (x - lo[0]) * cell
        py = (hi[1] - y) * cell  # y grows upwards
        out.append(f'<rect x="{px:g}" y="{py:g}" width="{cell:g}" height="{cell:g}" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


@dataclass
class RunManifest:
    """What a CLI run read, wrote and with which settings."""

    command: str
    parameters: dict
    seed: int = 0
    inputs: List[str] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    tool_version: str = ""
    wall_clock: float = 0.0
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def record_output(self, path: str) -> None:
        if path not in self.outputs:
            self.outputs.append(path)

    def finish(self) -> None:
        self.wall_clock = round(time.perf_counter() - self._t0, 3)

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("_t0")
        return d

    def write(self, path: str) -> None:
        self.finish()
        write_atomic(path, json_text(self.to_json()))
