"""CSV time series and key=value verdict files."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import COLUMNS, TimeSeries


def emit_series(series: TimeSeries, path) -> Path:
    """Write one row per record, columns in :data:`COLUMNS` order, 17 significant digits."""
    path = Path(path)
    lines = [",".join(COLUMNS)]
    cols = [series.columns[c] for c in COLUMNS]
    for row in zip(*cols):
        lines.append(",".join("%.17g" % v for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def read_series(path) -> TimeSeries:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    header = text[0].split(",")
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected CSV header {text[0]!r}")
    rows = [[float(v) for v in ln.split(",")] for ln in text[1:] if ln.strip()]
    data = np.array(rows, dtype=float).reshape(len(rows), len(COLUMNS))
    ts = TimeSeries(columns={c: data[:, i].copy() for i, c in enumerate(COLUMNS)})
    ts.check()
    return ts


@dataclass(frozen=True)
class Check:
    name: str
    theorem: str
    predicted: str
    measured: str
    tolerance: str
    passed: bool


@dataclass
class Verdict:
    preset: str
    checks: list
    error: Optional[str] = None
    aborted: bool = False

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.checks) and all(c.passed for c in self.checks)

    def lines(self) -> list:
        out = [f"preset={self.preset}", f"pass={str(self.passed).lower()}"]
        if self.error is not None:
            out.append(f"error={self.error}")
        for c in self.checks:
            out += [
                "",
                f"check={c.name}",
                f"preset={self.preset}",
                f"theorem={c.theorem}",
                f"predicted={c.predicted}",
                f"measured={c.measured}",
                f"tolerance={c.tolerance}",
                f"pass={str(c.passed).lower()}",
            ]
        return out

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text("\n".join(self.lines()) + "\n", encoding="utf-8", newline="\n")
        return path


def fmt(x) -> str:
    """Shortest round-tripping text for a float."""
    return repr(float(x))
