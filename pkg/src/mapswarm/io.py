"""Metrics, snapshot and summary serialization."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .association import UNMATCHED
from .simulation import MetricsRecord, StepView

METRICS_COLUMNS = ("t", "coverage", "fiedler", "connected", "mean_epidemic_bound", "max_u_norm", "active_maps")


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def format_record(rec: MetricsRecord) -> list[str]:
    return [_fmt(rec.t), _fmt(rec.coverage), _fmt(rec.fiedler), "1" if rec.connected else "0",
            _fmt(rec.mean_epidemic_bound), _fmt(rec.max_u_norm), str(rec.active_maps)]


class MetricsWriter:
    """Streams metrics records to a CSV file, one row per step."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(METRICS_COLUMNS)

    def record(self, rec: MetricsRecord) -> None:
        self._writer.writerow(format_record(rec))

    def snapshot(self, view: StepView) -> None:
        pass

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()


def write_metrics(records: Iterable[MetricsRecord], path) -> None:
    w = MetricsWriter(path)
    try:
        for rec in records:
            w.record(rec)
    finally:
        w.close()


def read_metrics(path) -> list[MetricsRecord]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [MetricsRecord(t=float(r["t"]), coverage=float(r["coverage"]), fiedler=float(r["fiedler"]),
                          connected=r["connected"] == "1", mean_epidemic_bound=float(r["mean_epidemic_bound"]),
                          max_u_norm=float(r["max_u_norm"]), active_maps=int(r["active_maps"]))
            for r in rows]


def snapshot_document(view: StepView, h: float = 0.0) -> dict:
    ids = view.maps.active_ids
    aspirant = view.matching.aspirant_of
    # matching indexes active MAPs; translate back to MAP ids
    aspirant_ids = np.full(len(aspirant), UNMATCHED)
    hit = aspirant != UNMATCHED
    aspirant_ids[hit] = ids[aspirant[hit]]
    return {
        "t": view.t,
        "h": h,
        "msds": [
            {"x": float(x), "y": float(y), "aspirant": int(a), "served": bool(s)}
            for (x, y), a, s in zip(view.msds.y, aspirant_ids, view.matching.served)
        ],
        "maps": [
            {"id": i, "x": float(q[0]), "y": float(q[1]), "z": h, "vx": float(p[0]), "vy": float(p[1]),
             "active": bool(act)}
            for i, (q, p, act) in enumerate(zip(view.maps.q, view.maps.p, view.maps.active))
        ],
        "centers": [[float(c[0]), float(c[1])] for c in view.centers.centers],
    }


def snapshot_filename(t: float) -> str:
    return f"snapshot_t{t:010.3f}.json"


def export_snapshot(view: StepView, directory, h: float = 0.0) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / snapshot_filename(view.t)
    path.write_text(json.dumps(snapshot_document(view, h), indent=1))
    return path


def load_snapshot(path) -> dict:
    return json.loads(Path(path).read_text())


class SnapshotWriter:
    def __init__(self, directory, h: float = 0.0):
        self.directory = Path(directory)
        self.h = h
        self.written: list[Path] = []

    def record(self, rec: MetricsRecord) -> None:
        pass

    def snapshot(self, view: StepView) -> None:
        self.written.append(export_snapshot(view, self.directory, self.h))

    def close(self) -> None:
        pass


@dataclass(frozen=True)
class RunOutputs:
    metrics_path: Path
    snapshots_dir: Path
    summary_path: Path


def record_dict(rec: MetricsRecord | None) -> dict | None:
    return None if rec is None else asdict(rec)


def write_summary(path, summary: dict) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
