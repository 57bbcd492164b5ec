"""Run-report bundle: canonical JSON, comparison table, SVG charts.

report.json is a pure function of the run's results: keys are sorted,
floats use repr round-tripping, and anything time-dependent (wall-clock
timings, write timestamps) lives in manifest.json instead, so two runs
with the same config and seed produce byte-identical report.json files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .charts import line_chart, write_chart

REPORT_FILE = "report.json"
COMPARISON_FILE = "comparison.csv"
MANIFEST_FILE = "manifest.json"


def jsonable(obj):
    """Recursively convert numpy scalars/arrays so json.dumps accepts them."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.datetime64):
        return str(obj)
    return obj


@dataclass(frozen=True, eq=False)
class ChartData:
    """One line chart: a file stem plus labelled value arrays."""

    name: str
    title: str
    series: dict
    y_label: str = "kW"

    def __post_init__(self):
        if not self.name or "/" in self.name:
            raise ValueError("chart name must be a bare file stem")
        if not self.series:
            raise ValueError("chart needs at least one series")


@dataclass
class RunReport:
    """Everything a run wants to publish, in stage order."""

    seed: int
    config_echo: dict
    stages: list = field(default_factory=list)
    charts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def add_stage(self, name: str, payload: dict, seconds: float | None = None):
        self.stages.append((str(name), jsonable(payload)))
        if seconds is not None:
            self.timings[str(name)] = float(seconds)

    def add_chart(self, chart: ChartData):
        self.charts.append(chart)

    def to_json_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "config": jsonable(self.config_echo),
            "stages": [
                {"name": name, "data": payload} for name, payload in self.stages
            ],
            "charts": [chart.name for chart in self.charts],
        }


def _comparison_rows(report: RunReport) -> list[tuple[str, float, float]]:
    rows = []
    for name, payload in report.stages:
        if name != "evaluate":
            continue
        models = payload.get("models", {})
        rows = [
            (model, models[model]["mae"], models[model]["rmse"])
            for model in sorted(models)
        ]
    return rows


def emit_report(report: RunReport, out_dir) -> dict:
    """Write the bundle and return the manifest.

    Files: report.json (canonical), comparison.csv (model, mae, rmse from
    the evaluate stage; header only when none ran), one SVG per chart, and
    manifest.json listing every written file with its size plus the
    timings. Re-running overwrites deterministically.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    report_path = out / REPORT_FILE
    with open(report_path, "w", encoding="utf-8") as handle:
        json.dump(report.to_json_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    written.append(REPORT_FILE)

    with open(out / COMPARISON_FILE, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["model", "mae", "rmse"])
        for model, mae, rmse in _comparison_rows(report):
            writer.writerow([model, repr(float(mae)), repr(float(rmse))])
    written.append(COMPARISON_FILE)

    for chart in report.charts:
        svg = line_chart(chart.series, chart.title, y_label=chart.y_label)
        write_chart(svg, out / f"{chart.name}.svg")
        written.append(f"{chart.name}.svg")

    manifest = {
        "files": [
            {"name": name, "bytes": (out / name).stat().st_size}
            for name in sorted(written)
        ],
        "timings_seconds": {k: report.timings[k] for k in sorted(report.timings)},
        "written_utc": datetime.now(timezone.utc).isoformat(),
    }
    with open(out / MANIFEST_FILE, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return manifest
