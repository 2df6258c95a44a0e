"""CSV outputs of scored runs and SVG charts built from them."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from argbench.metrics import METRIC_FIELDS, MetricsReport  # noqa: E402

METRICS_FILE = "metrics.csv"
BREAKDOWN_HEADER = ["key", "parsed", "percent_correct"]
SPLIT_HEADER = ["key", "label", "parsed", "percent_correct"]

# stable SVG output: no embedded date, fixed element ids, text kept as text
plt.rcParams["svg.hashsalt"] = "argbench"
plt.rcParams["svg.fonttype"] = "none"


class ReportError(ValueError):
    pass


def fmt(value) -> str:
    if isinstance(value, float):
        return repr(round(value, 4))
    return str(value)


def breakdown_filename(key: str, split_by_label: bool = False) -> str:
    return f"breakdown_{key}_by_label.csv" if split_by_label else f"breakdown_{key}.csv"


def write_metrics_csv(report: MetricsReport, path: Path, run: str) -> None:
    row = report.as_row()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run", *row])
        writer.writerow([run, *(fmt(v) for v in row.values())])


def write_breakdown_csv(rows: Sequence[tuple], path: Path, split_by_label: bool = False) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SPLIT_HEADER if split_by_label else BREAKDOWN_HEADER)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _read_csv(path: Path, header: list[str]) -> list[dict[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or list(reader.fieldnames)[: len(header)] != header:
                raise ReportError(f"{path}: expected columns {','.join(header)}")
            rows = list(reader)
    except (OSError, csv.Error) as exc:
        raise ReportError(f"{path}: {exc}") from exc
    for i, row in enumerate(rows, 2):
        if None in row or any(row[h] in (None, "") for h in header):
            raise ReportError(f"{path}: line {i}: wrong number of fields")
    return rows


def _number(path: Path, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ReportError(f"{path}: not a number: {value!r}") from None


def read_metrics_csv(path: Path) -> dict[str, float]:
    rows = _read_csv(path, ["run", *METRIC_FIELDS])
    if len(rows) != 1:
        raise ReportError(f"{path}: expected exactly one metrics row")
    return {k: _number(path, rows[0][k]) for k in METRIC_FIELDS}


def read_breakdown_csv(path: Path) -> list[tuple[str, float]]:
    split = path.name.endswith("_by_label.csv")
    rows = _read_csv(path, SPLIT_HEADER if split else BREAKDOWN_HEADER)
    out = []
    for row in rows:
        pct = _number(path, row["percent_correct"])
        if not 0 <= pct <= 100:
            raise ReportError(f"{path}: percent_correct out of range: {pct}")
        key = f"{row['key']}|{row['label']}" if split else row["key"]
        out.append((key, pct))
    return out


def _sort_key(value: str):
    try:
        return (0, float(value), "")
    except ValueError:
        return (1, 0.0, value)


def chart(path: Path, title: str, xlabel: str, series: dict[str, list[tuple[str, float]]]) -> None:
    """Percent-correct chart: bars for a single series, lines for several."""
    fig, ax = plt.subplots(figsize=(7, 4))
    if len(series) == 1:
        ((_, points),) = series.items()
        ax.bar([p[0] for p in points], [p[1] for p in points], color="#4c72b0")
    else:
        xs = sorted({x for pts in series.values() for x, _ in pts}, key=_sort_key)
        for name, points in series.items():
            lookup = dict(points)
            ax.plot(xs, [lookup.get(x, float("nan")) for x in xs], marker="o", label=name)
        ax.legend()
    ax.set_ylim(0, 105)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("% correct")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _run_names(run_dirs: Sequence[Path]) -> list[str]:
    names: list[str] = []
    for d in run_dirs:
        base = d.resolve().name or "run"
        name, i = base, 2
        while name in names:
            name, i = f"{base}-{i}", i + 1
        names.append(name)
    return names


def build_report(run_dirs: Sequence[Path], out_dir: Path) -> list[Path]:
    """Charts per run and breakdown plus CSVs merging all runs side by side."""
    names = _run_names(run_dirs)
    metrics = {}
    breakdowns: dict[str, dict[str, list[tuple[str, float]]]] = {}
    for name, d in zip(names, run_dirs):
        metrics_path = d / METRICS_FILE
        if not metrics_path.exists():
            raise ReportError(f"{d}: no {METRICS_FILE}; run 'score' first")
        metrics[name] = read_metrics_csv(metrics_path)
        for path in sorted(d.glob("breakdown_*.csv")):
            kind = path.stem.removeprefix("breakdown_")
            breakdowns.setdefault(kind, {})[name] = read_breakdown_csv(path)

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    merged = out_dir / "merged_metrics.csv"
    with open(merged, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", *names])
        for field in METRIC_FIELDS:
            writer.writerow([field, *(fmt(metrics[n][field]) for n in names)])
    written.append(merged)

    for kind, per_run in sorted(breakdowns.items()):
        split = kind.endswith("_by_label")
        key = kind.removesuffix("_by_label")
        keys = sorted({k for rows in per_run.values() for k, _ in rows}, key=_sort_key)
        path = out_dir / f"merged_{kind}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["key", *names])
            for k in keys:
                writer.writerow([k, *(fmt(dict(per_run[n]).get(k, "")) if n in per_run else "" for n in names)])
        written.append(path)

        for name, rows in per_run.items():
            svg = out_dir / f"{name}_{kind}.svg"
            if split:
                series: dict[str, list[tuple[str, float]]] = {}
                for k, pct in rows:
                    x, label = k.split("|")
                    series.setdefault(f"answer {label}", []).append((x, pct))
            else:
                series = {name: rows}
            chart(svg, f"{name}: % correct by {key}", key, series)
            written.append(svg)
    return written
