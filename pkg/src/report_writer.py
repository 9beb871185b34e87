"""Result files for one run and for a scenario comparison.

All numbers are written with fixed 6-decimal formatting and rows are in
interval order, so identical reports give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import logging
from decimal import Decimal
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from .models import RunReport

logger = logging.getLogger(__name__)

# steps.csv: 固定列 + ユニットクラスごとの列（UNIT_COLUMNS）+ コスト列
STEP_COLUMNS = (
    "interval",
    "clearing_price",
    "demand_kw",
    "served_kw",
    "unserved_kw",
    "res_deterministic_kw",
    "res_available_kw",
    "res_used_kw",
)
UNIT_COLUMNS = ("power_kw", "producing", "committed", "starts")
COST_COLUMNS = ("j1", "j2", "j3", "j", "penalty", "cumulative_cost")

COMPARISON_COLUMNS = (
    "scenario",
    "total_cost",
    "mean_clearing_price",
    "res_deterministic_mw",
    "res_available_mw",
    "unserved_kwh",
)


def fmt(value: float) -> str:
    text = f"{value:.6f}"
    return "0.000000" if text == "-0.000000" else text


def class_label(a: float) -> str:
    return f"{a:g}"


def step_header(report: RunReport) -> List[str]:
    header = list(STEP_COLUMNS)
    for name in report.unit_names:
        header.extend(f"{name}_{col}" for col in UNIT_COLUMNS)
    header.extend(COST_COLUMNS)
    return header


def step_rows(report: RunReport) -> List[List[str]]:
    rows = []
    running = Decimal(0)
    for step in report.steps:
        cost = fmt(step.j)
        running += Decimal(cost)
        row = [
            str(step.interval),
            fmt(step.clearing_price),
            fmt(step.demand_kw),
            fmt(step.served_kw),
            fmt(step.unserved_kw),
            fmt(step.res_deterministic_kw),
            fmt(step.res_available_kw),
            fmt(step.res_used_kw),
        ]
        units = {u.name: u for u in step.decision.units}
        for name in report.unit_names:
            unit = units.get(name)
            if unit is None:
                row.extend([fmt(0.0), "0", "0", "0"])
            else:
                row.extend([fmt(unit.power_kw), str(unit.producing), str(unit.committed), str(unit.starts)])
        # 累積コストは表示された j の和（表示値どうしで厳密に一致させる）
        row.extend([fmt(step.j1), fmt(step.j2), fmt(step.j3), cost, fmt(step.penalty), f"{running:.6f}"])
        rows.append(row)
    return rows


def summary_dict(report: RunReport) -> Dict[str, object]:
    s = report.summary
    return {
        "scenario": report.scenario,
        "intervals": len(report.steps),
        "total_cost": round(s.total_cost, 6),
        "class_mean_soc": {class_label(a): round(v, 6) for a, v in s.class_mean_soc},
        "energy_by_kind_kwh": {k: round(v, 6) for k, v in s.energy_by_kind_kwh},
        "energy_by_unit_kwh": {k: round(v, 6) for k, v in s.energy_by_unit_kwh},
        "res_deterministic_mwh": round(s.res_deterministic_mwh, 6),
        "res_available_mwh": round(s.res_available_mwh, 6),
        "res_deterministic_mean_mw": round(s.res_deterministic_mean_mw, 6),
        "res_available_mean_mw": round(s.res_available_mean_mw, 6),
        "unserved_kwh": round(s.unserved_kwh, 6),
        "mean_clearing_price": round(s.mean_clearing_price, 6),
    }


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, data: object) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        json.dump(data, f, sort_keys=True, indent=2, ensure_ascii=False)
        f.write("\n")


def _plot_series(report: RunReport) -> Dict[str, List[tuple]]:
    plots: Dict[str, List[tuple]] = {}
    for idx, a in enumerate(report.class_labels):
        label = class_label(a)
        plots[f"soc_{label}"] = [(k, row[idx]) for k, row in enumerate(report.soc_means)]
        plots[f"customer_price_{label}"] = [(k, row[idx]) for k, row in enumerate(report.price_means)]
    plots["clearing_price"] = [(s.interval, s.clearing_price) for s in report.steps]
    for name in report.unit_names:
        plots[f"dispatch_{name}"] = [
            (s.interval, sum(u.power_kw for u in s.decision.units if u.name == name)) for s in report.steps
        ]
    plots["res_deterministic"] = [(s.interval, s.res_deterministic_kw) for s in report.steps]
    plots["res_available"] = [(s.interval, s.res_available_kw) for s in report.steps]
    plots["cumulative_cost"] = [(s.interval, s.cumulative_cost) for s in report.steps]
    return plots


def emit_report(report: RunReport, out_dir: Path | str, config_text: Optional[str] = None) -> List[Path]:
    """Write steps.csv, summary.json, plots/*.csv (and config.yaml when given)."""
    out = Path(out_dir)
    plots_dir = out / "plots"
    plots_dir.mkdir(parents=True, exist_ok=True)
    written = []

    steps_path = out / "steps.csv"
    _write_csv(steps_path, step_header(report), step_rows(report))
    written.append(steps_path)

    summary_path = out / "summary.json"
    _write_json(summary_path, summary_dict(report))
    written.append(summary_path)

    for name, points in _plot_series(report).items():
        path = plots_dir / f"{name}.csv"
        _write_csv(path, ("x", "y"), ((str(x), fmt(y)) for x, y in points))
        written.append(path)

    if config_text is not None:
        config_path = out / "config.yaml"
        with config_path.open("w", encoding="utf-8", newline="") as f:
            f.write(config_text)
        written.append(config_path)

    logger.info("wrote %d files to %s", len(written), out)
    return written


def comparison_rows(reports: Sequence[RunReport]) -> tuple:
    labels = [class_label(a) for a in (reports[0].class_labels if reports else ())]
    kinds = sorted({k for r in reports for k, _ in r.summary.energy_by_kind_kwh})
    header = list(COMPARISON_COLUMNS[:3]) + [f"mean_soc_{l}" for l in labels] + [f"{k}_kwh" for k in kinds]
    header += list(COMPARISON_COLUMNS[3:])
    rows = []
    for report in reports:
        s = report.summary
        by_kind = dict(s.energy_by_kind_kwh)
        row = [str(report.scenario), fmt(s.total_cost), fmt(s.mean_clearing_price)]
        row += [fmt(v) for _, v in s.class_mean_soc]
        row += [fmt(by_kind.get(k, 0.0)) for k in kinds]
        row += [fmt(s.res_deterministic_mean_mw), fmt(s.res_available_mean_mw), fmt(s.unserved_kwh)]
        rows.append(row)
    return header, rows


def emit_comparison(reports: Sequence[RunReport], out_dir: Path | str) -> List[Path]:
    """Side-by-side scenario totals: comparison.csv and comparison.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header, rows = comparison_rows(reports)
    csv_path = out / "comparison.csv"
    _write_csv(csv_path, header, rows)
    json_path = out / "comparison.json"
    _write_json(json_path, {f"scenario_{r.scenario}": summary_dict(r) for r in reports})
    return [csv_path, json_path]


def format_summary(reports: Sequence[RunReport]) -> str:
    """Plain-text table for the terminal."""
    header, rows = comparison_rows(reports)
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)
