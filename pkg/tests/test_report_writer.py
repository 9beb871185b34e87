"""Tests for result files."""

import csv
import json
from decimal import Decimal

import pytest

from conftest import make_setup
from src.models import RunReport
from src.mpc_scheduler import run_scenario
from src.report_writer import (
    comparison_rows,
    emit_comparison,
    emit_report,
    fmt,
    format_summary,
    step_header,
    summary_dict,
)


@pytest.fixture(scope="module")
def report():
    return run_scenario(make_setup(scenario=2, count=8, n_k=3))


def _read_csv(path):
    with path.open(encoding="utf-8", newline="") as f:
        return list(csv.reader(f))


def test_fmt_fixed_decimals():
    """Test six-decimal formatting and the negative-zero fold."""
    assert fmt(1.5) == "1.500000"
    assert fmt(-0.0) == "0.000000"
    assert fmt(-1e-9) == "0.000000"
    assert fmt(2.0000004) == "2.000000"


def test_step_header_order(report):
    """Test fixed columns, then per-unit columns, then costs."""
    header = step_header(report)
    assert header[:8] == [
        "interval", "clearing_price", "demand_kw", "served_kw", "unserved_kw",
        "res_deterministic_kw", "res_available_kw", "res_used_kw",
    ]
    assert header[8:16] == [
        "DG_power_kw", "DG_producing", "DG_committed", "DG_starts",
        "BESS_power_kw", "BESS_producing", "BESS_committed", "BESS_starts",
    ]
    assert header[16:] == ["j1", "j2", "j3", "j", "penalty", "cumulative_cost"]


def test_emit_report_files(tmp_path, report):
    """Test the files of one run and their row counts."""
    written = emit_report(report, tmp_path, "scenario: 2\n")
    names = {p.relative_to(tmp_path).as_posix() for p in written}
    assert {"steps.csv", "summary.json", "config.yaml", "plots/clearing_price.csv", "plots/cumulative_cost.csv"} <= names
    assert {"plots/soc_0.9.csv", "plots/customer_price_0.96.csv", "plots/dispatch_DG.csv", "plots/res_available.csv"} <= names
    rows = _read_csv(tmp_path / "steps.csv")
    assert len(rows) == 1 + 3
    assert [r[0] for r in rows[1:]] == ["0", "1", "2"]
    soc = _read_csv(tmp_path / "plots" / "soc_0.9.csv")
    assert soc[0] == ["x", "y"]
    assert len(soc) == 1 + 4
    assert (tmp_path / "config.yaml").read_text(encoding="utf-8") == "scenario: 2\n"


def test_cumulative_cost_is_sum_of_printed_costs(tmp_path, report):
    """Test that each cumulative value equals the sum of the printed j column so far."""
    emit_report(report, tmp_path)
    rows = _read_csv(tmp_path / "steps.csv")
    header = rows[0]
    j_col = header.index("j")
    cum_col = header.index("cumulative_cost")
    running = Decimal(0)
    for row in rows[1:]:
        running += Decimal(row[j_col])
        assert Decimal(row[cum_col]) == running


def test_output_is_byte_identical(tmp_path, report):
    """Test that writing the same report twice gives identical bytes."""
    emit_report(report, tmp_path / "a")
    emit_report(report, tmp_path / "b")
    for name in ("steps.csv", "summary.json", "plots/clearing_price.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_zero_interval_report_writes_headers_only(tmp_path):
    """Test that an empty run still writes well-formed files."""
    empty = RunReport.from_steps(1, [], (0.9,), [(0.8,)], [], ("DG", "BESS"))
    emit_report(empty, tmp_path)
    rows = _read_csv(tmp_path / "steps.csv")
    assert rows == [step_header(empty)]
    summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
    assert summary["intervals"] == 0
    assert summary["total_cost"] == 0.0


def test_summary_dict_keys(report):
    """Test the summary layout."""
    data = summary_dict(report)
    assert data["scenario"] == 2
    assert data["intervals"] == 3
    assert set(data["class_mean_soc"]) == {"0.9", "0.96"}
    assert set(data["energy_by_unit_kwh"]) == {"DG", "BESS"}
    assert data["total_cost"] == round(report.summary.total_cost, 6)


def test_comparison_files(tmp_path):
    """Test the comparison table over three scenarios."""
    reports = [run_scenario(make_setup(scenario=s, count=6, n_k=2)) for s in (1, 2, 3)]
    header, rows = comparison_rows(reports)
    assert header[:3] == ["scenario", "total_cost", "mean_clearing_price"]
    assert header[3:5] == ["mean_soc_0.9", "mean_soc_0.96"]
    assert header[-3:] == ["res_deterministic_mw", "res_available_mw", "unserved_kwh"]
    assert all(len(row) == len(header) for row in rows)
    assert [row[0] for row in rows] == ["1", "2", "3"]

    emit_comparison(reports, tmp_path)
    assert _read_csv(tmp_path / "comparison.csv")[0] == header
    data = json.loads((tmp_path / "comparison.json").read_text(encoding="utf-8"))
    assert sorted(data) == ["scenario_1", "scenario_2", "scenario_3"]

    text = format_summary(reports)
    lines = text.splitlines()
    assert len(lines) == 4
    assert lines[0].split() == header
