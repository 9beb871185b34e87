"""Tests for the Excel report tool."""

from openpyxl import load_workbook

from src.main import main as cli
from tools.generate_report import create_report, find_runs, main


def test_find_runs(tmp_path, small_config_file):
    """Test that a compare directory yields its scenario runs in order."""
    assert cli(["compare", "--config", str(small_config_file), "--out", str(tmp_path)]) == 0
    runs = find_runs(tmp_path)
    assert [p.name for p in runs] == ["scenario_1", "scenario_2", "scenario_3"]
    assert find_runs(tmp_path / "scenario_2") == [tmp_path / "scenario_2"]


def test_workbook_from_compare_output(tmp_path, small_config_file):
    """Test sheet names and copied step rows."""
    out = tmp_path / "out"
    assert cli(["compare", "--config", str(small_config_file), "--out", str(out)]) == 0
    target = tmp_path / "report.xlsx"
    assert create_report(out, target) == 3

    wb = load_workbook(target)
    assert wb.sheetnames == ["steps_scenario_1", "steps_scenario_2", "steps_scenario_3", "サマリー", "比較"]
    ws = wb["steps_scenario_2"]
    assert ws.cell(row=1, column=1).value == "interval"
    assert ws.max_row == 1 + 3
    assert wb["比較"].cell(row=2, column=1).value == 1


def test_single_run_sheet(tmp_path, small_config_file):
    """Test the default output path for a single run directory."""
    out = tmp_path / "run"
    assert cli(["run", "--config", str(small_config_file), "--out", str(out)]) == 0
    assert main([str(out)]) == 0
    wb = load_workbook(out / "report.xlsx")
    assert wb.sheetnames == ["steps", "サマリー"]


def test_missing_outputs(tmp_path):
    """Test that a directory without results returns 1."""
    assert main([str(tmp_path)]) == 1
