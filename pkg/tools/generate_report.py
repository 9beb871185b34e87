"""
シミュレーション結果のExcelレポート生成ツール.

run / compare の出力ディレクトリ（steps.csv, summary.json, comparison.csv）を
読み取り、確認用のExcelブックを生成する。
"""

import argparse
import csv
import json
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter

HEADER_FILL = PatternFill(start_color="1F4E79", end_color="1F4E79", fill_type="solid")
HEADER_FONT = Font(color="FFFFFF", bold=True, size=10)
UNSERVED_FILL = PatternFill(start_color="FCE4EC", end_color="FCE4EC", fill_type="solid")
NORMAL_FONT = Font(size=9)
THIN_BORDER = Border(
    left=Side(style="thin"),
    right=Side(style="thin"),
    top=Side(style="thin"),
    bottom=Side(style="thin"),
)


def read_csv(path: Path) -> list[list[str]]:
    with path.open("r", encoding="utf-8", newline="") as f:
        return list(csv.reader(f))


def find_runs(out_dir: Path) -> list[Path]:
    """単一 run ならそのディレクトリ、compare なら scenario_* を順に返す."""
    if (out_dir / "steps.csv").exists():
        return [out_dir]
    return sorted(p for p in out_dir.glob("scenario_*") if (p / "steps.csv").exists())


def _cell_value(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_table(ws, rows: list[list[str]], highlight_column: str = "") -> None:
    if not rows:
        return
    header = rows[0]
    mark = header.index(highlight_column) if highlight_column in header else None
    for col_idx, name in enumerate(header, 1):
        cell = ws.cell(row=1, column=col_idx, value=name)
        cell.fill = HEADER_FILL
        cell.font = HEADER_FONT
        cell.border = THIN_BORDER
        cell.alignment = Alignment(horizontal="center", wrap_text=True)

    for row_idx, row in enumerate(rows[1:], 2):
        # 未供給がある行は赤背景
        flagged = mark is not None and float(row[mark] or 0) > 0
        for col_idx, text in enumerate(row, 1):
            cell = ws.cell(row=row_idx, column=col_idx, value=_cell_value(text))
            cell.font = NORMAL_FONT
            cell.border = THIN_BORDER
            if flagged:
                cell.fill = UNSERVED_FILL

    for col_idx, name in enumerate(header, 1):
        ws.column_dimensions[get_column_letter(col_idx)].width = max(10, min(len(name) + 2, 24))
    ws.auto_filter.ref = f"A1:{get_column_letter(len(header))}{len(rows)}"
    ws.freeze_panes = "B2"


def _flatten(prefix: str, value) -> list[tuple[str, object]]:
    if isinstance(value, dict):
        items = []
        for key in sorted(value):
            items.extend(_flatten(f"{prefix}.{key}" if prefix else key, value[key]))
        return items
    return [(prefix, value)]


def create_report(out_dir: Path, output_path: Path) -> int:
    """Excelレポートを生成し、取り込んだ run の数を返す."""
    runs = find_runs(out_dir)
    wb = Workbook()
    wb.remove(wb.active)

    for run_dir in runs:
        ws = wb.create_sheet(f"steps_{run_dir.name}" if run_dir != out_dir else "steps")
        write_table(ws, read_csv(run_dir / "steps.csv"), highlight_column="unserved_kw")

    # === サマリー ===
    ws = wb.create_sheet("サマリー")
    row_idx = 1
    for run_dir in runs:
        summary = json.loads((run_dir / "summary.json").read_text(encoding="utf-8"))
        ws.cell(row=row_idx, column=1, value=f"--- {run_dir.name} ---").font = Font(bold=True, size=11)
        row_idx += 1
        for label, value in _flatten("", summary):
            ws.cell(row=row_idx, column=1, value=label).font = Font(bold=True, size=10)
            ws.cell(row=row_idx, column=2, value=value)
            row_idx += 1
        row_idx += 1
    ws.column_dimensions["A"].width = 32
    ws.column_dimensions["B"].width = 20

    comparison = out_dir / "comparison.csv"
    if comparison.exists():
        write_table(wb.create_sheet("比較"), read_csv(comparison), highlight_column="unserved_kwh")

    output_path.parent.mkdir(parents=True, exist_ok=True)
    wb.save(output_path)
    return len(runs)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="シミュレーション結果レポート生成")
    parser.add_argument("out_dir", type=str, help="run / compare の出力ディレクトリ")
    parser.add_argument("--output", type=str, default="", help="出力ファイルパス (default: <out_dir>/report.xlsx)")
    args = parser.parse_args(argv)

    out_dir = Path(args.out_dir)
    output_path = Path(args.output) if args.output else out_dir / "report.xlsx"
    if not find_runs(out_dir):
        print(f"steps.csv が見つかりません: {out_dir}")
        return 1

    count = create_report(out_dir, output_path)
    print(f"レポート生成完了: {output_path}")
    print(f"  対象: {count} run")
    return 0


if __name__ == "__main__":
    sys.exit(main())
