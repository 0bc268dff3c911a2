import math
import os
import sqlite3
from typing import Dict, List, Optional, Sequence, Tuple

from openpyxl import Workbook
from openpyxl.styles import Alignment, Font, PatternFill


def _fetch_rows(db_path: str, config_hash: Optional[str] = None) -> Tuple[List[str], List[Tuple]]:
    conn = sqlite3.connect(db_path)
    try:
        cur = conn.cursor()
        if config_hash:
            cur.execute("SELECT * FROM runs WHERE config_hash = ? ORDER BY id ASC", (config_hash,))
        else:
            cur.execute("SELECT * FROM runs ORDER BY id ASC")
        rows = cur.fetchall()
        columns = [d[0] for d in cur.description]
        return columns, rows
    finally:
        conn.close()


def _is_float_column(col_name: str) -> bool:
    return col_name not in {"volume", "run", "id", "seed", "exit_code", "rows", "errors", "status", "error"}


def _coerce_cell_value(col: str, val):
    if val is None:
        return None
    if isinstance(val, bool):
        return "yes" if val else "no"
    if isinstance(val, float):
        # Excel cells cannot hold nan or inf
        return val if math.isfinite(val) else repr(val)
    if isinstance(val, (int, str)):
        return val
    if isinstance(val, (list, tuple)):
        return ", ".join(str(v) for v in val)
    return str(val)


def _auto_fit_columns(ws) -> None:
    for column_cells in ws.columns:
        max_len = 0
        col_letter = column_cells[0].column_letter
        for cell in column_cells:
            v = cell.value
            s = v if isinstance(v, str) else ("" if v is None else str(v))
            if len(s) > max_len:
                max_len = len(s)
        ws.column_dimensions[col_letter].width = min(max(10, max_len + 2), 60)


def _apply_header_style(cell) -> None:
    cell.font = Font(bold=True)
    cell.fill = PatternFill("solid", fgColor="DDDDDD")
    cell.alignment = Alignment(horizontal="center", vertical="center")


def _apply_body_style(cell, col_name: str) -> None:
    cell.alignment = Alignment(horizontal="left", vertical="center")
    if isinstance(cell.value, float) and _is_float_column(col_name):
        cell.number_format = "0.000000000000"


_HEADERS = {
    "t": "t (time or step)",
    "volume": "|volume|",
    "h_density": "h / |volume|",
    "g_direct": "entropy loss (direct)",
    "g_rep": "entropy production",
    "pairing": "energy pairing",
    "delta": "non-nullness",
    "dlr_residual": "DLR residual",
    "martingale_diag": "martingale diagnostic",
    "tv_to_mu": "TV to reference",
    "weak_step": "TV to previous",
    "error": "error",
}


def _write_sheet(ws, columns: Sequence[str], rows: Sequence[Sequence]) -> None:
    for col_idx, col_name in enumerate(columns, start=1):
        c = ws.cell(row=1, column=col_idx, value=_HEADERS.get(col_name, col_name))
        _apply_header_style(c)

    # Freeze header
    ws.freeze_panes = "A2"

    for r_idx, row in enumerate(rows, start=2):
        for c_idx, col_name in enumerate(columns, start=1):
            cell = ws.cell(row=r_idx, column=c_idx, value=_coerce_cell_value(col_name, row[c_idx - 1]))
            _apply_body_style(cell, col_name)

    if columns:
        last_col_letter = ws.cell(row=1, column=len(columns)).column_letter
        ws.auto_filter.ref = f"A1:{last_col_letter}{ws.max_row}"

    _auto_fit_columns(ws)


def export_trace_to_excel(rows: List[Dict], columns: Sequence[str], output_path: str) -> str:
    """One sheet per volume plus an 'All' sheet with every row of the trace."""
    folder = os.path.dirname(output_path)
    if folder:
        os.makedirs(folder, exist_ok=True)

    wb = Workbook()
    ws = wb.active
    ws.title = "All"
    _write_sheet(ws, columns, [[row.get(c) for c in columns] for row in rows])

    for volume in sorted({row["volume"] for row in rows}):
        sheet = wb.create_sheet(title=f"V{volume}")
        _write_sheet(sheet, columns, [[row.get(c) for c in columns] for row in rows if row["volume"] == volume])

    wb.save(output_path)
    return output_path


def export_sweep_to_excel(rows: List[Dict], columns: Sequence[str], output_path: str) -> str:
    folder = os.path.dirname(output_path)
    if folder:
        os.makedirs(folder, exist_ok=True)

    wb = Workbook()
    ws = wb.active
    ws.title = "Sweep"
    _write_sheet(ws, columns, [[row.get(c) for c in columns] for row in rows])

    wb.save(output_path)
    return output_path


def export_runs_to_excel(db_path: str, output_path: str, config_hash: Optional[str] = None) -> str:
    """Dump the run registry (optionally one config hash) to a spreadsheet."""
    folder = os.path.dirname(output_path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    columns, rows = _fetch_rows(db_path, config_hash)

    wb = Workbook()
    ws = wb.active
    ws.title = "Runs"
    _write_sheet(ws, columns, rows)

    wb.save(output_path)
    return output_path
