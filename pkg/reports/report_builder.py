"""Report builder for plain-text run output."""
import math
from typing import Any, Dict, List, Sequence


def _num(value: Any) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6g}"
    return str(value)


class ReportBuilder:
    @staticmethod
    def format_run_summary(summary: Dict, out_dir: str = "") -> str:
        if not summary:
            return ""

        final = summary.get("final", {})
        converged = summary.get("converged", {})

        result = f"Run: {summary.get('model', 'N/A')} on {summary.get('geometry', 'N/A')}\n"
        if out_dir:
            result += f"Outputs: {out_dir}\n"
        result += f"Rows: {summary.get('rows', 0)} | rows with errors: {summary.get('errors', 0)}\n\n"

        result += "Final point:\n"
        for key in ("t", "volume", "h_density", "g_direct", "dlr_residual", "tv_to_mu", "delta"):
            if key in final:
                result += f"  {key:<14} {_num(final[key])}\n"

        if converged:
            result += "\nChecks:\n"
            for key, ok in converged.items():
                result += f"  [{'ok' if ok else '--'}] {key}\n"

        mc = summary.get("monte_carlo")
        if mc:
            result += f"\nMonte Carlo ({mc.get('chains', 0)} chains): max |z| = {_num(mc.get('max_abs_z', 0.0))}"

        return result.rstrip("\n")

    @staticmethod
    def format_sweep(rows: List[Dict], keys: Sequence[str], limit: int = 20) -> str:
        if not rows:
            return "Sweep grid is empty"

        ok = sum(1 for row in rows if row.get("status") == "ok")
        result = f"Sweep: {len(rows)} runs, {ok} succeeded\n\n"

        for row in rows[:limit]:
            params = ", ".join(f"{k}={row.get(k)}" for k in keys)
            if row.get("status") == "ok":
                result += (f"#{row['run']} {params} | h={_num(row.get('h_density'))} "
                           f"| dlr={_num(row.get('dlr_residual'))}\n")
            else:
                result += f"#{row['run']} {params} | FAILED: {row.get('error', '')}\n"

        if len(rows) > limit:
            result += f"... and {len(rows) - limit} more runs\n"

        return result.rstrip("\n")

    @staticmethod
    def format_models(names: Sequence[str]) -> str:
        return "\n".join(names)

    @staticmethod
    def format_oracle(name: str, value: float) -> str:
        # Full precision: the value is a reference for tests
        return f"{name} = {value!r}"
