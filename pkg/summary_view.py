from __future__ import annotations

from typing import Optional

from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from evaluate import EvalResult, GroupSummary


def _style_frequency(g: GroupSummary) -> Text:
    txt = f"{g.frequency:.3f}"
    if g.threshold is None:
        return Text(txt)
    return Text(txt, style="green" if g.passed else "red")


def _style_optional(value: Optional[float], fmt: str = "{:.4f}") -> Text:
    return Text(fmt.format(value)) if value is not None else Text("-", style="dim")


def _combo_label(g: GroupSummary) -> str:
    if g.combo:
        return " ".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in sorted(g.combo.items()))
    eps = g.cfg.get("epsilon")
    return f"epsilon={eps:g}" if isinstance(eps, (int, float)) else "-"


def build_table(result: EvalResult, *, title: str = "Trial summary") -> Panel:
    table = Table(show_header=True, header_style="bold cyan")
    for col, justify in [
        ("Algorithm", "left"),
        ("Config", "left"),
        ("Trials", "right"),
        ("Success", "right"),
        ("Threshold", "right"),
        ("Margin", "right"),
        ("Wilson 99%", "right"),
        ("Fallback", "right"),
        ("Max ratio", "right"),
        ("Samples", "right"),
        ("", "center"),
    ]:
        table.add_column(col, justify=justify)

    for g in result.groups:
        lo, hi = g.wilson
        verdict = Text("-", style="dim") if g.threshold is None else (
            Text("PASS", style="bold green") if g.passed else Text("FAIL", style="bold red")
        )
        table.add_row(
            Text(g.algorithm, style="bold"),
            Text(_combo_label(g)),
            Text(str(g.trials)),
            _style_frequency(g),
            _style_optional(g.threshold, "{:.3f}"),
            Text(f"{g.margin:.3f}"),
            Text(f"[{lo:.3f}, {hi:.3f}]"),
            Text(f"{g.fallback_rate:.3f}", style="yellow" if g.fallbacks else ""),
            _style_optional(g.max_ratio),
            Text(str(g.max_samples)),
            verdict,
        )

    status = "all criteria pass" if result.passed else "criteria failed"
    subtitle = Text(f"{result.trials} trials  |  {len(result.malformed)} malformed  |  {status}", style="dim")
    border = "blue" if result.passed else "red"
    return Panel(table, title=Text(title, style="bold magenta"), subtitle=subtitle, border_style=border, expand=True)


def render_malformed(console: Console, result: EvalResult) -> None:
    for lineno, reason in result.malformed:
        console.print(Text(f"line {lineno}: {reason}", style="red"))
