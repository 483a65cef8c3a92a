"""
Terminal renderer for rates, condition checks, test reports and Monte Carlo summaries.
"""

from typing import Any, Dict, List, Optional

from rich.console import Console, Group
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from quadtest.core.conditions import RATING_STYLES


def _fmt(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


class TerminalRenderer:
    """
    Renders command results with rich.

    Args:
        console (Optional[Console]): Target console, stdout by default
    """
    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()

    def _header(self, title: str, subtitle: str = "") -> Panel:
        text = Text()
        text.append("QUADTEST", style="bold cyan")
        text.append(f" {title.upper()}", style="bold white")
        body = [text]
        if subtitle:
            body.append(Text(subtitle, style="dim"))
        return Panel(Group(*body), border_style="cyan", padding=(0, 2))

    def _key_values(self, title: str, values: Dict[str, Any], border: str = "blue") -> Panel:
        grid = Table.grid(padding=(0, 2))
        grid.add_column(style="bold cyan", justify="right")
        grid.add_column(style="bold white", justify="left")
        for key, value in values.items():
            if isinstance(value, (dict, list)):
                continue
            grid.add_row(key, _fmt(value))
        return Panel(grid, title=f"[bold]{title}[/bold]", border_style=border, padding=(0, 1))

    def conditions_table(self, checks: List[Dict[str, Any]]) -> Table:
        """Table of condition checks coloured by rating."""
        table = Table(title="Conditions", title_style="bold", expand=False)
        table.add_column("Check", style="bold")
        table.add_column("Value", justify="right")
        table.add_column("Rating")
        table.add_column("Measures", style="dim")
        for check in checks:
            style = RATING_STYLES.get(check["rating"], "white")
            table.add_row(check["name"], _fmt(check["value"]), f"[{style}]{check['rating']}[/{style}]", check["note"])
        return table

    def render_rate(self, result: Dict[str, Any]) -> None:
        components: List[Any] = [self._header("separation rate", result.get("family", ""))]
        summary = {key: result.get(key) for key in ("rate_exponent", "r_star", "C_star", "T", "regime", "ratio")}
        components.append(self._key_values("Rate", summary))
        for part in ("closed_form", "numeric"):
            if result.get(part):
                components.append(self._key_values(part.replace("_", " ").title(), result[part], border="green"))
        if result.get("condition_flags"):
            components.append(self.conditions_table(result["condition_flags"]))
        self.console.print(Group(*components))

    def render_report(self, report: Dict[str, Any]) -> None:
        verdict = Text("REJECT", style="bold red") if report["reject"] else Text("ACCEPT", style="bold green")
        components: List[Any] = [self._header("test report", report["mode"]), Panel(verdict, border_style="white")]
        components.append(self._key_values("Statistic", {
            "statistic": report["statistic"],
            "threshold": report["threshold"],
            "h_n predicted": report.get("h_n_predicted"),
        }))
        diagnostics = report.get("diagnostics") or {}
        components.append(self._key_values("Diagnostics", diagnostics, border="yellow"))
        if diagnostics.get("conditions"):
            components.append(self.conditions_table(diagnostics["conditions"]))
        self.console.print(Group(*components))

    def render_simulation(self, summary: Dict[str, Any]) -> None:
        estimates = summary["estimates"]
        table = Table(title="Error rates", title_style="bold")
        table.add_column("Error")
        table.add_column("Rate", justify="right")
        table.add_column("Std. error", justify="right")
        table.add_row("type I", _fmt(estimates["type1"]), _fmt(estimates["type1_se"]))
        table.add_row("type II", _fmt(estimates["type2"]), _fmt(estimates["type2_se"]))
        table.add_row("[bold]cumulative[/bold]", _fmt(estimates["cumulative"]), "")
        components: List[Any] = [self._header("monte carlo", f"{estimates['replications']} replications, "
                                                             f"seed {estimates['seed']}"), table]
        if summary.get("wilks"):
            components.append(self._key_values("Null distribution", summary["wilks"], border="green"))
        self.console.print(Group(*components))

    def render_weights(self, summary: Dict[str, Any]) -> None:
        self.console.print(Group(self._header("optimal weights"), self._key_values("Solution", summary)))

    def error(self, message: str) -> None:
        self.console.print(f"[bold red]error:[/bold red] {message}", highlight=False)
