"""Command-line interface for prsguard."""

from __future__ import annotations

import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import typer
from rich import print as rprint
from rich.console import Console
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.scenario_loader import apply_overrides, read_scenario_data, validate_scenario
from config.settings import get_config_manager, get_settings
from core.errors import PrsGuardError
from core.export import export
from core.metrics import ATTACK, BENIGN, aggregate
from core.prs_grid import generate_prs_grid, slot_waveform
from core.receiver import PositioningReceiver, calibrate_hearability
from core.simulator import ScenarioRunner
from models.records import EpochRecord, MetricsReport
from models.scenario import ScenarioConfig
from models.signal import Numerology, PrsConfig
from models.verdict import OutcomeKind
from utils.log_setup import setup_logging

__version__ = "0.1.0"

app = typer.Typer(
    name="prsguard",
    help="📡 Secure PRS positioning simulator and attack-detection harness",
    no_args_is_help=True,
)
console = Console()


def _init() -> None:
    settings = get_settings()
    setup_logging("DEBUG" if settings.debug else settings.log_level, console)
    warning = get_config_manager().load_warning
    if warning:
        rprint(f"[yellow]⚠️  {warning}[/yellow]")


def _load_config(
    path: Path, seed: Optional[int] = None, profile: Optional[str] = None
) -> ScenarioConfig:
    data = read_scenario_data(path)
    data.setdefault("profile", get_settings().default_profile)
    cfg = validate_scenario(data)
    overrides: Dict[str, Any] = {}
    if seed is not None:
        overrides["seed"] = seed
    if profile is not None:
        overrides["profile"] = profile
    return apply_overrides(cfg, overrides) if overrides else cfg


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.1%}"


def _run_with_progress(cfg: ScenarioConfig, workers: int) -> List[EpochRecord]:
    runner = ScenarioRunner(cfg)
    progress = Progress(
        TextColumn("[cyan]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=console,
    )
    with progress:
        task = progress.add_task(cfg.name, total=runner.n_epochs)
        return runner.run(workers=workers, progress=lambda _: progress.advance(task))


def _display_report(report: MetricsReport) -> None:
    outcomes = Table(title="📊 Positioning outcomes")
    outcomes.add_column("Phase", style="cyan")
    outcomes.add_column("Epochs", justify="right")
    for kind in OutcomeKind:
        outcomes.add_column(kind.value, justify="right")
    for phase, shares in report.phase_shares.items():
        outcomes.add_row(
            phase.value,
            str(report.phase_counts[phase]),
            *(_fmt(shares[kind]) for kind in OutcomeKind),
        )
    console.print(outcomes)

    if report.techniques:
        decisions = Table(title="🛡️  Correct decisions")
        decisions.add_column("Technique", style="cyan")
        decisions.add_column("Benign", justify="right")
        decisions.add_column("Attack", justify="right")
        decisions.add_column("False alarms", justify="right")
        decisions.add_column("Accepted wrong", justify="right")
        for t in report.techniques:
            rates = report.decision_rates[t]
            decisions.add_row(
                t.value,
                _fmt(rates[BENIGN]),
                _fmt(rates[ATTACK]),
                _fmt(report.false_alarm_rates[t]),
                _fmt(report.accepted_wrong_rates[t]),
            )
        console.print(decisions)

    if report.benign_error_percentiles_m:
        p = report.benign_error_percentiles_m
        rprint(
            f"📏 Benign error: p50 {p['p50']:.2f} m, p95 {p['p95']:.2f} m, "
            f"p99.9 {p['p99_9']:.2f} m"
        )


@app.command("run")
def run_command(
    config: Path = typer.Option(..., "--config", "-c", help="Scenario file (JSON or YAML)"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the master seed"),
    profile: Optional[str] = typer.Option(None, "--profile", help="Numerology: full or test"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Worker processes"),
):
    """Run one scenario and export epochs.csv, metrics.json and config_resolved.json."""
    _init()
    settings = get_settings()
    try:
        cfg = _load_config(config, seed, profile)
        records = _run_with_progress(cfg, workers or settings.resolved_workers())
        report = aggregate(records, cfg)
        paths = export(records, report, out or settings.output_dir / cfg.name, cfg)
    except PrsGuardError as e:
        rprint(f"[red]❌ Error: {str(e)}[/red]")
        raise typer.Exit(1)

    _display_report(report)
    rprint(f"✅ [green]Results written to {paths['epochs'].parent}[/green]")


@app.command("calibrate-threshold")
def calibrate_command(
    config: Path = typer.Option(..., "--config", "-c", help="Scenario file (JSON or YAML)"),
    trials: int = typer.Option(1000, "--trials", "-n", help="Pure-noise trials"),
    false_rate: float = typer.Option(0.01, "--false-rate", help="Target false-detection rate"),
):
    """Calibrate the hearability threshold on noise-only receptions."""
    _init()
    try:
        cfg = _load_config(config)
        num = Numerology.from_profile(cfg.profile)
        prs = PrsConfig(
            n_id_seq=0,
            k_comb=cfg.prs.k_comb,
            num_symbols=cfg.prs.num_symbols,
            start_symbol=cfg.prs.start_symbol,
            stagger=cfg.prs.stagger,
        )
        replica = slot_waveform(
            [generate_prs_grid(prs, num, s, 0) for s in range(cfg.prs.n_slots)], num
        )
        receiver = PositioningReceiver(num, cfg.receiver)
        with console.status("🎲 Correlating noise-only buffers..."):
            result = calibrate_hearability(
                replica,
                receiver.buffer_samples(cfg.prs.n_slots),
                trials=trials,
                false_rate=false_rate,
                guard=cfg.receiver.guard_samples,
                max_lag=receiver.max_lag,
                configured_kappa_db=cfg.receiver.kappa_db,
                seed=cfg.seed,
            )
    except PrsGuardError as e:
        rprint(f"[red]❌ Error: {str(e)}[/red]")
        raise typer.Exit(1)

    console.print(
        Panel(
            f"Calibrated κ: [bold cyan]{result.kappa_db:.2f} dB[/bold cyan] "
            f"for a {false_rate:.1%} false-detection rate\n"
            f"Configured κ {cfg.receiver.kappa_db:.2f} dB: "
            f"{result.false_rate_at_configured:.2%} false detections over {result.trials} trials",
            title="Hearability threshold",
            border_style="blue",
            padding=(1, 2),
        )
    )


@app.command("sweep")
def sweep_command(
    values: List[str] = typer.Argument(..., help="Values to assign to the parameter"),
    config: Path = typer.Option(..., "--config", "-c", help="Scenario file (JSON or YAML)"),
    param: str = typer.Option(..., "--param", "-p", help="Dotted path, e.g. attack.power_dbm"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Worker processes"),
):
    """Run the scenario once per value of one parameter."""
    _init()
    settings = get_settings()
    summary = Table(title=f"🔁 Sweep over {param}")
    summary.add_column("Value", style="cyan")
    for kind in OutcomeKind:
        summary.add_column(kind.value, justify="right")
    summary.add_column("Detections (attack)", justify="left")

    try:
        base = _load_config(config)
        root = out or settings.output_dir / f"{base.name}-sweep"
        for value in values:
            cfg = apply_overrides(base, {param: value})
            records = _run_with_progress(cfg, workers or settings.resolved_workers())
            report = aggregate(records, cfg)
            export(records, report, root / f"{param}={value}", cfg)
            shares = report.attacked_shares or report.phase_shares[records[0].phase]
            detections = ", ".join(
                f"{t.value} {_fmt(report.decision_rates[t][ATTACK])}" for t in report.techniques
            )
            summary.add_row(value, *(_fmt(shares[k]) for k in OutcomeKind), detections or "-")
    except PrsGuardError as e:
        rprint(f"[red]❌ Error: {str(e)}[/red]")
        raise typer.Exit(1)

    console.print(summary)
    rprint(f"✅ [green]Results written to {root}[/green]")


@app.command("config")
def config_command(
    show: bool = typer.Option(False, "--show", help="Show current settings"),
    init: bool = typer.Option(False, "--init", help="Write a default settings file"),
):
    """Manage prsguard application settings."""
    config_manager = get_config_manager()

    if init:
        path = config_manager.create_default_config()
        rprint(f"✅ [green]Default configuration created at {path}[/green]")
        return

    if show:
        config_table = Table(title="🔧 prsguard Configuration")
        config_table.add_column("Setting", style="cyan")
        config_table.add_column("Value", style="green")
        for key, value in config_manager.as_dict().items():
            config_table.add_row(key, str(value))
        config_table.add_row("config file", str(config_manager.config_file))
        console.print(config_table)
    else:
        rprint("Use [cyan]--show[/cyan] to see current configuration")


@app.command("version")
def version_command():
    """Show prsguard version information."""
    version_panel = Panel(
        f"📡 [bold cyan]prsguard[/bold cyan] v{__version__}\n\n"
        "Simulator for encrypted and authenticated PRS positioning under attack",
        title="Version Information",
        border_style="blue",
        padding=(1, 2),
    )
    console.print(version_panel)


def main():
    """Main entry point."""
    app()


if __name__ == "__main__":
    main()
