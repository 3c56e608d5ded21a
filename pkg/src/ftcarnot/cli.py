"""ftcarnot CLI - finite-time Carnot cycles of a two-level engine."""

import logging
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pandas as pd
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import __version__
from . import artifacts as art
from . import lowdiss as ld
from .cycle import CycleSpec, run_cycle
from .dynamics import DEFAULT_TOL, BathContact, Ramp, SolverError
from .optimize import (
    DEFAULT_OPT_TOL,
    DEFAULT_SCAN_POINTS,
    DEFAULT_WORKERS,
    ScanGrid,
    emp_sweep,
    maximize_power_1d,
)
from .params import EngineParams, ParameterError, derive, parse_coupling, require_engine_orientation

app = typer.Typer(help="ftcarnot - finite-time Carnot cycles, maximum power and EMP.")
console = Console()
err_console = Console(stderr=True)

EXIT_VALIDATION = 2
EXIT_SOLVER = 3

EMP_COLUMNS = [
    "eta_C", "tau_h_star", "tau_h_star_over_tr", "P_max", "eta_MP",
    "eta_minus", "eta_plus", "in_regime", "exceeded_upper_bound",
]


@contextmanager
def _failures():
    """Map validation failures to exit code 2 and solver failures to exit code 3."""
    try:
        yield
    except ParameterError as e:
        err_console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(EXIT_VALIDATION)
    except SolverError as e:
        err_console.print(f"[red]Solver error:[/red] {e}")
        raise typer.Exit(EXIT_SOLVER)


def _version_callback(value: bool):
    if value:
        console.print(f"ftcarnot {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log progress to stderr"),
    version: bool = typer.Option(
        False, "--version", callback=_version_callback, is_eager=True, help="Show version"
    ),
):
    """Simulate finite-time Carnot cycles and test the low-dissipation model."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def _params(T_h, T_c, gamma_h, gamma_c, omega_i, omega_f) -> EngineParams:
    params = EngineParams(
        T_h=T_h,
        T_c=T_c,
        gamma_h=gamma_h,
        gamma_c=parse_coupling(gamma_c),
        omega_h_i=omega_i,
        omega_h_f=omega_f,
    )
    require_engine_orientation(params)
    derive(params)
    return params


def _grid(lo: str, hi: str, points: int, t_r: float) -> ScanGrid:
    return ScanGrid(art.parse_duration(lo, t_r), art.parse_duration(hi, t_r), points)


def _regime(params: EngineParams, margin: float) -> dict:
    threshold, in_regime = ld.regime_check(params, margin)
    return {"threshold": threshold, "in_regime": in_regime, "margin": margin}


def _out_dir(out_dir: str | None) -> Path:
    return Path(out_dir) if out_dir else art.DEFAULT_OUT_DIR


def _print_outputs(paths: list[Path]):
    for path in paths:
        console.print(f"[green]Wrote:[/green] {path}")


@app.command("cycle")
def cmd_cycle(
    T_h: float = typer.Option(..., "--T-h", help="Hot bath temperature"),
    T_c: float = typer.Option(..., "--T-c", help="Cold bath temperature"),
    gamma_h: float = typer.Option(1.0, "--gamma-h", help="Hot bath coupling"),
    gamma_c: str = typer.Option("inf", "--gamma-c", help="Cold bath coupling, a number or 'inf'"),
    omega_i: float = typer.Option(..., "--omega-i", help="Initial hot-stroke spacing"),
    omega_f: float = typer.Option(..., "--omega-f", help="Final hot-stroke spacing"),
    tau_h: str = typer.Option(..., "--tau-h", help="Hot-stroke durations, e.g. '2tr,10tr,0.5'"),
    tau_c: str = typer.Option(None, "--tau-c", help="Cold-stroke duration (finite gamma_c)"),
    out_dir: str = typer.Option(None, "--out-dir", "-o", help="Output directory"),
    tol: float = typer.Option(DEFAULT_TOL, "--tol", help="Integrator relative tolerance"),
    margin: float = typer.Option(ld.DEFAULT_MARGIN, "--margin", help="Regime cutoff margin"),
):
    """Run cycles and write (omega, p_e) loops plus per-cycle summaries."""
    with _failures():
        params = _params(T_h, T_c, gamma_h, gamma_c, omega_i, omega_f)
        t_r = derive(params).t_r
        durations = art.parse_durations(tau_h, t_r)
        cold = None if tau_c is None else art.parse_duration(tau_c, t_r)
        regime = _regime(params, margin)
        results = [run_cycle(CycleSpec(params, tau, cold), tol) for tau in durations]

    out = _out_dir(out_dir)
    labels = [f"cycle_tau_h_{tau / t_r:.6g}tr" for tau in durations]
    manifest = art.RunManifest(
        subcommand="cycle",
        params=params.to_dict(),
        integrator={"tol": tol},
        optimizer={"tau_h": durations, "tau_c": cold, "margin": margin},
        outputs=[str(out / f"{label}{suffix}") for label in labels
                 for suffix in ("_trajectory.csv", "_summary.json")],
    )

    table = Table(show_header=True)
    for column in ("tau_h/t_r", "W", "P", "eta", "S_ir_h", "S_ir_c", "status"):
        table.add_column(column, justify="right")
    paths = []
    for label, result in zip(labels, results):
        paths.append(art.write_csv(out / f"{label}_trajectory.csv", result.loop_frame(), manifest))
        paths.append(art.write_json(
            out / f"{label}_summary.json", {**result.to_dict(), "regime_check": regime}, manifest
        ))
        table.add_row(
            f"{result.spec.tau_h / t_r:.4g}",
            f"{result.W:.6g}",
            f"{result.P:.6g}",
            f"{result.eta:.6g}",
            f"{result.S_ir_h:.4g}",
            f"{result.S_ir_c:.4g}",
            result.status.value,
        )
    paths.append(art.write_manifest(out, manifest))
    console.print(table)
    _print_outputs(paths)


@app.command("power-sweep")
def cmd_power_sweep(
    T_h: float = typer.Option(..., "--T-h", help="Hot bath temperature"),
    T_c: float = typer.Option(..., "--T-c", help="Cold bath temperature"),
    gamma_h: float = typer.Option(1.0, "--gamma-h", help="Hot bath coupling"),
    gamma_c: str = typer.Option("inf", "--gamma-c", help="Cold bath coupling (must be 'inf')"),
    omega_i: float = typer.Option(..., "--omega-i", help="Initial hot-stroke spacing"),
    omega_f: float = typer.Option(..., "--omega-f", help="Final hot-stroke spacing"),
    tau_lo: str = typer.Option("0.05tr", "--tau-lo", help="Shortest hot-stroke duration"),
    tau_hi: str = typer.Option("400tr", "--tau-hi", help="Longest hot-stroke duration"),
    points: int = typer.Option(DEFAULT_SCAN_POINTS, "--points", "-n", help="Grid points"),
    out_dir: str = typer.Option(None, "--out-dir", "-o", help="Output directory"),
    tol: float = typer.Option(DEFAULT_TOL, "--tol", help="Integrator relative tolerance"),
    margin: float = typer.Option(ld.DEFAULT_MARGIN, "--margin", help="Regime cutoff margin"),
    opt_tol: float = typer.Option(DEFAULT_OPT_TOL, "--opt-tol", help="Golden-section tolerance"),
):
    """Normalized power P/P_max over a log grid of hot-stroke durations."""
    with _failures():
        params = _params(T_h, T_c, gamma_h, gamma_c, omega_i, omega_f)
        if not params.ideal_cold_bath:
            raise ParameterError("power-sweep runs the ideal-cold-bath engine (--gamma-c inf)")
        t_r = derive(params).t_r
        grid = _grid(tau_lo, tau_hi, points, t_r)
        regime = _regime(params, margin)
        optimum = maximize_power_1d(params, grid, opt_tol, tol)

    cycles = optimum.scan
    frame = pd.DataFrame({
        "tau_h": [c.spec.tau_h for c in cycles],
        "tau_h_over_tr": [c.spec.tau_h / t_r for c in cycles],
        "P": [c.P for c in cycles],
        "P_norm": [c.P / optimum.P_max for c in cycles],
        "eta": [c.eta for c in cycles],
    })
    out = _out_dir(out_dir)
    manifest = art.RunManifest(
        subcommand="power-sweep",
        params=params.to_dict(),
        integrator={"tol": tol},
        optimizer={
            "lo": grid.lo, "hi": grid.hi, "n": grid.n, "opt_tol": opt_tol, "margin": margin,
        },
        outputs=[str(out / "power_sweep.csv"), str(out / "power_sweep_summary.json")],
    )
    summary = {
        "tau_h_star": optimum.tau_h_star,
        "tau_h_star_over_tr": optimum.tau_h_star_over_tr,
        "P_max": optimum.P_max,
        "eta_MP": optimum.eta_MP,
        "t_r": t_r,
        "regime_check": regime,
    }
    paths = [
        art.write_csv(out / "power_sweep.csv", frame, manifest),
        art.write_json(out / "power_sweep_summary.json", summary, manifest),
        art.write_manifest(out, manifest),
    ]
    console.print(
        f"[cyan]P_max[/cyan] = {optimum.P_max:.6g} at tau_h = "
        f"{optimum.tau_h_star_over_tr:.4g} t_r, eta_MP = {optimum.eta_MP:.6g}"
    )
    _print_outputs(paths)


@app.command("emp-curve")
def cmd_emp_curve(
    T_h: float = typer.Option(..., "--T-h", help="Hot bath temperature"),
    gamma_h: float = typer.Option(1.0, "--gamma-h", help="Hot bath coupling"),
    omega_i: float = typer.Option(..., "--omega-i", help="Initial hot-stroke spacing"),
    omega_f: float = typer.Option(..., "--omega-f", help="Final hot-stroke spacing"),
    eta_min: float = typer.Option(0.02, "--eta-min", help="Smallest Carnot efficiency"),
    eta_max: float = typer.Option(0.6, "--eta-max", help="Largest Carnot efficiency"),
    count: int = typer.Option(30, "--count", "-n", help="Number of Carnot efficiencies"),
    tau_lo: str = typer.Option("0.05tr", "--tau-lo", help="Shortest hot-stroke duration"),
    tau_hi: str = typer.Option("400tr", "--tau-hi", help="Longest hot-stroke duration"),
    points: int = typer.Option(DEFAULT_SCAN_POINTS, "--points", help="Grid points per scan"),
    margin: float = typer.Option(ld.DEFAULT_MARGIN, "--margin", help="Regime cutoff margin"),
    workers: int = typer.Option(DEFAULT_WORKERS, "--workers", "-w", help="Worker processes"),
    out_dir: str = typer.Option(None, "--out-dir", "-o", help="Output directory"),
    tol: float = typer.Option(DEFAULT_TOL, "--tol", help="Integrator relative tolerance"),
    opt_tol: float = typer.Option(DEFAULT_OPT_TOL, "--opt-tol", help="Golden-section tolerance"),
):
    """EMP and optimal hot-stroke time as functions of the Carnot efficiency."""
    with _failures():
        if not 0 < eta_min <= eta_max < 1:
            raise ParameterError(
                f"Need 0 < eta-min <= eta-max < 1, got eta-min={eta_min}, eta-max={eta_max}"
            )
        if count < 1:
            raise ParameterError(f"--count must be at least 1, got {count}")
        base = _params(T_h, T_h * (1.0 - eta_min), gamma_h, "inf", omega_i, omega_f)
        t_r = derive(base).t_r
        grid = _grid(tau_lo, tau_hi, points, t_r)
        values = np.linspace(eta_min, eta_max, count)
        sweep = emp_sweep(base, values, grid, margin, opt_tol, workers, tol)

    frame = pd.DataFrame([point.to_dict() for point in sweep])[EMP_COLUMNS]
    out = _out_dir(out_dir)
    manifest = art.RunManifest(
        subcommand="emp-curve",
        params=base.to_dict(),
        integrator={"tol": tol},
        optimizer={
            "eta_C": values.tolist(), "lo": grid.lo, "hi": grid.hi, "n": grid.n,
            "opt_tol": opt_tol, "margin": margin,
        },
        outputs=[str(out / "emp_curve.csv")],
    )
    paths = [
        art.write_csv(out / "emp_curve.csv", frame, manifest),
        art.write_manifest(out, manifest),
    ]
    skipped = sum(not point.engine for point in sweep)
    exceeded = sum(point.exceeded_upper_bound for point in sweep)
    console.print(
        f"[cyan]{len(sweep)}[/cyan] points, {exceeded} above eta_+, {skipped} without engine regime"
    )
    _print_outputs(paths)


@app.command("scaling")
def cmd_scaling(
    T_h: float = typer.Option(..., "--T-h", help="Hot bath temperature"),
    T_c: float = typer.Option(..., "--T-c", help="Cold bath temperature"),
    gamma_h: float = typer.Option(1.0, "--gamma-h", help="Hot bath coupling"),
    gamma_c: str = typer.Option("inf", "--gamma-c", help="Cold bath coupling, a number or 'inf'"),
    omega_i: float = typer.Option(..., "--omega-i", help="Initial hot-stroke spacing"),
    omega_f: float = typer.Option(..., "--omega-f", help="Final hot-stroke spacing"),
    tau_lo: str = typer.Option("0.1tr", "--tau-lo", help="Shortest stroke duration"),
    tau_hi: str = typer.Option("400tr", "--tau-hi", help="Longest stroke duration"),
    points: int = typer.Option(40, "--points", "-n", help="Grid points"),
    out_dir: str = typer.Option(None, "--out-dir", "-o", help="Output directory"),
    tol: float = typer.Option(DEFAULT_TOL, "--tol", help="Integrator relative tolerance"),
    margin: float = typer.Option(ld.DEFAULT_MARGIN, "--margin", help="Regime cutoff margin"),
):
    """Irreversible entropy of the hot stroke against its duration."""
    with _failures():
        params = _params(T_h, T_c, gamma_h, gamma_c, omega_i, omega_f)
        derived = derive(params)
        t_r = derived.t_r
        grid = _grid(tau_lo, tau_hi, points, t_r)
        regime = _regime(params, margin)
        scan = ld.entropy_scaling(params, grid.points(), tol)

    sigma_fit = ld.plateau_fit(scan)
    sigma_analytic = ld.high_T_dissipation(
        ld.high_T_entropy_change(omega_i, omega_f, T_h), derived.gamma_tilde_h
    )
    sigma_asymptotic = ld.asymptotic_dissipation(
        Ramp(omega_i, omega_f, 1.0), BathContact(T_h, gamma_h)
    )
    out = _out_dir(out_dir)
    manifest = art.RunManifest(
        subcommand="scaling",
        params=params.to_dict(),
        integrator={"tol": tol},
        optimizer={"lo": grid.lo, "hi": grid.hi, "n": grid.n, "margin": margin},
        outputs=[str(out / "scaling.csv"), str(out / "scaling_summary.json")],
    )
    summary = {
        "sigma_fit": sigma_fit,
        "sigma_analytic": sigma_analytic,
        "ratio": sigma_fit / sigma_analytic,
        "sigma_asymptotic": sigma_asymptotic,
        "ratio_asymptotic": sigma_fit / sigma_asymptotic,
        "regime_check": regime,
    }
    paths = [
        art.write_csv(out / "scaling.csv", scan, manifest),
        art.write_json(out / "scaling_summary.json", summary, manifest),
        art.write_manifest(out, manifest),
    ]
    console.print(
        f"[cyan]Sigma_fit[/cyan] = {sigma_fit:.6g}, high-T = {sigma_analytic:.6g}, "
        f"long-time = {sigma_asymptotic:.6g}"
    )
    _print_outputs(paths)


@app.command("lowdiss")
def cmd_lowdiss(
    T_h: float = typer.Option(..., "--T-h", help="Hot bath temperature"),
    T_c: float = typer.Option(..., "--T-c", help="Cold bath temperature"),
    gamma_h: float = typer.Option(1.0, "--gamma-h", help="Hot bath coupling"),
    gamma_c: str = typer.Option("inf", "--gamma-c", help="Cold bath coupling, a number or 'inf'"),
    omega_i: float = typer.Option(..., "--omega-i", help="Initial hot-stroke spacing"),
    omega_f: float = typer.Option(..., "--omega-f", help="Final hot-stroke spacing"),
    margin: float = typer.Option(ld.DEFAULT_MARGIN, "--margin", help="Regime cutoff margin"),
    out_dir: str = typer.Option(None, "--out-dir", "-o", help="Output directory"),
    tol: float = typer.Option(DEFAULT_TOL, "--tol", help="Integrator relative tolerance"),
):
    """Analytic low-dissipation report: coefficients, optimal times, EMP, regime."""
    with _failures():
        params = _params(T_h, T_c, gamma_h, gamma_c, omega_i, omega_f)
        inputs = ld.high_T_coefficients(params)
        tau_h_star, tau_c_star = ld.ld_optimal_times(inputs)
        tilde_h, tilde_c = ld.ld_dimensionless_times(params)
        composed_h, composed_c = ld.composed_dimensionless_times(params)
        regime = _regime(params, margin)
        prediction = ld.ld_emp(inputs)
        asymptotic = ld.asymptotic_coefficients(params)
        asymptotic_h, asymptotic_c = ld.ld_optimal_times(asymptotic)

    report = {
        "high_T_coefficients": inputs.to_dict(),
        "ld_optimal_times": {"tau_h_star": tau_h_star, "tau_c_star": tau_c_star},
        "ld_dimensionless_times": {"tau_tilde_h_star": tilde_h, "tau_tilde_c_star": tilde_c},
        "composed_dimensionless_times": {
            "tau_tilde_h_star": composed_h,
            "tau_tilde_c_star": composed_c,
        },
        "ld_emp": prediction.to_dict(),
        "asymptotic_coefficients": asymptotic.to_dict(),
        "asymptotic_optimal_times": {"tau_h_star": asymptotic_h, "tau_c_star": asymptotic_c},
        "regime_check": regime,
    }
    out = _out_dir(out_dir)
    manifest = art.RunManifest(
        subcommand="lowdiss",
        params=params.to_dict(),
        integrator={"tol": tol},
        optimizer={"margin": margin},
        outputs=[str(out / "lowdiss.json")],
    )
    paths = [
        art.write_json(out / "lowdiss.json", report, manifest),
        art.write_manifest(out, manifest),
    ]
    console.print(
        f"[cyan]tau_tilde_h*[/cyan] = {tilde_h:.6g}, eta* = {prediction.eta_star:.6g}, "
        f"threshold = {regime['threshold']:.6g}, in regime: {regime['in_regime']}"
    )
    _print_outputs(paths)


if __name__ == "__main__":
    app()
