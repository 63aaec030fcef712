"""
Command-line front end for the ST qubit simulator.

Each subcommand loads a JSON run configuration, runs one pipeline and writes
CSV/JSON tables to the output directory. Exit codes: 0 success,
2 configuration error, 3 numerical non-convergence.
"""

import argparse
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from stqubit import __version__
from stqubit.config import LogConfig, get_settings, setup_logging
from stqubit.metrics import track_run, write_metrics
from stqubit.schemas import (
    E,
    F,
    DeviceConfig,
    DeviceParams,
    DriveConfig,
    EigenSystem,
    RotatingFrameModel,
    RunConfig,
    SpectralModel,
)
from stqubit.services import (
    get_cavity_service,
    get_dynamics_service,
    get_filter_service,
    get_hamiltonian_service,
    get_noise_service,
    get_pulse_service,
)
from stqubit.services.filter_service import FAMILIES
from stqubit.utils.error_handlers import (
    EXIT_CONFIG_ERROR,
    EXIT_FAILURE,
    EXIT_OK,
    ConvergenceError,
    SimulationException,
    ValidationError,
    handle_cli_error,
)
from stqubit.utils.io import (
    build_metadata,
    config_hash,
    load_run_config,
    write_columns,
    write_json,
)
from stqubit.utils.units import ghz_to_rad_per_ns, rad_per_ns_to_ghz

logger = logging.getLogger(__name__)


@dataclass
class RunContext:
    """Everything a subcommand needs besides its own flags."""

    command: str
    config: RunConfig
    out_dir: Path
    threads: int

    @property
    def metadata(self) -> Dict[str, object]:
        return build_metadata(self.command, self.config)


# ---------------------------------------------------------------- shared setup


def operating_point(device: DeviceConfig) -> Tuple[DeviceParams, EigenSystem]:
    """Device parameters at the configured detuning, or at the sweet spot."""
    hamiltonian = get_hamiltonian_service()
    params = device.to_params()
    if device.epsilon_ghz is None:
        params = params.with_epsilon(hamiltonian.find_tss(params))
    return params, hamiltonian.eigensystem(params, strict=True)


def rabi_frequency(config: RunConfig) -> float:
    """Omega0 = |d_ge| eps_ac at the operating point (rad/ns)."""
    _, eigen = operating_point(config.device)
    return get_hamiltonian_service().rabi_frequency(
        eigen, ghz_to_rad_per_ns(config.device.eps_ac_ghz)
    )


def spectral_model(config: RunConfig, omega0: float) -> SpectralModel:
    """1/f model with t0 = 1/Omega0; amplitude from A*t0 or calibrated from sigma."""
    noise_cfg = config.noise
    t0 = 1.0 / omega0
    model = SpectralModel(
        amplitude_a=0.0,
        alpha=noise_cfg.alpha,
        t0=t0,
        omega_ir=ghz_to_rad_per_ns(noise_cfg.omega_ir_ghz),
        omega_uv=ghz_to_rad_per_ns(noise_cfg.omega_uv_ghz),
        normalization=noise_cfg.normalization,
    )
    if noise_cfg.amplitude_t0 is not None:
        amplitude = noise_cfg.amplitude_t0 / t0
    else:
        amplitude = get_noise_service().calibrate_amplitude(noise_cfg.sigma, model)
    return model.model_copy(update={"amplitude_a": amplitude})


# ---------------------------------------------------------------- commands


def cmd_tss(args: argparse.Namespace, ctx: RunContext) -> Dict[str, object]:
    """Sweet spot, splitting and matrix elements for the device."""
    hamiltonian = get_hamiltonian_service()
    params, eigen = operating_point(ctx.config.device)
    eps_ac = ghz_to_rad_per_ns(ctx.config.device.eps_ac_ghz)
    report = {
        "epsilon_ss_ghz": rad_per_ns_to_ghz(params.epsilon),
        "omega_q_ghz": rad_per_ns_to_ghz(eigen.omega_q),
        "omega_ef_ghz": rad_per_ns_to_ghz(eigen.omega_ef),
        "leakage_detuning_ghz": rad_per_ns_to_ghz(hamiltonian.leakage_detuning(eigen)),
        "d_ge": abs(eigen.d_ge),
        "d_ef": float(abs(eigen.dipole[E, F])),
        "slope": hamiltonian.qubit_energy_derivative(params),
        "rabi_ghz": rad_per_ns_to_ghz(hamiltonian.rabi_frequency(eigen, eps_ac)),
    }
    write_json(ctx.out_dir / "tss.json", report, ctx.metadata)
    print(f"✓ Sweet spot at eps/2pi = {report['epsilon_ss_ghz']:.5f} GHz")
    print(f"  omega_q/2pi = {report['omega_q_ghz']:.5f} GHz, |d_ge| = {report['d_ge']:.5f}")
    return report


def cmd_spectrum(args: argparse.Namespace, ctx: RunContext) -> Dict[str, object]:
    """Energy spectrum over a detuning range with a sweet-spot marker."""
    scan_cfg = ctx.config.spectrum
    params = ctx.config.device.to_params()
    grid_ghz = np.linspace(scan_cfg.eps_min_ghz, scan_cfg.eps_max_ghz, scan_cfg.points)
    if scan_cfg.eps_min_ghz == scan_cfg.eps_max_ghz:
        grid_ghz = grid_ghz[:1]

    scan = get_hamiltonian_service().spectrum_scan(params, ghz_to_rad_per_ns(grid_ghz))
    columns = {
        "epsilon_ghz": grid_ghz,
        "e_g_ghz": rad_per_ns_to_ghz(scan["e_g"]),
        "e_e_ghz": rad_per_ns_to_ghz(scan["e_e"]),
        "e_f_ghz": rad_per_ns_to_ghz(scan["e_f"]),
        "omega_q_ghz": rad_per_ns_to_ghz(scan["omega_q"]),
        "slope": scan["slope"],
        "is_tss": scan["is_tss"],
    }
    path = write_columns(ctx.out_dir / "spectrum.csv", columns, ctx.metadata)
    print(f"✓ Spectrum with {len(grid_ghz)} points written to {path}")
    return {"rows": len(grid_ghz), "path": str(path)}


def _filter_curves(ctx: RunContext, omega0: float, gates: List[str]) -> List[Path]:
    filters = get_filter_service()
    catalog = get_pulse_service().clifford_catalog(omega0)
    grid = filters.export_grid(omega0, ctx.config.filter.export_grid_points)
    paths = []
    for gate in gates:
        curves = filters.filter_curves(
            {family.value: catalog[gate][family] for family in FAMILIES}, grid
        )
        columns = {"omega_over_omega0": grid / omega0}
        # F_z/w^2 in Omega0 units
        columns.update({name: values * omega0**2 for name, values in curves.items()})
        paths.append(write_columns(ctx.out_dir / f"filter_{gate}.csv", columns, ctx.metadata))
    return paths


def cmd_filter_fn(args: argparse.Namespace, ctx: RunContext) -> Dict[str, object]:
    """F_z(w)/w^2 of the Clifford catalog on a log grid."""
    omega0 = rabi_frequency(ctx.config)
    catalog_gates = list(get_pulse_service().clifford_catalog(omega0))
    gates = [args.gate] if args.gate else catalog_gates
    unknown = [g for g in gates if g not in catalog_gates]
    if unknown:
        raise ValidationError(f"Unknown gate {unknown[0]}; choose from {catalog_gates}", field="gate")
    paths = _filter_curves(ctx, omega0, gates)
    print(f"✓ Wrote {len(paths)} filter-function table(s) to {ctx.out_dir}")
    return {"paths": [str(p) for p in paths]}


def cmd_fig4(args: argparse.Namespace, ctx: RunContext) -> Dict[str, object]:
    """16 spectral fidelities plus filter tables; optional Monte-Carlo cross-check."""
    filter_cfg = ctx.config.filter
    omega0 = rabi_frequency(ctx.config)
    model = spectral_model(ctx.config, omega0)
    logger.info(f"Omega0 = {omega0:.6f} rad/ns, A*t0 = {model.amplitude_a * model.t0:.3e}")

    table = get_filter_service().fig4_table(
        omega0,
        model,
        convention=filter_cfg.convention,
        points_per_decade=filter_cfg.points_per_decade,
        tolerance=filter_cfg.tolerance,
        max_refinements=filter_cfg.max_refinements,
        threads=ctx.threads,
    )
    report: Dict[str, object] = {
        "omega0_rad_per_ns": omega0,
        "amplitude_t0": model.amplitude_a * model.t0,
        "convention": filter_cfg.convention.value,
        "fidelities": table,
    }

    if args.monte_carlo:
        dynamics = get_dynamics_service()
        catalog = get_pulse_service().clifford_catalog(omega0)
        n = args.realizations or ctx.config.dynamics.n_realizations
        mc: Dict[str, Dict[str, Dict[str, float]]] = {}
        for gate, families in catalog.items():
            mc[gate] = {}
            for family in FAMILIES:
                run = dynamics.monte_carlo_fidelity(
                    families[family],
                    model,
                    n,
                    ctx.config.seed,
                    threads=ctx.threads,
                    convention=filter_cfg.convention,
                )
                mc[gate][family.value] = {"mean": run["mean"], "stderr": run["stderr"], "n": n}
        report["monte_carlo"] = mc

    write_json(ctx.out_dir / "fig4.json", report, ctx.metadata)
    _filter_curves(ctx, omega0, list(table))

    print("📊 Gate fidelities (naive / corpse / geometric / non_cyclic)")
    for gate, row in table.items():
        values = " ".join(f"{row[f.value]:.4f}" for f in FAMILIES)
        print(f"  {gate:>10s}: {values}")
    return report


def cmd_leakage(args: argparse.Namespace, ctx: RunContext) -> Dict[str, object]:
    """Population trace of a pi pulse in the full three-level model."""
    dyn_cfg = ctx.config.dynamics
    _, eigen = operating_point(ctx.config.device)
    drive = DriveConfig(eps_ac=ghz_to_rad_per_ns(ctx.config.device.eps_ac_ghz), omega=eigen.omega_q)
    model = RotatingFrameModel(eigen=eigen, drive=drive, rwa=dyn_cfg.rwa)

    dynamics = get_dynamics_service()
    sequence = get_pulse_service().naive_sequence([("x", math.pi)], (1.0, 0.0, 0.0), math.pi)
    dt = dynamics.default_dt(model, dyn_cfg.steps_per_period)
    run = dynamics.leakage_run(model, sequence, dt, check_convergence=dyn_cfg.check_convergence)

    write_columns(
        ctx.out_dir / "leakage.csv",
        {"t_ns": run["t"], "P0": run["p0"], "P1": run["p1"], "Pf": run["pf"]},
        ctx.metadata,
    )
    summary = {
        "max_pf": run["max_pf"],
        "final_p0": run["final_p0"],
        "converged": run["converged"],
        "convergence_change": run["convergence_change"],
        "dt_ns": dt,
    }
    write_json(ctx.out_dir / "leakage.json", summary, ctx.metadata)
    print(f"✓ max P_f = {run['max_pf']:.3e}, final P_0 = {run['final_p0']:.3e}")

    if dyn_cfg.check_convergence and not run["converged"]:
        raise ConvergenceError(
            "leakage populations", run["convergence_change"], dynamics.CONVERGENCE_TOLERANCE
        )
    return summary


def cmd_noise_gen(args: argparse.Namespace, ctx: RunContext) -> Dict[str, object]:
    """One 1/f trace and its Welch spectrum."""
    noise = get_noise_service()
    omega0 = rabi_frequency(ctx.config)
    model = spectral_model(ctx.config, omega0)
    dt = args.dt or math.pi / model.omega_uv
    trace = noise.generate_trace(model, dt, args.samples, ctx.config.seed)

    write_columns(
        ctx.out_dir / "noise.csv", {"t_ns": trace.times, "delta": trace.samples}, ctx.metadata
    )
    summary: Dict[str, object] = {
        "samples": len(trace.samples),
        "dt_ns": dt,
        "std": float(np.std(trace.samples)),
        "sigma_model": noise.sigma_from_amplitude(model),
    }
    if len(trace.samples) >= noise.MIN_PSD_SAMPLES:
        omega, psd = noise.psd_estimate(trace)
        write_columns(ctx.out_dir / "noise_psd.csv", {"omega": omega, "psd": psd}, ctx.metadata)
    print(f"✓ Noise trace: {summary['samples']} samples, std {summary['std']:.4e} rad/ns")
    return summary


def cmd_fig5(args: argparse.Namespace, ctx: RunContext) -> Dict[str, object]:
    """Entangler populations and fidelity sweeps for both operating points."""
    cav_cfg = ctx.config.cavity
    cavity = get_cavity_service()
    sigma_grid = args.sigma_grid if args.sigma_grid is not None else cav_cfg.sigma_over_g
    n = args.realizations or cav_cfg.n_realizations

    devices = {"db_gt_tau": ctx.config.device, "db_lt_tau": cav_cfg.compare_device}
    rows: Dict[str, List[np.ndarray]] = {k: [] for k in ("sigma_over_g", "mean_fidelity", "stderr", "n")}
    labels: List[str] = []
    report: Dict[str, object] = {}
    scale: Optional[float] = None

    for label, device in devices.items():
        _, eigen = operating_point(device)
        config = cav_cfg.to_cavity_config()
        if cav_cfg.quality_factor is not None:
            gamma_a = cavity.gamma_a_from_quality_factor(eigen.omega_q, cav_cfg.quality_factor)
            config = config.model_copy(update={"gamma_a": gamma_a})
        # Both curves share the primary device's Omega' as sigma unit
        if scale is None:
            scale = cavity.effective_coupling(config, eigen)
            report["coupling_scale_mhz"] = rad_per_ns_to_ghz(scale) * 1e3
            logger.info(f"sigma unit Omega'/2pi = {report['coupling_scale_mhz']:.3f} MHz")

        pops = cavity.populations(config, eigen, cav_cfg.population_points)
        write_columns(
            ctx.out_dir / f"fig5_populations_{label}.csv",
            {"t_ns": pops["t_ns"], "P_ge0": pops["p_ge0"], "P_eg0": pops["p_eg0"]},
            ctx.metadata,
        )
        sweep = cavity.fidelity_sweep(
            config,
            eigen,
            sigma_grid,
            n,
            ctx.config.seed,
            cav_cfg.metric,
            ctx.threads,
            coupling_scale=scale,
        )
        for key in rows:
            rows[key].append(sweep[key])
        labels.extend([label] * len(sigma_grid))
        report[label] = {
            "final_p_eg0": float(pops["p_eg0"][-1]),
            "mean_fidelity": sweep["mean_fidelity"],
        }
        print(f"✓ {label}: final P_eg0 = {pops['p_eg0'][-1]:.5f}")

    columns = {key: np.concatenate(values) for key, values in rows.items()}
    columns["device"] = np.asarray(labels)
    write_columns(ctx.out_dir / "fig5_sweep.csv", columns, ctx.metadata)
    return report


COMMANDS: Dict[str, Tuple[Callable[[argparse.Namespace, RunContext], Dict[str, object]], str]] = {
    "tss": (cmd_tss, "Locate the transverse sweet spot"),
    "spectrum": (cmd_spectrum, "Energy spectrum versus detuning"),
    "filter-fn": (cmd_filter_fn, "Filter functions of the Clifford catalog"),
    "fig4": (cmd_fig4, "Spectral gate fidelities (4 gates x 4 families)"),
    "leakage": (cmd_leakage, "Three-level pi-pulse leakage run"),
    "noise-gen": (cmd_noise_gen, "Generate a 1/f noise trace"),
    "fig5": (cmd_fig5, "Two-qubit entangler populations and noise sweep"),
}


# ---------------------------------------------------------------- entry point


def _sigma_grid(value: str) -> List[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Invalid sigma grid: {value}")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="Override the configured seed")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--threads", type=int, help="Worker threads (default STQUBIT_THREADS)")
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Log level (default STQUBIT_LOG_LEVEL)",
    )

    parser = argparse.ArgumentParser(
        prog="stqubit",
        description="Singlet-triplet qubit gates near the transverse sweet spot",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Sweet spot of the default device
  python scripts/simulate.py tss

  # Fidelity table with a Monte-Carlo cross-check
  python scripts/simulate.py fig4 --monte-carlo --realizations 500

  # Two-qubit sweep on a coarse grid
  python scripts/simulate.py fig5 --sigma-grid 0,0.1,0.2 --realizations 200
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    subs = {
        name: subparsers.add_parser(name, parents=[common], help=help_text)
        for name, (_, help_text) in COMMANDS.items()
    }
    subs["filter-fn"].add_argument("--gate", help="Single catalog gate (default all)")
    subs["fig4"].add_argument(
        "--monte-carlo", action="store_true", help="Also run time-domain Monte-Carlo fidelities"
    )
    subs["fig4"].add_argument("--realizations", type=int, help="Monte-Carlo realizations")
    subs["noise-gen"].add_argument("--samples", type=int, default=8192, help="Trace length")
    subs["noise-gen"].add_argument("--dt", type=float, help="Sampling step in ns")
    subs["fig5"].add_argument(
        "--sigma-grid", type=_sigma_grid, help="Comma-separated sigma/g' values"
    )
    subs["fig5"].add_argument("--realizations", type=int, help="Realizations per sigma")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand.

    Args:
        argv: Arguments (default sys.argv[1:])

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    settings = get_settings()
    setup_logging(args.log_level or settings.log_level, settings.log_file)

    handler, _ = COMMANDS[args.command]
    exit_code = EXIT_OK
    try:
        with track_run(args.command):
            config = load_run_config(args.config, {"seed": args.seed, "output_dir": args.out})
            LogConfig.set_run_context(config.seed, config_hash(config))
            ctx = RunContext(
                command=args.command,
                config=config,
                out_dir=Path(config.output_dir),
                threads=args.threads or settings.threads,
            )
            logger.info(f"Running {args.command} (stqubit {__version__})")
            handler(args, ctx)
    except SimulationException as e:
        exit_code = handle_cli_error(e)
    except KeyboardInterrupt:
        print("\n⚠️  Interrupted")
        exit_code = EXIT_FAILURE
    except ValueError as e:
        # pydantic model errors raised while building inputs
        logger.error(f"Invalid input: {e}")
        exit_code = EXIT_CONFIG_ERROR
    finally:
        LogConfig.clear_run_context()
        write_metrics(settings.metrics_file)

    return exit_code


if __name__ == "__main__":
    sys.exit(main())
