"""Command-line front end.

Subcommands: mesh gen | mesh info | simulate | analytic | calibrate |
compare.  Exit codes are a stable scripting contract: 0 success,
1 validation error (bad arguments, malformed files), 2 numerical
failure (divergence, element inversion), 3 calibration non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import CalibrationProblem, analytic_curve, calibrate
from .config import load_run_config
from .errors import (
    ConvergenceError,
    DivergenceError,
    InvalidArgumentError,
    InvalidStateError,
    MeshParseError,
)
from .kernels import available_backends
from .mesh import generate_box_mesh, mesh_quality, parse_mesh, serialize_mesh
from .ogden import OgdenParams
from .scenario import (
    ExperimentSpec,
    read_curve_csv,
    resample_overlap_metrics,
    run_experiment,
    write_curve_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_NONCONVERGENCE = 3

_UNIT_SCALE = {"m": 1.0, "mm": 1e-3}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with the validation exit code."""

    def error(self, message):
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(prog="tissuefit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tissuefit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_mesh = sub.add_parser("mesh", help="generate or inspect mesh files")
    mesh_sub = p_mesh.add_subparsers(dest="mesh_command", required=True)
    p_gen = mesh_sub.add_parser("gen", help="write a structured box mesh")
    p_gen.add_argument("--lengths", nargs=3, type=float, required=True,
                       metavar=("LX", "LY", "LZ"))
    p_gen.add_argument("--div", nargs=3, type=int, required=True,
                       metavar=("NX", "NY", "NZ"))
    p_gen.add_argument("--units", choices=("m", "mm"), default="m")
    p_gen.add_argument("-o", "--output", required=True)
    p_info = mesh_sub.add_parser("info", help="print mesh counts and quality")
    p_info.add_argument("path")

    p_sim = sub.add_parser("simulate", help="run a virtual uniaxial test")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("-o", "--output", required=True, help="curve CSV path")
    p_sim.add_argument("--result-csv", help="full time-series CSV path")
    p_sim.add_argument("--summary", help="JSON run summary path")
    p_sim.add_argument("--backend", choices=available_backends())

    p_an = sub.add_parser("analytic", help="emit the closed-form uniaxial curve")
    p_an.add_argument("--mu", type=float, required=True)
    p_an.add_argument("--alpha", type=float, required=True)
    p_an.add_argument("--lengths", nargs=3, type=float, required=True,
                      metavar=("LX", "LY", "LZ"))
    p_an.add_argument("--units", choices=("m", "mm"), default="m")
    p_an.add_argument("--strain-min", type=float, default=-0.3)
    p_an.add_argument("--strain-max", type=float, default=0.2)
    p_an.add_argument("--points", type=int, default=101)
    p_an.add_argument("-o", "--output", required=True)

    p_cal = sub.add_parser("calibrate", help="fit (mu, alpha) to measured curves")
    p_cal.add_argument("--config", required=True)
    p_cal.add_argument("--tension", help="tension curve CSV")
    p_cal.add_argument("--compression", help="compression curve CSV")
    p_cal.add_argument("--forward", choices=("analytic", "fe"), default="analytic")
    p_cal.add_argument("-o", "--output", help="JSON report path")

    p_cmp = sub.add_parser("compare", help="difference metrics between two curves")
    p_cmp.add_argument("curve_a")
    p_cmp.add_argument("curve_b")
    p_cmp.add_argument("--min-disp", type=float, help="window lower bound, m")
    p_cmp.add_argument("--max-disp", type=float, help="window upper bound, m")
    return parser


def cmd_mesh(args) -> int:
    if args.mesh_command == "gen":
        scale = _UNIT_SCALE[args.units]
        mesh = generate_box_mesh([v * scale for v in args.lengths], args.div)
        Path(args.output).write_text(serialize_mesh(mesh))
        print(f"wrote {args.output}: {mesh.node_count} nodes, "
              f"{mesh.element_count} elements")
        return EXIT_OK
    mesh = parse_mesh(Path(args.path).read_text())
    report = mesh_quality(mesh)
    print(f"nodes:              {report.node_count}")
    print(f"elements:           {report.element_count}")
    print(f"mean Jacobian:      {report.mesh_mean_jacobian:.4f}")
    print(f"min corner Jacobian:{report.min_corner_jacobian: .4f}")
    print(f"inverted elements:  {len(report.inverted_elements)}")
    print(f"node sets:          {', '.join(mesh.node_sets) or '(none)'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_run_config(args.config)
    if cfg.experiment is None:
        raise InvalidArgumentError("config has no experiment section")
    if cfg.mesh is None:
        raise InvalidArgumentError("config has no mesh section")
    t0 = time.perf_counter()
    result = run_experiment(cfg.experiment, cfg.mesh, cfg.material, cfg.sim,
                            backend=args.backend)
    wall = time.perf_counter() - t0
    solver = result.solver_result

    metadata = {
        "kind": cfg.experiment.test_kind,
        "mu_Pa": cfg.material.mu,
        "alpha": cfg.material.alpha,
        "nu": cfg.material.nu,
        "loading_speed_m_per_s": cfg.experiment.loading_speed,
        "rate_scaling": cfg.sim.rate_scaling,
        "mass_scaling": cfg.sim.mass_scaling,
        "ke_ie_ratio": solver.max_ke_ie(),
        "quasistatic_pass": result.quasistatic.passed,
    }
    Path(args.output).write_text(write_curve_csv(result.curve, metadata))
    if args.result_csv:
        Path(args.result_csv).write_text(solver.to_csv())

    summary = {
        "material": {"mu": cfg.material.mu, "alpha": cfg.material.alpha,
                     "nu": cfg.material.nu, "K": cfg.material.K, "D": cfg.material.D},
        "sim": asdict(cfg.sim),
        "experiment": asdict(cfg.experiment),
        "mesh": {"nodes": cfg.mesh.node_count, "elements": cfg.mesh.element_count},
        "dt_s": solver.dt,
        "steps": solver.n_steps,
        "backend": solver.backend,
        "ke_ie_ratio": solver.max_ke_ie(),
        "hourglass_ie_ratio": solver.max_hg_ie(),
        "energy_balance_error": solver.energy_balance_error(),
        "quasistatic_pass": result.quasistatic.passed,
        "final_force_N": float(result.curve.force[-1]),
        "wall_time_s": wall,
    }
    if args.summary:
        Path(args.summary).write_text(json.dumps(summary, indent=2) + "\n")
    print(f"wrote {args.output} ({len(result.curve)} samples, "
          f"{solver.n_steps} steps, dt {solver.dt:.3e} s, backend {solver.backend})")
    print(f"KE/IE {summary['ke_ie_ratio']:.4f}  HG/IE "
          f"{summary['hourglass_ie_ratio']:.4f}  quasistatic "
          f"{'PASS' if result.quasistatic.passed else 'FLAGGED'}")
    return EXIT_OK


def cmd_analytic(args) -> int:
    if args.points < 1:
        raise InvalidArgumentError("--points must be >= 1")
    scale = _UNIT_SCALE[args.units]
    lx, ly, lz = (v * scale for v in args.lengths)
    OgdenParams(args.mu, args.alpha)  # validates mu > 0, alpha != 0
    strains = np.linspace(args.strain_min, args.strain_max, args.points)
    curve = analytic_curve(args.mu, args.alpha, lx * ly, lz, strains)
    metadata = {"mu_Pa": args.mu, "alpha": args.alpha, "model": "analytic-uniaxial",
                "cross_section_m2": lx * ly, "height_m": lz}
    Path(args.output).write_text(write_curve_csv(curve, metadata))
    print(f"wrote {args.output} ({len(curve)} samples)")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = load_run_config(args.config)
    if cfg.mesh is None:
        raise InvalidArgumentError("calibration config needs a mesh section")
    curves = []
    for kind, path in (("tension", args.tension), ("compression", args.compression)):
        if not path:
            continue
        curve = read_curve_csv(Path(path).read_text())
        base = cfg.experiment
        height = base.sample_height if base else float(
            cfg.mesh.nodes[:, 2].max() - cfg.mesh.nodes[:, 2].min()
        )
        spec = ExperimentSpec(
            test_kind=kind,
            target_displacement=float(curve.displacement[-1]),
            sample_height=height,
            loading_speed=base.loading_speed if base else 3e-4,
            base_set=base.base_set if base else "bottom",
            load_set=base.load_set if base else "top",
            free_lateral=base.free_lateral if base else False,
        )
        curves.append((curve, spec))
    if not curves:
        raise InvalidArgumentError("provide at least one of --tension/--compression")

    cal = cfg.calibration
    xs = cfg.mesh.nodes
    area = float((xs[:, 0].max() - xs[:, 0].min()) * (xs[:, 1].max() - xs[:, 1].min()))
    problem = CalibrationProblem(
        curves=tuple(curves),
        strain_window=tuple(cal.get("strain_window", (-0.3, 0.2))),
        forward_model=args.forward,
        initial_guess=tuple(cal.get("initial_guess", (500.0, -2.0))),
        nu=cfg.material.nu,
        cross_section_area=area,
        mesh=cfg.mesh,
        sim_config=cfg.sim,
        restarts=int(cal.get("restarts", 3)),
        grid_points=int(cal.get("grid_points", 25)),
        max_iterations=int(cal.get("max_iterations", 400)),
    )
    t0 = time.perf_counter()
    result = calibrate(problem)
    wall = time.perf_counter() - t0

    report = {
        "mu_Pa": result.params.mu,
        "alpha": result.params.alpha,
        "nu": result.params.nu,
        "objective_rms_N": result.objective_value,
        "iterations": result.iterations,
        "converged": result.converged,
        "per_curve_rms_N": list(result.per_curve_rms),
        "restarts": [asdict(r) for r in result.restarts],
        "mu_spread": result.mu_spread,
        "alpha_spread": result.alpha_spread,
        "ill_conditioned": result.ill_conditioned,
        "penalized_evaluations": result.penalties_hit,
        "forward_model": args.forward,
        "wall_time_s": wall,
    }
    if args.output:
        Path(args.output).write_text(json.dumps(report, indent=2) + "\n")
    print(f"mu    = {result.params.mu:.6g} Pa")
    print(f"alpha = {result.params.alpha:.6g}")
    print(f"RMS   = {result.objective_value:.6g} N over {result.iterations} iterations")
    if result.ill_conditioned:
        print("warning: restarts disagree (ill-conditioned fit); "
              f"mu spread {result.mu_spread:.1%}, alpha spread {result.alpha_spread:.3g}")
    return EXIT_OK


def cmd_compare(args) -> int:
    a = read_curve_csv(Path(args.curve_a).read_text())
    b = read_curve_csv(Path(args.curve_b).read_text())
    metrics = resample_overlap_metrics(a, b, args.min_disp, args.max_disp)
    print(f"max |A-B|:    {metrics['max_abs_N']:.6g} N")
    print(f"max |A-B|/|A|: {metrics['max_rel']:.4%}")
    print(f"RMS:          {metrics['rms_N']:.6g} N")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "mesh": cmd_mesh,
        "simulate": cmd_simulate,
        "analytic": cmd_analytic,
        "calibrate": cmd_calibrate,
        "compare": cmd_compare,
    }
    try:
        return handlers[args.command](args)
    except (InvalidArgumentError, MeshParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DivergenceError, InvalidStateError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
