"""JSON run-configuration loading with defaults and unit conversion.

Schema (all sections optional unless noted; lengths in the file are in
`units`, converted to meters exactly once at load):

    {
      "units": "mm" | "m",                  # default "m"
      "material": {"mu": Pa, "alpha": -, "nu": -},     # required: mu, alpha
      "sim": {"density", "dt_safety", "hourglass_coefficient",
              "mass_scaling", "rate_scaling", "output_interval",
              "ke_ie_threshold"},
      "experiment": {"kind": "tension"|"compression", "loading_speed",
                     "target_displacement", "sample_height",
                     "base_set", "load_set", "tracked_set",
                     "free_lateral": bool},
      "mesh": {"path": "file.mesh"} or
              {"box": {"lengths": [a,b,c], "divisions": [i,j,k]}},
      "calibration": {"initial_guess": [mu0, alpha0], "restarts": int,
                      "strain_window": [lo, hi], "grid_points": int,
                      "max_iterations": int}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .dynamics import SimConfig
from .errors import InvalidArgumentError
from .mesh import HexMesh, generate_box_mesh, parse_mesh
from .ogden import OgdenParams
from .scenario import ExperimentSpec

__all__ = ["RunConfig", "load_run_config"]

_LENGTH_FACTOR = {"m": 1.0, "mm": 1e-3}


@dataclass(frozen=True)
class RunConfig:
    material: OgdenParams
    sim: SimConfig
    experiment: ExperimentSpec | None
    mesh: HexMesh | None
    calibration: dict
    raw: dict                       # parsed file content, for echo/summaries
    units: str


def _section(doc, name, allowed):
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise InvalidArgumentError(f"config section '{name}' must be an object")
    unknown = set(sec) - set(allowed)
    if unknown:
        raise InvalidArgumentError(
            f"config section '{name}' has unknown keys: {sorted(unknown)}"
        )
    return sec


def load_run_config(path) -> RunConfig:
    """Load, validate and SI-normalize a JSON run configuration."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read config '{path}': {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"config '{path}' is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidArgumentError("config root must be a JSON object")

    units = doc.get("units", "m")
    if units not in _LENGTH_FACTOR:
        raise InvalidArgumentError(f"units must be 'm' or 'mm', got '{units}'")
    scale = _LENGTH_FACTOR[units]

    mat = _section(doc, "material", ("mu", "alpha", "nu"))
    if "mu" not in mat or "alpha" not in mat:
        raise InvalidArgumentError("config material section needs 'mu' and 'alpha'")
    material = OgdenParams(
        mu=float(mat["mu"]), alpha=float(mat["alpha"]), nu=float(mat.get("nu", 0.49))
    )

    sim_keys = (
        "density", "dt_safety", "hourglass_coefficient", "mass_scaling",
        "rate_scaling", "output_interval", "ke_ie_threshold",
    )
    sim_sec = _section(doc, "sim", sim_keys)
    sim = SimConfig(**{k: float(v) for k, v in sim_sec.items()})

    mesh = None
    mesh_sec = _section(doc, "mesh", ("path", "box"))
    if "path" in mesh_sec and "box" in mesh_sec:
        raise InvalidArgumentError("mesh section must give either 'path' or 'box'")
    if "path" in mesh_sec:
        mesh_path = Path(mesh_sec["path"])
        if not mesh_path.is_absolute():
            mesh_path = path.parent / mesh_path
        if not mesh_path.exists():
            raise InvalidArgumentError(f"mesh file '{mesh_path}' does not exist")
        mesh = parse_mesh(mesh_path.read_text())
    elif "box" in mesh_sec:
        box = mesh_sec["box"]
        if "lengths" not in box or "divisions" not in box:
            raise InvalidArgumentError("mesh box needs 'lengths' and 'divisions'")
        mesh = generate_box_mesh(
            [float(v) * scale for v in box["lengths"]],
            [int(v) for v in box["divisions"]],
        )

    experiment = None
    exp_keys = (
        "kind", "loading_speed", "target_displacement", "sample_height",
        "base_set", "load_set", "tracked_set", "free_lateral",
    )
    exp = _section(doc, "experiment", exp_keys)
    if exp:
        if "kind" not in exp or "target_displacement" not in exp:
            raise InvalidArgumentError(
                "experiment section needs 'kind' and 'target_displacement'"
            )
        height = exp.get("sample_height")
        if height is None:
            if mesh is None:
                raise InvalidArgumentError(
                    "experiment needs 'sample_height' when no mesh is configured"
                )
            height = (mesh.nodes[:, 2].max() - mesh.nodes[:, 2].min()) / scale
        experiment = ExperimentSpec(
            test_kind=str(exp["kind"]),
            loading_speed=float(exp.get("loading_speed", 3e-4 / scale)) * scale,
            target_displacement=float(exp["target_displacement"]) * scale,
            sample_height=float(height) * scale,
            base_set=str(exp.get("base_set", "bottom")),
            load_set=str(exp.get("load_set", "top")),
            tracked_set=str(exp.get("tracked_set", "")),
            free_lateral=bool(exp.get("free_lateral", False)),
        )

    calibration = _section(
        doc, "calibration",
        ("initial_guess", "restarts", "strain_window", "grid_points", "max_iterations"),
    )
    return RunConfig(
        material=material, sim=sim, experiment=experiment, mesh=mesh,
        calibration=dict(calibration), raw=doc, units=units,
    )
