"""tissuefit: virtual uniaxial testing of soft-tissue samples.

Explicit-dynamics hexahedral finite elements with a first-order Ogden
hyperelastic law, plus inverse calibration of the material constants
(mu, alpha) against measured force-displacement curves.
"""

__version__ = "0.1.0"

from .calibration import (
    CalibrationProblem,
    CalibrationResult,
    analytic_curve,
    calibrate,
    objective,
    resample_curve,
)
from .dynamics import (
    BoundaryCondition,
    SimConfig,
    SolverResult,
    reaction_force,
    run_simulation,
    smooth_step,
    stable_time_step,
)
from .kernels import BACKEND_NAME, available_backends
from .mesh import (
    HexMesh,
    QualityReport,
    element_scaled_jacobian,
    generate_box_mesh,
    mesh_quality,
    parse_mesh,
    serialize_mesh,
)
from .ogden import (
    OgdenParams,
    StressResult,
    cauchy_stress,
    derive_volumetric_constants,
    strain_energy,
    uniaxial_nominal_stress,
)
from .scenario import (
    ExperimentSpec,
    ForceDisplacementCurve,
    build_bcs,
    nominal_strain,
    quasistatic_check,
    read_curve_csv,
    run_experiment,
    write_curve_csv,
)

__all__ = [
    "__version__",
    "BACKEND_NAME",
    "available_backends",
    "BoundaryCondition",
    "CalibrationProblem",
    "CalibrationResult",
    "ExperimentSpec",
    "ForceDisplacementCurve",
    "HexMesh",
    "OgdenParams",
    "QualityReport",
    "SimConfig",
    "SolverResult",
    "StressResult",
    "analytic_curve",
    "build_bcs",
    "calibrate",
    "cauchy_stress",
    "derive_volumetric_constants",
    "element_scaled_jacobian",
    "generate_box_mesh",
    "mesh_quality",
    "nominal_strain",
    "objective",
    "parse_mesh",
    "quasistatic_check",
    "reaction_force",
    "read_curve_csv",
    "resample_curve",
    "run_experiment",
    "run_simulation",
    "serialize_mesh",
    "smooth_step",
    "stable_time_step",
    "strain_energy",
    "uniaxial_nominal_stress",
    "write_curve_csv",
]
