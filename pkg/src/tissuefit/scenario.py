"""Uniaxial test protocol: boundary conditions, curves, quasi-static check.

The physical protocol being reproduced: the sample base is glued to the
testing-machine platen (full fixation), the loading head is bonded (in
tension) or pressed through no-slip sandpaper (in compression), so the
loaded surface moves only vertically; the head travels at a nominal
speed with a smooth-step ramp.

Curve convention: positive displacement and force mean tension
(elongation), negative mean compression.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import (
    BoundaryCondition,
    SimConfig,
    SolverResult,
    reaction_force,
    run_simulation,
)
from .errors import InvalidArgumentError
from .mesh import HexMesh
from .ogden import OgdenParams

__all__ = [
    "ExperimentSpec",
    "ForceDisplacementCurve",
    "ExperimentResult",
    "QuasistaticReport",
    "build_bcs",
    "nominal_strain",
    "run_experiment",
    "quasistatic_check",
    "write_curve_csv",
    "read_curve_csv",
    "resample_overlap_metrics",
]


@dataclass(frozen=True)
class ExperimentSpec:
    """One uniaxial tension or compression test.

    free_lateral=False is the physical protocol (glued base, no-slip
    head).  free_lateral=True prescribes only the axial DOF on both
    faces, producing a homogeneous uniaxial-stress state; used for
    verification against the closed-form law.
    """

    test_kind: str                    # "tension" | "compression"
    target_displacement: float        # m, signed (+ tension, - compression)
    sample_height: float              # m
    loading_speed: float = 3e-4       # m/s (0.3 mm/s)
    base_set: str = "bottom"
    load_set: str = "top"
    tracked_set: str = ""             # defaults to base_set
    free_lateral: bool = False

    def __post_init__(self):
        if self.test_kind not in ("tension", "compression"):
            raise InvalidArgumentError(f"unknown test kind '{self.test_kind}'")
        if self.loading_speed <= 0:
            raise InvalidArgumentError("loading_speed must be positive")
        if self.sample_height <= 0:
            raise InvalidArgumentError("sample_height must be positive")
        if self.test_kind == "tension" and self.target_displacement < 0:
            raise InvalidArgumentError("tension requires target_displacement >= 0")
        if self.test_kind == "compression" and self.target_displacement > 0:
            raise InvalidArgumentError("compression requires target_displacement <= 0")
        if not self.tracked_set:
            object.__setattr__(self, "tracked_set", self.base_set)


@dataclass(frozen=True)
class ForceDisplacementCurve:
    """Sampled (displacement, force) pairs; positive = tension."""

    displacement: np.ndarray   # m
    force: np.ndarray          # N

    def __post_init__(self):
        d = np.asarray(self.displacement, dtype=float)
        f = np.asarray(self.force, dtype=float)
        if d.shape != f.shape or d.ndim != 1:
            raise InvalidArgumentError("displacement and force must be equal-length 1D")
        if not (np.isfinite(d).all() and np.isfinite(f).all()):
            raise InvalidArgumentError("curve contains non-finite values")
        if len(d) >= 2:
            # a single ramp has non-decreasing |d|; a strain sweep spanning
            # compression and tension is stored with ascending displacement
            ramp_like = (np.diff(np.abs(d)) >= -1e-12).all()
            sorted_like = (np.diff(d) >= -1e-12).all()
            if not (ramp_like or sorted_like):
                raise InvalidArgumentError(
                    "displacement must be a ramp (non-decreasing magnitude) "
                    "or an ascending sweep"
                )
        object.__setattr__(self, "displacement", d)
        object.__setattr__(self, "force", f)

    def __len__(self):
        return len(self.displacement)


@dataclass(frozen=True)
class QuasistaticReport:
    passed: bool
    ke_ie_ratio: float
    threshold: float


@dataclass(frozen=True)
class ExperimentResult:
    curve: ForceDisplacementCurve
    solver_result: SolverResult
    quasistatic: QuasistaticReport


def nominal_strain(displacement: float, sample_height: float) -> float:
    """Signed head displacement over initial sample height."""
    if not sample_height > 0:
        raise InvalidArgumentError(f"sample height must be positive, got {sample_height}")
    return displacement / sample_height


def build_bcs(spec: ExperimentSpec, mesh: HexMesh, rate_scaling: float = 1.0):
    """Boundary conditions realizing the test protocol on a mesh.

    Ramp duration is |target| / (loading_speed * rate_scaling); a zero
    target gets a short hold ramp so the run is still well-defined.
    """
    for name in (spec.base_set, spec.load_set, spec.tracked_set):
        if name not in mesh.node_sets:
            raise InvalidArgumentError(f"unknown node set '{name}'")
    base = set(mesh.node_sets[spec.base_set].tolist())
    load = set(mesh.node_sets[spec.load_set].tolist())
    if base & load:
        raise InvalidArgumentError(
            f"base set '{spec.base_set}' and load set '{spec.load_set}' overlap"
        )
    travel = max(abs(spec.target_displacement), 1e-3 * spec.sample_height)
    ramp = travel / (spec.loading_speed * rate_scaling)
    axis = (0.0, 0.0, 1.0)
    if spec.free_lateral:
        return [
            BoundaryCondition(
                kind="prescribed_axial", node_set=spec.base_set, axis=axis,
                total_displacement=0.0, ramp_duration=ramp,
            ),
            BoundaryCondition(
                kind="prescribed_axial", node_set=spec.load_set, axis=axis,
                total_displacement=spec.target_displacement, ramp_duration=ramp,
            ),
        ]
    return [
        BoundaryCondition(kind="fixed_all", node_set=spec.base_set),
        BoundaryCondition(kind="fixed_lateral", node_set=spec.load_set, axis=axis),
        BoundaryCondition(
            kind="prescribed_axial", node_set=spec.load_set, axis=axis,
            total_displacement=spec.target_displacement, ramp_duration=ramp,
        ),
    ]


def quasistatic_check(result: SolverResult, threshold: float) -> QuasistaticReport:
    """Max KE/IE over samples after 10% of the ramp, compared to threshold."""
    ratio = result.max_ke_ie(after_fraction=0.1)
    return QuasistaticReport(passed=ratio <= threshold, ke_ie_ratio=ratio,
                             threshold=threshold)


def run_experiment(
    spec: ExperimentSpec,
    mesh: HexMesh,
    p: OgdenParams,
    cfg: SimConfig,
    backend=None,
) -> ExperimentResult:
    """Simulate the test and extract the force-displacement curve.

    Sampling happens every cfg.output_interval of *physical* test time
    (the solver interval is divided by rate_scaling), and displacement is
    reported as physical head displacement, so rate scaling only changes
    how the result was obtained, not what it represents.
    """
    bcs = build_bcs(spec, mesh, cfg.rate_scaling)
    sim_cfg = replace(cfg, output_interval=cfg.output_interval / cfg.rate_scaling)
    result = run_simulation(
        mesh, bcs, sim_cfg, p,
        tracked_sets=[spec.tracked_set], backend=backend,
    )
    force = reaction_force(result, spec.tracked_set)
    curve = ForceDisplacementCurve(result.displacement.copy(), force.copy())
    return ExperimentResult(
        curve=curve,
        solver_result=result,
        quasistatic=quasistatic_check(result, cfg.ke_ie_threshold),
    )


# ---------------------------------------------------------------------------
# curve CSV I/O
# ---------------------------------------------------------------------------

CURVE_HEADER = "displacement_m,force_N"


def write_curve_csv(curve: ForceDisplacementCurve, metadata: dict | None = None) -> str:
    """CSV text with '#' metadata comments and an exact-roundtrip payload."""
    out = io.StringIO()
    for key, value in (metadata or {}).items():
        out.write(f"# {key}: {value}\n")
    out.write(CURVE_HEADER + "\n")
    for d, f in zip(curve.displacement, curve.force):
        out.write(f"{float(d)!r},{float(f)!r}\n")
    return out.getvalue()


def read_curve_csv(source) -> ForceDisplacementCurve:
    """Parse curve CSV; raises InvalidArgumentError naming the bad line."""
    text = source.read() if hasattr(source, "read") else source
    disp, force = [], []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            cols = [c.strip() for c in line.split(",")]
            if cols != CURVE_HEADER.split(","):
                raise InvalidArgumentError(
                    f"line {lineno}: expected header '{CURVE_HEADER}', got '{line}'"
                )
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise InvalidArgumentError(
                f"line {lineno}: expected 2 comma-separated values, got {len(parts)}"
            )
        try:
            disp.append(float(parts[0]))
            force.append(float(parts[1]))
        except ValueError:
            raise InvalidArgumentError(f"line {lineno}: bad number in '{line}'") from None
    if not header_seen:
        raise InvalidArgumentError("curve CSV has no header line")
    if not disp:
        raise InvalidArgumentError("curve CSV has no data rows")
    return ForceDisplacementCurve(np.asarray(disp), np.asarray(force))


def resample_overlap_metrics(
    a: ForceDisplacementCurve,
    b: ForceDisplacementCurve,
    min_disp: float | None = None,
    max_disp: float | None = None,
    points: int = 200,
) -> dict:
    """Difference metrics between two curves on their displacement overlap.

    Curve `a` is the reference for the relative metric.  Returns
    max_abs_N, max_rel (over points where |a| is non-negligible) and
    rms_N, all evaluated on a uniform grid over the overlap window.
    """
    lo = max(a.displacement.min(), b.displacement.min())
    hi = min(a.displacement.max(), b.displacement.max())
    if min_disp is not None:
        lo = max(lo, min_disp)
    if max_disp is not None:
        hi = min(hi, max_disp)
    if lo >= hi:
        raise InvalidArgumentError(
            f"curves have no overlapping displacement range (window [{lo}, {hi}])"
        )
    grid = np.linspace(lo, hi, points)
    fa = np.interp(grid, *_sorted(a))
    fb = np.interp(grid, *_sorted(b))
    diff = fb - fa
    scale = np.abs(fa)
    significant = scale > 1e-12 * max(scale.max(), 1e-300)
    max_rel = float(np.max(np.abs(diff[significant]) / scale[significant])) if significant.any() else 0.0
    return {
        "max_abs_N": float(np.max(np.abs(diff))),
        "max_rel": max_rel,
        "rms_N": float(np.sqrt(np.mean(diff**2))),
        "window_m": (float(lo), float(hi)),
    }


def _sorted(curve):
    order = np.argsort(curve.displacement)
    return curve.displacement[order], curve.force[order]
