"""Inverse identification of the Ogden constants (mu, alpha).

The objective is the pooled RMS force error between model and
experiment, evaluated on a uniform nominal-strain grid (default 25
points per curve) restricted to the calibration strain window.  The
forward model is either the closed-form incompressible uniaxial law
("analytic") or the explicit FE solver ("fe").

Optimization is a Nelder-Mead simplex over (ln mu, alpha): mu is
positive and scale-like, so the log parametrization equalizes step
sizes.  Forward-model failures (diverged runs, out-of-bounds trials)
return a large penalty instead of raising, so the simplex can retreat.
A small multi-start (3 restarts by default) doubles as an
ill-conditioning diagnostic: a wide spread of recovered parameters
across restarts flags an under-determined fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import SimConfig
from .errors import (
    ConvergenceError,
    InvalidArgumentError,
    TissuefitError,
)
from .mesh import HexMesh
from .ogden import OgdenParams, uniaxial_nominal_stress
from .scenario import ForceDisplacementCurve, run_experiment

__all__ = [
    "CalibrationProblem",
    "CalibrationResult",
    "RestartInfo",
    "resample_curve",
    "objective",
    "calibrate",
    "analytic_curve",
]

PENALTY = 1e3  # N; returned for infeasible/diverged forward evaluations

DEFAULT_BOUNDS = ((10.0, 1e5), (-20.0, 20.0))
ALPHA_EXCLUSION = 0.1  # |alpha| below this is outside the feasible set


def analytic_curve(mu, alpha, cross_section_area, sample_height, strains) -> ForceDisplacementCurve:
    """Closed-form incompressible uniaxial curve on a strain grid."""
    if cross_section_area <= 0 or sample_height <= 0:
        raise InvalidArgumentError("area and height must be positive")
    strains = np.asarray(strains, dtype=float)
    if (strains <= -1.0).any():
        raise InvalidArgumentError("nominal strain must exceed -1")
    forces = np.array(
        [uniaxial_nominal_stress(1.0 + e, mu, alpha) * cross_section_area for e in strains]
    )
    return ForceDisplacementCurve(strains * sample_height, forces)


def resample_curve(curve: ForceDisplacementCurve, query_displacements) -> np.ndarray:
    """Piecewise-linear interpolation of forces at query displacements."""
    q = np.asarray(query_displacements, dtype=float)
    d, f = curve.displacement, curve.force
    order = np.argsort(d)
    d, f = d[order], f[order]
    span = max(d[-1] - d[0], 1e-300)
    tol = 1e-9 * span
    if q.size and (q.min() < d[0] - tol or q.max() > d[-1] + tol):
        bad = q[(q < d[0] - tol) | (q > d[-1] + tol)][0]
        raise InvalidArgumentError(
            f"query displacement {bad!r} outside curve range [{d[0]!r}, {d[-1]!r}]"
        )
    return np.interp(np.clip(q, d[0], d[-1]), d, f)


@dataclass(frozen=True)
class CalibrationProblem:
    """Target curves plus everything needed to run the forward model.

    curves: list of (ForceDisplacementCurve, ExperimentSpec) pairs.
    forward_model: "analytic" (needs cross_section_area) or "fe"
    (needs mesh and sim_config).
    """

    curves: tuple
    strain_window: tuple = (-0.3, 0.2)
    forward_model: str = "analytic"
    initial_guess: tuple = (500.0, -2.0)
    bounds: tuple = DEFAULT_BOUNDS
    nu: float = 0.49
    cross_section_area: float = 0.0    # m^2, analytic model
    mesh: HexMesh | None = None        # fe model
    sim_config: SimConfig | None = None
    grid_points: int = 25
    restarts: int = 3
    xtol: float = 1e-4                 # simplex size in (ln mu, alpha)
    ftol: float = 1e-10                # objective spread, N
    max_iterations: int = 400

    def __post_init__(self):
        object.__setattr__(self, "curves", tuple(self.curves))
        if not self.curves:
            raise InvalidArgumentError("at least one target curve is required")
        lo, hi = self.strain_window
        kinds = {spec.test_kind for _, spec in self.curves}
        if kinds == {"tension", "compression"} and not (lo < 0.0 < hi):
            raise InvalidArgumentError(
                "strain window must straddle 0 when both test kinds are present"
            )
        if self.forward_model not in ("analytic", "fe"):
            raise InvalidArgumentError(f"unknown forward model '{self.forward_model}'")
        if self.forward_model == "analytic" and self.cross_section_area <= 0:
            raise InvalidArgumentError("analytic forward model needs cross_section_area")
        if self.forward_model == "fe" and (self.mesh is None or self.sim_config is None):
            raise InvalidArgumentError("fe forward model needs mesh and sim_config")
        mu0, alpha0 = self.initial_guess
        if not self._feasible(mu0, alpha0):
            raise InvalidArgumentError(
                f"initial guess {self.initial_guess} violates bounds {self.bounds}"
            )

    def _feasible(self, mu, alpha):
        (mu_lo, mu_hi), (a_lo, a_hi) = self.bounds
        return (
            mu_lo <= mu <= mu_hi
            and a_lo <= alpha <= a_hi
            and abs(alpha) >= ALPHA_EXCLUSION
        )


def _strain_grid(curve, spec, window, n):
    strains = curve.displacement / spec.sample_height
    lo = max(float(window[0]), float(strains.min()))
    hi = min(float(window[1]), float(strains.max()))
    if lo > hi:
        raise InvalidArgumentError(
            f"curve strains [{strains.min():.3f}, {strains.max():.3f}] do not "
            f"intersect the window {tuple(window)}"
        )
    return np.linspace(lo, hi, n)


def _forward_forces(mu, alpha, problem, spec, strain_grid):
    """Model forces at the grid strains; may raise solver errors."""
    if problem.forward_model == "analytic":
        model = analytic_curve(
            mu, alpha, problem.cross_section_area, spec.sample_height, strain_grid
        )
        return model.force
    target = float(strain_grid[np.argmax(np.abs(strain_grid))]) * spec.sample_height
    run_spec = replace(spec, target_displacement=target)
    result = run_experiment(
        run_spec, problem.mesh, OgdenParams(mu, alpha, problem.nu), problem.sim_config
    )
    return resample_curve(result.curve, strain_grid * spec.sample_height)


def objective(params, problem: CalibrationProblem) -> float:
    """Pooled RMS force error (N) of (mu, alpha) against all curves."""
    mu, alpha = float(params[0]), float(params[1])
    sq_sum = 0.0
    n_total = 0
    for curve, spec in problem.curves:
        grid = _strain_grid(curve, spec, problem.strain_window, problem.grid_points)
        measured = resample_curve(curve, grid * spec.sample_height)
        model = _forward_forces(mu, alpha, problem, spec, grid)
        sq_sum += float(np.sum((model - measured) ** 2))
        n_total += len(grid)
    return math.sqrt(sq_sum / n_total)


def _penalized_objective(problem, diagnostics):
    (mu_lo, mu_hi), (a_lo, a_hi) = problem.bounds

    def fn(y):
        mu, alpha = math.exp(y[0]), y[1]
        if not problem._feasible(mu, alpha):
            dist = (
                max(0.0, math.log(mu_lo) - y[0])
                + max(0.0, y[0] - math.log(mu_hi))
                + max(0.0, a_lo - alpha)
                + max(0.0, alpha - a_hi)
                + max(0.0, ALPHA_EXCLUSION - abs(alpha))
            )
            return PENALTY * (1.0 + dist)
        try:
            return objective((mu, alpha), problem)
        except TissuefitError:
            diagnostics["penalties"] += 1
            return PENALTY

    return fn


def _nelder_mead(fn, y0, steps, xtol, ftol, max_iter):
    """Minimize fn over R^2; returns (y_best, f_best, iterations, converged)."""
    dim = len(y0)
    simplex = [np.asarray(y0, dtype=float)]
    for i in range(dim):
        v = simplex[0].copy()
        v[i] += steps[i]
        simplex.append(v)
    values = [fn(v) for v in simplex]

    iterations = 0
    converged = False
    while iterations < max_iter:
        order = np.argsort(values, kind="stable")
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        size = max(np.abs(v - simplex[0]).max() for v in simplex[1:])
        spread = values[-1] - values[0]
        if size <= xtol and spread <= ftol:
            converged = True
            break
        iterations += 1

        centroid = np.mean(simplex[:-1], axis=0)
        reflected = centroid + (centroid - simplex[-1])
        f_r = fn(reflected)
        if f_r < values[0]:
            expanded = centroid + 2.0 * (centroid - simplex[-1])
            f_e = fn(expanded)
            if f_e < f_r:
                simplex[-1], values[-1] = expanded, f_e
            else:
                simplex[-1], values[-1] = reflected, f_r
        elif f_r < values[-2]:
            simplex[-1], values[-1] = reflected, f_r
        else:
            if f_r < values[-1]:
                contracted = centroid + 0.5 * (reflected - centroid)
                f_c = fn(contracted)
                better = f_c <= f_r
            else:
                contracted = centroid + 0.5 * (simplex[-1] - centroid)
                f_c = fn(contracted)
                better = f_c < values[-1]
            if better:
                simplex[-1], values[-1] = contracted, f_c
            else:
                for i in range(1, dim + 1):
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                    values[i] = fn(simplex[i])

    best = int(np.argmin(values))
    return simplex[best], values[best], iterations, converged


@dataclass(frozen=True)
class RestartInfo:
    mu: float
    alpha: float
    objective_value: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class CalibrationResult:
    params: OgdenParams
    objective_value: float          # N, pooled RMS
    iterations: int                 # total over restarts
    converged: bool
    per_curve_rms: tuple            # N, one entry per target curve
    restarts: tuple = ()            # RestartInfo per start
    mu_spread: float = 0.0          # max relative mu spread across restarts
    alpha_spread: float = 0.0       # max absolute alpha spread
    ill_conditioned: bool = False
    penalties_hit: int = 0


# restart offsets in (ln mu, alpha) space; first entry is the user's guess
_RESTART_OFFSETS = ((0.0, 0.0), (0.7, 1.5), (-0.7, -1.5))

_SPREAD_MU_FLAG = 0.02
_SPREAD_ALPHA_FLAG = 0.2


def calibrate(problem: CalibrationProblem) -> CalibrationResult:
    """Fit (mu, alpha) to the problem's curves; raises on non-convergence."""
    diagnostics = {"penalties": 0}
    fn = _penalized_objective(problem, diagnostics)
    mu0, alpha0 = problem.initial_guess
    y0 = np.array([math.log(mu0), alpha0])
    f0 = fn(y0)

    runs = []
    total_iter = 0
    (mu_lo, mu_hi), (a_lo, a_hi) = problem.bounds
    for k in range(max(1, problem.restarts)):
        off = _RESTART_OFFSETS[k % len(_RESTART_OFFSETS)]
        start = y0 + np.asarray(off)
        start[0] = np.clip(start[0], math.log(mu_lo), math.log(mu_hi))
        start[1] = np.clip(start[1], a_lo, a_hi)
        if abs(start[1]) < ALPHA_EXCLUSION:
            start[1] = math.copysign(ALPHA_EXCLUSION, start[1] if start[1] else -1.0)
        y, f, iters, conv = _nelder_mead(
            fn, start, steps=(0.4, 0.8), xtol=problem.xtol, ftol=problem.ftol,
            max_iter=problem.max_iterations,
        )
        runs.append((y, f, iters, conv))
        total_iter += iters

    best_y, best_f, _, best_conv = min(runs, key=lambda r: r[1])
    if best_f >= PENALTY:
        raise ConvergenceError(
            "no feasible forward evaluation succeeded "
            f"({diagnostics['penalties']} penalized evaluations)"
        )
    if best_f > f0:
        best_y, best_f, best_conv = y0, f0, False

    restarts = tuple(
        RestartInfo(
            mu=math.exp(y[0]), alpha=float(y[1]), objective_value=f,
            iterations=it, converged=cv,
        )
        for y, f, it, cv in runs
    )
    ok = [r for r in restarts if r.converged and r.objective_value < PENALTY]
    mu_spread = alpha_spread = 0.0
    if len(ok) >= 2:
        mus = [r.mu for r in ok]
        alphas = [r.alpha for r in ok]
        mu_spread = (max(mus) - min(mus)) / math.exp(best_y[0])
        alpha_spread = max(alphas) - min(alphas)

    mu_best, alpha_best = math.exp(best_y[0]), float(best_y[1])
    params = OgdenParams(mu_best, alpha_best, problem.nu)
    per_curve = []
    for curve, spec in problem.curves:
        grid = _strain_grid(curve, spec, problem.strain_window, problem.grid_points)
        measured = resample_curve(curve, grid * spec.sample_height)
        model = _forward_forces(mu_best, alpha_best, problem, spec, grid)
        per_curve.append(float(np.sqrt(np.mean((model - measured) ** 2))))

    if not best_conv:
        raise ConvergenceError(
            f"optimizer did not converge within {problem.max_iterations} iterations "
            f"(best objective {best_f:.6e} N)"
        )
    return CalibrationResult(
        params=params,
        objective_value=best_f,
        iterations=total_iter,
        converged=best_conv,
        per_curve_rms=tuple(per_curve),
        restarts=restarts,
        mu_spread=mu_spread,
        alpha_spread=alpha_spread,
        ill_conditioned=(mu_spread > _SPREAD_MU_FLAG or alpha_spread > _SPREAD_ALPHA_FLAG),
        penalties_hit=diagnostics["penalties"],
    )
