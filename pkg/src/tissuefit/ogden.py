"""First-order Ogden hyperelastic law with a quadratic volumetric penalty.

Strain energy density (SI units, J/m^3):

    W = (2*mu/alpha^2) * (lb1^alpha + lb2^alpha + lb3^alpha - 3)
        + (1/D) * (J - 1)^2

where J = det(F) is the volume ratio and lbi = J^(-1/3) * li are the
isochoric principal stretches (li = singular values of the deformation
gradient F).  Writing the deviatoric term in isochoric stretches is the
convention of the major commercial solvers and is required for the
energy and the stress to vanish at F = I when alpha != 0.

The penalty constant D is tied to the bulk modulus by D = 2/K, and K
follows from (mu, nu) by inverting

    nu = (3*K/mu - 2) / (6*K/mu + 2)   =>   K/mu = (2 + 2*nu)/(3 - 6*nu)

Principal Cauchy stresses, from tau_i = li * dW/dli and sigma = tau/J:

    sigma_i = (2*mu/(alpha*J)) * (lbi^alpha - S/3) + K*(J - 1)

with S = sum_j lbj^alpha.  The tensor is reassembled in the eigenbasis
of the left Cauchy-Green tensor B = F F^T, so repeated stretches need no
special handling.

All functions are pure and inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, InvalidStateError

__all__ = [
    "OgdenParams",
    "StressResult",
    "derive_volumetric_constants",
    "strain_energy",
    "cauchy_stress",
    "uniaxial_nominal_stress",
]


def derive_volumetric_constants(mu: float, nu: float) -> tuple[float, float]:
    """Bulk modulus K and penalty constant D = 2/K from (mu, nu).

    nu = 0.5 (exact incompressibility) is not representable by the
    penalty formulation and is rejected.
    """
    if not mu > 0:
        raise InvalidArgumentError(f"shear modulus must be positive, got {mu}")
    if not (0.0 <= nu < 0.5):
        raise InvalidArgumentError(
            f"Poisson's ratio must lie in [0, 0.5), got {nu}"
        )
    K = mu * (2.0 + 2.0 * nu) / (3.0 - 6.0 * nu)
    return K, 2.0 / K


@dataclass(frozen=True)
class OgdenParams:
    """Material constants: mu (Pa), alpha (-), nu (-); K and D derived."""

    mu: float
    alpha: float
    nu: float = 0.49
    K: float = field(init=False)
    D: float = field(init=False)

    def __post_init__(self):
        if self.alpha == 0.0:
            raise InvalidArgumentError("alpha must be nonzero")
        K, D = derive_volumetric_constants(self.mu, self.nu)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "D", D)


@dataclass(frozen=True)
class StressResult:
    cauchy: np.ndarray        # symmetric 3x3, Pa
    energy_density: float     # J/m^3
    pressure: float           # volumetric stress K*(J-1), Pa


def _principal(F):
    """(J, principal stretches ascending, eigenvectors of F F^T)."""
    F = np.asarray(F, dtype=float)
    if F.shape != (3, 3):
        raise InvalidArgumentError(f"deformation gradient must be 3x3, got {F.shape}")
    if not np.isfinite(F).all():
        raise InvalidStateError("deformation gradient contains non-finite entries")
    J = float(np.linalg.det(F))
    if J <= 0.0:
        raise InvalidStateError(f"det(F) = {J:.6e} is not positive")
    evals, evecs = np.linalg.eigh(F @ F.T)
    lam = np.sqrt(np.maximum(evals, 0.0))
    return J, lam, evecs


def strain_energy(F, p: OgdenParams) -> float:
    """Energy density W(F) in J/m^3."""
    J, lam, _ = _principal(F)
    lb = lam * J ** (-1.0 / 3.0)
    S = float(np.sum(lb ** p.alpha))
    return (2.0 * p.mu / p.alpha ** 2) * (S - 3.0) + (p.K / 2.0) * (J - 1.0) ** 2


def cauchy_stress(F, p: OgdenParams) -> StressResult:
    """Cauchy stress tensor, energy density and volumetric pressure at F."""
    J, lam, evecs = _principal(F)
    lb = lam * J ** (-1.0 / 3.0)
    powers = lb ** p.alpha
    S = float(powers.sum())
    principal_dev = (2.0 * p.mu / (p.alpha * J)) * (powers - S / 3.0)
    pressure = p.K * (J - 1.0)
    sigma = (evecs * principal_dev) @ evecs.T + pressure * np.eye(3)
    sigma = 0.5 * (sigma + sigma.T)  # symmetrize roundoff
    energy = (2.0 * p.mu / p.alpha ** 2) * (S - 3.0) + (p.K / 2.0) * (J - 1.0) ** 2
    return StressResult(cauchy=sigma, energy_density=energy, pressure=pressure)


def uniaxial_nominal_stress(lam: float, mu: float, alpha: float) -> float:
    """Closed-form incompressible uniaxial nominal (first Piola) stress.

    P(lam) = (2*mu/alpha) * (lam^(alpha-1) - lam^(-alpha/2-1)),
    from the uniaxial incompressible kinematics l2 = l3 = lam^(-1/2).
    Positive in tension, negative in compression.
    """
    if not lam > 0:
        raise InvalidArgumentError(f"stretch must be positive, got {lam}")
    if alpha == 0.0:
        raise InvalidArgumentError("alpha must be nonzero")
    return (2.0 * mu / alpha) * (lam ** (alpha - 1.0) - lam ** (-alpha / 2.0 - 1.0))
