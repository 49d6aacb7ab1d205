"""Vectorized numpy force-assembly kernel (pure-Python fallback).

Semantics are identical to the compiled backend in `_core`; assembly
uses np.add.at, which accumulates in index order, so results are
deterministic for a given mesh.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def assemble_forces(x, data, mu, alpha, K, f_out):
    """Internal + hourglass resisting forces and the energy state.

    Parameters
    ----------
    x : (N, 3) current nodal positions
    data : ElementData
    f_out : (N, 3) output, overwritten with the force that must be
        subtracted from external loads (resists deformation)

    Returns
    -------
    (internal_energy, hourglass_energy, min_detF, bad_element)
        bad_element is -1, or the first element index with det(F) <= 0,
        in which case forces/energies are not meaningful.
    """
    conn, grad, vol0 = data.conn, data.grad, data.vol0
    f_out[:] = 0.0

    xe = x[conn]                                       # (E, 8, 3)
    F = np.einsum("eai,eaj->eij", xe, grad)            # (E, 3, 3)
    J = np.linalg.det(F)
    min_J = float(J.min()) if J.size else 1.0
    if min_J <= 0.0:
        return 0.0, 0.0, min_J, int(np.flatnonzero(J <= 0.0)[0])

    B = np.einsum("eij,ekj->eik", F, F)
    evals, evecs = np.linalg.eigh(B)
    lam_bar = np.sqrt(np.maximum(evals, 0.0)) * J[:, None] ** (-1.0 / 3.0)
    powers = lam_bar ** alpha                          # (E, 3)
    S = powers.sum(axis=1)

    principal_dev = (2.0 * mu / alpha) / J[:, None] * (powers - S[:, None] / 3.0)
    sigma = np.einsum("eik,ek,ejk->eij", evecs, principal_dev, evecs)
    p_vol = K * (J - 1.0)
    sigma[:, 0, 0] += p_vol
    sigma[:, 1, 1] += p_vol
    sigma[:, 2, 2] += p_vol

    b_cur = np.einsum("eaj,eji->eai", grad, np.linalg.inv(F))
    f_elem = (J * vol0)[:, None, None] * np.einsum("eij,eaj->eai", sigma, b_cur)

    W = (2.0 * mu / alpha**2) * (S - 3.0) + 0.5 * K * (J - 1.0) ** 2
    internal_energy = float(np.dot(W, vol0))

    # hourglass: modal amplitudes q = gamma . x (gamma annihilates affine maps)
    q = np.einsum("ema,eai->emi", data.gamma, xe)      # (E, 4, 3)
    f_elem += data.hg_k[:, None, None] * np.einsum("ema,emi->eai", data.gamma, q)
    hourglass_energy = float(
        0.5 * np.dot(data.hg_k, np.einsum("emi,emi->e", q, q))
    )

    np.add.at(f_out, conn.ravel(), f_elem.reshape(-1, 3))
    return internal_energy, hourglass_energy, min_J, -1


def element_states(x, data, mu, alpha, K):
    """Centroid deformation gradients, Cauchy stresses and energy densities.

    Diagnostic path (patch tests, field output); not performance-critical.
    Returns (F (E,3,3), sigma (E,3,3), W (E,)).
    """
    xe = x[data.conn]
    F = np.einsum("eai,eaj->eij", xe, data.grad)
    J = np.linalg.det(F)
    B = np.einsum("eij,ekj->eik", F, F)
    evals, evecs = np.linalg.eigh(B)
    lam_bar = np.sqrt(np.maximum(evals, 0.0)) * J[:, None] ** (-1.0 / 3.0)
    powers = lam_bar**alpha
    S = powers.sum(axis=1)
    principal_dev = (2.0 * mu / alpha) / J[:, None] * (powers - S[:, None] / 3.0)
    sigma = np.einsum("eik,ek,ejk->eij", evecs, principal_dev, evecs)
    p_vol = K * (J - 1.0)
    sigma[:, 0, 0] += p_vol
    sigma[:, 1, 1] += p_vol
    sigma[:, 2, 2] += p_vol
    W = (2.0 * mu / alpha**2) * (S - 3.0) + 0.5 * K * (J - 1.0) ** 2
    return F, sigma, W
