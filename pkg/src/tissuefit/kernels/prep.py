"""Per-element precomputation shared by both force-assembly backends.

Everything here is evaluated once per simulation: centroid shape-function
gradients, one-point reference volumes, and the Flanagan-Belytschko
hourglass shape vectors (orthogonalized against linear fields, so any
affine deformation produces zero hourglass force).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidStateError
from ..mesh import HEX_CORNER_SIGNS, HexMesh

# Centroid gradients of the trilinear shape functions in natural coords.
DN_CENTER = HEX_CORNER_SIGNS / 8.0  # (8, 3)

# Hourglass base vectors h1=eta*zeta, h2=zeta*xi, h3=xi*eta, h4=xi*eta*zeta.
S = HEX_CORNER_SIGNS
HOURGLASS_BASE = np.stack(
    [
        S[:, 1] * S[:, 2],
        S[:, 2] * S[:, 0],
        S[:, 0] * S[:, 1],
        S[:, 0] * S[:, 1] * S[:, 2],
    ]
)  # (4, 8)
del S


@dataclass(frozen=True)
class ElementData:
    """Reference-configuration arrays consumed by the assembly kernels."""

    conn: np.ndarray      # (E, 8) int64
    grad: np.ndarray      # (E, 8, 3) centroid gradients wrt reference coords
    vol0: np.ndarray      # (E,) one-point reference volumes, m^3
    gamma: np.ndarray     # (E, 4, 8) hourglass shape vectors
    hg_k: np.ndarray      # (E,) hourglass modal stiffness, N/m
    n_nodes: int


def build_element_data(mesh: HexMesh, mu: float, hourglass_coefficient: float) -> ElementData:
    """Precompute gradients, volumes and hourglass data for a mesh.

    The hourglass stiffness per mode and component is

        k_e = coefficient * mu * V0 * sum_a |grad_a|^2 / 8

    which scales like mu * edge_length for a cube, the usual
    stiffness-control magnitude.
    """
    X = mesh.nodes
    conn = mesh.elements
    Xe = X[conn]                                          # (E, 8, 3)
    Jmap = np.einsum("eai,aj->eij", Xe, DN_CENTER)        # (E, 3, 3)
    det = np.linalg.det(Jmap)
    if det.size and det.min() <= 0.0:
        bad = int(np.flatnonzero(det <= 0.0)[0])
        raise InvalidStateError(
            f"element {bad} has non-positive centroid Jacobian ({det[bad]:.3e})"
        )
    invJ = np.linalg.inv(Jmap)
    grad = np.einsum("aj,eji->eai", DN_CENTER, invJ)      # (E, 8, 3)
    vol0 = 8.0 * det

    # gamma_{m,a} = h_{m,a} - grad_a . (sum_b h_{m,b} X_b)
    xh = np.einsum("ma,eai->emi", HOURGLASS_BASE, Xe)     # (E, 4, 3)
    gamma = HOURGLASS_BASE[None, :, :] - np.einsum("emi,eai->ema", xh, grad)
    hg_k = (
        hourglass_coefficient
        * mu
        * vol0
        * np.einsum("eai,eai->e", grad, grad)
        / 8.0
    )
    return ElementData(
        conn=np.ascontiguousarray(conn, dtype=np.int64),
        grad=np.ascontiguousarray(grad),
        vol0=np.ascontiguousarray(vol0),
        gamma=np.ascontiguousarray(gamma),
        hg_k=np.ascontiguousarray(hg_k),
        n_nodes=mesh.node_count,
    )
