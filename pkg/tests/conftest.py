import numpy as np
import pytest

from tissuefit import OgdenParams, generate_box_mesh

# sample geometry used throughout: 27 mm x 27 mm x 17 mm cuboid
LX, LY, LZ = 0.027, 0.027, 0.017
AREA = LX * LY
HEIGHT = LZ

MU, ALPHA, NU = 1200.0, -6.3, 0.49


@pytest.fixture(scope="session")
def brain_params():
    """Calibrated constants of the reference brain-tissue fit."""
    return OgdenParams(MU, ALPHA, NU)


@pytest.fixture(scope="session")
def sample_mesh():
    """Coarse sample-sized mesh, cheap enough for solver unit tests."""
    return generate_box_mesh((LX, LY, LZ), (4, 4, 3))


@pytest.fixture(scope="session")
def single_element_mesh():
    return generate_box_mesh((LX, LY, LZ), (1, 1, 1))


def random_deformation_gradient(rng, det_range=(0.5, 1.5), max_cond=10.0):
    """Random F with bounded determinant and condition number."""
    while True:
        F = np.eye(3) + 0.4 * rng.standard_normal((3, 3))
        det = np.linalg.det(F)
        if det <= 0:
            continue
        F *= (rng.uniform(*det_range) / det) ** (1.0 / 3.0)
        if np.linalg.cond(F) < max_cond:
            return F


def random_rotation(rng):
    """Uniform-ish random proper rotation via QR."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
