import math

import numpy as np
import pytest

from contqkd import BlochDirection, SphereQuadrature

# Closed-form per-letter information of the undisturbed channel under the
# all-states readout: 1 - 1/(2 ln 2).  Derived by reducing the double sphere
# integral of p log2(4 p), p = (1 - cos(angle))/4, to
# (1/2) * integral_0^2 of t log2(t) dt = 1 - 1/(2 ln 2).
SINGLET_BITS = 1.0 - 1.0 / (2.0 * math.log(2.0))


@pytest.fixture(scope="session")
def quad_light():
    """Cheap rule for module tests; singlet value is good to ~1e-5 here."""
    return SphereQuadrature.gauss_product(16, 32)


@pytest.fixture(scope="session")
def quad_mid():
    return SphereQuadrature.gauss_product(24, 48)


def random_direction(rng: np.random.Generator) -> BlochDirection:
    return BlochDirection.from_cos_polar(rng.uniform(-1.0, 1.0), rng.uniform(0.0, 2.0 * math.pi))


def direction_from_vector(v) -> BlochDirection:
    x, y, z = (float(c) for c in v)
    r = math.sqrt(x * x + y * y + z * z)
    return BlochDirection(math.acos(max(-1.0, min(1.0, z / r))), math.atan2(y, x) % (2.0 * math.pi))


def direction_at_angle(base: BlochDirection, angle: float, rng: np.random.Generator) -> BlochDirection:
    """A direction at the given geodesic angle from ``base``, azimuth random."""
    n = np.array(
        [
            math.sin(base.theta) * math.cos(base.phi),
            math.sin(base.theta) * math.sin(base.phi),
            math.cos(base.theta),
        ]
    )
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    psi = rng.uniform(0.0, 2.0 * math.pi)
    v = math.cos(angle) * n + math.sin(angle) * (math.cos(psi) * e1 + math.sin(psi) * e2)
    return direction_from_vector(v)


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)
