"""Information functionals over qubit pairs.

Three routes to a mutual-information number live here:

* ``mutual_information`` — Shannon mutual information of a discrete 2x2
  outcome table, I = S_X + S_Y - S_XY in bits.
* ``nonselected_information`` — the continuous-measurement variant: both
  parties read out with the resolution of the identity over *all* pure
  states, d(measure) = sin(theta) dtheta dphi / (2 pi), and the mutual
  information of the resulting joint density is evaluated by spherical
  quadrature.
* ``averaged_selected_information`` — the orientation average of the
  discrete-basis mutual information over both spheres.  It exists to check
  numerically that the average reproduces the continuous value.

The quadrature is a product rule per sphere: Gauss-Legendre in u = cos(theta)
times a uniform periodic rule in phi.  The integrand t*log(t) has an
integrable singularity where the joint density vanishes, which limits the
attainable accuracy to roughly 1e-5 at the default resolution; tolerance
targets elsewhere in the package are set accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .qstate import (
    BlochDirection,
    DensityMatrix,
    MeasurementBasis,
    NumericalCorruptionError,
    expectation,
    partial_trace,
)

# Total sphere volume under the measure sin(theta) dtheta dphi / (2 pi).
SPHERE_VOLUME = 2.0

# Below this a probability density is treated as exactly zero (0 log 0 = 0).
DENSITY_FLOOR = 1e-300

_BLOCK = 256  # row block size for the orientation-average sweep


@dataclass(frozen=True, eq=False)
class JointTable:
    """2x2 joint probability table of two binary measurements."""

    probs: np.ndarray

    def __init__(self, probs: np.ndarray) -> None:
        p = np.array(probs, dtype=float)
        if p.shape != (2, 2):
            raise ValueError(f"joint table must be 2x2, got shape {p.shape}")
        if p.min() < -1e-12:
            raise ValueError(f"negative probability {p.min()!r} in joint table")
        p = np.clip(p, 0.0, None)
        total = float(p.sum())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"joint table sums to {total!r}, expected 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)


def _entropy_bits(p: np.ndarray) -> float:
    p = p[p > 0.0]
    return float(-(p * np.log2(p)).sum())


def mutual_information(table: JointTable) -> float:
    """I = S_X + S_Y - S_XY in bits, with the 0 log 0 = 0 convention.

    For a valid 2x2 table the result lies in [0, 1]; tiny negative roundoff
    is clamped to 0.
    """
    p = table.probs
    i = _entropy_bits(p.sum(axis=1)) + _entropy_bits(p.sum(axis=0)) - _entropy_bits(p.reshape(-1))
    return max(0.0, i)


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    """Node/weight set discretizing the Bloch-sphere measure.

    ``u``, ``phi`` and ``weights`` are flat arrays of equal length; weights
    sum to the sphere volume 2 and integrate degree <= 2 polynomials in the
    Cartesian direction components exactly.  ``kets`` / ``antipodal_kets``
    cache the outcome kets of every node and of every antipodal node.
    """

    u: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    kets: np.ndarray
    antipodal_kets: np.ndarray

    def __init__(self, u: np.ndarray, phi: np.ndarray, weights: np.ndarray) -> None:
        u = np.asarray(u, dtype=float).reshape(-1)
        phi = np.asarray(phi, dtype=float).reshape(-1)
        w = np.asarray(weights, dtype=float).reshape(-1)
        if not (u.size == phi.size == w.size) or u.size == 0:
            raise ValueError("u, phi and weights must be equal-length nonempty arrays")
        if w.min() <= 0.0:
            raise ValueError("quadrature weights must be positive")
        if abs(math.fsum(w.tolist()) - SPHERE_VOLUME) > 1e-10:
            raise ValueError("quadrature weights do not sum to the sphere volume 2")
        residual = _moment_residual(u, phi, w)
        if residual > 1e-10:
            raise ValueError(f"quadrature fails the degree-2 moment test: residual {residual:.3e}")

        c = np.sqrt((1.0 + u) / 2.0)
        s = np.sqrt((1.0 - u) / 2.0)
        ph = np.exp(1j * phi)
        kets = np.stack([c.astype(complex), ph * s], axis=1)
        anti = np.stack([s.astype(complex), -ph * c], axis=1)
        for arr in (u, phi, w, kets, anti):
            arr.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "kets", kets)
        object.__setattr__(self, "antipodal_kets", anti)

    @classmethod
    def gauss_product(cls, n_polar: int = 32, n_azimuth: int = 64) -> "SphereQuadrature":
        """Gauss-Legendre x uniform-azimuth product rule.

        n_polar >= 2 Legendre nodes in u = cos(theta); n_azimuth >= 4
        midpoint nodes in phi (exact for trigonometric polynomials of degree
        < n_azimuth by periodicity).
        """
        if n_polar < 2 or n_azimuth < 4:
            raise ValueError("need at least 2 polar and 4 azimuthal nodes")
        x, wx = np.polynomial.legendre.leggauss(int(n_polar))
        phi = (np.arange(n_azimuth) + 0.5) * (2.0 * math.pi / n_azimuth)
        u = np.repeat(x, n_azimuth)
        ph = np.tile(phi, n_polar)
        w = np.repeat(wx, n_azimuth) / float(n_azimuth)
        return cls(u, ph, w)

    def __len__(self) -> int:
        return int(self.u.size)

    def directions(self) -> list[BlochDirection]:
        return [
            BlochDirection.from_cos_polar(ui, pi) for ui, pi in zip(self.u, self.phi)
        ]


def _moment_residual(u: np.ndarray, phi: np.ndarray, w: np.ndarray) -> float:
    """Worst deviation of the first and second direction moments.

    Exact values under the sphere measure: integral of n_i is 0, of
    n_i n_j is (2/3) delta_ij.
    """
    s = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    nx, ny, nz = s * np.cos(phi), s * np.sin(phi), u
    comps = (nx, ny, nz)
    worst = 0.0
    for i in range(3):
        worst = max(worst, abs(float(np.dot(w, comps[i]))))
        for j in range(3):
            target = 2.0 / 3.0 if i == j else 0.0
            worst = max(worst, abs(float(np.dot(w, comps[i] * comps[j])) - target))
    return worst


@lru_cache(maxsize=8)
def default_quadrature(n_polar: int = 32, n_azimuth: int = 64) -> SphereQuadrature:
    """Shared default rule; cached because the node kets are reused heavily."""
    return SphereQuadrature.gauss_product(n_polar, n_azimuth)


def _require_two_qubits(rho: DensityMatrix) -> None:
    if len(rho.labels) != 2 or rho.dims != (2, 2):
        raise ValueError(f"expected a two-qubit state, got labels {rho.labels} dims {rho.dims}")


def _pair_density(rho4: np.ndarray, kets_x: np.ndarray, kets_y: np.ndarray) -> np.ndarray:
    """Joint density <v_i w_j| rho |v_i w_j> for all node pairs, shape (N, M).

    Works through the eigendecomposition of rho so each rank contributes a
    pair of small matrix products; negative densities beyond the corruption
    floor raise, smaller ones clamp to zero.
    """
    evals, evecs = np.linalg.eigh(rho4)
    p = np.zeros((kets_x.shape[0], kets_y.shape[0]))
    for r in range(4):
        lam = float(evals[r])
        if abs(lam) < 1e-16:
            continue
        psi = evecs[:, r].reshape(2, 2)
        amp = (kets_x.conj() @ psi) @ kets_y.conj().T
        p += lam * (amp.real**2 + amp.imag**2)
    low = float(p.min())
    if low < -1e-10:
        raise NumericalCorruptionError(f"joint density dipped to {low!r}")
    return np.clip(p, 0.0, None)


def _marginal_density(rho2: np.ndarray, kets: np.ndarray) -> np.ndarray:
    d = np.einsum("ia,ab,ib->i", kets.conj(), rho2, kets).real
    low = float(d.min())
    if low < -1e-10:
        raise NumericalCorruptionError(f"marginal density dipped to {low!r}")
    return np.clip(d, 0.0, None)


def _weighted_sum(values: np.ndarray, w_rows: np.ndarray, w_cols: np.ndarray) -> float:
    """Deterministic reduction: fixed-order pairwise row sums, then fsum."""
    rows = (values * w_cols[None, :]).sum(axis=1)
    return math.fsum((rows * w_rows).tolist())


def _mi_integrand(p: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    lp = np.log2(np.maximum(p, DENSITY_FLOOR))
    lx = np.log2(np.maximum(px, DENSITY_FLOOR))
    ly = np.log2(np.maximum(py, DENSITY_FLOOR))
    return p * (lp - lx[:, None] - ly[None, :])


def nonselected_information(
    rho_xy: DensityMatrix,
    quad_x: SphereQuadrature | None = None,
    quad_y: SphereQuadrature | None = None,
) -> float:
    """Mutual information of the all-states continuous readout, in bits.

    Evaluates the double integral of p log2(p / (p_x p_y)) over both spheres,
    where p is the joint outcome density of the state and p_x, p_y are the
    densities of its one-party reductions.  Summation order is fixed, so the
    result is bit-reproducible.
    """
    _require_two_qubits(rho_xy)
    qx = quad_x if quad_x is not None else default_quadrature()
    qy = quad_y if quad_y is not None else default_quadrature()
    rho_x = partial_trace(rho_xy, (rho_xy.labels[0],)).entries
    rho_y = partial_trace(rho_xy, (rho_xy.labels[1],)).entries
    p = _pair_density(rho_xy.entries, qx.kets, qy.kets)
    px = _marginal_density(rho_x, qx.kets)
    py = _marginal_density(rho_y, qy.kets)
    total = _weighted_sum(_mi_integrand(p, px, py), qx.weights, qy.weights)
    return max(0.0, total)


def selected_information(
    rho_xy: DensityMatrix,
    basis_x: MeasurementBasis,
    basis_y: MeasurementBasis,
) -> float:
    """Mutual information of fixed orthogonal readouts at both parties, bits.

    Symmetric under simultaneously swapping the parties and their bases.
    """
    _require_two_qubits(rho_xy)
    kx = basis_x.kets()
    ky = basis_y.kets()
    probs = np.array(
        [[expectation(rho_xy, (kx[k], ky[l])) for l in (0, 1)] for k in (0, 1)]
    )
    return mutual_information(JointTable(probs / probs.sum()))


def averaged_selected_information(
    rho_xy: DensityMatrix,
    quad_x: SphereQuadrature | None = None,
    quad_y: SphereQuadrature | None = None,
) -> float:
    """Orientation average of the two-basis mutual information, in bits.

    Averages selected_information over both basis spheres with the volume
    measure, normalized by V^2 = 4.  Used solely to test that this average
    reproduces nonselected_information.
    """
    _require_two_qubits(rho_xy)
    qx = quad_x if quad_x is not None else default_quadrature()
    qy = quad_y if quad_y is not None else default_quadrature()
    rho4 = rho_xy.entries
    rho_x = partial_trace(rho_xy, (rho_xy.labels[0],)).entries
    rho_y = partial_trace(rho_xy, (rho_xy.labels[1],)).entries

    px = np.stack([_marginal_density(rho_x, qx.kets), _marginal_density(rho_x, qx.antipodal_kets)])
    py = np.stack([_marginal_density(rho_y, qy.kets), _marginal_density(rho_y, qy.antipodal_kets)])
    kets_x = (qx.kets, qx.antipodal_kets)
    kets_y = (qy.kets, qy.antipodal_kets)

    row_totals = np.zeros(len(qx))
    for start in range(0, len(qx), _BLOCK):
        stop = min(start + _BLOCK, len(qx))
        acc = np.zeros((stop - start, len(qy)))
        for k in (0, 1):
            for l in (0, 1):
                p = _pair_density(rho4, kets_x[k][start:stop], kets_y[l])
                acc += _mi_integrand(p, px[k][start:stop], py[l])
        row_totals[start:stop] = (acc * qy.weights[None, :]).sum(axis=1)
    total = math.fsum((row_totals * qx.weights).tolist())
    return max(0.0, total / (SPHERE_VOLUME**2))
