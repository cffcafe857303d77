"""Grid back-projection of Fourier measurements and hard-thresholded initialization."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .kernels import fejer_coeff
from .measure_op import FourierOperator
from .model import Domain, ParamVector

log = logging.getLogger(__name__)

# Grid nodes are back-projected in chunks to bound the (nodes x m) work array.
_CHUNK_ELEMS = 2_000_000


@dataclass(frozen=True)
class Grid:
    domain: Domain
    step: float
    nodes: np.ndarray

    def __len__(self) -> int:
        return self.nodes.shape[0]


@dataclass(frozen=True)
class GridBackProjection:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape[0] != len(self.grid):
            raise ConfigurationError("one back-projected value per grid node is required")


def make_grid(domain: Domain, step: float) -> Grid:
    """Regular grid of spacing ``step``.

    Euclidean: cell midpoints of a partition of the ball's bounding box into
    cubes of side ``step`` (centred on the origin), keeping only nodes inside
    the ball, so that each node stands for one cell. Torus: ``n``
    nodes per axis at ``i / n`` with ``n = round(1 / step)``; the effective
    step is then ``1 / n``.
    """
    if not step > 0:
        raise ConfigurationError(f"grid step must be positive, got {step}")
    if domain.is_torus:
        n = max(1, int(round(1.0 / step)))
        axis = np.arange(n) / n
        step = 1.0 / n
    else:
        n = max(1, math.ceil(2 * domain.R / step - 1e-9))
        axis = (np.arange(n) - (n - 1) / 2.0) * step
    mesh = np.meshgrid(*([axis] * domain.d), indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in mesh], axis=1)
    if not domain.is_torus:
        nodes = nodes[np.linalg.norm(nodes, axis=1) <= domain.R * (1 + 1e-12)]
    nodes.setflags(write=False)
    return Grid(domain, float(step), nodes)


def backproject_weights_fejer(A: FourierOperator, f_max: int) -> np.ndarray:
    """Weights ``d_l = w(n_l) / c_l`` with ``w`` the triangular Fejér spectrum.

    The operator's frequencies must be exactly the lattice ``2 pi n``,
    ``|n|_inf <= f_max``.
    """
    if not A.domain.is_torus:
        raise ConfigurationError("Fejér weights require a torus operator")
    n = A.freqs / (2 * np.pi)
    n_int = np.round(n)
    if np.any(np.abs(n - n_int) > 1e-9) or np.any(np.abs(n_int) > f_max):
        raise ConfigurationError("operator frequency lies off the Fejér lattice")
    expected = (2 * f_max + 1) ** A.domain.d
    if A.m != expected or len({tuple(r) for r in n_int.astype(int)}) != expected:
        raise ConfigurationError(
            f"operator must sample the full lattice of {expected} frequencies"
        )
    return fejer_coeff(f_max, n_int) / A.weights


def backproject_weights_gaussian(A: FourierOperator) -> np.ndarray:
    """Weights ``d_l = 1 / (m c_l)``."""
    if A.m < 1:
        raise ConfigurationError("need at least one measurement")
    return 1.0 / (A.m * A.weights)


def ideal_backprojection(y, A: FourierOperator, d, t) -> np.ndarray:
    """``z(t) = sum_l d_l y_l exp(j <omega_l, t>)`` at one or many positions.

    ``t`` has shape (..., dim); the result has the leading shape of ``t``.
    """
    y = np.asarray(y, dtype=complex).reshape(-1)
    d = np.asarray(d, dtype=float).reshape(-1)
    if y.shape[0] != A.m or d.shape[0] != A.m:
        raise ConfigurationError("measurement, weight and frequency counts disagree")
    t = np.asarray(t, dtype=float)
    lead = t.shape[:-1]
    pts = t.reshape(-1, A.domain.d)
    coef = d * y
    out = np.empty(pts.shape[0], dtype=complex)
    chunk = max(1, _CHUNK_ELEMS // max(A.m, 1))
    for start in range(0, pts.shape[0], chunk):
        block = pts[start : start + chunk]
        # Elementwise phases and row sums keep every node's rounding independent
        # of how many nodes are evaluated together.
        phase = sum(block[:, i, None] * A.freqs[None, :, i] for i in range(A.domain.d))
        out[start : start + chunk] = (np.exp(1j * phase) * coef).sum(axis=1)
    return out.reshape(lead)


def ideal_backprojection_eval(y, A: FourierOperator, d, t) -> complex:
    """Ideal back-projection at a single position."""
    t = np.asarray(t, dtype=float).reshape(A.domain.d)
    return complex(ideal_backprojection(y, A, d, t))


def backproject(y, A: FourierOperator, d, grid: Grid) -> GridBackProjection:
    """Sample the ideal back-projection on every grid node."""
    if grid.domain != A.domain:
        raise ConfigurationError("grid and operator live on different domains")
    return GridBackProjection(grid, ideal_backprojection(y, A, d, grid.nodes))


def hard_threshold(z: GridBackProjection, k_in: int) -> ParamVector:
    """Keep the ``k_in`` nodes with largest modulus as initial spikes.

    Amplitudes are the real parts of the selected grid values. Ties in modulus
    keep node order.
    """
    n = len(z.grid)
    if k_in > n:
        log.warning("k_in=%d exceeds the %d grid nodes; using %d", k_in, n, n)
        k_in = n
    order = np.argsort(-np.abs(z.values), kind="stable")[:k_in]
    return ParamVector.from_arrays(np.real(z.values[order]), z.grid.nodes[order])


def grid_energy(z: GridBackProjection) -> float:
    """Riemann-sum energy ``step^d * sum_i |z_i|^2``."""
    return float(z.grid.step**z.grid.domain.d * np.sum(np.abs(z.values) ** 2))


def initialize(y, A: FourierOperator, d, grid: Grid, k_in: int):
    """Back-project on ``grid`` and hard-threshold; returns (theta_init, back-projection)."""
    z = backproject(y, A, d, grid)
    return hard_threshold(z, k_in), z
