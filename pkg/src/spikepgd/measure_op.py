"""Weighted Fourier measurement operator and frequency sampling schemes.

The operator maps a spike train to ``m`` complex measurements

    (A x)_l = sum_i a_i c_l exp(-j <omega_l, t_i>).

Summation is direct, O(m k); no fast transforms are involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .model import Domain, SpikeTrain

# Frequencies on the torus must be 2*pi times an integer vector.
_LATTICE_TOL = 1e-9


@dataclass(frozen=True)
class FourierOperator:
    domain: Domain
    freqs: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        freqs = np.array(self.freqs, dtype=float).reshape(-1, self.domain.d)
        if self.weights is None:
            weights = np.ones(freqs.shape[0])
        else:
            weights = np.array(self.weights, dtype=float).reshape(-1)
        if weights.shape[0] != freqs.shape[0]:
            raise ConfigurationError(
                f"{freqs.shape[0]} frequencies but {weights.shape[0]} weights"
            )
        if np.any(weights == 0) or not np.all(np.isfinite(weights)):
            raise ConfigurationError("frequency weights c_l must be finite and nonzero")
        if self.domain.is_torus:
            n = freqs / (2 * np.pi)
            if np.any(np.abs(n - np.round(n)) > _LATTICE_TOL):
                raise ConfigurationError("torus frequencies must lie in 2*pi*Z^d")
        freqs.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "weights", weights)

    @property
    def m(self) -> int:
        return self.freqs.shape[0]

    def atoms(self, positions) -> np.ndarray:
        """Matrix ``E[l, i] = exp(-j <omega_l, t_i>)`` of shape (m, k)."""
        positions = np.asarray(positions, dtype=float).reshape(-1, self.domain.d)
        return np.exp(-1j * (self.freqs @ positions.T))

    def apply_arrays(self, amplitudes, positions) -> np.ndarray:
        amplitudes = np.asarray(amplitudes, dtype=float).reshape(-1)
        if amplitudes.size == 0:
            return np.zeros(self.m, dtype=complex)
        return self.weights * (self.atoms(positions) @ amplitudes)

    def __call__(self, x: SpikeTrain) -> np.ndarray:
        return apply(self, x)


def apply(A: FourierOperator, x: SpikeTrain) -> np.ndarray:
    """Measurements of ``x`` as a complex vector of length ``A.m``."""
    if x.domain != A.domain:
        raise ConfigurationError(f"operator domain {A.domain} does not match {x.domain}")
    return A.apply_arrays(x.amplitudes, x.positions)


def sample_gaussian_freqs(m: int, sigma: float, d: int, seed) -> np.ndarray:
    """Draw ``m`` i.i.d. frequencies with density proportional to exp(-sigma^2 |w|^2 / 2).

    Each coordinate is Normal(0, 1/sigma^2). ``seed`` is anything accepted by
    :func:`numpy.random.default_rng`.
    """
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, 1.0 / sigma, size=(int(m), int(d)))


def regular_torus_freqs(f_max: int, d: int) -> np.ndarray:
    """Full lattice ``{2 pi n : |n|_inf <= f_max}`` in lexicographic order."""
    if f_max < 1:
        raise ConfigurationError(f"f_max must be >= 1, got {f_max}")
    axis = np.arange(-f_max, f_max + 1)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    n = np.stack([g.reshape(-1) for g in grids], axis=1)
    return 2 * np.pi * n.astype(float)


def measure_count_rule(k: int, d: int, mu: float) -> int:
    """Number of measurements ``round(mu k d)``, at least 1."""
    if not mu > 0:
        raise ConfigurationError(f"mu must be positive, got {mu}")
    return max(1, int(round(mu * k * d)))


def gaussian_operator(domain: Domain, m: int, sigma: float, seed, weights=None) -> FourierOperator:
    return FourierOperator(domain, sample_gaussian_freqs(m, sigma, domain.d, seed), weights)


def torus_operator(domain: Domain, f_max: int, weights=None) -> FourierOperator:
    if not domain.is_torus:
        raise ConfigurationError("regular lattice sampling requires a torus domain")
    return FourierOperator(domain, regular_torus_freqs(f_max, domain.d), weights)
