"""Fejér and Gaussian kernels and the kernel norm they induce on spike trains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .model import Domain, SpikeTrain

# Below this |sin(pi tau)| the closed form is replaced by the coefficient sum.
_SIN_FLOOR = 1e-6


def eval_gaussian(sigma: float, t) -> np.ndarray:
    """exp(-|t|^2 / (2 sigma^2)); the last axis of ``t`` is the coordinate axis."""
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.exp(-np.sum(t * t, axis=-1) / (2.0 * sigma**2))


def fejer_coeff(f_max: int, n) -> float:
    """Triangular spectrum ``prod_axes (1 - |n_axis| / (f_max + 1))``, 0 off the support."""
    n = np.atleast_1d(np.asarray(n))
    w = 1.0 - np.abs(n) / (f_max + 1.0)
    w = np.where(np.abs(n) <= f_max, w, 0.0)
    return np.prod(w, axis=-1)


def _fejer_1d_closed(f_max: int, tau: np.ndarray) -> np.ndarray:
    tau = tau - np.round(tau)
    s = np.sin(np.pi * tau)
    small = np.abs(s) < _SIN_FLOOR
    safe = np.where(small, 1.0, s)
    out = (np.sin((f_max + 1) * np.pi * tau) / safe) ** 2 / (f_max + 1)
    if np.any(small):
        out = np.where(small, _fejer_1d_sum(f_max, tau), out)
    return out


def _fejer_1d_sum(f_max: int, tau: np.ndarray) -> np.ndarray:
    tau = tau - np.round(tau)
    n = np.arange(-f_max, f_max + 1)
    w = 1.0 - np.abs(n) / (f_max + 1.0)
    return np.real(np.exp(2j * np.pi * np.multiply.outer(tau, n)) @ w)


def eval_fejer(f_max: int, t) -> np.ndarray:
    """Tensor-product Fejér kernel on the torus, normalised so that K(0) = (f_max+1)^d."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.prod(_fejer_1d_closed(f_max, t), axis=-1)


def eval_fejer_sum(f_max: int, t) -> np.ndarray:
    """Same kernel evaluated as its explicit trigonometric sum."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.prod(_fejer_1d_sum(f_max, t), axis=-1)


@dataclass(frozen=True)
class Kernel:
    """A translation-invariant kernel: ``kind`` is ``"fejer"`` or ``"gaussian"``."""

    kind: str
    param: float
    d: int

    def __post_init__(self):
        if self.kind not in ("fejer", "gaussian"):
            raise ConfigurationError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "fejer" and (int(self.param) != self.param or self.param < 1):
            raise ConfigurationError("Fejér kernel needs an integer f_max >= 1")
        if self.kind == "gaussian" and not self.param > 0:
            raise ConfigurationError("Gaussian kernel needs sigma > 0")

    @classmethod
    def fejer(cls, f_max: int, d: int) -> "Kernel":
        return cls("fejer", int(f_max), d)

    @classmethod
    def gaussian(cls, sigma: float, d: int) -> "Kernel":
        return cls("gaussian", float(sigma), d)

    def __call__(self, t) -> np.ndarray:
        if self.kind == "fejer":
            return eval_fejer(int(self.param), t)
        return eval_gaussian(self.param, t)

    @property
    def peak(self) -> float:
        if self.kind == "fejer":
            return float((self.param + 1) ** self.d)
        return 1.0

    def check_domain(self, domain: Domain):
        if domain.d != self.d:
            raise ConfigurationError(f"kernel dimension {self.d} vs domain dimension {domain.d}")
        if self.kind == "fejer" and not domain.is_torus:
            raise ConfigurationError("the Fejér kernel is defined on the torus only")


def gram(x: SpikeTrain, K: Kernel) -> np.ndarray:
    K.check_domain(x.domain)
    delta = x.domain.displacement(x.positions[:, None, :], x.positions[None, :, :])
    return K(delta)


def kernel_norm_sq(x: SpikeTrain, K: Kernel) -> float:
    """``sum_{i,j} a_i a_j K(t_i - t_j)``."""
    K.check_domain(x.domain)
    if len(x) == 0:
        return 0.0
    a = x.amplitudes
    return float(a @ gram(x, K) @ a)


def _combine_coincident(x: SpikeTrain) -> SpikeTrain:
    """Sum the amplitudes of Diracs sharing a position, dropping exact zeros."""
    if len(x) == 0:
        return x
    pos, inv = np.unique(x.positions, axis=0, return_inverse=True)
    amps = np.zeros(pos.shape[0])
    np.add.at(amps, inv.ravel(), x.amplitudes)
    keep = amps != 0.0
    return SpikeTrain(x.domain, amps[keep], pos[keep])


def kernel_distance(x1: SpikeTrain, x2: SpikeTrain, K: Kernel) -> float:
    """Kernel-norm distance between two spike trains (clamped at zero before the root).

    Coincident atoms are combined first so identical trains give exactly 0.
    """
    return float(np.sqrt(max(0.0, kernel_norm_sq(_combine_coincident(x1 - x2), K))))


def default_eval_sigma(eps: float) -> float:
    """Gaussian evaluation-kernel width used for reporting: eps / 5."""
    return eps / 5.0
