"""Brute-force reference computations used to validate the fast paths.

These run at desk scale only. None of them share code with the routine they
check beyond the public data types.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .initializer import backproject_weights_gaussian, ideal_backprojection
from .measure_op import FourierOperator, apply, sample_gaussian_freqs
from .model import Domain, ParamVector, SpikeTrain
from .optimizer import objective

_CHUNK_ELEMS = 4_000_000


def fd_gradient(theta: ParamVector, A: FourierOperator, y, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of the objective, one coordinate at a time."""
    if not h > 0:
        raise ValueError("h must be positive")
    base = np.array(theta.theta, dtype=float)
    out = np.empty_like(base)
    for i in range(base.size):
        e = np.zeros_like(base)
        e[i] = h
        g_plus = objective(ParamVector(theta.k, base + e), A, y)
        g_minus = objective(ParamVector(theta.k, base - e), A, y)
        out[i] = (g_plus - g_minus) / (2 * h)
    return out


class MCStats(NamedTuple):
    mean: np.ndarray
    var: np.ndarray
    stderr_mean: np.ndarray
    stderr_var: np.ndarray


def mc_backprojection_stats(x0: SpikeTrain, sigma: float, m: int, trials: int, t,
                            seed=0) -> MCStats:
    """Monte Carlo moments of the ideal back-projection over frequency draws.

    Each trial draws ``m`` Gaussian frequencies, measures ``x0`` and evaluates
    the back-projection with weights ``1 / (m c_l)`` at ``t`` (one position or
    an array of positions). Returns the sample mean, the unbiased sample
    variance ``E|z - Ez|^2`` and their standard errors.
    """
    if trials < 100:
        raise ValueError("at least 100 trials are required")
    domain = x0.domain
    t = np.asarray(t, dtype=float)
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(trials):
        A = FourierOperator(domain, sample_gaussian_freqs(m, sigma, domain.d, rng))
        y = apply(A, x0)
        samples.append(ideal_backprojection(y, A, backproject_weights_gaussian(A), t))
    z = np.array(samples)
    mean = z.mean(axis=0)
    dev2 = np.abs(z - mean) ** 2
    var = dev2.sum(axis=0) / (trials - 1)
    stderr_mean = np.sqrt(var / trials)
    stderr_var = dev2.std(axis=0, ddof=1) / np.sqrt(trials)
    return MCStats(mean, var, stderr_mean, stderr_var)


def quadrature_nodes(domain: Domain, quad_step: float) -> np.ndarray:
    """Cell midpoints of a ``quad_step`` lattice restricted to the domain."""
    if domain.is_torus:
        n = int(round(1.0 / quad_step))
        axis = (np.arange(n) + 0.5) / n
    else:
        n = int(np.ceil(2 * domain.R / quad_step))
        axis = -domain.R + (np.arange(n) + 0.5) * quad_step
    mesh = np.meshgrid(*([axis] * domain.d), indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in mesh], axis=1)
    if not domain.is_torus:
        nodes = nodes[np.linalg.norm(nodes, axis=1) <= domain.R]
    return nodes


def l2_norm_fine(y, A: FourierOperator, d, domain: Domain, quad_step: float) -> float:
    """Squared L2 norm of the ideal back-projection over the domain by midpoint quadrature."""
    y = np.asarray(y, dtype=complex)
    coef = np.asarray(d, dtype=float) * y
    if not np.any(coef):
        return 0.0
    nodes = quadrature_nodes(domain, quad_step)
    cell = (1.0 / int(round(1.0 / quad_step)) if domain.is_torus else quad_step) ** domain.d
    total = 0.0
    chunk = max(1, _CHUNK_ELEMS // A.m)
    for start in range(0, nodes.shape[0], chunk):
        block = nodes[start : start + chunk]
        phase = block @ A.freqs.T
        z = np.cos(phase) @ coef + 1j * (np.sin(phase) @ coef)
        total += float(np.sum(np.abs(z) ** 2))
    return total * cell


class MatchResult(NamedTuple):
    matched: int
    max_pos_err: float
    max_amp_err: float
    pairs: list


def match_spikes(estimate: SpikeTrain, truth: SpikeTrain, radius: float) -> MatchResult:
    """Greedy matching of truth spikes (strongest first) to the nearest unused estimate.

    Only estimates within ``radius`` count. Errors are the worst over matched
    pairs and are 0 when nothing is matched.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    domain = truth.domain
    used = np.zeros(len(estimate), dtype=bool)
    pairs = []
    pos_err = amp_err = 0.0
    for i in np.argsort(-np.abs(truth.amplitudes), kind="stable"):
        if not len(estimate):
            break
        dist = domain.distance(estimate.positions, truth.positions[i])
        dist = np.where(used, np.inf, dist)
        j = int(np.argmin(dist))
        if dist[j] <= radius:
            used[j] = True
            pairs.append((int(i), j))
            pos_err = max(pos_err, float(dist[j]))
            amp_err = max(amp_err, abs(float(estimate.amplitudes[j] - truth.amplitudes[i])))
    return MatchResult(len(pairs), pos_err, amp_err, pairs)
