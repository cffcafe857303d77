"""Least-squares objective over spike parameters and the projected descent.

Each outer iteration takes a backtracking gradient step on the amplitudes,
then one on the positions, and from ``project_after`` on fuses spikes that
are closer than ``eps``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, SolverAbort
from .measure_op import FourierOperator
from .model import ParamVector
from .projection import MERGE_WEIGHT_MODES, project_separation

log = logging.getLogger(__name__)

AMPLITUDES = "amplitudes"
POSITIONS = "positions"

# Amplitudes this small for PRUNE_PATIENCE consecutive iterations are dropped.
PRUNE_THRESHOLD = 1e-12
PRUNE_PATIENCE = 10
# Window (in iterations) of the relative-decrease stopping rule.
REL_WINDOW = 10


@dataclass
class SolverConfig:
    eps: float
    k_in: int
    max_iters: int = 500
    project_after: float = 20
    ls_shrink: float = 0.5
    ls_grow: float = 2.0
    ls_max_tries: int = 30
    tol_g_abs: float | None = None
    tol_g_rel: float = 1e-9
    merge_weight_mode: str = "pre"
    ls_refine: bool = True
    keep_snapshots: bool = True

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigurationError("eps must be positive")
        if self.k_in < 1 or self.max_iters < 1 or self.ls_max_tries < 1:
            raise ConfigurationError("k_in, max_iters and ls_max_tries must be positive")
        if self.project_after < 0:
            raise ConfigurationError("project_after must be nonnegative")
        if not 0 < self.ls_shrink < 1:
            raise ConfigurationError("ls_shrink must lie in (0, 1)")
        if not self.ls_grow > 1:
            raise ConfigurationError("ls_grow must exceed 1")
        if self.tol_g_abs is not None and self.tol_g_abs < 0:
            raise ConfigurationError("tol_g_abs must be nonnegative")
        if self.tol_g_rel < 0:
            raise ConfigurationError("tol_g_rel must be nonnegative")
        if self.merge_weight_mode not in MERGE_WEIGHT_MODES:
            raise ConfigurationError(f"merge_weight_mode must be one of {MERGE_WEIGHT_MODES}")

    @property
    def projects(self) -> bool:
        return math.isfinite(self.project_after)

    def abs_tolerance(self, y) -> float:
        if self.tol_g_abs is not None:
            return self.tol_g_abs
        return 1e-10 * float(np.vdot(y, y).real)


@dataclass
class IterationRecord:
    iter: int
    g_start: float
    g_amplitudes: float
    g_positions: float
    g: float
    n_spikes: int
    step_amplitudes: float
    step_positions: float
    merges: int = 0
    degenerate_merges: int = 0
    pruned: int = 0
    theta: ParamVector | None = None


@dataclass
class SolverTrace:
    records: list = field(default_factory=list)
    stop_reason: str = ""
    merge_events: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def g_history(self) -> list:
        return [r.g for r in self.records]

    def first_iter_below(self, level: float) -> int | None:
        """Index of the first iteration ending with ``g <= level``."""
        for r in self.records:
            if r.g <= level:
                return r.iter
        return None


def _split(theta: ParamVector, d: int):
    return theta.amplitudes, theta.positions(d)


def residual(theta: ParamVector, A: FourierOperator, y) -> np.ndarray:
    a, t = _split(theta, A.domain.d)
    return A.apply_arrays(a, t) - y


def objective(theta: ParamVector, A: FourierOperator, y) -> float:
    """``g(theta) = |A phi(theta) - y|^2``."""
    r = residual(theta, A, np.asarray(y, dtype=complex))
    return float(np.vdot(r, r).real)


def gradient(theta: ParamVector, A: FourierOperator, y) -> np.ndarray:
    """Analytic gradient of :func:`objective`, laid out like ``theta``."""
    a, t = _split(theta, A.domain.d)
    if theta.k == 0:
        return np.zeros(0)
    E = A.atoms(t)
    r = A.weights * (E @ a) - np.asarray(y, dtype=complex)
    M = (np.conj(r) * A.weights)[:, None] * E
    grad_a = 2.0 * np.real(M.sum(axis=0))
    grad_t = 2.0 * a[:, None] * np.real(-1j * (M.T @ A.freqs))
    return np.concatenate([grad_a, grad_t.reshape(-1)])


def _block_mask(theta: ParamVector, block: str) -> np.ndarray:
    mask = np.zeros(theta.theta.size, dtype=bool)
    if block == AMPLITUDES:
        mask[: theta.k] = True
    elif block == POSITIONS:
        mask[theta.k :] = True
    else:
        raise ConfigurationError(f"unknown block {block!r}")
    return mask


def line_search(theta: ParamVector, block: str, grad, A: FourierOperator, y,
                cfg: SolverConfig, initial_step: float = 1.0, g0: float | None = None):
    """Backtracking search along ``-grad`` restricted to one block.

    Starts at ``initial_step`` and multiplies by ``cfg.ls_shrink`` until the
    objective strictly decreases. Returns ``(step, theta_new, g_new)``; a step
    of 0 means no decrease was found and ``theta`` is returned unchanged.
    """
    if g0 is None:
        g0 = objective(theta, A, y)
    direction = np.where(_block_mask(theta, block), np.asarray(grad, dtype=float), 0.0)
    if not np.any(direction):
        return 0.0, theta, g0
    domain = A.domain
    step = initial_step
    for _ in range(cfg.ls_max_tries):
        cand = theta.theta - step * direction
        if domain.is_torus and block == POSITIONS:
            cand[theta.k :] = np.mod(cand[theta.k :], 1.0)
        new = ParamVector(theta.k, cand)
        g_new = objective(new, A, y)
        if g_new < g0:
            break
        step *= cfg.ls_shrink
    else:
        return 0.0, theta, g0
    if not cfg.ls_refine:
        return step, new, g_new
    tries = _
    while tries + 1 < cfg.ls_max_tries:
        tries += 1
        trial_step = step * cfg.ls_shrink
        cand = theta.theta - trial_step * direction
        if domain.is_torus and block == POSITIONS:
            cand[theta.k :] = np.mod(cand[theta.k :], 1.0)
        trial = ParamVector(theta.k, cand)
        g_trial = objective(trial, A, y)
        if not g_trial < g_new:
            break
        step, new, g_new = trial_step, trial, g_trial
    return step, new, g_new


def _prune(theta: ParamVector, counters: np.ndarray, d: int):
    small = np.abs(theta.amplitudes) < PRUNE_THRESHOLD
    counters = np.where(small, counters + 1, 0)
    drop = counters >= PRUNE_PATIENCE
    if not np.any(drop):
        return theta, counters, 0
    a, t = _split(theta, d)
    keep = ~drop
    log.info("pruning %d dead spikes", int(drop.sum()))
    return ParamVector.from_arrays(a[keep], t[keep]), counters[keep], int(drop.sum())


def solve(A: FourierOperator, y, theta_init: ParamVector, cfg: SolverConfig):
    """Alternating projected gradient descent from ``theta_init``.

    Returns ``(theta_final, trace)``. Raises :class:`SolverAbort` carrying the
    partial trace when the objective becomes non-finite.
    """
    y = np.asarray(y, dtype=complex)
    d = A.domain.d
    theta = theta_init
    theta.positions(d)  # shape check
    trace = SolverTrace()
    tol_abs = cfg.abs_tolerance(y)
    g = objective(theta, A, y)
    if not math.isfinite(g):
        raise SolverAbort("initial objective is not finite", trace, theta)
    if g <= tol_abs:
        trace.stop_reason = "tol_g_abs"
        return theta, trace

    last_step = {AMPLITUDES: None, POSITIONS: None}
    counters = np.zeros(theta.k, dtype=int)
    for it in range(cfg.max_iters):
        g_start = g
        steps = {}
        g_block = {}
        for block in (AMPLITUDES, POSITIONS):
            grad = gradient(theta, A, y)
            init = 1.0 if last_step[block] is None else last_step[block] * cfg.ls_grow
            step, theta, g_new = line_search(theta, block, grad, A, y, cfg, init, g)
            if not math.isfinite(g_new):
                raise SolverAbort(f"objective became non-finite at iteration {it}", trace, theta)
            if g_new > g:
                raise AssertionError("line search accepted an increasing step")
            if step > 0:
                last_step[block] = step
            steps[block] = step
            g = g_new
            g_block[block] = g

        merges = degenerate = 0
        if cfg.projects and it >= cfg.project_after:
            events = []
            k_before = theta.k
            theta = project_separation(theta, cfg.eps, A.domain, cfg.merge_weight_mode, events)
            if theta.k != k_before:
                # Merged spikes start fresh; surviving order changes anyway.
                counters = np.zeros(theta.k, dtype=int)
                g = objective(theta, A, y)
            merges = len(events)
            degenerate = sum(e.degenerate for e in events)
            trace.merge_events.extend((it, e) for e in events)
            if not math.isfinite(g):
                raise SolverAbort(f"objective became non-finite at iteration {it}", trace, theta)

        theta, counters, pruned = _prune(theta, counters, d)
        if pruned:
            g = objective(theta, A, y)

        trace.records.append(IterationRecord(
            iter=it, g_start=g_start, g_amplitudes=g_block[AMPLITUDES],
            g_positions=g_block[POSITIONS], g=g, n_spikes=theta.k,
            step_amplitudes=steps[AMPLITUDES], step_positions=steps[POSITIONS],
            merges=merges, degenerate_merges=degenerate, pruned=pruned,
            theta=theta if cfg.keep_snapshots else None,
        ))

        if g <= tol_abs:
            trace.stop_reason = "tol_g_abs"
            break
        if steps[AMPLITUDES] == 0 and steps[POSITIONS] == 0 and merges == 0 and not pruned:
            trace.stop_reason = "no_progress"
            break
        if len(trace.records) > REL_WINDOW:
            g_old = trace.records[-1 - REL_WINDOW].g
            if g_old > 0 and abs(g_old - g) / g_old < cfg.tol_g_rel:
                trace.stop_reason = "tol_g_rel"
                break
    else:
        trace.stop_reason = "max_iters"
    return theta, trace
