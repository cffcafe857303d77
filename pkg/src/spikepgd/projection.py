"""Merge heuristic standing in for the projection onto separated spike trains.

Spikes closer than ``eps`` are fused: the surviving spike takes the summed
amplitude and the amplitude-weighted barycenter of the positions. Spikes are
visited by decreasing absolute amplitude so that a weak spike cannot drag a
strong one away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .model import Domain, ParamVector

MERGE_WEIGHT_MODES = ("pre", "post")


@dataclass(frozen=True)
class MergeEvent:
    survivor: np.ndarray
    absorbed: np.ndarray
    survivor_amplitude: float
    absorbed_amplitude: float
    merged_position: np.ndarray
    degenerate: bool = False


def merge_pass(theta: ParamVector, eps: float, domain: Domain, mode: str = "pre",
               events: list | None = None) -> ParamVector:
    """One sweep of the merge heuristic.

    Args:
        theta: spikes to merge.
        eps: separation below which two spikes are fused.
        domain: geometry used for distances and barycenters.
        mode: ``"pre"`` weights the barycenter with the survivor's amplitude
            before the merge, ``"post"`` with the already-summed amplitude.
        events: if given, one :class:`MergeEvent` is appended per fusion.

    Returns:
        The surviving spikes, in order of decreasing initial absolute amplitude.
    """
    if not eps > 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    if mode not in MERGE_WEIGHT_MODES:
        raise ConfigurationError(f"merge weight mode must be one of {MERGE_WEIGHT_MODES}")
    a0 = theta.amplitudes
    t0 = theta.positions(domain.d)
    order = np.argsort(-np.abs(a0), kind="stable")
    amps = [float(v) for v in a0[order]]
    pos = [row.copy() for row in t0[order]]
    alive = [True] * len(amps)

    for i in range(len(amps)):
        if not alive[i]:
            continue
        for j in range(i + 1, len(amps)):
            if not alive[j]:
                continue
            delta = domain.displacement(pos[j], pos[i])
            if np.linalg.norm(delta) >= eps:
                continue
            a_i, a_j = amps[i], amps[j]
            t_j = pos[i] + delta
            w_i = abs(a_i + a_j) if mode == "post" else abs(a_i)
            w_j = abs(a_j)
            degenerate = w_i + w_j == 0
            if degenerate:
                merged = 0.5 * (pos[i] + t_j)
            else:
                merged = (w_i * pos[i] + w_j * t_j) / (w_i + w_j)
            merged = domain.wrap(merged)
            if events is not None:
                events.append(MergeEvent(pos[i].copy(), pos[j].copy(), a_i, a_j,
                                         merged.copy(), degenerate))
            amps[i] = a_i + a_j
            pos[i] = merged
            alive[j] = False

    keep = [i for i in range(len(amps)) if alive[i]]
    if not keep:
        return ParamVector(0, np.zeros(0))
    return ParamVector.from_arrays([amps[i] for i in keep], np.array([pos[i] for i in keep]))


def project_separation(theta: ParamVector, eps: float, domain: Domain, mode: str = "pre",
                       events: list | None = None) -> ParamVector:
    """Repeat :func:`merge_pass` until no pair is closer than ``eps``."""
    while True:
        before = theta.k
        theta = merge_pass(theta, eps, domain, mode, events)
        if theta.k == before:
            return theta
