"""Instance generation, the end-to-end pipeline, and the on-disk formats.

Instances and reports are JSON documents tagged with a schema version.
Plot data (grid back-projection, trajectories) is written as flat CSV.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError, InfeasiblePackingError, SolverAbort
from .initializer import (
    GridBackProjection,
    backproject,
    backproject_weights_fejer,
    backproject_weights_gaussian,
    hard_threshold,
    make_grid,
)
from .kernels import Kernel, default_eval_sigma, kernel_distance
from .measure_op import FourierOperator, apply, measure_count_rule, regular_torus_freqs, sample_gaussian_freqs
from .model import Domain, ParamVector, SpikeTrain, is_separated, phi
from .optimizer import SolverConfig, SolverTrace, objective, solve
from .oracle import match_spikes

INSTANCE_SCHEMA = "spikepgd.instance/1"
REPORT_SCHEMA = "spikepgd.report/1"

MAX_PLACEMENT_TRIES = 1_000_000
# Width of the Gaussian frequency distribution relative to eps.
DEFAULT_SIGMA_FACTOR = 0.6
DEFAULT_MU = 10.0
DEFAULT_RADIUS = 0.5


@dataclass
class Instance:
    domain: Domain
    eps: float
    truth: SpikeTrain
    sampling: dict
    weights: np.ndarray
    y: np.ndarray
    noise: dict = field(default_factory=lambda: {"energy": 0.0, "seed": None})
    generator: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.truth)

    def operator(self) -> FourierOperator:
        return FourierOperator(self.domain, inst_freqs(self), self.weights)

    def backprojection_weights(self, A: FourierOperator) -> np.ndarray:
        if self.sampling["scheme"] == "torus_regular":
            return backproject_weights_fejer(A, self.sampling["f_max"])
        return backproject_weights_gaussian(A)

    def kernel_peak(self) -> float:
        """Value at 0 of the kernel the back-projection approximates."""
        if self.sampling["scheme"] == "torus_regular":
            return Kernel.fejer(self.sampling["f_max"], self.domain.d).peak
        return 1.0

    def to_dict(self) -> dict:
        return {
            "schema": INSTANCE_SCHEMA,
            "domain": self.domain.to_dict(),
            "eps": self.eps,
            "spikes": _spikes_to_dict(self.truth),
            "sampling": self.sampling,
            "weights": self.weights.tolist(),
            "measurements": [[float(v.real), float(v.imag)] for v in self.y],
            "noise": self.noise,
            "generator": self.generator,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        if data.get("schema") != INSTANCE_SCHEMA:
            raise ConfigurationError(f"unsupported instance schema {data.get('schema')!r}")
        domain = Domain.from_dict(data["domain"])
        truth = _spikes_from_dict(data["spikes"], domain)
        eps = float(data["eps"])
        y = np.array([complex(re, im) for re, im in data["measurements"]])
        inst = cls(domain, eps, truth, dict(data["sampling"]),
                   np.asarray(data["weights"], dtype=float), y,
                   dict(data.get("noise", {})), dict(data.get("generator", {})))
        if y.shape[0] != inst.weights.shape[0]:
            raise ConfigurationError("measurement and weight counts differ")
        if not np.all(np.isfinite(y)):
            raise ConfigurationError("measurements must be finite")
        if len(truth) > 1 and not is_separated(truth, eps):
            raise ConfigurationError("declared ground truth is not eps-separated")
        return inst


def _spikes_to_dict(x: SpikeTrain) -> dict:
    return {"amplitudes": x.amplitudes.tolist(), "positions": x.positions.tolist()}


def _spikes_from_dict(data: dict, domain: Domain) -> SpikeTrain:
    return SpikeTrain(domain, data["amplitudes"], np.asarray(data["positions"], dtype=float).reshape(-1, domain.d))


def save_json(obj: dict, path) -> None:
    text = json.dumps(obj, indent=1)
    if path is None or str(path) == "-":
        print(text)
    else:
        Path(path).write_text(text + "\n")


def load_instance(path) -> Instance:
    return Instance.from_dict(json.loads(Path(path).read_text()))


def sample_separated_positions(rng: np.random.Generator, k: int, eps: float, domain: Domain,
                               max_tries: int = MAX_PLACEMENT_TRIES) -> np.ndarray:
    """Rejection-sample ``k`` pairwise eps-separated positions uniformly in the domain."""
    pts = np.empty((0, domain.d))
    tries = 0
    while pts.shape[0] < k:
        if tries >= max_tries:
            raise InfeasiblePackingError(
                f"placed only {pts.shape[0]} of {k} spikes at separation {eps} "
                f"after {max_tries} tries"
            )
        tries += 1
        if domain.is_torus:
            p = rng.uniform(0.0, 1.0, domain.d)
        else:
            p = rng.uniform(-domain.R, domain.R, domain.d)
            if np.linalg.norm(p) > domain.R:
                continue
        if pts.shape[0] and np.min(domain.distance(pts, p)) < eps:
            continue
        pts = np.vstack([pts, p])
    return pts


def generate_instance(k: int, d: int, eps: float, scheme: str = "gaussian", *, m: int | None = None,
                      mu: float | None = None, sigma: float | None = None, f_max: int | None = None,
                      R: float = DEFAULT_RADIUS, seed: int = 0, amp_min: float = 0.5,
                      amp_max: float = 1.5, random_sign: bool = True,
                      noise_energy: float = 0.0) -> Instance:
    """Random eps-separated spikes and their (optionally noisy) measurements.

    Positions, amplitudes, frequencies and noise each get an independent
    stream derived from ``seed``.
    """
    if k < 1 or not eps > 0:
        raise ConfigurationError("need k >= 1 and eps > 0")
    if not 0 <= amp_min <= amp_max:
        raise ConfigurationError("amplitude range must satisfy 0 <= amp_min <= amp_max")
    if noise_energy < 0:
        raise ConfigurationError("noise energy must be nonnegative")
    spike_ss, freq_ss, noise_ss = np.random.SeedSequence(seed).spawn(3)
    freq_seed = int(freq_ss.generate_state(1)[0])
    noise_seed = int(noise_ss.generate_state(1)[0])

    if scheme == "gaussian":
        domain = Domain.euclidean(d, R)
        if m is None:
            m = measure_count_rule(k, d, DEFAULT_MU if mu is None else mu)
        if sigma is None:
            sigma = DEFAULT_SIGMA_FACTOR * eps
        sampling = {"scheme": "gaussian", "sigma": float(sigma), "m": int(m), "seed": freq_seed}
    elif scheme == "torus_regular":
        domain = Domain.torus(d)
        if f_max is None:
            f_max = max(1, math.ceil(2.0 / eps))
        sampling = {"scheme": "torus_regular", "f_max": int(f_max)}
    else:
        raise ConfigurationError(f"unknown sampling scheme {scheme!r}")

    rng = np.random.default_rng(spike_ss)
    positions = sample_separated_positions(rng, k, eps, domain)
    amps = rng.uniform(amp_min, amp_max, k)
    if random_sign:
        amps = amps * rng.choice([-1.0, 1.0], k)
    truth = SpikeTrain(domain, amps, positions)

    inst = Instance(domain, float(eps), truth, sampling, np.ones(0), np.zeros(0, complex),
                    {"energy": float(noise_energy), "seed": noise_seed},
                    {"seed": seed, "amp_min": amp_min, "amp_max": amp_max, "random_sign": random_sign})
    A = FourierOperator(domain, inst_freqs(inst))
    y = apply(A, truth)
    if noise_energy > 0:
        nrng = np.random.default_rng(noise_seed)
        e = nrng.normal(size=A.m) + 1j * nrng.normal(size=A.m)
        y = y + noise_energy * e / np.linalg.norm(e)
    inst.weights = A.weights.copy()
    inst.y = y
    return inst


def inst_freqs(inst: Instance) -> np.ndarray:
    s = inst.sampling
    if s["scheme"] == "gaussian":
        return sample_gaussian_freqs(s["m"], s["sigma"], inst.domain.d, s["seed"])
    if s["scheme"] == "torus_regular":
        return regular_torus_freqs(s["f_max"], inst.domain.d)
    raise ConfigurationError(f"unknown sampling scheme {s['scheme']!r}")


@dataclass
class RunResult:
    theta: ParamVector
    trace: SolverTrace
    theta_init: ParamVector
    backprojection: GridBackProjection
    config: SolverConfig
    eps_g: float
    wall_time: float
    aborted: str | None = None


def run_pipeline(inst: Instance, cfg: SolverConfig, eps_g: float | None = None) -> RunResult:
    """Back-project on a grid, hard-threshold to ``cfg.k_in`` spikes, then descend."""
    A = inst.operator()
    eps_g = cfg.eps if eps_g is None else eps_g
    start = time.perf_counter()
    z = backproject(inst.y, A, inst.backprojection_weights(A), make_grid(inst.domain, eps_g))
    theta0 = hard_threshold(z, cfg.k_in)
    peak = inst.kernel_peak()
    if peak != 1.0:
        # Fejer back-projection peaks at (f_max+1)^d times the amplitude.
        theta0 = ParamVector.from_arrays(theta0.amplitudes / peak, theta0.positions(inst.domain.d))
    aborted = None
    try:
        theta, trace = solve(A, inst.y, theta0, cfg)
    except SolverAbort as exc:
        trace, aborted = exc.trace, str(exc)
        trace.stop_reason = "aborted"
        # Report the last finite state rather than the one that failed.
        snaps = [r.theta for r in trace.records if r.theta is not None]
        theta = snaps[-1] if snaps else theta0
    return RunResult(theta, trace, theta0, z, cfg, eps_g, time.perf_counter() - start, aborted)


def evaluate(estimate: SpikeTrain, inst: Instance, kernel_sigma: float | None = None,
             radius: float | None = None) -> dict:
    """Matching metrics, kernel distance and objective value of an estimate."""
    sigma = default_eval_sigma(inst.eps) if kernel_sigma is None else kernel_sigma
    radius = inst.eps / 2 if radius is None else radius
    match = match_spikes(estimate, inst.truth, radius)
    K = Kernel.gaussian(sigma, inst.domain.d)
    A = inst.operator()
    return {
        "k_true": inst.k,
        "k_est": len(estimate),
        "matched": match.matched,
        "match_radius": radius,
        "max_pos_err": match.max_pos_err,
        "max_amp_err": match.max_amp_err,
        "kernel_sigma": sigma,
        "kernel_distance": kernel_distance(estimate, inst.truth, K),
        "truth_kernel_norm": kernel_distance(inst.truth, SpikeTrain.empty(inst.domain), K),
        "g_final": objective(_flat(estimate), A, inst.y),
    }


def _flat(x: SpikeTrain) -> ParamVector:
    return ParamVector.from_arrays(x.amplitudes, x.positions)


def build_report(inst: Instance, result: RunResult) -> dict:
    estimate = phi(result.theta, inst.domain)
    trace = result.trace
    cfg = asdict(result.config)
    cfg.pop("keep_snapshots", None)
    if not math.isfinite(cfg["project_after"]):
        cfg["project_after"] = None
    return {
        "schema": REPORT_SCHEMA,
        "status": "aborted" if result.aborted else "ok",
        "abort_reason": result.aborted,
        "config": cfg,
        "eps_g": result.eps_g,
        "spikes": _spikes_to_dict(estimate),
        "iterations": len(trace),
        "stop_reason": trace.stop_reason,
        "g_history": trace.g_history,
        "merge_events": [
            {"iter": it, "survivor": e.survivor.tolist(), "absorbed": e.absorbed.tolist(),
             "survivor_amplitude": e.survivor_amplitude, "absorbed_amplitude": e.absorbed_amplitude,
             "merged_position": e.merged_position.tolist(), "degenerate": e.degenerate}
            for it, e in trace.merge_events
        ],
        "outside_domain": int(np.sum(~estimate.in_domain())),
        "metrics": evaluate(estimate, inst),
        "wall_time": result.wall_time,
    }


def report_estimate(report: dict, domain: Domain) -> SpikeTrain:
    if report.get("schema") != REPORT_SCHEMA:
        raise ConfigurationError(f"unsupported report schema {report.get('schema')!r}")
    return _spikes_from_dict(report["spikes"], domain)


def write_backprojection_csv(z: GridBackProjection, path) -> None:
    d = z.grid.domain.d
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"t{i + 1}" for i in range(d)] + ["re", "im", "modulus"])
        for node, v in zip(z.grid.nodes, z.values):
            w.writerow([repr(float(c)) for c in node] + [repr(float(v.real)), repr(float(v.imag)), repr(float(abs(v)))])


def _spike_rows(writer, it, theta: ParamVector, d: int):
    for i, (a, t) in enumerate(zip(theta.amplitudes, theta.positions(d))):
        writer.writerow([it, i, repr(float(a))] + [repr(float(c)) for c in t])


def write_trajectory_csv(trace: SolverTrace, d: int, path) -> int:
    """One row per spike per iteration; returns the number of data rows."""
    rows = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "spike", "amplitude"] + [f"t{i + 1}" for i in range(d)])
        for rec in trace.records:
            if rec.theta is None:
                continue
            _spike_rows(w, rec.iter, rec.theta, d)
            rows += rec.theta.k
    return rows


def write_spikes_csv(theta: ParamVector, d: int, path, it: int = -1) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "spike", "amplitude"] + [f"t{i + 1}" for i in range(d)])
        _spike_rows(w, it, theta, d)
