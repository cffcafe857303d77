"""Domains, spike trains and the flat (amplitudes, positions) parametrization."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, MalformedParameterError, UndefinedValueError


class DomainKind(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    TORUS = "torus"


@dataclass(frozen=True)
class Domain:
    """Ambient space of the spike positions.

    ``Euclidean`` positions live in the closed ball of radius ``R`` centred at
    the origin. ``Torus`` positions live in ``[0, 1)^d`` with period 1 per axis;
    ``R`` is ignored there.
    """

    kind: DomainKind
    d: int
    R: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        if int(self.d) != self.d or self.d < 1:
            raise ConfigurationError(f"dimension must be a positive integer, got {self.d}")
        object.__setattr__(self, "d", int(self.d))
        if self.kind is DomainKind.EUCLIDEAN and not self.R > 0:
            raise ConfigurationError(f"radius must be positive, got {self.R}")

    @classmethod
    def euclidean(cls, d: int, R: float = 1.0) -> "Domain":
        return cls(DomainKind.EUCLIDEAN, d, R)

    @classmethod
    def torus(cls, d: int) -> "Domain":
        return cls(DomainKind.TORUS, d, 1.0)

    @property
    def is_torus(self) -> bool:
        return self.kind is DomainKind.TORUS

    def displacement(self, s, t) -> np.ndarray:
        """Shortest displacement ``s - t`` (wrapped per axis on the torus).

        Broadcasts over leading axes; the last axis has length ``d``.
        """
        delta = np.asarray(s, dtype=float) - np.asarray(t, dtype=float)
        if self.is_torus:
            delta = delta - np.round(delta)
        return delta

    def distance(self, s, t) -> np.ndarray:
        return np.linalg.norm(self.displacement(s, t), axis=-1)

    def pairwise_distances(self, positions) -> np.ndarray:
        positions = np.asarray(positions, dtype=float).reshape(-1, self.d)
        return self.distance(positions[:, None, :], positions[None, :, :])

    def contains(self, positions) -> np.ndarray:
        positions = np.asarray(positions, dtype=float).reshape(-1, self.d)
        if self.is_torus:
            return np.all((positions >= 0.0) & (positions < 1.0), axis=1)
        return np.linalg.norm(positions, axis=1) <= self.R

    def wrap(self, positions) -> np.ndarray:
        """Canonical representative of positions (identity on Euclidean space)."""
        positions = np.asarray(positions, dtype=float)
        if self.is_torus:
            return np.mod(positions, 1.0)
        return positions

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "d": self.d}
        if not self.is_torus:
            out["R"] = self.R
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Domain":
        return cls(DomainKind(data["kind"]), int(data["d"]), float(data.get("R", 1.0)))


@dataclass(frozen=True)
class SpikeTrain:
    """Finite signed sum of Diracs ``sum_i a_i delta_{t_i}``.

    Positions are stored as a ``(k, d)`` array in spike order. Membership of
    positions in the domain is *not* enforced here: iterates of the descent
    may leave the ball, and that is reported rather than corrected.
    """

    domain: Domain
    amplitudes: np.ndarray
    positions: np.ndarray = field(default=None)

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=float).reshape(-1)
        if self.positions is None:
            t = np.zeros((0, self.domain.d))
        else:
            t = np.array(self.positions, dtype=float).reshape(-1, self.domain.d)
        if t.shape[0] != a.shape[0]:
            raise ConfigurationError(
                f"{a.shape[0]} amplitudes but {t.shape[0]} positions"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(t))):
            raise ConfigurationError("spike amplitudes and positions must be finite")
        a.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "positions", t)

    @classmethod
    def empty(cls, domain: Domain) -> "SpikeTrain":
        return cls(domain, np.zeros(0), np.zeros((0, domain.d)))

    def __len__(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def k(self) -> int:
        return len(self)

    def __iter__(self):
        return iter(zip(self.amplitudes, self.positions))

    def concat(self, other: "SpikeTrain") -> "SpikeTrain":
        """Sum of two measures as a spike-list concatenation."""
        _check_same_domain(self.domain, other.domain)
        return SpikeTrain(
            self.domain,
            np.concatenate([self.amplitudes, other.amplitudes]),
            np.concatenate([self.positions, other.positions]),
        )

    def __neg__(self) -> "SpikeTrain":
        return SpikeTrain(self.domain, -self.amplitudes, self.positions)

    def __sub__(self, other: "SpikeTrain") -> "SpikeTrain":
        return self.concat(-other)

    def in_domain(self) -> np.ndarray:
        return self.domain.contains(self.positions)


@dataclass(frozen=True)
class ParamVector:
    """Flat parameter ``theta = (a_1..a_k, t_1..t_k)`` with ``t_i`` in R^d."""

    k: int
    theta: np.ndarray

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise MalformedParameterError(f"k must be a nonnegative integer, got {self.k}")
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if self.k == 0 and theta.size:
            raise MalformedParameterError("k=0 requires an empty theta")
        if self.k and theta.size % self.k:
            raise MalformedParameterError(
                f"theta of length {theta.size} cannot hold {self.k} spikes"
            )
        theta.setflags(write=False)
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_arrays(cls, amplitudes, positions) -> "ParamVector":
        a = np.asarray(amplitudes, dtype=float).reshape(-1)
        if a.size == 0:
            return cls(0, np.zeros(0))
        t = np.asarray(positions, dtype=float).reshape(a.size, -1)
        return cls(a.size, np.concatenate([a, t.reshape(-1)]))

    @property
    def amplitudes(self) -> np.ndarray:
        return self.theta[: self.k]

    def positions(self, d: int) -> np.ndarray:
        self._check_dim(d)
        return self.theta[self.k :].reshape(self.k, d)

    def _check_dim(self, d: int):
        if self.theta.size != self.k * (d + 1):
            raise MalformedParameterError(
                f"theta has length {self.theta.size}, expected k(d+1) = {self.k * (d + 1)}"
            )


def phi(p: ParamVector, domain: Domain) -> SpikeTrain:
    """Map a flat parameter vector to the spike train it encodes."""
    return SpikeTrain(domain, p.amplitudes, p.positions(domain.d))


def flatten(x: SpikeTrain) -> ParamVector:
    """Inverse of :func:`phi`."""
    return ParamVector.from_arrays(x.amplitudes, x.positions)


def is_separated(x: SpikeTrain, eps: float) -> bool:
    """True iff every pair of spikes is at least ``eps`` apart.

    In the Euclidean case all positions must also lie in the ball of radius R.
    """
    if not eps > 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    if not x.domain.is_torus and not np.all(x.in_domain()):
        return False
    return pairwise_separated(x.positions, eps, x.domain)


def pairwise_separated(positions, eps: float, domain: Domain) -> bool:
    """Separation test on pairwise distances only (no ball membership)."""
    positions = np.asarray(positions, dtype=float).reshape(-1, domain.d)
    if positions.shape[0] < 2:
        return True
    return bool(_min_pairwise(positions, domain) >= eps)


def min_separation(x: SpikeTrain) -> float:
    """Smallest pairwise distance between spikes of ``x``."""
    if len(x) < 2:
        raise UndefinedValueError("min_separation needs at least two spikes")
    return _min_pairwise(x.positions, x.domain)


def _min_pairwise(positions: np.ndarray, domain: Domain) -> float:
    dist = domain.pairwise_distances(positions)
    iu = np.triu_indices(positions.shape[0], k=1)
    return float(dist[iu].min())


def _check_same_domain(a: Domain, b: Domain):
    if a != b:
        raise ConfigurationError(f"domain mismatch: {a} vs {b}")
