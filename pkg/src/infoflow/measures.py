"""Finite probability distributions and exact information measures.

Conventions used throughout the package:

* probabilities are float64 with absolute tolerance 1e-9 on stochasticity
  checks,
* all logarithms are base 2 and quantities are reported in Shannons (Sh),
* 0 * log2(0) = 0, and zero-mass cells of a joint contribute nothing,
* the information content of a zero-probability outcome is the tagged
  :data:`UNBOUNDED` value, never a float infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import entropy_bits, mi_bits

SUM_TOL = 1e-9


@dataclass(frozen=True)
class Unbounded:
    """Tag for an information quantity with no finite value.

    Deliberately supports no arithmetic so it cannot silently leak into
    sums; compare with ``is UNBOUNDED``.
    """

    def __repr__(self) -> str:
        return "unbounded"


UNBOUNDED = Unbounded()


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _check_labels(labels, what: str) -> tuple[str, ...]:
    labels = tuple(str(x) for x in labels)
    if not labels:
        raise ValueError(f"{what} must be non-empty")
    if len(set(labels)) != len(labels):
        raise ValueError(f"{what} must be unique, got {labels}")
    return labels


@dataclass(frozen=True, eq=False)
class Dist:
    """Probability distribution over a finite, labeled outcome space."""

    outcomes: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "outcomes", _check_labels(self.outcomes, "outcomes"))
        p = np.asarray(self.probs, dtype=np.float64).copy()
        if p.ndim != 1 or p.size != len(self.outcomes):
            raise ValueError("probs must be a vector matching outcomes")
        if (p < 0).any():
            raise ValueError(f"negative probability in {p}")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {p.sum()}, not 1")
        object.__setattr__(self, "probs", _freeze(p))

    @classmethod
    def uniform(cls, outcomes) -> "Dist":
        outcomes = tuple(outcomes)
        n = len(outcomes)
        return cls(outcomes, np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, outcomes, at) -> "Dist":
        outcomes = tuple(str(x) for x in outcomes)
        p = np.zeros(len(outcomes))
        p[outcomes.index(str(at))] = 1.0
        return cls(outcomes, p)

    def prob(self, outcome) -> float:
        outcome = str(outcome)
        if outcome not in self.outcomes:
            raise ValueError(f"unknown outcome {outcome!r}, have {self.outcomes}")
        return float(self.probs[self.outcomes.index(outcome)])

    def to_json_dict(self) -> dict:
        return {"outcomes": list(self.outcomes), "probs": [float(p) for p in self.probs]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "Dist":
        return cls(tuple(d["outcomes"]), np.asarray(d["probs"], dtype=np.float64))


@dataclass(frozen=True, eq=False)
class Joint:
    """Joint mass over two finite outcome spaces."""

    x_outcomes: tuple[str, ...]
    y_outcomes: tuple[str, ...]
    mass: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_outcomes", _check_labels(self.x_outcomes, "x outcomes"))
        object.__setattr__(self, "y_outcomes", _check_labels(self.y_outcomes, "y outcomes"))
        m = np.asarray(self.mass, dtype=np.float64).copy()
        if m.shape != (len(self.x_outcomes), len(self.y_outcomes)):
            raise ValueError(f"mass shape {m.shape} does not match outcome spaces")
        if (m < 0).any():
            raise ValueError("negative mass cell")
        if abs(m.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"mass sums to {m.sum()}, not 1")
        object.__setattr__(self, "mass", _freeze(m))

    def marginal_x(self) -> Dist:
        return Dist(self.x_outcomes, self.mass.sum(axis=1))

    def marginal_y(self) -> Dist:
        return Dist(self.y_outcomes, self.mass.sum(axis=0))

    def transpose(self) -> "Joint":
        return Joint(self.y_outcomes, self.x_outcomes, self.mass.T)

    def to_json_dict(self) -> dict:
        return {
            "x": list(self.x_outcomes),
            "y": list(self.y_outcomes),
            "mass": [[float(v) for v in row] for row in self.mass],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Joint":
        return cls(tuple(d["x"]), tuple(d["y"]), np.asarray(d["mass"], dtype=np.float64))


@dataclass(frozen=True)
class InfoMeasure:
    """Information content of one message, in all three units.

    ``selective_sh`` is the Shannon (selective) content; ``logons`` counts
    distinguishable groups in the representation and ``metrons`` its
    indistinguishable elements.
    """

    selective_sh: float
    logons: int
    metrons: int
    unbounded: bool = False

    def __post_init__(self):
        if self.logons < 0 or self.metrons < 0:
            raise ValueError("logons/metrons must be non-negative")
        if not self.unbounded:
            if not math.isfinite(self.selective_sh) or self.selective_sh < 0:
                raise ValueError(f"selective_sh must be finite and >= 0, got {self.selective_sh}")

    def to_json_dict(self) -> dict:
        return {
            "selective_sh": float(self.selective_sh),
            "logons": int(self.logons),
            "metrons": int(self.metrons),
            "unbounded": bool(self.unbounded),
        }


@dataclass(frozen=True)
class Representation:
    """Partition of element ids into distinguishable groups."""

    groups: tuple[frozenset, ...] = field(default_factory=tuple)

    def __post_init__(self):
        groups = tuple(frozenset(g) for g in self.groups)
        if not groups:
            raise ValueError("representation must have at least one group")
        if any(not g for g in groups):
            raise ValueError("groups must be non-empty")
        seen: set = set()
        for g in groups:
            if seen & g:
                raise ValueError("groups must be disjoint")
            seen |= g
        object.__setattr__(self, "groups", groups)

    @property
    def elements(self) -> frozenset:
        return frozenset().union(*self.groups)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def self_information(d: Dist, outcome) -> float | Unbounded:
    """-log2 p(outcome) in Sh; UNBOUNDED when the outcome has probability 0."""
    p = d.prob(outcome)
    if p == 0.0:
        return UNBOUNDED
    return -math.log2(p)


def entropy(d: Dist) -> float:
    """Shannon entropy H(d) in Sh."""
    return entropy_bits(d.probs)


def mutual_information(j: Joint) -> float:
    """I(X;Y) in Sh from the joint mass; zero-mass cells contribute 0."""
    return mi_bits(j.mass)


def total_variation(p: Dist, q: Dist) -> float:
    """(1/2) sum |p - q| over a shared outcome space."""
    if p.outcomes != q.outcomes:
        raise ValueError(f"outcome spaces differ: {p.outcomes} vs {q.outcomes}")
    return float(0.5 * np.abs(p.probs - q.probs).sum())


def structural_metric_content(r: Representation) -> InfoMeasure:
    """Structural (logons) and metrical (metrons) content of a partition.

    logons = number of distinguishable groups, metrons = total element
    count, selective content = log2(number of groups).
    """
    n_groups = len(r.groups)
    return InfoMeasure(
        selective_sh=math.log2(n_groups),
        logons=n_groups,
        metrons=len(r.elements),
    )
