"""
Exact discrete probability tables and the Shannon quantities built on them.

All logarithms are base 2, so every information value is in bits. Tables are
dense numpy arrays with one axis per named variable; serialized tables are
row-major with the last variable varying fastest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np
import scipy.stats
from pydantic import BaseModel, field_validator

from errors import (
    ArgumentError,
    ConditioningError,
    DomainError,
    LabelError,
    PreconditionError,
)
from logging_config import get_logger

logger = get_logger(__name__)

NORMALIZATION_TOL = 1e-12
ACCUMULATION_TOL = 1e-9
NEGATIVE_SLACK = 1e-12
PRECONDITION_TOL = 1e-9

Labels = Union[str, Sequence[str]]
Variables = Sequence[tuple[str, int]]


# ===== JSON SCHEMAS =====
class VariableSchema(BaseModel):
    name: str
    cardinality: int

    @field_validator("cardinality")
    @classmethod
    def cardinality_must_be_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("Cardinality must be a positive integer")
        return v


class JointDistributionSchema(BaseModel):
    variables: list[VariableSchema]
    table: list[float]

    @field_validator("table")
    @classmethod
    def table_must_be_non_negative(cls, v: list[float]) -> list[float]:
        if any(p < -NORMALIZATION_TOL for p in v):
            raise ValueError("Probabilities cannot be negative")
        return v


# ===== JOINT DISTRIBUTION =====
@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Probability table over named discrete variables.

    ``table`` has one axis per variable, in the order of ``variables``.
    """

    variables: tuple[tuple[str, int], ...]
    table: np.ndarray

    def __post_init__(self):
        variables = tuple((str(name), int(card)) for name, card in self.variables)
        if not variables:
            raise ArgumentError("A distribution needs at least one variable")
        names = [name for name, _ in variables]
        if len(set(names)) != len(names):
            raise ArgumentError(f"Duplicate variable names in {names}")
        if any(card < 1 for _, card in variables):
            raise ArgumentError("Cardinalities must be positive integers")

        shape = tuple(card for _, card in variables)
        table = np.array(self.table, dtype=float)
        if table.size != math.prod(shape):
            raise ArgumentError(
                f"Table has {table.size} entries, expected {math.prod(shape)} for shape {shape}"
            )
        table = table.reshape(shape)
        if np.isnan(table).any() or (table < -NORMALIZATION_TOL).any():
            raise ArgumentError("Probabilities must be non-negative numbers")
        total = float(table.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ArgumentError(f"Probabilities sum to {total!r}, not 1")
        table = np.clip(table, 0.0, None)
        table.setflags(write=False)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "table", table)

    # ----- constructors -----
    @classmethod
    def from_weighted(
        cls, variables: Variables, rows: Iterable[tuple[Sequence[int], float]]
    ) -> "JointDistribution":
        """Accumulate (assignment, weight) rows into a table.

        Repeated assignments add up. Floating-point drift in the total up to
        1e-9 is renormalized away; anything larger is an error.
        """
        shape = tuple(int(card) for _, card in variables)
        table = np.zeros(shape, dtype=float)
        for assignment, weight in rows:
            table[tuple(assignment)] += weight
        total = float(table.sum())
        if abs(total - 1.0) > ACCUMULATION_TOL:
            raise ArgumentError(f"Row weights sum to {total!r}, not 1")
        return cls(tuple(variables), table / total)

    @classmethod
    def from_counts(cls, variables: Variables, counts: np.ndarray) -> "JointDistribution":
        counts = np.asarray(counts, dtype=float)
        total = float(counts.sum())
        if total <= 0:
            raise ArgumentError("Counts must contain at least one observation")
        return cls(tuple(variables), counts / total)

    @classmethod
    def from_samples(cls, variables: Variables, samples: np.ndarray) -> "JointDistribution":
        """Empirical frequency table from an (N, k) integer array of observations."""
        counts = sample_counts(variables, samples)
        return cls.from_counts(variables, counts)

    # ----- accessors -----
    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.variables)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(card for _, card in self.variables)

    def axes(self, labels: Labels) -> tuple[int, ...]:
        labels = as_labels(labels)
        names = self.names
        unknown = [label for label in labels if label not in names]
        if unknown:
            raise LabelError(f"Unknown variable label(s) {unknown}; known: {list(names)}")
        if len(set(labels)) != len(labels):
            raise ArgumentError(f"Repeated labels in {list(labels)}")
        return tuple(names.index(label) for label in labels)

    def marginal_table(self, labels: Labels) -> np.ndarray:
        axes = self.axes(labels)
        dropped = tuple(i for i in range(len(self.variables)) if i not in axes)
        summed = self.table.sum(axis=dropped) if dropped else self.table
        # remaining axes are in increasing order; put them in the requested order
        kept_sorted = sorted(axes)
        return np.transpose(summed, [kept_sorted.index(a) for a in axes])

    def marginal(self, labels: Labels) -> "JointDistribution":
        labels = as_labels(labels)
        variables = tuple(self.variables[i] for i in self.axes(labels))
        return JointDistribution(variables, self.marginal_table(labels))

    def probability(self, assignment: Mapping[str, int]) -> float:
        labels = tuple(assignment)
        table = self.marginal_table(labels)
        return float(table[tuple(int(assignment[label]) for label in labels)])

    # ----- serialization -----
    def to_dict(self) -> dict:
        schema = JointDistributionSchema(
            variables=[VariableSchema(name=n, cardinality=c) for n, c in self.variables],
            table=self.table.ravel().tolist(),
        )
        return schema.model_dump()

    def to_json(self) -> str:
        return JointDistributionSchema.model_validate(self.to_dict()).model_dump_json()

    @classmethod
    def from_dict(cls, data: Mapping) -> "JointDistribution":
        schema = JointDistributionSchema.model_validate(data)
        return cls(
            tuple((v.name, v.cardinality) for v in schema.variables),
            np.array(schema.table, dtype=float),
        )

    @classmethod
    def from_json(cls, text: str) -> "JointDistribution":
        schema = JointDistributionSchema.model_validate_json(text)
        return cls.from_dict(schema.model_dump())


def as_labels(labels: Labels) -> tuple[str, ...]:
    if isinstance(labels, str):
        return (labels,)
    return tuple(labels)


def sample_counts(variables: Variables, samples: np.ndarray) -> np.ndarray:
    shape = tuple(int(card) for _, card in variables)
    samples = np.asarray(samples, dtype=np.int64)
    if samples.ndim != 2 or samples.shape[1] != len(shape):
        raise ArgumentError(f"Samples must have shape (N, {len(shape)})")
    if (samples < 0).any() or (samples >= np.array(shape)).any():
        raise ArgumentError("Sample values outside the variable alphabets")
    flat = np.ravel_multi_index(tuple(samples.T), shape)
    return np.bincount(flat, minlength=math.prod(shape)).reshape(shape).astype(float)


# ===== SHANNON QUANTITIES =====
def entropy(dist: JointDistribution, subset: Labels) -> float:
    labels = as_labels(subset)
    if not labels:
        raise ArgumentError("Entropy needs a non-empty subset of variables")
    p = dist.marginal_table(labels).ravel()
    return float(scipy.stats.entropy(p, base=2))


def _check_disjoint(*groups: tuple[str, ...]) -> None:
    seen: set[str] = set()
    for group in groups:
        overlap = seen.intersection(group)
        if overlap:
            raise ArgumentError(f"Label sets must be disjoint; shared: {sorted(overlap)}")
        seen.update(group)


def _clamp(raw: float, quantity: str) -> float:
    if raw >= 0:
        return raw
    if raw < -NEGATIVE_SLACK:
        logger.warning("information_below_slack", quantity=quantity, raw=raw)
    else:
        logger.debug("information_clamped", quantity=quantity, raw=raw)
    return 0.0


def mutual_information_raw(dist: JointDistribution, x: Labels, y: Labels) -> float:
    x, y = as_labels(x), as_labels(y)
    if not x or not y:
        raise ArgumentError("Mutual information needs two non-empty label sets")
    _check_disjoint(x, y)
    return entropy(dist, x) + entropy(dist, y) - entropy(dist, x + y)


def mutual_information(dist: JointDistribution, x: Labels, y: Labels) -> float:
    return _clamp(mutual_information_raw(dist, x, y), "mutual_information")


def conditional_mutual_information_raw(
    dist: JointDistribution, x: Labels, y: Labels, z: Labels
) -> float:
    x, y, z = as_labels(x), as_labels(y), as_labels(z)
    if not z:
        return mutual_information_raw(dist, x, y)
    _check_disjoint(x, y, z)
    # chain rule: I(X:Y|Z) = I(X:YZ) - I(X:Z)
    return mutual_information_raw(dist, x, y + z) - mutual_information_raw(dist, x, z)


def conditional_mutual_information(
    dist: JointDistribution, x: Labels, y: Labels, z: Labels
) -> float:
    return _clamp(
        conditional_mutual_information_raw(dist, x, y, z), "conditional_mutual_information"
    )


def condition(dist: JointDistribution, evidence: Mapping[str, int]) -> JointDistribution:
    """Renormalized distribution of the remaining variables given ``evidence``."""
    labels = tuple(evidence)
    axes = dist.axes(labels)
    if len(axes) == len(dist.variables):
        raise ArgumentError("Evidence must leave at least one variable unobserved")
    index: list = [slice(None)] * len(dist.variables)
    for label, axis in zip(labels, axes):
        value = int(evidence[label])
        if not 0 <= value < dist.cardinalities[axis]:
            raise ArgumentError(f"Value {value} outside the alphabet of {label!r}")
        index[axis] = value
    sliced = dist.table[tuple(index)]
    total = float(sliced.sum())
    if total <= 0.0:
        raise ConditioningError(f"Evidence {dict(evidence)} has probability zero")
    remaining = tuple(v for i, v in enumerate(dist.variables) if i not in axes)
    return JointDistribution(remaining, sliced / total)


# ===== BINARY ENTROPY =====
def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Binary entropy needs p in [0, 1], got {p!r}")
    return float(scipy.stats.entropy([p, 1.0 - p], base=2))


def binary_entropy_series(e: float, terms: int) -> float:
    """Partial sum of the power series of 1 - h((1+e)/2).

    (1 / 2 ln 2) * sum_{q=1..terms} e^{2q} / (q (2q - 1))
    """
    if not 0.0 <= e < 1.0:
        raise DomainError(f"Series needs 0 <= e < 1, got {e!r}")
    if terms < 1:
        raise ArgumentError("Series needs at least one term")
    q = np.arange(1, terms + 1, dtype=float)
    return float(np.sum(e ** (2 * q) / (q * (2 * q - 1))) / (2 * math.log(2)))


SERIES_SWITCH = 0.5
SERIES_TERMS = 60


def channel_capacity(e: float) -> float:
    """Capacity 1 - h((1+e)/2) of the binary symmetric channel with correlator e.

    Small |e| goes through the series, where the closed form loses every
    significant digit to cancellation.
    """
    if not -1.0 <= e <= 1.0:
        raise DomainError(f"Correlator must lie in [-1, 1], got {e!r}")
    e = abs(e)
    if e < SERIES_SWITCH:
        return binary_entropy_series(e, SERIES_TERMS)
    return 1.0 - binary_entropy((1.0 + e) / 2.0)


# ===== LEMMA: H(O) = I(O:N) + I(NO:Q) =====
def lemma1_residual(dist: JointDistribution, n: Labels, q: Labels, o: Labels) -> float:
    """H(O) - I(O:N) - I(NO:Q) for O a function of independent N and Q."""
    n, q, o = as_labels(n), as_labels(q), as_labels(o)
    _check_disjoint(n, q, o)

    dependence = mutual_information_raw(dist, n, q)
    if dependence > PRECONDITION_TOL:
        raise PreconditionError(
            f"N and Q are not independent: I(N:Q) = {dependence:.3e}", condition="independence"
        )
    spread = entropy(dist, n + q + o) - entropy(dist, n + q)
    if spread > PRECONDITION_TOL:
        raise PreconditionError(
            f"O is not a function of N and Q: H(O|NQ) = {spread:.3e}", condition="functional"
        )
    return (
        entropy(dist, o)
        - mutual_information_raw(dist, o, n)
        - mutual_information_raw(dist, n + o, q)
    )


# ===== JACKKNIFE =====
@dataclass(frozen=True, eq=False)
class JackknifeEstimate:
    plugin: np.ndarray
    corrected: np.ndarray
    stderr: np.ndarray
    samples: int


def jackknife_estimate(
    variables: Variables,
    counts: np.ndarray,
    statistic: Callable[[JointDistribution], Sequence[float]],
) -> JackknifeEstimate:
    """Leave-one-out bias correction for a plug-in statistic of a count table.

    Removing one observation only changes the cell it fell in, so the N
    leave-one-out replicates collapse to one evaluation per occupied cell,
    weighted by that cell's count.
    """
    counts = np.asarray(counts, dtype=float)
    total = int(round(counts.sum()))
    if total < 2:
        raise ArgumentError("Jackknife needs at least two observations")

    plugin = np.atleast_1d(np.asarray(statistic(JointDistribution.from_counts(variables, counts)), dtype=float))
    cells = np.argwhere(counts > 0)
    weights = np.array([counts[tuple(cell)] for cell in cells])
    replicates = []
    for cell in cells:
        reduced = counts.copy()
        reduced[tuple(cell)] -= 1.0
        replicates.append(
            np.atleast_1d(np.asarray(statistic(JointDistribution.from_counts(variables, reduced)), dtype=float))
        )
    replicates = np.array(replicates)
    mean = weights @ replicates / total
    corrected = total * plugin - (total - 1) * mean
    stderr = np.sqrt((total - 1) / total * (weights @ (replicates - mean) ** 2))
    return JackknifeEstimate(plugin=plugin, corrected=corrected, stderr=stderr, samples=total)


# ===== ESTIMATION MODES =====
@dataclass(frozen=True)
class Exact:
    """Enumerate every branch with its exact weight."""

    name = "exact"


@dataclass(frozen=True)
class Sampled:
    """Monte Carlo with ``count`` draws from a PCG64 stream seeded by ``seed``."""

    count: int
    seed: int
    name = "sampled"

    def __post_init__(self):
        if self.count < 1:
            raise ArgumentError(f"Sample count must be positive, got {self.count}")
        if not 0 <= self.seed < 2 ** 64:
            raise ArgumentError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


Mode = Union[Exact, Sampled]
