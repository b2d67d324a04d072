"""
Operational behaviors: conditional probability tables p(outputs | inputs)
for an ordered list of boxes.

A behavior over k boxes stores its table with shape
(in_1, ..., in_k, out_1, ..., out_k), so ``table[x1, ..., xk, a1, ..., ak]``
is p(a1 ... ak | x1 ... xk). Serialized tables are row-major in that axis
order: for each joint input (last box fastest) the block of joint outputs.

For bipartite boxes the first box is the one receiving m (output g) and the
second the one receiving a (output o), matching g xor o = m a for the PR box.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from errors import ArgumentError, DomainError
from quantum import DensityMatrix, MeasurementSet, born

NORMALIZATION_TOL = 1e-10
NO_SIGNALLING_TOL = 1e-9


# ===== JSON SCHEMAS =====
class BoxSchema(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    inputs: int = Field(alias="in")
    outputs: int = Field(alias="out")

    @field_validator("inputs", "outputs")
    @classmethod
    def alphabet_must_be_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("Alphabet sizes must be positive")
        return v


class BehaviorSchema(BaseModel):
    boxes: list[BoxSchema]
    table: list[float]


# ===== BEHAVIOR =====
@dataclass(frozen=True, eq=False)
class Behavior:
    boxes: tuple[tuple[int, int], ...]
    table: np.ndarray

    def __post_init__(self):
        boxes = tuple((int(i), int(o)) for i, o in self.boxes)
        if not boxes:
            raise ArgumentError("A behavior needs at least one box")
        if any(i < 1 or o < 1 for i, o in boxes):
            raise ArgumentError("Alphabet sizes must be positive")
        shape = tuple(i for i, _ in boxes) + tuple(o for _, o in boxes)
        table = np.array(self.table, dtype=float)
        if table.size != math.prod(shape):
            raise ArgumentError(f"Table has {table.size} entries, expected {math.prod(shape)}")
        table = table.reshape(shape)
        if np.isnan(table).any() or (table < -NORMALIZATION_TOL).any():
            raise ArgumentError("Behavior has negative probabilities")
        k = len(boxes)
        sums = table.sum(axis=tuple(range(k, 2 * k)))
        if np.abs(sums - 1.0).max() > NORMALIZATION_TOL:
            raise ArgumentError("Outputs do not sum to 1 for some joint input")
        table = np.clip(table, 0.0, None)
        table.setflags(write=False)
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "table", table)

    @property
    def size(self) -> int:
        return len(self.boxes)

    @property
    def inputs(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.boxes)

    @property
    def outputs(self) -> tuple[int, ...]:
        return tuple(o for _, o in self.boxes)

    def conditional(self, inputs: Sequence[int]) -> np.ndarray:
        """Joint output distribution for one joint input."""
        return self.table[tuple(int(x) for x in inputs)]

    def to_dict(self) -> dict:
        schema = BehaviorSchema(
            boxes=[BoxSchema(inputs=i, outputs=o) for i, o in self.boxes],
            table=self.table.ravel().tolist(),
        )
        return schema.model_dump(by_alias=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> "Behavior":
        schema = BehaviorSchema.model_validate(data)
        return cls(tuple((b.inputs, b.outputs) for b in schema.boxes), np.array(schema.table))


# ===== CONSTRUCTORS =====
def correlated_box(e0: float, e1: float) -> Behavior:
    """Binary bipartite box with uniform marginals and p(g xor o = m a | m, a) = (1 + e_m) / 2."""
    for e in (e0, e1):
        if not -1.0 <= e <= 1.0:
            raise DomainError(f"Correlator {e!r} outside [-1, 1]")
    correlators = (e0, e1)
    table = np.zeros((2, 2, 2, 2))
    for m, a, g, o in itertools.product(range(2), repeat=4):
        sign = 1.0 if (g ^ o) == (m & a) else -1.0
        table[m, a, g, o] = (1.0 + sign * correlators[m]) / 4.0
    return Behavior(((2, 2), (2, 2)), table)


def isotropic_box(e: float) -> Behavior:
    if not 0.0 <= e <= 1.0:
        raise DomainError(f"Isotropic correlator {e!r} outside [0, 1]")
    return correlated_box(e, e)


def pr_box() -> Behavior:
    return correlated_box(1.0, 1.0)


def from_quantum(state: DensityMatrix, measurements: Sequence[MeasurementSet]) -> Behavior:
    """Born-rule table, one box per tensor factor of ``state``."""
    if len(measurements) != len(state.dims):
        raise ArgumentError(f"State has {len(state.dims)} parties, got {len(measurements)} measurement sets")
    for i, (meas, d) in enumerate(zip(measurements, state.dims)):
        if meas.dim != d:
            raise ArgumentError(f"Measurement set {i} acts on dimension {meas.dim}, party has {d}")

    boxes = tuple((m.settings, m.outcomes) for m in measurements)
    shape = tuple(i for i, _ in boxes) + tuple(o for _, o in boxes)
    table = np.zeros(shape)
    for xs in itertools.product(*(range(i) for i, _ in boxes)):
        for outs in itertools.product(*(range(o) for _, o in boxes)):
            effects = [m.effect(x, a) for m, x, a in zip(measurements, xs, outs)]
            table[xs + outs] = born(state, effects)
    # renormalize per joint input to remove Born round-off
    k = len(boxes)
    table /= table.sum(axis=tuple(range(k, 2 * k)), keepdims=True)
    return Behavior(boxes, table)


def local_deterministic(
    assignments: Sequence[Sequence[int]], outputs: Union[int, Sequence[int]] = 2
) -> Behavior:
    """Point-mass behavior: box i outputs ``assignments[i][x_i]``."""
    if isinstance(outputs, int):
        outputs = [outputs] * len(assignments)
    if len(outputs) != len(assignments):
        raise ArgumentError("Need one output alphabet per box")
    boxes = tuple((len(mapping), int(o)) for mapping, o in zip(assignments, outputs))
    for mapping, (_, o) in zip(assignments, boxes):
        if not mapping or any(not 0 <= v < o for v in mapping):
            raise ArgumentError(f"Assignment {list(mapping)} outside output alphabet of size {o}")
    shape = tuple(i for i, _ in boxes) + tuple(o for _, o in boxes)
    table = np.zeros(shape)
    for xs in itertools.product(*(range(i) for i, _ in boxes)):
        outs = tuple(int(mapping[x]) for mapping, x in zip(assignments, xs))
        table[xs + outs] = 1.0
    return Behavior(boxes, table)


def mix(behaviors: Sequence[Behavior], weights: Sequence[float]) -> Behavior:
    if not behaviors or len(behaviors) != len(weights):
        raise ArgumentError("Need one weight per behavior")
    weights = np.asarray(weights, dtype=float)
    if (weights < 0).any() or abs(weights.sum() - 1.0) > NORMALIZATION_TOL:
        raise ArgumentError(f"Mixture weights must be non-negative and sum to 1, got {weights.tolist()}")
    boxes = behaviors[0].boxes
    if any(b.boxes != boxes for b in behaviors):
        raise ArgumentError("Mixed behaviors must share one box structure")
    table = sum(w * b.table for w, b in zip(weights, behaviors))
    return Behavior(boxes, table)


# ===== RESHAPING =====
def product(*behaviors: Behavior) -> Behavior:
    """Independent side-by-side composition."""
    if not behaviors:
        raise ArgumentError("Product needs at least one behavior")
    result = behaviors[0]
    for other in behaviors[1:]:
        k1, k2 = result.size, other.size
        outer = np.multiply.outer(result.table, other.table)
        # axes now: in1, out1, in2, out2
        order = (
            list(range(k1))
            + list(range(2 * k1, 2 * k1 + k2))
            + list(range(k1, 2 * k1))
            + list(range(2 * k1 + k2, 2 * k1 + 2 * k2))
        )
        result = Behavior(result.boxes + other.boxes, np.transpose(outer, order))
    return result


def permute(b: Behavior, order: Sequence[int]) -> Behavior:
    """Reorder boxes: box i of the result is box ``order[i]`` of ``b``."""
    order = [int(i) for i in order]
    if sorted(order) != list(range(b.size)):
        raise ArgumentError(f"{order} is not a permutation of {b.size} boxes")
    axes = order + [b.size + i for i in order]
    return Behavior(tuple(b.boxes[i] for i in order), np.transpose(b.table, axes))


def merge(b: Behavior, indices: Sequence[int]) -> Behavior:
    """Fuse several boxes into one composite box appended last.

    The composite input and output are row-major codes of the fused boxes'
    inputs and outputs, in the order given.
    """
    indices = [int(i) for i in indices]
    if len(set(indices)) != len(indices) or any(not 0 <= i < b.size for i in indices):
        raise ArgumentError(f"Invalid boxes to merge: {indices}")
    others = [i for i in range(b.size) if i not in indices]
    moved = permute(b, others + indices)
    fused = (
        math.prod(b.boxes[i][0] for i in indices),
        math.prod(b.boxes[i][1] for i in indices),
    )
    boxes = tuple(b.boxes[i] for i in others) + (fused,)
    shape = tuple(i for i, _ in boxes) + tuple(o for _, o in boxes)
    return Behavior(boxes, moved.table.reshape(shape))


def marginal(b: Behavior, keep: Sequence[int]) -> Behavior:
    """Behavior of the kept boxes, averaging uniformly over the dropped boxes' inputs."""
    keep = [int(i) for i in keep]
    dropped = [i for i in range(b.size) if i not in keep]
    moved = permute(b, keep + dropped).table
    k, d = len(keep), len(dropped)
    # axes: in_keep, in_drop, out_keep, out_drop
    summed = moved.sum(axis=tuple(range(2 * k + d, 2 * k + 2 * d))) if d else moved
    averaged = summed.mean(axis=tuple(range(k, k + d))) if d else summed
    return Behavior(tuple(b.boxes[i] for i in keep), averaged)


# ===== NO-SIGNALLING =====
@dataclass(frozen=True)
class NoSignallingReport:
    discrepancies: tuple[float, ...]
    tolerance: float
    passed: bool

    @property
    def max_discrepancy(self) -> float:
        return max(self.discrepancies)


def no_signalling_check(b: Behavior, tolerance: float = NO_SIGNALLING_TOL) -> NoSignallingReport:
    """Per box, the largest total-variation change of its output marginal
    when only the other boxes' inputs change."""
    k = b.size
    discrepancies = []
    for i in range(k):
        out_axes = tuple(k + j for j in range(k) if j != i)
        local = b.table.sum(axis=out_axes) if out_axes else b.table
        # local axes: all inputs, then box i's output; bring x_i to the front
        local = np.moveaxis(local, i, 0)
        worst = 0.0
        for x_i in range(b.boxes[i][0]):
            rows = local[x_i].reshape(-1, b.boxes[i][1])
            if len(rows) > 1:
                diffs = np.abs(rows[:, None, :] - rows[None, :, :]).sum(axis=2) / 2
                worst = max(worst, float(diffs.max()))
        discrepancies.append(worst)
    return NoSignallingReport(
        discrepancies=tuple(discrepancies),
        tolerance=tolerance,
        passed=max(discrepancies) <= tolerance,
    )


def no_signalling_constraints(boxes: Sequence[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    """Equality system A p = b of the no-signalling polytope.

    ``p`` is a behavior table flattened row-major. Rows: normalization of every
    joint input, then for each box the independence of the other boxes'
    joint marginal from that box's input.
    """
    boxes = tuple((int(i), int(o)) for i, o in boxes)
    k = len(boxes)
    shape = tuple(i for i, _ in boxes) + tuple(o for _, o in boxes)
    index = np.arange(math.prod(shape)).reshape(shape)
    rows, rhs = [], []

    def indicator(cells: np.ndarray) -> np.ndarray:
        row = np.zeros(index.size)
        row[cells.ravel()] = 1.0
        return row

    for xs in itertools.product(*(range(i) for i, _ in boxes)):
        rows.append(indicator(index[xs]))
        rhs.append(1.0)

    for i in range(k):
        others = [j for j in range(k) if j != i]
        for x_rest in itertools.product(*(range(boxes[j][0]) for j in others)):
            for a_rest in itertools.product(*(range(boxes[j][1]) for j in others)):
                def block(x_i: int) -> np.ndarray:
                    sel: list = [None] * (2 * k)
                    for j, x in zip(others, x_rest):
                        sel[j] = x
                    for j, a in zip(others, a_rest):
                        sel[k + j] = a
                    sel[i] = x_i
                    sel[k + i] = slice(None)
                    return index[tuple(sel)]

                base = indicator(block(0))
                for x_i in range(1, boxes[i][0]):
                    rows.append(indicator(block(x_i)) - base)
                    rhs.append(0.0)
    return np.array(rows), np.array(rhs)


# ===== WIRING =====
def wire(first: Behavior, second: Behavior, mapping: Mapping[int, int]) -> Behavior:
    """Feed outputs of ``first`` into inputs of ``second``.

    ``mapping[j] = i`` sets the input of box j of ``second`` to the output of
    box i of ``first``. Wired boxes keep their slot with a single-valued input.
    Result boxes are the boxes of ``first`` followed by those of ``second``.
    Wiring only runs from ``first`` into ``second``, so the causal order is
    fixed. Loops have no behavior-level meaning and are composed at the
    ensemble level with ``counterfactual.loop_compose``.
    """
    for j, i in mapping.items():
        if not 0 <= j < second.size or not 0 <= i < first.size:
            raise ArgumentError(f"Wiring {i} -> {j} refers to a missing box")
        if first.boxes[i][1] != second.boxes[j][0]:
            raise ArgumentError(
                f"Output alphabet {first.boxes[i][1]} of box {i} does not match input alphabet "
                f"{second.boxes[j][0]} of box {j}"
            )

    second_boxes = tuple(
        (1 if j in mapping else inp, out) for j, (inp, out) in enumerate(second.boxes)
    )
    boxes = first.boxes + second_boxes
    shape = tuple(i for i, _ in boxes) + tuple(o for _, o in boxes)
    table = np.zeros(shape)
    k1, k2 = first.size, second.size
    free_ranges = [range(i) for i, _ in second_boxes]
    for xs in itertools.product(*(range(i) for i in first.inputs)):
        for outs in itertools.product(*(range(o) for o in first.outputs)):
            p_first = first.table[xs + outs]
            if p_first == 0.0:
                continue
            for ys_free in itertools.product(*free_ranges):
                ys = tuple(outs[mapping[j]] if j in mapping else ys_free[j] for j in range(k2))
                block = p_first * second.table[ys]
                table[xs + ys_free + outs] = block
    return Behavior(boxes, table)
