"""
CHSH quantities, the XOR twirl, and the two monogamy checks.

Outputs map to +1 (output 0) and -1 (output 1). The CHSH sign pattern is
fixed to (+, +, +, -): E(x0, y0) + E(x0, y1) + E(x1, y0) - E(x1, y1) with
(x0, x1) and (y0, y1) the input labels chosen by a ChshPairing.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from boxes import Behavior, local_deterministic, marginal, no_signalling_constraints
from errors import ArgumentError, UnsupportedError
from feasibility import solve_lp
from logging_config import get_logger

logger = get_logger(__name__)

CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
NO_SIGNALLING_BOUND = 4.0
NS_MONOGAMY_BOUND = 4.0
QUANTUM_MONOGAMY_BOUND = 8.0
VERDICT_SLACK = 1e-9

SIGNS = ((1.0, 1.0), (1.0, -1.0))


@dataclass(frozen=True)
class ChshPairing:
    boxes: tuple[int, int] = (0, 1)
    inputs: tuple[tuple[int, int], tuple[int, int]] = ((0, 1), (0, 1))

    def __post_init__(self):
        boxes = tuple(int(i) for i in self.boxes)
        inputs = tuple(tuple(int(x) for x in labels) for labels in self.inputs)
        if len(boxes) != 2 or boxes[0] == boxes[1] or min(boxes) < 0:
            raise ArgumentError(f"A pairing needs two distinct boxes, got {boxes}")
        if len(inputs) != 2 or any(len(labels) != 2 for labels in inputs):
            raise ArgumentError("A pairing needs two input labels per box")
        for labels in inputs:
            if labels[0] == labels[1] or min(labels) < 0:
                raise ArgumentError(f"Input labels {labels} must be distinct and non-negative")
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "inputs", inputs)

    def check(self, b: Behavior) -> None:
        for box, labels in zip(self.boxes, self.inputs):
            if box >= b.size:
                raise ArgumentError(f"Behavior has no box {box}")
            if max(labels) >= b.boxes[box][0]:
                raise ArgumentError(f"Input labels {labels} outside the alphabet of box {box}")

    def to_dict(self) -> dict:
        return {"boxes": list(self.boxes), "inputs": [list(labels) for labels in self.inputs]}


def _require_binary_outputs(b: Behavior, boxes: Sequence[int]) -> None:
    for i in boxes:
        if b.boxes[i][1] != 2:
            raise UnsupportedError(f"Box {i} has {b.boxes[i][1]} outputs; correlators need binary outputs")


# ===== CORRELATORS =====
def correlator(b: Behavior, boxes: tuple[int, int] = (0, 1), inputs: tuple[int, int] = (0, 0)) -> float:
    """<A B> for the two boxes at the given inputs, other boxes averaged out."""
    i, j = boxes
    if i == j or not (0 <= i < b.size and 0 <= j < b.size):
        raise ArgumentError(f"Invalid box pair {boxes}")
    _require_binary_outputs(b, boxes)
    x, y = inputs
    if not (0 <= x < b.boxes[i][0] and 0 <= y < b.boxes[j][0]):
        raise ArgumentError(f"Inputs {inputs} outside the alphabets of boxes {boxes}")
    pair = marginal(b, [i, j]).table[x, y]
    return float(pair[0, 0] + pair[1, 1] - pair[0, 1] - pair[1, 0])


def chsh(b: Behavior, pairing: Optional[ChshPairing] = None) -> float:
    pairing = pairing or ChshPairing()
    pairing.check(b)
    (x0, x1), (y0, y1) = pairing.inputs
    total = 0.0
    for s, x in enumerate((x0, x1)):
        for t, y in enumerate((y0, y1)):
            total += SIGNS[s][t] * correlator(b, pairing.boxes, (x, y))
    return total


def orderings(alphabet: int) -> list[tuple[int, int]]:
    return list(itertools.permutations(range(alphabet), 2))


def best_chsh(b: Behavior, boxes: tuple[int, int] = (0, 1)) -> tuple[float, ChshPairing]:
    """Largest |CHSH| over all choices of input labels, with the pairing attaining it."""
    best_value, best_pairing = -1.0, None
    for first in orderings(b.boxes[boxes[0]][0]):
        for second in orderings(b.boxes[boxes[1]][0]):
            pairing = ChshPairing(boxes, (first, second))
            value = abs(chsh(b, pairing))
            if value > best_value + 1e-15:
                best_value, best_pairing = value, pairing
    if best_pairing is None:
        raise ArgumentError("CHSH needs at least two inputs per box")
    return best_value, best_pairing


@dataclass(frozen=True)
class ClassicalMaximum:
    maximum: float
    strategies: int
    evaluations: int
    bound: float = CLASSICAL_BOUND

    @property
    def passed(self) -> bool:
        return self.maximum <= self.bound + VERDICT_SLACK


def classical_chsh_max() -> ClassicalMaximum:
    """Exhaustive CHSH over the 16 bipartite deterministic strategies, each under
    the 4 input orderings.

    Output flips map the strategy set onto itself, so they add nothing.
    """
    maps = list(itertools.product(range(2), repeat=2))
    maximum, strategies, evaluations = -math.inf, 0, 0
    for f, g in itertools.product(maps, maps):
        strategies += 1
        behavior = local_deterministic([list(f), list(g)])
        for first, second in itertools.product(orderings(2), orderings(2)):
            maximum = max(maximum, chsh(behavior, ChshPairing((0, 1), (first, second))))
            evaluations += 1
    return ClassicalMaximum(maximum=maximum, strategies=strategies, evaluations=evaluations)


# ===== TWIRL =====
def depolarize(b: Behavior) -> Behavior:
    """XOR twirl: average over shared bits (s, t, r) of
    p(g ^ r ^ m t, o ^ r ^ s a ^ s t | m ^ s, a ^ t).

    The success event g ^ o = m a maps onto itself, so the result is
    isotropic with correlator CHSH / 4.
    """
    if b.boxes != ((2, 2), (2, 2)):
        raise UnsupportedError("The twirl is defined for binary bipartite behaviors only")
    table = np.zeros((2, 2, 2, 2))
    for m, a, g, o in itertools.product(range(2), repeat=4):
        total = 0.0
        for s, t, r in itertools.product(range(2), repeat=3):
            total += b.table[m ^ s, a ^ t, g ^ r ^ (m & t), o ^ r ^ (s & a) ^ (s & t)]
        table[m, a, g, o] = total / 8.0
    return Behavior(b.boxes, table)


# ===== MONOGAMY =====
@dataclass(frozen=True)
class MonogamyReport:
    chsh13: float
    chsh23: float
    value: float
    bound: float
    passed: bool
    pairing13: ChshPairing = field(repr=False)
    pairing23: ChshPairing = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "chsh13": self.chsh13,
            "chsh23": self.chsh23,
            "value": self.value,
            "bound": self.bound,
            "pass": self.passed,
            "pairing13": self.pairing13.to_dict(),
            "pairing23": self.pairing23.to_dict(),
        }


def _monogamy_values(
    b: Behavior, pairing13: Optional[ChshPairing], pairing23: Optional[ChshPairing]
) -> tuple[float, float, ChshPairing, ChshPairing]:
    if b.size != 3:
        raise ArgumentError(f"Monogamy needs a tripartite behavior, got {b.size} boxes")
    pairing13 = pairing13 or ChshPairing((0, 2))
    pairing23 = pairing23 or ChshPairing((1, 2))
    if pairing13.boxes[1] != pairing23.boxes[1] or pairing13.inputs[1] != pairing23.inputs[1]:
        raise ArgumentError("Both pairings must use the same box and the same two inputs on the shared box")
    if pairing13.boxes[0] == pairing23.boxes[0]:
        raise ArgumentError("The two pairings must involve different unshared boxes")
    return chsh(b, pairing13), chsh(b, pairing23), pairing13, pairing23


def monogamy_ns(
    b: Behavior, pairing13: Optional[ChshPairing] = None, pairing23: Optional[ChshPairing] = None
) -> MonogamyReport:
    """|CHSH13| + |CHSH23| against 4.

    Absolute values are used: flipping the outputs of an unshared box negates
    its CHSH without touching the other, so the bound holds for both signs.
    """
    c13, c23, p13, p23 = _monogamy_values(b, pairing13, pairing23)
    value = abs(c13) + abs(c23)
    return MonogamyReport(c13, c23, value, NS_MONOGAMY_BOUND,
                          value <= NS_MONOGAMY_BOUND + VERDICT_SLACK, p13, p23)


def monogamy_quantum(
    b: Behavior, pairing13: Optional[ChshPairing] = None, pairing23: Optional[ChshPairing] = None
) -> MonogamyReport:
    c13, c23, p13, p23 = _monogamy_values(b, pairing13, pairing23)
    value = c13 ** 2 + c23 ** 2
    return MonogamyReport(c13, c23, value, QUANTUM_MONOGAMY_BOUND,
                          value <= QUANTUM_MONOGAMY_BOUND + VERDICT_SLACK, p13, p23)


def best_monogamy_pairings(b: Behavior, shared: int = 2) -> tuple[ChshPairing, ChshPairing]:
    """Pairings maximizing |CHSH13| + |CHSH23| with one input order on the shared box."""
    first, second = [i for i in range(b.size) if i != shared]
    best, chosen = -1.0, None
    for shared_order in orderings(b.boxes[shared][0]):
        candidates = []
        for box in (first, second):
            options = [ChshPairing((box, shared), (order, shared_order)) for order in orderings(b.boxes[box][0])]
            candidates.append(max(options, key=lambda p: abs(chsh(b, p))))
        total = sum(abs(chsh(b, p)) for p in candidates)
        if total > best + 1e-15:
            best, chosen = total, tuple(candidates)
    return chosen


def chsh_functional(boxes: Sequence[tuple[int, int]], pairing: ChshPairing) -> np.ndarray:
    """Coefficients c with chsh(b) = c . b.table for no-signalling b.

    Boxes outside the pairing are read at input 0.
    """
    shape = tuple(i for i, _ in boxes) + tuple(o for _, o in boxes)
    coefficients = np.zeros(shape)
    k = len(boxes)
    i, j = pairing.boxes
    for s, x in enumerate(pairing.inputs[0]):
        for t, y in enumerate(pairing.inputs[1]):
            for outs in itertools.product(*(range(o) for _, o in boxes)):
                xs = [0] * k
                xs[i], xs[j] = x, y
                parity = 1.0 if outs[i] == outs[j] else -1.0
                coefficients[tuple(xs) + outs] += SIGNS[s][t] * parity
    return coefficients


@dataclass(frozen=True)
class NsMonogamyMaximum:
    maximum: float
    bound: float
    passed: bool


def ns_monogamy_maximum() -> NsMonogamyMaximum:
    """Maximum of CHSH13 + CHSH23 over the binary tripartite no-signalling polytope.

    A linear objective peaks at a vertex, so this bounds every vertex at once.
    """
    boxes = ((2, 2),) * 3
    objective = (
        chsh_functional(boxes, ChshPairing((0, 2))) + chsh_functional(boxes, ChshPairing((1, 2)))
    ).ravel()
    a_eq, b_eq = no_signalling_constraints(boxes)
    result = solve_lp(objective, a_eq, b_eq, bounds=(0.0, 1.0), maximize=True, label="ns_monogamy")
    maximum = float(result.objective)
    return NsMonogamyMaximum(maximum, NS_MONOGAMY_BOUND, maximum <= NS_MONOGAMY_BOUND + VERDICT_SLACK)
