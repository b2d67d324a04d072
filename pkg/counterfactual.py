"""
Ontic ensembles over counterfactual assignments.

A CounterfactualAssignment fixes, for every box, the output it would give
for every joint input of the scenario. Indexing each box's map by the joint
input (row-major, last box fastest) lets the second box's counterfactual
function depend on both inputs; a box whose map ignores the other inputs is
local. For a bipartite binary scenario the first box's counterfactual
outcome vector, for a given input a of the second box, is
g_vec(a) = (f1(0, a), f1(1, a)).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from pydantic import BaseModel, field_validator

from boxes import Behavior, BoxSchema, isotropic_box
from errors import ArgumentError, ResourceError, UnsupportedError
from feasibility import LPResult, find_feasible_point
from logging_config import get_logger
from prob import (
    Exact,
    JointDistribution,
    Mode,
    Sampled,
    condition,
    entropy,
    mutual_information,
)
from quantum import DensityMatrix, MeasurementSet, born, post_measurement

logger = get_logger(__name__)

WEIGHT_TOL = 1e-10
CPI_TOL = 1e-10
BRANCH_FLOOR = 1e-12
EXACT_BRANCH_LIMIT = 2 ** 20
BINARY_PAIR = ((2, 2), (2, 2))


# ===== TYPES =====
@dataclass(frozen=True)
class CounterfactualAssignment:
    maps: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(tuple(int(v) for v in m) for m in self.maps))

    @classmethod
    def local(cls, boxes: Sequence[tuple[int, int]], own_maps: Sequence[Sequence[int]]) -> "CounterfactualAssignment":
        """Assignment where each box's output depends only on its own input."""
        maps = [[] for _ in boxes]
        for xs in joint_inputs(boxes):
            for i, own in enumerate(own_maps):
                maps[i].append(int(own[xs[i]]))
        return cls(tuple(tuple(m) for m in maps))

    def output(self, box: int, joint_index: int) -> int:
        return self.maps[box][joint_index]


def joint_inputs(boxes: Sequence[tuple[int, int]]) -> list[tuple[int, ...]]:
    return list(itertools.product(*(range(i) for i, _ in boxes)))


class OnticEnsembleSchema(BaseModel):
    boxes: list[BoxSchema]
    assignments: list[list[list[int]]]
    weights: list[float]

    @field_validator("weights")
    @classmethod
    def weights_must_be_non_negative(cls, v: list[float]) -> list[float]:
        if any(w < 0 for w in v):
            raise ValueError("Weights cannot be negative")
        return v


@dataclass(frozen=True, eq=False)
class OnticEnsemble:
    boxes: tuple[tuple[int, int], ...]
    support: tuple[CounterfactualAssignment, ...]
    weights: np.ndarray

    def __post_init__(self):
        boxes = tuple((int(i), int(o)) for i, o in self.boxes)
        support = tuple(self.support)
        weights = np.array(self.weights, dtype=float)
        if not support:
            raise ArgumentError("An ensemble needs a non-empty support")
        if len(weights) != len(support):
            raise ArgumentError("Need one weight per assignment")
        if (weights < 0).any() or abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise ArgumentError(f"Weights must be non-negative and sum to 1, got sum {weights.sum()!r}")
        width = math.prod(i for i, _ in boxes)
        for assignment in support:
            if len(assignment.maps) != len(boxes):
                raise ArgumentError("Every assignment needs one map per box")
            for m, (_, outs) in zip(assignment.maps, boxes):
                if len(m) != width or any(not 0 <= v < outs for v in m):
                    raise ArgumentError(f"Map {m} is not a total map into {outs} outputs")
        weights.setflags(write=False)
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_weighted(
        cls, boxes: Sequence[tuple[int, int]], rows: Iterable[tuple[CounterfactualAssignment, float]]
    ) -> "OnticEnsemble":
        """Merge repeated assignments and order the support deterministically."""
        merged: dict[CounterfactualAssignment, float] = {}
        for assignment, weight in rows:
            merged[assignment] = merged.get(assignment, 0.0) + weight
        ordered = sorted(merged.items(), key=lambda item: item[0].maps)
        weights = np.array([w for _, w in ordered])
        return cls(tuple(boxes), tuple(a for a, _ in ordered), weights / weights.sum())

    def to_dict(self) -> dict:
        return OnticEnsembleSchema(
            boxes=[BoxSchema(inputs=i, outputs=o) for i, o in self.boxes],
            assignments=[[list(m) for m in a.maps] for a in self.support],
            weights=self.weights.tolist(),
        ).model_dump(by_alias=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> "OnticEnsemble":
        schema = OnticEnsembleSchema.model_validate(data)
        return cls(
            tuple((b.inputs, b.outputs) for b in schema.boxes),
            tuple(CounterfactualAssignment(tuple(tuple(m) for m in a)) for a in schema.assignments),
            np.array(schema.weights),
        )


def point_mass(boxes: Sequence[tuple[int, int]], assignment: CounterfactualAssignment) -> OnticEnsemble:
    return OnticEnsemble(tuple(boxes), (assignment,), np.array([1.0]))


def ensemble_to_behavior(e: OnticEnsemble) -> Behavior:
    shape = tuple(i for i, _ in e.boxes) + tuple(o for _, o in e.boxes)
    table = np.zeros(shape)
    inputs = joint_inputs(e.boxes)
    for assignment, weight in zip(e.support, e.weights):
        for k, xs in enumerate(inputs):
            outs = tuple(m[k] for m in assignment.maps)
            table[xs + outs] += weight
    return Behavior(e.boxes, table)


def _require_bipartite(e: OnticEnsemble) -> None:
    if len(e.boxes) != 2:
        raise ArgumentError(f"Expected a bipartite ensemble, got {len(e.boxes)} boxes")


# ===== SAMPLER =====
def _stage_tables(state: DensityMatrix, measurements: Sequence[MeasurementSet]) -> tuple[np.ndarray, np.ndarray]:
    """Born marginals p1[m, g] of the first box and Lüders conditionals p2[m, g, a, c]."""
    first, second = measurements
    identity1 = np.eye(first.dim, dtype=complex)
    identity2 = np.eye(second.dim, dtype=complex)
    p1 = np.zeros((first.settings, first.outcomes))
    p2 = np.zeros((first.settings, first.outcomes, second.settings, second.outcomes))
    for m in range(first.settings):
        for g, kraus in enumerate(first.kraus[m]):
            p1[m, g] = born(state, [first.effect(m, g), identity2])
            if p1[m, g] <= BRANCH_FLOOR:
                continue
            updated = post_measurement(state, kraus, party=0)
            for a in range(second.settings):
                for c in range(second.outcomes):
                    p2[m, g, a, c] = born(updated, [identity1, second.effect(a, c)])
    return p1, p2


def theorem2_sample(
    state: DensityMatrix, measurements: Sequence[MeasurementSet], mode: Optional[Mode] = None
) -> OnticEnsemble:
    """Two-stage ensemble reproducing the quantum statistics.

    Stage 1 draws an outcome g_m for every first-box setting m from its Born
    marginal. Stage 2 draws, for every (m, a), the second box's outcome from
    the state updated on outcome g_m of setting m.
    """
    mode = mode or Exact()
    if len(state.dims) != 2 or len(measurements) != 2:
        raise ArgumentError("The sampler needs a bipartite state and two measurement sets")
    for meas, d in zip(measurements, state.dims):
        if meas.dim != d:
            raise ArgumentError(f"Measurement dimension {meas.dim} does not match party dimension {d}")

    logger.info("theorem2_sample_attempt", mode=mode.name, dims=list(state.dims))
    first, second = measurements
    boxes = ((first.settings, first.outcomes), (second.settings, second.outcomes))
    p1, p2 = _stage_tables(state, measurements)
    n_m, n_a = first.settings, second.settings

    def assignment(gs: Sequence[int], cs: Sequence[int]) -> CounterfactualAssignment:
        # joint index k = m * n_a + a
        f1 = tuple(gs[m] for m in range(n_m) for _ in range(n_a))
        return CounterfactualAssignment((f1, tuple(cs)))

    if isinstance(mode, Exact):
        branches = first.outcomes ** n_m * second.outcomes ** (n_m * n_a)
        if branches > EXACT_BRANCH_LIMIT:
            raise ResourceError(f"Exact enumeration needs {branches} branches (limit {EXACT_BRANCH_LIMIT})")
        rows = []
        for gs in itertools.product(range(first.outcomes), repeat=n_m):
            w1 = math.prod(p1[m, g] for m, g in enumerate(gs))
            if w1 <= BRANCH_FLOOR:
                continue
            for cs in itertools.product(range(second.outcomes), repeat=n_m * n_a):
                w2 = math.prod(p2[k // n_a, gs[k // n_a], k % n_a, c] for k, c in enumerate(cs))
                if w2 <= 0.0:
                    continue
                rows.append((assignment(gs, cs), w1 * w2))
        ensemble = OnticEnsemble.from_weighted(boxes, rows)
    else:
        rng = mode.rng()
        count = mode.count
        draws = np.zeros((count, n_m + n_m * n_a), dtype=np.int64)
        cdf1 = np.cumsum(p1, axis=1)
        u1 = rng.random((count, n_m))
        for m in range(n_m):
            draws[:, m] = np.minimum((u1[:, m, None] > cdf1[m]).sum(axis=1), first.outcomes - 1)
        u2 = rng.random((count, n_m * n_a))
        for k in range(n_m * n_a):
            m, a = divmod(k, n_a)
            cdf2 = np.cumsum(p2[m, draws[:, m], a, :], axis=1)
            draws[:, n_m + k] = np.minimum((u2[:, k, None] > cdf2).sum(axis=1), second.outcomes - 1)
        rows_unique, counts = np.unique(draws, axis=0, return_counts=True)
        rows = [
            (assignment(row[:n_m].tolist(), row[n_m:].tolist()), c / count)
            for row, c in zip(rows_unique, counts)
        ]
        ensemble = OnticEnsemble.from_weighted(boxes, rows)

    logger.info("theorem2_sample_success", mode=mode.name, support=len(ensemble.support))
    return ensemble


# ===== COUNTERFACTUAL PARAMETER INDEPENDENCE =====
def outcome_vector(e: OnticEnsemble, assignment: CounterfactualAssignment, a: int) -> tuple[int, ...]:
    """First box's outputs for every one of its inputs, at second-box input ``a``."""
    n_a = e.boxes[1][0]
    return tuple(assignment.maps[0][m * n_a + a] for m in range(e.boxes[0][0]))


def cpi_distribution(e: OnticEnsemble, input_distribution: Optional[Sequence[float]] = None) -> tuple[JointDistribution, list]:
    """Joint table over (f2, a, g_vec) with f2 and g_vec indexed by their distinct values."""
    _require_bipartite(e)
    n_a = e.boxes[1][0]
    q = np.full(n_a, 1.0 / n_a) if input_distribution is None else np.asarray(input_distribution, dtype=float)
    if len(q) != n_a or (q < 0).any() or abs(q.sum() - 1.0) > WEIGHT_TOL:
        raise ArgumentError("Input distribution must be a probability vector over the second box's inputs")

    f2_values = sorted({a.maps[1] for a in e.support})
    g_values = sorted({outcome_vector(e, w, a) for w in e.support for a in range(n_a)})
    f2_index = {v: i for i, v in enumerate(f2_values)}
    g_index = {v: i for i, v in enumerate(g_values)}
    rows = []
    for assignment, weight in zip(e.support, e.weights):
        for a in range(n_a):
            rows.append(
                ((f2_index[assignment.maps[1]], a, g_index[outcome_vector(e, assignment, a)]), weight * q[a])
            )
    variables = (("f2", len(f2_values)), ("a", n_a), ("g_vec", len(g_values)))
    return JointDistribution.from_weighted(variables, rows), f2_values


@dataclass(frozen=True)
class CpiReport:
    value: float
    terms: tuple[tuple[tuple[int, ...], float, float], ...]
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "cpi": self.value,
            "pass": self.passed,
            "tolerance": self.tolerance,
            "terms": [{"f2": list(f2), "weight": w, "information": i} for f2, w, i in self.terms],
        }


def cpi_report(e: OnticEnsemble, input_distribution: Optional[Sequence[float]] = None) -> CpiReport:
    dist, f2_values = cpi_distribution(e, input_distribution)
    terms = []
    for index, f2 in enumerate(f2_values):
        weight = dist.probability({"f2": index})
        if weight <= 0.0:
            continue
        conditioned = condition(dist, {"f2": index})
        terms.append((f2, weight, mutual_information(conditioned, "g_vec", "a")))
    value = max(info for _, _, info in terms)
    return CpiReport(value=value, terms=tuple(terms), tolerance=CPI_TOL, passed=value <= CPI_TOL)


def cpi_statistic(e: OnticEnsemble, input_distribution: Optional[Sequence[float]] = None) -> float:
    """max over positive-weight f2 values of I(g_vec : a | f2)."""
    return cpi_report(e, input_distribution).value


def is_cpi(e: OnticEnsemble) -> bool:
    return cpi_statistic(e) <= CPI_TOL


def memory_rate(e: OnticEnsemble, box: int = 0) -> float:
    """Entropy of one box's counterfactual map, the per-instance memory cost."""
    values = sorted({a.maps[box] for a in e.support})
    index = {v: i for i, v in enumerate(values)}
    dist = JointDistribution.from_weighted(
        (("map", len(values)),), (((index[a.maps[box]],), w) for a, w in zip(e.support, e.weights))
    )
    return entropy(dist, "map")


# ===== FEASIBILITY OF CPI ENSEMBLES =====
FAMILIES = ("restricted", "general")


def candidate_assignments(family: str) -> list[CounterfactualAssignment]:
    """All deterministic binary bipartite assignments of a family.

    ``restricted``: the second box's function depends on a only.
    ``general``: both functions depend on (m, a).
    """
    if family not in FAMILIES:
        raise ArgumentError(f"Unknown family {family!r}; choose from {FAMILIES}")
    f1_maps = list(itertools.product(range(2), repeat=4))
    if family == "general":
        f2_maps = list(itertools.product(range(2), repeat=4))
    else:
        f2_maps = [(v0, v1, v0, v1) for v0, v1 in itertools.product(range(2), repeat=2)]
    return [CounterfactualAssignment((f1, f2)) for f1 in f1_maps for f2 in f2_maps]


def _behavior_rows(candidates: list[CounterfactualAssignment], target: Behavior) -> tuple[np.ndarray, np.ndarray]:
    rows, rhs = [], []
    for k, (m, a) in enumerate(joint_inputs(BINARY_PAIR)):
        for g, c in itertools.product(range(2), repeat=2):
            rows.append([1.0 if (w.maps[0][k], w.maps[1][k]) == (g, c) else 0.0 for w in candidates])
            rhs.append(float(target.table[m, a, g, c]))
    return np.array(rows), np.array(rhs)


def _cpi_rows(candidates: list[CounterfactualAssignment]) -> tuple[np.ndarray, np.ndarray]:
    """W(f2, g_vec, a=1) - W(f2, g_vec, a=0) = 0 for every (f2, g_vec)."""
    single = OnticEnsemble(BINARY_PAIR, (candidates[0],), np.array([1.0]))
    f2_values = sorted({w.maps[1] for w in candidates})
    rows = []
    for f2 in f2_values:
        for g_vec in itertools.product(range(2), repeat=2):
            row = []
            for w in candidates:
                hit = [1.0 if w.maps[1] == f2 and outcome_vector(single, w, a) == g_vec else 0.0 for a in range(2)]
                row.append(hit[1] - hit[0])
            if any(row):
                rows.append(row)
    return np.array(rows), np.zeros(len(rows))


def _normalization_row(size: int) -> tuple[np.ndarray, np.ndarray]:
    return np.ones((1, size)), np.array([1.0])


@dataclass(frozen=True, eq=False)
class FamilyFeasibility:
    family: str
    candidates: int
    feasible: bool
    groups: dict
    witness: Optional[OnticEnsemble] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "candidates": self.candidates,
            "feasible": self.feasible,
            "groups": dict(self.groups),
            "witness_support": None if self.witness is None else len(self.witness.support),
        }


def cpi_feasibility(target: Behavior, family: str) -> FamilyFeasibility:
    """Is there an ensemble of ``family`` assignments reproducing ``target`` under CPI?

    With a's distribution fixed and independent of the ensemble, CPI is the
    linear condition that W(f2, g_vec, a) does not depend on a.
    """
    if target.boxes != BINARY_PAIR:
        raise UnsupportedError("Feasibility search covers the binary bipartite scenario only")
    candidates = candidate_assignments(family)
    behavior_a, behavior_b = _behavior_rows(candidates, target)
    cpi_a, cpi_b = _cpi_rows(candidates)
    norm_a, norm_b = _normalization_row(len(candidates))

    def run(name: str, a_eq: np.ndarray, b_eq: np.ndarray) -> LPResult:
        return find_feasible_point(a_eq, b_eq, bounds=(0.0, 1.0), label=f"cpi_{family}_{name}")

    behavior_only = run("behavior", behavior_a, behavior_b)
    cpi_only = run("cpi", np.vstack([cpi_a, norm_a]), np.concatenate([cpi_b, norm_b]))
    both = run("both", np.vstack([behavior_a, cpi_a]), np.concatenate([behavior_b, cpi_b]))

    witness = None
    if both.feasible:
        weights = np.clip(both.solution, 0.0, None)
        keep = weights > BRANCH_FLOOR
        witness = OnticEnsemble.from_weighted(
            BINARY_PAIR, zip([c for c, k in zip(candidates, keep) if k], weights[keep] / weights[keep].sum())
        )
    return FamilyFeasibility(
        family=family,
        candidates=len(candidates),
        feasible=both.feasible,
        groups={"behavior": behavior_only.feasible, "cpi": cpi_only.feasible, "behavior+cpi": both.feasible},
        witness=witness,
    )


@dataclass(frozen=True, eq=False)
class PrCpiCertificate:
    correlator: float
    infeasible: bool
    violated_constraints: tuple[str, ...]
    restricted: FamilyFeasibility
    general: FamilyFeasibility
    witnesses: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {
            "correlator": self.correlator,
            "infeasible": self.infeasible,
            "violated_constraints": list(self.violated_constraints),
            "families": {"restricted": self.restricted.to_dict(), "general": self.general.to_dict()},
            "contradiction_witnesses": list(self.witnesses),
        }


def contradiction_witnesses(target: Behavior) -> list[dict]:
    """Restricted-family assignments whose predictions all lie in the target's support.

    For each, whether g_vec(0) and g_vec(1) differ, i.e. whether the
    counterfactual vector alone reveals a.
    """
    pair_boxes = BINARY_PAIR
    witnesses = []
    for w in candidate_assignments("restricted"):
        supported = all(
            target.table[m, a, w.maps[0][k], w.maps[1][k]] > 0.0
            for k, (m, a) in enumerate(joint_inputs(pair_boxes))
        )
        if not supported:
            continue
        single = OnticEnsemble(pair_boxes, (w,), np.array([1.0]))
        vectors = [outcome_vector(single, w, a) for a in range(2)]
        witnesses.append({
            "f1": list(w.maps[0]),
            "f2": [w.maps[1][0], w.maps[1][1]],
            "g_vec": [list(v) for v in vectors],
            "parity_equals_a": all((v[0] ^ v[1]) == a for a, v in enumerate(vectors)),
            "reveals_a": vectors[0] != vectors[1],
        })
    return witnesses


def pr_cpi_infeasible(e: float = 1.0) -> PrCpiCertificate:
    """Certificate that no ensemble with a-only second-box functions reproduces
    the isotropic box of correlator ``e`` (the PR box at e = 1) under CPI."""
    logger.info("pr_cpi_search_attempt", correlator=e)
    target = isotropic_box(e)
    restricted = cpi_feasibility(target, "restricted")
    general = cpi_feasibility(target, "general")
    violated: tuple[str, ...] = ()
    if not restricted.groups["behavior"]:
        violated = ("behavior",)
    elif not restricted.groups["cpi"]:
        violated = ("cpi",)
    elif not restricted.feasible:
        # each group is satisfiable alone; only their conjunction fails
        violated = ("behavior", "cpi")
    certificate = PrCpiCertificate(
        correlator=e,
        infeasible=not restricted.feasible,
        violated_constraints=violated,
        restricted=restricted,
        general=general,
        witnesses=tuple(contradiction_witnesses(target)),
    )
    logger.info("pr_cpi_search_success", correlator=e, infeasible=certificate.infeasible,
                general_feasible=general.feasible)
    return certificate


def ensemble_residuals(e: OnticEnsemble, target: Behavior) -> tuple[float, float]:
    """Largest table deviation from ``target`` and the CPI statistic."""
    deviation = float(np.abs(ensemble_to_behavior(e).table - target.table).max())
    return deviation, cpi_statistic(e)


# ===== LOOPS =====
@dataclass(frozen=True, eq=False)
class LoopReport:
    pairs: int
    contradiction: float
    unique: float
    multiple: float
    bookkeeping: Optional[dict]
    distribution: Optional[JointDistribution] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "pairs": self.pairs,
            "contradiction_fraction": self.contradiction,
            "unique_fraction": self.unique,
            "multiple_fraction": self.multiple,
            "bookkeeping": self.bookkeeping,
        }


def loop_compose(ex: OnticEnsemble, ey: OnticEnsemble) -> LoopReport:
    """Cross-wire two bipartite copies: g_x feeds a_y and g_y feeds a_x.

    For every pair of assignments and every choice of the free inputs
    (m_x, m_y, uniform) solve g_x = f1x(m_x, g_y), g_y = f1y(m_y, g_x).
    Weight of pairs with several fixed points is split evenly among them.
    """
    for e in (ex, ey):
        if e.boxes != BINARY_PAIR:
            raise UnsupportedError("Loop composition is defined for binary bipartite ensembles")
    logger.info("loop_compose_attempt", support_x=len(ex.support), support_y=len(ey.support))

    none = unique = multiple = 0.0
    rows = []
    for (ix, wx), (iy, wy) in itertools.product(enumerate(ex.support), enumerate(ey.support)):
        weight_pair = ex.weights[ix] * ey.weights[iy]
        if weight_pair == 0.0:
            continue
        for mx, my in itertools.product(range(2), repeat=2):
            weight = weight_pair / 4.0
            solutions = [
                (gx, gy)
                for gx, gy in itertools.product(range(2), repeat=2)
                if wx.maps[0][mx * 2 + gy] == gx and wy.maps[0][my * 2 + gx] == gy
            ]
            if not solutions:
                none += weight
                continue
            if len(solutions) == 1:
                unique += weight
            else:
                multiple += weight
            for gx, gy in solutions:
                cx, cy = wx.maps[1][mx * 2 + gy], wy.maps[1][my * 2 + gx]
                rows.append(((ix, iy, mx, my, gx, gy, cx, cy), weight / len(solutions)))

    bookkeeping, dist = None, None
    consistent = unique + multiple
    if consistent > 0.0:
        variables = (
            ("omega_x", len(ex.support)), ("omega_y", len(ey.support)),
            ("m_x", 2), ("m_y", 2), ("g_x", 2), ("g_y", 2), ("c_x", 2), ("c_y", 2),
        )
        dist = JointDistribution.from_weighted(variables, ((r, w / consistent) for r, w in rows))
        ontic = ("omega_x", "omega_y", "m_x", "m_y")
        bookkeeping = {
            "h_g": entropy(dist, ("g_x", "g_y")),
            "h_g_given_ontic": entropy(dist, ontic + ("g_x", "g_y")) - entropy(dist, ontic),
            "i_gx_gy": mutual_information(dist, "g_x", "g_y"),
            "h_gx": entropy(dist, "g_x"),
            "h_gy": entropy(dist, "g_y"),
        }
    report = LoopReport(
        pairs=len(ex.support) * len(ey.support),
        contradiction=none,
        unique=unique,
        multiple=multiple,
        bookkeeping=bookkeeping,
        distribution=dist,
    )
    logger.info("loop_compose_success", contradiction=none, multiple=multiple)
    return report


# ===== OPERATIONAL VS COUNTERFACTUAL EQUIVALENCE =====
@dataclass(frozen=True, eq=False)
class ContextualityReport:
    ensemble_x: OnticEnsemble
    ensemble_y: OnticEnsemble
    tv_distance: float
    correlation_x: float
    correlation_y: float
    predictions: dict

    @property
    def correlation_difference(self) -> float:
        return abs(self.correlation_x - self.correlation_y)

    def to_dict(self) -> dict:
        return {
            "tv_distance": self.tv_distance,
            "correlation_x": self.correlation_x,
            "correlation_y": self.correlation_y,
            "correlation_difference": self.correlation_difference,
            "predictions": self.predictions,
            "ensemble_x": self.ensemble_x.to_dict(),
            "ensemble_y": self.ensemble_y.to_dict(),
        }


def _counterfactual_correlation(e: OnticEnsemble) -> float:
    return float(sum(w * (1.0 if a.maps[0][0] == a.maps[0][1] else -1.0) for a, w in zip(e.support, e.weights)))


def _predictions(e: OnticEnsemble) -> dict:
    """P(M_B prescribes 0 | M_A prescribes v) for each v."""
    result = {}
    for v in range(2):
        mass = sum(w for a, w in zip(e.support, e.weights) if a.maps[0][0] == v)
        hit = sum(w for a, w in zip(e.support, e.weights) if a.maps[0][0] == v and a.maps[0][1] == 0)
        result[str(v)] = hit / mass
    return result


def contextuality_demo() -> ContextualityReport:
    """One box, measurements M_A (input 0) and M_B (input 1).

    X prescribes equal outcomes for both, Y opposite ones; both are
    operationally uniform.
    """
    boxes = ((2, 2),)
    ensemble_x = OnticEnsemble(
        boxes, (CounterfactualAssignment(((0, 0),)), CounterfactualAssignment(((1, 1),))), np.array([0.5, 0.5])
    )
    ensemble_y = OnticEnsemble(
        boxes, (CounterfactualAssignment(((0, 1),)), CounterfactualAssignment(((1, 0),))), np.array([0.5, 0.5])
    )
    bx, by = ensemble_to_behavior(ensemble_x), ensemble_to_behavior(ensemble_y)
    tv = float(max(np.abs(bx.table[x] - by.table[x]).sum() / 2 for x in range(2)))
    return ContextualityReport(
        ensemble_x=ensemble_x,
        ensemble_y=ensemble_y,
        tv_distance=tv,
        correlation_x=_counterfactual_correlation(ensemble_x),
        correlation_y=_counterfactual_correlation(ensemble_y),
        predictions={"X": _predictions(ensemble_x), "Y": _predictions(ensemble_y)},
    )
