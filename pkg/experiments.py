"""
Named experiments, their configuration, and report rendering.

A report is a plain dict of builtins: the experiment name, the version
stamp, the seed, the full effective configuration, the tolerances in force
and the results. Rendering is deterministic, so the same config and seed
give the same bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Any, Callable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

import bell
import boxes
import counterfactual
import icausality
import prob
import quantum
from boxes import Behavior
from errors import UsageError
from logging_config import get_logger

logger = get_logger(__name__)

LAB_VERSION = "1.0.0"
MAX_SEED = 2 ** 64

TOLERANCES = {
    "verdict": icausality.VERDICT_TOL,
    "chsh_verdict": bell.VERDICT_SLACK,
    "cpi": counterfactual.CPI_TOL,
    "normalization": boxes.NORMALIZATION_TOL,
    "no_signalling": boxes.NO_SIGNALLING_TOL,
    "precondition": prob.PRECONDITION_TOL,
}


# ===== RANDOM STREAMS =====
def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent PCG64 streams, one per trial, fixed by trial index."""
    return [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(count)]


def spawn_seeds(seed: int, count: int) -> list[int]:
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in np.random.SeedSequence(seed).spawn(count)]


# ===== SHARED BUILDERS =====
def parse_angles(spec: str) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """``tsirelson``, ``textbook`` or ``a0,a1;b0,b1`` in radians."""
    named = {"tsirelson": quantum.TSIRELSON_ANGLES, "textbook": quantum.TEXTBOOK_ANGLES}
    if spec in named:
        return named[spec]
    try:
        first, second = spec.split(";")
        return (
            tuple(float(v) for v in first.split(",")),
            tuple(float(v) for v in second.split(",")),
        )
    except ValueError as e:
        raise UsageError(f"Cannot parse angles {spec!r}; use 'tsirelson', 'textbook' or 'a0,a1;b0,b1'") from e


def quantum_setup(state: str, angles: str) -> tuple[quantum.DensityMatrix, list[quantum.MeasurementSet]]:
    rho = quantum.named_state(state)
    first, second = parse_angles(angles)
    return rho, [quantum.standard_measurements(first), quantum.standard_measurements(second)]


def build_resource(kind: str, e: float = 1.0, e1: Optional[float] = None,
                   state: str = "singlet", angles: str = "tsirelson") -> Behavior:
    if kind == "pr":
        return boxes.pr_box()
    if kind == "isotropic":
        return boxes.isotropic_box(e)
    if kind == "correlated":
        return boxes.correlated_box(e, e if e1 is None else e1)
    if kind == "quantum":
        return boxes.from_quantum(*quantum_setup(state, angles))
    if kind == "local":
        return boxes.local_deterministic([[0, 1], [1, 1]])
    raise UsageError(f"Unknown resource {kind!r}")


def coin(inputs: int = 2) -> Behavior:
    """Single box with uniform output for every input."""
    return Behavior(((inputs, 2),), np.full((inputs, 2), 0.5))


def with_independent_middle(pair: Behavior) -> Behavior:
    """Boxes (1, 3) from ``pair`` plus an uncorrelated box 2, ordered (1, 2, 3)."""
    return boxes.permute(boxes.product(pair, coin()), [0, 2, 1])


def random_tripartite(rng: np.random.Generator) -> Behavior:
    state = quantum.random_state(rng, dims=(2, 2, 2))
    measurements = [quantum.random_planar_measurements(rng) for _ in range(3)]
    return boxes.from_quantum(state, measurements)


def random_quantum_pair(rng: np.random.Generator) -> Behavior:
    state = quantum.random_state(rng, dims=(2, 2))
    return boxes.from_quantum(state, [quantum.random_planar_measurements(rng) for _ in range(2)])


def random_lemma1_instance(rng: np.random.Generator) -> prob.JointDistribution:
    """Independent N, Q with O = f(N, Q) for a random table f."""
    card_n, card_q, card_o = (int(v) for v in rng.integers(2, 4, size=3))
    p_n = rng.dirichlet(np.ones(card_n))
    p_q = rng.dirichlet(np.ones(card_q))
    f = rng.integers(0, card_o, size=(card_n, card_q))
    table = np.zeros((card_n, card_q, card_o))
    for n in range(card_n):
        for q in range(card_q):
            table[n, q, f[n, q]] = p_n[n] * p_q[q]
    return prob.JointDistribution((("N", card_n), ("Q", card_q), ("O", card_o)), table)


def deterministic_loop_ensemble(first_map: tuple[int, ...]) -> counterfactual.OnticEnsemble:
    """Point mass whose first box outputs first_map[k] at joint input k."""
    assignment = counterfactual.CounterfactualAssignment((first_map, (0, 0, 0, 0)))
    return counterfactual.point_mass(counterfactual.BINARY_PAIR, assignment)


LOOP_MAPS = {
    # joint index k = 2 m + a; the loop feeds the other copy's g into a
    "identity": (0, 1, 0, 1),
    "negation": (1, 0, 1, 0),
    "constant": (0, 0, 0, 0),
}


# ===== PARAMETER MODELS =====
class Params(BaseModel):
    model_config = ConfigDict(extra="forbid")

    def sampling(self) -> bool:
        return False


class ResourceParams(Params):
    e: float = 1.0
    e1: Optional[float] = None
    state: str = "singlet"
    angles: str = "tsirelson"


class ChshParams(ResourceParams):
    box: Literal["pr", "isotropic", "correlated", "quantum", "local", "classical-max"] = "pr"


class MonogamyParams(Params):
    source: Literal["singlet13", "pr13", "random", "ns-max"] = "singlet13"
    trials: int = Field(default=1000, ge=1)

    def sampling(self) -> bool:
        return self.source == "random"


class GameParams(ResourceParams):
    resource: Literal["pr", "isotropic", "correlated", "quantum", "local", "trivial", "random-quantum"] = "pr"
    exact: bool = True
    samples: int = Field(default=10000, ge=2)
    trials: int = Field(default=100, ge=1)

    def sampling(self) -> bool:
        return not self.exact or self.resource == "random-quantum"


class ProtocolParams(Params):
    e0: float = 1.0
    e1: Optional[float] = None
    levels: int = Field(default=1, ge=1)
    samples: int = Field(default=0, ge=0)
    exact: bool = True

    def sampling(self) -> bool:
        return self.samples > 0


class E12Params(Params):
    e1: float = 0.5
    e2: float = 0.5


class MultiParams(Params):
    system: Literal["ghz", "shared_bit", "independent", "double_pr"] = "ghz"


class Eq1Params(ResourceParams):
    resource: Literal["pr", "isotropic", "correlated", "quantum", "local", "trivial"] = "pr"


class SampleParams(Params):
    state: str = "singlet"
    angles: str = "tsirelson"
    exact: bool = True
    samples: int = Field(default=10000, ge=1)

    def sampling(self) -> bool:
        return not self.exact


class CpiParams(SampleParams):
    source: Literal["theorem2", "witness"] = "theorem2"
    e: float = 1.0 / math.sqrt(2.0)

    def sampling(self) -> bool:
        return self.source == "theorem2" and not self.exact


class LoopParams(Params):
    pair: Literal["identity-negation", "constant", "theorem2"] = "identity-negation"


class PrInfeasibleParams(Params):
    e: float = 1.0


class Lemma1Params(Params):
    instances: int = Field(default=100, ge=1)

    def sampling(self) -> bool:
        return True


class SeriesParams(Params):
    terms: int = Field(default=200, ge=1)
    step: float = Field(default=0.05, gt=0.0, lt=1.0)


class SuiteParams(Params):
    ic_trials: int = Field(default=100, ge=1)
    monogamy_trials: int = Field(default=1000, ge=1)
    protocol_trials: int = Field(default=100000, ge=10)
    sample_draws: int = Field(default=1000000, ge=10)
    lemma_instances: int = Field(default=100, ge=1)

    def sampling(self) -> bool:
        return True


# ===== EXPERIMENTS =====
def run_chsh(p: ChshParams, seed: Optional[int]) -> dict:
    if p.box == "classical-max":
        result = bell.classical_chsh_max()
        return {
            "value": result.maximum,
            "strategies": result.strategies,
            "evaluations": result.evaluations,
            "bound": result.bound,
            "pass": result.passed,
        }
    b = build_resource(p.box, p.e, p.e1, p.state, p.angles)
    value = bell.chsh(b)
    best, pairing = bell.best_chsh(b)
    slack = bell.VERDICT_SLACK
    return {
        "value": value,
        "best_value": best,
        "pairing": pairing.to_dict(),
        "classical_bound": bell.CLASSICAL_BOUND,
        "tsirelson": bell.TSIRELSON_BOUND,
        "ns_bound": bell.NO_SIGNALLING_BOUND,
        "pass_classical": best <= bell.CLASSICAL_BOUND + slack,
        "pass_quantum": best <= bell.TSIRELSON_BOUND + slack,
        "pass_ns": best <= bell.NO_SIGNALLING_BOUND + slack,
        "convention": "output 0 -> +1, output 1 -> -1; signs (+,+,+,-)",
    }


def run_monogamy(p: MonogamyParams, seed: Optional[int]) -> dict:
    if p.source == "ns-max":
        result = bell.ns_monogamy_maximum()
        return {"value": result.maximum, "bound": result.bound, "pass": result.passed}
    if p.source in ("singlet13", "pr13"):
        pair = build_resource("quantum") if p.source == "singlet13" else boxes.pr_box()
        b = with_independent_middle(pair)
        return {"quantum": bell.monogamy_quantum(b).to_dict(), "ns": bell.monogamy_ns(b).to_dict()}

    worst_quantum, worst_ns, passed = 0.0, 0.0, True
    for rng in spawn_rngs(seed, p.trials):
        b = random_tripartite(rng)
        q, ns = bell.monogamy_quantum(b), bell.monogamy_ns(b)
        worst_quantum = max(worst_quantum, q.value)
        worst_ns = max(worst_ns, ns.value)
        passed = passed and q.passed and ns.passed
    return {
        "trials": p.trials,
        "max_quantum": worst_quantum,
        "quantum_bound": bell.QUANTUM_MONOGAMY_BOUND,
        "max_ns": worst_ns,
        "ns_bound": bell.NS_MONOGAMY_BOUND,
        "pass": passed,
    }


def _strategy(p: ResourceParams, kind: str) -> icausality.ICStrategy:
    if kind == "trivial":
        return icausality.trivial_strategy()
    return icausality.xor_wiring_strategy(build_resource(kind, p.e, p.e1, p.state, p.angles))


def run_ic_game(p: GameParams, seed: Optional[int]) -> dict:
    if p.resource == "random-quantum":
        worst, passed = -math.inf, True
        for rng in spawn_rngs(seed, p.trials):
            report = icausality.ic_quantity(icausality.xor_wiring_strategy(random_quantum_pair(rng)))
            worst = max(worst, report.value - report.h_c)
            passed = passed and report.passed
        return {"trials": p.trials, "max_excess": worst, "pass": passed}
    mode = prob.Exact() if p.exact else prob.Sampled(p.samples, seed)
    return icausality.ic_quantity(_strategy(p, p.resource), mode).to_dict()


def run_ic_protocol(p: ProtocolParams, seed: Optional[int]) -> dict:
    e1 = p.e0 if p.e1 is None else p.e1
    strategy = icausality.pawlowski_protocol(p.e0, e1, p.levels)
    addresses = range(strategy.n)
    results: dict[str, Any] = {
        "n": strategy.n,
        "levels": p.levels,
        "value_formula": icausality.pawlowski_value(p.e0, e1, p.levels),
        "success_formula": [icausality.pawlowski_success(p.e0, e1, p.levels, m) for m in addresses],
    }
    if p.exact:
        if icausality.scenario_rows(strategy) <= icausality.EXACT_ROW_LIMIT:
            results["ic"] = icausality.ic_quantity(strategy).to_dict()
        else:
            results["ic"] = None
    if p.samples:
        results["simulation"] = icausality.guess_accuracy(strategy, p.samples, seed).to_dict()
    return results


def run_ic_e12(p: E12Params, seed: Optional[int]) -> dict:
    return icausality.e12_relation(p.e1, p.e2).to_dict()


def run_ic_multi(p: MultiParams, seed: Optional[int]) -> dict:
    system = icausality.named_system(p.system)
    return {
        "system": system.label,
        "flawed": icausality.multipartite_ic_flawed(system).to_dict(),
        "corrected": icausality.multipartite_ic_corrected(system).to_dict(),
    }


def run_ic_eq1(p: Eq1Params, seed: Optional[int]) -> dict:
    return icausality.eq1_check(_strategy(p, p.resource)).to_dict()


def _theorem2(p: SampleParams, seed: Optional[int]) -> tuple[counterfactual.OnticEnsemble, Behavior]:
    state, measurements = quantum_setup(p.state, p.angles)
    mode = prob.Exact() if p.exact else prob.Sampled(p.samples, seed)
    return counterfactual.theorem2_sample(state, measurements, mode), boxes.from_quantum(state, measurements)


def run_cf_sample(p: SampleParams, seed: Optional[int]) -> dict:
    ensemble, born = _theorem2(p, seed)
    deviation, cpi = counterfactual.ensemble_residuals(ensemble, born)
    return {
        "support": len(ensemble.support),
        "max_deviation": deviation,
        "cpi": cpi,
        "memory_rate": counterfactual.memory_rate(ensemble),
        "ensemble": ensemble.to_dict(),
    }


def run_cf_cpi(p: CpiParams, seed: Optional[int]) -> dict:
    if p.source == "witness":
        found = counterfactual.cpi_feasibility(boxes.isotropic_box(p.e), "general")
        if found.witness is None:
            return {"feasible": False, "cpi": None, "pass": False}
        return {"feasible": True, **counterfactual.cpi_report(found.witness).to_dict()}
    ensemble, _ = _theorem2(p, seed)
    return counterfactual.cpi_report(ensemble).to_dict()


def run_cf_loop(p: LoopParams, seed: Optional[int]) -> dict:
    if p.pair == "theorem2":
        ensemble, _ = _theorem2(SampleParams(), seed)
        ex = ey = ensemble
    elif p.pair == "constant":
        ex = ey = deterministic_loop_ensemble(LOOP_MAPS["constant"])
    else:
        ex = deterministic_loop_ensemble(LOOP_MAPS["identity"])
        ey = deterministic_loop_ensemble(LOOP_MAPS["negation"])
    return counterfactual.loop_compose(ex, ey).to_dict()


def run_cf_pr_infeasible(p: PrInfeasibleParams, seed: Optional[int]) -> dict:
    return counterfactual.pr_cpi_infeasible(p.e).to_dict()


def run_cf_contextuality(p: Params, seed: Optional[int]) -> dict:
    return counterfactual.contextuality_demo().to_dict()


def run_prob_lemma1(p: Lemma1Params, seed: Optional[int]) -> dict:
    residuals = [
        prob.lemma1_residual(random_lemma1_instance(rng), "N", "Q", "O") for rng in spawn_rngs(seed, p.instances)
    ]
    worst = max(abs(r) for r in residuals)
    return {"instances": p.instances, "max_abs_residual": worst, "pass": worst < 1e-10}


def run_prob_series(p: SeriesParams, seed: Optional[int]) -> dict:
    rows = []
    for e in np.arange(0.0, 1.0 - 1e-12, p.step):
        e = round(float(e), 12)
        series = prob.binary_entropy_series(e, p.terms)
        closed = 1.0 - prob.binary_entropy((1.0 + e) / 2.0)
        rows.append({"e": e, "series": series, "closed": closed, "difference": abs(series - closed)})
    worst = max(row["difference"] for row in rows)
    return {"terms": p.terms, "rows": rows, "max_difference": worst, "pass": worst < 1e-8}


@dataclass(frozen=True)
class Experiment:
    name: str
    params: type[Params]
    runner: Callable[[Any, Optional[int]], dict]
    summary: str


EXPERIMENTS: dict[str, Experiment] = {
    e.name: e
    for e in (
        Experiment("bell.chsh", ChshParams, run_chsh, "CHSH value of a box against the three bounds"),
        Experiment("bell.monogamy", MonogamyParams, run_monogamy, "Linear and quadratic monogamy checks"),
        Experiment("ic.game", GameParams, run_ic_game, "Information-causality quantity of the XOR wiring"),
        Experiment("ic.protocol", ProtocolParams, run_ic_protocol, "Nested protocol: formula, exact value, simulation"),
        Experiment("ic.e12", E12Params, run_ic_e12, "Composite correlator and its series residual"),
        Experiment("ic.multi", MultiParams, run_ic_multi, "Flawed and corrected multipartite definitions"),
        Experiment("ic.eq1", Eq1Params, run_ic_eq1, "Single-measurement inequality check"),
        Experiment("cf.sample", SampleParams, run_cf_sample, "Two-stage ontic ensemble for a quantum pair"),
        Experiment("cf.cpi", CpiParams, run_cf_cpi, "Counterfactual parameter independence statistic"),
        Experiment("cf.loop", LoopParams, run_cf_loop, "Cross-wired loop consistency"),
        Experiment("cf.pr-infeasible", PrInfeasibleParams, run_cf_pr_infeasible, "CPI feasibility certificate"),
        Experiment("cf.contextuality", Params, run_cf_contextuality, "Operationally equal, counterfactually opposite"),
        Experiment("prob.lemma1", Lemma1Params, run_prob_lemma1, "Entropy identity on random instances"),
        Experiment("prob.series", SeriesParams, run_prob_series, "Binary-entropy power series against the closed form"),
    )
}


# ===== CONFIGURATION =====
class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: Optional[str] = None
    format: Literal["json", "csv"] = "json"


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment: str
    parameters: dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    output: OutputSpec = Field(default_factory=OutputSpec)

    @field_validator("experiment")
    @classmethod
    def experiment_must_be_registered(cls, v: str) -> str:
        if v not in EXPERIMENTS:
            raise ValueError(f"Unknown experiment {v!r}; choose from {sorted(EXPERIMENTS)}")
        return v

    @field_validator("seed")
    @classmethod
    def seed_must_fit_64_bits(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and not 0 <= v < MAX_SEED:
            raise ValueError("Seed must be a 64-bit unsigned integer")
        return v

    @model_validator(mode="after")
    def parameters_must_validate(self) -> "ExperimentConfig":
        params = EXPERIMENTS[self.experiment].params.model_validate(self.parameters)
        if params.sampling() and self.seed is None:
            raise ValueError(f"Experiment {self.experiment!r} samples with these parameters and needs a seed")
        return self

    def typed_parameters(self) -> Params:
        return EXPERIMENTS[self.experiment].params.model_validate(self.parameters)


def load_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise UsageError(f"Invalid configuration: {e}") from e


STRUCTURAL_KEYS = ("experiment", "seed", "format", "output")


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Non-structural keys are parameters."""
    data: dict[str, Any] = {"parameters": {}}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"Line {number}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise UsageError(f"Line {number}: empty key")
        if key in STRUCTURAL_KEYS:
            data[key] = value
        else:
            data["parameters"][key] = value
    return data


def merge_overrides(data: dict, overrides: dict) -> dict:
    """Config dict from file values and flag values; flags win."""
    structural = {
        key: overrides[key] if overrides.get(key) is not None else data.get(key)
        for key in STRUCTURAL_KEYS
    }
    output = {"path": structural["output"], "format": structural["format"]}
    return {
        "experiment": structural["experiment"],
        "seed": structural["seed"],
        "parameters": {**data.get("parameters", {}), **overrides.get("parameters", {})},
        "output": {k: v for k, v in output.items() if v is not None},
    }


# ===== RUNNING =====
def to_builtin(value: Any) -> Any:
    """JSON-ready copy: numpy scalars and arrays become Python values, NaN becomes None."""
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if math.isnan(value) else value
    return value


def run(config: ExperimentConfig) -> dict:
    experiment = EXPERIMENTS[config.experiment]
    params = config.typed_parameters()
    logger.info("experiment_attempt", experiment=config.experiment, seed=config.seed)
    results = experiment.runner(params, config.seed)
    logger.info("experiment_success", experiment=config.experiment, seed=config.seed)
    return to_builtin({
        "experiment": config.experiment,
        "version": LAB_VERSION,
        "seed": config.seed,
        "config": {
            "experiment": config.experiment,
            "parameters": params.model_dump(),
            "seed": config.seed,
            "output": config.output.model_dump(),
        },
        "tolerances": TOLERANCES,
        "results": results,
    })


# ===== SUITE =====
def _row(check: int, name: str, passed: bool, **values: Any) -> dict:
    return {"check": check, "name": name, "pass": bool(passed), **values}


def check_chsh(p: SuiteParams, seed: int) -> dict:
    pr = bell.chsh(boxes.pr_box())
    singlet, _ = bell.best_chsh(build_resource("quantum", angles="textbook"))
    classical = bell.classical_chsh_max()
    passed = (
        abs(pr - 4.0) <= 1e-12
        and abs(singlet - bell.TSIRELSON_BOUND) <= 1e-9
        and classical.maximum == 2.0
        and classical.evaluations == 64
    )
    return _row(1, "chsh_values", passed, pr=pr, singlet=singlet, classical_max=classical.maximum)


def check_ic(p: SuiteParams, seed: int) -> dict:
    pr = icausality.ic_quantity(icausality.xor_wiring_strategy())
    worst = -math.inf
    for rng in spawn_rngs(seed, p.ic_trials):
        report = icausality.ic_quantity(icausality.xor_wiring_strategy(random_quantum_pair(rng)))
        worst = max(worst, report.value - report.h_c)
    passed = abs(pr.value - 2.0) <= 1e-9 and abs(pr.h_c - 1.0) <= 1e-9 and worst <= icausality.VERDICT_TOL
    return _row(2, "information_causality", passed, pr_value=pr.value, pr_h_c=pr.h_c, quantum_max_excess=worst)


def check_eq1(p: SuiteParams, seed: int) -> dict:
    pr = icausality.eq1_check(icausality.xor_wiring_strategy())
    # Bob measures Z for both addresses, so his two measurements are one
    compatible = [quantum.z_measurement(2), quantum.standard_measurements(quantum.TSIRELSON_ANGLES[1])]
    controls = {
        "trivial": icausality.eq1_check(icausality.trivial_strategy()),
        "local": icausality.eq1_check(icausality.xor_wiring_strategy(build_resource("local"))),
        "singlet_compatible": icausality.eq1_check_quantum(quantum.singlet(), compatible),
    }
    incompatible = icausality.eq1_check_quantum(quantum.singlet(), quantum_setup("singlet", "tsirelson")[1])
    passed = (not pr.holds) and abs(pr.maximum - 1.0) <= 1e-9 and abs(pr.total - 2.0) <= 1e-9
    passed = passed and all(r.holds for r in controls.values())
    return _row(
        3, "single_measurement_inequality", passed,
        pr_max=pr.maximum, pr_sum=pr.total,
        controls={k: r.holds for k, r in controls.items()},
        singlet_incompatible={"max": incompatible.maximum, "sum": incompatible.total, "holds": incompatible.holds},
    )


def check_theorem2(p: SuiteParams, seed: int) -> dict:
    state, measurements = quantum_setup("singlet", "tsirelson")
    born = boxes.from_quantum(state, measurements)
    exact = counterfactual.theorem2_sample(state, measurements)
    deviation, cpi = counterfactual.ensemble_residuals(exact, born)
    sampled = counterfactual.theorem2_sample(state, measurements, prob.Sampled(p.sample_draws, seed))
    observed = counterfactual.ensemble_to_behavior(sampled).table
    sigma = np.sqrt(born.table * (1.0 - born.table) / p.sample_draws)
    worst_sigma = float(np.max(np.abs(observed - born.table) - 5.0 * sigma))
    passed = deviation <= 1e-10 and cpi <= 1e-10 and worst_sigma <= 1e-12
    return _row(4, "two_stage_sampler", passed, exact_deviation=deviation, exact_cpi=cpi,
                sampled_excess_over_5_sigma=worst_sigma)


def check_pr_infeasible(p: SuiteParams, seed: int) -> dict:
    pr = counterfactual.pr_cpi_infeasible(1.0)
    control = counterfactual.pr_cpi_infeasible(0.0)
    passed = pr.infeasible and not control.infeasible
    return _row(5, "pr_cpi_infeasible", passed, pr_infeasible=pr.infeasible, control_infeasible=control.infeasible,
                violated=list(pr.violated_constraints))


def check_loops(p: SuiteParams, seed: int) -> dict:
    paradox = run_cf_loop(LoopParams(pair="identity-negation"), seed)
    crossed = run_cf_loop(LoopParams(pair="theorem2"), seed)
    passed = paradox["contradiction_fraction"] == 1.0 and crossed["contradiction_fraction"] == 0.0
    return _row(6, "loop_consistency", passed, negation=paradox["contradiction_fraction"],
                theorem2=crossed["contradiction_fraction"])


def check_series(p: SuiteParams, seed: int) -> dict:
    series = run_prob_series(SeriesParams(), seed)
    worst_s = 0.0
    grid = np.linspace(0.0, 0.95, 20)
    solvable = 0
    for e1 in grid:
        for e2 in grid:
            report = icausality.e12_relation(float(e1), float(e2))
            if report.solvable:
                solvable += 1
                worst_s = max(worst_s, report.agreement)
    passed = series["pass"] and worst_s <= 1e-8
    return _row(7, "entropy_series", passed, series_max_difference=series["max_difference"],
                e12_max_disagreement=worst_s, e12_solvable=solvable)


def check_protocol(p: SuiteParams, seed: int) -> dict:
    seeds = iter(spawn_seeds(seed, 6))
    worst = -math.inf
    for e in (1.0, 0.9, 1.0 / math.sqrt(2.0)):
        for levels in (1, 2):
            report = icausality.guess_accuracy(icausality.pawlowski_protocol(e, e, levels), p.protocol_trials, next(seeds))
            for m, (trials, accuracy) in enumerate(zip(report.trials, report.accuracy)):
                expected = icausality.pawlowski_success(e, e, levels, m)
                sigma = math.sqrt(expected * (1.0 - expected) / trials)
                worst = max(worst, abs(accuracy - expected) - 3.0 * sigma)
    perfect = [icausality.ic_quantity(icausality.pawlowski_protocol(1.0, 1.0, levels)).value for levels in (1, 2)]
    e_high, e_low = math.sqrt(1.05 / 2.0), math.sqrt(0.95 / 2.0)
    exceeds = any(icausality.pawlowski_value(e_high, e_high, n) > 1.0 for n in range(1, 33))
    stays = all(icausality.pawlowski_value(e_low, e_low, n) <= 1.0 for n in range(1, 65))
    passed = (
        worst <= 1e-12
        and abs(perfect[0] - 2.0) <= 1e-9
        and abs(perfect[1] - 4.0) <= 1e-9
        and exceeds
        and stays
    )
    return _row(8, "nested_protocol", passed, simulation_excess_over_3_sigma=worst, perfect_values=perfect,
                exceeds_above=exceeds, stays_below=stays)


def check_monogamy(p: SuiteParams, seed: int) -> dict:
    saturating = bell.monogamy_quantum(with_independent_middle(build_resource("quantum")))
    pr13 = bell.monogamy_quantum(with_independent_middle(boxes.pr_box()))
    random_results = run_monogamy(MonogamyParams(source="random", trials=p.monogamy_trials), seed)
    passed = (
        abs(saturating.value - 8.0) <= 1e-9
        and random_results["max_quantum"] <= 8.0 + 1e-6
        and random_results["max_ns"] <= 4.0 + 1e-9
        and not pr13.passed
    )
    return _row(9, "monogamy", passed, saturating=saturating.value, pr13=pr13.value,
                random_max_quantum=random_results["max_quantum"], random_max_ns=random_results["max_ns"])


def check_multipartite(p: SuiteParams, seed: int) -> dict:
    values = {}
    passed = True
    for key in ("ghz", "shared_bit"):
        system = icausality.named_system(key)
        flawed = icausality.multipartite_ic_flawed(system)
        corrected = icausality.multipartite_ic_corrected(system)
        values[key] = {"flawed": flawed.value, "corrected": corrected.value, "h_c": flawed.h_c}
        passed = passed and abs(flawed.value - 2.0) <= 1e-9 and abs(flawed.h_c - 1.0) <= 1e-9
        passed = passed and abs(corrected.value - 1.0) <= 1e-9 and corrected.passed
    return _row(10, "multipartite", passed, **values)


def check_lemma1(p: SuiteParams, seed: int) -> dict:
    result = run_prob_lemma1(Lemma1Params(instances=p.lemma_instances), seed)
    return _row(11, "entropy_identity", result["pass"], max_abs_residual=result["max_abs_residual"])


def check_contextuality(p: SuiteParams, seed: int) -> dict:
    report = counterfactual.contextuality_demo()
    passed = report.tv_distance == 0.0 and report.correlation_difference == 2.0
    return _row(12, "contextuality", passed, tv_distance=report.tv_distance,
                correlation_difference=report.correlation_difference)


SUITES: dict[str, tuple[Callable[[SuiteParams, int], dict], ...]] = {
    "paper-checks": (
        check_chsh, check_ic, check_eq1, check_theorem2, check_pr_infeasible, check_loops,
        check_series, check_protocol, check_monogamy, check_multipartite, check_lemma1, check_contextuality,
    ),
}


def suite(name: str, seed: int, parameters: Optional[dict] = None) -> dict:
    if name not in SUITES:
        raise UsageError(f"Unknown suite {name!r}; choose from {sorted(SUITES)}")
    if not 0 <= seed < MAX_SEED:
        raise UsageError("Seed must be a 64-bit unsigned integer")
    try:
        params = SuiteParams.model_validate(parameters or {})
    except ValidationError as e:
        raise UsageError(f"Invalid suite parameters: {e}") from e

    checks = SUITES[name]
    # one child seed per check, fixed by position
    seeds = spawn_seeds(seed, len(checks))
    rows = []
    for check, child in zip(checks, seeds):
        logger.info("suite_check_attempt", suite=name, check=check.__name__)
        row = check(params, child)
        logger.info("suite_check_success", suite=name, check=check.__name__, passed=row["pass"])
        rows.append(row)
    return to_builtin({
        "experiment": f"suite.{name}",
        "version": LAB_VERSION,
        "seed": seed,
        "config": {"suite": name, "parameters": params.model_dump(), "seed": seed},
        "tolerances": TOLERANCES,
        "results": {"rows": rows, "checks": len(rows), "passed": sum(r["pass"] for r in rows)},
    })


# ===== RENDERING =====
def render_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def flatten(value: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(value, dict):
        items = []
        for key in sorted(value):
            items.extend(flatten(value[key], f"{prefix}.{key}" if prefix else str(key)))
        return items
    if isinstance(value, list):
        items = []
        for i, item in enumerate(value):
            items.extend(flatten(item, f"{prefix}[{i}]"))
        return items
    return [(prefix, value)]


def render_csv(report: dict) -> str:
    """Per-row tables when the results carry ``rows``; otherwise one key/value row per leaf."""
    buffer = io.StringIO()
    results = report["results"]
    rows = results.get("rows") if isinstance(results, dict) else None
    if rows:
        flat_rows = [dict(flatten(row)) for row in rows]
        columns = sorted({key for row in flat_rows for key in row})
        writer = csv.DictWriter(buffer, fieldnames=["experiment", "seed"] + columns, lineterminator="\n")
        writer.writeheader()
        for row in flat_rows:
            writer.writerow({"experiment": report["experiment"], "seed": report["seed"], **row})
    else:
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["experiment", "seed", "key", "value"])
        for key, value in flatten(results):
            writer.writerow([report["experiment"], report["seed"], key, value])
    return buffer.getvalue()


RENDERERS = {"json": render_json, "csv": render_csv}


def render(report: dict, fmt: str = "json") -> str:
    if fmt not in RENDERERS:
        raise UsageError(f"Unknown format {fmt!r}; choose from {sorted(RENDERERS)}")
    return RENDERERS[fmt](report)
