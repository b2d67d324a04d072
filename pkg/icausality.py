"""
The information-causality game and the protocols that play it.

Alice holds n uniform independent bits A, Bob a uniform address m in [0, n).
They share box pairs; in each pair box 0 is Bob's (input x, output g) and
box 1 is Alice's (input y, output o). Alice sends one message c and Bob
guesses a_m. The game scores sum_x I(a_x : g c | m = x) against H(c).
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np
from scipy.optimize import bisect
from scipy.special import comb

from boxes import Behavior, correlated_box, from_quantum, local_deterministic, merge, mix, permute, pr_box, product
from errors import ArgumentError, DomainError, ResourceError, UnsupportedError
from logging_config import get_logger
from prob import (
    Exact,
    JointDistribution,
    Mode,
    Sampled,
    channel_capacity,
    condition,
    conditional_mutual_information,
    entropy,
    jackknife_estimate,
    mutual_information,
    sample_counts,
)
from quantum import DensityMatrix, MeasurementSet, ghz, z_measurement

logger = get_logger(__name__)

VERDICT_TOL = 1e-9
EXACT_ROW_LIMIT = 2 ** 20
EQ1_MAX_BITS = 3
ROOT_XTOL = 1e-12
SERIES_PRECISION = 1e-16
SERIES_MAX_TERMS = 10 ** 7
SERIES_CHUNK = 2 ** 20

AliceInput = Callable[[int, tuple[int, ...], tuple[int, ...]], int]
Encoder = Callable[[tuple[int, ...], tuple[int, ...]], int]
BobInput = Callable[[int, int], int]
Decoder = Callable[[int, int, tuple[int, ...]], int]


# ===== STRATEGIES =====
@dataclass(frozen=True, eq=False)
class ICStrategy:
    """A full protocol for the game.

    Pairs are used in order. Alice's input to pair k may depend on A and on
    her outputs from pairs 0..k-1; Bob's input depends on m only.
    """

    n: int
    resources: tuple[Behavior, ...]
    alice_input: AliceInput
    encoder: Encoder
    bob_input: BobInput
    decoder: Decoder
    message_cardinality: int = 2
    guess_cardinality: int = 2

    def __post_init__(self):
        if self.n < 1:
            raise ArgumentError(f"The game needs at least one bit, got n = {self.n}")
        resources = tuple(self.resources)
        for k, b in enumerate(resources):
            if b.size != 2:
                raise ArgumentError(f"Resource {k} has {b.size} boxes; each resource is one box pair")
        if self.message_cardinality < 1 or self.guess_cardinality < 2:
            raise ArgumentError("Message and guess alphabets must be non-empty and guesses at least binary")
        object.__setattr__(self, "resources", resources)

    @property
    def bob_outcomes(self) -> int:
        return math.prod(b.boxes[0][1] for b in self.resources)

    def bob_code(self, outputs: Sequence[int]) -> int:
        code = 0
        for b, g in zip(self.resources, outputs):
            code = code * b.boxes[0][1] + int(g)
        return code

    def message(self, bits: tuple[int, ...], alice_outputs: tuple[int, ...]) -> int:
        c = int(self.encoder(bits, alice_outputs))
        if not 0 <= c < self.message_cardinality:
            raise ArgumentError(f"Encoder produced {c}, outside a message alphabet of {self.message_cardinality}")
        return c

    def guess(self, m: int, c: int, bob_outputs: tuple[int, ...]) -> int:
        g = int(self.decoder(m, c, bob_outputs))
        if not 0 <= g < self.guess_cardinality:
            raise ArgumentError(f"Decoder produced {g}, outside a guess alphabet of {self.guess_cardinality}")
        return g


class TreeProtocol:
    """Nested XOR protocol over ``levels`` levels of box pairs, n = 2**levels.

    Pairs are numbered bottom level first. Node j of level l XOR-encodes the
    two level-(l-1) values below it; Bob walks down from the root reading the
    bits of m most significant first.
    """

    def __init__(self, levels: int):
        if levels < 1:
            raise ArgumentError(f"The protocol needs at least one level, got {levels}")
        self.levels = levels
        self.n = 2 ** levels
        self.offsets = [0]
        for level in range(1, levels + 1):
            self.offsets.append(self.offsets[-1] + 2 ** (levels - level))
        self.pairs = self.offsets[-1]

    def node(self, k: int) -> tuple[int, int]:
        for level in range(1, self.levels + 1):
            if k < self.offsets[level]:
                return level, k - self.offsets[level - 1]
        raise ArgumentError(f"Pair {k} outside a protocol of {self.pairs} pairs")

    def values(self, bits: Sequence[int], outputs: Sequence[int], level: int) -> list[int]:
        v = [int(b) for b in bits]
        for l in range(1, level + 1):
            v = [v[2 * j] ^ int(outputs[self.offsets[l - 1] + j]) for j in range(len(v) // 2)]
        return v

    def alice_input(self, k: int, bits: tuple[int, ...], outputs: tuple[int, ...]) -> int:
        level, j = self.node(k)
        v = self.values(bits, outputs, level - 1)
        return v[2 * j] ^ v[2 * j + 1]

    def encoder(self, bits: tuple[int, ...], outputs: tuple[int, ...]) -> int:
        return self.values(bits, outputs, self.levels)[0]

    def bob_input(self, k: int, m: int) -> int:
        level, _ = self.node(k)
        return (m >> (level - 1)) & 1

    def decoder(self, m: int, c: int, outputs: tuple[int, ...]) -> int:
        g = c
        for level in range(1, self.levels + 1):
            g ^= int(outputs[self.offsets[level - 1] + (m >> level)])
        return g


def _require_binary_pair(b: Behavior) -> None:
    if b.boxes != ((2, 2), (2, 2)):
        raise UnsupportedError(f"XOR wiring needs a binary box pair, got alphabets {b.boxes}")


def xor_wiring_strategy(resource: Optional[Behavior] = None, encoder: Optional[Encoder] = None) -> ICStrategy:
    """Two-bit game with one pair: y = a0 ^ a1, x = m, c = a0 ^ o, g = c ^ g_box."""
    resource = resource if resource is not None else pr_box()
    _require_binary_pair(resource)
    tree = TreeProtocol(1)
    return ICStrategy(
        n=2,
        resources=(resource,),
        alice_input=tree.alice_input,
        encoder=encoder or tree.encoder,
        bob_input=tree.bob_input,
        decoder=tree.decoder,
    )


def _first_bit(bits: tuple[int, ...], outputs: tuple[int, ...]) -> int:
    return bits[0]


def _no_input(k: int, *args) -> int:
    return 0


def _echo_message(m: int, c: int, outputs: tuple[int, ...]) -> int:
    return c


def trivial_strategy(n: int = 2) -> ICStrategy:
    """No boxes: Alice sends a0 and Bob repeats it."""
    return ICStrategy(n, (), _no_input, _first_bit, _no_input, _echo_message)


def pawlowski_protocol(e0: float, e1: float, levels: int) -> ICStrategy:
    """Nested protocol for n = 2**levels bits on correlated_box(e0, e1) pairs."""
    for e in (e0, e1):
        if not 0.0 <= e <= 1.0:
            raise DomainError(f"Correlator {e!r} outside [0, 1]")
    tree = TreeProtocol(levels)
    box = correlated_box(e0, e1)
    return ICStrategy(
        n=tree.n,
        resources=(box,) * tree.pairs,
        alice_input=tree.alice_input,
        encoder=tree.encoder,
        bob_input=tree.bob_input,
        decoder=tree.decoder,
    )


# ===== EXACT SCENARIO =====
def scenario_rows(s: ICStrategy) -> int:
    branches = math.prod(b.boxes[0][1] * b.boxes[1][1] for b in s.resources)
    return 2 ** s.n * s.n * branches


def _branches(s: ICStrategy, bits: tuple[int, ...], m: int) -> Iterator[tuple[float, tuple[int, ...], tuple[int, ...]]]:
    """(weight, Bob outputs, Alice outputs) for every box-output branch."""

    def walk(k: int, weight: float, bob: tuple[int, ...], alice: tuple[int, ...]):
        if k == len(s.resources):
            yield weight, bob, alice
            return
        b = s.resources[k]
        x = int(s.bob_input(k, m))
        y = int(s.alice_input(k, bits, alice))
        if not (0 <= x < b.boxes[0][0] and 0 <= y < b.boxes[1][0]):
            raise ArgumentError(f"Inputs ({x}, {y}) outside the alphabets of pair {k}")
        outcomes = b.table[x, y]
        for g, o in zip(*np.nonzero(outcomes)):
            yield from walk(k + 1, weight * float(outcomes[g, o]), bob + (int(g),), alice + (int(o),))

    yield from walk(0, 1.0, (), ())


def bit_labels(n: int) -> tuple[str, ...]:
    return tuple(f"a{i}" for i in range(n))


def scenario_distribution(s: ICStrategy) -> JointDistribution:
    """Exact joint table over (a_0..a_{n-1}, m, b, c, g); b codes Bob's raw box outputs."""
    rows = scenario_rows(s)
    if rows > EXACT_ROW_LIMIT:
        raise ResourceError(f"Exact scenario needs {rows} rows, limit is {EXACT_ROW_LIMIT}")
    variables = tuple((label, 2) for label in bit_labels(s.n)) + (
        ("m", s.n),
        ("b", s.bob_outcomes),
        ("c", s.message_cardinality),
        ("g", s.guess_cardinality),
    )

    def weighted_rows():
        prior = 1.0 / (2 ** s.n * s.n)
        for bits in itertools.product(range(2), repeat=s.n):
            for m in range(s.n):
                for weight, bob, alice in _branches(s, bits, m):
                    c = s.message(bits, alice)
                    g = s.guess(m, c, bob)
                    yield bits + (m, s.bob_code(bob), c, g), prior * weight

    return JointDistribution.from_weighted(variables, weighted_rows())


# ===== SAMPLED SCENARIO =====
@dataclass(frozen=True, eq=False)
class Simulation:
    bits: np.ndarray
    m: np.ndarray
    c: np.ndarray
    g: np.ndarray


def simulate(s: ICStrategy, trials: int, rng: np.random.Generator) -> Simulation:
    if trials < 1:
        raise ArgumentError(f"Need at least one trial, got {trials}")
    bits = rng.integers(0, 2, size=(trials, s.n))
    m = rng.integers(0, s.n, size=trials)
    u = rng.random(size=(trials, len(s.resources)))
    cdfs = [np.cumsum(b.table.reshape(b.boxes[0][0], b.boxes[1][0], -1), axis=-1) for b in s.resources]

    c = np.empty(trials, dtype=np.int64)
    g = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        row = tuple(int(v) for v in bits[t])
        address = int(m[t])
        bob: tuple[int, ...] = ()
        alice: tuple[int, ...] = ()
        for k, (b, cdf) in enumerate(zip(s.resources, cdfs)):
            x = int(s.bob_input(k, address))
            y = int(s.alice_input(k, row, alice))
            cumulative = cdf[x, y]
            joint = int(np.searchsorted(cumulative, u[t, k] * cumulative[-1], side="right"))
            g_k, o_k = divmod(joint, b.boxes[1][1])
            bob += (g_k,)
            alice += (o_k,)
        c[t] = s.message(row, alice)
        g[t] = s.guess(address, int(c[t]), bob)
    return Simulation(bits=bits, m=m, c=c, g=g)


@dataclass(frozen=True)
class AccuracyReport:
    trials: tuple[int, ...]
    successes: tuple[int, ...]
    seed: int

    @property
    def accuracy(self) -> tuple[float, ...]:
        return tuple(s / t if t else math.nan for s, t in zip(self.successes, self.trials))

    @property
    def overall(self) -> float:
        return sum(self.successes) / sum(self.trials)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "overall": self.overall,
            "addresses": [
                {"address": m, "trials": t, "successes": s, "accuracy": s / t if t else None}
                for m, (t, s) in enumerate(zip(self.trials, self.successes))
            ],
        }


def guess_accuracy(s: ICStrategy, trials: int, seed: int) -> AccuracyReport:
    """Monte Carlo success rate of Bob's guess, per address."""
    start_time = time.time()
    logger.info("guess_accuracy_attempt", n=s.n, trials=trials, seed=seed)
    sim = simulate(s, trials, np.random.default_rng(seed))
    target = sim.bits[np.arange(trials), sim.m]
    hits = sim.g == target
    per_trials = tuple(int(v) for v in np.bincount(sim.m, minlength=s.n))
    per_hits = tuple(int(v) for v in np.bincount(sim.m, weights=hits.astype(float), minlength=s.n).round())
    logger.info("guess_accuracy_success", n=s.n, trials=trials,
                latency_ms=int((time.time() - start_time) * 1000))
    return AccuracyReport(trials=per_trials, successes=per_hits, seed=seed)


# ===== INFORMATION CAUSALITY =====
@dataclass(frozen=True)
class ICReport:
    value: float
    h_c: float
    terms: tuple[float, ...]
    passed: bool
    tolerance: float
    mode: str
    stderr: Optional[tuple[float, ...]] = None
    samples: Optional[int] = None

    def to_dict(self) -> dict:
        data = {
            "value": self.value,
            "h_c": self.h_c,
            "terms": list(self.terms),
            "pass": self.passed,
            "tolerance": self.tolerance,
            "mode": self.mode,
        }
        if self.stderr is not None:
            data["stderr"] = {"value": self.stderr[0], "h_c": self.stderr[1], "terms": list(self.stderr[2:])}
            data["samples"] = self.samples
        return data


def ic_terms(dist: JointDistribution, n: int, guess_labels: Sequence[str] = ("g", "c")) -> list[float]:
    """I(a_x : guess_labels | m = x) for every address x."""
    return [
        mutual_information(condition(dist, {"m": x}), f"a{x}", tuple(guess_labels))
        for x in range(n)
    ]


def ic_quantity(s: ICStrategy, mode: Optional[Mode] = None) -> ICReport:
    mode = mode or Exact()
    start_time = time.time()
    logger.info("ic_quantity_attempt", n=s.n, pairs=len(s.resources), mode=mode.name)

    if isinstance(mode, Sampled):
        report = _ic_sampled(s, mode)
    else:
        dist = scenario_distribution(s)
        terms = ic_terms(dist, s.n)
        value, h_c = float(sum(terms)), entropy(dist, "c")
        report = ICReport(value, h_c, tuple(terms), value <= h_c + VERDICT_TOL, VERDICT_TOL, mode.name)

    logger.info("ic_quantity_success", n=s.n, value=report.value, h_c=report.h_c, passed=report.passed,
                latency_ms=int((time.time() - start_time) * 1000))
    return report


def _ic_sampled(s: ICStrategy, mode: Sampled) -> ICReport:
    if mode.count < 2:
        raise ArgumentError("Sampled information estimates need at least two draws")
    sim = simulate(s, mode.count, mode.rng())
    variables = tuple((label, 2) for label in bit_labels(s.n)) + (
        ("m", s.n),
        ("c", s.message_cardinality),
        ("g", s.guess_cardinality),
    )
    samples = np.column_stack([sim.bits, sim.m, sim.c, sim.g])
    counts = sample_counts(variables, samples)

    def statistic(dist: JointDistribution) -> list[float]:
        terms = ic_terms(dist, s.n)
        return [sum(terms), entropy(dist, "c")] + terms

    estimate = jackknife_estimate(variables, counts, statistic)
    corrected = [float(v) for v in estimate.corrected]
    value, h_c = corrected[0], corrected[1]
    return ICReport(
        value=value,
        h_c=h_c,
        terms=tuple(corrected[2:]),
        passed=value <= h_c + VERDICT_TOL,
        tolerance=VERDICT_TOL,
        mode=mode.name,
        stderr=tuple(float(v) for v in estimate.stderr),
        samples=estimate.samples,
    )


# ===== APPENDIX FORMULAS =====
def pawlowski_success(e0: float, e1: float, levels: int, address: int) -> float:
    """Probability that Bob's guess of a_address is right in the nested protocol."""
    if not 0 <= address < 2 ** levels:
        raise ArgumentError(f"Address {address} outside [0, {2 ** levels})")
    ones = bin(address).count("1")
    return (1.0 + e0 ** (levels - ones) * e1 ** ones) / 2.0


def pawlowski_value(e0: float, e1: float, n: int) -> float:
    """sum_k C(n, k) (1 - h((1 + e0^(n-k) e1^k) / 2)) for n protocol levels."""
    for e in (e0, e1):
        if not 0.0 <= e <= 1.0:
            raise DomainError(f"Correlator {e!r} outside [0, 1]")
    if n < 1:
        raise ArgumentError(f"Need n >= 1, got {n}")
    return float(sum(comb(n, k, exact=False) * channel_capacity(e0 ** (n - k) * e1 ** k) for k in range(n + 1)))


@dataclass(frozen=True)
class E12Report:
    e1: float
    e2: float
    rhs: float
    solvable: bool
    e12: Optional[float]
    s_direct: Optional[float]
    s_series: Optional[float]
    series_terms: int
    two_e_squared: float

    @property
    def agreement(self) -> Optional[float]:
        if self.s_direct is None or self.s_series is None:
            return None
        return abs(self.s_direct - self.s_series)

    def to_dict(self) -> dict:
        return {
            "e1": self.e1,
            "e2": self.e2,
            "rhs": self.rhs,
            "solvable": self.solvable,
            "e12": self.e12,
            "s_direct": self.s_direct,
            "s_series": self.s_series,
            "agreement": self.agreement,
            "series_terms": self.series_terms,
            "two_e_squared": self.two_e_squared,
        }


def _series_terms(e_max: float) -> int:
    if e_max <= 0.0:
        return 2
    if e_max >= 1.0:
        return SERIES_MAX_TERMS
    needed = math.ceil(math.log(SERIES_PRECISION) / (2.0 * math.log(e_max)))
    return int(min(max(needed, 2), SERIES_MAX_TERMS))


def _even_power_sum(e: float, terms: int) -> float:
    """sum_{q=2..terms} e^(2q) / (q (2q - 1))"""
    if e == 1.0:
        # closed form: sum_{q>=1} 1 / (q (2q - 1)) = 2 ln 2
        return 2.0 * math.log(2.0) - 1.0
    total = 0.0
    for start in range(2, terms + 1, SERIES_CHUNK):
        q = np.arange(start, min(start + SERIES_CHUNK, terms + 1), dtype=float)
        total += float(np.sum(np.power(e, 2 * q) / (q * (2 * q - 1))))
    return total


def e12_relation(e1: float, e2: float) -> E12Report:
    """Composite correlator e12 with cap(e12) = cap(e1) + cap(e2), and its residual s."""
    for e in (e1, e2):
        if not 0.0 <= e <= 1.0:
            raise DomainError(f"Correlator {e!r} outside [0, 1]")
    rhs = channel_capacity(e1) + channel_capacity(e2)
    two_e_squared = 2 * e1 ** 2 + 2 * e2 ** 2
    if rhs > 1.0:
        return E12Report(e1, e2, rhs, False, None, None, None, 0, two_e_squared)

    if rhs == 0.0:
        e12 = 0.0
    elif rhs == 1.0:
        e12 = 1.0
    else:
        e12 = float(bisect(lambda x: channel_capacity(x) - rhs, 0.0, 1.0, xtol=ROOT_XTOL))
    terms = _series_terms(max(e1, e2, e12))
    s_direct = e12 ** 2 - e1 ** 2 - e2 ** 2
    s_series = _even_power_sum(e1, terms) + _even_power_sum(e2, terms) - _even_power_sum(e12, terms)
    return E12Report(e1, e2, rhs, True, e12, s_direct, s_series, terms, two_e_squared)


# ===== SINGLE-MEASUREMENT INEQUALITY =====
@dataclass(frozen=True)
class Eq1Report:
    per_setting: tuple[float, ...]
    terms: tuple[float, ...]
    tolerance: float

    @property
    def maximum(self) -> float:
        return max(self.per_setting)

    @property
    def total(self) -> float:
        return float(sum(self.terms))

    @property
    def holds(self) -> bool:
        return self.maximum >= self.total - self.tolerance

    def to_dict(self) -> dict:
        return {
            "max": self.maximum,
            "sum": self.total,
            "holds": self.holds,
            "per_setting": list(self.per_setting),
            "terms": list(self.terms),
            "tolerance": self.tolerance,
        }


def eq1_check(s: ICStrategy) -> Eq1Report:
    """max_q I(A : b c | m = q) against sum_x I(a_x : b c | m = x), b being Bob's raw outputs.

    The maximum runs over the strategy's own settings m.
    """
    if s.n > EQ1_MAX_BITS:
        raise ResourceError(f"Eq1 check is exact and limited to n <= {EQ1_MAX_BITS}, got {s.n}")
    dist = scenario_distribution(s)
    labels = bit_labels(s.n)
    per_setting = tuple(
        mutual_information(condition(dist, {"m": q}), labels, ("b", "c")) for q in range(s.n)
    )
    terms = tuple(ic_terms(dist, s.n, ("b", "c")))
    return Eq1Report(per_setting, terms, VERDICT_TOL)


def eq1_check_quantum(
    state: DensityMatrix, measurements: Sequence[MeasurementSet], encoder: Optional[Encoder] = None
) -> Eq1Report:
    """Eq1 check for the XOR wiring on the Born behavior of ``state``."""
    return eq1_check(xor_wiring_strategy(from_quantum(state, measurements), encoder))


# ===== MULTIPARTITE =====
@dataclass(frozen=True, eq=False)
class MultipartiteSystem:
    """Bob boxes first, Alice's box last.

    Bob i feeds bob_input(i, m_i) and reads g_i as his raw binary output;
    Alice feeds alice_input(A) and sends c = encoder(A, o).
    """

    n: int
    behavior: Behavior
    alice_input: Callable[[tuple[int, ...]], int]
    encoder: Callable[[tuple[int, ...], int], int]
    bob_input: Callable[[int, int], int]
    label: str = "custom"

    def __post_init__(self):
        if self.behavior.size < 2:
            raise ArgumentError("A multipartite system needs at least one Bob box and Alice's box")
        for i in range(self.bobs):
            if self.behavior.boxes[i][1] != 2:
                raise UnsupportedError(f"Bob box {i} must have binary outputs")

    @property
    def bobs(self) -> int:
        return self.behavior.size - 1


def multipartite_distribution(system: MultipartiteSystem) -> JointDistribution:
    """Joint table over (A, m1..m_q, c, g1..g_q) with every address uniform."""
    n, bobs = system.n, system.bobs
    rows = 2 ** n * n ** bobs * math.prod(system.behavior.outputs)
    if rows > EXACT_ROW_LIMIT:
        raise ResourceError(f"Exact multipartite scenario needs {rows} rows, limit is {EXACT_ROW_LIMIT}")
    variables = (
        tuple((label, 2) for label in bit_labels(n))
        + tuple((f"m{i + 1}", n) for i in range(bobs))
        + (("c", 2),)
        + tuple((f"g{i + 1}", 2) for i in range(bobs))
    )

    def weighted_rows():
        prior = 1.0 / (2 ** n * n ** bobs)
        for bits in itertools.product(range(2), repeat=n):
            y = int(system.alice_input(bits))
            for ms in itertools.product(range(n), repeat=bobs):
                xs = tuple(int(system.bob_input(i, w)) for i, w in enumerate(ms)) + (y,)
                outcomes = system.behavior.table[xs]
                for outs in np.argwhere(outcomes > 0):
                    c = int(system.encoder(bits, int(outs[-1])))
                    yield bits + ms + (c,) + tuple(int(g) for g in outs[:-1]), prior * float(outcomes[tuple(outs)])

    return JointDistribution.from_weighted(variables, weighted_rows())


@dataclass(frozen=True)
class MultipartiteReport:
    definition: str
    value: float
    h_c: float
    message_leak: float
    terms: tuple[dict, ...]
    passed: bool
    tolerance: float = VERDICT_TOL
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "definition": self.definition,
            "value": self.value,
            "h_c": self.h_c,
            "i_c_a": self.message_leak,
            "terms": [dict(t) for t in self.terms],
            "pass": self.passed,
            "tolerance": self.tolerance,
            **self.extras,
        }


def _message_stats(dist: JointDistribution, n: int) -> tuple[float, float]:
    return entropy(dist, "c"), mutual_information(dist, "c", bit_labels(n))


def multipartite_ic_flawed(system: MultipartiteSystem) -> MultipartiteReport:
    """sum_i sum_w I(a_w : c g_i | m_i = w) against H(c)."""
    dist = multipartite_distribution(system)
    terms = []
    for i in range(1, system.bobs + 1):
        for w in range(system.n):
            value = mutual_information(condition(dist, {f"m{i}": w}), f"a{w}", ("c", f"g{i}"))
            terms.append({"box": i, "w": w, "value": value})
    total = float(sum(t["value"] for t in terms))
    h_c, leak = _message_stats(dist, system.n)
    return MultipartiteReport("flawed", total, h_c, leak, tuple(terms), total <= h_c + VERDICT_TOL)


def multipartite_ic_corrected(system: MultipartiteSystem) -> MultipartiteReport:
    """sum_w [I(a_w : c g1 | m1=m2=w) + I(a_w : g2 | c g1, m1=m2=w)] against H(c).

    The second term is the chain-rule increment, so each summand equals
    I(a_w : c g1 g2 | m1=m2=w). The reading that keeps c in the second term
    is reported alongside as ``literal_value``.
    """
    if system.bobs != 2:
        raise UnsupportedError(f"The corrected definition covers three boxes only, got {system.behavior.size}")
    dist = multipartite_distribution(system)
    terms = []
    for w in range(system.n):
        given = condition(dist, {"m1": w, "m2": w})
        a_w = f"a{w}"
        first = mutual_information(given, a_w, ("c", "g1"))
        second = conditional_mutual_information(given, a_w, "g2", ("c", "g1"))
        literal = conditional_mutual_information(given, a_w, ("c", "g2"), "g1")
        terms.append({"w": w, "first": first, "second": second, "literal": literal})
    total = float(sum(t["first"] + t["second"] for t in terms))
    literal_total = float(sum(t["first"] + t["literal"] for t in terms))
    h_c, leak = _message_stats(dist, system.n)
    return MultipartiteReport(
        "corrected", total, h_c, leak, tuple(terms), total <= h_c + VERDICT_TOL,
        extras={"literal_value": literal_total},
    )


def _constant_input(*args) -> int:
    return 0


def _mask_first_bit(bits: tuple[int, ...], o: int) -> int:
    return bits[0] ^ o


def ghz_system(n: int = 2) -> MultipartiteSystem:
    """Three qubits in GHZ, everyone measures Z, c = a0 ^ o."""
    behavior = from_quantum(ghz(3), [z_measurement(1)] * 3)
    return MultipartiteSystem(n, behavior, _constant_input, _mask_first_bit, _constant_input, "ghz")


def shared_bit_system(n: int = 2) -> MultipartiteSystem:
    """Same wiring as the GHZ system on a shared uniform classical bit."""
    behavior = mix([local_deterministic([[0], [0], [0]]), local_deterministic([[1], [1], [1]])], [0.5, 0.5])
    return MultipartiteSystem(n, behavior, _constant_input, _mask_first_bit, _constant_input, "shared_bit")


def independent_system(n: int = 2) -> MultipartiteSystem:
    coin = Behavior(((1, 2),), np.array([0.5, 0.5]))
    return MultipartiteSystem(n, product(coin, coin, coin), _constant_input, _mask_first_bit, _constant_input,
                              "independent")


def _double_pr_input(bits: tuple[int, ...]) -> int:
    y = bits[0] ^ bits[1]
    return 2 * y + y


def _double_pr_encoder(bits: tuple[int, ...], o: int) -> int:
    return bits[0] ^ (o // 2)


def _address_input(i: int, w: int) -> int:
    return w


def double_pr_system() -> MultipartiteSystem:
    """Alice shares an independent PR pair with each Bob; c uses Bob 1's pair.

    Alice's two halves are fused into one composite box with input 2 y1 + y2
    and output 2 o1 + o2.
    """
    pairs = product(pr_box(), pr_box())  # boxes: bob1, alice1, bob2, alice2
    behavior = merge(permute(pairs, [0, 2, 1, 3]), [2, 3])
    return MultipartiteSystem(2, behavior, _double_pr_input, _double_pr_encoder, _address_input, "double_pr")


MULTIPARTITE_SYSTEMS: dict[str, Callable[[], MultipartiteSystem]] = {
    "ghz": ghz_system,
    "shared_bit": shared_bit_system,
    "independent": independent_system,
    "double_pr": double_pr_system,
}


def named_system(key: str) -> MultipartiteSystem:
    if key not in MULTIPARTITE_SYSTEMS:
        raise ArgumentError(f"Unknown system {key!r}; choose from {sorted(MULTIPARTITE_SYSTEMS)}")
    return MULTIPARTITE_SYSTEMS[key]()


# ===== SCREENING =====
@dataclass(frozen=True)
class ScreeningReport:
    i_g1_m2: float
    i_g2_m1: float
    i_g1_g2_given_c: float
    p_equal_given_c: tuple[float, ...]
    tolerance: float

    @property
    def screened(self) -> bool:
        return max(self.i_g1_m2, self.i_g2_m1) <= self.tolerance

    @property
    def unbiased(self) -> bool:
        return all(abs(p - 0.5) <= self.tolerance for p in self.p_equal_given_c)

    def to_dict(self) -> dict:
        return {
            "i_g1_m2_given_m1_a_c": self.i_g1_m2,
            "i_g2_m1_given_m2_a_c": self.i_g2_m1,
            "i_g1_g2_given_c": self.i_g1_g2_given_c,
            "p_g1_eq_g2_given_c": list(self.p_equal_given_c),
            "screened": self.screened,
            "unbiased": self.unbiased,
            "tolerance": self.tolerance,
        }


def screening_report(b: Behavior, tolerance: float = VERDICT_TOL) -> ScreeningReport:
    """Screening quantities for a binary tripartite behavior whose box 2 is shared.

    Inputs m1, m2, a are uniform; g1, g2, c are the outputs of boxes 0, 1, 2.
    """
    if b.boxes != ((2, 2),) * 3:
        raise UnsupportedError(f"Screening needs three binary boxes, got {b.boxes}")
    variables = (("m1", 2), ("m2", 2), ("a", 2), ("g1", 2), ("g2", 2), ("c", 2))
    dist = JointDistribution(variables, b.table / 8.0)
    p_equal = []
    for c in range(2):
        given = condition(dist, {"c": c})
        pair = given.marginal_table(("g1", "g2"))
        p_equal.append(float(pair[0, 0] + pair[1, 1]))
    return ScreeningReport(
        i_g1_m2=conditional_mutual_information(dist, "g1", "m2", ("m1", "a", "c")),
        i_g2_m1=conditional_mutual_information(dist, "g2", "m1", ("m2", "a", "c")),
        i_g1_g2_given_c=conditional_mutual_information(dist, "g1", "g2", "c"),
        p_equal_given_c=tuple(p_equal),
        tolerance=tolerance,
    )
