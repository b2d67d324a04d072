import math

import numpy as np
import pytest

import prob
from errors import ArgumentError, ConditioningError, DomainError, LabelError, PreconditionError
from prob import JointDistribution


def correlated_bits() -> JointDistribution:
    return JointDistribution((("x", 2), ("y", 2)), [[0.5, 0.0], [0.0, 0.5]])


def test_entropy_of_uniform_pair():
    """Test that two independent fair bits carry two bits of entropy."""
    dist = JointDistribution((("x", 2), ("y", 2)), np.full((2, 2), 0.25))
    assert prob.entropy(dist, ("x", "y")) == pytest.approx(2.0)
    assert prob.entropy(dist, "x") == pytest.approx(1.0)
    assert prob.mutual_information(dist, "x", "y") == 0.0


def test_mutual_information_of_copied_bit():
    dist = correlated_bits()
    assert prob.mutual_information(dist, "x", "y") == pytest.approx(1.0)
    assert prob.conditional_mutual_information(dist, "x", "y", ()) == pytest.approx(1.0)


def test_conditional_mutual_information_xor():
    """
    Test that z = x xor y makes x and y dependent once z is known.
    I(x:y) = 0 but I(x:y|z) = 1.
    """
    rows = [((x, y, x ^ y), 0.25) for x in range(2) for y in range(2)]
    dist = JointDistribution.from_weighted((("x", 2), ("y", 2), ("z", 2)), rows)
    assert prob.mutual_information(dist, "x", "y") == pytest.approx(0.0, abs=1e-12)
    assert prob.conditional_mutual_information(dist, "x", "y", "z") == pytest.approx(1.0)


def test_marginal_keeps_requested_order():
    table = np.arange(6, dtype=float).reshape(2, 3) / 15.0
    dist = JointDistribution((("a", 2), ("b", 3)), table)
    swapped = dist.marginal(("b", "a"))
    assert swapped.names == ("b", "a")
    np.testing.assert_allclose(swapped.table, table.T)
    assert dist.probability({"a": 1, "b": 2}) == pytest.approx(5.0 / 15.0)


def test_condition_renormalizes():
    given = prob.condition(correlated_bits(), {"x": 1})
    assert given.names == ("y",)
    np.testing.assert_allclose(given.table, [0.0, 1.0])


def test_condition_on_impossible_evidence():
    dist = JointDistribution((("x", 2), ("y", 2)), [[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ConditioningError):
        prob.condition(dist, {"x": 1})


@pytest.mark.parametrize("variables,table", [
    # Case 1: Does not sum to one
    ((("x", 2),), [0.5, 0.6]),
    # Case 2: Negative entry
    ((("x", 2),), [1.5, -0.5]),
    # Case 3: Duplicate names
    ((("x", 2), ("x", 2)), np.full((2, 2), 0.25)),
    # Case 4: Wrong table size
    ((("x", 3),), [0.5, 0.5]),
])
def test_invalid_distributions(variables, table):
    """Test that malformed tables are rejected at construction."""
    with pytest.raises(ArgumentError):
        JointDistribution(variables, table)


def test_unknown_label_is_a_key_error():
    with pytest.raises(LabelError) as excinfo:
        prob.entropy(correlated_bits(), "z")
    assert isinstance(excinfo.value, KeyError)


def test_overlapping_label_sets_rejected():
    with pytest.raises(ArgumentError):
        prob.mutual_information(correlated_bits(), ("x", "y"), "y")


def test_from_weighted_merges_repeats():
    dist = JointDistribution.from_weighted((("x", 2),), [((0,), 0.25), ((0,), 0.25), ((1,), 0.5)])
    np.testing.assert_allclose(dist.table, [0.5, 0.5])


def test_from_samples_counts_observations():
    samples = np.array([[0, 1], [0, 1], [1, 0], [0, 0]])
    dist = JointDistribution.from_samples((("x", 2), ("y", 2)), samples)
    assert dist.probability({"x": 0, "y": 1}) == pytest.approx(0.5)


def test_from_counts_normalizes():
    dist = JointDistribution.from_counts((("x", 2),), np.array([3, 1]))
    np.testing.assert_allclose(dist.table, [0.75, 0.25])
    with pytest.raises(ArgumentError):
        JointDistribution.from_counts((("x", 2),), np.zeros(2))


def test_json_round_trip():
    dist = correlated_bits()
    restored = JointDistribution.from_json(dist.to_json())
    assert restored.variables == dist.variables
    np.testing.assert_allclose(restored.table, dist.table)


def test_binary_entropy_domain():
    assert prob.binary_entropy(0.5) == pytest.approx(1.0)
    assert prob.binary_entropy(0.0) == 0.0
    with pytest.raises(DomainError):
        prob.binary_entropy(1.2)


@pytest.mark.parametrize("e", [0.0, 0.1, 0.5, 0.9])
def test_series_matches_closed_form(e):
    closed = 1.0 - prob.binary_entropy((1.0 + e) / 2.0)
    assert prob.binary_entropy_series(e, 400) == pytest.approx(closed, abs=1e-10)


def test_channel_capacity_endpoints():
    assert prob.channel_capacity(0.0) == 0.0
    assert prob.channel_capacity(1.0) == pytest.approx(1.0)
    assert prob.channel_capacity(-0.6) == prob.channel_capacity(0.6)
    # the closed form cancels to zero here; the series does not
    assert prob.channel_capacity(1e-9) == pytest.approx(1e-18 / (2 * math.log(2)), rel=1e-6)


def test_lemma1_residual_vanishes(rng):
    """Test that H(O) = I(O:N) + I(NO:Q) when O is a function of independent N and Q."""
    p_n, p_q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(2))
    f = [[0, 1], [1, 1], [0, 0]]
    rows = [((n, q, f[n][q]), p_n[n] * p_q[q]) for n in range(3) for q in range(2)]
    dist = JointDistribution.from_weighted((("N", 3), ("Q", 2), ("O", 2)), rows)
    assert prob.lemma1_residual(dist, "N", "Q", "O") == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("table,condition", [
    # Case 1: N and Q dependent
    ([[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.5]]], "independence"),
    # Case 2: O not determined by N and Q
    ([[[0.125, 0.125], [0.125, 0.125]], [[0.125, 0.125], [0.125, 0.125]]], "functional"),
])
def test_lemma1_preconditions(table, condition):
    dist = JointDistribution((("N", 2), ("Q", 2), ("O", 2)), table)
    with pytest.raises(PreconditionError) as excinfo:
        prob.lemma1_residual(dist, "N", "Q", "O")
    assert excinfo.value.condition == condition


def test_jackknife_needs_two_observations():
    with pytest.raises(ArgumentError):
        prob.jackknife_estimate((("x", 2),), np.array([1.0, 0.0]), lambda d: [prob.entropy(d, "x")])


def test_jackknife_matches_leave_one_out():
    """Test that per-cell replicates reproduce the explicit leave-one-out formula."""
    counts = np.array([20.0, 20.0])
    estimate = prob.jackknife_estimate((("x", 2),), counts, lambda d: [prob.entropy(d, "x")])
    reduced = prob.binary_entropy(19.0 / 39.0)
    assert estimate.samples == 40
    assert estimate.plugin[0] == pytest.approx(1.0)
    assert estimate.corrected[0] == pytest.approx(40.0 - 39.0 * reduced)
    assert estimate.corrected[0] > estimate.plugin[0]
    # every replicate is identical, so the spread is zero
    assert estimate.stderr[0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("count,seed", [
    # Case 1: No draws
    (0, 1),
    # Case 2: Seed beyond 64 bits
    (10, 2 ** 64),
])
def test_sampled_mode_validation(count, seed):
    with pytest.raises(ArgumentError):
        prob.Sampled(count, seed)


def test_sampled_mode_is_reproducible():
    first = prob.Sampled(5, 42).rng().random(3)
    second = prob.Sampled(5, 42).rng().random(3)
    np.testing.assert_array_equal(first, second)


def random_triple(rng, cards=(2, 3, 2)) -> JointDistribution:
    table = rng.dirichlet(np.full(int(np.prod(cards)), 0.5)).reshape(cards)
    return JointDistribution(tuple(zip(("x", "y", "z"), cards)), table)


@pytest.mark.parametrize("cards", [
    # Case 1: All binary
    (2, 2, 2),
    # Case 2: Ternary middle variable
    (2, 3, 2),
    # Case 3: Ternary conditioning variable
    (3, 2, 3),
])
def test_chain_rule_on_random_tables(rng, cards):
    """
    Test that I(x:yz) = I(x:z) + I(x:y|z) on random tables.
    The conditional term is recomputed from entropies so the check does not
    reuse the library's own decomposition.
    """
    for _ in range(50):
        dist = random_triple(rng, cards)
        h = lambda labels: prob.entropy(dist, labels)
        cmi = h(("x", "z")) + h(("y", "z")) - h(("x", "y", "z")) - h("z")
        joint = prob.mutual_information_raw(dist, "x", ("y", "z"))
        assert joint == pytest.approx(prob.mutual_information_raw(dist, "x", "z") + cmi, abs=1e-10)
        assert prob.conditional_mutual_information_raw(dist, "x", "y", "z") == pytest.approx(cmi, abs=1e-10)


def test_strong_subadditivity_on_random_tables(rng):
    """
    Test that conditional mutual information never goes negative.
    Verifies:
    - H(xz) + H(yz) >= H(xyz) + H(z)
    - Conditioning on more variables never lowers I(x:...)
    """
    for _ in range(200):
        dist = random_triple(rng)
        h = lambda labels: prob.entropy(dist, labels)
        assert h(("x", "z")) + h(("y", "z")) >= h(("x", "y", "z")) + h("z") - 1e-12
        assert prob.conditional_mutual_information_raw(dist, "x", "y", "z") >= -1e-12
        assert prob.mutual_information(dist, "x", "y") <= prob.mutual_information(dist, "x", ("y", "z")) + 1e-10
