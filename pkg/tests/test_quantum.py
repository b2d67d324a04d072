import math

import numpy as np
import pytest

import quantum
from errors import ArgumentError, UpdateError
from quantum import DensityMatrix


def test_singlet_is_pure_and_locally_mixed(singlet):
    """Test that the singlet is pure while each half is maximally mixed."""
    assert singlet.purity == pytest.approx(1.0)
    for party in (0, 1):
        reduced = quantum.partial_trace(singlet, [party])
        np.testing.assert_allclose(reduced.entries, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_of_product_state():
    rho = quantum.product_state(quantum.computational([1]), quantum.maximally_mixed(1))
    kept = quantum.partial_trace(rho, [0])
    np.testing.assert_allclose(kept.entries, [[0, 0], [0, 1]], atol=1e-12)
    assert kept.dims == (2,)


def test_ghz_reduces_to_classical_mixture():
    reduced = quantum.partial_trace(quantum.ghz(3), [0, 2])
    np.testing.assert_allclose(np.diag(reduced.entries).real, [0.5, 0, 0, 0.5], atol=1e-12)


@pytest.mark.parametrize("entries", [
    # Case 1: Trace two
    np.eye(2),
    # Case 2: Not Hermitian
    [[0.5, 0.5], [0.0, 0.5]],
    # Case 3: Negative eigenvalue
    [[1.5, 0.0], [0.0, -0.5]],
])
def test_invalid_density_matrices(entries):
    """Test that non-states are rejected at construction."""
    with pytest.raises(ArgumentError):
        DensityMatrix(entries)


def test_born_rule_on_singlet(singlet):
    """Test that Z on both halves of the singlet gives anti-correlated outcomes."""
    up, down = quantum.planar_projectors(0.0)
    assert quantum.born(singlet, [up, up]) == pytest.approx(0.0, abs=1e-12)
    assert quantum.born(singlet, [up, down]) == pytest.approx(0.5)


def test_born_needs_one_effect_per_factor(singlet):
    with pytest.raises(ArgumentError):
        quantum.born(singlet, [np.eye(2)])


def test_post_measurement_collapses_partner(singlet):
    up, down = quantum.planar_projectors(0.0)
    updated = quantum.post_measurement(singlet, up, party=0)
    assert quantum.born(updated, [np.eye(2), down]) == pytest.approx(1.0)


def test_post_measurement_on_zero_probability():
    up, down = quantum.planar_projectors(0.0)
    with pytest.raises(UpdateError):
        quantum.post_measurement(quantum.computational([0]), down)


def test_measurement_set_requires_completeness():
    up, _ = quantum.planar_projectors(0.0)
    with pytest.raises(ArgumentError):
        quantum.MeasurementSet(((up, up),))


def test_default_kraus_are_square_roots():
    meas = quantum.standard_measurements([math.pi / 3])
    for k, e in zip(meas.kraus[0], meas.effects[0]):
        np.testing.assert_allclose(k.conj().T @ k, e, atol=1e-10)
    assert meas.settings == 1
    assert meas.outcomes == 2


def test_random_state_is_valid(rng):
    rho = quantum.random_state(rng, dims=(2, 2, 2))
    assert rho.dim == 8
    assert np.trace(rho.entries).real == pytest.approx(1.0)
    pure = quantum.random_state(rng, dims=(2, 2), rank=1)
    assert pure.purity == pytest.approx(1.0)


def test_named_states():
    assert quantum.named_state("ghz3").dims == (2, 2, 2)
    with pytest.raises(ArgumentError):
        quantum.named_state("w3")


def test_density_matrix_dict_round_trip(singlet):
    restored = DensityMatrix.from_dict(singlet.to_dict())
    np.testing.assert_allclose(restored.entries, singlet.entries)
    assert restored.dims == (2, 2)


def test_tensor_of_states_and_operators():
    rho = quantum.tensor(quantum.computational([0]), quantum.maximally_mixed(1))
    assert rho.dims == (2, 2)
    np.testing.assert_allclose(np.diag(rho.entries).real, [0.5, 0.5, 0, 0], atol=1e-12)
    np.testing.assert_allclose(quantum.tensor(quantum.PAULI_Z, quantum.IDENTITY), np.diag([1, 1, -1, -1]))
    with pytest.raises(ArgumentError):
        quantum.tensor(quantum.singlet(), quantum.PAULI_X)


def test_standard_states_are_valid():
    """Test that every named constructor builds a unit-trace state."""
    for key, build in quantum.standard_states().items():
        rho = build()
        assert np.trace(rho.entries).real == pytest.approx(1.0), key


def test_embed_lifts_operator_to_one_factor():
    lifted = quantum.embed(quantum.PAULI_Z, 1, (2, 2))
    np.testing.assert_allclose(lifted, np.diag([1, -1, 1, -1]))
    with pytest.raises(ArgumentError):
        quantum.embed(quantum.PAULI_Z, 2, (2, 2))


def test_sequential_update_matches_joint_born(rng):
    """
    Test that p(g) p(c|g) after a Lueders update on the first factor equals
    the joint Born probability, over random states and planar measurements.
    """
    for _ in range(100):
        rho = quantum.random_state(rng)
        first = quantum.random_planar_measurements(rng)
        second = quantum.random_planar_measurements(rng)
        for x in range(2):
            for y in range(2):
                for g in range(2):
                    p_g = quantum.born(rho, [first.effect(x, g), quantum.IDENTITY])
                    if p_g < 1e-9:
                        continue
                    updated = quantum.post_measurement(rho, first.kraus[x][g], party=0)
                    for c in range(2):
                        p_c = quantum.born(updated, [quantum.IDENTITY, second.effect(y, c)])
                        joint = quantum.born(rho, [first.effect(x, g), second.effect(y, c)])
                        assert p_g * p_c == pytest.approx(joint, abs=1e-10)


def test_born_outcomes_sum_to_one(rng):
    for _ in range(100):
        rho = quantum.random_state(rng, rank=int(rng.integers(1, 5)))
        first = quantum.random_planar_measurements(rng)
        second = quantum.random_planar_measurements(rng)
        for x in range(2):
            for y in range(2):
                total = sum(
                    quantum.born(rho, [first.effect(x, g), second.effect(y, c)])
                    for g in range(2) for c in range(2)
                )
                assert total == pytest.approx(1.0, abs=1e-10)


def test_purity_never_exceeds_one(rng):
    for _ in range(200):
        dims = (2, 2, 2) if rng.random() < 0.3 else (2, 2)
        rho = quantum.random_state(rng, dims=dims)
        assert 0.0 < rho.purity <= 1.0 + 1e-10
