"""
Small dense quantum states and measurements.

Everything here is plain numpy on matrices of dimension at most 64, which
covers every construction in the lab (three qubits at most in practice).
Planar qubit measurements use the direction (sin t, 0, cos t) in the x-z
plane of the Bloch sphere; outcome 0 is the +1 eigenvalue.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, field_validator

from errors import ArgumentError, NumericalError, UpdateError
from logging_config import get_logger

logger = get_logger(__name__)

MAX_DIM = 64
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_FLOOR = -1e-9
EFFECT_TOL = 1e-10
BORN_SLACK = 1e-10
UPDATE_FLOOR = 1e-12

IDENTITY = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


# ===== JSON SCHEMAS =====
class DensityMatrixSchema(BaseModel):
    dims: list[int]
    entries: list[list[tuple[float, float]]]

    @field_validator("entries")
    @classmethod
    def entries_must_be_square(cls, v: list) -> list:
        if any(len(row) != len(v) for row in v):
            raise ValueError("Density matrix must be square")
        return v


def encode_matrix(matrix: np.ndarray) -> list[list[list[float]]]:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(matrix)]


def decode_matrix(rows: Sequence[Sequence[Sequence[float]]]) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def _check_hermitian(matrix: np.ndarray, what: str) -> None:
    if not np.allclose(matrix, matrix.conj().T, atol=HERMITIAN_TOL, rtol=0):
        raise ArgumentError(f"{what} is not Hermitian")


def _min_eigenvalue(matrix: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((matrix + matrix.conj().T) / 2).min())


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Positive square root of a positive semidefinite matrix."""
    w, v = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


# ===== STATES =====
@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ArgumentError(f"Density matrix must be square, got shape {entries.shape}")
        dim = entries.shape[0]
        if not 1 <= dim <= MAX_DIM:
            raise ArgumentError(f"Dimension {dim} outside 1..{MAX_DIM}")
        dims = tuple(int(d) for d in self.dims) or (dim,)
        if math.prod(dims) != dim:
            raise ArgumentError(f"Factor dimensions {dims} do not multiply to {dim}")
        _check_hermitian(entries, "Density matrix")
        trace = np.trace(entries).real
        if abs(trace - 1.0) > TRACE_TOL:
            raise ArgumentError(f"Density matrix has trace {trace!r}")
        if _min_eigenvalue(entries) < PSD_FLOOR:
            raise ArgumentError("Density matrix is not positive semidefinite")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)

    def to_dict(self) -> dict:
        return DensityMatrixSchema(
            dims=list(self.dims), entries=encode_matrix(self.entries)
        ).model_dump(mode="json")

    @classmethod
    def from_dict(cls, data: dict) -> "DensityMatrix":
        schema = DensityMatrixSchema.model_validate(data)
        return cls(decode_matrix(schema.entries), tuple(schema.dims))


def pure_state(vector: Sequence[complex], dims: Sequence[int] = ()) -> DensityMatrix:
    ket = np.asarray(vector, dtype=complex)
    norm = np.linalg.norm(ket)
    if norm == 0:
        raise ArgumentError("State vector is zero")
    ket = ket / norm
    return DensityMatrix(np.outer(ket, ket.conj()), tuple(dims))


def computational(bits: Sequence[int]) -> DensityMatrix:
    ket = np.zeros(2 ** len(bits), dtype=complex)
    ket[int("".join(str(int(b)) for b in bits), 2) if bits else 0] = 1.0
    return pure_state(ket, (2,) * len(bits))


BELL_AMPLITUDES = {
    # amplitudes on |00>, |01>, |10>, |11>
    "phi_plus": (1, 0, 0, 1),
    "phi_minus": (1, 0, 0, -1),
    "psi_plus": (0, 1, 1, 0),
    "psi_minus": (0, 1, -1, 0),
}


def bell_state(name: str) -> DensityMatrix:
    if name not in BELL_AMPLITUDES:
        raise ArgumentError(f"Unknown Bell state {name!r}")
    return pure_state(np.array(BELL_AMPLITUDES[name]) / math.sqrt(2), (2, 2))


def singlet() -> DensityMatrix:
    return bell_state("psi_minus")


def ghz(parties: int = 3) -> DensityMatrix:
    ket = np.zeros(2 ** parties, dtype=complex)
    ket[0] = ket[-1] = 1 / math.sqrt(2)
    return pure_state(ket, (2,) * parties)


def maximally_mixed(qubits: int = 1) -> DensityMatrix:
    dim = 2 ** qubits
    return DensityMatrix(np.eye(dim, dtype=complex) / dim, (2,) * qubits)


def product_state(*states: DensityMatrix) -> DensityMatrix:
    if not states:
        raise ArgumentError("Product state needs at least one factor")
    return reduce(tensor, states)


def random_state(rng: np.random.Generator, dims: Sequence[int] = (2, 2), rank: Optional[int] = None) -> DensityMatrix:
    """Random state from a complex Ginibre matrix; rank 1 gives a Haar-random pure state."""
    dim = math.prod(dims)
    rank = rank or dim
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho / np.trace(rho).real, tuple(dims))


def standard_states() -> dict[str, Callable[[], DensityMatrix]]:
    """Named constructors addressable from the command line."""
    return {
        "singlet": singlet,
        "phi_plus": lambda: bell_state("phi_plus"),
        "ghz3": lambda: ghz(3),
        "product00": lambda: computational((0, 0)),
        "product01": lambda: computational((0, 1)),
        "mixed2": lambda: maximally_mixed(2),
    }


def named_state(key: str) -> DensityMatrix:
    states = standard_states()
    if key not in states:
        raise ArgumentError(f"Unknown state {key!r}; choose from {sorted(states)}")
    return states[key]()


# ===== LINEAR ALGEBRA =====
def tensor(a, b):
    """Kronecker product of two states or two operators."""
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.entries, b.entries), a.dims + b.dims)
    if isinstance(a, DensityMatrix) or isinstance(b, DensityMatrix):
        raise ArgumentError("Cannot tensor a state with a bare operator")
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def embed(operator: np.ndarray, party: int, dims: Sequence[int]) -> np.ndarray:
    """Lift an operator on factor ``party`` to the full space."""
    dims = tuple(dims)
    if not 0 <= party < len(dims):
        raise ArgumentError(f"Party {party} outside 0..{len(dims) - 1}")
    operator = np.asarray(operator, dtype=complex)
    if operator.shape != (dims[party], dims[party]):
        raise ArgumentError(f"Operator shape {operator.shape} does not match factor {dims[party]}")
    factors = [np.eye(d, dtype=complex) for d in dims]
    factors[party] = operator
    return reduce(np.kron, factors)


def partial_trace(rho: DensityMatrix, keep: Sequence[int], dims: Optional[Sequence[int]] = None) -> DensityMatrix:
    dims = tuple(dims) if dims is not None else rho.dims
    if math.prod(dims) != rho.dim:
        raise ArgumentError(f"Factor dimensions {dims} do not match matrix dimension {rho.dim}")
    keep = sorted(set(int(k) for k in keep))
    if not keep or any(not 0 <= k < len(dims) for k in keep):
        raise ArgumentError(f"Invalid subsystems to keep: {keep}")

    tensor_form = rho.entries.reshape(dims + dims)
    n = len(dims)
    for axis in reversed(range(n)):
        if axis in keep:
            continue
        tensor_form = np.trace(tensor_form, axis1=axis, axis2=axis + n)
        n -= 1
    kept_dim = math.prod(dims[k] for k in keep)
    return DensityMatrix(tensor_form.reshape(kept_dim, kept_dim), tuple(dims[k] for k in keep))


def born(rho: DensityMatrix, effects: Sequence[np.ndarray]) -> float:
    """Tr((E_1 x ... x E_k) rho) with one effect per factor of ``rho``."""
    if len(effects) != len(rho.dims):
        raise ArgumentError(f"Need {len(rho.dims)} effects, got {len(effects)}")
    for i, (effect, d) in enumerate(zip(effects, rho.dims)):
        if np.shape(effect) != (d, d):
            raise ArgumentError(f"Effect {i} has shape {np.shape(effect)}, factor dimension is {d}")
    joint = reduce(np.kron, [np.asarray(e, dtype=complex) for e in effects])
    p = float(np.trace(joint @ rho.entries).real)
    if p < -BORN_SLACK or p > 1 + BORN_SLACK:
        raise NumericalError(f"Born probability {p!r} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def post_measurement(rho: DensityMatrix, kraus: np.ndarray, party: Optional[int] = None) -> DensityMatrix:
    """Normalized K rho K^dagger, with K acting on factor ``party`` (or the whole space)."""
    op = np.asarray(kraus, dtype=complex)
    if party is not None:
        op = embed(op, party, rho.dims)
    elif op.shape != rho.entries.shape:
        raise ArgumentError(f"Kraus shape {op.shape} does not match state dimension {rho.dim}")
    updated = op @ rho.entries @ op.conj().T
    p = float(np.trace(updated).real)
    if p <= UPDATE_FLOOR:
        raise UpdateError(f"Outcome probability {p:.3e} is too small to update on")
    updated = (updated + updated.conj().T) / (2 * p)
    return DensityMatrix(updated, rho.dims)


# ===== MEASUREMENTS =====
@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Effects and Kraus operators indexed as ``effects[setting][outcome]``.

    Kraus operators default to the positive square roots of the effects.
    """

    effects: tuple[tuple[np.ndarray, ...], ...]
    kraus: Optional[tuple[tuple[np.ndarray, ...], ...]] = field(default=None)

    def __post_init__(self):
        if not self.effects:
            raise ArgumentError("A measurement set needs at least one setting")
        effects = tuple(tuple(np.array(e, dtype=complex) for e in setting) for setting in self.effects)
        dim = effects[0][0].shape[0]
        for x, setting in enumerate(effects):
            if not setting:
                raise ArgumentError(f"Setting {x} has no outcomes")
            for effect in setting:
                if effect.shape != (dim, dim):
                    raise ArgumentError("All effects must share one square shape")
                _check_hermitian(effect, f"Effect of setting {x}")
                if _min_eigenvalue(effect) < PSD_FLOOR:
                    raise ArgumentError(f"Effect of setting {x} is not positive semidefinite")
            if not np.allclose(sum(setting), np.eye(dim), atol=EFFECT_TOL, rtol=0):
                raise ArgumentError(f"Effects of setting {x} do not sum to the identity")

        if self.kraus is None:
            kraus = tuple(tuple(psd_sqrt(e) for e in setting) for setting in effects)
        else:
            kraus = tuple(tuple(np.array(k, dtype=complex) for k in setting) for setting in self.kraus)
            if [len(s) for s in kraus] != [len(s) for s in effects]:
                raise ArgumentError("Need one Kraus operator per effect")
            for setting_k, setting_e in zip(kraus, effects):
                for k, e in zip(setting_k, setting_e):
                    if not np.allclose(k.conj().T @ k, e, atol=EFFECT_TOL, rtol=0):
                        raise ArgumentError("Kraus operator does not reproduce its effect")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "kraus", kraus)

    @property
    def dim(self) -> int:
        return self.effects[0][0].shape[0]

    @property
    def settings(self) -> int:
        return len(self.effects)

    @property
    def outcomes(self) -> int:
        return max(len(setting) for setting in self.effects)

    def effect(self, setting: int, outcome: int) -> np.ndarray:
        """Effect for ``outcome``; outcomes beyond a setting's list have the zero effect."""
        options = self.effects[setting]
        if outcome < len(options):
            return options[outcome]
        return np.zeros((self.dim, self.dim), dtype=complex)

    def to_dict(self) -> dict:
        return {
            "effects": [[encode_matrix(e) for e in setting] for setting in self.effects],
            "kraus": [[encode_matrix(k) for k in setting] for setting in self.kraus],
        }


def planar_projectors(theta: float) -> tuple[np.ndarray, np.ndarray]:
    observable = math.sin(theta) * PAULI_X + math.cos(theta) * PAULI_Z
    return (IDENTITY + observable) / 2, (IDENTITY - observable) / 2


def standard_measurements(angles: Sequence[float]) -> MeasurementSet:
    """One projective qubit measurement per angle in the x-z plane."""
    return MeasurementSet(tuple(planar_projectors(theta) for theta in angles))


def z_measurement(settings: int = 1) -> MeasurementSet:
    return standard_measurements([0.0] * settings)


def random_planar_measurements(rng: np.random.Generator, settings: int = 2) -> MeasurementSet:
    return standard_measurements(rng.uniform(0.0, 2 * math.pi, size=settings).tolist())


# angle pairs for the singlet; the first attains CHSH = +2*sqrt(2) with the
# default input pairing, the second attains it up to an input relabeling
TSIRELSON_ANGLES = ((0.0, math.pi / 2), (-3 * math.pi / 4, 3 * math.pi / 4))
TEXTBOOK_ANGLES = ((0.0, math.pi / 2), (math.pi / 4, 3 * math.pi / 4))
