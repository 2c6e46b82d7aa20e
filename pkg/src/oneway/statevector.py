"""Dense pure-state simulation.

Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of the
amplitude index. Every operation returns a new :class:`StateVector`; measured
qubits are removed from the register.
"""

from __future__ import annotations

import dataclasses
from typing import Mapping, Sequence, Union

import numpy as np

UNITARY_ATOL = 1e-10
IMPOSSIBLE_BRANCH = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

SINGLE_QUBIT_STATES = {
    "zero": np.array([1, 0], dtype=complex),
    "one": np.array([0, 1], dtype=complex),
    "plus": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "minus": np.array([1, -1], dtype=complex) / np.sqrt(2),
}


class ImpossibleBranchError(ValueError):
    """A forced measurement outcome has (numerically) zero probability."""


def rx(angle: float) -> np.ndarray:
    """exp(-i angle X / 2)."""
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def rz(angle: float) -> np.ndarray:
    """exp(-i angle Z / 2)."""
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


@dataclasses.dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitude vector over ``num_qubits`` qubits."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**self.num_qubits:
            raise ValueError(
                f"expected {2 ** self.num_qubits} amplitudes, got {amps.size}"
            )
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("zero vector is not a state")
        amps = amps / norm
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex]) -> StateVector:
        """Build a state from (possibly unnormalized) amplitudes."""
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.size))) if amps.size else -1
        if n < 0 or 2**n != amps.size:
            raise ValueError(f"length {amps.size} is not a power of two")
        return cls(n, amps)

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor_product(self, other: StateVector) -> StateVector:
        return StateVector(
            self.num_qubits + other.num_qubits,
            np.kron(self.amplitudes, other.amplitudes),
        )

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"


# --- measurement bases -------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class XY:
    """Equatorial basis {(|0> + e^{i theta}|1>)/sqrt2, (|0> - e^{i theta}|1>)/sqrt2}."""

    theta: float

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        phase = np.exp(1j * self.theta)
        s = 1 / np.sqrt(2)
        return np.array([s, s * phase]), np.array([s, -s * phase])


@dataclasses.dataclass(frozen=True)
class ZBasis:
    """Computational basis; outcome 0 is |0>."""

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        return SINGLE_QUBIT_STATES["zero"], SINGLE_QUBIT_STATES["one"]


@dataclasses.dataclass(frozen=True)
class Projective:
    """Arbitrary orthonormal basis whose first element is ``first``."""

    first: tuple[complex, complex]

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        b0 = np.asarray(self.first, dtype=complex)
        b0 = b0 / np.linalg.norm(b0)
        b1 = np.array([-np.conj(b0[1]), np.conj(b0[0])])
        return b0, b1


MeasurementBasis = Union[XY, ZBasis, Projective]
PAULI_X_BASIS = XY(0.0)
PAULI_Y_BASIS = XY(np.pi / 2)
PAULI_Z_BASIS = ZBasis()


# --- outcome policies --------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class Sample:
    """Draw outcomes from the Born rule with an explicit RNG or seed."""

    seed: int | np.random.Generator | None = None

    def rng(self) -> np.random.Generator:
        if isinstance(self.seed, np.random.Generator):
            return self.seed
        return np.random.default_rng(self.seed)


@dataclasses.dataclass(frozen=True)
class Forced:
    """Select a fixed outcome; used for exhaustive branch enumeration."""

    outcome: int

    def __post_init__(self) -> None:
        if self.outcome not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {self.outcome!r}")


Policy = Union[Sample, Forced]


# --- Pauli strings -----------------------------------------------------------

_PHASES = (1, -1, 1j, -1j)


@dataclasses.dataclass(frozen=True)
class PauliString:
    factors: Mapping[int, str]
    phase: complex = 1

    def __post_init__(self) -> None:
        factors = dict(self.factors)
        for q, p in factors.items():
            if p not in ("X", "Y", "Z"):
                raise ValueError(f"unknown Pauli {p!r} on qubit {q}")
            if q < 0:
                raise ValueError(f"negative qubit index {q}")
        if self.phase not in _PHASES:
            raise ValueError(f"phase must be one of +-1, +-i, got {self.phase!r}")
        object.__setattr__(self, "factors", dict(sorted(factors.items())))

    def label(self, num_qubits: int) -> str:
        return "".join(self.factors.get(q, "I") for q in range(num_qubits))

    def __hash__(self) -> int:
        return hash((tuple(self.factors.items()), self.phase))


# --- operations --------------------------------------------------------------


def init_product(labels: Sequence[str]) -> StateVector:
    """Tensor product of named single-qubit states (qubit 0 first)."""
    if len(labels) == 0:
        raise ValueError("need at least one label")
    amps = np.array([1.0 + 0j])
    for label in labels:
        try:
            amps = np.kron(amps, SINGLE_QUBIT_STATES[label])
        except KeyError:
            raise ValueError(f"unknown state label {label!r}") from None
    return StateVector(len(labels), amps)


def basis_state(bits: Sequence[int]) -> StateVector:
    return init_product(["one" if b else "zero" for b in bits])


def _check_targets(num_qubits: int, targets: Sequence[int]) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate targets {targets}")
    for t in targets:
        if not 0 <= t < num_qubits:
            raise IndexError(f"qubit {t} out of range for {num_qubits} qubits")
    return targets


def is_unitary(matrix: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    m = np.asarray(matrix)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(
        m.conj().T @ m, np.eye(m.shape[0]), atol=atol
    )


def apply_matrix(tensor: np.ndarray, matrix: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract ``matrix`` onto ``axes`` of an amplitude tensor (no checks)."""
    k = len(axes)
    op = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_gate(state: StateVector, gate: np.ndarray, targets: Sequence[int]) -> StateVector:
    """Apply a unitary on ``targets`` (first target = most significant bit of the gate)."""
    gate = np.asarray(gate, dtype=complex)
    targets = _check_targets(state.num_qubits, targets)
    if gate.shape != (2 ** len(targets),) * 2:
        raise ValueError(
            f"gate of shape {gate.shape} does not match {len(targets)} target(s)"
        )
    if not is_unitary(gate):
        raise ValueError("gate is not unitary within 1e-10")
    out = apply_matrix(state.tensor, gate, targets)
    return StateVector(state.num_qubits, out.reshape(-1))


def branch_probability(state: StateVector, qubit: int, basis: MeasurementBasis, outcome: int) -> float:
    _check_targets(state.num_qubits, [qubit])
    bra = np.conj(basis.vectors()[outcome])
    projected = np.tensordot(bra, state.tensor, axes=([0], [qubit]))
    return float(np.vdot(projected, projected).real)


def measure(
    state: StateVector,
    qubit: int,
    basis: MeasurementBasis,
    policy: Policy,
) -> tuple[int, float, StateVector | None]:
    """Projectively measure one qubit and remove it from the register.

    Returns ``(outcome, probability, post_state)``. ``post_state`` is ``None``
    when the last qubit was measured.
    """
    _check_targets(state.num_qubits, [qubit])
    vecs = basis.vectors()
    branches = [np.tensordot(np.conj(v), state.tensor, axes=([0], [qubit])) for v in vecs]
    probs = [float(np.vdot(b, b).real) for b in branches]
    if isinstance(policy, Forced):
        outcome = policy.outcome
        if probs[outcome] < IMPOSSIBLE_BRANCH:
            raise ImpossibleBranchError(
                f"outcome {outcome} on qubit {qubit} has probability {probs[outcome]:.3e}"
            )
    else:
        p1 = probs[1] / (probs[0] + probs[1])
        outcome = int(policy.rng().random() < p1)
    prob = probs[outcome] / (probs[0] + probs[1])
    if state.num_qubits == 1:
        return outcome, prob, None
    return outcome, prob, StateVector(state.num_qubits - 1, branches[outcome].reshape(-1))


def apply_pauli(state: StateVector, op: PauliString) -> np.ndarray:
    """Return the (unnormalized) amplitude vector of ``op |state>``."""
    _check_targets(state.num_qubits, list(op.factors))
    t = state.tensor
    for q, p in op.factors.items():
        t = apply_matrix(t, PAULI[p], [q])
    return op.phase * t.reshape(-1)


def expectation(state: StateVector, op: PauliString) -> float:
    """<psi|P|psi> for a Hermitian Pauli string."""
    if op.phase not in (1, -1):
        raise ValueError("expectation needs a Hermitian Pauli string (phase +-1)")
    value = np.vdot(state.amplitudes, apply_pauli(state, op))
    return float(value.real)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    value = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(1.0, value))


def reduced_density_matrix(state: StateVector, keep: Sequence[int]) -> np.ndarray:
    keep = _check_targets(state.num_qubits, keep)
    rest = [q for q in range(state.num_qubits) if q not in keep]
    t = np.transpose(state.tensor, keep + rest).reshape(2 ** len(keep), -1)
    return t @ t.conj().T


def entanglement_entropy(state: StateVector, keep: Sequence[int]) -> float:
    """Von Neumann entropy (bits) of the reduced state on ``keep``."""
    evals = np.linalg.eigvalsh(reduced_density_matrix(state, keep))
    evals = evals[evals > 1e-15]
    return float(-np.sum(evals * np.log2(evals)))


def schmidt_coefficients(state: StateVector, cut: int) -> np.ndarray:
    """Singular values across the bipartition ``[0, cut) | [cut, n)``."""
    m = state.amplitudes.reshape(2**cut, -1)
    return np.linalg.svd(m, compute_uv=False)
