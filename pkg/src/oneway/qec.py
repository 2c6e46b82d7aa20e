"""Phase-flip code on the |EC_n> cluster.

Register order is ``A, C_1..C_n, B``. Qubit ``A`` holds the state to encode,
the ``C_i`` form the code word and ``B`` receives the decoded state.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

from oneway.cluster import ClusterGraph, build_cz_cluster
from oneway.pattern import ForcedAll
from oneway.statevector import (
    PAULI,
    PAULI_X_BASIS,
    SINGLE_QUBIT_STATES,
    Forced,
    Projective,
    Sample,
    StateVector,
    apply_gate,
    fidelity,
    measure,
)


class CodeError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class CodeSpec:
    """Code length ``n``; odd so that the majority vote never ties.

    ``n = 1`` is accepted as a degenerate case that corrects nothing.
    """

    n: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.n % 2 == 0:
            raise CodeError(f"code length must be odd and positive, got {self.n}")

    @property
    def correctable(self) -> int:
        return (self.n - 1) // 2


@dataclasses.dataclass(frozen=True)
class ErrorPattern:
    """Code-word qubits (1-based) hit by a full phase flip."""

    flipped: frozenset = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "flipped", frozenset(int(i) for i in self.flipped))

    def check(self, spec: CodeSpec) -> None:
        bad = sorted(i for i in self.flipped if not 1 <= i <= spec.n)
        if bad:
            raise CodeError(f"flip indices {bad} outside 1..{spec.n}")


def ec_graph(spec: CodeSpec) -> ClusterGraph:
    """A and B each joined to every code qubit by a CZ edge."""
    n = spec.n
    ids = ["A", *[f"C{i}" for i in range(1, n + 1)], "B"]
    edges = [(end, f"C{i}") for end in ("A", "B") for i in range(1, n + 1)]
    return ClusterGraph.from_edges(ids, edges)


def build_ec_state(spec: CodeSpec) -> StateVector:
    """Normalized ``sum_{a,b} |a>_A |s(a xor b)>^n |b>_B`` with s(0)=+, s(1)=-."""
    n = spec.n
    plus, minus = SINGLE_QUBIT_STATES["plus"], SINGLE_QUBIT_STATES["minus"]
    words = []
    for word in (plus, minus):
        w = np.array([1.0 + 0j])
        for _ in range(n):
            w = np.kron(w, word)
        words.append(w)
    amps = np.zeros(2 ** (n + 2), dtype=complex)
    for a in (0, 1):
        for b in (0, 1):
            amps += np.kron(np.kron(np.eye(2)[a], words[a ^ b]), np.eye(2)[b])
    return StateVector.from_amplitudes(amps)


def encoding_basis(psi: Sequence[complex]) -> Projective:
    """Basis for A whose outcome 0 leaves ``psi`` (not its conjugate) on B."""
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return Projective(tuple(np.conj(psi)))


def encode(
    state: StateVector, psi: Sequence[complex], policy: Sample | Forced = Forced(0)
) -> tuple[int, StateVector]:
    """Measure A in the eigenbasis of ``psi``; returns the outcome and the C..B register."""
    outcome, _, post = measure(state, 0, encoding_basis(psi), policy)
    return outcome, post


# Pauli to apply on B after the A measurement, derived by brute force over
# real inputs (see ``derive_correction_table``). Outcome 1 leaves i Y conj(psi)
# on B, which no fixed unitary undoes for complex psi.
CORRECTION_TABLE = {0: "I", 1: "Y"}


@dataclasses.dataclass
class DecodeResult:
    syndrome: list[int]
    recovered: StateVector
    recovery: str
    a_correction: str


def decode(
    encoded: StateVector,
    errors: ErrorPattern,
    policy: Sample | ForcedAll = Sample(0),
    a_outcome: int = 0,
) -> DecodeResult:
    """Inject the phase flips, read the code word in X and recover B.

    Raises ``ImpossibleBranchError`` when a forced syndrome cannot occur.
    """
    n = encoded.num_qubits - 1
    spec = CodeSpec(n)
    errors.check(spec)
    state = encoded
    for i in sorted(errors.flipped):
        state = apply_gate(state, PAULI["Z"], [i - 1])
    if isinstance(policy, ForcedAll):
        if len(policy.bits) != n:
            raise CodeError(f"forced syndrome needs {n} bits")
        policies = [Forced(b) for b in policy.bits]
    else:
        rng = policy.rng()
        policies = [Sample(rng) for _ in range(n)]
    syndrome = []
    for p in policies:
        s, _, state = measure(state, 0, PAULI_X_BASIS, p)
        syndrome.append(s)
    recovery = "X" if sum(syndrome) > spec.correctable else "I"
    state = apply_gate(state, PAULI[recovery], [0])
    a_corr = CORRECTION_TABLE[a_outcome]
    state = apply_gate(state, PAULI[a_corr], [0])
    return DecodeResult(syndrome, state, recovery, a_corr)


def derive_correction_table(n: int = 3, trials: int = 8, seed: int = 0) -> dict[int, str]:
    """Find, per A outcome, the single Pauli that recovers real random inputs."""
    rng = np.random.default_rng(seed)
    spec = CodeSpec(n)
    ec = build_ec_state(spec)
    zeros = ForcedAll([0] * n)
    table = {}
    for outcome in (0, 1):
        for name in ("I", "X", "Y", "Z"):
            ok = True
            for _ in range(trials):
                psi = rng.normal(size=2)
                psi /= np.linalg.norm(psi)
                _, enc = encode(ec, psi, Forced(outcome))
                res = decode(enc, ErrorPattern(), zeros)
                out = apply_gate(res.recovered, PAULI[res.a_correction], [0])
                out = apply_gate(out, PAULI[name], [0])
                if fidelity(out, StateVector(1, psi)) < 1 - 1e-10:
                    ok = False
                    break
            if ok:
                table[outcome] = name
                break
        else:
            raise CodeError(f"no Pauli recovers A outcome {outcome}")
    return table
