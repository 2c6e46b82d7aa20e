from __future__ import annotations

import numpy as np
import pytest

from oneway.compiler import (
    CNOT,
    MAX_GATES,
    CircuitIR,
    CompileError,
    Rotation,
    circuit_unitary,
    compile_circuit,
)
from oneway.pattern import euler_rotation, gadget_rotation, verify_gadget


def random_circuit(rng: np.random.Generator, n: int, gates: int) -> CircuitIR:
    ops = []
    for _ in range(gates):
        if n > 1 and rng.random() < 0.4:
            c, t = rng.choice(n, size=2, replace=False)
            ops.append(CNOT(int(c), int(t)))
        else:
            ops.append(Rotation(int(rng.integers(n)), *rng.uniform(-np.pi, np.pi, 3)))
    return CircuitIR(n, tuple(ops))


class TestCircuitIR:
    def test_index_range(self):
        with pytest.raises(CompileError):
            CircuitIR(2, (CNOT(0, 2),))

    def test_self_cnot(self):
        with pytest.raises(CompileError):
            CircuitIR(2, (CNOT(1, 1),))

    def test_unitary_order(self):
        c = CircuitIR(2, (Rotation(0, 0.3, 0, 0), CNOT(0, 1)))
        cnot = np.eye(4)[[0, 1, 3, 2]]
        np.testing.assert_allclose(circuit_unitary(c), cnot @ np.kron(euler_rotation(0.3, 0, 0), np.eye(2)))


class TestCompile:
    def test_identity_wire(self):
        graph, pattern = compile_circuit(CircuitIR(1))
        assert len(graph.vertices) == 3
        assert verify_gadget(pattern, np.eye(2)) < 1e-10

    def test_single_rotation_matches_gadget(self):
        a, b, c = 0.5, -0.9, 1.7
        _, pattern = compile_circuit(CircuitIR(1, (Rotation(0, a, b, c),)))
        ref = euler_rotation(a, b, c)
        assert verify_gadget(pattern, ref) < 1e-10
        assert verify_gadget(gadget_rotation(a, b, c), ref) < 1e-10

    def test_rotation_then_cnot(self):
        c = CircuitIR(2, (Rotation(0, 0.4, 0.2, -0.6), CNOT(0, 1)))
        _, pattern = compile_circuit(c)
        assert verify_gadget(pattern, circuit_unitary(c)) < 1e-9

    def test_carving_first(self):
        c = CircuitIR(2, (CNOT(1, 0), Rotation(1, 0.1, 0.2, 0.3)))
        _, pattern = compile_circuit(c)
        kinds = [s.is_z for s in pattern.steps]
        assert any(kinds)
        assert kinds == sorted(kinds, reverse=True)

    @pytest.mark.parametrize("seed", range(4))
    def test_random_two_qubit(self, seed):
        c = random_circuit(np.random.default_rng(seed), 2, 3)
        _, pattern = compile_circuit(c)
        assert verify_gadget(pattern, circuit_unitary(c)) < 1e-9

    def test_three_qubits(self):
        c = CircuitIR(3, (CNOT(0, 1), CNOT(2, 1), Rotation(2, 0.3, 0.1, 0.2)))
        _, pattern = compile_circuit(c)
        assert verify_gadget(pattern, circuit_unitary(c)) < 1e-9

    @pytest.mark.parametrize(
        "circuit",
        [CircuitIR(4), CircuitIR(1, tuple(Rotation(0, 0, 0, 0) for _ in range(MAX_GATES + 1)))],
    )
    def test_limits(self, circuit):
        with pytest.raises(CompileError, match="limit"):
            compile_circuit(circuit)
