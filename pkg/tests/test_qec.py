from __future__ import annotations

import itertools

import numpy as np
import pytest

from oneway.pattern import ForcedAll
from oneway.qec import (
    CORRECTION_TABLE,
    CodeError,
    CodeSpec,
    ErrorPattern,
    build_ec_state,
    decode,
    derive_correction_table,
    encode,
    encoding_basis,
)
from oneway.statevector import (
    PAULI,
    PAULI_X_BASIS,
    Forced,
    ImpossibleBranchError,
    Sample,
    StateVector,
    ZBasis,
    fidelity,
)


def real_states(count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        v = rng.normal(size=2)
        out.append(v / np.linalg.norm(v))
    return out


def expanded_table(n: int) -> np.ndarray:
    """Sum over a, b of |a>|s(a xor b)>^n|b>, from the two displayed branches."""
    plus, minus = np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)
    amps = np.zeros(2 ** (n + 2), complex)
    for a, b in itertools.product((0, 1), repeat=2):
        word = np.array([1.0])
        for _ in range(n):
            word = np.kron(word, minus if a ^ b else plus)
        amps += np.kron(np.kron(np.eye(2)[a], word), np.eye(2)[b])
    return amps


def all_branches(enc: StateVector, flips, n: int, a_outcome: int = 0):
    for bits in itertools.product((0, 1), repeat=n):
        try:
            yield decode(enc, ErrorPattern(flips), ForcedAll(bits), a_outcome)
        except ImpossibleBranchError:
            continue


class TestCodeSpec:
    @pytest.mark.parametrize("n", [0, 2, 4, -3])
    def test_invalid(self, n):
        with pytest.raises(CodeError):
            CodeSpec(n)

    def test_correctable(self):
        assert CodeSpec(5).correctable == 2 and CodeSpec(1).correctable == 0

    def test_flip_range(self):
        with pytest.raises(CodeError):
            ErrorPattern({6}).check(CodeSpec(5))


class TestBuild:
    @pytest.mark.parametrize("n", [1, 3, 5])
    def test_matches_expansion(self, n):
        state = build_ec_state(CodeSpec(n))
        assert fidelity(state, StateVector.from_amplitudes(expanded_table(n))) == pytest.approx(1)

    def test_n1_is_three_qubits(self):
        assert build_ec_state(CodeSpec(1)).num_qubits == 3


class TestEncode:
    def test_zero_uses_z_basis(self):
        b0, b1 = encoding_basis([1, 0]).vectors()
        z0, z1 = ZBasis().vectors()
        assert abs(np.vdot(b0, z0)) == pytest.approx(1) and abs(np.vdot(b1, z1)) == pytest.approx(1)

    def test_plus_uses_x_basis(self):
        b0, _ = encoding_basis(np.array([1, 1]) / np.sqrt(2)).vectors()
        assert abs(np.vdot(b0, PAULI_X_BASIS.vectors()[0])) == pytest.approx(1)

    def test_zero_selects_branch(self):
        ec = build_ec_state(CodeSpec(3))
        outcome, enc = encode(ec, [1, 0])
        branch = expanded_table(3)[: 2 ** 4]
        assert outcome == 0
        assert fidelity(enc, StateVector.from_amplitudes(branch)) == pytest.approx(1)


class TestDecode:
    def test_table_derived(self):
        assert derive_correction_table(3) == CORRECTION_TABLE

    def test_no_flips(self):
        ec = build_ec_state(CodeSpec(5))
        psi = real_states(1, 0)[0]
        _, enc = encode(ec, psi)
        res = decode(enc, ErrorPattern(), Sample(1))
        assert res.recovery == "I" or sum(res.syndrome) > 2
        assert fidelity(res.recovered, StateVector(1, psi)) == pytest.approx(1)

    @pytest.mark.parametrize("n", [3, 5])
    @pytest.mark.parametrize("a_outcome", [0, 1])
    def test_exhaustive_correctable(self, n, a_outcome):
        ec = build_ec_state(CodeSpec(n))
        for psi in real_states(20, n):
            _, enc = encode(ec, psi, Forced(a_outcome))
            for r in range((n - 1) // 2 + 1):
                for flips in itertools.combinations(range(1, n + 1), r):
                    seen = 0
                    for res in all_branches(enc, flips, n, a_outcome):
                        assert fidelity(res.recovered, StateVector(1, psi)) > 1 - 1e-10
                        seen += 1
                    assert seen > 0

    def test_symmetry_in_flip_location(self):
        ec = build_ec_state(CodeSpec(5))
        psi = real_states(1, 3)[0]
        _, enc = encode(ec, psi)
        for r in range(6):
            ok = {
                all(fidelity(x.recovered, StateVector(1, psi)) > 1 - 1e-10 for x in all_branches(enc, flips, 5))
                for flips in itertools.combinations(range(1, 6), r)
            }
            assert len(ok) == 1

    @pytest.mark.parametrize("flips", list(itertools.combinations(range(1, 6), 3)))
    def test_beyond_threshold_logical_x(self, flips):
        ec = build_ec_state(CodeSpec(5))
        _, enc = encode(ec, [1, 0])
        for res in all_branches(enc, flips, 5):
            assert fidelity(res.recovered, StateVector(1, [0, 1])) == pytest.approx(1)

    def test_beyond_threshold_general_state(self):
        ec = build_ec_state(CodeSpec(5))
        psi = real_states(1, 8)[0]
        _, enc = encode(ec, psi)
        for res in all_branches(enc, {1, 2, 3}, 5):
            xpsi = PAULI["X"] @ psi
            assert fidelity(res.recovered, StateVector(1, xpsi)) == pytest.approx(1)
            assert fidelity(res.recovered, StateVector(1, psi)) == pytest.approx(abs(psi @ xpsi) ** 2)

    def test_forced_syndrome_length(self):
        ec = build_ec_state(CodeSpec(3))
        _, enc = encode(ec, [1, 0])
        with pytest.raises(CodeError):
            decode(enc, ErrorPattern(), ForcedAll([0, 0]))
