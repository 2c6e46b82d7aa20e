"""Adaptive measurement patterns with classical feedforward.

A pattern is a cluster graph plus an ordered list of single-qubit measurements.
XY-plane measurement angles may flip sign depending on the parity of earlier
outcomes, and a Pauli byproduct frame (``X^x Z^z`` per output slot, exponents
given as parities of outcomes) describes the correction to apply afterwards.

Execution is batched: many outcome branches are simulated at once, each row of
the batch carrying its own outcome record. Vertices are added to the register
lazily, only when a measurement needs them, so long wires stay cheap.
"""

from __future__ import annotations

import dataclasses
import itertools
from typing import Hashable, Iterable, Mapping, Sequence, Union

import numpy as np

from oneway.cluster import U_BELL, ClusterGraph, Edge, chain
from oneway.statevector import (
    CZ,
    SINGLE_QUBIT_STATES,
    H,
    IMPOSSIBLE_BRANCH,
    ImpossibleBranchError,
    Sample,
    StateVector,
    apply_matrix,
    rx,
    rz,
)

Vertex = Hashable
NAMED_OPS = {"H": H}


class PatternError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class AngleExpr:
    """Measurement angle ``base * (-1)^(offset + sum of outcomes in sign_parity) + pi * pi_shift``."""

    base: float
    sign_parity: frozenset = frozenset()
    sign_offset: int = 0
    pi_shift: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "sign_parity", frozenset(int(i) for i in self.sign_parity))
        if self.sign_offset not in (0, 1) or self.pi_shift not in (0, 1):
            raise PatternError("sign_offset and pi_shift must be 0 or 1")

    def value(self, outcomes: Sequence[int]) -> float:
        parity = (self.sign_offset + sum(outcomes[i] for i in self.sign_parity)) % 2
        return float(self.base * (-1) ** parity + np.pi * self.pi_shift)

    def values(self, outcomes: np.ndarray) -> np.ndarray:
        parity = np.full(outcomes.shape[0], self.sign_offset, dtype=np.int64)
        for i in self.sign_parity:
            parity ^= outcomes[:, i]
        return self.base * (1 - 2 * parity) + np.pi * self.pi_shift


@dataclasses.dataclass(frozen=True)
class Step:
    """Measure ``vertex`` in the XY plane at ``angle``, or in Z when ``angle`` is None."""

    vertex: Vertex
    angle: AngleExpr | None = None

    @property
    def is_z(self) -> bool:
        return self.angle is None


@dataclasses.dataclass(frozen=True)
class SlotFrame:
    """Byproduct ``X^x Z^z`` on one logical slot; exponents are outcome parities."""

    x: frozenset = frozenset()
    z: frozenset = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", frozenset(int(i) for i in self.x))
        object.__setattr__(self, "z", frozenset(int(i) for i in self.z))

    def resolve(self, outcomes: Sequence[int]) -> tuple[int, int]:
        return (
            sum(outcomes[i] for i in self.x) % 2,
            sum(outcomes[i] for i in self.z) % 2,
        )

    def compose(self, other: SlotFrame) -> SlotFrame:
        return SlotFrame(self.x ^ other.x, self.z ^ other.z)


ByproductFrame = Mapping[int, SlotFrame]


@dataclasses.dataclass(frozen=True)
class MeasurementPattern:
    """Cluster graph, input/output slot maps, ordered steps and byproduct frame.

    Every vertex is either measured by exactly one step or is an output. Input
    vertices may be measured or may double as outputs. ``output_ops`` names a
    fixed unitary applied to an output vertex before the frame correction.
    """

    graph: ClusterGraph
    inputs: Mapping[Vertex, int]
    steps: tuple[Step, ...]
    outputs: Mapping[Vertex, int]
    frame: Mapping[int, SlotFrame]
    output_ops: Mapping[Vertex, str] = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", dict(self.inputs))
        object.__setattr__(self, "outputs", dict(self.outputs))
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(
            self, "frame", {s: self.frame.get(s, SlotFrame()) for s in sorted(self.outputs.values())}
        )
        object.__setattr__(self, "output_ops", dict(self.output_ops))
        self.validate()

    def validate(self) -> None:
        ids = set(self.graph.ids)
        measured = [s.vertex for s in self.steps]
        if len(set(measured)) != len(measured):
            raise PatternError("a vertex is measured more than once")
        both = set(measured) & set(self.outputs)
        if both:
            raise PatternError(f"vertices {sorted(map(str, both))} are both measured and outputs")
        missing = ids - set(measured) - set(self.outputs)
        if missing:
            raise PatternError(f"vertices {sorted(map(str, missing))} have no role")
        extra = (set(measured) | set(self.outputs) | set(self.inputs)) - ids
        if extra:
            raise PatternError(f"unknown vertices {sorted(map(str, extra))}")
        declared_inputs = {v for v, init in self.graph.vertices if init == "input"}
        if declared_inputs != set(self.inputs):
            raise PatternError("pattern inputs must be exactly the graph's input vertices")
        for name, slots in (("input", self.inputs), ("output", self.outputs)):
            if sorted(slots.values()) != list(range(len(slots))):
                raise PatternError(f"{name} slots must be 0..{len(slots) - 1}")
        for i, step in enumerate(self.steps):
            if step.angle is not None and any(j >= i or j < 0 for j in step.angle.sign_parity):
                raise PatternError(f"step {i} depends on an outcome that is not yet known")
        n = len(self.steps)
        for slot, f in self.frame.items():
            if any(j >= n or j < 0 for j in f.x | f.z):
                raise PatternError(f"frame of slot {slot} references unknown steps")
        for v, name in self.output_ops.items():
            if v not in self.outputs or name not in NAMED_OPS:
                raise PatternError(f"bad output op {name!r} on {v!r}")

    @property
    def num_inputs(self) -> int:
        return len(self.inputs)

    @property
    def num_outputs(self) -> int:
        return len(self.outputs)

    def xy_steps(self) -> list[int]:
        return [i for i, s in enumerate(self.steps) if not s.is_z]

    def z_steps(self) -> list[int]:
        return [i for i, s in enumerate(self.steps) if s.is_z]


# --- batched executor ----------------------------------------------------------


@dataclasses.dataclass
class BatchResult:
    outcomes: np.ndarray  # (B, n_steps) int
    states: np.ndarray  # (B, 2**k) uncorrected output amplitudes, slots then ancillas
    probabilities: np.ndarray  # (B,) Born weight of each branch
    valid: np.ndarray  # (B,) False where the branch is impossible
    num_qubits: int


class _Register:
    """Batch of states over a changing list of labelled qubits."""

    def __init__(self, tensor: np.ndarray, labels: list) -> None:
        self.t = tensor
        self.labels = labels

    def axis(self, label) -> int:
        return self.labels.index(label) + 1

    def add(self, label, vec: np.ndarray) -> None:
        self.t = self.t[..., None] * vec
        self.labels.append(label)

    def phase_flip(self, label, mask: np.ndarray) -> None:
        """Apply Z on ``label`` for rows where ``mask`` is 1."""
        if not np.any(mask):
            return
        ax = self.axis(label)
        sl = [slice(None)] * self.t.ndim
        sl[ax] = 1
        sign = np.where(mask, -1.0, 1.0).reshape((-1,) + (1,) * (self.t.ndim - 2))
        self.t[tuple(sl)] *= sign

    def bit_flip(self, label, mask: np.ndarray) -> None:
        if not np.any(mask):
            return
        ax = self.axis(label)
        flipped = np.flip(self.t, axis=ax)
        m = mask.astype(bool).reshape((-1,) + (1,) * (self.t.ndim - 1))
        self.t = np.where(m, flipped, self.t)

    def cz(self, a, b) -> None:
        sl = [slice(None)] * self.t.ndim
        sl[self.axis(a)] = 1
        sl[self.axis(b)] = 1
        self.t[tuple(sl)] *= -1

    def gate(self, matrix: np.ndarray, labels: Sequence) -> None:
        self.t = apply_matrix(self.t, matrix, [self.axis(x) for x in labels])

    def project(self, label, bras: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Contract per-row bras of shape (B, 2, 2) [outcome, component]."""
        ax = self.axis(label)
        t = np.moveaxis(self.t, ax, 1)
        b = t.shape[0]
        t = t.reshape(b, 2, -1)
        branches = np.einsum("bok,bkr->bor", bras.conj(), t)
        self.labels.remove(label)
        return branches, np.einsum("bor,bor->bo", branches.conj(), branches).real


def _xy_bras(theta: np.ndarray) -> np.ndarray:
    phase = np.exp(1j * theta)
    s = 1 / np.sqrt(2)
    bras = np.empty((theta.shape[0], 2, 2), dtype=complex)
    bras[:, 0, 0] = s
    bras[:, 0, 1] = s * phase
    bras[:, 1, 0] = s
    bras[:, 1, 1] = -s * phase
    return bras


_Z_BRAS = np.eye(2, dtype=complex)[None]


def execute(
    pattern: MeasurementPattern,
    inputs: StateVector | None,
    forced: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
    batch: int = 1,
) -> BatchResult:
    """Run ``pattern`` on a batch of branches.

    With ``forced`` (shape ``(B, n_steps)``) every row follows its own outcome
    record; otherwise outcomes are drawn from ``rng`` for ``batch`` rows.
    ``inputs`` covers the input slots in slot order, optionally followed by
    ancilla qubits that are carried through untouched.
    """
    graph = pattern.graph
    n_steps = len(pattern.steps)
    k_in = pattern.num_inputs
    if inputs is None:
        if k_in:
            raise PatternError("pattern has input slots but no input state was given")
        inputs = StateVector(0, np.ones(1))
    n_anc = inputs.num_qubits - k_in
    if n_anc < 0:
        raise PatternError(f"input register has {inputs.num_qubits} qubits, pattern needs {k_in}")
    if forced is not None:
        forced = np.asarray(forced, dtype=np.int64)
        if forced.ndim != 2 or forced.shape[1] != n_steps:
            raise PatternError(f"forced outcomes must have shape (B, {n_steps})")
        b = forced.shape[0]
    else:
        if rng is None:
            raise PatternError("sampling needs an explicit rng")
        b = batch

    by_slot = sorted(pattern.inputs, key=pattern.inputs.get)
    labels = list(by_slot) + [("anc", i) for i in range(n_anc)]
    tensor = np.repeat(inputs.amplitudes.reshape((1,) + (2,) * inputs.num_qubits), b, axis=0)
    reg = _Register(tensor.astype(complex), labels)

    init = {v: label for v, label in graph.vertices}
    eager = graph.has_bell_edges()
    done: set = set()
    measured: set = set()
    pending = {v: np.zeros(b, dtype=np.int64) for v in graph.ids}
    incident = {v: [] for v in graph.ids}
    for e in graph.edges:
        incident[e.u].append(e)
        incident[e.v].append(e)

    def other(e: Edge, v):
        return e.v if e.u == v else e.u

    def add(v) -> None:
        reg.add(v, SINGLE_QUBIT_STATES[init[v]])
        reg.phase_flip(v, pending[v])
        if eager:
            return
        for e in incident[v]:
            w = other(e, v)
            if w in reg.labels and e not in done:
                reg.cz(e.u, e.v)
                done.add(e)

    if eager:
        for v in graph.ids:
            if v not in reg.labels:
                add(v)
        for e in graph.edges:
            reg.gate(CZ if e.kind == "CZ" else U_BELL, [e.u, e.v])
            done.add(e)
    else:
        for e in graph.edges:
            if e.u in reg.labels and e.v in reg.labels:
                reg.cz(e.u, e.v)
                done.add(e)

    outcomes = np.zeros((b, n_steps), dtype=np.int64)
    probs = np.ones(b)
    valid = np.ones(b, dtype=bool)

    for i, step in enumerate(pattern.steps):
        v = step.vertex
        if v not in reg.labels:
            add(v)
        if step.is_z:
            bras = np.broadcast_to(_Z_BRAS, (b, 2, 2))
        else:
            for e in incident[v]:
                w = other(e, v)
                if w not in measured and w not in reg.labels:
                    add(w)
            bras = _xy_bras(step.angle.values(outcomes[:, :i]))
        branches, p = reg.project(v, bras)
        total = p.sum(axis=1)
        if forced is not None:
            s = forced[:, i]
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                p1 = np.where(total > 0, p[:, 1] / total, 0.0)
            s = (rng.random(b) < p1).astype(np.int64)
        outcomes[:, i] = s
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(total > 0, p[np.arange(b), s] / total, 0.0)
        valid &= cond >= IMPOSSIBLE_BRANCH
        probs *= cond
        chosen = branches[np.arange(b), s]
        norm = np.sqrt(np.einsum("br,br->b", chosen.conj(), chosen).real)
        chosen = chosen / np.where(norm > 0, norm, 1.0)[:, None]
        reg.t = chosen.reshape((b,) + (2,) * len(reg.labels))
        measured.add(v)
        if step.is_z:
            for e in incident[v]:
                w = other(e, v)
                if e not in done and w not in measured:
                    pending[w] ^= s
                    done.add(e)

    outs = sorted(pattern.outputs, key=pattern.outputs.get)
    for v in outs:
        if v not in reg.labels:
            add(v)
    for v, name in pattern.output_ops.items():
        reg.gate(NAMED_OPS[name], [v])
    order = outs + [("anc", i) for i in range(n_anc)]
    if sorted(map(repr, reg.labels)) != sorted(map(repr, order)):
        raise PatternError(f"unexpected qubits left in register: {reg.labels}")
    perm = [0] + [reg.axis(x) for x in order]
    states = np.transpose(reg.t, perm).reshape(b, -1)
    return BatchResult(outcomes, states, probs, valid, len(order))


def resolve_frame(pattern: MeasurementPattern, outcomes: np.ndarray) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Per slot, the (x, z) byproduct bits of every row of ``outcomes``."""
    outcomes = np.atleast_2d(outcomes)
    out = {}
    for slot, f in pattern.frame.items():
        x = np.zeros(outcomes.shape[0], dtype=np.int64)
        z = np.zeros(outcomes.shape[0], dtype=np.int64)
        for j in f.x:
            x ^= outcomes[:, j]
        for j in f.z:
            z ^= outcomes[:, j]
        out[slot] = (x, z)
    return out


def correct_batch(pattern: MeasurementPattern, result: BatchResult) -> np.ndarray:
    """Undo the byproduct ``X^x Z^z`` on each output slot, row by row."""
    n = result.num_qubits
    b = result.states.shape[0]
    reg = _Register(result.states.reshape((b,) + (2,) * n).copy(), list(range(n)))
    for slot, (x, z) in resolve_frame(pattern, result.outcomes).items():
        reg.phase_flip(slot, z)
        reg.bit_flip(slot, x)
    return reg.t.reshape(b, -1)


# --- single runs -------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class ForcedAll:
    bits: tuple[int, ...]

    def __init__(self, bits: Iterable[int]) -> None:
        object.__setattr__(self, "bits", tuple(int(x) for x in bits))


@dataclasses.dataclass
class RunResult:
    outcomes: list[int]
    logical_state: StateVector
    frame: dict[int, tuple[int, int]]
    probability: float

    def corrected(self) -> StateVector:
        return apply_frame(self.logical_state, self.frame)


def apply_frame(state: StateVector, frame: Mapping[int, tuple[int, int]]) -> StateVector:
    """Apply the correction for byproducts ``{slot: (x, z)}``; self-inverse up to phase."""
    reg = _Register(state.tensor[None].copy(), list(range(state.num_qubits)))
    for slot, (x, z) in frame.items():
        reg.phase_flip(slot, np.array([z]))
        reg.bit_flip(slot, np.array([x]))
    return StateVector(state.num_qubits, reg.t.reshape(-1))


def product_inputs(states: Sequence[Sequence[complex]]) -> StateVector:
    amps = np.array([1.0 + 0j])
    for s in states:
        amps = np.kron(amps, np.asarray(s, dtype=complex))
    return StateVector.from_amplitudes(amps)


def run_pattern(
    pattern: MeasurementPattern,
    inputs: StateVector | Sequence[Sequence[complex]] | None,
    policy: Sample | ForcedAll,
) -> RunResult:
    """Execute one branch of ``pattern``.

    ``inputs`` is either an entangled register (input slots first, then any
    ancillas) or a list of single-qubit states, one per input slot.
    """
    if inputs is not None and not isinstance(inputs, StateVector):
        inputs = product_inputs(inputs)
    if isinstance(policy, ForcedAll):
        if len(policy.bits) != len(pattern.steps):
            raise PatternError(
                f"forced list has {len(policy.bits)} bits, pattern has {len(pattern.steps)} steps"
            )
        res = execute(pattern, inputs, forced=np.array([policy.bits]))
        if not res.valid[0]:
            raise ImpossibleBranchError(f"branch {policy.bits} has zero probability")
    else:
        res = execute(pattern, inputs, rng=policy.rng(), batch=1)
    outcomes = [int(x) for x in res.outcomes[0]]
    frame = {s: (int(x[0]), int(z[0])) for s, (x, z) in resolve_frame(pattern, res.outcomes).items()}
    return RunResult(
        outcomes, StateVector(res.num_qubits, res.states[0]), frame, float(res.probabilities[0])
    )


# --- flow-based construction -----------------------------------------------------


def flow_pattern(
    graph: ClusterGraph,
    inputs: Mapping[Vertex, int],
    outputs: Mapping[Vertex, int],
    order: Sequence[tuple[Vertex, float | None]],
    flow: Mapping[Vertex, Vertex],
) -> MeasurementPattern:
    """Derive feedforward signs and the byproduct frame from a flow.

    ``order`` lists ``(vertex, angle)`` pairs, ``angle`` being the XY angle the
    vertex would be measured at if every earlier outcome were 0, or ``None`` for
    a Z-basis (carving) measurement. For each XY vertex ``v`` the flow successor
    ``f(v)`` absorbs the outcome: an outcome of 1 acts like ``X`` on ``f(v)`` and
    ``Z`` on the other neighbours of ``f(v)``. Pending ``X`` on a vertex flips the
    sign of its angle; pending ``Z`` flips its outcome. A carved vertex drops
    out of the graph, so it no longer constrains the flow.
    """
    pend_x = {v: frozenset() for v in graph.ids}
    pend_z = {v: frozenset() for v in graph.ids}
    done: set = set()
    carved: set = set()
    steps = []
    for i, (v, angle) in enumerate(order):
        if angle is None:
            carved.add(v)
            signal = frozenset({i}) ^ pend_x[v]
            for w in graph.neighbors(v):
                if w not in done:
                    pend_z[w] ^= signal
            steps.append(Step(v))
        else:
            steps.append(Step(v, AngleExpr(float(angle), pend_x[v])))
            signal = frozenset({i}) ^ pend_z[v]
            f = flow[v]
            if f in done or f == v:
                raise PatternError(f"flow successor of {v!r} is already measured")
            if graph.init_of(f) != "plus":
                raise PatternError(f"flow successor {f!r} must start in |+>")
            pend_x[f] ^= signal
            for u in graph.neighbors(f):
                if u == v or u in carved:
                    continue
                if u in done:
                    raise PatternError(f"neighbour {u!r} of flow successor {f!r} measured too early")
                pend_z[u] ^= signal
        done.add(v)
    frame = {slot: SlotFrame(pend_x[v], pend_z[v]) for v, slot in outputs.items()}
    return MeasurementPattern(graph, inputs, tuple(steps), outputs, frame)


# --- gadgets -----------------------------------------------------------------


def euler_rotation(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """U_X(gamma) U_Z(beta) U_X(alpha) with U_P(t) = exp(-i t P / 2)."""
    return rx(gamma) @ rz(beta) @ rx(alpha)


def gadget_teleport(steps: int) -> MeasurementPattern:
    """Wire of ``steps + 1`` sites, every site but the last measured in X."""
    if steps < 1:
        raise PatternError("a teleportation wire needs at least one step")
    g = chain(steps + 1)
    g = ClusterGraph(((0, "input"),) + g.vertices[1:], g.edges)
    order = [(i, 0.0) for i in range(steps)]
    return flow_pattern(g, {0: 0}, {steps: 0}, order, {i: i + 1 for i in range(steps)})


def gadget_rotation(alpha: float, beta: float, gamma: float) -> MeasurementPattern:
    """Five-site chain realizing ``euler_rotation(alpha, beta, gamma)``.

    Sites 1..4 are measured at theta_1 = 0, theta_2 = alpha (-1)^(s1+1),
    theta_3 = beta (-1)^(s2+1), theta_4 = gamma (-1)^(s1+s3+1); the output on
    site 5 carries X^(s2+s4) Z^(s1+s3).
    """
    ids = [1, 2, 3, 4, 5]
    g = ClusterGraph.from_edges(ids, [(1, 2), (2, 3), (3, 4), (4, 5)], {1: "input"})
    # In the all-zero branch site j applies H diag(1, e^{-i theta_j}), so the
    # chain realizes U_X(-theta_4) U_Z(-theta_3) U_X(-theta_2).
    order = [(1, 0.0), (2, -alpha), (3, -beta), (4, -gamma)]
    p = flow_pattern(g, {1: 0}, {5: 0}, order, {1: 2, 2: 3, 3: 4, 4: 5})
    steps = tuple(
        Step(s.vertex, AngleExpr(-s.angle.base, s.angle.sign_parity, 1)) if s.vertex != 1 else s
        for s in p.steps
    )
    return dataclasses.replace(p, steps=steps)


def gadget_cnot4() -> MeasurementPattern:
    """Four-site CNOT: 1 = target in, 2 = middle, 3 = target out, 4 = control.

    Slot 0 is the target, slot 1 the control; byproduct X_3^m (Z_3 Z_4)^l with
    l, m the outcomes of sites 1 and 2.
    """
    g = ClusterGraph.from_edges(
        [1, 2, 3, 4], [(1, 2), (2, 3), (2, 4)], {1: "input", 4: "input"}
    )
    return flow_pattern(g, {1: 0, 4: 1}, {3: 0, 4: 1}, [(1, 0.0), (2, 0.0)], {1: 2, 2: 3})


def gadget_cnot3_bell() -> MeasurementPattern:
    """Three-site CNOT on a U_Bell + CZ cluster.

    Site 1 carries the target input, site 2 starts in |0>, site 3 is the
    control. Site 1 is measured in X, site 2 gets a Hadamard; the byproduct is
    (Z_3 X_2 Z_2)^m. Slots: 0 = target, 1 = control.
    """
    g = ClusterGraph(
        ((1, "input"), (2, "zero"), (3, "input")),
        (Edge(1, 2, "Bell"), Edge(2, 3, "CZ")),
    )
    return MeasurementPattern(
        g,
        {1: 0, 3: 1},
        (Step(1, AngleExpr(0.0)),),
        {2: 0, 3: 1},
        {0: SlotFrame({0}, {0}), 1: SlotFrame(frozenset(), {0})},
        {2: "H"},
    )


def gadget_two_qubit_lc4(alpha: float, beta: float) -> MeasurementPattern:
    """Two-qubit gate on a four-site chain: inputs on 1 and 4, outputs on 2 and 3.

    Site 1 is measured in B(alpha), site 4 in B(beta); the byproduct is
    (X_2 Z_3)^s1 (X_3 Z_2)^s4.
    """
    g = ClusterGraph.from_edges(
        [1, 2, 3, 4], [(1, 2), (2, 3), (3, 4)], {1: "input", 4: "input"}
    )
    return flow_pattern(
        g, {1: 0, 4: 1}, {2: 0, 3: 1}, [(1, alpha), (4, beta)], {1: 2, 4: 3}
    )


def lc4_gate_reference(alpha: float, beta: float) -> np.ndarray:
    """CZ (H U_Z(-alpha) x H U_Z(-beta)): the frozen reference of the LC4 gadget."""
    return CZ @ np.kron(H @ rz(-alpha), H @ rz(-beta))


CNOT_TARGET_FIRST = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)
"""CNOT with the control on slot 1 and the target on slot 0."""


# --- verification ------------------------------------------------------------

EXHAUSTIVE_LIMIT = 1 << 16
CHUNK = 4096


def branch_table(pattern: MeasurementPattern, seed: int = 0, limit: int = EXHAUSTIVE_LIMIT) -> np.ndarray:
    """Outcome rows covering every branch.

    All steps are enumerated when there are at most ``limit`` branches. Larger
    patterns enumerate every XY-plane (adaptive) outcome exhaustively and draw
    the Z-basis carving outcomes at random per row.
    """
    n = len(pattern.steps)
    if 2**n <= limit:
        return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64).reshape(-1, n)
    xy = pattern.xy_steps()
    if 2 ** len(xy) > limit:
        raise PatternError(f"{len(xy)} adaptive measurements exceed the branch budget")
    rows = np.array(list(itertools.product((0, 1), repeat=len(xy))), dtype=np.int64)
    table = np.random.default_rng(seed).integers(0, 2, size=(rows.shape[0], n))
    table[:, xy] = rows
    return table


def choi_register(k: int) -> StateVector:
    """Maximally entangled state on ``k`` slots followed by ``k`` reference qubits."""
    d = 2**k
    return StateVector(2 * k, np.eye(d).reshape(-1) / np.sqrt(d))


def branch_infidelities(
    pattern: MeasurementPattern,
    reference: np.ndarray,
    inputs: StateVector | None = None,
    seed: int = 0,
    limit: int = EXHAUSTIVE_LIMIT,
) -> np.ndarray:
    """Corrected-output infidelity of every possible branch against ``reference``.

    Without ``inputs`` the check runs on the Choi register, so one run per
    branch covers the whole input space.
    """
    k = pattern.num_inputs
    reference = np.asarray(reference, dtype=complex)
    if reference.shape != (2 ** pattern.num_outputs, 2**k):
        raise PatternError(f"reference shape {reference.shape} does not match the pattern")
    if inputs is None:
        inputs = choi_register(k)
    n_anc = inputs.num_qubits - k
    target = np.kron(reference, np.eye(2**n_anc)) @ inputs.amplitudes
    target = target / np.linalg.norm(target)
    table = branch_table(pattern, seed, limit)
    out = []
    for start in range(0, table.shape[0], CHUNK):
        res = execute(pattern, inputs, forced=table[start : start + CHUNK])
        corrected = correct_batch(pattern, res)
        fid = np.abs(corrected.conj() @ target) ** 2
        out.append(np.where(res.valid, 1.0 - fid, np.nan))
    return np.concatenate(out)


def verify_gadget(
    pattern: MeasurementPattern,
    reference: np.ndarray,
    inputs: Sequence[StateVector] | None = None,
    seed: int = 0,
    limit: int = EXHAUSTIVE_LIMIT,
) -> float:
    """Worst corrected-output infidelity over all branches (and all ``inputs``).

    Zero-probability branches are skipped.
    """
    registers = [None] if inputs is None else list(inputs)
    worst = 0.0
    for reg in registers:
        inf = branch_infidelities(pattern, reference, reg, seed, limit)
        if np.all(np.isnan(inf)):
            raise PatternError("no branch has non-zero probability")
        worst = max(worst, float(np.nanmax(inf)))
    return max(worst, 0.0)
