"""Lowering of small gate circuits onto lattice cluster patterns.

Logical wire ``q`` runs along lattice row ``2q``. A rotation extends the wire
by four sites, a CNOT adds a bridge site on the row next to the target plus a
new target site, and every lattice site inside the bounding box that no gate
uses becomes a carved site, measured in Z before anything else.

Vertex ids are ``(row, column)`` lattice coordinates. Each gate gets fresh
columns, so a wire that sits idle while other wires advance is joined to its
next site by a long-range edge; the layout is a lattice embedding of the
gate tiles, not a strict nearest-neighbour square lattice.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence, Union

import numpy as np

from oneway.cluster import ClusterGraph, Edge
from oneway.pattern import MeasurementPattern, euler_rotation, flow_pattern

MAX_LOGICAL = 3
MAX_GATES = 6


class CompileError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class Rotation:
    q: int
    alpha: float
    beta: float
    gamma: float


@dataclasses.dataclass(frozen=True)
class CNOT:
    control: int
    target: int


Op = Union[Rotation, CNOT]


@dataclasses.dataclass(frozen=True)
class CircuitIR:
    num_logical: int
    ops: tuple[Op, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.num_logical < 1:
            raise CompileError("a circuit needs at least one logical qubit")
        for op in self.ops:
            qubits = (op.q,) if isinstance(op, Rotation) else (op.control, op.target)
            if any(not 0 <= q < self.num_logical for q in qubits):
                raise CompileError(f"{op} addresses a qubit outside 0..{self.num_logical - 1}")
            if isinstance(op, CNOT) and op.control == op.target:
                raise CompileError("CNOT control and target must differ")


def _embed(gate: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Full ``2^n`` matrix of ``gate`` acting on ``targets`` (qubit 0 most significant)."""
    k = len(targets)
    t = gate.reshape((2,) * (2 * k))
    full = np.eye(2**n, dtype=complex).reshape((2,) * (2 * n))
    full = np.tensordot(t, full, axes=(list(range(k, 2 * k)), list(targets)))
    full = np.moveaxis(full, list(range(k)), list(targets))
    return full.reshape(2**n, 2**n)


def circuit_unitary(circuit: CircuitIR) -> np.ndarray:
    n = circuit.num_logical
    u = np.eye(2**n, dtype=complex)
    cnot = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
    for op in circuit.ops:
        if isinstance(op, Rotation):
            u = _embed(euler_rotation(op.alpha, op.beta, op.gamma), [op.q], n) @ u
        else:
            u = _embed(cnot, [op.control, op.target], n) @ u
    return u


def compile_circuit(circuit: CircuitIR) -> tuple[ClusterGraph, MeasurementPattern]:
    """Lower ``circuit`` to a carved lattice cluster and its measurement pattern."""
    n = circuit.num_logical
    if n > MAX_LOGICAL or len(circuit.ops) > MAX_GATES:
        raise CompileError(
            f"circuit exceeds the {MAX_LOGICAL}-qubit / {MAX_GATES}-gate compiler limit"
        )
    cur = {q: (2 * q, 0) for q in range(n)}
    used: dict[tuple[int, int], str] = {v: "input" for v in cur.values()}
    edges: list[tuple] = []
    order: list[tuple] = []
    flow: dict = {}
    col = 0

    def extend(q: int, angles: Sequence[float]) -> None:
        nonlocal col
        for a in angles:
            col += 1
            nxt = (2 * q, col)
            used[nxt] = "plus"
            edges.append((cur[q], nxt))
            order.append((cur[q], a))
            flow[cur[q]] = nxt
            cur[q] = nxt

    touched = set()
    for op in circuit.ops:
        if isinstance(op, Rotation):
            extend(op.q, [0.0, -op.alpha, -op.beta, -op.gamma])
            touched.add(op.q)
        else:
            t, c = op.target, op.control
            bridge = 2 * t + (1 if c > t else -1)
            mid, t_out = (bridge, col + 1), (2 * t, col + 2)
            col += 2
            used[mid] = used[t_out] = "plus"
            edges += [(cur[t], mid), (mid, t_out), (mid, cur[c])]
            order += [(cur[t], 0.0), (mid, 0.0)]
            flow[cur[t]] = mid
            flow[mid] = t_out
            cur[t] = t_out
            touched.update((t, c))
    for q in range(n):
        if q not in touched:
            extend(q, [0.0, 0.0])

    rows, cols = 2 * n - 1, col + 1
    carved = [(r, x) for r in range(rows) for x in range(cols) if (r, x) not in used]
    carved_set = set(carved)
    for r, x in carved:
        for nb in ((r + 1, x), (r, x + 1), (r - 1, x), (r, x - 1)):
            if nb in used or (nb in carved_set and nb > (r, x)):
                edges.append(((r, x), nb))

    ids = sorted(used) + carved
    init = dict(used)
    graph = ClusterGraph(
        tuple((v, init.get(v, "plus")) for v in ids), tuple(Edge(*e) for e in edges)
    )
    inputs = {(2 * q, 0): q for q in range(n)}
    outputs = {cur[q]: q for q in range(n)}
    pattern = flow_pattern(graph, inputs, outputs, [(v, None) for v in carved] + order, flow)
    return graph, pattern
