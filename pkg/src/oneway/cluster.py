"""Cluster-state construction and verification.

Covers the CZ recipe, the diagonal Transmon interaction, ordered U_Bell
entanglers and the trapped-ion pulse primitives (M, G and logical hiding).
"""

from __future__ import annotations

import dataclasses
import itertools
from typing import Hashable, Iterable, Mapping, Sequence, Union

import numpy as np

from oneway.statevector import (
    CZ,
    SINGLE_QUBIT_STATES,
    X,
    ZBasis,
    Forced,
    MeasurementBasis,
    PauliString,
    StateVector,
    apply_matrix,
    fidelity,
    measure,
)

Vertex = Hashable
INIT_LABELS = ("plus", "minus", "zero", "one", "input")
EDGE_KINDS = ("CZ", "Bell")

# Ordered two-qubit entangler; (u, v) = (first, second) tensor factor.
# Block form 1/sqrt2 [[I, -X], [X, I]]: the transpose of the printed block
# matrix, which is the orientation that reproduces the 3-qubit CNOT evolution.
U_BELL = (
    np.block([[np.eye(2), -X.real], [X.real, np.eye(2)]]).astype(complex) / np.sqrt(2)
)

BELL_STATES = {
    "phi+": np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
    "psi+": np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    "psi-": np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
}


class GraphError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class Edge:
    u: Vertex
    v: Vertex
    kind: str = "CZ"

    def key(self) -> frozenset:
        return frozenset((self.u, self.v))


@dataclasses.dataclass(frozen=True)
class ClusterGraph:
    """Declarative cluster description.

    ``vertices`` is an ordered sequence of ``(id, init)`` pairs; the order fixes
    the qubit index of each vertex in built states. ``edges`` are applied in
    list order (which only matters for Bell edges).
    """

    vertices: tuple[tuple[Vertex, str], ...]
    edges: tuple[Edge, ...] = ()

    def __post_init__(self) -> None:
        verts = tuple((v, init) for v, init in self.vertices)
        edges = tuple(e if isinstance(e, Edge) else Edge(*e) for e in self.edges)
        ids = [v for v, _ in verts]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate vertex ids")
        for v, init in verts:
            if init not in INIT_LABELS:
                raise GraphError(f"unknown init label {init!r} on vertex {v!r}")
        idset = set(ids)
        seen = set()
        for e in edges:
            if e.kind not in EDGE_KINDS:
                raise GraphError(f"unknown edge kind {e.kind!r}")
            if e.u == e.v:
                raise GraphError(f"self-loop on {e.u!r}")
            if e.u not in idset or e.v not in idset:
                raise GraphError(f"edge ({e.u!r}, {e.v!r}) references a missing vertex")
            if e.key() in seen:
                raise GraphError(f"duplicate edge ({e.u!r}, {e.v!r})")
            seen.add(e.key())
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(
        cls,
        n_or_ids: int | Sequence[Vertex],
        edges: Iterable[tuple],
        init: str | Mapping[Vertex, str] = "plus",
    ) -> ClusterGraph:
        ids = list(range(n_or_ids)) if isinstance(n_or_ids, int) else list(n_or_ids)
        if isinstance(init, str):
            labels = {v: init for v in ids}
        else:
            labels = {v: init.get(v, "plus") for v in ids}
        return cls(tuple((v, labels[v]) for v in ids), tuple(Edge(*e) for e in edges))

    @property
    def ids(self) -> list[Vertex]:
        return [v for v, _ in self.vertices]

    def init_of(self, v: Vertex) -> str:
        for u, init in self.vertices:
            if u == v:
                return init
        raise GraphError(f"unknown vertex {v!r}")

    def index(self, v: Vertex) -> int:
        try:
            return self.ids.index(v)
        except ValueError:
            raise GraphError(f"unknown vertex {v!r}") from None

    def neighbors(self, v: Vertex) -> list[Vertex]:
        if v not in self.ids:
            raise GraphError(f"unknown vertex {v!r}")
        out = []
        for e in self.edges:
            if e.u == v:
                out.append(e.v)
            elif e.v == v:
                out.append(e.u)
        return out

    def without(self, v: Vertex) -> ClusterGraph:
        if v not in self.ids:
            raise GraphError(f"unknown vertex {v!r}")
        return ClusterGraph(
            tuple(p for p in self.vertices if p[0] != v),
            tuple(e for e in self.edges if v not in (e.u, e.v)),
        )

    def has_bell_edges(self) -> bool:
        return any(e.kind == "Bell" for e in self.edges)


# --- standard graph families -------------------------------------------------


def chain(n: int, init: str = "plus") -> ClusterGraph:
    return ClusterGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)], init)


def ring(n: int) -> ClusterGraph:
    if n < 3:
        raise GraphError("a ring needs at least 3 vertices")
    return ClusterGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def grid(h: int, l: int, init: str | Mapping = "plus") -> ClusterGraph:
    """h x l lattice with vertex ids (j, k), 1-based, ordered row-major."""
    ids = [(j, k) for j in range(1, h + 1) for k in range(1, l + 1)]
    edges = []
    for j, k in ids:
        if j < h:
            edges.append(((j, k), (j + 1, k)))
        if k < l:
            edges.append(((j, k), (j, k + 1)))
    return ClusterGraph.from_edges(ids, edges, init)


# --- builders ----------------------------------------------------------------


def _initial_tensor(graph: ClusterGraph, inputs: Mapping[Vertex, Sequence[complex]] | None) -> np.ndarray:
    inputs = dict(inputs or {})
    amps = np.array([1.0 + 0j])
    for v, init in graph.vertices:
        if init == "input":
            if v not in inputs:
                raise GraphError(f"input vertex {v!r} has no supplied state")
            psi = np.asarray(inputs[v], dtype=complex)
            psi = psi / np.linalg.norm(psi)
        else:
            psi = SINGLE_QUBIT_STATES[init]
        amps = np.kron(amps, psi)
    return amps.reshape((2,) * len(graph.vertices))


def _entangle(graph: ClusterGraph, tensor: np.ndarray) -> np.ndarray:
    for e in graph.edges:
        gate = CZ if e.kind == "CZ" else U_BELL
        tensor = apply_matrix(tensor, gate, [graph.index(e.u), graph.index(e.v)])
    return tensor


def build_cz_cluster(
    graph: ClusterGraph, inputs: Mapping[Vertex, Sequence[complex]] | None = None
) -> StateVector:
    """CZ gates on every edge of ``graph`` applied to the initial product state."""
    if graph.has_bell_edges():
        raise GraphError("build_cz_cluster accepts CZ edges only")
    if not graph.vertices:
        raise GraphError("graph has no vertices")
    t = _entangle(graph, _initial_tensor(graph, inputs))
    return StateVector(len(graph.vertices), t.reshape(-1))


def build_bell_cluster(
    graph: ClusterGraph, inputs: Mapping[Vertex, Sequence[complex]] | None = None
) -> StateVector:
    """Apply U_Bell along ordered Bell edges and CZ along CZ edges, in list order."""
    if not graph.vertices:
        raise GraphError("graph has no vertices")
    t = _entangle(graph, _initial_tensor(graph, inputs))
    return StateVector(len(graph.vertices), t.reshape(-1))


def stabilizer_of(graph: ClusterGraph, a: Vertex) -> PauliString:
    """K_a = X_a times Z on every neighbour of a, indexed by qubit position."""
    factors = {graph.index(a): "X"}
    for x in graph.neighbors(a):
        factors[graph.index(x)] = "Z"
    return PauliString(factors)


def carve_z(
    state: StateVector, graph: ClusterGraph, c_star: Vertex, outcome: int
) -> tuple[StateVector | None, ClusterGraph, list[Vertex]]:
    """Measure ``c_star`` in Z with a forced outcome, deleting it from the cluster.

    Returns the post-measurement state, the reduced graph and the list of former
    neighbours that carry a Z byproduct (empty for outcome 0).
    """
    idx = graph.index(c_star)
    _, _, post = measure(state, idx, ZBasis(), Forced(outcome))
    byproducts = graph.neighbors(c_star) if outcome == 1 else []
    return post, graph.without(c_star), byproducts


# --- Transmon lattice --------------------------------------------------------


def _grid_pairs(h: int, l: int) -> list[tuple[int, int]]:
    """Nearest-neighbour pairs (j, k) of a row-major h x l grid, j < k as indices."""
    pairs = []
    for r in range(h):
        for c in range(l):
            i = r * l + c
            if r + 1 < h:
                pairs.append((i, i + l))
            if c + 1 < l:
                pairs.append((i, i + 1))
    return pairs


def evolve_transmon(h: int, l: int, g_eff: float, t: float) -> StateVector:
    """Evolve |+>^{h l} under the pairwise Transmon interaction for time ``t``.

    The interaction is diagonal: each nearest-neighbour pair (j < k) contributes
    g_eff * n_j (1 - n_k) with n = |1><1|, so evolution is a phase per basis state.
    """
    if t < 0:
        raise ValueError("negative evolution time")
    if h < 1 or l < 1:
        raise ValueError("lattice dimensions must be positive")
    n = h * l
    bits = (np.arange(2**n)[:, None] >> (n - 1 - np.arange(n))) & 1
    energy = np.zeros(2**n)
    for j, k in _grid_pairs(h, l):
        energy += bits[:, j] * (1 - bits[:, k])
    amps = np.exp(-1j * g_eff * t * energy) / np.sqrt(2**n)
    return StateVector(n, amps)


def transmon_graph(h: int, l: int) -> ClusterGraph:
    """Grid whose |+>/|-> initialization reproduces the Transmon cluster.

    Sites with exactly one lattice successor (last column, or last row) start in
    |->; every other site, including the far corner, starts in |+>.
    """
    if h < 1 or l < 1:
        raise ValueError("lattice dimensions must be positive")
    init = {}
    for j in range(1, h + 1):
        for k in range(1, l + 1):
            odd = (j < h) != (k < l)
            init[(j, k)] = "minus" if odd else "plus"
    return grid(h, l, init)


def build_transmon_cluster(h: int, l: int) -> StateVector:
    return build_cz_cluster(transmon_graph(h, l))


# --- trapped-ion primitives --------------------------------------------------


@dataclasses.dataclass(frozen=True)
class M:
    """Moelmer-Soerensen pulse exp(-i theta sum_{a<b} X_a X_b) on non-hidden qubits."""

    theta: float


@dataclasses.dataclass(frozen=True)
class G:
    """Single-qubit phase exp(-i theta/2 Z_k)."""

    k: int
    theta: float


@dataclasses.dataclass(frozen=True)
class FHide:
    """Toggle hidden membership of ``subset``."""

    subset: frozenset

    def __init__(self, subset: Iterable[int]) -> None:
        object.__setattr__(self, "subset", frozenset(subset))


IonPulse = Union[M, G, FHide]


def _xx_rotation(theta: float) -> np.ndarray:
    xx = np.kron(X, X)
    return np.cos(theta) * np.eye(4) - 1j * np.sin(theta) * xx


def apply_ion_pulse(
    state: StateVector, pulse: IonPulse, hidden: frozenset = frozenset()
) -> tuple[StateVector, frozenset]:
    n = state.num_qubits
    hidden = frozenset(hidden)
    if isinstance(pulse, FHide):
        bad = [q for q in pulse.subset if not 0 <= q < n]
        if bad:
            raise IndexError(f"hiding pulse touches qubits {bad} outside the register")
        return state, hidden ^ pulse.subset
    t = state.tensor
    if isinstance(pulse, M):
        active = [q for q in range(n) if q not in hidden]
        # The X_a X_b terms commute, so the exponential factorizes into pair rotations.
        gate = _xx_rotation(pulse.theta)
        for a, b in itertools.combinations(active, 2):
            t = apply_matrix(t, gate, [a, b])
    elif isinstance(pulse, G):
        if not 0 <= pulse.k < n:
            raise IndexError(f"G pulse on qubit {pulse.k} outside the register")
        if pulse.k in hidden:
            raise ValueError(f"G pulse on hidden qubit {pulse.k}")
        phase = np.diag([np.exp(-0.5j * pulse.theta), np.exp(0.5j * pulse.theta)])
        t = apply_matrix(t, phase, [pulse.k])
    else:
        raise TypeError(f"not an ion pulse: {pulse!r}")
    return StateVector(n, t.reshape(-1)), hidden


def _pair_ms(a: int, b: int, theta: float = np.pi / 4) -> tuple[IonPulse, ...]:
    others = frozenset(range(4)) - {a, b}
    return (FHide(others), M(theta), FHide(others))


# Found by a grid search (MS angles in pi/8 steps, phases in pi/4 steps):
# nearest-neighbour MS entanglers isolated by hiding, then two phase flips.
LC4_SEQUENCE: tuple[IonPulse, ...] = (
    *_pair_ms(0, 1),
    *_pair_ms(1, 2),
    *_pair_ms(2, 3),
    G(1, np.pi),
    G(2, np.pi),
)

# Amplitude table of the four-ion linear cluster, |0000> ... |1111>.
LC4_TABLE = np.array(
    [1, 0, 0, -1j, 0, -1, -1j, 0, 0, 1j, -1, 0, -1j, 0, 0, -1], dtype=complex
) / np.sqrt(8)


_S = np.diag([1, 1j])
_H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
_Zm = np.diag([1, -1])

# Single-qubit Cliffords taking the CZ 4-chain onto LC4_TABLE, found by
# exhaustive search over the 24^4 local Clifford products.
ION_LC4_FRAME: tuple[np.ndarray, ...] = (_S, _Zm @ _H @ _S, _Zm @ _H, _S @ _H @ _S @ _H)


def build_ion_lc4(sequence: Sequence[IonPulse] | None = None) -> StateVector:
    """Run an ion pulse sequence on |1111> (default: the shipped LC4 sequence)."""
    seq = LC4_SEQUENCE if sequence is None else tuple(sequence)
    state = StateVector(4, np.eye(16)[15])
    hidden: frozenset = frozenset()
    for pulse in seq:
        state, hidden = apply_ion_pulse(state, pulse, hidden)
    return state


# --- connectedness -----------------------------------------------------------


def bell_fidelity(pair_state: np.ndarray, local: bool = True) -> float:
    """Fidelity of a two-qubit pure state with a Bell pair.

    With ``local`` the Bell pair may be rotated by any local unitaries, which
    gives ``(s_0 + s_1)^2 / 2`` in terms of the Schmidt coefficients; otherwise
    the best of the four standard Bell states is returned.
    """
    v = np.asarray(pair_state, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    if local:
        s = np.linalg.svd(v.reshape(2, 2), compute_uv=False)
        return float((s[0] + s[1]) ** 2 / 2)
    return max(abs(np.vdot(b, v)) ** 2 for b in BELL_STATES.values())


def connectedness_probe(
    state: StateVector,
    keep: tuple[int, int],
    bases: Mapping[int, MeasurementBasis],
) -> float:
    """Best Bell-pair fidelity of ``keep`` (up to local unitaries) over all outcome branches.

    Every qubit outside ``keep`` is measured in ``bases[q]``; branches with
    zero probability are skipped.
    """
    n = state.num_qubits
    if n < 3:
        raise ValueError("connectedness probe needs at least 3 qubits")
    a, b = keep
    if a == b or not (0 <= a < n and 0 <= b < n):
        raise ValueError(f"invalid keep pair {keep}")
    measured = [q for q in range(n) if q not in keep]
    overlap = set(keep) & set(bases)
    if overlap:
        raise ValueError(f"keep pair overlaps measured set at {sorted(overlap)}")
    missing = [q for q in measured if q not in bases]
    if missing:
        raise ValueError(f"no basis given for qubits {missing}")
    best = 0.0
    for bits in itertools.product((0, 1), repeat=len(measured)):
        t = state.tensor
        # Contract from the highest index down so lower indices stay valid.
        for q, s in sorted(zip(measured, bits), reverse=True):
            bra = np.conj(bases[q].vectors()[s])
            t = np.tensordot(bra, t, axes=([0], [q]))
        v = t.reshape(-1)
        if np.vdot(v, v).real < 1e-12:
            continue
        if a > b:
            v = v.reshape(2, 2).T.reshape(-1)
        best = max(best, bell_fidelity(v))
    return float(best)


def stabilizer_report(state: StateVector, graph: ClusterGraph) -> list[tuple[Vertex, float]]:
    from oneway.statevector import expectation

    return [(v, expectation(state, stabilizer_of(graph, v))) for v in graph.ids]


def local_frame_fidelity(state: StateVector, target: StateVector, frame: Sequence[np.ndarray]) -> float:
    """Fidelity of ``target`` with ``(frame[0] x frame[1] x ...) state``."""
    t = state.tensor
    for q, u in enumerate(frame):
        t = apply_matrix(t, np.asarray(u, dtype=complex), [q])
    return fidelity(StateVector(state.num_qubits, t.reshape(-1)), target)
