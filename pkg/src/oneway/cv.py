"""Photonic cluster: dual-rail wire, wire projection and measurement-based gates.

Two layers live here.

``build_wire`` and ``project_wires`` generate the time-multiplexed resource:
per temporal index ``k`` a q-squeezed mode ``A_k`` and a p-squeezed mode
``B_k`` are mixed on a beam splitter, then ``A_k`` is coupled to the delayed
modes ``B_{k-1}`` and ``B_{k-N}``. Homodyning every odd temporal index at the
control angle leaves the computational wires.

The gates work on a logical register. Each computational macronode is a
beam-splitter teleportation: the logical mode meets one half of a fresh
entangled pair on the measurement beam splitter, both outputs are homodyned
and the other half, after linear feedforward, carries the logical mode on.
Feedforward uses the gain that cancels the anti-squeezed quadratures exactly,
so the induced symplectic map is exact at any squeezing and finite squeezing
shows up only as added noise.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

from oneway.gaussian import (
    GaussianError,
    GaussianState,
    ForcedValue,
    HomodyneSpec,
    SampleValue,
    beamsplitter_matrix,
    cz_matrix,
    db_to_variance,
    homodyne,
    rotation_matrix,
    squeeze_matrix,
    variance_to_db,
)

MAX_TEMPORAL = 40
CONTROL_EDGE_WEIGHT = np.sqrt(2)
REFERENCE_NOISE_FACTOR_DB = 6.0


# --- resource generation -------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class WireConfig:
    N: int = 12
    steps: int = 24
    squeezing_db: float = -10.0

    def __post_init__(self) -> None:
        if self.N < 2 or self.N % 2:
            raise GaussianError(f"N must be even and at least 2, got {self.N}")
        if not 1 <= self.steps <= MAX_TEMPORAL:
            raise GaussianError(f"steps must lie in 1..{MAX_TEMPORAL}, got {self.steps}")


@dataclasses.dataclass(frozen=True)
class WireState:
    """Gaussian state plus the map ``(spatial, k) -> mode`` and the generating network."""

    state: GaussianState
    index: dict
    network: np.ndarray | None = None
    squeezed_rows: tuple[int, ...] = ()


def build_wire(config: WireConfig) -> WireState:
    """Generate the coiled dual-rail cluster over ``config.steps`` temporal indices."""
    k_max = config.steps
    index = {}
    for k in range(k_max):
        index[("A", k)] = 2 * k
        index[("B", k)] = 2 * k + 1
    m = 2 * k_max
    v = db_to_variance(config.squeezing_db)
    diag = []
    squeezed = []
    for k in range(k_max):
        diag += [v, 0.25 / v]  # A_k: q squeezed
        diag += [0.25 / v, v]  # B_k: p squeezed
        squeezed += [4 * k, 4 * k + 3]
    net = np.eye(2 * m)

    def couple(i: int, j: int) -> None:
        nonlocal net
        s = np.eye(2 * m)
        idx = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1]
        s[np.ix_(idx, idx)] = beamsplitter_matrix()
        net = s @ net

    for k in range(k_max):
        couple(index[("A", k)], index[("B", k)])
    for k in range(1, k_max):
        couple(index[("A", k)], index[("B", k - 1)])
    for k in range(config.N, k_max):
        couple(index[("A", k)], index[("B", k - config.N)])
    cov = net @ np.diag(diag) @ net.T
    state = GaussianState(m, np.zeros(2 * m), cov)
    return WireState(state, index, net, tuple(squeezed))


def nullifier_variances(wire: WireState) -> np.ndarray:
    """Variances of the quadrature combinations that were squeezed at the sources."""
    inv = np.linalg.inv(wire.network)
    rows = inv[list(wire.squeezed_rows)]
    return np.einsum("ij,jk,ik->i", rows, wire.state.cov, rows)


def control_angle(k: int) -> float:
    """Homodyne angle (-1)^((k-1)/2) pi/4 for an odd temporal index."""
    if k % 2 == 0:
        raise GaussianError(f"temporal index {k} is not a control index")
    return (-1) ** ((k - 1) // 2) * np.pi / 4


def project_wires(wire: WireState, policy: SampleValue | ForcedValue = ForcedValue(0.0)) -> WireState:
    """Homodyne both spatial modes of every odd temporal index at the control angle."""
    state = wire.state
    labels = sorted(wire.index, key=wire.index.get)
    for label in [x for x in labels if x[1] % 2 == 1]:
        mode = labels.index(label)
        _, state = homodyne(state, HomodyneSpec(mode, control_angle(label[1])), policy)
        labels.remove(label)
    return WireState(state, {x: i for i, x in enumerate(labels)})


# --- linear-feedforward circuits -----------------------------------------------------


class FeedforwardCircuit:
    """Gaussian circuit tracked as linear combinations of source quadratures.

    Every current quadrature is a row of ``T`` over the sources: the input
    register quadratures plus, for each resource mode, its squeezed and
    anti-squeezed quadrature. Homodyne outcomes are kept as rows too, and
    ``feedforward`` subtracts from an output the combination of outcomes that
    cancels every anti-squeezed source.
    """

    def __init__(self, register: GaussianState) -> None:
        n = 2 * register.num_modes
        self.T = np.eye(n)
        self.src_mean = register.mean.copy()
        self.src_cov = [register.cov]
        self.anti: list[int] = []
        self.modes = list(range(register.num_modes))
        self.outcomes: list[np.ndarray] = []
        self._next = register.num_modes

    @property
    def n_src(self) -> int:
        return self.T.shape[1]

    def _grow(self, extra: int) -> None:
        self.T = np.hstack([self.T, np.zeros((self.T.shape[0], extra))])
        for i, row in enumerate(self.outcomes):
            self.outcomes[i] = np.concatenate([row, np.zeros(extra)])

    def add_squeezed(self, db: float, quadrature: str) -> int:
        """Append a resource mode squeezed in ``quadrature``; returns its label."""
        v = db_to_variance(db)
        col = self.n_src
        self._grow(2)
        self.T = np.vstack([self.T, np.zeros((2, self.n_src))])
        self.T[-2, col] = 1.0
        self.T[-1, col + 1] = 1.0
        self.src_mean = np.concatenate([self.src_mean, np.zeros(2)])
        if quadrature == "q":
            self.src_cov.append(np.diag([v, 0.25 / v]))
            self.anti.append(col + 1)
        else:
            self.src_cov.append(np.diag([0.25 / v, v]))
            self.anti.append(col)
        label = self._next
        self._next += 1
        self.modes.append(label)
        return label

    def _rows(self, labels: Sequence[int]) -> list[int]:
        return [r for lab in labels for r in (2 * self.modes.index(lab), 2 * self.modes.index(lab) + 1)]

    def apply(self, matrix: np.ndarray, labels: Sequence[int]) -> None:
        idx = self._rows(labels)
        self.T[idx] = matrix @ self.T[idx]

    def measure(self, label: int, theta: float) -> None:
        """Homodyne ``q cos(theta) + p sin(theta)`` and drop the mode."""
        rows = self._rows([label])
        q, p = self.T[rows]
        self.outcomes.append(np.cos(theta) * q + np.sin(theta) * p)
        self.T = np.delete(self.T, rows, axis=0)
        self.modes.remove(label)

    def feedforward(self, labels: Sequence[int]) -> np.ndarray:
        """Displace ``labels`` by the outcome combination that removes anti-squeezed noise.

        Returns the gain matrix. Pending outcomes are consumed.
        """
        if not self.outcomes:
            return np.zeros((0, 0))
        m = np.array(self.outcomes)
        idx = self._rows(labels)
        out = self.T[idx]
        anti = self.anti
        gain = out[:, anti] @ np.linalg.pinv(m[:, anti])
        residual = out[:, anti] - gain @ m[:, anti]
        if np.abs(residual).max() > 1e-9:
            raise GaussianError("feedforward cannot cancel the anti-squeezed noise")
        self.T[idx] = out - gain @ m
        self.outcomes = []
        return gain

    def _source_cov(self) -> np.ndarray:
        n = self.n_src
        cov = np.zeros((n, n))
        o = 0
        for block in self.src_cov:
            b = block.shape[0]
            cov[o : o + b, o : o + b] = block
            o += b
        return cov

    def state(self, order: Sequence[int] | None = None) -> GaussianState:
        order = list(self.modes) if order is None else list(order)
        t = self.T[self._rows(order)]
        return GaussianState(len(order), t @ self.src_mean, t @ self._source_cov() @ t.T)

    def register_map(self, order: Sequence[int], n_in: int) -> np.ndarray:
        """Induced symplectic map from the input register onto ``order``."""
        return self.T[np.ix_(self._rows(order), range(2 * n_in))]


def _check_angles(theta_a: float, theta_b: float) -> None:
    tm = (theta_a - theta_b) / 2
    if abs(np.sin(tm)) < 1e-9 or abs(np.cos(tm)) < 1e-9:
        raise GaussianError("theta_minus at a multiple of pi/2 demands infinite squeezing")


def _macronode(circ: FeedforwardCircuit, label: int, theta_a: float, theta_b: float, wire: int, db: float) -> int:
    """Teleport logical mode ``label`` through one macronode; returns the new label."""
    _check_angles(theta_a, theta_b)
    a = circ.add_squeezed(db, "q")
    b = circ.add_squeezed(db, "p")
    circ.apply(beamsplitter_matrix(), [a, b])
    circ.apply(beamsplitter_matrix(), [label, a])
    # Detector angles enter with the opposite sign of the basis angles, and a
    # fixed quarter-wave shift on the output leg aligns the frame.
    circ.measure(label, -theta_a)
    circ.measure(a, -theta_b)
    circ.apply(rotation_matrix(np.pi / 2 + np.pi * wire), [b])
    circ.feedforward([b])
    return b


def macronode_law(theta_a: float, theta_b: float, wire: int = 0) -> np.ndarray:
    """(-1)^w R(theta+) S(cot theta-) R(theta+) with theta+- = (theta_A +- theta_B)/2."""
    _check_angles(theta_a, theta_b)
    tp, tm = (theta_a + theta_b) / 2, (theta_a - theta_b) / 2
    cot = 1 / np.tan(tm)
    s = squeeze_matrix(abs(cot)) * np.sign(cot)
    return (-1) ** wire * rotation_matrix(tp) @ s @ rotation_matrix(tp)


@dataclasses.dataclass
class GateResult:
    state: GaussianState
    symplectic: np.ndarray
    added_noise: np.ndarray


def _run(register: GaussianState, program) -> GateResult:
    circ = FeedforwardCircuit(register)
    labels = list(range(register.num_modes))
    program(circ, labels)
    sym = circ.register_map(labels, register.num_modes)
    out = circ.state(labels)
    added = out.cov - sym @ register.cov @ sym.T
    return GateResult(out, sym, added)


def single_mode_gate(
    state: GaussianState,
    wire: int,
    k: int,
    theta_a: float,
    theta_b: float,
    squeezing_db: float = -30.0,
) -> GateResult:
    """Measure computational macronode ``k`` of ``wire`` at ``(theta_a, theta_b)``.

    ``state`` holds one logical mode per wire. The induced map is
    ``macronode_law(theta_a, theta_b, wire)``.
    """
    if k % 2:
        raise GaussianError(f"temporal index {k} is a control index")
    if not 0 <= wire < state.num_modes:
        raise GaussianError(f"wire {wire} out of range")

    def program(circ: FeedforwardCircuit, labels: list[int]) -> None:
        labels[wire] = _macronode(circ, labels[wire], theta_a, theta_b, wire, squeezing_db)

    return _run(state, program)


def cz_angle_table(g: float, w: int) -> dict[tuple[str, str], float]:
    """The ten homodyne angles of the controlled-phase gate, keyed by (spatial, offset)."""
    s = (-1) ** w
    a = np.arctan(g / 2)
    return {
        ("A", "k"): np.pi / 4,
        ("B", "k"): -np.pi / 4,
        ("A", "k+2"): s * np.pi / 4,
        ("B", "k+2"): -s * np.pi / 4,
        ("A", "k+N"): s * (np.pi / 2 - a),
        ("B", "k+N"): 0.0,
        ("A", "k+N+1"): s * np.pi / 4,
        ("B", "k+N+1"): s * (np.pi / 4 + 2 * a),
        ("A", "k+N+2"): s * (np.pi / 2 - a),
        ("B", "k+N+2"): 0.0,
    }


def cz_target(g: float, w: int) -> np.ndarray:
    """[R(pi/2) x R((-1)^w pi/2)] C_z(g)."""
    r = np.zeros((4, 4))
    r[:2, :2] = rotation_matrix(np.pi / 2)
    r[2:, 2:] = rotation_matrix((-1) ** w * np.pi / 2)
    return r @ cz_matrix(g)


def _control_pair(circ: FeedforwardCircuit, u1: int, u2: int, theta_a: float, theta_b: float, db: float) -> None:
    """Couple two wires through the control pair.

    The pair acts as one p-squeezed node joined to the wires with weights
    sqrt(2) and -sqrt(2), read out at its difference angle (theta_A - theta_B)/2.
    The opposite weights follow the (-1)^w phase alternation between
    neighbouring wires. Equal angles read out q and leave the wires uncoupled.
    """
    c = circ.add_squeezed(db, "p")
    circ.apply(cz_matrix(CONTROL_EDGE_WEIGHT), [c, u1])
    circ.apply(cz_matrix(-CONTROL_EDGE_WEIGHT), [c, u2])
    circ.measure(c, (theta_a - theta_b) / 2)
    circ.feedforward([u1, u2])


def two_mode_cz(
    state: GaussianState,
    wires: tuple[int, int],
    k: int,
    g: float,
    squeezing_db: float = -30.0,
) -> GateResult:
    """Controlled-phase gate between adjacent logic levels with the fixed ten-angle table.

    Wire ``w`` passes macronodes ``k`` and ``k+N``, wire ``w+1`` passes ``k+2``
    and ``k+N+2``, and the control pair ``k+N+1`` sits between them. The induced
    map is ``cz_target(g, w)``.
    """
    w, w2 = wires
    if w2 != w + 1 or not 0 <= w or w2 >= state.num_modes:
        raise GaussianError(f"wires {wires} are not adjacent logic levels of the register")
    if k % 2:
        raise GaussianError(f"temporal index {k} is a control index")
    ang = cz_angle_table(g, w)

    def program(circ: FeedforwardCircuit, labels: list[int]) -> None:
        labels[w] = _macronode(circ, labels[w], ang["A", "k"], ang["B", "k"], w, squeezing_db)
        labels[w2] = _macronode(circ, labels[w2], ang["A", "k+2"], ang["B", "k+2"], w2, squeezing_db)
        _control_pair(circ, labels[w], labels[w2], ang["A", "k+N+1"], ang["B", "k+N+1"], squeezing_db)
        labels[w] = _macronode(circ, labels[w], ang["A", "k+N"], ang["B", "k+N"], w, squeezing_db)
        labels[w2] = _macronode(circ, labels[w2], ang["A", "k+N+2"], ang["B", "k+N+2"], w2, squeezing_db)

    return _run(state, program)


def cascade_angles(target: np.ndarray, wire: int = 0, seed: int = 0) -> tuple[tuple[float, float], tuple[float, float]]:
    """Detector angles of two successive macronodes whose product is ``target``.

    Any single-mode symplectic matrix is reachable; the search is a seeded
    least-squares fit over the four angles with restarts.
    """
    from scipy.optimize import least_squares

    target = np.asarray(target, dtype=float)
    if target.shape != (2, 2) or abs(np.linalg.det(target) - 1) > 1e-8:
        raise GaussianError("target must be a 2x2 symplectic matrix")

    def residual(x: np.ndarray) -> np.ndarray:
        tm1, tm2 = x[1], x[3]
        if min(abs(np.sin(tm1)), abs(np.cos(tm1)), abs(np.sin(tm2)), abs(np.cos(tm2))) < 1e-6:
            return np.full(4, 1e3)
        v1 = macronode_law(x[0] + x[1], x[0] - x[1], wire)
        v2 = macronode_law(x[2] + x[3], x[2] - x[3], wire)
        return (v2 @ v1 - target).ravel()

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(64):
        fit = least_squares(residual, rng.uniform(-np.pi / 2, np.pi / 2, 4), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if best is None or fit.cost < best.cost:
            best = fit
        if best.cost < 1e-24:
            break
    if best.cost > 1e-16:
        raise GaussianError("no two-step cascade reaches the target")
    tp1, tm1, tp2, tm2 = best.x
    return (tp1 + tm1, tp1 - tm1), (tp2 + tm2, tp2 - tm2)


# --- noise accounting ----------------------------------------------------------


IDENTITY_ANGLES = (np.pi / 4, -np.pi / 4)


@dataclasses.dataclass
class NoiseReport:
    squeezing_db: float
    squeezed_variance: float
    added_variance: float
    factor_db: float
    reference_factor_db: float = REFERENCE_NOISE_FACTOR_DB


def gate_noise_report(squeezing_db: float, probe: GaussianState | None = None) -> NoiseReport:
    """Noise an identity macronode adds to ``probe``, relative to the squeezed variance."""
    probe = GaussianState.vacuum(1) if probe is None else probe
    res = single_mode_gate(probe, 0, 0, *IDENTITY_ANGLES, squeezing_db=squeezing_db)
    v = db_to_variance(squeezing_db)
    added = float(np.mean(np.diag(res.added_noise)))
    return NoiseReport(squeezing_db, v, added, float(10 * np.log10(added / v)))


def extract_symplectic(gate, m: int) -> np.ndarray:
    """Probe-based extraction: push unit means through ``gate`` and read the output means."""
    cols = []
    for j in range(2 * m):
        mean = np.zeros(2 * m)
        mean[j] = 1.0
        cols.append(gate(GaussianState(m, mean, 0.5 * np.eye(2 * m))).state.mean)
    return np.array(cols).T


__all__ = [
    "WireConfig",
    "WireState",
    "build_wire",
    "project_wires",
    "control_angle",
    "nullifier_variances",
    "single_mode_gate",
    "two_mode_cz",
    "cz_angle_table",
    "cz_target",
    "macronode_law",
    "gate_noise_report",
    "cascade_angles",
    "extract_symplectic",
    "variance_to_db",
]
