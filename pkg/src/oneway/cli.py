"""Command-line front end: JSON interchange, cluster builds, verifications, compilation.

Every command prints a report body to stdout that depends only on its inputs
and ``--seed``; the wall time goes to stderr. Exit codes: 0 pass, 1 a check
failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import re
import sys
import time
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from oneway import cluster, compiler, cv, pattern, qec
from oneway.cluster import ClusterGraph, Edge, GraphError
from oneway.gaussian import GaussianError, GaussianState
from oneway.pattern import AngleExpr, MeasurementPattern, PatternError, SlotFrame, Step
from oneway.statevector import Forced, ImpossibleBranchError, StateVector, fidelity

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


# --- angles ------------------------------------------------------------------------

_PI_RE = re.compile(r"^\s*([+-]?)\s*(\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+))?\s*$")


def parse_angle(value: Any) -> float:
    """Radians from a number or a string such as ``"pi/4"``, ``"-3*pi/4"`` or ``"0.25"``."""
    if isinstance(value, bool):
        raise InputError(f"angle {value!r} is not a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI_RE.match(value)
        if m:
            sign = -1.0 if m.group(1) == "-" else 1.0
            num = float(m.group(2)) if m.group(2) else 1.0
            den = float(m.group(3)) if m.group(3) else 1.0
            return sign * num * np.pi / den
        try:
            return float(value)
        except ValueError:
            pass
    raise InputError(f"cannot parse angle {value!r}")


# --- JSON interchange ------------------------------------------------------------


def _vid_out(v: Any) -> Any:
    return list(v) if isinstance(v, tuple) else v


def _vid_in(v: Any) -> Any:
    return tuple(_vid_in(x) for x in v) if isinstance(v, list) else v


def _field(obj: dict, name: str, where: str) -> Any:
    if not isinstance(obj, dict) or name not in obj:
        raise InputError(f"{where}: missing field '{name}'")
    return obj[name]


def graph_to_json(graph: ClusterGraph) -> dict:
    return {
        "vertices": [{"id": _vid_out(v), "init": init} for v, init in graph.vertices],
        "edges": [{"u": _vid_out(e.u), "v": _vid_out(e.v), "kind": e.kind} for e in graph.edges],
    }


def graph_from_json(data: dict) -> ClusterGraph:
    verts = _field(data, "vertices", "graph")
    if not verts:
        raise InputError("graph: no vertices")
    vertices = tuple(
        (_vid_in(_field(v, "id", f"vertices[{i}]")), v.get("init", "plus")) for i, v in enumerate(verts)
    )
    edges = tuple(
        Edge(_vid_in(_field(e, "u", f"edges[{i}]")), _vid_in(_field(e, "v", f"edges[{i}]")), e.get("kind", "CZ"))
        for i, e in enumerate(data.get("edges", []))
    )
    try:
        return ClusterGraph(vertices, edges)
    except GraphError as exc:
        raise InputError(f"graph: {exc}") from exc


def pattern_to_json(p: MeasurementPattern) -> dict:
    steps = []
    for s in p.steps:
        if s.is_z:
            steps.append({"vertex": _vid_out(s.vertex), "basis": "Z"})
        else:
            a = s.angle
            steps.append(
                {
                    "vertex": _vid_out(s.vertex),
                    "base": a.base,
                    "sign_parity": sorted(a.sign_parity),
                    "sign_offset": a.sign_offset,
                    "pi_shift": a.pi_shift,
                }
            )
    return {
        "graph": graph_to_json(p.graph),
        "inputs": [{"vertex": _vid_out(v), "slot": s} for v, s in p.inputs.items()],
        "outputs": [{"vertex": _vid_out(v), "slot": s} for v, s in p.outputs.items()],
        "steps": steps,
        "frame_rules": [{"slot": s, "x": sorted(f.x), "z": sorted(f.z)} for s, f in p.frame.items()],
        "output_ops": [{"vertex": _vid_out(v), "op": op} for v, op in p.output_ops.items()],
    }


def pattern_from_json(data: dict) -> MeasurementPattern:
    graph = graph_from_json(_field(data, "graph", "pattern"))
    steps = []
    for i, s in enumerate(_field(data, "steps", "pattern")):
        v = _vid_in(_field(s, "vertex", f"steps[{i}]"))
        if s.get("basis") == "Z":
            steps.append(Step(v))
        else:
            angle = AngleExpr(
                parse_angle(_field(s, "base", f"steps[{i}]")),
                frozenset(s.get("sign_parity", [])),
                int(s.get("sign_offset", 0)),
                int(s.get("pi_shift", 0)),
            )
            steps.append(Step(v, angle))
    slots = lambda key: {_vid_in(x["vertex"]): int(x["slot"]) for x in data.get(key, [])}  # noqa: E731
    frame = {int(f["slot"]): SlotFrame(f.get("x", []), f.get("z", [])) for f in data.get("frame_rules", [])}
    ops = {_vid_in(x["vertex"]): x["op"] for x in data.get("output_ops", [])}
    try:
        return MeasurementPattern(graph, slots("inputs"), tuple(steps), slots("outputs"), frame, ops)
    except PatternError as exc:
        raise InputError(f"pattern: {exc}") from exc


def circuit_to_json(c: compiler.CircuitIR) -> dict:
    ops = []
    for op in c.ops:
        if isinstance(op, compiler.Rotation):
            ops.append({"gate": "rotation", "q": op.q, "alpha": op.alpha, "beta": op.beta, "gamma": op.gamma})
        else:
            ops.append({"gate": "cnot", "control": op.control, "target": op.target})
    return {"n": c.num_logical, "ops": ops}


def circuit_from_json(data: dict) -> compiler.CircuitIR:
    n = int(_field(data, "n", "circuit"))
    ops: list = []
    for i, op in enumerate(data.get("ops", [])):
        kind = _field(op, "gate", f"ops[{i}]")
        if kind == "rotation":
            ops.append(
                compiler.Rotation(
                    int(_field(op, "q", f"ops[{i}]")),
                    *(parse_angle(op.get(k, 0.0)) for k in ("alpha", "beta", "gamma")),
                )
            )
        elif kind == "cnot":
            ops.append(compiler.CNOT(int(_field(op, "control", f"ops[{i}]")), int(_field(op, "target", f"ops[{i}]"))))
        else:
            raise InputError(f"ops[{i}]: unknown gate {kind!r}")
    try:
        return compiler.CircuitIR(n, tuple(ops))
    except compiler.CompileError as exc:
        raise InputError(f"circuit: {exc}") from exc


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


# --- reports -------------------------------------------------------------------------


@dataclasses.dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        return f"check {self.name} value={self.value:.6e} tol={self.tolerance:.1e} {'PASS' if self.passed else 'FAIL'}"


def below(name: str, value: float, tol: float) -> Check:
    return Check(name, float(value), tol, bool(value < tol))


@dataclasses.dataclass
class RunReport:
    command: str
    seed: int
    checks: list[Check] = dataclasses.field(default_factory=list)
    notes: list[str] = dataclasses.field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def body(self) -> str:
        lines = [f"command: {self.command}", f"seed: {self.seed}"]
        lines += self.notes
        lines += [c.line() for c in self.checks]
        lines.append(f"result: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


# --- verification routines ------------------------------------------------------------

SPANNING = (
    np.array([1, 0], dtype=complex),
    np.array([0, 1], dtype=complex),
    np.array([1, 1], dtype=complex) / np.sqrt(2),
    np.array([1, 1j], dtype=complex) / np.sqrt(2),
)


def random_state(k: int, rng: np.random.Generator) -> StateVector:
    v = rng.normal(size=2**k) + 1j * rng.normal(size=2**k)
    return StateVector.from_amplitudes(v / np.linalg.norm(v))


def gadget_inputs(k: int, rng: np.random.Generator, n_random: int = 20) -> list[StateVector]:
    """Spanning set (each state on every slot) plus random registers."""
    regs = []
    for s in SPANNING:
        amp = np.array([1.0 + 0j])
        for _ in range(k):
            amp = np.kron(amp, s)
        regs.append(StateVector(k, amp))
    regs += [random_state(k, rng) for _ in range(n_random)]
    return regs


def check_gadget(name: str, pat: MeasurementPattern, ref: np.ndarray, seed: int, tol: float) -> list[Check]:
    rng = np.random.default_rng(seed)
    choi = pattern.verify_gadget(pat, ref, seed=seed)
    inputs = pattern.verify_gadget(pat, ref, gadget_inputs(pat.num_inputs, rng), seed=seed)
    return [below(f"{name}.choi_max_infidelity", choi, tol), below(f"{name}.input_max_infidelity", inputs, tol)]


def check_qec(n: int, seed: int, tol: float, n_psi: int = 20) -> tuple[list[Check], list[str]]:
    """All correctable flip patterns x random psi x both encoding outcomes x every syndrome branch.

    Also checks that one flip beyond the threshold yields the definite logical X.
    """
    import itertools

    spec = qec.CodeSpec(n)
    rng = np.random.default_rng(seed)
    ec = qec.build_ec_state(spec)
    psis = []
    for _ in range(n_psi):
        v = rng.normal(size=2)
        psis.append(v / np.linalg.norm(v))

    def branches(enc, flips, a):
        for bits in itertools.product((0, 1), repeat=n):
            try:
                yield qec.decode(enc, qec.ErrorPattern(flips), pattern.ForcedAll(bits), a)
            except ImpossibleBranchError:
                continue

    worst, ok_patterns, total = 0.0, 0, 0
    for r in range(spec.correctable + 1):
        for flips in itertools.combinations(range(1, n + 1), r):
            total += 1
            bad = 0.0
            for psi in psis:
                for a in (0, 1):
                    _, enc = qec.encode(ec, psi, Forced(a))
                    for res in branches(enc, flips, a):
                        bad = max(bad, 1 - fidelity(res.recovered, StateVector(1, psi)))
            worst = max(worst, bad)
            ok_patterns += bad < tol
    checks = [below("qec.max_infidelity", worst, tol)]
    notes = [f"correctable patterns: {ok_patterns}/{total}"]
    over = spec.correctable + 1
    if over <= n:
        _, enc = qec.encode(ec, [1, 0])
        miss = 0.0
        for flips in itertools.combinations(range(1, n + 1), over):
            for res in branches(enc, flips, 0):
                miss = max(miss, 1 - fidelity(res.recovered, StateVector(1, [0, 1])))
        checks.append(below("qec.logical_x_infidelity", miss, tol))
        notes.append(f"{over} flips map |0> to |1>")
    return checks, notes


def check_cv_single(theta_a: float, theta_b: float, db: float, w: int, tol: float) -> list[Check]:
    gate = lambda st: cv.single_mode_gate(st, w, 0, theta_a, theta_b, db)  # noqa: E731
    s = cv.extract_symplectic(gate, w + 1)[2 * w :, 2 * w :]
    err = np.abs(s - cv.macronode_law(theta_a, theta_b, w)).max()
    checks = [below("cv_single.law_error", err, tol)]
    if abs(np.sin(theta_a - theta_b) - 1) < 1e-12:
        r2 = (-1) ** w * cv.rotation_matrix(theta_a + theta_b)
        checks.append(below("cv_single.rotation_error", np.abs(s - r2).max(), tol))
    return checks


def check_cv_cz(g: float, w: int, db: float, tol: float) -> list[Check]:
    gate = lambda st: cv.two_mode_cz(st, (w, w + 1), 0, g, db)  # noqa: E731
    s = cv.extract_symplectic(gate, w + 2)[2 * w :, 2 * w :]
    return [below("cv_cz.law_error", np.abs(s - cv.cz_target(g, w)).max(), tol)]


def noise_checks(levels: Sequence[float] = (-4.4, -10.0, -30.0), spread: float = 0.2) -> tuple[list[Check], list[str]]:
    reports = [cv.gate_noise_report(db) for db in levels]
    factors = [r.factor_db for r in reports]
    notes = [f"noise factor at {r.squeezing_db:+.1f} dB: {r.factor_db:.4f} dB" for r in reports]
    notes.append(f"achieved factor {np.mean(factors):.4f} dB; reference figure {cv.REFERENCE_NOISE_FACTOR_DB:.1f} dB")
    return [below("cv_noise.factor_spread_db", max(factors) - min(factors), spread)], notes


# --- commands ------------------------------------------------------------------------

PRESETS: dict[str, Callable[[], ClusterGraph]] = {
    "chain4": lambda: cluster.chain(4),
    "ring4": lambda: cluster.ring(4),
    "grid2x2": lambda: cluster.grid(2, 2),
    "grid2x3": lambda: cluster.grid(2, 3),
}


def _dump_state(state: StateVector, fmt: str, out: str | None) -> list[str]:
    amps = np.asarray(state.amplitudes, dtype=complex)
    if fmt == "binary":
        if out is None:
            raise InputError("--format binary needs --out")
        Path(out).write_bytes(np.stack([amps.real, amps.imag], axis=1).astype("<f8").tobytes())
        return [f"amplitudes: {amps.size} written to {out}"]
    payload = json.dumps([[float(a.real), float(a.imag)] for a in amps])
    if out is None:
        return [f"amplitudes: {payload}"]
    Path(out).write_text(payload + "\n", encoding="utf-8")
    return [f"amplitudes: {amps.size} written to {out}"]


def cmd_build_cluster(args: argparse.Namespace, report: RunReport) -> None:
    if args.preset == "lc4":
        state = cluster.build_ion_lc4()
        f = fidelity(state, StateVector(4, cluster.LC4_TABLE))
        report.checks.append(Check("lc4.table_fidelity", f, args.tolerance, f >= 1 - args.tolerance))
        report.notes.append(f"fidelity {f:.10f}")
        report.notes += _dump_state(state, args.format, args.out)
        return
    if args.preset:
        graph = PRESETS[args.preset]()
    elif args.graph:
        graph = graph_from_json(_load_json(args.graph))
    else:
        raise InputError("build-cluster needs a graph file or --preset")
    try:
        state = cluster.build_bell_cluster(graph) if graph.has_bell_edges() else cluster.build_cz_cluster(graph)
    except GraphError as exc:
        raise InputError(str(exc)) from exc
    report.notes += _dump_state(state, args.format, args.out)
    if graph.has_bell_edges():
        report.notes.append("stabilizer table skipped: graph has Bell edges")
        return
    worst = 0.0
    for v, val in cluster.stabilizer_report(state, graph):
        report.notes.append(f"stabilizer {json.dumps(_vid_out(v))} {val:+.6f}")
        worst = max(worst, abs(val - 1))
    report.checks.append(below("stabilizer.max_deviation", worst, args.tolerance))


def cmd_verify(args: argparse.Namespace, report: RunReport) -> None:
    tol, seed = args.tolerance, args.seed
    name = args.gadget
    if name == "rotation":
        a, b, c = (parse_angle(x) for x in (args.alpha, args.beta, args.gamma))
        report.checks += check_gadget(name, pattern.gadget_rotation(a, b, c), pattern.euler_rotation(a, b, c), seed, tol)
    elif name == "cnot4":
        report.checks += check_gadget(name, pattern.gadget_cnot4(), pattern.CNOT_TARGET_FIRST, seed, tol)
    elif name == "cnot3":
        report.checks += check_gadget(name, pattern.gadget_cnot3_bell(), pattern.CNOT_TARGET_FIRST, seed, tol)
    elif name == "lc4gate":
        a, b = parse_angle(args.alpha), parse_angle(args.beta)
        report.checks += check_gadget(
            name, pattern.gadget_two_qubit_lc4(a, b), pattern.lc4_gate_reference(a, b), seed, tol
        )
    elif name == "qec":
        checks, notes = check_qec(args.n, seed, tol)
        report.notes += notes
        report.checks += checks
    elif name == "cv-single":
        report.checks += check_cv_single(
            parse_angle(args.theta_a), parse_angle(args.theta_b), args.squeezing_db, args.w, max(tol, 1e-12)
        )
    elif name == "cv-cz":
        report.checks += check_cv_cz(args.g, args.w, args.squeezing_db, max(tol, 1e-12))
    elif name == "cv-noise":
        checks, notes = noise_checks()
        report.notes += notes
        report.checks += checks


def cmd_compile(args: argparse.Namespace, report: RunReport) -> None:
    circuit = circuit_from_json(_load_json(args.circuit))
    try:
        _, pat = compiler.compile_circuit(circuit)
    except compiler.CompileError as exc:
        raise InputError(str(exc)) from exc
    text = json.dumps(pattern_to_json(pat), sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    report.notes.append(f"pattern: {len(pat.graph.vertices)} vertices, {len(pat.steps)} steps")
    if pattern_from_json(json.loads(text)) != pat:
        raise RuntimeError("pattern JSON does not round-trip")
    if args.check:
        err = pattern.verify_gadget(pat, compiler.circuit_unitary(circuit), seed=args.seed)
        report.checks.append(below("compile.max_infidelity", err, args.tolerance))


GADGETS = ("rotation", "cnot4", "cnot3", "lc4gate", "qec", "cv-single", "cv-cz", "cv-noise")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oneway", description="Measurement-based quantum computing workbench.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tolerance", type=float, default=1e-9)
    common.add_argument("--format", choices=("json", "binary"), default="json")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-cluster", parents=[common], help="build a cluster state and report stabilizers")
    b.add_argument("graph", nargs="?")
    b.add_argument("--preset", choices=("lc4", *PRESETS))
    b.add_argument("--out")
    b.set_defaults(func=cmd_build_cluster)

    v = sub.add_parser("verify", parents=[common], help="verify a gadget or protocol")
    v.add_argument("gadget", choices=GADGETS)
    v.add_argument("--alpha", default="0")
    v.add_argument("--beta", default="0")
    v.add_argument("--gamma", default="0")
    v.add_argument("--n", type=int, default=5)
    v.add_argument("--theta-a", default="pi/4")
    v.add_argument("--theta-b", default="-pi/4")
    v.add_argument("--g", type=float, default=1.0)
    v.add_argument("--w", type=int, default=0)
    v.add_argument("--squeezing-db", type=float, default=-30.0)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compile", parents=[common], help="compile a circuit to a measurement pattern")
    c.add_argument("circuit")
    c.add_argument("--out")
    c.add_argument("--check", action="store_true")
    c.set_defaults(func=cmd_compile)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    argv = list(sys.argv[1:] if argv is None else argv)
    report = RunReport(" ".join(argv), args.seed)
    start = time.perf_counter()
    try:
        args.func(args, report)
    except (InputError, GraphError, PatternError, GaussianError, qec.CodeError, compiler.CompileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report.wall_time = time.perf_counter() - start
    sys.stdout.write(report.body())
    print(f"wall_time: {report.wall_time:.3f} s", file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
