"""Gate-level circuit emission and greedy depth scheduling.

All exponentials are decomposed into CNOT ladders plus single-qubit
rotations. Driver-term circuits fold the X-parity of a line onto a rotation
qubit at the tree center, which keeps the scheduled depth of an n-qubit path
within n + 2 layers.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .drivers import DriverLine, DriverSet, SHAPE_HORIZONTAL, SHAPE_VERTICAL
from .model import HamiltonianSpec, ParityLayout, build_hamiltonians
from .partition import ConstraintPartition

CNOT = "CNOT"
RX = "RX"
RZ = "RZ"
H = "H"


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind == CNOT:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError("CNOT needs two distinct qubits")
            if self.angle is not None:
                raise ValueError("CNOT takes no angle")
        elif self.kind in (RX, RZ):
            if len(self.qubits) != 1 or self.angle is None:
                raise ValueError(f"{self.kind} needs one qubit and an angle")
        elif self.kind == H:
            if len(self.qubits) != 1 or self.angle is not None:
                raise ValueError("H needs one qubit and no angle")
        else:
            raise ValueError(f"unknown gate kind {self.kind}")


@dataclass(frozen=True)
class Circuit:
    gates: tuple[Gate, ...]
    qubit_count: int

    def __post_init__(self):
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.qubit_count:
                    raise ValueError(f"gate {g} outside {self.qubit_count} qubits")

    def __add__(self, other: "Circuit") -> "Circuit":
        return Circuit(self.gates + other.gates, max(self.qubit_count, other.qubit_count))

    def gate_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for g in self.gates:
            counts[g.kind] = counts.get(g.kind, 0) + 1
        return counts


def schedule(circuit: Circuit) -> int:
    """Greedy as-soon-as-possible layering; every gate costs one layer."""
    busy: dict[int, int] = {}
    depth = 0
    for g in circuit.gates:
        layer = 1 + max((busy.get(q, 0) for q in g.qubits), default=0)
        for q in g.qubits:
            busy[q] = layer
        depth = max(depth, layer)
    return depth


def _tree_adjacency(line: DriverLine) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {q: [] for q in line.qubits}
    for a, b in line.edges:
        adj[a].append(b)
        adj[b].append(a)
    for lst in adj.values():
        lst.sort()
    return adj


def _bfs_depths(adj: dict[int, list[int]], root: int) -> dict[int, int]:
    depths = {root: 0}
    queue = deque([root])
    while queue:
        cur = queue.popleft()
        for nxt in adj[cur]:
            if nxt not in depths:
                depths[nxt] = depths[cur] + 1
                queue.append(nxt)
    return depths


def tree_center(line: DriverLine) -> int:
    """Member qubit minimizing tree eccentricity; ties go to the lowest id."""
    adj = _tree_adjacency(line)
    best: tuple[int, int] | None = None
    for q in line.qubits:
        ecc = max(_bfs_depths(adj, q).values())
        if best is None or (ecc, q) < best:
            best = (ecc, q)
    return best[1]  # type: ignore[index]


def driver_term_circuit(
    line: DriverLine,
    beta: float,
    qubit_count: int | None = None,
    rotation_qubit: int | None = None,
) -> Circuit:
    """Circuit for exp(-i beta X...X) over the line, exact up to nothing.

    CNOT ladder folds the X parity onto the rotation qubit (tree center by
    default), RX(2 beta) rotates it, and the mirrored ladder unfolds.
    """
    k = qubit_count if qubit_count is not None else max(line.qubits) + 1
    if rotation_qubit is None:
        rotation_qubit = tree_center(line)
    if rotation_qubit not in line.qubits:
        raise ValueError("rotation qubit must belong to the line")
    if line.length == 1:
        return Circuit((Gate(RX, (line.qubits[0],), 2.0 * beta),), k)
    adj = _tree_adjacency(line)
    depths = _bfs_depths(adj, rotation_qubit)
    parent: dict[int, int] = {}
    for q in line.qubits:
        if q == rotation_qubit:
            continue
        parent[q] = min(n for n in adj[q] if depths[n] == depths[q] - 1)
    order = sorted(parent, key=lambda q: (-depths[q], q))
    fold = tuple(Gate(CNOT, (parent[q], q)) for q in order)
    rotation = (Gate(RX, (rotation_qubit,), 2.0 * beta),)
    return Circuit(fold + rotation + tuple(reversed(fold)), k)


def phase_separator_circuit(spec: HamiltonianSpec, gamma: float) -> Circuit:
    """One RZ(2 gamma J_m) per qubit; depth 1."""
    gates = tuple(
        Gate(RZ, (q,), 2.0 * gamma * spec.z_terms.get(q, 0.0))
        for q in range(spec.qubit_count)
    )
    return Circuit(gates, spec.qubit_count)


def constraint_circuit(
    qubit_ids: Iterable[int],
    strength: float,
    omega: float,
    qubit_count: int | None = None,
) -> Circuit:
    """Circuit for exp(-i omega C) with C = (c/2)(1 - Z...Z), up to global phase."""
    ids = tuple(sorted(qubit_ids))
    if len(ids) not in (3, 4):
        raise ValueError("constraints act on 3 or 4 qubits")
    k = qubit_count if qubit_count is not None else max(ids) + 1
    ladder = tuple(Gate(CNOT, (ids[i], ids[i + 1])) for i in range(len(ids) - 1))
    rotation = (Gate(RZ, (ids[-1],), -strength * omega),)
    return Circuit(ladder + rotation + tuple(reversed(ladder)), k)


def driver_stage_circuit(driver_set: DriverSet, beta: float) -> Circuit:
    """All driver-term circuits, grouped horizontal / vertical / tree so the
    scheduler can run each orientation group in parallel."""
    groups = (SHAPE_HORIZONTAL, SHAPE_VERTICAL, None)
    gates: tuple[Gate, ...] = ()
    for group in groups:
        for line in driver_set.lines:
            in_group = line.shape == group if group else line.shape not in groups[:2]
            if in_group:
                gates += driver_term_circuit(line, beta, driver_set.qubit_count).gates
    return Circuit(gates, driver_set.qubit_count)


def init_state_circuit(driver_set: DriverSet, partition: ConstraintPartition) -> Circuit:
    """Equal superposition over the partition's codespace from the all-up state.

    Fully explicit partitions take one H per qubit. Otherwise each driver
    line, in descending preparation priority, gets exp(-i pi/4 X-line)
    followed by RZ(pi/2) on its anchor.
    """
    k = driver_set.qubit_count
    if not partition.implicit_ids:
        return Circuit(tuple(Gate(H, (q,)) for q in range(k)), k)
    if driver_set.priorities is None or driver_set.anchors is None:
        raise ValueError("assign priorities before building the preparation circuit")
    order = sorted(
        range(len(driver_set.lines)),
        key=lambda i: (-driver_set.priorities[i], i),  # type: ignore[index]
    )
    gates: tuple[Gate, ...] = ()
    for i in order:
        line = driver_set.lines[i]
        gates += driver_term_circuit(line, math.pi / 4, k).gates
        gates += (Gate(RZ, (driver_set.anchors[i],), math.pi / 2),)
    return Circuit(gates, k)


def qaoa_step_circuit(
    layout: ParityLayout,
    partition: ConstraintPartition,
    driver_set: DriverSet,
    omega: float | None,
    gamma: float,
    beta: float,
    constraint_strength: float = 1.0,
) -> Circuit:
    """One protocol cycle: explicit constraints, phase separator, driver stage."""
    k = layout.qubit_count
    gates: tuple[Gate, ...] = ()
    if partition.explicit_ids:
        if omega is None:
            raise ValueError("explicit constraints present but no omega given")
        for cid in sorted(partition.explicit_ids):
            c = layout.constraint_by_id(cid)
            gates += constraint_circuit(c.qubit_ids, constraint_strength, omega, k).gates
    spec = build_hamiltonians(layout, constraint_strength)
    gates += phase_separator_circuit(spec, gamma).gates
    gates += driver_stage_circuit(driver_set, beta).gates
    return Circuit(gates, k)


def qaoa_circuit(
    mode: str,
    layout: ParityLayout,
    partition: ConstraintPartition,
    driver_set: DriverSet,
    params: list[tuple[float, ...]],
    constraint_strength: float = 1.0,
) -> Circuit:
    """Full protocol circuit: state preparation plus p parameterized cycles.

    ``params`` holds one (gamma, beta) tuple per cycle in implicit mode and
    one (omega, gamma, beta) tuple otherwise.
    """
    if mode not in ("explicit", "implicit", "hybrid"):
        raise ValueError(f"unknown mode {mode}")
    if len(params) < 1:
        raise ValueError("need at least one cycle")
    want = 2 if mode == "implicit" else 3
    if any(len(t) != want for t in params):
        raise ValueError(f"{mode} mode takes {want} parameters per cycle")
    if mode == "implicit" and partition.explicit_ids:
        raise ValueError("implicit mode requires a fully implicit partition")
    if mode == "explicit" and partition.implicit_ids:
        raise ValueError("explicit mode requires a fully explicit partition")
    circuit = init_state_circuit(driver_set, partition)
    for t in params:
        omega, gamma, beta = (None, *t) if mode == "implicit" else t
        circuit = circuit + qaoa_step_circuit(
            layout, partition, driver_set, omega, gamma, beta, constraint_strength
        )
    return circuit


def export_circuit(circuit: Circuit) -> str:
    """Line-based text export: one gate per line, angles to 17 significant digits."""
    lines = []
    for g in circuit.gates:
        if g.kind == CNOT:
            lines.append(f"CNOT {g.qubits[0]} {g.qubits[1]}")
        elif g.kind == H:
            lines.append(f"H {g.qubits[0]}")
        else:
            lines.append(f"{g.kind} {g.qubits[0]} {format(g.angle, '.17g')}")
    return "\n".join(lines) + ("\n" if lines else "")
