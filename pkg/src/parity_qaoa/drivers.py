"""Synthesis and validation of constraint-preserving driver lines.

A driver line is a set of qubits that can be flipped together without
changing the population of any implicitly preserved constraint, i.e. a
GF(2) kernel vector of the implicit-constraint incidence matrix shaped into
a connected path or tree on the grid. Two qubits count as adjacent when
their cells are at Chebyshev distance 1; plaquette diagonals are couplable,
so this is the connectivity the hardware exposes.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, replace

from . import gf2
from .errors import PriorityError, SynthesisError
from .model import ParityLayout
from .partition import ConstraintPartition, ModuleRect

SHAPE_HORIZONTAL = "straight-horizontal"
SHAPE_VERTICAL = "straight-vertical"
SHAPE_TREE = "tree"


@dataclass(frozen=True)
class DriverLine:
    qubits: tuple[int, ...]
    shape: str
    edges: tuple[tuple[int, int], ...]  # spanning tree of grid-adjacent members

    def __post_init__(self):
        if not self.qubits:
            raise ValueError("driver line cannot be empty")
        if tuple(sorted(set(self.qubits))) != self.qubits:
            raise ValueError("qubits must be sorted and duplicate-free")
        if len(self.edges) != len(self.qubits) - 1:
            raise ValueError("edges must form a spanning tree")
        members = set(self.qubits)
        reached = {self.qubits[0]}
        pending = list(self.edges)
        progress = True
        while pending and progress:
            progress = False
            rest = []
            for a, b in pending:
                if a not in members or b not in members:
                    raise ValueError("edge endpoint outside the line")
                if a in reached or b in reached:
                    reached.update((a, b))
                    progress = True
                else:
                    rest.append((a, b))
            pending = rest
        if reached != members:
            raise ValueError("edges do not connect the line")

    @property
    def length(self) -> int:
        return len(self.qubits)

    @property
    def mask(self) -> int:
        return gf2.mask(self.qubits)


@dataclass(frozen=True)
class DriverSet:
    lines: tuple[DriverLine, ...]
    qubit_count: int
    priorities: tuple[int, ...] | None = None
    anchors: tuple[int, ...] | None = None


@dataclass(frozen=True)
class ValidityReport:
    even_overlap_failures: tuple[tuple[int, int], ...]  # (line index, constraint id)
    independent: bool
    cardinality: int
    expected_cardinality: int
    reachable: bool

    @property
    def cardinality_ok(self) -> bool:
        return self.cardinality == self.expected_cardinality

    @property
    def passed(self) -> bool:
        return (
            not self.even_overlap_failures
            and self.independent
            and self.cardinality_ok
            and self.reachable
        )


def _adjacent(p: tuple[int, int], q: tuple[int, int]) -> bool:
    return max(abs(p[0] - q[0]), abs(p[1] - q[1])) == 1


def _adjacency(qubits: tuple[int, ...], positions: dict[int, tuple[int, int]]) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {q: [] for q in qubits}
    for i, a in enumerate(qubits):
        for b in qubits[i + 1 :]:
            if _adjacent(positions[a], positions[b]):
                adj[a].append(b)
                adj[b].append(a)
    for lst in adj.values():
        lst.sort()
    return adj


def _connected_components(qubits: tuple[int, ...], positions: dict[int, tuple[int, int]]) -> list[set[int]]:
    adj = _adjacency(qubits, positions)
    remaining = set(qubits)
    comps = []
    while remaining:
        start = min(remaining)
        comp = {start}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for nxt in adj[cur]:
                if nxt in remaining and nxt not in comp:
                    comp.add(nxt)
                    queue.append(nxt)
        comps.append(comp)
        remaining -= comp
    return comps


def classify_shape(qubits: tuple[int, ...], positions: dict[int, tuple[int, int]]) -> str:
    rows = {positions[q][0] for q in qubits}
    cols = {positions[q][1] for q in qubits}
    if len(rows) == 1:
        return SHAPE_HORIZONTAL
    if len(cols) == 1:
        return SHAPE_VERTICAL
    return SHAPE_TREE


def line_from_qubits(layout: ParityLayout, qubit_ids) -> DriverLine:
    """Build a DriverLine from member ids, spanning tree rooted at the lowest id."""
    qubits = tuple(sorted(set(int(q) for q in qubit_ids)))
    positions = layout.positions()
    adj = _adjacency(qubits, positions)
    root = qubits[0]
    seen = {root}
    edges = []
    queue = deque([root])
    while queue:
        cur = queue.popleft()
        for nxt in adj[cur]:
            if nxt not in seen:
                seen.add(nxt)
                edges.append((cur, nxt))
                queue.append(nxt)
    if seen != set(qubits):
        raise ValueError(f"qubits {qubits} are not grid-connected")
    return DriverLine(qubits, classify_shape(qubits, positions), tuple(edges))


def _runs_in_regions(
    layout: ParityLayout, regions: tuple[ModuleRect, ...], horizontal: bool
) -> list[tuple[int, ...]]:
    """Maximal contiguous straight segments inside each module region."""
    cell_to_id = {(q.row, q.col): q.id for q in layout.qubits}
    runs = []
    for rect in regions:
        outer = range(rect.row0, rect.row1 + 1) if horizontal else range(rect.col0, rect.col1 + 1)
        inner = range(rect.col0, rect.col1 + 1) if horizontal else range(rect.row0, rect.row1 + 1)
        for o in outer:
            current: list[int] = []
            for i in inner:
                cell = (o, i) if horizontal else (i, o)
                qid = cell_to_id.get(cell)
                if qid is None:
                    if current:
                        runs.append(tuple(sorted(current)))
                    current = []
                else:
                    current.append(qid)
            if current:
                runs.append(tuple(sorted(current)))
    return runs


def _hook_sets(layout: ParityLayout) -> list[tuple[int, tuple[int, ...]]]:
    """Per problem spin, the set of qubits whose label contains that spin."""
    hooks = []
    for spin in range(layout.spin_count()):
        members = tuple(sorted(q.id for q in layout.qubits if spin in q.label))
        if members:
            hooks.append((spin, members))
    return hooks


def synthesize_driver_set(layout: ParityLayout, partition: ConstraintPartition) -> DriverSet:
    """Assemble a valid driver set for the partition.

    Straight horizontal then vertical segments (clipped to modules when the
    partition is modularized) are accepted first; the basis is completed with
    per-spin hook sets and, as a last resort, generic kernel vectors reshaped
    by symmetric differences with already-accepted lines.
    """
    k = layout.qubit_count
    positions = layout.positions()
    implicit_masks = [layout.constraint_mask(cid) for cid in sorted(partition.implicit_ids)]

    if not partition.implicit_ids:
        lines = tuple(
            DriverLine((q.id,), SHAPE_HORIZONTAL, ()) for q in sorted(layout.qubits, key=lambda q: q.id)
        )
        return DriverSet(lines, k)

    target = k - gf2.rank(implicit_masks)
    span = gf2.Eliminator()
    accepted: list[DriverLine] = []

    def even_everywhere(mask: int) -> bool:
        return not any(gf2.odd_overlap(mask, m) for m in implicit_masks)

    def try_accept(qubits: tuple[int, ...]) -> bool:
        mask = gf2.mask(qubits)
        if not even_everywhere(mask):
            return False
        if not span.add(mask):
            return False
        accepted.append(line_from_qubits(layout, qubits))
        return True

    if partition.module_bounds is not None:
        regions = partition.module_bounds
    else:
        rows = [q.row for q in layout.qubits]
        cols = [q.col for q in layout.qubits]
        regions = (ModuleRect(min(rows), min(cols), max(rows), max(cols)),)

    for run in _runs_in_regions(layout, regions, horizontal=True):
        if len(accepted) == target:
            break
        try_accept(run)
    for run in _runs_in_regions(layout, regions, horizontal=False):
        if len(accepted) == target:
            break
        try_accept(run)

    hook_masks: list[int] = []
    if len(accepted) < target:
        for _spin, members in _hook_sets(layout):
            hook_masks.append(gf2.mask(members))
            if len(accepted) == target:
                continue
            if len(_connected_components(members, positions)) == 1:
                try_accept(members)

    if len(accepted) < target:
        accepted_masks = [line.mask for line in accepted]
        for vec in gf2.kernel_basis(implicit_masks, k):
            if len(accepted) == target:
                break
            residual = span.reduce(vec)
            if residual == 0:
                continue
            shaped = _shape_vector(residual, accepted_masks + hook_masks, positions)
            if shaped is None or not span.add(shaped):
                raise SynthesisError(
                    f"kernel element {tuple(gf2.bits_of(residual))} cannot be shaped "
                    "into a connected line; enforce more constraints explicitly",
                    tuple(gf2.bits_of(residual)),
                )
            accepted.append(line_from_qubits(layout, gf2.bits_of(shaped)))
            accepted_masks.append(shaped)

    if len(accepted) != target:
        raise SynthesisError(
            f"synthesized {len(accepted)} lines, expected {target}"
        )
    return DriverSet(tuple(accepted), k)


def _shape_vector(vec: int, helper_masks: list[int], positions) -> int | None:
    """Try to connect ``vec`` by XOR-ing helper masks; at most two rounds."""

    def n_components(v: int) -> int:
        return len(_connected_components(tuple(gf2.bits_of(v)), positions))

    current = vec
    for _round in range(2):
        if n_components(current) == 1:
            return current
        best = current
        for h in helper_masks:
            trial = current ^ h
            if trial and n_components(trial) < n_components(best):
                best = trial
                break
        if best == current:
            break
        current = best
    return current if n_components(current) == 1 else None


def validate_driver_set(
    driver_set: DriverSet, layout: ParityLayout, partition: ConstraintPartition
) -> ValidityReport:
    """Even overlaps, GF(2) independence, cardinality and reachability checks."""
    implicit_masks = {
        cid: layout.constraint_mask(cid) for cid in sorted(partition.implicit_ids)
    }
    failures = []
    for i, line in enumerate(driver_set.lines):
        for cid, mask in implicit_masks.items():
            if gf2.odd_overlap(line.mask, mask):
                failures.append((i, cid))
    line_masks = [line.mask for line in driver_set.lines]
    independent = gf2.rank(line_masks) == len(line_masks)
    expected = layout.qubit_count - gf2.rank(list(implicit_masks.values()))
    all_masks = [layout.constraint_mask(c.id) for c in layout.constraints]
    full_kernel = gf2.kernel_basis(all_masks, layout.qubit_count)
    elim = gf2.Eliminator()
    for m in line_masks:
        elim.add(m)
    reachable = all(elim.contains(vec) for vec in full_kernel)
    return ValidityReport(
        tuple(failures), independent, len(driver_set.lines), expected, reachable
    )


def assign_priorities(driver_set: DriverSet) -> DriverSet:
    """Iterative priority assignment for initial-state preparation.

    Lines owning a qubit private to them get priority 0; an unassigned line
    gets priority P+1 when it overlaps assigned lines (max priority P) at a
    qubit shared with no other unassigned line. Rotations are later applied
    in descending priority, so every anchor sees only lower-priority company.
    """
    lines = driver_set.lines
    n = len(lines)
    membership: dict[int, set[int]] = {}
    for i, line in enumerate(lines):
        for q in line.qubits:
            membership.setdefault(q, set()).add(i)
    priorities: list[int | None] = [None] * n
    anchors: list[int | None] = [None] * n

    for i, line in enumerate(lines):
        private = [q for q in line.qubits if membership[q] == {i}]
        if private:
            priorities[i] = 0
            anchors[i] = min(private)

    while any(p is None for p in priorities):
        snapshot = {i for i, p in enumerate(priorities) if p is not None}
        assigned_this_round = []
        for i, line in enumerate(lines):
            if priorities[i] is not None:
                continue
            best: tuple[int, int] | None = None
            for q in line.qubits:
                others = membership[q] - {i}
                if others and others <= snapshot:
                    value = 1 + max(priorities[j] for j in others)  # type: ignore[type-var]
                    if best is None or (value, q) < best:
                        best = (value, q)
            if best is not None:
                assigned_this_round.append((i, best))
        if not assigned_this_round:
            stuck = [i for i, p in enumerate(priorities) if p is None]
            raise PriorityError(
                f"lines {stuck} cannot be prioritized; enforce more constraints explicitly"
            )
        for i, (value, anchor) in assigned_this_round:
            priorities[i] = value
            anchors[i] = anchor

    return replace(
        driver_set,
        priorities=tuple(priorities),  # type: ignore[arg-type]
        anchors=tuple(anchors),  # type: ignore[arg-type]
    )


def serialize_driver_set(driver_set: DriverSet) -> str:
    if driver_set.priorities is None or driver_set.anchors is None:
        raise ValueError("assign priorities before serializing")
    doc = [
        {"qubits": list(line.qubits), "priority": p, "anchor": a}
        for line, p, a in zip(driver_set.lines, driver_set.priorities, driver_set.anchors)
    ]
    return json.dumps(doc, indent=2)


def parse_driver_set(text: str, layout: ParityLayout) -> DriverSet:
    doc = json.loads(text)
    lines = tuple(line_from_qubits(layout, entry["qubits"]) for entry in doc)
    return DriverSet(
        lines,
        layout.qubit_count,
        tuple(int(entry["priority"]) for entry in doc),
        tuple(int(entry["anchor"]) for entry in doc),
    )
