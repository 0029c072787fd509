"""Splitting plaquette constraints into explicitly enforced and implicitly
preserved sets: limiting cases, the all-three-body strategy with boundary
connection, grid modularization, and a greedy explicit-count reduction."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

from .errors import BudgetInfeasibleError, PriorityError, SynthesisError
from .model import ParityLayout


@dataclass(frozen=True)
class ModuleRect:
    """Inclusive rectangle of grid cells forming one module."""

    row0: int
    col0: int
    row1: int
    col1: int


@dataclass(frozen=True)
class ConstraintPartition:
    explicit_ids: frozenset[int]
    implicit_ids: frozenset[int]
    module_bounds: tuple[ModuleRect, ...] | None = None
    max_module_size: int | None = None

    def __post_init__(self):
        if self.explicit_ids & self.implicit_ids:
            raise ValueError("explicit and implicit sets overlap")

    @property
    def explicit_count(self) -> int:
        return len(self.explicit_ids)

    @property
    def total_count(self) -> int:
        return len(self.explicit_ids) + len(self.implicit_ids)

    @property
    def explicit_fraction(self) -> float:
        if self.total_count == 0:
            return 0.0
        return self.explicit_count / self.total_count


def validate_partition(layout: ParityLayout, partition: ConstraintPartition) -> None:
    """Check that the partition covers the layout's constraints exactly."""
    all_ids = {c.id for c in layout.constraints}
    if partition.explicit_ids | partition.implicit_ids != all_ids:
        raise ValueError("partition does not cover the constraint set")


def constraint_region(layout: ParityLayout, cid: int) -> tuple[int, int]:
    """Top-left cell (r0, c0) of the 2x2 plaquette holding constraint ``cid``."""
    members = [layout.qubit_by_id(q) for q in layout.constraint_by_id(cid).qubit_ids]
    return min(q.row for q in members), min(q.col for q in members)


def constraint_adjacency(layout: ParityLayout) -> dict[int, list[int]]:
    """Neighbors are constraints whose plaquettes share an edge."""
    regions = {c.id: constraint_region(layout, c.id) for c in layout.constraints}
    by_region: dict[tuple[int, int], int] = {}
    for cid, reg in regions.items():
        by_region[reg] = cid
    adj: dict[int, list[int]] = {cid: [] for cid in regions}
    for cid, (r, c) in regions.items():
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            other = by_region.get((r + dr, c + dc))
            if other is not None:
                adj[cid].append(other)
        adj[cid].sort()
    return adj


def _outer_cells(layout: ParityLayout) -> set[tuple[int, int]]:
    """Unoccupied cells connected to the outside, including a 1-cell margin."""
    occupied = {(q.row, q.col) for q in layout.qubits}
    r0 = min(r for r, _ in occupied) - 1
    r1 = max(r for r, _ in occupied) + 1
    c0 = min(c for _, c in occupied) - 1
    c1 = max(c for _, c in occupied) + 1
    outer: set[tuple[int, int]] = set()
    queue = deque([(r0, c0)])
    outer.add((r0, c0))
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nxt = (r + dr, c + dc)
            if nxt in outer or nxt in occupied:
                continue
            if not (r0 <= nxt[0] <= r1 and c0 <= nxt[1] <= c1):
                continue
            outer.add(nxt)
            queue.append(nxt)
    return outer


def boundary_constraints(layout: ParityLayout) -> set[int]:
    """Constraints whose plaquette touches the outer face of the layout."""
    outer = _outer_cells(layout)
    occupied = {(q.row, q.col) for q in layout.qubits}
    result = set()
    for c in layout.constraints:
        r0, c0 = constraint_region(layout, c.id)
        cells = [(r0, c0), (r0, c0 + 1), (r0 + 1, c0), (r0 + 1, c0 + 1)]
        touches = False
        for cell in cells:
            if cell in outer:
                touches = True
                break
            if cell in occupied:
                r, cc = cell
                if any((r + dr, cc + dc) in outer for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1))):
                    touches = True
                    break
        if touches:
            result.add(c.id)
    return result


def partition_all_explicit(layout: ParityLayout) -> ConstraintPartition:
    return ConstraintPartition(
        frozenset(c.id for c in layout.constraints), frozenset()
    )


def partition_all_implicit(layout: ParityLayout) -> ConstraintPartition:
    return ConstraintPartition(
        frozenset(), frozenset(c.id for c in layout.constraints)
    )


def partition_three_body_explicit(layout: ParityLayout) -> ConstraintPartition:
    """Enforce all 3-body constraints, plus the 4-body chains that connect
    isolated groups of them to the layout boundary."""
    explicit = {c.id for c in layout.constraints if c.kind == "three"}
    adj = constraint_adjacency(layout)
    boundary = boundary_constraints(layout)

    def components(ids: set[int]) -> list[set[int]]:
        remaining = set(ids)
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

    while True:
        comps = components(explicit)
        grounded = [comp for comp in comps if comp & boundary]
        grounded_ids = set().union(*grounded) if grounded else set()
        ungrounded = [comp for comp in comps if not comp & boundary]
        if not ungrounded:
            break
        comp = min(ungrounded, key=min)
        # multi-source BFS over the plaquette adjacency graph; first target
        # reached is a shortest chain, ties broken by visit order (lowest id)
        parents: dict[int, int | None] = {cid: None for cid in sorted(comp)}
        queue = deque(sorted(comp))
        found = None
        while queue:
            cur = queue.popleft()
            if cur not in comp and (cur in boundary or cur in grounded_ids):
                found = cur
                break
            for nxt in adj[cur]:
                if nxt not in parents:
                    parents[nxt] = cur
                    queue.append(nxt)
        if found is None:
            raise SynthesisError(
                "no chain of constraints connects an isolated group to the boundary"
            )
        node: int | None = found
        while node is not None and node not in comp:
            explicit.add(node)
            node = parents[node]
    implicit = {c.id for c in layout.constraints} - explicit
    return ConstraintPartition(frozenset(explicit), frozenset(implicit))


def modularize(
    layout: ParityLayout, max_module_size: int, base: ConstraintPartition
) -> ConstraintPartition:
    """Add to ``base`` every constraint crossing a module cut line.

    Cut lines run between bands of ``max_module_size`` grid rows/columns,
    measured from the minimum occupied row and column, so each module holds
    at most ``max_module_size`` x ``max_module_size`` qubits.
    """
    if max_module_size < 2:
        raise ValueError("max_module_size must be >= 2")
    validate_partition(layout, base)
    min_row = min(q.row for q in layout.qubits)
    min_col = min(q.col for q in layout.qubits)

    def row_band(r: int) -> int:
        return (r - min_row) // max_module_size

    def col_band(c: int) -> int:
        return (c - min_col) // max_module_size

    explicit = set(base.explicit_ids)
    for c in layout.constraints:
        r0, c0 = constraint_region(layout, c.id)
        if row_band(r0) != row_band(r0 + 1) or col_band(c0) != col_band(c0 + 1):
            explicit.add(c.id)
    implicit = {c.id for c in layout.constraints} - explicit

    bands: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for q in layout.qubits:
        bands.setdefault((row_band(q.row), col_band(q.col)), []).append((q.row, q.col))
    bounds = tuple(
        ModuleRect(
            min(r for r, _ in cells),
            min(c for _, c in cells),
            max(r for r, _ in cells),
            max(c for _, c in cells),
        )
        for _key, cells in sorted(bands.items())
    )
    return ConstraintPartition(frozenset(explicit), frozenset(implicit), bounds, max_module_size)


def reduce_explicit(
    layout: ParityLayout, partition: ConstraintPartition, depth_budget: int
) -> ConstraintPartition:
    """Greedily move explicit 3-body constraints to the implicit set while
    driver synthesis still succeeds, the set stays valid and preparable, and
    the scheduled driver-stage depth stays within ``depth_budget``.

    Scan order is ascending constraint id; stops at a local minimum.
    """
    from .circuits import driver_stage_circuit, schedule
    from .drivers import assign_priorities, synthesize_driver_set, validate_driver_set

    def stage_depth(part: ConstraintPartition) -> int:
        ds = synthesize_driver_set(layout, part)
        report = validate_driver_set(ds, layout, part)
        if not report.passed:
            raise SynthesisError("driver set failed validation")
        assign_priorities(ds)
        return schedule(driver_stage_circuit(ds, 0.5))

    current_depth = stage_depth(partition)
    if depth_budget < current_depth:
        raise BudgetInfeasibleError(
            f"budget {depth_budget} below current driver depth {current_depth}"
        )

    three_body = {c.id for c in layout.constraints if c.kind == "three"}
    result = partition
    moved = True
    while moved:
        moved = False
        for cid in sorted(result.explicit_ids & three_body):
            if result.module_bounds is not None and not _inside_one_module(layout, result, cid):
                continue
            trial = ConstraintPartition(
                result.explicit_ids - {cid},
                result.implicit_ids | {cid},
                result.module_bounds,
                result.max_module_size,
            )
            try:
                depth = stage_depth(trial)
            except (SynthesisError, PriorityError):
                continue
            if depth <= depth_budget:
                result = trial
                moved = True
    return result


def _inside_one_module(layout: ParityLayout, partition: ConstraintPartition, cid: int) -> bool:
    r0, c0 = constraint_region(layout, cid)
    cells = {(r0, c0), (r0, c0 + 1), (r0 + 1, c0), (r0 + 1, c0 + 1)}
    occupied = {(q.row, q.col) for q in layout.qubits}
    cells &= occupied
    for rect in partition.module_bounds or ():
        if all(rect.row0 <= r <= rect.row1 and rect.col0 <= c <= rect.col1 for r, c in cells):
            return True
    return False


def serialize_partition(partition: ConstraintPartition) -> str:
    doc = {
        "explicit": sorted(partition.explicit_ids),
        "implicit": sorted(partition.implicit_ids),
        "l_max": partition.max_module_size,
        "modules": [
            {"row0": m.row0, "col0": m.col0, "row1": m.row1, "col1": m.col1}
            for m in (partition.module_bounds or ())
        ],
    }
    return json.dumps(doc, indent=2)


def parse_partition(text: str) -> ConstraintPartition:
    doc = json.loads(text)
    modules = tuple(
        ModuleRect(m["row0"], m["col0"], m["row1"], m["col1"]) for m in doc.get("modules", [])
    )
    return ConstraintPartition(
        frozenset(doc["explicit"]),
        frozenset(doc["implicit"]),
        modules or None,
        doc.get("l_max"),
    )
