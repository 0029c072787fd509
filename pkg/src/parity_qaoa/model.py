"""Logical spin problems, parity layouts and their Hamiltonians.

Spin problems are hypergraph Ising instances; parity layouts place one
physical qubit per interaction term on a square grid, with 3- and 4-body
parity checks on 2x2 plaquettes. Bitmask convention throughout: basis state
``z`` has bit ``m`` set when qubit ``m`` is in the down state (sigma_z = -1).
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .errors import (
    LayoutParseError,
    OverlapError,
    ParityViolationError,
    PlaquetteError,
    ResourceLimitError,
)

ENUMERATION_CAP = 24


@dataclass(frozen=True)
class SpinProblem:
    """An N-spin optimization instance: interaction index sets with coefficients."""

    n_spins: int
    terms: tuple[tuple[tuple[int, ...], float], ...]

    def __post_init__(self):
        if self.n_spins < 1:
            raise ValueError("n_spins must be positive")
        if len(self.terms) < 1:
            raise ValueError("a spin problem needs at least one term")
        seen = set()
        for idx, _coeff in self.terms:
            if len(idx) == 0:
                raise ValueError("empty interaction index set")
            if len(set(idx)) != len(idx) or tuple(sorted(idx)) != tuple(idx):
                raise ValueError(f"index set {idx} must be sorted and duplicate-free")
            if idx[0] < 0 or idx[-1] >= self.n_spins:
                raise ValueError(f"index set {idx} out of range for {self.n_spins} spins")
            if idx in seen:
                raise ValueError(f"duplicate interaction {idx}")
            seen.add(idx)


@dataclass(frozen=True)
class Qubit:
    id: int
    label: tuple[int, ...]
    row: int
    col: int


@dataclass(frozen=True)
class Constraint:
    id: int
    qubit_ids: tuple[int, ...]
    kind: str  # "three" | "four"


@dataclass(frozen=True)
class ParityLayout:
    """Grid-placed parity qubits plus plaquette constraints.

    Validates all structural invariants on construction: unique positions,
    constraints confined to a 2x2 plaquette, and the even-appearance rule
    (every spin index occurs an even number of times among a constraint's
    labels).
    """

    qubits: tuple[Qubit, ...]
    constraints: tuple[Constraint, ...]
    coefficients: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        by_id = {}
        positions = {}
        labels = set()
        for q in self.qubits:
            if q.id in by_id:
                raise LayoutParseError(f"duplicate qubit id {q.id}")
            if tuple(sorted(set(q.label))) != q.label or not q.label:
                raise LayoutParseError(f"qubit {q.id} has malformed label {q.label}")
            if (q.row, q.col) in positions:
                raise OverlapError(
                    f"qubits {positions[(q.row, q.col)]} and {q.id} share cell {(q.row, q.col)}"
                )
            if q.label in labels:
                raise LayoutParseError(f"duplicate label {q.label} (qubit {q.id})")
            by_id[q.id] = q
            positions[(q.row, q.col)] = q.id
            labels.add(q.label)
        seen_cids = set()
        for c in self.constraints:
            if c.id in seen_cids:
                raise LayoutParseError(f"duplicate constraint id {c.id}")
            seen_cids.add(c.id)
            if c.kind not in ("three", "four") or len(c.qubit_ids) != (3 if c.kind == "three" else 4):
                raise LayoutParseError(f"constraint {c.id}: kind/arity mismatch")
            if len(set(c.qubit_ids)) != len(c.qubit_ids):
                raise LayoutParseError(f"constraint {c.id} repeats a qubit")
            members = []
            for qid in c.qubit_ids:
                if qid not in by_id:
                    raise LayoutParseError(f"constraint {c.id} references unknown qubit {qid}")
                members.append(by_id[qid])
            rows = [q.row for q in members]
            cols = [q.col for q in members]
            if max(rows) - min(rows) > 1 or max(cols) - min(cols) > 1:
                raise PlaquetteError(f"constraint {c.id} does not fit one 2x2 plaquette")
            counts = Counter()
            for q in members:
                counts.update(q.label)
            odd = sorted(s for s, n in counts.items() if n % 2)
            if odd:
                raise ParityViolationError(
                    f"constraint {c.id}: spin indices {odd} appear an odd number of times"
                )
        for qid in self.coefficients:
            if qid not in by_id:
                raise LayoutParseError(f"coefficient for unknown qubit {qid}")

    @property
    def qubit_count(self) -> int:
        return len(self.qubits)

    def qubit_by_id(self, qid: int) -> Qubit:
        return self._by_id[qid]

    @property
    def _by_id(self) -> dict[int, Qubit]:
        return {q.id: q for q in self.qubits}

    def positions(self) -> dict[int, tuple[int, int]]:
        return {q.id: (q.row, q.col) for q in self.qubits}

    def constraint_by_id(self, cid: int) -> Constraint:
        for c in self.constraints:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def constraint_mask(self, cid: int) -> int:
        return gf2.mask(self.constraint_by_id(cid).qubit_ids)

    def coefficient(self, qid: int) -> float:
        return self.coefficients.get(qid, 0.0)

    def with_coefficients(self, coefficients: dict[int, float]) -> "ParityLayout":
        return ParityLayout(self.qubits, self.constraints, dict(coefficients))

    def spin_count(self) -> int:
        return 1 + max(s for q in self.qubits for s in q.label)


@dataclass(frozen=True)
class HamiltonianSpec:
    """The diagonal physical Hamiltonian: local fields plus plaquette penalties."""

    qubit_count: int
    z_terms: dict[int, float]
    constraint_terms: tuple[tuple[tuple[int, ...], float], ...]
    symmetry_count: int

    def __post_init__(self):
        for qid in self.z_terms:
            if not 0 <= qid < self.qubit_count:
                raise ValueError(f"z-term on unknown qubit {qid}")
        for ids, strength in self.constraint_terms:
            if strength <= 0:
                raise ValueError("constraint strength must be positive")
            for qid in ids:
                if not 0 <= qid < self.qubit_count:
                    raise ValueError(f"constraint on unknown qubit {qid}")


def generate_complete_layout(n_spins: int) -> ParityLayout:
    """Standard triangular layout for the all-to-all pair-coupled problem.

    Qubit (i, j) sits at grid cell (row=i, col=j); interior plaquettes carry
    4-body checks and the staircase plaquettes along the diagonal carry the
    N-2 3-body checks. Ids are assigned in row-major grid order.
    """
    if n_spins < 2:
        raise ValueError("complete layout needs at least 2 spins")
    qubits = []
    index = {}
    for i in range(n_spins - 1):
        for j in range(i + 1, n_spins):
            index[(i, j)] = len(qubits)
            qubits.append(Qubit(len(qubits), (i, j), row=i, col=j))
    constraints = []
    for i in range(n_spins - 1):
        if i + 2 < n_spins:
            members = (index[(i, i + 1)], index[(i, i + 2)], index[(i + 1, i + 2)])
            constraints.append(Constraint(len(constraints), members, "three"))
        for j in range(i + 2, n_spins - 1):
            members = (
                index[(i, j)],
                index[(i, j + 1)],
                index[(i + 1, j)],
                index[(i + 1, j + 1)],
            )
            constraints.append(Constraint(len(constraints), members, "four"))
    coefficients = {q.id: 0.0 for q in qubits}
    return ParityLayout(tuple(qubits), tuple(constraints), coefficients)


def save_layout(layout: ParityLayout) -> str:
    doc = {
        "qubits": [
            {
                "id": q.id,
                "label": list(q.label),
                "row": q.row,
                "col": q.col,
                "coefficient": layout.coefficient(q.id),
            }
            for q in sorted(layout.qubits, key=lambda q: q.id)
        ],
        "constraints": [
            {"id": c.id, "qubits": list(c.qubit_ids), "kind": c.kind}
            for c in sorted(layout.constraints, key=lambda c: c.id)
        ],
    }
    return json.dumps(doc, indent=2)


def load_layout(text: str) -> ParityLayout:
    """Parse and fully validate a layout document (see ``save_layout`` format)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LayoutParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "qubits" not in doc or "constraints" not in doc:
        raise LayoutParseError("document must be an object with 'qubits' and 'constraints'")
    qubits = []
    coefficients = {}
    try:
        for entry in doc["qubits"]:
            qubits.append(
                Qubit(
                    int(entry["id"]),
                    tuple(int(s) for s in entry["label"]),
                    int(entry["row"]),
                    int(entry["col"]),
                )
            )
            coefficients[int(entry["id"])] = float(entry.get("coefficient", 0.0))
        constraints = [
            Constraint(int(e["id"]), tuple(int(q) for q in e["qubits"]), str(e["kind"]))
            for e in doc["constraints"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise LayoutParseError(f"malformed entry: {exc}") from exc
    return ParityLayout(tuple(qubits), tuple(constraints), coefficients)


def layout_spin_problem(layout: ParityLayout) -> SpinProblem:
    """Reconstruct the logical instance whose terms are the layout's labels."""
    terms = tuple(
        (q.label, layout.coefficient(q.id))
        for q in sorted(layout.qubits, key=lambda q: q.id)
    )
    return SpinProblem(layout.spin_count(), terms)


def count_symmetries(problem: SpinProblem) -> int:
    """Number of independent spin-flip sets leaving every term invariant.

    A flip set is invariant iff it meets every interaction index set evenly,
    so the count is n_spins minus the GF(2) rank of the term-incidence matrix.
    """
    rows = [gf2.mask(idx) for idx, _ in problem.terms]
    return problem.n_spins - gf2.rank(rows)


def build_hamiltonians(layout: ParityLayout, constraint_strength: float) -> HamiltonianSpec:
    """Assemble local fields and uniform-strength plaquette penalties."""
    if constraint_strength <= 0:
        raise ValueError("constraint_strength must be > 0")
    z_terms = {q.id: layout.coefficient(q.id) for q in layout.qubits}
    constraint_terms = tuple(
        (c.qubit_ids, float(constraint_strength))
        for c in sorted(layout.constraints, key=lambda c: c.id)
    )
    n_s = count_symmetries(layout_spin_problem(layout))
    return HamiltonianSpec(layout.qubit_count, z_terms, constraint_terms, n_s)


def enumerate_codespace(
    layout: ParityLayout,
    implicit_constraints: set[int] | frozenset[int],
    cap: int = ENUMERATION_CAP,
) -> np.ndarray:
    """All basis states with even down-qubit parity on every listed constraint.

    Returns a sorted int64 array of state indices. The codespace is the GF(2)
    kernel of the constraint-support matrix, so it is enumerated as the span
    of a kernel basis rather than by scanning all 2^K bitstrings.
    """
    k = layout.qubit_count
    if k > cap:
        raise ResourceLimitError(f"enumeration needs K <= {cap}, got {k}")
    masks = [layout.constraint_mask(cid) for cid in sorted(implicit_constraints)]
    basis = gf2.kernel_basis(masks, k)
    states = np.zeros(1, dtype=np.int64)
    for vec in basis:
        states = np.concatenate([states, states ^ np.int64(vec)])
    states.sort()
    return states
