"""Dense state-vector execution with optional Pauli-trajectory gate noise.

Basis convention: amplitude index ``z`` has bit ``m`` set when qubit ``m``
is down (sigma_z eigenvalue -1); the all-up product state is index 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import CNOT, Circuit, H, RX, RZ, Gate
from .errors import ResourceLimitError
from .model import HamiltonianSpec

MAX_SIM_QUBITS = 26
_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_GROUND_TOL = 1e-12


@dataclass
class StateVector:
    amplitudes: np.ndarray
    qubit_count: int

    @classmethod
    def all_up(cls, qubit_count: int) -> "StateVector":
        if qubit_count > MAX_SIM_QUBITS:
            raise ResourceLimitError(f"dense simulation capped at {MAX_SIM_QUBITS} qubits")
        amps = np.zeros(1 << qubit_count, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps, qubit_count)

    @classmethod
    def from_amplitudes(cls, amplitudes, qubit_count: int) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != 1 << qubit_count:
            raise ValueError("amplitude count does not match qubit count")
        return cls(amps.copy(), qubit_count)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.qubit_count)


def _views(psi: np.ndarray, qubit: int):
    view = psi.reshape(-1, 2, 1 << qubit)
    return view[:, 0, :], view[:, 1, :]


def _apply_single(psi: np.ndarray, qubit: int, u00, u01, u10, u11) -> None:
    a0, a1 = _views(psi, qubit)
    n0 = u00 * a0 + u01 * a1
    n1 = u10 * a0 + u11 * a1
    a0[:] = n0
    a1[:] = n1


def _apply_cnot(psi: np.ndarray, control: int, target: int) -> None:
    hi, lo = max(control, target), min(control, target)
    view = psi.reshape(-1, 2, 1 << (hi - lo - 1), 2, 1 << lo)
    if control == hi:
        sub = view[:, 1, :, :, :]
        tmp = sub[:, :, 0, :].copy()
        sub[:, :, 0, :] = sub[:, :, 1, :]
        sub[:, :, 1, :] = tmp
    else:
        sub = view[:, :, :, 1, :]
        tmp = sub[:, 0, :, :].copy()
        sub[:, 0, :, :] = sub[:, 1, :, :]
        sub[:, 1, :, :] = tmp


def apply_gate(psi: np.ndarray, gate: Gate) -> None:
    """In-place application of one gate to a dense amplitude array."""
    if gate.kind == CNOT:
        _apply_cnot(psi, gate.qubits[0], gate.qubits[1])
    elif gate.kind == RZ:
        a0, a1 = _views(psi, gate.qubits[0])
        half = gate.angle / 2.0
        a0 *= np.exp(-1j * half)
        a1 *= np.exp(1j * half)
    elif gate.kind == RX:
        half = gate.angle / 2.0
        c, s = np.cos(half), np.sin(half)
        _apply_single(psi, gate.qubits[0], c, -1j * s, -1j * s, c)
    elif gate.kind == H:
        _apply_single(psi, gate.qubits[0], _INV_SQRT2, _INV_SQRT2, _INV_SQRT2, -_INV_SQRT2)
    else:  # pragma: no cover - Gate constructor rejects unknown kinds
        raise ValueError(f"unknown gate {gate.kind}")


def apply_pauli(psi: np.ndarray, qubit: int, which: int) -> None:
    """Apply X (0), Y (1) or Z (2) on one qubit, in place."""
    if which == 0:
        a0, a1 = _views(psi, qubit)
        tmp = a0.copy()
        a0[:] = a1
        a1[:] = tmp
    elif which == 1:
        _apply_single(psi, qubit, 0.0, -1j, 1j, 0.0)
    else:
        _, a1 = _views(psi, qubit)
        a1 *= -1.0


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    """Exact unitary application, gate by gate; returns a new state."""
    if circuit.qubit_count != state.qubit_count:
        raise ValueError("circuit and state sizes differ")
    if state.qubit_count > MAX_SIM_QUBITS:
        raise ResourceLimitError(f"dense simulation capped at {MAX_SIM_QUBITS} qubits")
    psi = state.amplitudes.copy()
    for gate in circuit.gates:
        apply_gate(psi, gate)
    return StateVector(psi, state.qubit_count)


def diagonal_energies(spec: HamiltonianSpec) -> np.ndarray:
    """E_phys(z) for every computational basis state z."""
    k = spec.qubit_count
    if k > MAX_SIM_QUBITS:
        raise ResourceLimitError(f"diagonal energies capped at {MAX_SIM_QUBITS} qubits")
    z = np.arange(1 << k, dtype=np.int64)
    energies = np.zeros(1 << k, dtype=np.float64)
    for qid, coeff in sorted(spec.z_terms.items()):
        if coeff != 0.0:
            energies += coeff * (1.0 - 2.0 * ((z >> qid) & 1))
    for ids, strength in spec.constraint_terms:
        parity = np.zeros(1 << k, dtype=np.int64)
        for qid in ids:
            parity ^= (z >> qid) & 1
        energies += strength * parity
    return energies


def energy(state: StateVector, spec: HamiltonianSpec) -> float:
    """<H_phys> of the state (local fields plus all constraint penalties)."""
    probs = np.abs(state.amplitudes) ** 2
    return float(probs @ diagonal_energies(spec))


def ground_population(state: StateVector, spec: HamiltonianSpec) -> float:
    """Total population on the full degenerate ground manifold of H_phys."""
    energies = diagonal_energies(spec)
    e_min = energies.min()
    tol = _GROUND_TOL * max(1.0, abs(e_min))
    mask = energies <= e_min + tol
    return float(np.sum(np.abs(state.amplitudes[mask]) ** 2))


def extreme_energies(spec: HamiltonianSpec) -> tuple[float, float]:
    """Exact (E_min, E_max) by scanning all diagonal values."""
    energies = diagonal_energies(spec)
    return float(energies.min()), float(energies.max())


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate depolarizing Pauli insertions over Monte-Carlo trajectories."""

    two_qubit_error_rate: float
    single_qubit_error_rate: float = 1e-3
    trajectories: int = 500
    seed: int = 0

    def __post_init__(self):
        for rate in (self.two_qubit_error_rate, self.single_qubit_error_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("error rates must lie in [0, 1]")
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")


def noisy_expectations(
    circuit: Circuit, spec: HamiltonianSpec, noise: NoiseModel
) -> tuple[float, float]:
    """(mean energy, mean ground population) over noisy trajectories.

    After each gate, with that gate's error rate, a uniformly random
    non-identity Pauli is inserted on each operand qubit. Trajectory i uses
    the sub-seed (seed, i); rates of zero short-circuit to one exact run.
    """
    if circuit.qubit_count > MAX_SIM_QUBITS:
        raise ResourceLimitError(f"dense simulation capped at {MAX_SIM_QUBITS} qubits")
    energies = diagonal_energies(spec)
    e_min = energies.min()
    ground_mask = energies <= e_min + _GROUND_TOL * max(1.0, abs(e_min))

    def run(rng: np.random.Generator | None) -> tuple[float, float]:
        psi = np.zeros(1 << circuit.qubit_count, dtype=np.complex128)
        psi[0] = 1.0
        for gate in circuit.gates:
            apply_gate(psi, gate)
            if rng is None:
                continue
            rate = (
                noise.two_qubit_error_rate
                if gate.kind == CNOT
                else noise.single_qubit_error_rate
            )
            if rate > 0.0 and rng.random() < rate:
                for q in gate.qubits:
                    apply_pauli(psi, q, int(rng.integers(3)))
        probs = np.abs(psi) ** 2
        return float(probs @ energies), float(probs[ground_mask].sum())

    if noise.two_qubit_error_rate == 0.0 and noise.single_qubit_error_rate == 0.0:
        return run(None)

    total_e = 0.0
    total_g = 0.0
    for i in range(noise.trajectories):
        rng = np.random.default_rng([noise.seed, i])
        e, g = run(rng)
        total_e += e
        total_g += g
    return total_e / noise.trajectories, total_g / noise.trajectories
