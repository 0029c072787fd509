"""QAOA protocols: evaluation, random-restart accept/reject optimization and
ensemble experiments over random problem instances.

The optimizer evaluates noiselessly in the invariant subspace spanned by the
driver lines (one effective qubit per line), where every driver term acts as
a single-qubit X rotation and both diagonal stages stay diagonal. The gate
level circuit path (``evaluate``) computes the same quantities and serves as
the cross-check.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .circuits import qaoa_circuit, schedule
from .drivers import DriverSet, assign_priorities, synthesize_driver_set
from .errors import DegenerateSpectrumError, ResourceLimitError
from .model import ParityLayout, build_hamiltonians, generate_complete_layout
from .partition import (
    ConstraintPartition,
    partition_all_explicit,
    partition_all_implicit,
    partition_three_body_explicit,
)
from .simulate import (
    MAX_SIM_QUBITS,
    NoiseModel,
    StateVector,
    apply_circuit,
    diagonal_energies,
    ground_population,
    energy as state_energy,
    noisy_expectations,
)

MODES = ("explicit", "implicit", "hybrid")
TWO_PI = 2.0 * math.pi
_GROUND_TOL = 1e-12


@dataclass(frozen=True)
class QaoaConfig:
    p: int = 3
    restarts: int = 100
    mode: str = "hybrid"
    seed: int = 0
    convergence: int | None = None  # consecutive rejections; default 50 * n_params
    update_step: float = math.pi / 8
    constraint_strength: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


@dataclass(frozen=True)
class QaoaResult:
    mode: str
    params: tuple[tuple[float, ...], ...]
    energy: float
    e_min: float
    e_max: float
    residual_energy: float
    fidelity: float
    gate_counts: dict[str, int]
    depth: int


def residual_energy(e: float, e_min: float, e_max: float) -> float:
    """Normalized excess energy (E - E_min) / (E_max - E_min)."""
    if e_max == e_min:
        raise DegenerateSpectrumError("spectrum is a single point")
    return (e - e_min) / (e_max - e_min)


def partition_for_mode(layout: ParityLayout, mode: str) -> ConstraintPartition:
    if mode == "explicit":
        return partition_all_explicit(layout)
    if mode == "implicit":
        return partition_all_implicit(layout)
    return partition_three_body_explicit(layout)


def params_arity(mode: str) -> int:
    return 2 if mode == "implicit" else 3


def evaluate(
    mode: str,
    layout: ParityLayout,
    partition: ConstraintPartition,
    driver_set: DriverSet,
    params: list[tuple[float, ...]],
    constraint_strength: float = 1.0,
) -> tuple[float, float]:
    """Noiseless (energy, fidelity) via full gate-level circuit simulation."""
    circuit = qaoa_circuit(mode, layout, partition, driver_set, params, constraint_strength)
    state = apply_circuit(StateVector.all_up(layout.qubit_count), circuit)
    spec = build_hamiltonians(layout, constraint_strength)
    return state_energy(state, spec), ground_population(state, spec)


class SubspaceEvaluator:
    """Noiseless protocol evaluation in the driver-qubit basis.

    Basis state v of the 2^d-dimensional subspace (d driver lines) maps to
    the physical state z(v) = XOR of the lines selected by v's bits; driver
    term mu acts as X on bit mu and both Hamiltonian stages are diagonal in
    z(v). The initial equal superposition is the all-plus state.
    """

    def __init__(
        self,
        layout: ParityLayout,
        partition: ConstraintPartition,
        driver_set: DriverSet,
        mode: str,
        p: int,
        constraint_strength: float = 1.0,
    ):
        if layout.qubit_count > MAX_SIM_QUBITS:
            raise ResourceLimitError(f"simulation capped at {MAX_SIM_QUBITS} qubits")
        self.mode = mode
        self.p = p
        self.dim_exp = len(driver_set.lines)
        if self.dim_exp > MAX_SIM_QUBITS:
            raise ResourceLimitError("driver subspace too large for dense evaluation")
        dim = 1 << self.dim_exp

        z_of_v = np.zeros(1, dtype=np.int64)
        for line in driver_set.lines:
            z_of_v = np.concatenate([z_of_v, z_of_v ^ np.int64(line.mask)])
        self._z_of_v = z_of_v

        self.e_field = np.zeros(dim, dtype=np.float64)
        for q in sorted(layout.coefficients):
            coeff = layout.coefficients[q]
            if coeff != 0.0:
                self.e_field += coeff * (1.0 - 2.0 * ((z_of_v >> q) & 1))
        self.e_penalty = np.zeros(dim, dtype=np.float64)
        for cid in sorted(partition.explicit_ids):
            parity = np.zeros(dim, dtype=np.int64)
            for q in layout.constraint_by_id(cid).qubit_ids:
                parity ^= (z_of_v >> q) & 1
            self.e_penalty += constraint_strength * parity
        self.e_total = self.e_field + self.e_penalty

        spec = build_hamiltonians(layout, constraint_strength)
        full = diagonal_energies(spec)
        self.e_min = float(full.min())
        self.e_max = float(full.max())
        tol = _GROUND_TOL * max(1.0, abs(self.e_min))
        self._ground_mask = self.e_total <= self.e_min + tol
        self._amp0 = 1.0 / math.sqrt(dim)

    @property
    def n_params(self) -> int:
        return self.p * params_arity(self.mode)

    def split(self, flat: np.ndarray) -> tuple[tuple[float, ...], ...]:
        arity = params_arity(self.mode)
        return tuple(
            tuple(float(x) for x in flat[j * arity : (j + 1) * arity])
            for j in range(self.p)
        )

    def _cycle_angles(self, flat: np.ndarray, j: int) -> tuple[float, float, float]:
        if self.mode == "implicit":
            gamma, beta = flat[2 * j : 2 * j + 2]
            return 0.0, float(gamma), float(beta)
        omega, gamma, beta = flat[3 * j : 3 * j + 3]
        return float(omega), float(gamma), float(beta)

    def workspace(self) -> "_Workspace":
        return _Workspace(self)

    def state(self, flat: np.ndarray) -> np.ndarray:
        """Subspace amplitudes after the full protocol at the given parameters."""
        psi = np.full(1 << self.dim_exp, self._amp0, dtype=np.complex128)
        phase = np.empty_like(psi)
        for j in range(self.p):
            omega, gamma, beta = self._cycle_angles(flat, j)
            _kernels.build_phase(phase, self.e_field, self.e_penalty, gamma, omega)
            _kernels.diag_mult(psi, phase)
            _kernels.apply_all_axis_rotations(psi, self.dim_exp, math.cos(beta), math.sin(beta))
        return psi

    def energy(self, flat: np.ndarray) -> float:
        return float(_kernels.expectation(self.state(flat), self.e_total))

    def ground_population(self, flat: np.ndarray) -> float:
        psi = self.state(flat)
        return float(np.sum(np.abs(psi[self._ground_mask]) ** 2))


class _Workspace:
    """Reusable buffers plus per-cycle phase caching for the accept/reject loop.

    Each cycle keeps its current phase vector and one backup slot, so the
    common propose-then-reject pattern swaps vectors instead of recomputing
    the transcendentals.
    """

    def __init__(self, ev: SubspaceEvaluator):
        self._ev = ev
        dim = 1 << ev.dim_exp
        self._psi = np.empty(dim, dtype=np.complex128)
        self._keys: list[tuple[float, float] | None] = [None] * ev.p
        self._vecs = [np.empty(dim, dtype=np.complex128) for _ in range(ev.p)]
        self._bkeys: list[tuple[float, float] | None] = [None] * ev.p
        self._bvecs = [np.empty(dim, dtype=np.complex128) for _ in range(ev.p)]

    def _phase(self, j: int, omega: float, gamma: float) -> np.ndarray:
        key = (omega, gamma)
        if self._keys[j] == key:
            return self._vecs[j]
        if self._bkeys[j] == key:
            self._keys[j], self._bkeys[j] = self._bkeys[j], self._keys[j]
            self._vecs[j], self._bvecs[j] = self._bvecs[j], self._vecs[j]
            return self._vecs[j]
        self._keys[j], self._bkeys[j] = key, self._keys[j]
        self._vecs[j], self._bvecs[j] = self._bvecs[j], self._vecs[j]
        _kernels.build_phase(self._vecs[j], self._ev.e_field, self._ev.e_penalty, gamma, omega)
        return self._vecs[j]

    def evaluate(self, flat: np.ndarray) -> float:
        ev = self._ev
        psi = self._psi
        psi[:] = ev._amp0
        for j in range(ev.p):
            omega, gamma, beta = ev._cycle_angles(flat, j)
            _kernels.diag_mult(psi, self._phase(j, omega, gamma))
            _kernels.apply_all_axis_rotations(psi, ev.dim_exp, math.cos(beta), math.sin(beta))
        return float(_kernels.expectation(psi, ev.e_total))


def optimize(
    layout: ParityLayout,
    partition: ConstraintPartition,
    driver_set: DriverSet,
    config: QaoaConfig,
) -> QaoaResult:
    """Random-restart accept/reject search.

    Per restart: draw all parameters uniformly from [0, 2pi), then repeatedly
    perturb one uniformly chosen parameter by a uniform step, accepting only
    strict energy decreases, until ``convergence`` consecutive rejections.
    The best restart wins; deterministic for a fixed seed.
    """
    ev = SubspaceEvaluator(
        layout, partition, driver_set, config.mode, config.p, config.constraint_strength
    )
    n_params = ev.n_params
    convergence = config.convergence if config.convergence is not None else 50 * n_params
    best_energy = math.inf
    best_params: np.ndarray | None = None
    ws = ev.workspace()
    for r in range(config.restarts):
        rng = np.random.default_rng([config.seed, r])
        params = rng.uniform(0.0, TWO_PI, n_params)
        current = ws.evaluate(params)
        rejections = 0
        while rejections < convergence:
            j = int(rng.integers(n_params))
            delta = rng.uniform(-config.update_step, config.update_step)
            old = params[j]
            params[j] = (old + delta) % TWO_PI
            trial = ws.evaluate(params)
            if trial < current:
                current = trial
                rejections = 0
            else:
                params[j] = old
                rejections += 1
        if current < best_energy:
            best_energy = current
            best_params = params.copy()
    assert best_params is not None
    fidelity = ev.ground_population(best_params)
    params_t = ev.split(best_params)
    circuit = qaoa_circuit(
        config.mode, layout, partition, driver_set, list(params_t), config.constraint_strength
    )
    return QaoaResult(
        mode=config.mode,
        params=params_t,
        energy=float(best_energy),
        e_min=ev.e_min,
        e_max=ev.e_max,
        residual_energy=residual_energy(float(best_energy), ev.e_min, ev.e_max),
        fidelity=fidelity,
        gate_counts=circuit.gate_counts(),
        depth=schedule(circuit),
    )


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _instance_task(payload) -> list[dict]:
    (
        seed,
        index,
        layout,
        mode_setups,
        config,
        noise_rates,
        trajectories,
    ) = payload
    rng = np.random.default_rng([seed, index])
    coeffs = {q.id: float(rng.uniform(-1.0, 1.0)) for q in sorted(layout.qubits, key=lambda q: q.id)}
    instance_layout = layout.with_coefficients(coeffs)
    spec = build_hamiltonians(instance_layout, config.constraint_strength)
    records = []
    for m_idx, (mode, part, ds) in enumerate(mode_setups):
        cfg = replace(config, mode=mode, seed=_derive_seed(seed, index, m_idx))
        result = optimize(instance_layout, part, ds, cfg)
        for r_idx, rate in enumerate(noise_rates):
            if rate == 0.0:
                e_res, fid = result.residual_energy, result.fidelity
            else:
                circ = qaoa_circuit(
                    mode, instance_layout, part, ds, list(result.params), config.constraint_strength
                )
                noise = NoiseModel(
                    two_qubit_error_rate=rate,
                    trajectories=trajectories,
                    seed=_derive_seed(seed, index, m_idx, r_idx),
                )
                e_noisy, fid = noisy_expectations(circ, spec, noise)
                e_res = residual_energy(e_noisy, result.e_min, result.e_max)
            records.append(
                {
                    "instance": index,
                    "mode": mode,
                    "n_r": part.explicit_fraction,
                    "noise_rate": rate,
                    "e_res": e_res,
                    "fidelity": fid,
                }
            )
    return records


def ensemble_experiment(
    modes: list[str],
    n_spins: int,
    instances: int,
    config: QaoaConfig,
    noise_rates: list[float],
    trajectories: int = 500,
    workers: int | None = None,
) -> list[dict]:
    """Fig.-7-style experiment: random local fields per instance, noiseless
    optimization per mode, then noisy re-evaluation of the optimal circuits.

    Returns one row per (mode, noise rate) with medians and quartiles of
    residual energy and fidelity over the instances.
    """
    layout = generate_complete_layout(n_spins)
    if layout.qubit_count > MAX_SIM_QUBITS:
        raise ResourceLimitError(
            f"N={n_spins} needs {layout.qubit_count} qubits; cap is {MAX_SIM_QUBITS}"
        )
    mode_setups = []
    for mode in modes:
        part = partition_for_mode(layout, mode)
        ds = assign_priorities(synthesize_driver_set(layout, part))
        mode_setups.append((mode, part, ds))

    payloads = [
        (config.seed, i, layout, mode_setups, config, list(noise_rates), trajectories)
        for i in range(instances)
    ]
    if workers is None:
        env = os.environ.get("PARITY_QAOA_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    workers = max(1, min(workers, instances))
    if workers == 1:
        per_instance = [_instance_task(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_instance = list(pool.map(_instance_task, payloads))

    records = [rec for chunk in per_instance for rec in chunk]
    rows = []
    for mode, part, _ds in mode_setups:
        for rate in noise_rates:
            eres = [r["e_res"] for r in records if r["mode"] == mode and r["noise_rate"] == rate]
            fids = [r["fidelity"] for r in records if r["mode"] == mode and r["noise_rate"] == rate]
            q25e, q50e, q75e = np.percentile(eres, [25, 50, 75])
            q25f, q50f, q75f = np.percentile(fids, [25, 50, 75])
            rows.append(
                {
                    "mode": mode,
                    "n_r": part.explicit_fraction,
                    "noise_rate": rate,
                    "median_eres": float(q50e),
                    "q25_eres": float(q25e),
                    "q75_eres": float(q75e),
                    "median_fidelity": float(q50f),
                    "q25_fidelity": float(q25f),
                    "q75_fidelity": float(q75f),
                    "instances": instances,
                }
            )
    return rows
