"""Brute-force classical spectrum of an Ising instance.

Deliberately shares no code with :func:`qalab.ising.potential_diagonal`:
energies come from explicit +1/-1 spin products summed term by term, one
block of configurations at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DimensionError
from .ising import IsingInstance

ENUMERATION_LIMIT = 2**24
_BLOCK = 2**16


@dataclass(frozen=True)
class ClassicalSummary:
    n_sites: int
    e_min: float
    e_max: float
    ground_states: tuple[int, ...]
    max_states: tuple[int, ...]

    @property
    def n_ground(self) -> int:
        return len(self.ground_states)

    @property
    def n_max(self) -> int:
        return len(self.max_states)

    @property
    def spread(self) -> float:
        return self.e_max - self.e_min


def _block_energies(inst: IsingInstance, start: int, stop: int) -> np.ndarray:
    b = np.arange(start, stop, dtype=np.int64)
    spins = np.empty((stop - start, inst.n_sites), dtype=np.int8)
    for i in range(inst.n_sites):
        spins[:, i] = 1 - 2 * ((b >> i) & 1)
    energy = np.zeros(stop - start)
    for t in inst.terms:
        energy -= t.coefficient * np.prod(spins[:, list(t.sites)], axis=1, dtype=np.int64)
    return energy


def degeneracy_tolerance(inst: IsingInstance) -> float:
    return 1e-12 * max(1.0, sum(abs(t.coefficient) for t in inst.terms))


def enumerate_classical(inst: IsingInstance, limit: int = ENUMERATION_LIMIT) -> ClassicalSummary:
    dim = inst.dim
    if dim > limit:
        raise CapacityError(f"enumeration of 2^{inst.n_sites} states exceeds limit {limit}")
    tol = degeneracy_tolerance(inst)
    e_min, e_max = np.inf, -np.inf
    blocks = [(start, min(dim, start + _BLOCK)) for start in range(0, dim, _BLOCK)]
    for start, stop in blocks:
        energy = _block_energies(inst, start, stop)
        e_min = min(e_min, energy.min())
        e_max = max(e_max, energy.max())
    ground: list[int] = []
    top: list[int] = []
    for start, stop in blocks:
        energy = _block_energies(inst, start, stop)
        ground += (start + np.flatnonzero(energy <= e_min + tol)).tolist()
        top += (start + np.flatnonzero(energy >= e_max - tol)).tolist()
    return ClassicalSummary(inst.n_sites, float(e_min), float(e_max), tuple(ground), tuple(top))


def success_probability(state: np.ndarray, summary: ClassicalSummary, norm_tol: float = 1e-6) -> float:
    """Total weight of ``state`` on the classical ground-state manifold."""
    state = np.asarray(state)
    if state.shape != (1 << summary.n_sites,):
        raise DimensionError(f"state shape {state.shape} does not match 2^{summary.n_sites}")
    norm = float(np.linalg.norm(state))
    if abs(norm - 1.0) > norm_tol:
        raise ValueError(f"state norm {norm} differs from 1 by more than {norm_tol}")
    weights = np.abs(state[list(summary.ground_states)]) ** 2
    return float(min(1.0, max(0.0, weights.sum())))
