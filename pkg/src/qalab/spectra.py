"""Exact instantaneous eigensystems of H(gamma) and adiabatic estimates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EigensolverError, SingularityError
from .ising import DENSE_LIMIT, HamiltonianView, apply_driver, materialize_dense

RESIDUAL_TOL = 1e-9
ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]
    gamma: float

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_vector(self) -> np.ndarray:
        if self.eigenvectors is None:
            raise ValueError("spectrum was computed without eigenvectors")
        return self.eigenvectors[:, 0]


@dataclass(frozen=True)
class AdiabaticEstimate:
    """Per excited level n >= 1: |<n|dH/dt|0>|, gap, ratio and ratio**2."""

    numerators: np.ndarray
    gaps: np.ndarray
    ratios: np.ndarray

    @property
    def probabilities(self) -> np.ndarray:
        return self.ratios**2

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max()) if self.ratios.size else 0.0

    @property
    def max_probability(self) -> float:
        return self.max_ratio**2

    @property
    def max_numerator(self) -> float:
        return float(self.numerators.max()) if self.numerators.size else 0.0


def _fix_phases(vecs: np.ndarray, gamma: float) -> None:
    # largest-magnitude entry positive; ground state made Perron-positive
    pivots = np.abs(vecs).argmax(axis=0)
    signs = np.sign(vecs[pivots, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    vecs *= signs
    if gamma > 0 and vecs[:, 0].sum() < 0:
        vecs[:, 0] *= -1.0


def full_spectrum(h: HamiltonianView, want_vectors: bool = True,
                  limit: int = DENSE_LIMIT) -> Spectrum:
    mat = materialize_dense(h, limit)
    try:
        if want_vectors:
            vals, vecs = np.linalg.eigh(mat)
        else:
            vals, vecs = np.linalg.eigvalsh(mat), None
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"dense eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise EigensolverError("eigensolver returned non-finite eigenvalues")
    if vecs is not None:
        scale = max(1.0, float(np.abs(vals).max()))
        resid = np.linalg.norm(mat @ vecs - vecs * vals, axis=0).max()
        if resid > RESIDUAL_TOL * scale:
            raise EigensolverError(f"eigenpair residual {resid:.3e} exceeds {RESIDUAL_TOL} * |H|")
        ortho = np.abs(vecs.T @ vecs - np.eye(h.dim)).max()
        if ortho > ORTHO_TOL:
            raise EigensolverError(f"eigenvectors not orthonormal (deviation {ortho:.3e})")
        _fix_phases(vecs, h.gamma)
    return Spectrum(vals, vecs, h.gamma)


def gap(spec: Spectrum) -> float:
    if spec.eigenvalues.size < 2:
        raise ValueError("gap needs at least two eigenvalues")
    return float(spec.eigenvalues[1] - spec.eigenvalues[0])


def adiabatic_estimate(h: HamiltonianView, dgamma_dt: float,
                       spec: Optional[Spectrum] = None,
                       limit: int = DENSE_LIMIT) -> AdiabaticEstimate:
    """|<n|dH/dt|0>| / (e_n - e_0)^2 for every excited level.

    dH/dt = -(dGamma/dt) * D, so only the driver generator enters.
    """
    if h.gamma <= 0:
        raise ValueError("adiabatic estimate needs gamma > 0")
    if dgamma_dt > 0:
        raise ValueError("dgamma_dt must be <= 0 for an annealing schedule")
    if spec is None or spec.eigenvectors is None:
        spec = full_spectrum(h, want_vectors=True, limit=limit)
    vals, vecs = spec.eigenvalues, spec.eigenvectors
    gaps = vals[1:] - vals[0]
    scale = max(1.0, float(np.abs(vals).max()))
    if gaps.size and gaps[0] <= 1e-13 * scale:
        raise SingularityError(f"vanishing gap {gaps[0]:.3e} at gamma={h.gamma}")
    d0 = apply_driver(h.n_sites, h.driver, vecs[:, 0])
    numerators = np.abs(dgamma_dt * (vecs[:, 1:].T @ d0))
    return AdiabaticEstimate(numerators, gaps, numerators / gaps**2)
