"""Real-time Schroedinger propagation under an annealing schedule.

Each step applies the fourth-order Magnus exponential

    exp(-i B),  B = h/2 (H1 + H2) - i sqrt(3)/12 h^2 [H2, H1]

with H1, H2 taken at the two Gauss-Legendre nodes of the step.  For
``H = V - Gamma D`` the commutator collapses to ``(Gamma2 - Gamma1) [V, D]``,
so B is applied matrix-free with two driver actions.  Small Hilbert spaces
exponentiate B densely; larger ones use a Lanczos exponential with full
reorthogonalization.  Both are unitary to rounding, and the step is exact
for a frozen Hamiltonian.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse.linalg as spla

from .errors import CapacityError, DimensionError, NormDriftError
from .ising import (DENSE_LIMIT, MATRIX_FREE_LIMIT, DriverKind, HamiltonianView, IsingInstance,
                    apply_driver, driver_dense, potential_diagonal)
from .oracle import ClassicalSummary, enumerate_classical, success_probability
from .schedules import Schedule
from .spectra import full_spectrum

DENSE_PROPAGATOR_LIMIT = 2**8
NORM_ABORT = 1e-6
_GAUSS = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)
_COMM = math.sqrt(3) / 12
CSV_COLUMNS = ("t", "gamma", "fidelity", "excitation", "gap", "residual_energy", "success_prob", "norm_drift")


def expm_krylov(apply_b: Callable[[np.ndarray], np.ndarray], v: np.ndarray,
                tol: float = 1e-14, m_max: int = 40) -> np.ndarray:
    """``exp(-i B) v`` for Hermitian ``B`` given only its action.

    Falls back to halving the exponent when the Krylov space of size
    ``m_max`` has not converged.
    """
    beta0 = float(np.linalg.norm(v))
    if beta0 == 0.0:
        return np.zeros_like(v)
    dim = v.size
    m_cap = min(m_max, dim)
    basis = np.empty((m_cap + 1, dim), dtype=complex)
    basis[0] = v / beta0
    alphas: list[float] = []
    betas: list[float] = []
    for j in range(m_cap):
        w = apply_b(basis[j])
        alphas.append(float(np.vdot(basis[j], w).real))
        # two passes of classical Gram-Schmidt against the whole basis
        for _ in range(2):
            w -= basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        beta = float(np.linalg.norm(w))
        t = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
        lam, q = np.linalg.eigh(t)
        coeff = q @ (np.exp(-1j * lam) * q[0].conj())
        if beta <= 1e-14 * max(1.0, abs(alphas[-1])) or j + 1 == dim:
            return beta0 * (basis[: j + 1].T @ coeff)
        if beta * abs(coeff[-1]) < tol:
            return beta0 * (basis[: j + 1].T @ coeff)
        betas.append(beta)
        basis[j + 1] = w / beta
    half = expm_krylov(lambda x: 0.5 * apply_b(x), v, tol, m_max)
    return expm_krylov(lambda x: 0.5 * apply_b(x), half, tol, m_max)


class Propagator:
    """Magnus-4 stepper for ``H(t) = V - Gamma(t) D``."""

    def __init__(self, potential_diag: np.ndarray, driver: DriverKind, schedule: Schedule,
                 dense_threshold: int = DENSE_PROPAGATOR_LIMIT):
        self.v = np.asarray(potential_diag, dtype=float)
        self.n_sites = int(round(math.log2(self.v.size)))
        self.driver = DriverKind.parse(driver)
        self.schedule = schedule
        self.dense = self.v.size <= dense_threshold
        self._cache_key = None
        self._cache_u = None
        if self.dense:
            self._d = driver_dense(self.n_sites, self.driver)
            self._comm = (self.v[:, None] - self.v[None, :]) * self._d

    def _gammas(self, t: float, h: float) -> tuple[float, float]:
        return self.schedule.gamma(t + _GAUSS[0] * h), self.schedule.gamma(t + _GAUSS[1] * h)

    def step(self, psi: np.ndarray, t: float, h: float) -> np.ndarray:
        """Advance ``psi`` from ``t`` to ``t + h`` (``h`` may be negative)."""
        g1, g2 = self._gammas(t, h)
        gbar = 0.5 * (g1 + g2)
        skew = _COMM * h * h * (g2 - g1)
        if self.dense:
            key = (h, gbar, skew)
            if key != self._cache_key:
                b = h * (np.diag(self.v) - gbar * self._d) - 1j * skew * self._comm
                lam, w = np.linalg.eigh(b)
                self._cache_u = (w * np.exp(-1j * lam)) @ w.conj().T
                self._cache_key = key
            return self._cache_u @ psi

        v, n, drv = self.v, self.n_sites, self.driver

        def apply_b(x):
            dx = apply_driver(n, drv, x)
            out = h * (v * x - gbar * dx)
            if skew != 0.0:
                out -= 1j * skew * (v * dx - apply_driver(n, drv, v * x))
            return out

        return expm_krylov(apply_b, psi)

    def propagate(self, psi: np.ndarray, t0: float, t1: float, n_steps: int) -> np.ndarray:
        h = (t1 - t0) / n_steps
        for k in range(n_steps):
            psi = self.step(psi, t0 + k * h, h)
        return psi


def initial_ground_state(h: HamiltonianView, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Ground state of H(0), Perron-positive, as a complex vector."""
    if h.gamma <= 0:
        raise ValueError("initial state needs Gamma(0) > 0")
    if h.dim <= limit:
        return full_spectrum(h, want_vectors=True, limit=limit).ground_vector.astype(complex)
    op = spla.LinearOperator((h.dim, h.dim), matvec=h.apply, dtype=float)
    _, vec = spla.eigsh(op, k=1, which="SA", tol=1e-12)
    vec = vec[:, 0]
    vec = vec if vec.sum() >= 0 else -vec
    return (vec / np.linalg.norm(vec)).astype(complex)


def residual_energy(state: np.ndarray, potential_diag: np.ndarray, e_min: float) -> float:
    state = np.asarray(state)
    if state.shape != np.shape(potential_diag):
        raise DimensionError(f"state shape {state.shape} does not match {np.shape(potential_diag)}")
    return float(np.dot(np.abs(state) ** 2, potential_diag) - e_min)


@dataclass
class Trajectory:
    t: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    fidelity: list = field(default_factory=list)
    excitation: list = field(default_factory=list)
    gap: list = field(default_factory=list)
    residual_energy: list = field(default_factory=list)
    success_prob: list = field(default_factory=list)
    norm_drift: list = field(default_factory=list)
    final_state: Optional[np.ndarray] = field(default=None, repr=False)
    schedule_label: str = ""

    def __len__(self):
        return len(self.t)

    def append(self, **row):
        for key in CSV_COLUMNS:
            getattr(self, key).append(float(row[key]))

    def column(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name))

    @property
    def final_fidelity(self) -> float:
        return self.fidelity[-1]

    @property
    def max_norm_drift(self) -> float:
        return max(self.norm_drift) if self.norm_drift else 0.0

    def to_csv(self, fh=None) -> str:
        buf = fh if fh is not None else io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in zip(*(getattr(self, key) for key in CSV_COLUMNS)):
            writer.writerow([repr(x) for x in row])
        return buf.getvalue() if fh is None else ""

    @classmethod
    def from_csv(cls, text: str) -> "Trajectory":
        rows = list(csv.reader(io.StringIO(text)))
        if tuple(rows[0]) != CSV_COLUMNS:
            raise ValueError(f"unexpected trajectory header {rows[0]}")
        traj = cls()
        for row in rows[1:]:
            traj.append(**{k: float(x) for k, x in zip(CSV_COLUMNS, row)})
        return traj


def _observables(psi, t, gamma, base: HamiltonianView, summary: ClassicalSummary, limit: int) -> dict:
    spec = full_spectrum(base.with_gamma(gamma), want_vectors=True, limit=limit)
    vals = spec.eigenvalues
    weights = np.abs(spec.eigenvectors.T @ psi) ** 2
    scale = max(1.0, float(np.abs(vals).max()))
    ground = vals - vals[0] <= 1e-10 * scale
    norm = float(np.linalg.norm(psi))
    return dict(
        t=t, gamma=gamma,
        fidelity=weights[ground].sum(), excitation=weights[~ground].sum(),
        gap=vals[1] - vals[0],
        residual_energy=residual_energy(psi, base.potential_diag, summary.e_min),
        success_prob=success_probability(psi / norm, summary),
        norm_drift=abs(norm - 1.0),
    )


def evolve(inst: IsingInstance, driver, s: Schedule, t_final: float, dt: float, samples: int = 2,
           *, limit: int = DENSE_LIMIT, summary: Optional[ClassicalSummary] = None,
           norm_abort: float = NORM_ABORT) -> Trajectory:
    """Anneal from the ground state of H(0) to ``t_final`` and sample observables.

    The step is ``t_final / ceil(t_final / dt)``.  ``samples`` evenly spaced
    sample points include both endpoints; every sample diagonalizes H(t).
    """
    if t_final <= 0 or dt <= 0:
        raise ValueError("t_final and dt must be positive")
    if samples < 2:
        raise ValueError("need at least two samples (start and end)")
    driver = DriverKind.parse(driver)
    if inst.dim > limit:
        raise CapacityError(f"sampled evolution needs 2^{inst.n_sites} <= dense limit {limit}")
    summary = summary or enumerate_classical(inst)
    base = HamiltonianView(potential_diagonal(inst, MATRIX_FREE_LIMIT), driver, 0.0)
    n_steps = max(1, math.ceil(t_final / dt - 1e-9))
    h = t_final / n_steps
    marks = np.unique(np.round(np.linspace(0, n_steps, samples)).astype(int))

    psi = initial_ground_state(base.with_gamma(s.gamma(0.0)), limit)
    prop = Propagator(base.potential_diag, driver, s)
    traj = Trajectory(schedule_label=_label(s))
    done = 0
    for mark in marks:
        for k in range(done, mark):
            psi = prop.step(psi, k * h, h)
        done = mark
        t = mark * h
        traj.append(**_observables(psi, t, s.gamma(t), base, summary, limit))
        if traj.norm_drift[-1] > norm_abort:
            traj.final_state = psi
            raise NormDriftError(f"norm drift {traj.norm_drift[-1]:.3e} at t={t:.6g}", traj)
    traj.final_state = psi
    return traj


def _label(s: Schedule) -> str:
    parts = [s.kind]
    if hasattr(s, "t_cap"):
        parts.append(f"cap_until_t={s.t_cap:.6g}")
    return ";".join(parts)
