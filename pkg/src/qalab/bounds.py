"""Perron-Frobenius/Hopf bound chain for the gap of H(gamma).

For ``M = (E_max - H)^p`` with strictly positive entries, every non-Perron
eigenvalue obeys ``|lam| <= (kappa - 1)/(kappa + 1) * lam_0`` where
``kappa = max_{i,j,k} M_ik / M_jk``.  At small gamma the smallest entry of M
links fully opposite configurations and counts shortest flip paths, which
gives the closed-form kappa bound, the gap lower bound ``A * gamma^p`` and
the power-law schedule built on it.

Path-count constants (log of the number of shortest opposite-corner paths):

* transverse field, ``p = N``: ``N!``
* pairwise driver, ``p = ceil(N/2)``: ``N! / 2^(N/2)`` for even N and
  ``p * N! / 2^((N-1)/2)`` for odd N (disjoint double flips plus, for odd N,
  one single flip in any of the p positions).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import PositivityError
from .ising import DENSE_LIMIT, DriverKind, HamiltonianView, apply_driver, materialize_dense
from .oracle import ClassicalSummary
from .spectra import full_spectrum, gap

ASYMPTOTIC_GAMMA = 0.1
KAPPA_REGIME_GAMMA = 1e-2
HOPF_TOL = 1e-10
CORNER_RTOL = 1e-12
GAP_SLACK = 1e-12


def log_factorial(n: int, stirling: bool = False) -> float:
    if stirling:
        return 0.5 * math.log(2 * math.pi * n) + n * math.log(n) - n
    return math.lgamma(n + 1)


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def default_exponent(n: int, driver=DriverKind.TRANSVERSE) -> int:
    if DriverKind.parse(driver) is DriverKind.TRANSVERSE:
        return n
    return (n + 1) // 2


def log_path_count(n: int, driver=DriverKind.TRANSVERSE, stirling: bool = False) -> float:
    """Log of the opposite-corner entry of M divided by gamma^p."""
    lf = log_factorial(n, stirling)
    if DriverKind.parse(driver) is DriverKind.TRANSVERSE:
        return lf
    p = default_exponent(n, driver)
    if n % 2 == 0:
        return lf - (n // 2) * math.log(2)
    return math.log(p) + lf - ((n - 1) // 2) * math.log(2)


def _log_max_entry_bound(summary: ClassicalSummary, n: int, driver) -> float:
    # H_kin replaced by -(number of generator terms); needs gamma <= 1
    k = DriverKind.parse(driver).n_generator_terms(n)
    return default_exponent(n, driver) * math.log(summary.spread + k)


@dataclass(frozen=True)
class PositiveOperatorPower:
    base: np.ndarray = field(repr=False)
    exponent: int
    result: np.ndarray = field(repr=False)

    @property
    def strictly_positive(self) -> bool:
        return bool(self.result.min() > 0)


def positive_power(h: HamiltonianView, e_max: float, p: int,
                   limit: int = DENSE_LIMIT) -> PositiveOperatorPower:
    """``(e_max * I - H)^p`` by exact repeated multiplication."""
    if h.gamma <= 0:
        raise ValueError("positive_power needs gamma > 0")
    if p < 1:
        raise ValueError("exponent must be >= 1")
    base = -materialize_dense(h, limit)
    base[np.diag_indices(h.dim)] += e_max
    tol = 1e-12 * max(1.0, abs(e_max), float(np.abs(h.potential_diag).max()))
    if base.min() < -tol:
        raise PositivityError(f"E_max*I - H has entry {base.min():.3e} < 0; e_max below the true maximum?")
    np.clip(base, 0.0, None, out=base)
    return PositiveOperatorPower(base, int(p), np.linalg.matrix_power(base, p))


def _as_matrix(m: Union[PositiveOperatorPower, np.ndarray]) -> np.ndarray:
    mat = m.result if isinstance(m, PositiveOperatorPower) else np.asarray(m, dtype=float)
    if mat.min() <= 0:
        raise PositivityError("matrix is not strictly positive")
    return mat


def kappa_exact(m: Union[PositiveOperatorPower, np.ndarray]) -> float:
    """max over columns of (largest entry / smallest entry)."""
    mat = _as_matrix(m)
    return float((mat.max(axis=0) / mat.min(axis=0)).max())


def kappa_bound(summary: ClassicalSummary, n: int, gamma: float,
                driver=DriverKind.TRANSVERSE) -> float:
    if gamma <= 0:
        raise ValueError("kappa_bound needs gamma > 0")
    p = default_exponent(n, driver)
    log_k = _log_max_entry_bound(summary, n, driver) - log_path_count(n, driver) - p * math.log(gamma)
    return _safe_exp(log_k)


def hopf_ratio(kappa: float) -> float:
    """(kappa - 1)/(kappa + 1), written to stay accurate for huge kappa."""
    return 1.0 - 2.0 / (kappa + 1.0)


@dataclass(frozen=True)
class HopfResult:
    passed: bool
    margin: float
    kappa: float
    perron_root: float
    ratio: float


def hopf_check(m: Union[PositiveOperatorPower, np.ndarray], tol: float = HOPF_TOL) -> HopfResult:
    mat = _as_matrix(m)
    kappa = kappa_exact(mat)
    if np.array_equal(mat, mat.T):
        eig = np.linalg.eigvalsh(mat).astype(complex)
    else:
        eig = np.linalg.eigvals(mat)
    top = int(np.argmax(eig.real))
    lam0 = float(eig[top].real)
    others = np.abs(np.delete(eig, top))
    ratio = hopf_ratio(kappa)
    margin = float((ratio * lam0 - others).min()) if others.size else ratio * lam0
    return HopfResult(margin >= -tol * lam0, margin, kappa, lam0, ratio)


def _log_coefficient(summary: ClassicalSummary, eps0: float, n: int, driver, stirling: bool) -> float:
    if eps0 > summary.e_max:
        raise ValueError("eps0 must not exceed E_max")
    height = summary.e_max - eps0
    if height == 0:
        return -math.inf
    p = default_exponent(n, driver)
    return (math.log(2 * height) + log_path_count(n, driver, stirling)
            - math.log(p) - _log_max_entry_bound(summary, n, driver))


def coefficient_a(summary: ClassicalSummary, eps0: float, n: int,
                  driver=DriverKind.TRANSVERSE) -> float:
    """Gap-bound prefactor: gap >= A * gamma^p."""
    return _safe_exp(_log_coefficient(summary, eps0, n, driver, stirling=False))


def coefficient_a_stirling(summary: ClassicalSummary, eps0: float, n: int,
                           driver=DriverKind.TRANSVERSE) -> float:
    """Same prefactor with N! replaced by sqrt(2 pi N) N^N e^-N."""
    return _safe_exp(_log_coefficient(summary, eps0, n, driver, stirling=True))


def log_coefficient_a(summary: ClassicalSummary, eps0: float, n: int,
                      driver=DriverKind.TRANSVERSE, stirling: bool = False) -> float:
    return _log_coefficient(summary, eps0, n, driver, stirling)


def gap_from_kappa(height: float, kappa: float, p: int) -> float:
    """Unapproximated gap bound height * (1 - ((kappa-1)/(kappa+1))^(1/p))."""
    x = 2.0 / (kappa + 1.0)
    if x >= 1.0:  # kappa == 1: every subdominant eigenvalue is zero
        return height
    return height * -math.expm1(math.log1p(-x) / p)


@dataclass
class BoundsReport:
    n_sites: int
    driver: str
    gamma: float
    exponent: int
    default_exponent: int
    e_min: float
    e_max: float
    eps0: float
    strictly_positive: bool
    kappa_exact: Optional[float]
    kappa_bound: float
    min_element: float
    max_element: float
    max_element_bound: float
    corner_element: float
    corner_element_exact: float
    min_is_corner: bool
    coefficient_a: float
    coefficient_a_stirling: float
    gap_lower: float
    gap_lower_unapprox: float
    gap_lower_kappa_exact: Optional[float]
    gap_true: float
    hopf_margin: Optional[float]
    max_numerator: float
    checks: dict = field(default_factory=dict)

    @property
    def asymptotic(self) -> bool:
        return self.gamma <= ASYMPTOTIC_GAMMA

    @property
    def passed(self) -> bool:
        return all(v for v in self.checks.values() if v is not None)

    def failures(self) -> list[str]:
        return [k for k, v in self.checks.items() if v is False]

    def to_json_dict(self) -> dict:
        flat = asdict(self)
        checks = flat.pop("checks")
        for name, value in checks.items():
            flat[f"check_{name}"] = value
        flat["asymptotic"] = self.asymptotic
        flat["passed"] = self.passed
        return flat

    @classmethod
    def from_json_dict(cls, data: dict) -> "BoundsReport":
        data = dict(data)
        data.pop("asymptotic", None)
        data.pop("passed", None)
        checks = {k[len("check_"):]: data.pop(k) for k in list(data) if k.startswith("check_")}
        return cls(checks=checks, **data)


def gap_bound_check(h: HamiltonianView, summary: ClassicalSummary,
                    exponent: Optional[int] = None,
                    limit: int = DENSE_LIMIT) -> BoundsReport:
    """Run the full bound chain at one gamma and collect every check."""
    if h.gamma <= 0:
        raise ValueError("bound checks need gamma > 0")
    n, driver, g = h.n_sites, h.driver, h.gamma
    p_default = default_exponent(n, driver)
    p = p_default if exponent is None else int(exponent)

    spec = full_spectrum(h, want_vectors=True, limit=limit)
    eps = spec.eigenvalues
    eps0 = float(eps[0])
    gap_true = gap(spec)

    # N=1 (transverse) and N=2 (pairwise) leave zero diagonals at p_default
    power = positive_power(h, summary.e_max, p, limit)
    while not power.strictly_positive and exponent is None and p < max(p_default, n) + 1:
        p += 1
        power = positive_power(h, summary.e_max, p, limit)
    mat = power.result

    checks: dict[str, Optional[bool]] = {"strictly_positive": power.strictly_positive}
    kappa = hopf_margin = gap_kappa = None
    if power.strictly_positive:
        hopf = hopf_check(power)
        kappa, hopf_margin = hopf.kappa, hopf.margin
        checks["hopf"] = hopf.passed
        lam0 = abs(summary.e_max - eps0) ** p
        lhs = np.abs(summary.e_max - eps[1:]) ** p
        checks["spectral_confinement"] = bool(np.all(lhs <= hopf.ratio * lam0 + HOPF_TOL * lam0))
        gap_kappa = gap_from_kappa(summary.e_max - eps0, kappa, p)

    k_bound = kappa_bound(summary, n, g, driver)
    on_default = p == p_default
    if kappa is not None and on_default and g <= KAPPA_REGIME_GAMMA:
        checks["kappa_bound"] = kappa <= k_bound * (1 + 1e-12)
    else:
        checks["kappa_bound"] = None

    dim = h.dim
    idx = np.arange(dim)
    corners = mat[idx, idx ^ (dim - 1)]
    corner_exact = _safe_exp(log_path_count(n, driver) + p_default * math.log(g))
    if on_default:
        dev = float(np.abs(corners / corner_exact - 1.0).max())
        checks["corner_element"] = dev <= CORNER_RTOL
    else:
        checks["corner_element"] = None
    min_el, max_el = float(mat.min()), float(mat.max())
    max_bound = _safe_exp(_log_max_entry_bound(summary, n, driver))
    checks["max_element_bound"] = (max_el <= max_bound * (1 + 1e-12)) if (g <= 1.0 and on_default) else None

    a = coefficient_a(summary, eps0, n, driver)
    a_st = coefficient_a_stirling(summary, eps0, n, driver)
    gap_lower = a * g**p_default
    gap_unapprox = gap_from_kappa(summary.e_max - eps0, k_bound, p_default) if math.isfinite(k_bound) else 0.0
    checks["gap_bound"] = (gap_true >= gap_lower - GAP_SLACK) if g <= 1.0 else None

    d0 = apply_driver(n, driver, spec.eigenvectors[:, 0])
    max_num = float(np.abs(spec.eigenvectors[:, 1:].T @ d0).max())
    n_terms = DriverKind.parse(driver).n_generator_terms(n)
    checks["numerator"] = max_num <= n_terms * (1 + 1e-10)

    return BoundsReport(
        n_sites=n, driver=driver.value, gamma=g, exponent=p, default_exponent=p_default,
        e_min=summary.e_min, e_max=summary.e_max, eps0=eps0,
        strictly_positive=power.strictly_positive, kappa_exact=kappa, kappa_bound=k_bound,
        min_element=min_el, max_element=max_el, max_element_bound=max_bound,
        corner_element=float(corners[0]), corner_element_exact=corner_exact,
        min_is_corner=bool(min_el >= corners.min() * (1 - 1e-12)),
        coefficient_a=a, coefficient_a_stirling=a_st,
        gap_lower=gap_lower, gap_lower_unapprox=gap_unapprox, gap_lower_kappa_exact=gap_kappa,
        gap_true=gap_true, hopf_margin=hopf_margin, max_numerator=max_num, checks=checks,
    )
