"""Generalized k-body Ising instances and transverse-field Hamiltonians.

Basis convention: bit ``i`` of a basis index ``b`` encodes spin ``i``; bit value
0 is ``s_i = +1`` and bit value 1 is ``s_i = -1``.  The classical energy is

    E(s) = -sum_terms J * prod_{i in sites} s_i

and the total Hamiltonian is ``H = diag(E) - gamma * D`` where ``D`` is the
driver generator: ``sum_i X_i`` (transverse field) or
``sum_i X_i + sum_{i<j} X_i X_j`` (transverse field plus pairwise).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, DimensionError, ParseError, StructureError

DENSE_LIMIT = 2**14
MATRIX_FREE_LIMIT = 2**22


class DriverKind(str, enum.Enum):
    TRANSVERSE = "transverse"
    PAIRWISE = "pairwise"

    def n_generator_terms(self, n_sites: int) -> int:
        """Number of unit-coefficient off-diagonal terms in the generator."""
        if self is DriverKind.TRANSVERSE:
            return n_sites
        return n_sites + n_sites * (n_sites - 1) // 2

    @classmethod
    def parse(cls, value) -> "DriverKind":
        if isinstance(value, cls):
            return value
        aliases = {"transverse": cls.TRANSVERSE, "tf": cls.TRANSVERSE,
                   "pairwise": cls.PAIRWISE, "extended": cls.PAIRWISE}
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise ValueError(f"unknown driver kind {value!r}") from None


@dataclass(frozen=True)
class Term:
    coefficient: float
    sites: tuple[int, ...]

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        if not sites:
            raise StructureError("term needs at least one site")
        if len(set(sites)) != len(sites):
            raise StructureError(f"duplicate site in term {sites}")
        object.__setattr__(self, "sites", tuple(sorted(sites)))
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def order(self) -> int:
        return len(self.sites)

    @property
    def mask(self) -> int:
        m = 0
        for s in self.sites:
            m |= 1 << s
        return m


@dataclass(frozen=True)
class IsingInstance:
    n_sites: int
    terms: tuple[Term, ...]

    def __post_init__(self):
        if int(self.n_sites) < 1:
            raise StructureError("n_sites must be >= 1")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        terms = tuple(t if isinstance(t, Term) else Term(*t) for t in self.terms)
        if not terms:
            raise StructureError("instance needs at least one term")
        for t in terms:
            if t.sites[-1] >= self.n_sites or t.sites[0] < 0:
                raise StructureError(f"site index out of range [0, {self.n_sites}) in {t.sites}")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def energy(self, spins: Sequence[int]) -> float:
        """Energy of one configuration given as a +1/-1 sequence."""
        if len(spins) != self.n_sites:
            raise DimensionError(f"expected {self.n_sites} spins, got {len(spins)}")
        total = 0.0
        for t in self.terms:
            prod = 1
            for s in t.sites:
                prod *= spins[s]
            total -= t.coefficient * prod
        return total

    def to_text(self) -> str:
        lines = [f"n {self.n_sites}"]
        for t in self.terms:
            lines.append("term " + " ".join([repr(t.coefficient)] + [str(s) for s in t.sites]))
        return "\n".join(lines) + "\n"


def spin_to_index(spins: Sequence[int]) -> int:
    return sum(1 << i for i, s in enumerate(spins) if s < 0)


def index_to_spins(b: int, n_sites: int) -> list[int]:
    return [1 - 2 * ((b >> i) & 1) for i in range(n_sites)]


def parse_instance(text: str) -> IsingInstance:
    """Parse the ``n <N>`` / ``term <J> <site>...`` text format.

    Lines starting with ``#`` and blank lines are ignored.
    """
    n_sites = None
    raw_terms: list[tuple[int, float, list[int]]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        key = fields[0]
        if key == "n":
            if len(fields) != 2:
                raise ParseError("expected 'n <N>'", lineno)
            if n_sites is not None:
                raise ParseError("duplicate 'n' line", lineno)
            try:
                n_sites = int(fields[1])
            except ValueError:
                raise ParseError(f"bad site count {fields[1]!r}", lineno) from None
            if n_sites < 1:
                raise ParseError("site count must be >= 1", lineno)
        elif key == "term":
            if len(fields) < 3:
                raise ParseError("expected 'term <J> <site> [<site> ...]'", lineno)
            try:
                coeff = float(fields[1])
            except ValueError:
                raise ParseError(f"bad coefficient {fields[1]!r}", lineno) from None
            if not math.isfinite(coeff):
                raise ParseError("coefficient must be finite", lineno)
            try:
                sites = [int(s) for s in fields[2:]]
            except ValueError:
                raise ParseError("site indices must be integers", lineno) from None
            if len(set(sites)) != len(sites):
                raise ParseError(f"duplicate site in term {sites}", lineno)
            raw_terms.append((lineno, coeff, sites))
        else:
            raise ParseError(f"unknown directive {key!r}", lineno)
    if n_sites is None:
        raise StructureError("missing 'n <N>' line")
    if not raw_terms:
        raise StructureError("instance has no terms")
    terms = []
    for lineno, coeff, sites in raw_terms:
        if min(sites) < 0 or max(sites) >= n_sites:
            raise ParseError(f"site index out of range [0, {n_sites})", lineno)
        terms.append(Term(coeff, tuple(sites)))
    return IsingInstance(n_sites, tuple(terms))


def random_instance(n_sites: int, rng: np.random.Generator,
                    orders: Iterable[int] = (1, 2)) -> IsingInstance:
    """All k-body terms for each k in ``orders``, couplings uniform in [-1, 1]."""
    terms = []
    for k in orders:
        if k > n_sites:
            continue
        for sites in combinations(range(n_sites), k):
            terms.append(Term(rng.uniform(-1.0, 1.0), sites))
    return IsingInstance(n_sites, tuple(terms))


def _check_dim(n_sites: int, limit: int, what: str) -> int:
    dim = 1 << n_sites
    if dim > limit:
        raise CapacityError(f"{what}: 2^{n_sites} = {dim} states exceeds limit {limit}")
    return dim


def potential_diagonal(inst: IsingInstance, limit: int = MATRIX_FREE_LIMIT) -> np.ndarray:
    """Classical energy of every basis state, via parity of masked indices."""
    dim = _check_dim(inst.n_sites, limit, "potential_diagonal")
    idx = np.arange(dim, dtype=np.uint64)
    diag = np.zeros(dim)
    for t in inst.terms:
        parity = np.bitwise_count(idx & np.uint64(t.mask)) & 1
        diag -= t.coefficient * (1.0 - 2.0 * parity)
    return diag


def _flip(v: np.ndarray, site: int) -> np.ndarray:
    # reshaping to (hi, 2, lo) puts bit `site` on the middle axis
    return v.reshape(-1, 2, 1 << site)[:, ::-1, :].reshape(v.shape)


def apply_driver(n_sites: int, driver: DriverKind, v: np.ndarray) -> np.ndarray:
    """Action of the driver generator ``D`` (unit coefficients, no sign)."""
    out = np.zeros_like(v)
    for i in range(n_sites):
        out += _flip(v, i)
    if driver is DriverKind.PAIRWISE:
        # sum_{i<j} X_i X_j = ((sum_i X_i)^2 - N) / 2
        xx = np.zeros_like(v)
        for i in range(n_sites):
            xx += _flip(out, i)
        out = out + 0.5 * (xx - n_sites * v)
    return out


@dataclass(frozen=True)
class HamiltonianView:
    """``H = diag(potential_diag) - gamma * D_driver``; immutable."""

    potential_diag: np.ndarray = field(repr=False)
    driver: DriverKind
    gamma: float
    n_sites: int = -1

    def __post_init__(self):
        diag = np.array(self.potential_diag, dtype=float)
        diag.setflags(write=False)
        n = int(round(math.log2(diag.size))) if diag.size else -1
        if diag.ndim != 1 or diag.size < 2 or (1 << n) != diag.size:
            raise DimensionError("potential_diag length must be a power of two >= 2")
        if self.gamma < 0 or not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite and nonnegative")
        object.__setattr__(self, "potential_diag", diag)
        object.__setattr__(self, "n_sites", n)
        object.__setattr__(self, "driver", DriverKind.parse(self.driver))
        object.__setattr__(self, "gamma", float(self.gamma))

    @classmethod
    def from_instance(cls, inst: IsingInstance, driver=DriverKind.TRANSVERSE,
                      gamma: float = 0.0, limit: int = MATRIX_FREE_LIMIT) -> "HamiltonianView":
        return cls(potential_diagonal(inst, limit), DriverKind.parse(driver), gamma)

    @property
    def dim(self) -> int:
        return self.potential_diag.size

    def with_gamma(self, gamma: float) -> "HamiltonianView":
        return HamiltonianView(self.potential_diag, self.driver, gamma)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return apply_hamiltonian(self, v)

    def dense(self, limit: int = DENSE_LIMIT) -> np.ndarray:
        return materialize_dense(self, limit)


def apply_hamiltonian(h: HamiltonianView, v: np.ndarray) -> np.ndarray:
    """``H v`` without building the matrix; O(N 2^N) per call."""
    v = np.asarray(v)
    if v.shape != (h.dim,):
        raise DimensionError(f"vector shape {v.shape} does not match dimension {h.dim}")
    out = h.potential_diag * v
    if h.gamma != 0.0:
        out = out - h.gamma * apply_driver(h.n_sites, h.driver, v)
    return out


def driver_dense(n_sites: int, driver: DriverKind, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense 0/1 matrix of the driver generator, built by explicit bit flips."""
    dim = _check_dim(n_sites, limit, "driver_dense")
    idx = np.arange(dim)
    d = np.zeros((dim, dim))
    for i in range(n_sites):
        d[idx, idx ^ (1 << i)] = 1.0
    if DriverKind.parse(driver) is DriverKind.PAIRWISE:
        for i, j in combinations(range(n_sites), 2):
            d[idx, idx ^ (1 << i) ^ (1 << j)] = 1.0
    return d


def materialize_dense(h: HamiltonianView, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense real symmetric matrix of ``H``."""
    mat = -h.gamma * driver_dense(h.n_sites, h.driver, limit)
    mat[np.diag_indices(h.dim)] = h.potential_diag
    return mat
