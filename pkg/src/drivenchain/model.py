"""Model parameters, excitation-sector bases, and Hamiltonian assembly.

Two lattice models share one interface:

* ``xxz`` — spin-1/2 ferromagnetic XXZ chain. The system Hamiltonian is
  -J H = -sum_n [ (J/2)(s+_n s-_{n+1} + h.c.) + (J Delta/4) sz_n sz_{n+1} ],
  restricted to the one- or two-flip sector. Sites are labelled 1..N.
* ``hubbard2`` — one up and one down fermion on a chain, hopping amplitude
  J/2 per species (single-particle band -J cos k, mirroring the magnon band)
  and on-site interaction U = J*Delta on double occupancy. Attractive pairing
  corresponds to Delta < 0.

Energy references: the two-excitation sector is measured from the fully
aligned state, so adjacent flips sit at J*Delta and separated bulk flips at
2 J*Delta. The one-flip sector absorbs the uniform Ising background of a
single bulk flip into its zero so the band reads -J cos k; open chain ends
keep their physical -J*Delta/2 wells relative to that reference.

The drive B sin(omega t) couples to a linear tilt. Within a sector only the
configuration-dependent part matters (the rest is a global phase); it is
-n per flip / particle position, so single hops change the drive eigenvalue
by exactly +-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp

BOUNDARIES = ("open", "periodic")
KINDS = ("xxz", "hubbard2")

# two-excitation sectors at least this large are assembled sparse by default
SPARSE_DIM_DEFAULT = 435  # = dim(N=30, two flips)


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the driven chain (hbar = 1).

    J is the exchange/tunneling energy, Delta the dimensionless anisotropy
    (U = J*Delta for hubbard2, sign allowed there), B and omega the drive
    amplitude (energy) and angular frequency. The scaled drive parameters
    J' = J/omega and B' = B/omega are derived properties, never stored.
    """

    J: float
    Delta: float
    B: float
    omega: float
    N: int
    boundary: str = "open"
    kind: str = "xxz"

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "xxz" and self.Delta < 0:
            raise ValueError("xxz requires Delta >= 0 (hubbard2 admits signed U)")

    @property
    def Jp(self) -> float:
        """Scaled exchange J' = J/omega."""
        return self.J / self.omega

    @property
    def Bp(self) -> float:
        """Scaled drive amplitude B' = B/omega."""
        return self.B / self.omega

    @property
    def U(self) -> float:
        """Interaction energy scale J*Delta."""
        return self.J * self.Delta

    @property
    def period(self) -> float:
        """Drive period T = 2 pi / omega (physical time units)."""
        return 2.0 * np.pi / self.omega


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Dense indexing of the configurations of one excitation sector.

    labels[i] is the 1-based site tuple of configuration i: (n,) for a single
    flip, (n1, n2) with n1 < n2 for two flips, (n_up, n_dn) for hubbard2.
    """

    N: int
    excitations: int
    kind: str
    boundary: str
    labels: tuple = field(repr=False)
    _index: dict = field(repr=False)

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def index_of(self, sites) -> int:
        return self._index[tuple(sites)]

    def sites_of(self, i) -> tuple:
        return self.labels[i]

    def paired_indices(self) -> np.ndarray:
        """Indices of the pair-carrying configurations.

        xxz: adjacent flips |n, n+1> (plus the wrap pair on a ring);
        hubbard2: doubly occupied sites |n, n>.
        """
        if self.excitations != 2:
            raise ValueError("paired_indices needs a two-excitation basis")
        if self.kind == "hubbard2":
            return np.array([self._index[(n, n)] for n in range(1, self.N + 1)])
        pairs = [(n, n + 1) for n in range(1, self.N)]
        if self.boundary == "periodic":
            pairs.append((1, self.N))
        return np.array([self._index[p] for p in pairs])

    def occupancy(self) -> sp.csr_matrix:
        """Sparse (N x dimension) site-occupation map; row n-1 marks site n.

        site_density(state) = occupancy @ |amplitudes|^2.
        """
        rows, cols = [], []
        for i, lab in enumerate(self.labels):
            for n in lab:
                rows.append(n - 1)
                cols.append(i)
        data = np.ones(len(rows))
        return sp.csr_matrix((data, (rows, cols)), shape=(self.N, self.dimension))


def build_basis(params: ModelParams, excitations: int) -> SectorBasis:
    """Enumerate the sector configurations and their index maps."""
    N = params.N
    if params.kind == "hubbard2":
        if excitations != 2:
            raise ValueError("hubbard2 supports only the two-particle sector "
                             "(one up and one down fermion)")
        labels = tuple((nu, nd) for nu in range(1, N + 1) for nd in range(1, N + 1))
    elif excitations == 1:
        labels = tuple((n,) for n in range(1, N + 1))
    elif excitations == 2:
        labels = tuple(combinations(range(1, N + 1), 2))
    else:
        raise ValueError(f"unsupported excitation count {excitations!r} (must be 1 or 2)")
    index = {lab: i for i, lab in enumerate(labels)}
    return SectorBasis(N=N, excitations=excitations, kind=params.kind,
                       boundary=params.boundary, labels=labels, _index=index)


@dataclass
class State:
    """Unit-norm complex amplitude vector over a SectorBasis."""

    basis: SectorBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dimension,):
            raise ValueError(f"amplitude vector has shape {amps.shape}, "
                             f"basis dimension is {self.basis.dimension}")
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise ValueError("cannot normalize a zero state")
        self.amplitudes = amps / nrm

    @classmethod
    def from_configuration(cls, basis: SectorBasis, sites) -> "State":
        """Basis state with the excitations at the given 1-based sites."""
        amps = np.zeros(basis.dimension, dtype=complex)
        amps[basis.index_of(tuple(sorted(sites)) if basis.kind == "xxz" else tuple(sites))] = 1.0
        return cls(basis, amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "State":
        return State(self.basis, self.amplitudes.copy())


def _check_consistent(params: ModelParams, basis: SectorBasis):
    if basis.N != params.N or basis.kind != params.kind or basis.boundary != params.boundary:
        raise ValueError("basis was built for different model parameters")


def _bonds(N, boundary):
    bonds = [(n, n + 1) for n in range(1, N)]
    if boundary == "periodic":
        bonds.append((N, 1))
    return bonds


def _neighbors(n, N, boundary):
    for m in (n - 1, n + 1):
        if boundary == "periodic":
            yield (m - 1) % N + 1
        elif 1 <= m <= N:
            yield m


def _static_diagonal(params: ModelParams, basis: SectorBasis) -> np.ndarray:
    if params.kind == "hubbard2":
        return np.array([params.U if nu == nd else 0.0 for nu, nd in basis.labels])
    bonds = _bonds(params.N, params.boundary)
    broken_cost = 0.5 * params.U  # each misaligned bond, relative to aligned
    diag = np.empty(basis.dimension)
    for i, lab in enumerate(basis.labels):
        occ = set(lab)
        diag[i] = broken_cost * sum((a in occ) != (b in occ) for a, b in bonds)
    if basis.excitations == 1:
        diag -= params.U  # bulk single-flip reference; band reads -J cos k
    return diag


def _hops(params: ModelParams, basis: SectorBasis):
    """Yield each hopping matrix element once as (i, j, amplitude)."""
    N = params.N
    amp = -0.5 * params.J
    if params.kind == "xxz":
        for i, lab in enumerate(basis.labels):
            occ = set(lab)
            for src in lab:
                for dst in _neighbors(src, N, params.boundary):
                    if dst in occ:
                        continue
                    j = basis.index_of(tuple(sorted(occ.symmetric_difference({src, dst}))))
                    if j > i:
                        yield i, j, amp
    else:  # hubbard2: each species hops independently
        for i, (nu, nd) in enumerate(basis.labels):
            for dst in _neighbors(nu, N, params.boundary):
                j = basis.index_of((dst, nd))
                if j > i:
                    yield i, j, amp
            for dst in _neighbors(nd, N, params.boundary):
                j = basis.index_of((nu, dst))
                if j > i:
                    yield i, j, amp


def tilt_split(params: ModelParams, basis: SectorBasis, sparse=None):
    """Static Hamiltonian split as (diagonal, raising-hops) for the propagator.

    Returns (diag, hop) with H_static = diag(diag) + hop + hop^dagger where
    every entry of `hop` raises the drive eigenvalue by exactly +1. That holds
    for open chains; on a ring the wrap hop jumps the tilt by N-1, so driven
    propagation is restricted to open boundaries.
    """
    _check_consistent(params, basis)
    drive = drive_diagonal(params, basis)
    dim = basis.dimension
    if sparse is None:
        sparse = dim >= SPARSE_DIM_DEFAULT
    rows, cols, vals = [], [], []
    for i, j, a in _hops(params, basis):
        dd = drive[i] - drive[j]
        if dd == 1.0:
            rows.append(i)
            cols.append(j)
        elif dd == -1.0:
            rows.append(j)
            cols.append(i)
        else:
            raise ValueError(
                "tilted propagation needs hops that change the drive eigenvalue "
                "by exactly 1; use an open chain (a linear tilt is discontinuous "
                "across the wrap bond of a ring)")
        vals.append(a)
    hop = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
    if not sparse:
        hop = hop.toarray()
    return _static_diagonal(params, basis), hop


def static_hamiltonian(params: ModelParams, basis: SectorBasis, sparse=None):
    """Undriven sector Hamiltonian (csr matrix for large sectors, else dense)."""
    _check_consistent(params, basis)
    dim = basis.dimension
    if sparse is None:
        sparse = dim >= SPARSE_DIM_DEFAULT
    rows, cols, vals = [], [], []
    for i, j, a in _hops(params, basis):
        rows += [i, j]
        cols += [j, i]
        vals += [a, a]
    H = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
    H = H + sp.diags(_static_diagonal(params, basis).astype(complex))
    return H.tocsr() if sparse else H.toarray()


def drive_diagonal(params: ModelParams, basis: SectorBasis) -> np.ndarray:
    """Per-configuration drive eigenvalue, constant offset dropped.

    The full driven Hamiltonian is H(t) = H_static + B sin(omega t) diag(this).
    One value per configuration: -sum of the occupied 1-based sites. Shifting
    all entries by a constant is a global phase and changes no observable.
    """
    _check_consistent(params, basis)
    return np.array([-float(sum(lab)) for lab in basis.labels])


def hamiltonian_at(params: ModelParams, basis: SectorBasis, t: float, sparse=None):
    """Driven Hamiltonian H(t) = H_static + B sin(omega t) * diag(drive)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    H = static_hamiltonian(params, basis, sparse=sparse)
    d = (params.B * np.sin(params.omega * t)) * drive_diagonal(params, basis)
    if sp.issparse(H):
        return (H + sp.diags(d.astype(complex))).tocsr()
    return H + np.diag(d.astype(complex))
