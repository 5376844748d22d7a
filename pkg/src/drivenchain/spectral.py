"""Analytic quasiparticle states, dispersion relations, and wavepackets.

For the ferromagnetic XXZ chain the two-excitation eigenstates split into
magnon-like scattering states, E - E0 = J(2 Delta - cos k1 - cos k2), and
bound pairs with E - E0 = J Delta - (J / 2 Delta)(1 + cos K), K = k1 + k2.
For Delta >> 1 the bound pairs live in the nearest-neighbor subspace
{|n, n+1>} with amplitudes ~ e^{iKn}; that subspace projector is what
`bound_fraction` measures (for hubbard2 the paired subspace is double
occupancy instead).
"""

from dataclasses import dataclass

import numpy as np

from .model import SectorBasis, State

_LEAK_TOL = 1e-6


def allowed_momenta(N: int) -> np.ndarray:
    """Momenta 2 pi m / N with m in (-N/2, N/2] (periodic ring)."""
    ms = np.arange(-(N // 2) + 1 if N % 2 == 0 else -(N // 2), N // 2 + 1)
    return 2.0 * np.pi * ms / N


def magnon_energy(J, kappa):
    """Single spin-flip dispersion -J cos(kappa) (relative to the band center)."""
    return -J * np.cos(kappa)


def scattering_energy(J, Delta, kappa1, kappa2):
    """Two independent magnons: J (2 Delta - cos k1 - cos k2), from the aligned state."""
    return J * (2.0 * Delta - np.cos(kappa1) - np.cos(kappa2))


def bound_pair_energy(J, Delta, K):
    """Bound-pair dispersion J Delta - (J / 2 Delta)(1 + cos K), K = k1 + k2.

    Exact for the XXZ two-flip problem as N -> infinity, any Delta > 0.
    """
    if np.any(np.asarray(Delta) <= 0):
        raise ValueError("bound_pair_energy requires Delta > 0")
    return J * Delta - (J / (2.0 * Delta)) * (1.0 + np.cos(K))


def magnon_state(basis: SectorBasis, kappa: float) -> State:
    """Plane-wave spin flip e^{i n kappa} / sqrt(N) over |n>."""
    if basis.excitations != 1 or basis.kind != "xxz":
        raise ValueError("magnon_state needs a one-flip xxz basis")
    n = np.arange(1, basis.N + 1)
    return State(basis, np.exp(1j * kappa * n))


def bound_pair_state_nn(basis: SectorBasis, K: float) -> State:
    """Nearest-neighbor bound-pair ansatz: amplitude e^{iKn} on |n, n+1>.

    On a ring the wrap configuration (1, N) enters as the n = N member; K
    should then be one of the allowed total momenta for an exact translation
    eigenstate.
    """
    if basis.excitations != 2 or basis.kind != "xxz":
        raise ValueError("bound_pair_state_nn needs a two-flip xxz basis")
    amps = np.zeros(basis.dimension, dtype=complex)
    last = basis.N if basis.boundary == "periodic" else basis.N - 1
    for n in range(1, last + 1):
        pair = (n, n + 1) if n < basis.N else (1, basis.N)
        amps[basis.index_of(pair)] = np.exp(1j * K * n)
    return State(basis, amps)


@dataclass(frozen=True)
class GaussianPacketSpec:
    """Gaussian wavepacket envelope exp(-(n - center)^2 / (2 width^2)) e^{i kappa0 n}.

    `width` is the std of the site-space amplitude, so the momentum-space
    amplitude width is exactly 1/width.
    """

    center: float
    width: float
    kappa0: float = 0.0

    def __post_init__(self):
        if self.width < 1.0:
            raise ValueError(f"packet width must be >= 1 site, got {self.width}")


def _envelope(spec: GaussianPacketSpec, n):
    return np.exp(-((n - spec.center) ** 2) / (2.0 * spec.width ** 2)
                  + 1j * spec.kappa0 * n)


def _check_leak(spec: GaussianPacketSpec, N: int):
    # Largest truncated amplitude just outside the chain, relative to the
    # packet norm inside it.
    n = np.arange(1, N + 1)
    inside = np.linalg.norm(_envelope(spec, n))
    edge = max(abs(_envelope(spec, 0)), abs(_envelope(spec, N + 1)))
    if edge / inside > _LEAK_TOL:
        raise ValueError(
            f"packet(center={spec.center}, width={spec.width}) leaks past the "
            f"chain ends (relative amplitude {edge / inside:.2e} > {_LEAK_TOL:g})")


def gaussian_packet(basis: SectorBasis, spec: GaussianPacketSpec,
                    spec2: GaussianPacketSpec | None = None) -> State:
    """Gaussian wavepacket state on the chain.

    One spec builds a single-flip packet. For two-excitation bases give two
    specs: xxz takes the symmetrized product restricted to n1 < n2 and
    renormalized; hubbard2 takes the plain product (up, down distinguishable).
    """
    N = basis.N
    if basis.excitations == 1:
        if spec2 is not None:
            raise ValueError("one-excitation basis takes a single packet spec")
        _check_leak(spec, N)
        return State(basis, _envelope(spec, np.arange(1, N + 1)))
    if spec2 is None:
        raise ValueError("two-excitation basis needs two packet specs")
    _check_leak(spec, N)
    _check_leak(spec2, N)
    labels = np.array(basis.labels)
    a, b = labels[:, 0], labels[:, 1]
    if basis.kind == "xxz":
        amps = (_envelope(spec, a) * _envelope(spec2, b)
                + _envelope(spec, b) * _envelope(spec2, a))
    else:
        amps = _envelope(spec, a) * _envelope(spec2, b)
    return State(basis, amps)


def bound_fraction(state: State) -> tuple[float, float]:
    """(paired, unpaired) probability of a two-excitation state.

    Paired means the nearest-neighbor subspace for xxz (the Delta >> 1 bound
    pairs) and double occupancy for hubbard2.
    """
    p = float(np.sum(np.abs(state.amplitudes[state.basis.paired_indices()]) ** 2))
    return p, 1.0 - p
