"""Classical image dynamics of the driven chain and the closed-form drift laws.

In the large-N limit the driven lattice maps onto the continuum Hamiltonian
H(x, p) = -J' cos p - B' x sin t' (scaled time t' = omega*t, J' = J/omega,
B' = B/omega). Because the drive force is independent of x the momentum
integrates exactly, p(t') = p0 + B'(1 - cos t'), and the drift per period
reduces to a single quadrature. The closed forms evaluated here are the
analytic layer the quantum wavepacket runs are checked against:

    magnon drift   v   = J' J0(B') sin(p0 + B')
    pair drift     v_b = (J'/(2 Delta)) J0(2 B') sin(p0 + 2 B')

both in sites per unit scaled time (displacement per period divided by 2 pi).
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bessel import bessel_j0

TWO_PI = 2.0 * np.pi

_MAX_DT = TWO_PI / 1000.0


@dataclass(frozen=True)
class ClassicalTrajectory:
    """Sampled (t', x, p) of the image Hamiltonian; x, p broadcast over inputs."""

    times: np.ndarray
    x: np.ndarray
    p: np.ndarray
    Jp: object
    Bp: object

    def drift(self):
        """Mean displacement per unit scaled time over the whole trajectory."""
        return (self.x[-1] - self.x[0]) / (self.times[-1] - self.times[0])


def _momentum(Bp, p0, t):
    # Exact: the drive force B' sin t' does not depend on x.
    return p0 + Bp * (1.0 - np.cos(t))


def integrate_image(Jp, Bp, x0, p0, periods=1, dt=TWO_PI / 2000.0, store_every=1):
    """Integrate x' = J' sin p, p' = B' sin t' from (x0, p0) over whole periods.

    Leapfrog with the momentum updated from its closed form at half steps, so
    only the position quadrature carries the O(dt^2) error. Scalar or
    broadcastable array arguments are accepted; trajectories are sampled every
    `store_every` steps (endpoints always included).
    """
    if dt > _MAX_DT * (1 + 1e-12):
        raise ValueError(f"dt must be <= 2*pi/1000, got {dt}")
    Jp, Bp, p0, x0 = (np.asarray(a, dtype=float) for a in (Jp, Bp, p0, x0))
    shape = np.broadcast_shapes(Jp.shape, Bp.shape, p0.shape, x0.shape)
    x = np.broadcast_to(x0, shape).copy()
    nsteps = int(round(periods * TWO_PI / dt))
    h = periods * TWO_PI / nsteps

    times = [0.0]
    xs = [x.copy()]
    ps = [np.broadcast_to(_momentum(Bp, p0, 0.0), x.shape).copy()]
    t = 0.0
    for k in range(nsteps):
        x = x + h * Jp * np.sin(_momentum(Bp, p0, t + 0.5 * h))
        t = (k + 1) * h
        if (k + 1) % store_every == 0 or k + 1 == nsteps:
            times.append(t)
            xs.append(x.copy())
            ps.append(np.broadcast_to(_momentum(Bp, p0, t), x.shape).copy())
    return ClassicalTrajectory(np.array(times), np.array(xs), np.array(ps),
                               Jp=float(Jp) if Jp.ndim == 0 else Jp,
                               Bp=float(Bp) if Bp.ndim == 0 else Bp)


def displacement_per_period(Jp, Bp, p0, periods=1, dt=TWO_PI / 2000.0):
    """Net displacement per period from the numeric integration, / (2 pi).

    Storage-free variant of `integrate_image` for parameter grids; returns the
    drift in the same units as `magnon_velocity`.
    """
    if dt > _MAX_DT * (1 + 1e-12):
        raise ValueError(f"dt must be <= 2*pi/1000, got {dt}")
    Jp, Bp, p0 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (Jp, Bp, p0)))
    nsteps = int(round(periods * TWO_PI / dt))
    h = periods * TWO_PI / nsteps
    disp = np.zeros(Jp.shape)
    for k in range(nsteps):
        disp = disp + h * Jp * np.sin(_momentum(Bp, p0, (k + 0.5) * h))
    return disp / (periods * TWO_PI)


def magnon_velocity(Jp, Bp, p0=0.0):
    """Single-excitation drift J' J0(B') sin(p0 + B'), sites per scaled time."""
    return Jp * bessel_j0(Bp) * np.sin(np.asarray(p0, dtype=float) + Bp)


def bound_velocity(Jp, Delta, Bp, p0=0.0):
    """Bound-pair drift (J'/(2 Delta)) J0(2B') sin(p0 + 2B').

    The pair carries twice the drive coupling, hence the doubled Bessel
    argument and phase offset; requires Delta > 0.
    """
    if np.any(np.asarray(Delta) <= 0):
        raise ValueError("bound_velocity requires Delta > 0")
    return Jp / (2.0 * Delta) * bessel_j0(2.0 * np.asarray(Bp, dtype=float)) * np.sin(
        np.asarray(p0, dtype=float) + 2.0 * np.asarray(Bp, dtype=float))


class VelocityCurve(NamedTuple):
    Bp: np.ndarray
    v_magnon: np.ndarray
    v_bound: np.ndarray


def velocity_curve(Jp, Delta, Bp_grid, p0=0.0):
    """Closed-form magnon and bound-pair drifts on a grid of B' values."""
    Bp = np.asarray(Bp_grid, dtype=float)
    return VelocityCurve(Bp, magnon_velocity(Jp, Bp, p0), bound_velocity(Jp, Delta, Bp, p0))
