"""Linear phonon-Boltzmann solver on the torus.

The mode-energy profile E(k) evolves by the linear scattering equation

    d/dt E(k) = (L E)(k) = integral R(k,k') [E(k') - E(k)] dk',

discretized on a uniform K-node torus grid with midpoint quadrature.  The
kernel is a trigonometric polynomial, so the quadrature is exact for
moderate K and the kernel identity integral R(k,.) = beta_hat(k)/2 holds
to roundoff; using the closed-form beta_hat for the loss term makes the
generator annihilate constants exactly and conserve mass to roundoff.

The generator is a symmetric dense matrix (R is symmetric and the grid is
uniform), so an eigendecomposition gives an exact-propagator oracle and
closed-form time dependence for the scattering rate

    rate(t, k) = integral R(k,k') E(t,k') dk',

which the Ornstein-Uhlenbeck samplers consume as their noise intensity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .model import ModelParams, R_kernel, beta_hat, midpoint_nodes

__all__ = [
    "KineticState",
    "mass",
    "apply_L",
    "evolve",
    "evolve_expm",
    "scattering_rate",
    "rate_function",
    "BETA_HAT_MAX",
]

BETA_HAT_MAX = 9.0  # global maximum of beta_hat over the torus
_NEG_TOL = 1e-12


@dataclass(frozen=True)
class KineticState:
    """Nonnegative energy profile on a uniform torus grid with weights 1/K.

    k defaults to the K midpoint nodes; any uniform grid (for instance the
    chain's shifted FFT grid) is accepted, since the quadrature only needs
    uniform weights.
    """

    values: np.ndarray
    k: np.ndarray | None = None
    t: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 1 or v.shape[0] < 8:
            raise ValueError("values must be a 1-d vector on at least 8 nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        if np.any(v < -_NEG_TOL):
            raise ValueError(
                f"values must be nonnegative (min {v.min():.3e}); "
                "reduce the time step"
            )
        v[v < 0.0] = 0.0
        grid = midpoint_nodes(v.shape[0]) if self.k is None else np.array(
            self.k, dtype=float, copy=True
        )
        if grid.shape != v.shape:
            raise ValueError("grid and values must have equal length")
        spacing = np.diff(grid)
        if not (np.all(np.abs(spacing - 1.0 / v.shape[0]) < 1e-12)
                and -0.5 - 1e-12 <= grid[0] < -0.5 + 1.0 / v.shape[0]):
            raise ValueError("grid must be uniform with spacing 1/K on [-1/2, 1/2)")
        if not (self.t >= 0.0 and math.isfinite(self.t)):
            raise ValueError("t must be a nonnegative finite real")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "k", grid)

    @property
    def K(self) -> int:
        return self.values.shape[0]


def mass(state: KineticState) -> float:
    """Quadrature mass sum_j E(k_j) / K, the conserved total."""
    return float(state.values.mean())


def _generator(state: KineticState, params: ModelParams):
    """Dense symmetric generator: gain R/K minus closed-form loss diagonal."""
    k = state.k
    gain = R_kernel(k[:, None], k[None, :]) / state.K
    loss = 0.5 * np.asarray(beta_hat(params, k), dtype=float)
    return gain, loss


def apply_L(state: KineticState, params: ModelParams) -> np.ndarray:
    """One application of the scattering generator to the profile."""
    gain, loss = _generator(state, params)
    return gain @ state.values - loss * state.values


def evolve(
    state: KineticState,
    t: float,
    dt: float | None = None,
    params: ModelParams = ModelParams(),
) -> KineticState:
    """Advance the profile by duration t with fixed-step RK4.

    Default dt = 0.1 / max beta_hat; any dt <= 1 / max beta_hat is
    accepted (positivity of the discrete flow).  The final step is
    shortened to land on t exactly.
    """
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if dt is None:
        dt = 0.1 / BETA_HAT_MAX
    if not 0.0 < dt <= 1.0 / BETA_HAT_MAX:
        raise ValueError("dt must be in (0, 1/max beta_hat]")
    if t == 0.0:
        return state
    gain, loss = _generator(state, params)

    def rhs(v):
        return gain @ v - loss * v

    v = state.values.copy()
    remaining = float(t)
    while remaining > 0.0:
        h = min(dt, remaining)
        k1 = rhs(v)
        k2 = rhs(v + 0.5 * h * k1)
        k3 = rhs(v + 0.5 * h * k2)
        k4 = rhs(v + h * k3)
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        remaining -= h
        if np.any(v < -_NEG_TOL):
            raise ValueError(
                f"negative energy {v.min():.3e} during evolution; "
                "reduce the time step"
            )
        v[v < 0.0] = 0.0
    return KineticState(values=v, k=state.k, t=state.t + t)


def _eigendecomposition(state: KineticState, params: ModelParams):
    gain, loss = _generator(state, params)
    lam, u = scipy.linalg.eigh(gain - np.diag(loss))
    return lam, u


def evolve_expm(
    state: KineticState,
    times: Sequence[float],
    params: ModelParams = ModelParams(),
) -> list[KineticState]:
    """Exact-propagator oracle via eigendecomposition (dense, K <= 512).

    Returns the profile at each requested duration; independent of any
    time step, this cross-checks the RK4 path.
    """
    if state.K > 512:
        raise ValueError("exact propagator is limited to K <= 512")
    ts = [float(s) for s in times]
    if any(s < 0.0 for s in ts):
        raise ValueError("times must be nonnegative")
    lam, u = _eigendecomposition(state, params)
    c = u.T @ state.values
    out = []
    for s in ts:
        v = u @ (np.exp(lam * s) * c)
        v[(v < 0.0) & (v > -_NEG_TOL)] = 0.0
        out.append(KineticState(values=v, k=state.k, t=state.t + s))
    return out


def scattering_rate(state: KineticState, params: ModelParams) -> np.ndarray:
    """Noise intensity rate(k_j) = (1/K) sum_j' R(k_j, k_j') E(k_j')."""
    gain, _ = _generator(state, params)
    rate = gain @ state.values
    # the kernel is nonnegative; clip quadrature roundoff
    return np.where(rate < 0.0, 0.0, rate)


def rate_function(
    state: KineticState,
    k_targets,
    params: ModelParams = ModelParams(),
) -> Callable[[np.ndarray], np.ndarray]:
    """Closed-form rate(t, k_target) from the eigendecomposition.

    Returns a callable mapping times (scalar or array, durations from
    state.t) to the scattering rate at the requested k values, shape
    times x targets (squeezed on the target axis for a scalar target).
    Exact in time -- the only discretization is the K-node quadrature.
    """
    if state.K > 512:
        raise ValueError("closed-form rate is limited to K <= 512")
    kt = np.atleast_1d(np.asarray(k_targets, dtype=float))
    lam, u = _eigendecomposition(state, params)
    c = u.T @ state.values  # spectral coefficients of E0
    rows = R_kernel(kt[:, None], state.k[None, :]) / state.K  # (targets, K)
    w = rows @ u  # (targets, modes)
    scalar = np.isscalar(k_targets) or np.asarray(k_targets).ndim == 0

    def rate(times):
        ts = np.atleast_1d(np.asarray(times, dtype=float))
        phases = np.exp(np.outer(ts, lam))  # (T, modes)
        vals = phases * c  # (T, modes)
        out = vals @ w.T  # (T, targets)
        out = np.where(out < 0.0, 0.0, out)
        if scalar:
            out = out[:, 0]
        if np.isscalar(times) or np.asarray(times).ndim == 0:
            return out[0]
        return out

    return rate
