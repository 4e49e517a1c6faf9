"""Microscopic integrators for the noisy harmonic chain.

State is a periodic lattice of N sites with displacements q and momenta p.
The deterministic part is the exact free flight of the harmonic chain
(diagonal in Fourier space); the noise stirs each adjacent momentum triple
(p_{x-1}, p_x, p_{x+1}) by an exact random rotation about the diagonal
(1,1,1), which conserves the triple's momentum and kinetic energy exactly.

Two schemes are provided:

* ``splitting`` -- Strang composition of the exact free flight with a
  sequential sweep of exact noise rotations.  Momentum, total energy and
  sum of squared momenta are conserved pathwise to roundoff; the scheme is
  weakly first-order accurate in dt for ensemble statistics.  No Ito
  correction term appears: the rotations realize the noise generator
  directly, and the momentum-dissipation term of the Ito form is exactly
  the corresponding correction.
* ``euler_maruyama`` -- one explicit Euler-Maruyama step of the written
  Ito system, kept as an independent cross-validation route.  It shares
  the per-site Brownian increment layout with the splitting scheme, so the
  two can be coupled pathwise.

Vectorized internals use site-major arrays: axis 0 is the lattice site,
axis 1 (optional) the trajectory.  Reproducibility protocol: trajectory
``i`` draws from ``PCG64(SeedSequence((seed, i)))``; the ensemble driver
consumes standard normals in fixed blocks of ``NOISE_CHUNK`` steps per
trajectory regardless of checkpoint placement or ensemble size, so a
trajectory's path is bit-identical no matter how the ensemble is batched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .model import BETA, ModelParams, alpha_hat, omega

__all__ = [
    "ChainState",
    "SimConfig",
    "NOISE_CHUNK",
    "make_rng",
    "ensemble_rngs",
    "hamiltonian_energy",
    "total_momentum",
    "max_omega",
    "step_noise",
    "step_hamiltonian",
    "step",
    "step_em",
    "run_ensemble",
    "run_trajectory",
]

NOISE_CHUNK = 16
_INV_SQRT3 = 1.0 / math.sqrt(3.0)

_SCHEMES = ("splitting", "euler_maruyama")


@dataclass(frozen=True)
class ChainState:
    """Lattice configuration: displacements q, momenta p, microscopic time t."""

    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.array(self.q, dtype=float, copy=True)
        p = np.array(self.p, dtype=float, copy=True)
        if q.ndim != 1 or p.shape != q.shape:
            raise ValueError("q and p must be 1-d arrays of equal length")
        n = q.shape[0]
        if n < 8 or n % 2:
            raise ValueError("lattice size must be even and at least 8")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("state entries must be finite")
        if not (self.t >= 0.0 and math.isfinite(self.t)):
            raise ValueError("time must be a nonnegative finite real")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def N(self) -> int:
        return self.q.shape[0]


@dataclass(frozen=True)
class SimConfig:
    """Integration parameters and RNG identity.

    epsilon is the noise strength; epsilon = 0 is accepted here (noise-free
    runs are useful for exactness tests) although production configs keep
    it in (0, 1].  For the euler_maruyama scheme, dt * max_k omega(k) < 0.5
    is additionally required at stepping time.
    """

    epsilon: float
    dt: float
    scheme: str = "splitting"
    seed: int = 0
    trajectory_index: int = 0

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must be in [0, 1]")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError("dt must be a positive finite real")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in 64 bits")
        if int(self.trajectory_index) < 0:
            raise ValueError("trajectory_index must be nonnegative")


def make_rng(seed: int, trajectory_index: int) -> np.random.Generator:
    """The canonical per-trajectory generator: PCG64 keyed by (seed, index)."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((int(seed), int(trajectory_index))))
    )


def ensemble_rngs(cfg: SimConfig, M: int) -> list[np.random.Generator]:
    """Independent streams for trajectories cfg.trajectory_index .. +M-1."""
    base = int(cfg.trajectory_index)
    return [make_rng(cfg.seed, base + m) for m in range(M)]


# ---------------------------------------------------------------------------
# energies and convolutions


def _convolve_table(arr: np.ndarray, table) -> np.ndarray:
    """Periodic convolution (c * arr)_y = sum_z c_z arr_{y-z} along axis 0."""
    out = np.zeros_like(arr)
    for z, v in table:
        if z == 0:
            out += v * arr
        else:
            out += v * np.roll(arr, z, axis=0) + v * np.roll(arr, -z, axis=0)
    return out


def _alpha_pairs(params: ModelParams):
    return params.alpha  # canonical (offset >= 0, value) pairs


_BETA_PAIRS = ((0, BETA[0]), (1, BETA[1]), (2, BETA[2]))


def _hamiltonian(q: np.ndarray, p: np.ndarray, params: ModelParams) -> np.ndarray:
    """H = sum p^2/2 + (1/2) sum_y q_y (alpha * q)_y, summed along axis 0."""
    aq = _convolve_table(q, _alpha_pairs(params))
    return 0.5 * np.sum(p * p, axis=0) + 0.5 * np.sum(q * aq, axis=0)


def hamiltonian_energy(state: ChainState, params: ModelParams) -> float:
    """Total conserved energy of the chain.

    Equals the spectral energy sum_j |psi_hat(k_j)|^2 / (2N) exactly
    (discrete Parseval identity; cross terms cancel by Hermitian symmetry).
    """
    return float(_hamiltonian(state.q, state.p, params))


def total_momentum(state: ChainState) -> float:
    return float(np.sum(state.p))


@lru_cache(maxsize=32)
def _max_omega_cached(omega0: float, alpha: tuple) -> float:
    params = ModelParams(omega0=omega0, alpha=alpha)
    k = np.linspace(-0.5, 0.5, 8193)
    return float(np.max(omega(params, k)))


def max_omega(params: ModelParams) -> float:
    """Maximum of the dispersion relation over the torus (fine-grid scan)."""
    return _max_omega_cached(params.omega0, params.alpha)


# ---------------------------------------------------------------------------
# noise sweep


def _noise_sweep(p: np.ndarray, xi: np.ndarray, angle_scale: float, reverse: bool):
    """Sequential sweep of exact triple rotations, in place.

    p, xi: site-major arrays of shape (N,) or (N, M).  Site x rotates the
    triple (p_{x-1}, p_x, p_{x+1}) about (1,1,1) by angle angle_scale *
    xi[x]; xi[x] stays attached to site x whichever direction the sweep
    runs.  Each rotation conserves the triple's sum and sum of squares up
    to roundoff.
    """
    n = p.shape[0]
    s = angle_scale * xi
    cs = np.cos(s)
    sn = np.sin(s) * _INV_SQRT3
    order = range(n - 1, -1, -1) if reverse else range(n)
    for x in order:
        xm = x - 1 if x > 0 else n - 1
        xp = x + 1 if x < n - 1 else 0
        a = p[xm]
        b = p[x]
        c = p[xp]
        cx = cs[x]
        sx = sn[x]
        m = (a + b + c) / 3.0
        t = m * (1.0 - cx)
        na = a * cx + (b - c) * sx + t
        nb = b * cx + (c - a) * sx + t
        nc = c * cx + (a - b) * sx + t
        p[xm] = na
        p[x] = nb
        p[xp] = nc


def step_noise(
    state: ChainState,
    dt: float,
    cfg: SimConfig,
    rng: np.random.Generator,
    *,
    sweep_reverse: bool = False,
) -> ChainState:
    """One noise sweep of duration dt: exact momentum-triple rotations.

    Sites are visited in the fixed order 0..N-1 (reversed when
    sweep_reverse is set; drivers alternate parity between steps to cancel
    the leading-order sweep bias).  Draws N standard normals from rng even
    when epsilon = 0, so coupled comparisons consume identical streams.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    xi = rng.standard_normal(state.N)
    p = state.p.copy()
    _noise_sweep(p, xi, math.sqrt(3.0 * cfg.epsilon * dt), sweep_reverse)
    return ChainState(q=state.q, p=p, t=state.t + 0.0)


# ---------------------------------------------------------------------------
# free flight


@lru_cache(maxsize=64)
def _flight_coeffs(omega0: float, alpha: tuple, n: int, dt: float):
    """Per-mode rotation coefficients of the exact free flight on rfft modes.

    Returns (c, sw, ws) with c = cos(w dt), sw = sin(w dt)/w (-> dt at
    w=0, the unpinned zero mode's exact linear flow), ws = w sin(w dt).
    """
    params = ModelParams(omega0=omega0, alpha=alpha)
    kf = np.arange(n // 2 + 1) / n
    w = np.asarray(omega(params, kf), dtype=float)
    c = np.cos(w * dt)
    s = np.sin(w * dt)
    zero = w == 0.0
    wsafe = np.where(zero, 1.0, w)
    sw = np.where(zero, dt, s / wsafe)
    ws = w * s
    return c, sw, ws


def _free_flight(q: np.ndarray, p: np.ndarray, coeffs) -> tuple[np.ndarray, np.ndarray]:
    """Exact harmonic flow, site-major arrays (N,) or (N, M)."""
    c, sw, ws = coeffs
    n = 2 * (c.shape[0] - 1)
    if q.ndim == 2:
        c = c[:, None]
        sw = sw[:, None]
        ws = ws[:, None]
    qh = np.fft.rfft(q, axis=0)
    ph = np.fft.rfft(p, axis=0)
    qh2 = qh * c + ph * sw
    ph2 = ph * c - qh * ws
    return np.fft.irfft(qh2, n=n, axis=0), np.fft.irfft(ph2, n=n, axis=0)


def step_hamiltonian(state: ChainState, dt: float, params: ModelParams) -> ChainState:
    """Exact free flight of duration dt (dt = 0 allowed: identity).

    Diagonal in Fourier space: each mode (q_hat, p_hat) rotates with
    frequency omega(k_j); the unpinned zero mode follows its exact linear
    flow (p_hat(0) constant, q_hat(0) advancing).  Conserves H to roundoff.
    """
    if dt < 0.0:
        raise ValueError("dt must be nonnegative")
    if dt == 0.0:
        return state
    coeffs = _flight_coeffs(params.omega0, params.alpha, state.N, float(dt))
    q, p = _free_flight(state.q, state.p, coeffs)
    return ChainState(q=q, p=p, t=state.t + dt)


def step(
    state: ChainState,
    dt: float,
    cfg: SimConfig,
    params: ModelParams,
    rng: np.random.Generator,
    *,
    sweep_reverse: bool = False,
) -> ChainState:
    """One Strang step: half flight, noise sweep, half flight."""
    if cfg.scheme != "splitting":
        raise ValueError("step() requires scheme='splitting'")
    mid = step_hamiltonian(state, dt / 2.0, params)
    stirred = step_noise(mid, dt, cfg, rng, sweep_reverse=sweep_reverse)
    out = step_hamiltonian(stirred, dt / 2.0, params)
    return ChainState(q=out.q, p=out.p, t=state.t + dt)


# ---------------------------------------------------------------------------
# Euler-Maruyama scheme


def _em_step(
    q: np.ndarray,
    p: np.ndarray,
    dW: np.ndarray,
    dt: float,
    eps: float,
    params: ModelParams,
) -> tuple[np.ndarray, np.ndarray]:
    """One explicit EM step of the Ito system, site-major arrays.

    The per-site noise increment for p_y collects the three rotation
    generators touching site y; each generator's coefficients sum to zero
    over y, so total momentum is conserved increment by increment.
    """
    aq = _convolve_table(q, _alpha_pairs(params))
    bp = _convolve_table(p, _BETA_PAIRS)
    pm1 = np.roll(p, 1, axis=0)   # p_{y-1}
    pm2 = np.roll(p, 2, axis=0)   # p_{y-2}
    pp1 = np.roll(p, -1, axis=0)  # p_{y+1}
    pp2 = np.roll(p, -2, axis=0)  # p_{y+2}
    noise = (
        (pm2 - pm1) * np.roll(dW, 1, axis=0)
        + (pp1 - pm1) * dW
        + (pp1 - pp2) * np.roll(dW, -1, axis=0)
    )
    q2 = q + p * dt
    p2 = p - (aq + 0.5 * eps * bp) * dt + math.sqrt(eps) * noise
    return q2, p2


def _check_em_stability(cfg: SimConfig, params: ModelParams):
    if cfg.dt * max_omega(params) >= 0.5:
        raise ValueError(
            "euler_maruyama requires dt * max omega(k) < 0.5; "
            f"got {cfg.dt * max_omega(params):.3g}"
        )


def step_em(
    state: ChainState,
    dt: float,
    cfg: SimConfig,
    params: ModelParams,
    rng: np.random.Generator,
) -> ChainState:
    """One Euler-Maruyama step of the written Ito system.

    Aborts with RuntimeError when the energy grows more than tenfold in a
    single step (the divergence detector for an oversized dt).
    """
    if cfg.scheme != "euler_maruyama":
        raise ValueError("step_em() requires scheme='euler_maruyama'")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    _check_em_stability(cfg, params)
    xi = rng.standard_normal(state.N)
    h0 = _hamiltonian(state.q, state.p, params)
    q2, p2 = _em_step(state.q, state.p, xi * math.sqrt(dt), dt, cfg.epsilon, params)
    h1 = _hamiltonian(q2, p2, params)
    if not np.isfinite(h1) or h1 > 10.0 * h0 + 1e-12:
        raise RuntimeError(
            "euler_maruyama step diverged (energy grew more than tenfold); "
            "reduce dt"
        )
    return ChainState(q=q2, p=p2, t=state.t + dt)


# ---------------------------------------------------------------------------
# ensemble driver


def run_ensemble(
    q0: np.ndarray,
    p0: np.ndarray,
    cfg: SimConfig,
    params: ModelParams,
    checkpoint_steps: Sequence[int],
    rngs: Sequence[np.random.Generator],
    callback: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Advance an ensemble, reporting state at the requested step counts.

    q0, p0: site-major arrays (N, M) -- column m is trajectory m, driven by
    rngs[m].  Normals are drawn per trajectory in fixed NOISE_CHUNK-step
    blocks aligned to this call's step grid, so a trajectory's draw
    sequence depends only on its own generator and the number of steps --
    never on checkpoint placement, the callback, or how many other columns
    run alongside.  (A run split across calls realigns the block grid, so
    exact reproducibility is per call: pass every snapshot time as a
    checkpoint instead of chaining calls.)

    The splitting path fuses adjacent half flights between checkpoints
    (exact at every reported step boundary); sweep parity alternates with
    the global step index.  callback(step, q, p) receives live site-major
    views -- copy anything kept.  Returns the final (q, p).
    """
    q = np.array(q0, dtype=float, copy=True)
    p = np.array(p0, dtype=float, copy=True)
    if q.ndim == 1:
        q = q[:, None]
        p = p[:, None]
    if q.ndim != 2 or p.shape != q.shape:
        raise ValueError("q0 and p0 must be site-major arrays of equal shape")
    n, m_paths = q.shape
    if len(rngs) != m_paths:
        raise ValueError("need exactly one rng per trajectory")
    marks = sorted({int(s) for s in checkpoint_steps})
    if marks and marks[0] < 0:
        raise ValueError("checkpoint steps must be nonnegative")
    total = marks[-1] if marks else 0
    markset = set(marks)
    if callback is not None and 0 in markset:
        callback(0, q, p)
    if total == 0:
        return q, p

    buf = np.empty((NOISE_CHUNK, n, m_paths))

    def chunk_row(g: int) -> np.ndarray:
        r = g % NOISE_CHUNK
        if r == 0:
            for m in range(m_paths):
                buf[:, :, m] = rngs[m].standard_normal((NOISE_CHUNK, n))
        return buf[r]

    if cfg.scheme == "euler_maruyama":
        _check_em_stability(cfg, params)
        sqdt = math.sqrt(cfg.dt)
        h_old = _hamiltonian(q, p, params)
        for g in range(total):
            q2, p2 = _em_step(q, p, chunk_row(g) * sqdt, cfg.dt, cfg.epsilon, params)
            h_new = _hamiltonian(q2, p2, params)
            if not np.all(np.isfinite(h_new)) or np.any(h_new > 10.0 * h_old + 1e-12):
                raise RuntimeError(
                    "euler_maruyama step diverged (energy grew more than "
                    "tenfold); reduce dt"
                )
            q, p, h_old = q2, p2, h_new
            if callback is not None and (g + 1) in markset:
                callback(g + 1, q, p)
        return q, p

    half = _flight_coeffs(params.omega0, params.alpha, n, cfg.dt / 2.0)
    full = _flight_coeffs(params.omega0, params.alpha, n, float(cfg.dt))
    scale = math.sqrt(3.0 * cfg.epsilon * cfg.dt)
    at_boundary = True
    for g in range(total):
        q, p = _free_flight(q, p, half if at_boundary else full)
        at_boundary = False
        _noise_sweep(p, chunk_row(g), scale, reverse=bool(g & 1))
        if (g + 1) in markset or (g + 1) == total:
            q, p = _free_flight(q, p, half)
            at_boundary = True
            if callback is not None and (g + 1) in markset:
                callback(g + 1, q, p)
    return q, p


def run_trajectory(
    state: ChainState, cfg: SimConfig, params: ModelParams, n_steps: int
) -> ChainState:
    """Advance a single trajectory n_steps with the canonical stream protocol."""
    rng = make_rng(cfg.seed, cfg.trajectory_index)
    q, p = run_ensemble(state.q, state.p, cfg, params, [n_steps], [rng])
    return ChainState(q=q[:, 0], p=p[:, 0], t=state.t + n_steps * cfg.dt)
