"""Ornstein-Uhlenbeck limit processes for single modes and whole fields.

In the weak-noise limit the compensated mode amplitude psi(t, k) solves

    d psi = -(beta_hat(k)/4) psi dt + sqrt(rate(t, k)) dw_k(t),

a time-inhomogeneous complex OU process: exponential damping at rate
beta_hat/4 plus a circularly-symmetric noise whose intensity rate(t, k)
is the scattering rate of the kinetic module.  The explicit solution

    psi(t) = e^{-beta t/4} psi(0)
             + int_0^t e^{-beta (t-s)/4} sqrt(rate(s)) dw(s)

is Gaussian given psi(0), so paths can be sampled exactly on any time
grid: the stochastic convolution over an interval is a centered complex
Gaussian with variance int e^{-beta (t_next - s)/2} rate(s) ds, evaluated
here by composite Simpson quadrature.

Complex Brownian convention: E[w(t) w(s)] = 0 and E[w*(t) w(s)] = min(t,s),
i.e. real and imaginary parts are independent real Brownian motions of
variance t/2 each.

The field sampler drives every mode of a K-node grid independently with
noise variance scaled by K, the discrete stand-in for delta-correlation
in k; its per-mode second moment then follows K times the kinetic energy
profile, matching the chain's E|psi_hat|^2 = K * S normalization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson

from .model import ModelParams, beta_hat
from .wavefield import SpectralField, mode_grid

__all__ = [
    "OUParams",
    "ou_sample_exact",
    "ou_sample_ensemble",
    "ou_second_moment",
    "ou_stationary_sample",
    "ou_field_sample",
]

def _simpson_nodes(delta: float) -> int:
    """Composite-Simpson node count for an interval of length delta.

    64 pair-panels per unit time (floor 32) keeps the relative quadrature
    error of the smooth scattering-rate integrands close to 1e-9.
    """
    return 2 * max(32, int(math.ceil(64.0 * delta))) + 1


@dataclass(frozen=True)
class OUParams:
    """One mode's limit-process data.

    k: the torus point; beta_k: its damping coefficient beta_hat(k);
    rate_fn: noise intensity rate(t) >= 0 (vectorized over t); psi0: the
    initial amplitude.
    """

    k: float
    beta_k: float
    rate_fn: Callable[[np.ndarray], np.ndarray]
    psi0: complex

    def __post_init__(self):
        if not (-0.5 - 1e-12 <= self.k <= 0.5 + 1e-12):
            raise ValueError("k must lie on the torus [-1/2, 1/2]")
        if not (self.beta_k >= 0.0 and math.isfinite(self.beta_k)):
            raise ValueError("beta_k must be a nonnegative finite real")
        if not np.isfinite(self.psi0):
            raise ValueError("psi0 must be finite")


def _check_times(times) -> np.ndarray:
    ts = np.asarray(times, dtype=float)
    if ts.ndim != 1 or ts.shape[0] < 1:
        raise ValueError("times must be a 1-d nonempty array")
    if ts[0] != 0.0:
        raise ValueError("times must start at 0")
    if np.any(np.diff(ts) <= 0.0):
        raise ValueError("times must be strictly increasing")
    return ts


def _interval_variances(beta_k: float, rate_fn, ts: np.ndarray) -> np.ndarray:
    """var_i = int_{t_i}^{t_{i+1}} e^{-beta (t_{i+1}-s)/2} rate(s) ds."""
    out = np.empty(ts.shape[0] - 1)
    for i in range(out.shape[0]):
        s = np.linspace(ts[i], ts[i + 1], _simpson_nodes(ts[i + 1] - ts[i]))
        integrand = np.exp(-0.5 * beta_k * (ts[i + 1] - s)) * np.asarray(
            rate_fn(s), dtype=float
        )
        if np.any(integrand < -1e-12):
            raise ValueError("rate_fn must be nonnegative")
        out[i] = simpson(np.clip(integrand, 0.0, None), x=s)
    return out


def ou_sample_ensemble(
    params: OUParams, times, rng: np.random.Generator, paths: int
) -> np.ndarray:
    """Exact sampling of `paths` independent trajectories, shape (T, paths).

    The interval variances are deterministic, so they are computed once;
    draws are consumed interval by interval (2 normals per path).
    """
    ts = _check_times(times)
    if paths < 1:
        raise ValueError("paths must be positive")
    variances = _interval_variances(params.beta_k, params.rate_fn, ts)
    out = np.empty((ts.shape[0], paths), dtype=complex)
    out[0] = params.psi0
    for i, var in enumerate(variances):
        decay = math.exp(-0.25 * params.beta_k * (ts[i + 1] - ts[i]))
        xi = rng.standard_normal((2, paths))
        g = math.sqrt(max(var, 0.0) / 2.0) * (xi[0] + 1j * xi[1])
        out[i + 1] = decay * out[i] + g
    return out


def ou_sample_exact(params: OUParams, times, rng: np.random.Generator) -> np.ndarray:
    """One exact path of the mode process on the given time grid."""
    return ou_sample_ensemble(params, times, rng, 1)[:, 0]


def ou_second_moment(params: OUParams, t: float) -> float:
    """Closed-form E|psi(t)|^2 by quadrature.

    Equals e^{-beta t/2}|psi0|^2 + int_0^t e^{-beta (t-s)/2} rate(s) ds;
    when psi0 and rate_fn come from one kinetic solve this reproduces the
    kinetic energy profile (Duhamel's formula for the same linear ODE
    d/dt m = -(beta/2) m + rate(t)).
    """
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    base = math.exp(-0.5 * params.beta_k * t) * abs(params.psi0) ** 2
    if t == 0.0:
        return base
    # composite Simpson with resolution matched to the horizon
    s = np.linspace(0.0, t, 2 * max(64, int(math.ceil(128.0 * t))) + 1)
    integrand = np.exp(-0.5 * params.beta_k * (t - s)) * np.asarray(
        params.rate_fn(s), dtype=float
    )
    return base + float(simpson(np.clip(integrand, 0.0, None), x=s))


def ou_stationary_sample(
    params: OUParams, temperature: float, times, rng: np.random.Generator
) -> np.ndarray:
    """Path of the time-homogeneous equilibrium process.

    Damping rate beta_k/4 and constant noise intensity beta_k T / 2; the
    stationary law is a centered complex Gaussian with E|psi|^2 = T.  The
    interval variance has the closed form T (1 - e^{-beta delta/2}), so no
    quadrature is involved.  beta_k = 0 freezes the path at psi0.
    """
    if temperature < 0.0:
        raise ValueError("temperature must be nonnegative")
    ts = _check_times(times)
    out = np.empty(ts.shape[0], dtype=complex)
    out[0] = params.psi0
    for i in range(ts.shape[0] - 1):
        delta = ts[i + 1] - ts[i]
        decay = math.exp(-0.25 * params.beta_k * delta)
        var = temperature * (1.0 - decay * decay)
        xi = rng.standard_normal(2)
        out[i + 1] = decay * out[i] + math.sqrt(var / 2.0) * (xi[0] + 1j * xi[1])
    return out


def ou_field_sample(
    init: SpectralField,
    rate_fn: Callable[[np.ndarray], np.ndarray],
    times,
    rng: np.random.Generator,
    params: ModelParams = ModelParams(),
) -> list[SpectralField]:
    """Exact sampling of the limiting field process on the mode grid.

    rate_fn(times) must return the scattering rate over the field's grid,
    shape (len(times), K) -- the kinetic module's rate_function evaluated
    on mode_grid(K) provides exactly this.  Modes evolve independently;
    the noise variance carries the factor K (discrete delta-correlation),
    so E|psi_j(t)|^2 = K * E_bar(t, k_j).  Returned fields are stamped
    kind="compensated" (the limit process already has the fast rotation
    removed).
    """
    ts = _check_times(times)
    n = init.N
    grid = mode_grid(n)
    beta = np.asarray(beta_hat(params, grid), dtype=float)
    values = init.values.copy()
    out = [
        SpectralField(values=values, kind="compensated", t=float(ts[0]), epsilon=0.0)
    ]
    for i in range(ts.shape[0] - 1):
        t0, t1 = ts[i], ts[i + 1]
        s = np.linspace(t0, t1, _simpson_nodes(t1 - t0))
        rates = np.asarray(rate_fn(s), dtype=float)
        if rates.shape != (s.shape[0], n):
            raise ValueError("rate_fn must return shape (len(times), K)")
        integrand = np.exp(-0.5 * beta[None, :] * (t1 - s)[:, None]) * rates
        var = n * simpson(np.clip(integrand, 0.0, None), x=s, axis=0)
        decay = np.exp(-0.25 * beta * (t1 - t0))
        xi = rng.standard_normal((2, n))
        g = np.sqrt(np.clip(var, 0.0, None) / 2.0) * (xi[0] + 1j * xi[1])
        values = decay * values + g
        out.append(
            SpectralField(values=values, kind="compensated", t=float(t1), epsilon=0.0)
        )
    return out
