"""Dispersion relation, noise spectrum, and scattering kernels.

The microscopic model is a one-dimensional harmonic chain with a finitely
supported, even interaction table ``alpha`` and a fixed conservative
three-site momentum noise.  Everything spectral lives on the unit torus,
parametrized as k in [-1/2, 1/2] with endpoints identified.

Closed forms implemented here:

* dispersion          omega(k)   = sqrt(alpha_hat(k)),
                      default    = sqrt(omega0^2/2 + 2 sin^2(pi k));
* noise spectrum      beta_hat(k) = 8 sin^2(pi k) (1 + 2 cos^2(pi k)),
                      equal to the Fourier sum of the convolved noise
                      coefficients beta = {6, -2, -2, -1, -1};
* mode-coupling amplitude
                      r(k, k') = sin 2pi k + sin 2pi(k-k') + sin 2pi(k'-2k)
                               = 4 sin(pi k) sin(pi(k-k')) sin(pi(2k-k'));
* scattering kernel   R(k, k') = r^2(k, k-k') + r^2(k, k+k')
                               = 16 sin^2(pi k) sin^2(pi k')
                                 [sin^2(pi(k+k')) + sin^2(pi(k-k'))].

The identity beta_hat(k) = 2 * integral of R(k, .) ties the noise spectrum
to the scattering kernel; ``kernel_identity_residual`` checks it on a
quadrature grid (the integrand is a trigonometric polynomial, so a uniform
rule with >= 8 nodes is exact up to roundoff).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

__all__ = [
    "BETA0",
    "BETA",
    "ModelParams",
    "alpha_hat",
    "omega",
    "omega_prime",
    "beta_hat",
    "r_kernel",
    "r_kernel_sum_form",
    "R_kernel",
    "R_kernel_sum_form",
    "kernel_identity_residual",
    "ResonanceScan",
    "resonance_scan",
]

# Seed coefficients of the momentum noise and their discrete Laplacian.
# BETA[y] is the convolution kernel appearing in the effective momentum
# drift; it sums to zero, so the noise conserves total momentum.
BETA0: dict[int, float] = {0: -4.0, 1: -1.0, -1: -1.0}
BETA: dict[int, float] = {0: 6.0, 1: -2.0, -1: -2.0, 2: -1.0, -2: -1.0}


def _laplacian(table: Mapping[int, float]) -> dict[int, float]:
    """Discrete lattice Laplacian of a finitely supported sequence."""
    out: dict[int, float] = {}
    for y, v in table.items():
        out[y] = out.get(y, 0.0) - 2.0 * v
        out[y + 1] = out.get(y + 1, 0.0) + v
        out[y - 1] = out.get(y - 1, 0.0) + v
    return {y: v for y, v in out.items() if v != 0.0}


# Consistency of the stored table with its definition (cheap, import-time).
assert _laplacian(BETA0) == BETA


@dataclass(frozen=True)
class ModelParams:
    """Pinning frequency and interaction table of the chain.

    ``alpha`` maps lattice offsets y >= 0 to coupling coefficients; the
    table is even in y, so only nonnegative offsets are stored.  Accepts a
    mapping with any signs of offsets at construction (conflicting values
    for +/-y are rejected).  The default table is nearest-neighbor:
    alpha_0 = omega0^2/2 + 1, alpha_{+-1} = -1/2.
    """

    omega0: float = 1.0
    alpha: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if not (self.omega0 >= 0.0) or not math.isfinite(self.omega0):
            raise ValueError("omega0 must be a nonnegative finite real")
        raw = self.alpha
        if isinstance(raw, Mapping):
            items = list(raw.items())
        else:
            items = [(int(y), float(v)) for y, v in raw]
        if not items:
            items = [(0, 0.5 * self.omega0**2 + 1.0), (1, -0.5)]
        table: dict[int, float] = {}
        for y, v in items:
            y = int(y)
            v = float(v)
            if not math.isfinite(v):
                raise ValueError("alpha coefficients must be finite")
            ay = abs(y)
            if ay in table and table[ay] != v:
                raise ValueError(
                    f"alpha must be even: conflicting values at offsets +-{ay}"
                )
            table[ay] = v
        canon = tuple(sorted(table.items()))
        object.__setattr__(self, "alpha", canon)

    @property
    def beta0(self) -> dict[int, float]:
        """The fixed seed coefficients of the momentum noise."""
        return dict(BETA0)

    @property
    def pinned(self) -> bool:
        """True when alpha_hat(0) > 0 (the k=0 mode oscillates)."""
        return alpha_hat(self, 0.0) > 1e-12


def alpha_hat(params: ModelParams, k) -> np.ndarray | float:
    """Fourier sum of the interaction table: alpha_hat(k) = sum_y alpha_y e^{-2pi i y k}.

    Real by evenness: alpha_0 + 2 sum_{y>0} alpha_y cos(2 pi y k).
    """
    k = np.asarray(k, dtype=float)
    out = np.zeros_like(k)
    for y, v in params.alpha:
        if y == 0:
            out = out + v
        else:
            out = out + 2.0 * v * np.cos(2.0 * math.pi * y * k)
    return out if out.shape else float(out)


def omega(params: ModelParams, k) -> np.ndarray | float:
    """Dispersion relation omega(k) = sqrt(alpha_hat(k)).

    Raises ValueError if alpha_hat is negative anywhere on the requested
    points (invalid interaction table); values in [-1e-12, 0) are treated
    as roundoff at the unpinned zero mode and clipped to 0.
    """
    ah = np.asarray(alpha_hat(params, k), dtype=float)
    if np.any(ah < -1e-12):
        kbad = np.asarray(k, dtype=float).reshape(-1)[np.argmin(ah)]
        raise ValueError(
            f"model validation: alpha_hat(k) < 0 at k={kbad!r} "
            "(interaction table does not define a dispersion relation)"
        )
    ah = np.clip(ah, 0.0, None)
    out = np.sqrt(ah)
    return out if out.shape else float(out)


def omega_prime(params: ModelParams, k) -> np.ndarray | float:
    """Group velocity omega'(k).

    For a finitely supported table the derivative of alpha_hat is available
    in closed form, so omega' = alpha_hat' / (2 omega) away from zeros of
    omega.  At the unpinned zero mode (alpha_hat(k) = 0) the dispersion has
    a kink and the one-sided limit sqrt(alpha_hat''(k)/2) from k > 0 is
    returned.
    """
    karr = np.asarray(k, dtype=float)
    w = np.asarray(omega(params, karr), dtype=float)
    dah = np.zeros_like(karr)
    d2ah = np.zeros_like(karr)
    for y, v in params.alpha:
        if y == 0:
            continue
        ang = 2.0 * math.pi * y
        dah = dah - 2.0 * v * ang * np.sin(ang * karr)
        d2ah = d2ah - 2.0 * v * ang * ang * np.cos(ang * karr)
    out = np.empty_like(karr)
    deg = w <= 1e-9
    np.divide(dah, 2.0 * w, out=out, where=~deg)
    if np.any(deg):
        # one-sided limit: omega(k) ~ sqrt(alpha_hat''/2) |k - k0| near a zero
        curv = np.clip(d2ah, 0.0, None)
        out[deg] = np.sqrt(curv[deg] / 2.0)
    return out if out.shape else float(out)


def beta_hat(params: ModelParams, k) -> np.ndarray | float:
    """Noise spectral density: beta_hat(k) = 8 sin^2(pi k) (1 + 2 cos^2(pi k)).

    Nonnegative, even, vanishes only at k=0; maximum 9 at cos^2(pi k) = 1/4.
    Agrees with the Fourier sum 6 - 4cos(2 pi k) - 2cos(4 pi k) of the
    convolved noise coefficients (cross-checked in the test suite).
    """
    k = np.asarray(k, dtype=float)
    s2 = np.sin(math.pi * k) ** 2
    c2 = np.cos(math.pi * k) ** 2
    out = 8.0 * s2 * (1.0 + 2.0 * c2)
    return out if out.shape else float(out)


def beta_hat_fourier_sum(k) -> np.ndarray | float:
    """beta_hat via the coefficient table: sum_y beta_y e^{-2 pi i y k}.

    Independent route used to cross-check the closed form.
    """
    k = np.asarray(k, dtype=float)
    out = np.zeros_like(k)
    for y, v in BETA.items():
        out = out + v * np.cos(2.0 * math.pi * y * k)  # table is even
    return out if out.shape else float(out)


def r_kernel(k, kp) -> np.ndarray | float:
    """Mode-coupling amplitude r(k, k'), product form.

    r(k,k') = 4 sin(pi k) sin(pi(k-k')) sin(pi(2k-k')); antisymmetric under
    (k,k') -> (-k,-k') and identically zero when k = 0.
    """
    k = np.asarray(k, dtype=float)
    kp = np.asarray(kp, dtype=float)
    out = (
        4.0
        * np.sin(math.pi * k)
        * np.sin(math.pi * (k - kp))
        * np.sin(math.pi * (2.0 * k - kp))
    )
    return out if out.shape else float(out)


def r_kernel_sum_form(k, kp) -> np.ndarray | float:
    """r(k,k') as the printed sum of sines (equivalent to r_kernel)."""
    k = np.asarray(k, dtype=float)
    kp = np.asarray(kp, dtype=float)
    two_pi = 2.0 * math.pi
    out = (
        np.sin(two_pi * k)
        + np.sin(two_pi * (k - kp))
        + np.sin(two_pi * (kp - 2.0 * k))
    )
    return out if out.shape else float(out)


def R_kernel(k, kp) -> np.ndarray | float:
    """Scattering kernel R(k,k'), closed product form.

    R(k,k') = 16 sin^2(pi k) sin^2(pi k') [sin^2(pi(k+k')) + sin^2(pi(k-k'))];
    symmetric, nonnegative, vanishes on the axes k=0 and k'=0.
    """
    k = np.asarray(k, dtype=float)
    kp = np.asarray(kp, dtype=float)
    s2k = np.sin(math.pi * k) ** 2
    s2kp = np.sin(math.pi * kp) ** 2
    out = 16.0 * s2k * s2kp * (
        np.sin(math.pi * (k + kp)) ** 2 + np.sin(math.pi * (k - kp)) ** 2
    )
    return out if out.shape else float(out)


def R_kernel_sum_form(k, kp) -> np.ndarray | float:
    """R(k,k') as the sum of squared amplitudes r^2(k,k-k') + r^2(k,k+k')."""
    k = np.asarray(k, dtype=float)
    kp = np.asarray(kp, dtype=float)
    out = np.asarray(r_kernel(k, k - kp)) ** 2 + np.asarray(r_kernel(k, k + kp)) ** 2
    return out if out.shape else float(out)


def midpoint_nodes(K: int) -> np.ndarray:
    """K uniform midpoint quadrature nodes on [-1/2, 1/2], avoiding k = 0."""
    if K < 1:
        raise ValueError("K must be positive")
    return -0.5 + (np.arange(K) + 0.5) / K


def kernel_identity_residual(params: ModelParams, K: int) -> float:
    """Max-norm residual of the identity beta_hat(k) = 2 * integral R(k,.) dk'.

    The integral is a uniform midpoint quadrature with K nodes; since
    R(k,.) is a trigonometric polynomial of low degree the rule is exact
    (up to roundoff) for K >= 8, so the residual measures only the
    correctness of the closed forms.
    """
    if K < 64:
        raise ValueError("K must be at least 64 quadrature nodes")
    nodes = midpoint_nodes(K)
    Rmat = R_kernel(nodes[:, None], nodes[None, :])
    quad = 2.0 * Rmat.sum(axis=1) / K
    return float(np.max(np.abs(quad - beta_hat(params, nodes))))


_SIGN_COMBOS = [
    (s1, s2, s3) for s1 in (1.0, -1.0) for s2 in (1.0, -1.0) for s3 in (1.0, -1.0)
]


@dataclass(frozen=True)
class ResonanceScan:
    """Result of a near-resonance grid scan.

    ``fraction`` is the share of grid points within ``tol`` of a resonance
    at the requested tolerance.  ``fractions`` holds the same share at the
    internal tolerance refinements used to judge scaling; ``resonant`` is a
    diagnostic flag raised when the share fails to shrink with tol (a
    resonant dispersion such as omega = const), not an error.
    """

    fraction: float
    resonant: bool
    fractions: tuple[tuple[float, float], ...]


def resonance_scan(
    params: ModelParams, k1: float, k2: float, tol: float, K: int
) -> ResonanceScan:
    """Fraction of the torus within tol of a four-phonon resonance.

    Scans K uniform (midpoint) grid points k and reports the fraction for
    which min over sign choices s1, s2, s3 of

        |omega(k1) + s3 omega(k - k1) - s1 [omega(k2) + s2 omega(k - k2)]|

    falls below tol.  For a dispersion with isolated resonant roots the
    fraction scales linearly with tol; the ``resonant`` flag is set when
    internal tolerance refinement finds no such decay.
    """
    if k1 == k2:
        raise ValueError("resonance scan requires k1 != k2")
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    nodes = midpoint_nodes(K)
    w1 = omega(params, k1)
    w2 = omega(params, k2)
    wk1 = np.asarray(omega(params, nodes - k1))
    wk2 = np.asarray(omega(params, nodes - k2))
    best = np.full(nodes.shape, np.inf)
    for s1, s2, s3 in _SIGN_COMBOS:
        val = np.abs(w1 + s3 * wk1 - s1 * (w2 + s2 * wk2))
        np.minimum(best, val, out=best)

    fractions = []
    for t in (tol, tol / 4.0, tol / 16.0):
        fractions.append((t, float(np.mean(best < t))))
    fraction = fractions[0][1]
    finest = fractions[-1][1]
    # Linear scaling predicts a 16x drop across the refinement; flag when
    # the finest fraction retains more than half of the coarse one.
    resonant = fraction > 0.0 and finest > 0.5 * fraction
    return ResonanceScan(fraction, resonant, tuple(fractions))
