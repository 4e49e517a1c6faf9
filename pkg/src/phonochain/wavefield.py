"""Spectral diagnostics: wave function, compensation, correlation estimators.

The complex wave function of a chain state is psi_hat(k) = omega(k) q_hat(k)
+ i p_hat(k), evaluated on the shifted mode grid k_j = j/N - 1/2 with the
unnormalized forward transform q_hat(k) = sum_y q_y exp(-2 pi i y k).  It
packs position and momentum into one complex amplitude per mode whose
squared modulus is (twice) the mode's energy contribution:

    sum_j |psi_hat(k_j)|^2 = 2 N H.

The map is invertible mode by mode,

    q_hat(k) = (psi_hat(k) + conj(psi_hat(-k))) / (2 omega(k)),
    p_hat(k) = (psi_hat(k) - conj(psi_hat(-k))) / (2 i),

except at a zero of the dispersion (the unpinned k = 0 mode), where the
pair (q_hat(0), p_hat(0)) is carried alongside the field instead.  The
inversion is defined for arbitrary complex mode values, not only those of
real states: it always produces a real chain state, and mapping back
reproduces the input values exactly -- the initial-data samplers rely on
this.

The compensated field multiplies each mode by exp(+i omega(k) t / eps),
which removes the fast harmonic rotation at microscopic time t / eps and
leaves only the noise-driven evolution visible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chain import ChainState
from .model import ModelParams, omega

__all__ = [
    "SpectralField",
    "mode_grid",
    "negation_indices",
    "to_wave",
    "from_wave",
    "compensate",
    "ensemble_fields",
    "mode_energies",
    "total_energy",
    "CorrelationEstimate",
    "empirical_correlations",
    "field_csv_columns",
    "correlation_csv_columns",
]

_KINDS = ("raw", "compensated")


def mode_grid(n: int) -> np.ndarray:
    """Shifted mode grid k_j = j/N - 1/2, j = 0..N-1."""
    return (np.arange(n) - n // 2) / n


def negation_indices(n: int) -> np.ndarray:
    """Index array sending mode j to the mode at -k_j on the shifted grid.

    j = 0 (k = -1/2, equal to +1/2 on the torus) and j = N/2 (k = 0) are
    their own partners.
    """
    return (n - np.arange(n)) % n


@dataclass(frozen=True)
class SpectralField:
    """Mode amplitudes over the shifted grid, with macroscopic time stamp.

    values[j] is the amplitude at k_j = j/N - 1/2; kind records whether the
    fast rotation has been compensated away; t is macroscopic time and
    epsilon the scaling parameter (the microscopic time is t / epsilon).
    For an unpinned model, zero_mode = (q_hat(0), p_hat(0)) carries the
    non-invertible k = 0 data; values[N/2] still equals i p_hat(0).
    """

    values: np.ndarray
    kind: str = "raw"
    t: float = 0.0
    epsilon: float = 1.0
    zero_mode: tuple[float, float] | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=complex, copy=True)
        if v.ndim != 1 or v.shape[0] < 8 or v.shape[0] % 2:
            raise ValueError("values must be a 1-d vector over an even grid, N >= 8")
        if not np.all(np.isfinite(v.view(float))):
            raise ValueError("field values must be finite")
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}")
        if not (self.t >= 0.0 and math.isfinite(self.t)):
            raise ValueError("t must be a nonnegative finite real")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must be in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> np.ndarray:
        return mode_grid(self.N)


def _omega_shifted(params: ModelParams, n: int) -> np.ndarray:
    return np.asarray(omega(params, mode_grid(n)), dtype=float)


def to_wave(state: ChainState, params: ModelParams, epsilon: float = 1.0) -> SpectralField:
    """Spectral wave function of a chain state.

    The returned field is stamped with macroscopic time epsilon * state.t.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must be in (0, 1]")
    w = _omega_shifted(params, state.N)
    qs = np.fft.fftshift(np.fft.fft(state.q))
    ps = np.fft.fftshift(np.fft.fft(state.p))
    values = w * qs + 1j * ps
    zero_mode = None
    if not params.pinned:
        half = state.N // 2
        zero_mode = (float(qs[half].real), float(ps[half].real))
    return SpectralField(
        values=values, kind="raw", t=epsilon * state.t, epsilon=epsilon, zero_mode=zero_mode
    )


def from_wave(field: SpectralField, params: ModelParams) -> ChainState:
    """Invert the wave map; always yields a real chain state.

    For arbitrary complex values v the reconstruction uses the pair
    (v(k), conj(v(-k))), which automatically enforces the Hermitian
    symmetry of a real state; to_wave(from_wave(f)) reproduces f exactly.
    """
    if field.kind != "raw":
        raise ValueError("only raw fields can be inverted")
    n = field.N
    v = field.values
    w = _omega_shifted(params, n)
    neg = np.conj(v[negation_indices(n)])
    zero = w <= 1e-6  # matches the alpha_hat(0) > 1e-12 pinning threshold
    if np.any(zero):
        if field.zero_mode is None or np.any(zero & (mode_grid(n) != 0.0)):
            raise ValueError(
                "cannot invert: omega vanishes and no zero-mode data is carried"
            )
    wsafe = np.where(zero, 1.0, w)
    qh = (v + neg) / (2.0 * wsafe)
    ph = (v - neg) * (-0.5j)
    if field.zero_mode is not None:
        half = n // 2
        qh[half] = field.zero_mode[0]
        ph[half] = field.zero_mode[1]
    q = np.fft.ifft(np.fft.ifftshift(qh)).real
    p = np.fft.ifft(np.fft.ifftshift(ph)).real
    if field.t == 0.0:
        t_micro = 0.0
    elif field.epsilon > 0.0:
        t_micro = field.t / field.epsilon
    else:
        raise ValueError("field carries t > 0 with epsilon = 0")
    return ChainState(q=q, p=p, t=t_micro)


def compensate(field: SpectralField, params: ModelParams) -> SpectralField:
    """Remove the fast harmonic rotation: multiply by exp(i omega(k) t / eps)."""
    if field.kind != "raw":
        raise ValueError("field is already compensated")
    if not field.epsilon > 0.0:
        raise ValueError("compensation requires epsilon > 0")
    w = _omega_shifted(params, field.N)
    phase = np.exp(1j * w * (field.t / field.epsilon))
    return SpectralField(
        values=field.values * phase,
        kind="compensated",
        t=field.t,
        epsilon=field.epsilon,
        zero_mode=field.zero_mode,
    )


def ensemble_fields(
    q: np.ndarray,
    p: np.ndarray,
    params: ModelParams,
    epsilon: float = 1.0,
    t_micro: float = 0.0,
) -> list[SpectralField]:
    """Wave fields of a site-major ensemble (N, M), batched over trajectories."""
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must be in (0, 1]")
    if q.ndim != 2 or p.shape != q.shape:
        raise ValueError("q and p must be site-major arrays of equal shape")
    n = q.shape[0]
    w = _omega_shifted(params, n)[:, None]
    qs = np.fft.fftshift(np.fft.fft(q, axis=0), axes=0)
    ps = np.fft.fftshift(np.fft.fft(p, axis=0), axes=0)
    values = w * qs + 1j * ps
    half = n // 2
    fields = []
    for m in range(q.shape[1]):
        zero_mode = None
        if not params.pinned:
            zero_mode = (float(qs[half, m].real), float(ps[half, m].real))
        fields.append(
            SpectralField(
                values=values[:, m],
                kind="raw",
                t=epsilon * t_micro,
                epsilon=epsilon,
                zero_mode=zero_mode,
            )
        )
    return fields


def mode_energies(field: SpectralField) -> np.ndarray:
    """Per-mode spectral energy |psi(k_j)|^2 / N (sums to twice the energy)."""
    return np.abs(field.values) ** 2 / field.N


def total_energy(field: SpectralField) -> float:
    """Total energy sum_j |psi(k_j)|^2 / (2N); equals hamiltonian_energy."""
    return float(np.sum(np.abs(field.values) ** 2) / (2 * field.N))


@dataclass(frozen=True)
class CorrelationEstimate:
    """Mode-space correlation estimators with standard errors.

    S[j] estimates E|psi(k_j)|^2 / N and Y[j] estimates
    E[psi(k_j) psi(-k_j)] / N.  Both are invariant under lattice
    translations, so the ensemble average is automatically also a
    translation average.  homogeneous is an advisory flag from a
    mode-mean test (large mode means signal a non-homogeneous ensemble);
    it does not gate the estimates.
    """

    k: np.ndarray
    S: np.ndarray
    S_se: np.ndarray
    Y: np.ndarray
    Y_se: np.ndarray
    paths: int
    homogeneous: bool


def empirical_correlations(fields: Sequence[SpectralField]) -> CorrelationEstimate:
    """Estimate the covariance S and pseudo-covariance Y of an ensemble."""
    m = len(fields)
    if m < 2:
        raise ValueError("need an ensemble of at least 2 fields")
    n = fields[0].N
    if any(f.N != n for f in fields):
        raise ValueError("all fields must share one mode grid")
    v = np.stack([f.values for f in fields], axis=1)  # (N, M)
    s_samples = np.abs(v) ** 2 / n
    s = s_samples.mean(axis=1)
    s_se = s_samples.std(axis=1, ddof=1) / math.sqrt(m)
    y_samples = v * v[negation_indices(n), :] / n
    y = y_samples.mean(axis=1)
    y_se = np.sqrt(
        y_samples.real.var(axis=1, ddof=1) + y_samples.imag.var(axis=1, ddof=1)
    ) / math.sqrt(m)
    # advisory homogeneity check: for a translation-invariant random field
    # every mode mean vanishes, so |mean|^2 * M / (N * S) is O(1)
    mu = v.mean(axis=1)
    live = s > 0.0
    if np.any(live):
        z = np.abs(mu[live]) ** 2 * m / (n * s[live])
        homogeneous = bool(z.mean() <= 3.0)
    else:
        homogeneous = True
    return CorrelationEstimate(
        k=mode_grid(n), S=s, S_se=s_se, Y=y, Y_se=y_se, paths=m, homogeneous=homogeneous
    )


def field_csv_columns(field: SpectralField):
    """Column layout for field CSV output: k, Re psi, Im psi, |psi|^2."""
    header = ["k", "re_psi", "im_psi", "abs2_psi"]
    cols = np.column_stack(
        [field.k, field.values.real, field.values.imag, np.abs(field.values) ** 2]
    )
    return header, cols


def correlation_csv_columns(est: CorrelationEstimate):
    """Column layout for correlation CSV output."""
    header = ["k", "S_hat", "SE_S", "re_Y_hat", "im_Y_hat", "SE_Y"]
    cols = np.column_stack([est.k, est.S, est.S_se, est.Y.real, est.Y.imag, est.Y_se])
    return header, cols
