"""
Signal analysis
---------------

Angular velocities from bus angle waveforms, their DFT spectra restricted to
the inter-area oscillation band, the angle dissimilarity index, and the
Pearson correlation of spectral magnitudes between buses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BandError, ValidationError
from .grid_model import WaveformSet

DEFAULT_BAND = (0.1, 1.0)


@dataclass(frozen=True)
class VelocitySet:
    labels: tuple[str, ...]
    dt: float
    omega: np.ndarray  # (n_buses, N - 1), rad/s


@dataclass(frozen=True)
class FrequencySpectrumMatrix:
    labels: tuple[str, ...]
    values: np.ndarray  # complex (n_buses, n_bins)
    freqs: np.ndarray  # Hz, strictly increasing
    band: tuple[float, float] | None

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric edge-weight matrix for one graph layer.

    ``raw`` keeps the pre-clamp correlation values for the frequency kind.
    ``flags`` carries per-bus diagnostics (e.g. zero-variance spectra).
    """

    weights: np.ndarray
    kind: str
    raw: np.ndarray | None = None
    flags: tuple[int, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def angular_velocity(w: WaveformSet) -> VelocitySet:
    omega = np.diff(w.theta, axis=1) / w.dt
    return VelocitySet(w.labels, w.dt, omega)


def dft_spectrum(
    v: VelocitySet, band: tuple[float, float] | None = DEFAULT_BAND, window: str | None = None
) -> FrequencySpectrumMatrix:
    """DFT of each velocity row, keeping bins whose frequency lies in ``band``.

    Bin ``m`` of an ``N'``-sample row sits at ``m / (N' dt)`` Hz. With
    ``band=None`` every bin is returned (the full periodogram, used for
    Parseval-type checks). ``window="hann"`` tapers rows before the transform.
    """
    omega = v.omega
    n_prime = omega.shape[1]
    if window is not None:
        if window != "hann":
            raise ValidationError(f"unknown window {window!r}")
        omega = omega * np.hanning(n_prime)
    spec = np.fft.fft(omega, axis=1)
    freqs = np.arange(n_prime) / (n_prime * v.dt)
    if band is None:
        return FrequencySpectrumMatrix(v.labels, spec, freqs, None)

    lo, hi = float(band[0]), float(band[1])
    nyquist = 1.0 / (2.0 * v.dt)
    if not (0.0 <= lo <= hi <= nyquist):
        raise BandError(f"band {lo}-{hi} Hz must lie within [0, {nyquist:g}] Hz", band=(lo, hi))
    spacing = 1.0 / (n_prime * v.dt)
    # tolerance keeps bins that sit exactly on a band edge despite rounding
    eps = 1e-9 * spacing
    keep = (freqs >= lo - eps) & (freqs <= hi + eps) & (np.arange(n_prime) <= n_prime // 2)
    if not keep.any():
        raise BandError(
            f"band {lo}-{hi} Hz contains no DFT bins (bin spacing {spacing:.6g} Hz)",
            band=(lo, hi),
            spacing=spacing,
        )
    return FrequencySpectrumMatrix(v.labels, spec[:, keep], freqs[keep], (lo, hi))


def dissimilarity_index(w: WaveformSet, i: int, j: int, window: tuple[float, float] | None = None) -> float:
    """Trapezoidal integral of the angle-deviation difference between buses i and j.

    Deviations are taken from each bus's own value at the window start.
    Window edges off the sample grid are linearly interpolated.
    """
    t = w.times
    if window is None:
        window = (t[0], t[-1])
    a, b = float(window[0]), float(window[1])
    tol = 1e-9 * w.dt
    if a < t[0] - tol or b > t[-1] + tol or a > b:
        raise ValidationError(f"window {a}-{b} s outside waveform span {t[0]}-{t[-1]} s")
    a, b = max(a, t[0]), min(b, t[-1])
    inner = t[(t > a + tol) & (t < b - tol)]
    grid = np.concatenate(([a], inner, [b]))
    di = np.interp(grid, t, w.theta[i])
    dj = np.interp(grid, t, w.theta[j])
    y = (di - di[0]) - (dj - dj[0])
    return float(np.trapezoid(y, grid))


def correlation_matrix(F: FrequencySpectrumMatrix) -> SimilarityMatrix:
    """Pearson correlation between rows of ``|F|`` over the retained bins.

    Returns the pre-clamp matrix (kind ``frequency``) with unit diagonal.
    A row with a constant magnitude spectrum correlates 0 with every other
    row and is listed in ``flags``.
    """
    if F.n_bins < 2:
        raise BandError(f"correlation needs at least 2 bins, band holds {F.n_bins}")
    mag = np.abs(F.values)
    centered = mag - mag.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.sum(centered**2, axis=1))
    scale = np.maximum(np.sqrt(np.sum(mag**2, axis=1)), np.finfo(float).tiny)
    flat = norms <= 1e-12 * scale
    z = np.zeros_like(centered)
    z[~flat] = centered[~flat] / norms[~flat, None]
    c = z @ z.T
    c = np.clip(c, -1.0, 1.0)
    upper = np.triu(c, 1)
    c = upper + upper.T
    np.fill_diagonal(c, 1.0)
    return SimilarityMatrix(c.copy(), "frequency", raw=c, flags=tuple(int(k) for k in np.flatnonzero(flat)))
