"""2D spectra from signal grids: FFT, 1D projections, peak identification.

Axis conventions: a signal component exp(-i w t) lands at frequency -w, so
coherences rotating at positive effective energies show up below the carrier.
The carrier itself (the rotating-frame origin) is reattached as a pure axis
offset; magnitudes carry the raw DFT normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .protocol import SignalGrid


@dataclass(frozen=True)
class Spectrum2D:
    """Complex 2D spectrum with labeled angular-frequency axes (rad/s)."""

    omega1: np.ndarray
    omega3: np.ndarray
    values: np.ndarray
    carrier: float = 0.0

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def bin_width(self) -> float:
        return float(self.omega1[1] - self.omega1[0])


@dataclass(frozen=True)
class Spectrum1D:
    omega: np.ndarray
    values: np.ndarray

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass
class Peak:
    omega1: float
    omega3: float
    magnitude: float
    label: str = ""


@dataclass
class PeakList:
    peaks: list[Peak] = field(default_factory=list)

    def __iter__(self):
        return iter(self.peaks)

    def __len__(self):
        return len(self.peaks)

    def nearest(self, omega1: float, omega3: float) -> Peak:
        if not self.peaks:
            raise ValueError("empty peak list")
        return min(
            self.peaks,
            key=lambda p: (p.omega1 - omega1) ** 2 + (p.omega3 - omega3) ** 2,
        )


def _window(n: int, kind: str) -> np.ndarray:
    if kind == "none":
        return np.ones(n)
    if kind == "cosine":
        if n == 1:
            return np.ones(1)
        return np.cos(0.5 * np.pi * np.arange(n) / (n - 1))
    raise ValueError(f"unknown window {kind!r}")


def fft2(
    grid: SignalGrid,
    window: str = "none",
    zero_pad: int = 1,
    carrier_offset: float = 0.0,
) -> Spectrum2D:
    """2D DFT of the phase-cycled signal with labeled axes.

    ``zero_pad`` multiplies the grid size (interpolating the spectrum without
    moving peak positions); ``carrier_offset`` is added to both axes.
    """
    if zero_pad < 1:
        raise ValueError("zero_pad must be >= 1")
    n1, n3 = grid.values.shape
    dt = grid.dt
    w = np.outer(_window(n1, window), _window(n3, window))
    padded = (n1 * zero_pad, n3 * zero_pad)
    f = np.fft.fftshift(np.fft.fft2(grid.values * w, s=padded))
    omega1 = 2 * np.pi * np.fft.fftshift(np.fft.fftfreq(padded[0], dt)) + carrier_offset
    omega3 = 2 * np.pi * np.fft.fftshift(np.fft.fftfreq(padded[1], dt)) + carrier_offset
    return Spectrum2D(omega1=omega1, omega3=omega3, values=f, carrier=carrier_offset)


def project_1d(
    grid: SignalGrid,
    axis: str = "t1",
    window: str = "none",
    zero_pad: int = 1,
    carrier_offset: float = 0.0,
) -> Spectrum1D:
    """Spectrum of the t3 = 0 (or t1 = 0) slice: the 1D-experiment result."""
    if axis == "t1":
        slice_ = grid.values[:, 0]
    elif axis == "t3":
        slice_ = grid.values[0, :]
    else:
        raise ValueError("axis must be 't1' or 't3'")
    n = len(slice_)
    w = _window(n, window)
    f = np.fft.fftshift(np.fft.fft(slice_ * w, n=n * zero_pad))
    omega = 2 * np.pi * np.fft.fftshift(np.fft.fftfreq(n * zero_pad, grid.dt))
    return Spectrum1D(omega=omega + carrier_offset, values=f)


def find_peaks(spec: Spectrum2D, threshold: float = 0.1) -> PeakList:
    """Local maxima above threshold * max, centroid-refined on 3x3 patches."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    mag = spec.magnitude
    cut = threshold * mag.max()
    padded = np.pad(mag, 1, constant_values=-np.inf)
    core = padded[1:-1, 1:-1]
    is_max = core > cut
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            is_max &= core >= padded[1 + di : padded.shape[0] - 1 + di,
                                     1 + dj : padded.shape[1] - 1 + dj]
    d1 = spec.omega1[1] - spec.omega1[0]
    d3 = spec.omega3[1] - spec.omega3[0]
    peaks = []
    for i, j in zip(*np.nonzero(is_max)):
        patch = padded[i : i + 3, j : j + 3].copy()
        patch[patch == -np.inf] = 0.0
        total = patch.sum()
        off_i = float((patch * np.arange(-1, 2)[:, None]).sum() / total)
        off_j = float((patch * np.arange(-1, 2)[None, :]).sum() / total)
        peaks.append(
            Peak(
                omega1=float(spec.omega1[i] + off_i * d1),
                omega3=float(spec.omega3[j] + off_j * d3),
                magnitude=float(mag[i, j]),
            )
        )
    peaks.sort(key=lambda p: p.magnitude, reverse=True)
    return PeakList(peaks=peaks)


def reflection_pairs(
    peaks: PeakList, center: tuple[float, float], tol: float
) -> list[tuple[Peak, Peak]]:
    """Peak pairs related by point reflection through ``center`` within tol."""
    out = []
    plist = list(peaks)
    for i, p in enumerate(plist):
        for q in plist[i + 1 :]:
            if (
                abs(p.omega1 + q.omega1 - 2 * center[0]) <= tol
                and abs(p.omega3 + q.omega3 - 2 * center[1]) <= tol
            ):
                out.append((p, q))
    return out


def notch_carrier(spec: Spectrum2D, width_bins: int = 1) -> Spectrum2D:
    """Zero out the bins around the carrier point (baseline removal)."""
    i = int(np.argmin(np.abs(spec.omega1 - spec.carrier)))
    j = int(np.argmin(np.abs(spec.omega3 - spec.carrier)))
    values = spec.values.copy()
    sl1 = slice(max(i - width_bins, 0), i + width_bins + 1)
    sl3 = slice(max(j - width_bins, 0), j + width_bins + 1)
    values[sl1, sl3] = 0.0
    return Spectrum2D(
        omega1=spec.omega1, omega3=spec.omega3, values=values, carrier=spec.carrier
    )


def fwhm(spec: Spectrum2D, peak: Peak, axis: str) -> float:
    """Full width at half maximum through the peak along omega1 or omega3.

    Crossings are linearly interpolated; the width is capped at the axis span
    if the profile never drops below half height.
    """
    i = int(np.argmin(np.abs(spec.omega1 - peak.omega1)))
    j = int(np.argmin(np.abs(spec.omega3 - peak.omega3)))
    if axis == "omega1":
        profile = spec.magnitude[:, j]
        coords = spec.omega1
        k0 = i
    elif axis == "omega3":
        profile = spec.magnitude[i, :]
        coords = spec.omega3
        k0 = j
    else:
        raise ValueError("axis must be 'omega1' or 'omega3'")
    half = profile[k0] / 2.0

    def cross(direction: int) -> float:
        k = k0
        while 0 <= k + direction < len(profile) and profile[k + direction] >= half:
            k += direction
        if not 0 <= k + direction < len(profile):
            return coords[k]
        # linear interpolation between k and k+direction
        y0, y1 = profile[k], profile[k + direction]
        frac = (y0 - half) / (y0 - y1)
        return coords[k] + frac * (coords[k + direction] - coords[k])

    return float(abs(cross(+1) - cross(-1)))
