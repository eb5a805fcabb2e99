"""Top-hat single-photon wavepackets, delay-dependent overlap and the HOM dip.

Throughout, ``sinc(x) = sin(x)/x`` (unnormalized). ``numpy.sinc`` uses the
normalized convention, so it is always called as ``np.sinc(x / pi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .fock import BeamsplitterParams, LossParams, OverlapParam

SPEED_OF_LIGHT = 299_792_458.0  # m/s


def sinc(x):
    """``sin(x)/x`` with ``sinc(0) = 1``; accepts scalars or arrays."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


@dataclass(frozen=True)
class SpectralProfile:
    """Top-hat spectral amplitude centred on ``center_wavelength_nm``.

    The full width of the top-hat (equal to its FWHM) is set from the
    wavelength bandwidth: ``delta_omega = 2 pi c dlambda / lambda0^2``.
    """

    center_wavelength_nm: float
    fwhm_wavelength_nm: float
    shape: str = "top-hat"

    def __post_init__(self):
        if self.shape != "top-hat":
            raise ValueError(f"unsupported spectral shape {self.shape!r}")
        if self.center_wavelength_nm <= 0:
            raise ValueError("center wavelength must be positive")
        if self.fwhm_wavelength_nm <= 0:
            raise ValueError("bandwidth must be positive")

    @property
    def center_omega(self) -> float:
        return 2.0 * math.pi * SPEED_OF_LIGHT / (self.center_wavelength_nm * 1e-9)

    @property
    def delta_omega(self) -> float:
        lam = self.center_wavelength_nm * 1e-9
        return 2.0 * math.pi * SPEED_OF_LIGHT * (self.fwhm_wavelength_nm * 1e-9) / lam ** 2

    @property
    def support(self) -> tuple[float, float]:
        half = 0.5 * self.delta_omega
        return self.center_omega - half, self.center_omega + half

    def amplitude(self, omega):
        """Normalized spectral amplitude phi(omega), in s^(1/2)."""
        omega = np.asarray(omega, dtype=float)
        lo, hi = self.support
        inside = (omega >= lo) & (omega <= hi)
        return np.where(inside, 1.0 / math.sqrt(self.delta_omega), 0.0)

    def normalization(self, n: int = 200_001) -> float:
        """Numerical integral of ``|phi|^2`` over a window twice the support."""
        lo, hi = self.support
        w = hi - lo
        # midpoint cells aligned with the support edges
        edges = np.linspace(lo - 0.5 * w, hi + 0.5 * w, n)
        mid = 0.5 * (edges[1:] + edges[:-1])
        return float(np.sum(np.abs(self.amplitude(mid)) ** 2 * np.diff(edges)))


@dataclass(frozen=True)
class DelayScan:
    """Ordered relative delays in seconds, optionally from stage positions."""

    delays: tuple
    stage_positions_m: tuple | None = None

    def __post_init__(self):
        d = tuple(float(x) for x in self.delays)
        if not d:
            raise ValueError("delay scan is empty")
        if any(b <= a for a, b in zip(d, d[1:])):
            raise ValueError("delays must be strictly increasing")
        object.__setattr__(self, "delays", d)

    @classmethod
    def linear(cls, start: float, stop: float, points: int) -> "DelayScan":
        if points < 1:
            raise ValueError("scan needs at least one point")
        if points == 1:
            return cls((start,))
        return cls(tuple(np.linspace(start, stop, points)))

    @classmethod
    def from_stage(cls, positions_m: Sequence[float]) -> "DelayScan":
        """Delay line positions ``d`` mapped to ``dt = d / c``."""
        pos = tuple(float(p) for p in positions_m)
        return cls(tuple(p / SPEED_OF_LIGHT for p in pos), stage_positions_m=pos)

    def __len__(self):
        return len(self.delays)

    def __iter__(self):
        return iter(self.delays)


def overlap(profile: SpectralProfile, delta_t: float, mode_overlap: float = 1.0) -> OverlapParam:
    """Overlap ``|sinc(dt * dw / 2)|`` scaled by any residual mode mismatch."""
    mu = abs(float(sinc(delta_t * profile.delta_omega / 2.0)))
    return OverlapParam(min(mode_overlap * mu, 1.0))


def coincidence_probability(
    profile: SpectralProfile,
    delta_t,
    bs: BeamsplitterParams,
    loss: LossParams | None = None,
    mode_overlap: float = 1.0,
):
    """Probability per pair that both output detectors fire.

    ``eta_pair * (R^2 + T^2 - 2 R T mu^2)`` with
    ``mu = mode_overlap * |sinc(dt dw / 2)|``. For a balanced splitter with no
    loss this is ``(1 - sinc^2) / 2``. Vectorized over ``delta_t``.
    """
    eta = 1.0 if loss is None else loss.pair_efficiency
    mu2 = (mode_overlap * sinc(np.asarray(delta_t) * profile.delta_omega / 2.0)) ** 2
    p = eta * (bs.R ** 2 + bs.T ** 2 - 2.0 * bs.R * bs.T * mu2)
    return float(p) if np.ndim(p) == 0 else p


def coherence_time(profile: SpectralProfile) -> float:
    """``2 pi / delta_omega`` in seconds."""
    return 2.0 * math.pi / profile.delta_omega


def spectral_overlap_integral(
    amplitude: Callable[[np.ndarray], np.ndarray],
    support: tuple[float, float],
    delta_t: float,
    nodes: int = 400,
) -> complex:
    """Single-photon overlap ``int |phi(w)|^2 exp(i w dt) dw`` by Gauss-Legendre.

    The carrier ``exp(i w0 dt)`` is factored out so the result is real for a
    spectrum symmetric about the centre of ``support``.
    """
    lo, hi = support
    x, w = np.polynomial.legendre.leggauss(nodes)
    half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
    om = mid + half * x
    vals = np.abs(amplitude(om)) ** 2 * np.exp(1j * (om - mid) * delta_t)
    return complex(half * np.sum(w * vals))


def coincidence_probability_numeric(
    amplitude: Callable[[np.ndarray], np.ndarray],
    support: tuple[float, float],
    delta_t: float,
    bs: BeamsplitterParams,
    nodes: int = 400,
) -> float:
    """Coincidence probability from the full two-photon spectral double integral.

    Independent of the closed form: integrates
    ``|sqrt(T)^2 psi(w1, w2) - sqrt(R)^2 psi(w2, w1) e^{...}|^2`` with
    ``psi(w1, w2) = phi(w1) phi(w2)`` on a Gauss-Legendre product grid, where
    photon B carries the relative delay ``exp(i w dt)``.
    """
    lo, hi = support
    x, w = np.polynomial.legendre.leggauss(nodes)
    half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
    om = mid + half * x
    wt = half * w
    phi = amplitude(om).astype(complex)
    phase = np.exp(1j * (om - mid) * delta_t)
    # coincidence amplitude for detector frequencies (w1 at B1, w2 at B2):
    # both transmitted: A->B2 (sqrt T), B->B1 (sqrt T) ; both reflected: i sqrt R each
    trans = bs.T * np.outer(phi * phase, phi)          # B at w1, A at w2
    refl = (1j) ** 2 * bs.R * np.outer(phi, phi * phase)  # A at w1, B at w2
    amp = trans + refl
    return float(np.real(np.sum(np.abs(amp) ** 2 * np.outer(wt, wt))))
