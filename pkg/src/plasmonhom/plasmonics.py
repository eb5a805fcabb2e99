"""Stripe-waveguide propagation loss and Bragg-reflector splitting ratio."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import curve_fit

from .fock import BeamsplitterParams


class FitError(RuntimeError):
    """Raised when a least-squares fit fails; carries the final residuals."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = None if residuals is None else np.asarray(residuals)


@dataclass(frozen=True)
class WaveguideSpec:
    width_um: float = 2.0
    thickness_nm: float = 70.0
    grating_to_grating_um: float = 12.5
    propagation_length_um: float = 12.4
    propagation_length_err_um: float = 0.3
    grating_period_nm: float = 620.0

    def __post_init__(self):
        for name in ("width_um", "thickness_nm", "grating_to_grating_um",
                     "propagation_length_um", "grating_period_nm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def arm_transmission(self) -> float:
        """Intensity transmission of one half of the guide (grating to splitter)."""
        return propagation_transmission(self, 0.5 * self.grating_to_grating_um)


@dataclass(frozen=True)
class BraggSpec:
    """Tabulated transmission of the Bragg element, shared by all four ports."""

    ridge_period_nm: float = 500.0
    transmission_table: tuple = ((808.0, 0.49),)

    def __post_init__(self):
        table = tuple((float(w), float(t)) for w, t in self.transmission_table)
        if not table:
            raise ValueError("transmission table is empty")
        wl = [w for w, _ in table]
        if any(b <= a for a, b in zip(wl, wl[1:])):
            raise ValueError("table wavelengths must be strictly increasing")
        for w, t in table:
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"transmission {t} at {w} nm outside [0, 1]")
        object.__setattr__(self, "transmission_table", table)

    @property
    def wavelengths(self) -> np.ndarray:
        return np.array([w for w, _ in self.transmission_table])

    @property
    def transmissions(self) -> np.ndarray:
        return np.array([t for _, t in self.transmission_table])


def propagation_transmission(spec: WaveguideSpec, distance_um: float) -> float:
    """Fraction of SPP intensity left after ``distance_um``: ``exp(-x / l)``."""
    if distance_um < 0:
        raise ValueError("distance must be non-negative")
    return math.exp(-distance_um / spec.propagation_length_um)


def _exp_decay(x, amplitude, length):
    return amplitude * np.exp(-x / length)


def fit_propagation_length(samples: Iterable[Sequence[float]]):
    """Fit ``I(x) = A exp(-x / l)`` to ``(length_um, intensity)`` samples.

    Returns ``(l, A, sigma_l)``. The starting point comes from a straight-line
    fit to ``log I``.
    """
    data = np.asarray(list(samples), dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or len(data) < 3:
        raise ValueError("need at least 3 (length, intensity) samples")
    x, y = data[:, 0], data[:, 1]
    if np.any(y <= 0):
        raise ValueError("intensities must be positive")
    if len(np.unique(x)) < 3:
        raise ValueError("need at least 3 distinct lengths")
    if np.ptp(y) == 0:
        raise ValueError("constant intensities carry no decay information")
    slope, icpt = np.polyfit(x, np.log(y), 1)
    if slope >= 0:
        raise ValueError("intensity does not decay with length")
    p0 = (math.exp(icpt), -1.0 / slope)
    try:
        popt, pcov = curve_fit(_exp_decay, x, y, p0=p0, xtol=1e-12, ftol=1e-12, maxfev=2000)
    except RuntimeError as exc:
        raise FitError(str(exc), residuals=y - _exp_decay(x, *p0)) from exc
    amplitude, length = popt
    sigma = float(np.sqrt(pcov[1, 1])) if np.isfinite(pcov[1, 1]) else 0.0
    return float(length), float(amplitude), sigma


def relative_transmission(intensity_opposite: float, intensity_adjacent: float):
    """``T = I_opp / (I_opp + I_adj)`` and ``R = 1 - T``."""
    if intensity_opposite < 0 or intensity_adjacent < 0:
        raise ValueError("intensities must be non-negative")
    total = intensity_opposite + intensity_adjacent
    if total == 0:
        raise ValueError("both output intensities are zero")
    T = intensity_opposite / total
    return T, 1.0 - T


def bragg_lookup(spec: BraggSpec, wavelength_nm: float):
    """Linearly interpolated ``(T, R)``; no extrapolation."""
    wl = spec.wavelengths
    if not wl[0] <= wavelength_nm <= wl[-1]:
        raise ValueError(
            f"wavelength {wavelength_nm} nm outside table range [{wl[0]}, {wl[-1]}] nm"
        )
    T = float(np.interp(wavelength_nm, wl, spec.transmissions))
    return T, 1.0 - T


def beamsplitter_at(spec: BraggSpec, wavelength_nm: float) -> BeamsplitterParams:
    T, _ = bragg_lookup(spec, wavelength_nm)
    return BeamsplitterParams.from_transmission(T)


def _read_two_column_csv(path, columns):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(row for row in fh if row.strip() and not row.lstrip().startswith("#"))
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        if header != list(columns):
            raise ValueError(f"{path}: expected header {','.join(columns)}, got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric value in {row}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def read_bragg_table(path, ridge_period_nm: float = 500.0) -> BraggSpec:
    """Load a ``wavelength_nm,transmission`` table."""
    rows = _read_two_column_csv(path, ("wavelength_nm", "transmission"))
    return BraggSpec(ridge_period_nm=ridge_period_nm, transmission_table=tuple(rows))


def read_propagation_samples(path):
    """Load ``length_um,intensity`` samples."""
    return _read_two_column_csv(path, ("length_um", "intensity"))
