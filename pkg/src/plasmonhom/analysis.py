"""Coincidence counting, accidental subtraction, visibility and dip fitting.

Rates are reported in counts per hour (cph). Uncertainties are Poisson
standard deviations of the underlying counts.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from . import _kernels
from .events import TagStream
from .fock import BeamsplitterParams
from .plasmonics import FitError
from .wavepacket import sinc

HOUR = 3600.0
QUANTUM = "quantum"
CLASSICAL = "classical-compatible"
CLASSICAL_BOUND = 0.5

CURVE_COLUMNS = ("delay_ps", "rate_cph", "sigma_cph", "raw_cph", "accidental_cph")


def _window_ps(window: float) -> int:
    if window <= 0:
        raise ValueError("coincidence window must be positive")
    return int(round(window / 1e-12))


@dataclass(frozen=True)
class CoincidenceResult:
    raw_coincidences: int
    duration: float  # s
    window: float  # s, full width
    singles_B1_counts: int
    singles_B2_counts: int

    @property
    def rate_raw(self) -> float:
        return self.raw_coincidences / self.duration * HOUR

    @property
    def sigma_raw(self) -> float:
        return math.sqrt(self.raw_coincidences) / self.duration * HOUR

    @property
    def singles_B1(self) -> float:
        return self.singles_B1_counts / self.duration * HOUR

    @property
    def singles_B2(self) -> float:
        return self.singles_B2_counts / self.duration * HOUR

    @property
    def sigma_singles_B1(self) -> float:
        return math.sqrt(self.singles_B1_counts) / self.duration * HOUR

    @property
    def sigma_singles_B2(self) -> float:
        return math.sqrt(self.singles_B2_counts) / self.duration * HOUR

    @property
    def accidental_rate(self) -> float:
        r1 = self.singles_B1_counts / self.duration
        r2 = self.singles_B2_counts / self.duration
        return accidental_rate(r1, r2, self.window) * HOUR

    @property
    def sigma_accidental(self) -> float:
        n1, n2 = self.singles_B1_counts, self.singles_B2_counts
        if n1 == 0 or n2 == 0:
            return 0.0
        return self.accidental_rate * math.sqrt(1.0 / n1 + 1.0 / n2)

    @property
    def rate_corrected(self) -> float:
        return self.rate_raw - self.accidental_rate

    @property
    def sigma_corrected(self) -> float:
        return math.hypot(self.sigma_raw, self.sigma_accidental)

    @property
    def negative(self) -> bool:
        """Corrected rate below zero by more than 3 sigma."""
        return self.rate_corrected < -3.0 * self.sigma_corrected


def count_coincidences(stream: TagStream, window: float) -> CoincidenceResult:
    """Greedy earliest-match B1/B2 pairing with ``|t1 - t2| <= window / 2``.

    ``window`` is the full coincidence window t_c in seconds. Each record is
    used at most once.
    """
    w = _window_ps(window)
    if not stream.is_sorted():
        raise ValueError("stream is not sorted by timestamp")
    count, n1, n2 = _kernels.greedy_coincidences(stream.timestamp, stream.channel, w)
    return CoincidenceResult(int(count), stream.duration, window, int(n1), int(n2))


def count_coincidences_bruteforce(records: Sequence[Tuple[int, int]], window: float) -> int:
    """O(n^2) reference counter with the same one-use-per-record rule."""
    w = _window_ps(window)
    recs = sorted(((int(t), int(c)) for c, t in records), key=lambda r: r[0])
    used = [False] * len(recs)
    count = 0
    for i, (ti, ci) in enumerate(recs):
        for j in range(i):
            tj, cj = recs[j]
            if not used[j] and cj != ci and 2 * abs(ti - tj) <= w:
                used[i] = used[j] = True
                count += 1
                break
    return count


def accidental_rate(r1: float, r2: float, window: float) -> float:
    """Uncorrelated coincidence rate ``r1 * r2 * t_c`` (all in SI units)."""
    if r1 < 0 or r2 < 0 or window < 0:
        raise ValueError("rates and window must be non-negative")
    return r1 * r2 * window


class Visibility(NamedTuple):
    value: float
    sigma: float


def visibility(n_max: float, n_min: float, sigma_max: float | None = None,
               sigma_min: float | None = None) -> Visibility:
    """``V = (N_max - N_min) / N_max`` with first-order error propagation.

    Without explicit sigmas the inputs are treated as Poisson counts.
    """
    if n_max <= 0:
        raise ValueError("n_max must be positive")
    if sigma_max is None:
        sigma_max = math.sqrt(max(n_max, 0.0))
    if sigma_min is None:
        sigma_min = math.sqrt(max(n_min, 0.0))
    v = (n_max - n_min) / n_max
    sv = math.hypot(sigma_min / n_max, n_min * sigma_max / n_max ** 2)
    return Visibility(v, sv)


@dataclass(frozen=True)
class DipFit:
    n_max: float  # cph
    visibility: float
    delta_omega: float  # rad/s
    delay_offset: float  # s
    sigma_n_max: float
    sigma_visibility: float
    sigma_delta_omega: float
    sigma_delay_offset: float
    chi2_reduced: float
    n_points: int
    warnings: Tuple[str, ...] = field(default=())

    @property
    def coherence_time(self) -> float:
        return 2.0 * math.pi / self.delta_omega

    @property
    def verdict(self) -> str:
        return quantum_threshold_test(self)

    def model(self, delta_t):
        return dip_model(np.asarray(delta_t, dtype=float), self.n_max, self.visibility,
                         self.delta_omega, self.delay_offset)

    def to_json(self) -> dict:
        return {
            "n_max": self.n_max,
            "visibility": self.visibility,
            "sigma_visibility": self.sigma_visibility,
            "delta_omega": self.delta_omega,
            "coherence_time_ps": self.coherence_time / 1e-12,
            "delay_offset_ps": self.delay_offset / 1e-12,
            "chi2_reduced": self.chi2_reduced,
            "verdict": self.verdict,
        }


def dip_model(delta_t, n_max, vis, delta_omega, offset):
    """``N(dt) = N_max (1 - V sinc^2((dt - dt0) dw / 2))``."""
    return n_max * (1.0 - vis * sinc((delta_t - offset) * delta_omega / 2.0) ** 2)


def _dip_jacobian(t, n_max, vis, dw, t0):
    x = (t - t0) * dw / 2.0
    s = sinc(x)
    small = np.abs(x) < 1e-8
    xs = np.where(small, 1.0, x)
    ds = np.where(small, 0.0, (np.cos(xs) - np.sin(xs) / xs) / xs)
    common = -n_max * vis * 2.0 * s * ds
    return np.column_stack([
        1.0 - vis * s ** 2,
        -n_max * s ** 2,
        common * (t - t0) / 2.0,
        common * (-dw / 2.0),
    ])


def _initial_guess(t, y, delta_omega_guess):
    n = t.size
    mid = 0.5 * (t.min() + t.max())
    k = max(2, int(round(0.2 * n)))
    outer = np.argsort(-np.abs(t - mid), kind="stable")[:k]
    n_max0 = float(np.mean(y[outer]))
    ymin = y.min()
    cand = np.flatnonzero(y == ymin)
    i0 = cand[np.argmin(np.abs(t[cand]))]
    t0 = float(t[i0])
    v0 = float(np.clip(1.0 - ymin / n_max0, 0.05, 0.99)) if n_max0 > 0 else 0.5
    if delta_omega_guess is None:
        below = t[y < n_max0 * (1.0 - 0.5 * v0)]
        fwhm = below.max() - below.min() if below.size > 1 else (t.max() - t.min()) / 4.0
        if fwhm <= 0:
            fwhm = (t.max() - t.min()) / 4.0
        # sinc^2 half maximum at x = 1.3916
        delta_omega_guess = 4.0 * 1.39156 / fwhm
    return np.array([n_max0, v0, float(delta_omega_guess), t0])


def fit_dip(points: Iterable[Sequence[float]], delta_omega_guess: float | None = None,
            max_iterations: int = 200) -> DipFit:
    """Weighted least-squares fit of the HOM dip.

    ``points`` are ``(delay_s, rate_cph, sigma_cph)``. ``delta_omega_guess``
    (rad/s) normally comes from the configured spectral profile; if omitted
    it is estimated from the half-depth width of the data.
    """
    data = np.asarray(list(points), dtype=float)
    if data.ndim != 2 or data.shape[1] != 3 or len(data) < 5:
        raise ValueError("need at least 5 (delay, rate, sigma) points")
    order = np.argsort(data[:, 0], kind="stable")
    t = data[order, 0] / 1e-12  # fit in ps
    y = data[order, 1]
    sig = data[order, 2].copy()
    if np.any(sig < 0):
        raise ValueError("uncertainties must be non-negative")
    positive = sig[sig > 0]
    sig[sig == 0] = positive.min() if positive.size else 1.0

    guess_ps = None if delta_omega_guess is None else delta_omega_guess * 1e-12
    p0 = _initial_guess(t, y, guess_ps)

    def resid(p):
        return (dip_model(t, *p) - y) / sig

    def jac(p):
        return _dip_jacobian(t, *p) / sig[:, None]

    res = least_squares(resid, p0, jac=jac, method="lm", xtol=1e-8, ftol=1e-12,
                        gtol=1e-12, max_nfev=max_iterations, x_scale="jac")
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise FitError(f"dip fit did not converge: {res.message}",
                       residuals=res.fun * sig)
    n_max, vis, dw, t0 = res.x
    dw = abs(dw)
    J = jac(np.array([n_max, vis, dw, t0]))
    cov = np.linalg.pinv(J.T @ J)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    dof = max(len(t) - 4, 1)
    chi2 = float(np.sum(res.fun ** 2) / dof)

    notes = []
    if abs(vis) < 1e-12:
        vis = 0.0  # rounding noise on flat data, not worth a warning
    if not 0.0 <= vis <= 1.0:
        notes.append(f"visibility {vis:.4f} clamped to [0, 1]")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
        vis = float(np.clip(vis, 0.0, 1.0))
    first_zero = 2.0 * math.pi / dw
    if t.min() > t0 - first_zero or t.max() < t0 + first_zero:
        notes.append("insufficient baseline coverage: scan does not reach the first sinc zero on both sides")

    return DipFit(
        n_max=float(n_max), visibility=float(vis), delta_omega=float(dw) / 1e-12,
        delay_offset=float(t0) * 1e-12,
        sigma_n_max=float(err[0]), sigma_visibility=float(err[1]),
        sigma_delta_omega=float(err[2]) / 1e-12, sigma_delay_offset=float(err[3]) * 1e-12,
        chi2_reduced=chi2, n_points=len(t), warnings=tuple(notes),
    )


def quantum_threshold_test(fit) -> str:
    """``quantum`` iff the visibility exceeds 0.5 by more than one sigma.

    Accepts a :class:`DipFit` or a ``(V, sigma_V)`` pair.
    """
    if isinstance(fit, DipFit):
        v, s = fit.visibility, fit.sigma_visibility
    else:
        v, s = fit
    return QUANTUM if v - s > CLASSICAL_BOUND else CLASSICAL


def classical_visibility_oracle(bs: BeamsplitterParams, trials: int = 10 ** 6, seed: int = 0,
                                mode_overlap: float = 1.0) -> Visibility:
    """Dip visibility reachable with classical fields, by Monte Carlo.

    Two equal-intensity classical fields with a uniformly random relative
    phase meet on the splitter; the visibility compares the intensity
    correlation ``<I1 I2>`` with and without the interference term.
    """
    if trials < 10 ** 4:
        raise ValueError("use at least 1e4 trials")
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0.0, 2.0 * np.pi, trials)
    cross = 2.0 * mode_overlap * math.sqrt(bs.R * bs.T) * np.sin(phi)
    base1 = bs.R + bs.T  # |E_A|^2 R + |E_B|^2 T
    base2 = bs.T + bs.R
    corr = (base1 + cross) * (base2 - cross)
    ref = base1 * base2
    ratio = corr / ref
    v = 1.0 - float(np.mean(ratio))
    return Visibility(v, float(np.std(ratio)) / math.sqrt(trials))


# scan-level helpers


@dataclass(frozen=True)
class DipPoint:
    delay: float  # s
    result: CoincidenceResult

    def row(self) -> dict:
        r = self.result
        return {
            "delay_ps": self.delay / 1e-12,
            "rate_cph": r.rate_corrected,
            "sigma_cph": r.sigma_corrected,
            "raw_cph": r.rate_raw,
            "accidental_cph": r.accidental_rate,
        }


def _analyze_one(item):
    delay, source, window = item
    if isinstance(source, TagStream):
        stream = source
    elif hasattr(source, "stream"):
        stream = source.stream()
    else:
        from .tagfile import read_htag
        stream = read_htag(source)
    return DipPoint(float(delay), count_coincidences(stream, window))


def analyze_scan(items: Iterable[Tuple[float, object]], window: float, jobs: int = 1) -> List[DipPoint]:
    """Count coincidences for every ``(delay, source)`` of a scan.

    ``source`` is a :class:`TagStream`, anything with a ``stream()`` method
    (e.g. :class:`~plasmonhom.events.StreamHandle`) or an ``HTAG`` path.
    Streams are materialized one at a time per worker.
    """
    work = [(d, s, window) for d, s in items]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            pts = list(pool.map(_analyze_one, work))
    else:
        pts = [_analyze_one(w) for w in work]
    return sorted(pts, key=lambda p: p.delay)


def fit_points(points: Sequence[DipPoint]):
    return [(p.delay, p.result.rate_corrected, p.result.sigma_corrected) for p in points]


def write_curve_csv(path, rows: Iterable[dict]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CURVE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(float(row[k])) for k in CURVE_COLUMNS})
    return path


def read_curve_csv(path) -> List[dict]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CURVE_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        return [{k: float(v) for k, v in row.items()} for row in reader]


def write_fit_json(path, fit: DipFit, extra: dict | None = None) -> Path:
    payload = fit.to_json()
    if extra:
        payload.update(extra)
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path
