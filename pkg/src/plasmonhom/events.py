"""Monte Carlo time-tag streams for a two-detector HOM experiment.

Every pair emitted by the source ends in exactly one detection pattern:
nothing, B1 only, B2 only, or both. Pair emission is Poisson, so each
pattern is itself an independent Poisson process (thinning) and streams are
generated pattern by pattern instead of pair by pair. This keeps full-scale
runs (~1e8 pairs/s) tractable.

Both photons of a pair are tagged with the pair emission time; the optical
delay only changes the interference overlap.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Iterator, List, NamedTuple, Tuple

import numpy as np

from . import _kernels
from .fock import BeamsplitterParams, LossParams, apply_loss, hom_output_state
from .wavepacket import SpectralProfile, overlap

PS = 1e-12
# block length for drawing uniform arrival times; keeps float64 offsets exact
_BLOCK_TICKS = 1 << 40


class Channel(enum.IntEnum):
    B1 = 0
    B2 = 1


class TimeTagRecord(NamedTuple):
    channel: Channel
    timestamp: int  # ps since stream start


@dataclass(frozen=True)
class DetectorModel:
    timing_resolution: float = 1e-12  # s
    dead_time: float = 0.0  # s
    dark_rate: float = 0.0  # counts/s per channel

    def __post_init__(self):
        if self.timing_resolution <= 0:
            raise ValueError("timing_resolution must be positive")
        ticks = self.timing_resolution / PS
        if abs(ticks - round(ticks)) > 1e-6 * max(ticks, 1.0):
            raise ValueError("timing_resolution must be a whole number of picoseconds")
        if self.dead_time < 0:
            raise ValueError("dead_time must be non-negative")
        if self.dark_rate < 0:
            raise ValueError("dark_rate must be non-negative")

    @property
    def tick_ps(self) -> int:
        return int(round(self.timing_resolution / PS))


@dataclass(frozen=True)
class SourceConfig:
    """Everything needed to generate one stream.

    ``mode_overlap`` is the residual (delay-independent) overlap between the
    two wavepackets; the delay-dependent part comes from ``profile``.
    ``source='classical'`` replaces the pair source by two weak classical
    fields with a random relative phase on every pulse.
    """

    pair_rate: float
    duration: float
    seed: int = 0
    delay: float = 0.0
    profile: SpectralProfile = field(default_factory=lambda: SpectralProfile(800.0, 22.0))
    bs: BeamsplitterParams = field(default_factory=BeamsplitterParams.balanced)
    loss: LossParams = field(default_factory=LossParams)
    detector: DetectorModel = field(default_factory=DetectorModel)
    mode_overlap: float = 1.0
    source: str = "pairs"

    def __post_init__(self):
        if self.pair_rate < 0:
            raise ValueError("pair_rate must be non-negative")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not 0.0 <= self.mode_overlap <= 1.0:
            raise ValueError("mode_overlap must lie in [0, 1]")
        if self.source not in ("pairs", "classical"):
            raise ValueError(f"unknown source model {self.source!r}")

    @property
    def mu(self) -> float:
        return overlap(self.profile, self.delay, self.mode_overlap).mu


@dataclass(frozen=True, eq=False)
class TagStream:
    """Time-ordered detection records held as parallel arrays."""

    timestamp: np.ndarray  # int64 picoseconds
    channel: np.ndarray  # uint8, 0 = B1, 1 = B2
    duration: float  # s

    def __post_init__(self):
        ts = np.ascontiguousarray(self.timestamp, dtype=np.int64)
        ch = np.ascontiguousarray(self.channel, dtype=np.uint8)
        if ts.shape != ch.shape or ts.ndim != 1:
            raise ValueError("timestamp and channel arrays must be 1-D and equal length")
        object.__setattr__(self, "timestamp", ts)
        object.__setattr__(self, "channel", ch)

    def __len__(self):
        return self.timestamp.size

    def records(self) -> Iterator[TimeTagRecord]:
        for c, t in zip(self.channel.tolist(), self.timestamp.tolist()):
            yield TimeTagRecord(Channel(c), t)

    @classmethod
    def from_records(cls, records: Iterable[Tuple[int, int]], duration: float) -> "TagStream":
        recs = list(records)
        ch = np.array([int(r[0]) for r in recs], dtype=np.uint8)
        ts = np.array([int(r[1]) for r in recs], dtype=np.int64)
        return cls(ts, ch, duration)

    def singles(self, channel: Channel) -> int:
        return int(np.count_nonzero(self.channel == int(channel)))

    def is_sorted(self) -> bool:
        return bool(_kernels.is_sorted(self.timestamp))

    def identical(self, other: "TagStream") -> bool:
        return (
            self.duration == other.duration
            and np.array_equal(self.timestamp, other.timestamp)
            and np.array_equal(self.channel, other.channel)
        )


def _pair_patterns(bs: BeamsplitterParams, mu: float, loss: LossParams) -> Dict[Tuple[int, int], float]:
    pA, pB = loss.eta_in_A, loss.eta_in_B
    e1, e2 = loss.eta_out_1, loss.eta_out_2
    probs = {(1, 0): 0.0, (0, 1): 0.0, (1, 1): 0.0}
    # both photons reach the splitter
    out = apply_loss(hom_output_state(bs, mu), LossParams(eta_out_1=e1, eta_out_2=e2))
    for (n1, n2), p in out.probabilities().items():
        key = (int(n1 > 0), int(n2 > 0))
        if key != (0, 0):
            probs[key] += pA * pB * p
    # exactly one photon reaches the splitter: A reflects to B1, B transmits to B1
    for w, to1 in ((pA * (1 - pB), bs.R), (pB * (1 - pA), bs.T)):
        probs[(1, 0)] += w * to1 * e1
        probs[(0, 1)] += w * (1 - to1) * e2
    return probs


def _classical_patterns(bs: BeamsplitterParams, mu: float, loss: LossParams, nphi: int = 512):
    # unit mean photon number per input arm and pulse; random relative phase
    phi = 2 * np.pi * np.arange(nphi) / nphi
    a, b = loss.eta_in_A, loss.eta_in_B
    cross = 2 * mu * math.sqrt(a * b * bs.R * bs.T) * np.sin(phi)
    i1 = a * bs.R + b * bs.T + cross
    i2 = a * bs.T + b * bs.R - cross
    c1 = 1 - np.exp(-loss.eta_out_1 * i1)
    c2 = 1 - np.exp(-loss.eta_out_2 * i2)
    both = float(np.mean(c1 * c2))
    return {(1, 0): float(np.mean(c1)) - both, (0, 1): float(np.mean(c2)) - both, (1, 1): both}


def detection_probabilities(bs: BeamsplitterParams, mu: float, loss: LossParams,
                            source: str = "pairs") -> Dict[Tuple[int, int], float]:
    """Per-pair probability of each click pattern ``(click_B1, click_B2)``.

    Detectors do not resolve photon number: two photons in one output give a
    single click.
    """
    if source == "pairs":
        return _pair_patterns(bs, mu, loss)
    if source == "classical":
        return _classical_patterns(bs, mu, loss)
    raise ValueError(f"unknown source model {source!r}")


def calibrate(singles_rate: float, coincidence_rate: float, bs: BeamsplitterParams):
    """Pair rate and per-photon path efficiency for target detector rates.

    Solves ``singles = pair_rate * eta`` and
    ``coincidences = pair_rate * eta^2 * (R^2 + T^2)`` (distinguishable
    photons, symmetric arms). Rates in counts/s.
    """
    if singles_rate <= 0 or coincidence_rate <= 0:
        raise ValueError("target rates must be positive")
    eta = coincidence_rate / (singles_rate * (bs.R ** 2 + bs.T ** 2))
    if eta > 1:
        raise ValueError("targets need a path efficiency above 1")
    return singles_rate / eta, eta


def _poisson_times(rng: np.random.Generator, rate: float, total_ticks: int, tick_s: float) -> np.ndarray:
    pieces = []
    start = 0
    while start < total_ticks:
        span = min(_BLOCK_TICKS, total_ticks - start)
        n = rng.poisson(rate * span * tick_s)
        if n:
            # sorted uniforms from normalized exponential spacings
            gaps = rng.standard_exponential(n + 1)
            np.cumsum(gaps, out=gaps)
            u = gaps[:-1] / gaps[-1]
            pieces.append(start + np.floor(u * span).astype(np.int64))
        start += span
    if not pieces:
        return np.empty(0, dtype=np.int64)
    return pieces[0] if len(pieces) == 1 else np.concatenate(pieces)


def stream_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Seed material for stream ``index`` of a run: SeedSequence([seed, index])."""
    return np.random.SeedSequence([int(seed), int(index)])


def simulate_stream(config: SourceConfig, stream_index: int = 0) -> TagStream:
    """Generate one time-ordered tag stream; deterministic in (config, stream_index)."""
    rng = np.random.default_rng(stream_seed(config.seed, stream_index))
    det = config.detector
    tick_s = det.tick_ps * PS
    total_ticks = int(round(config.duration / tick_s))
    probs = detection_probabilities(config.bs, config.mu, config.loss, config.source)
    r = config.pair_rate

    both = _poisson_times(rng, r * probs[(1, 1)], total_ticks, tick_s)
    only1 = _poisson_times(rng, r * probs[(1, 0)] + det.dark_rate, total_ticks, tick_s)
    only2 = _poisson_times(rng, r * probs[(0, 1)] + det.dark_rate, total_ticks, tick_s)

    ch1 = _kernels.merge_sorted(only1, both)
    del only1
    ch2 = _kernels.merge_sorted(only2, both)
    del only2, both
    if det.dead_time > 0:
        dead = int(math.ceil(det.dead_time / tick_s))
        ch1 = _kernels.apply_dead_time(ch1, dead)
        ch2 = _kernels.apply_dead_time(ch2, dead)
    ts, ch = _kernels.merge_channels(ch1, ch2)
    del ch1, ch2
    if det.tick_ps != 1:
        ts *= det.tick_ps
    return TagStream(ts, ch, config.duration)


@dataclass(frozen=True)
class StreamHandle:
    """Lazily generated stream for one point of a delay scan."""

    config: SourceConfig
    index: int

    @property
    def delay(self) -> float:
        return self.config.delay

    def stream(self) -> TagStream:
        return simulate_stream(self.config, stream_index=self.index)


def simulate_scan(config: SourceConfig, scan) -> List[Tuple[float, StreamHandle]]:
    """One independent, reproducible stream per delay in ``scan``."""
    return [
        (float(d), StreamHandle(replace(config, delay=float(d)), i))
        for i, d in enumerate(scan)
    ]
