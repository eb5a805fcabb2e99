"""Flat ``key = value`` run configuration.

Lines are ``key = value`` with ``#`` comments. Durations take unit suffixes
(``2ns``, ``0.15ps``, ``9.2h``); bare numbers are seconds.
"""
from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

from .events import DetectorModel, SourceConfig, calibrate
from .fock import BeamsplitterParams, LossParams
from .plasmonics import BraggSpec, WaveguideSpec, beamsplitter_at, read_bragg_table
from .wavepacket import DelayScan, SpectralProfile

_UNITS = {
    "": 1.0, "s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9,
    "ps": 1e-12, "fs": 1e-15, "min": 60.0, "h": 3600.0,
}
_DURATION_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zµ]*)\s*$")


class ConfigError(ValueError):
    pass


def parse_duration(text: str) -> float:
    """``'2ns'`` -> ``2e-9``; bare numbers are seconds."""
    m = _DURATION_RE.match(str(text))
    if not m or m.group(2) not in _UNITS:
        raise ValueError(f"cannot parse duration {text!r}")
    return float(m.group(1)) * _UNITS[m.group(2)]


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return v


@dataclass(frozen=True)
class RunConfig:
    profile: str = "plasmonic"
    source: str = "pairs"
    seed: int = 0
    duration: float = 3600.0
    # spectrum
    center_wavelength_nm: float = 800.0
    fwhm_wavelength_nm: float = 22.0
    operating_wavelength_nm: float = 808.0
    # splitter
    transmission: float = 0.49
    bragg_table: str = ""
    ridge_period_nm: float = 500.0
    mode_overlap: float = 1.0
    # waveguide
    grating_to_grating_um: float = 12.5
    propagation_length_um: float = 12.4
    scattering_loss: float = 0.0
    # rates and efficiencies
    pair_rate: float = 0.0
    coupling_in: float = 1.0
    coupling_out: float = 1.0
    target_singles_cph: float = 0.0
    target_coincidence_cph: float = 0.0
    # detectors
    timing_resolution: float = 1e-12
    dead_time: float = 0.0
    dark_rate: float = 0.0
    # scan and analysis
    scan_start: float = -0.15e-12
    scan_stop: float = 0.15e-12
    scan_points: int = 21
    window: float = 2e-9
    base_dir: str = "."

    def __post_init__(self):
        if self.profile not in ("plasmonic", "photonic"):
            raise ConfigError(f"profile must be plasmonic or photonic, got {self.profile!r}")
        if self.window <= 0:
            raise ConfigError("window must be positive")
        if self.scan_points < 1:
            raise ConfigError("scan must have at least one point")
        if self.scan_points > 1 and self.scan_stop <= self.scan_start:
            raise ConfigError("scan_stop must exceed scan_start")
        if self.bragg_table and not self.bragg_path.exists():
            raise ConfigError(f"bragg_table {self.bragg_path} does not exist")
        if not 0 <= self.scattering_loss < 1:
            raise ConfigError("scattering_loss must lie in [0, 1)")
        if (self.target_singles_cph > 0) != (self.target_coincidence_cph > 0):
            raise ConfigError("set both target_singles_cph and target_coincidence_cph, or neither")

    @property
    def bragg_path(self) -> Path:
        p = Path(self.bragg_table)
        return p if p.is_absolute() else Path(self.base_dir) / p

    @property
    def calibrated(self) -> bool:
        return self.target_singles_cph > 0

    def spectral_profile(self) -> SpectralProfile:
        return SpectralProfile(self.center_wavelength_nm, self.fwhm_wavelength_nm)

    def bragg(self) -> BraggSpec:
        if self.bragg_table:
            return read_bragg_table(self.bragg_path, self.ridge_period_nm)
        return BraggSpec(self.ridge_period_nm, ((self.operating_wavelength_nm, self.transmission),))

    def beamsplitter(self) -> BeamsplitterParams:
        return beamsplitter_at(self.bragg(), self.operating_wavelength_nm)

    def waveguide(self) -> WaveguideSpec:
        return WaveguideSpec(grating_to_grating_um=self.grating_to_grating_um,
                             propagation_length_um=self.propagation_length_um)

    def _arm_factors(self):
        if self.profile == "plasmonic":
            half = self.waveguide().arm_transmission()
            return half, half * (1.0 - self.scattering_loss)
        return 1.0, 1.0

    def rates(self):
        """``(pair_rate, eta_in, eta_out)`` after calibration to target rates."""
        f_in, f_out = self._arm_factors()
        eta_in = self.coupling_in * f_in
        if not self.calibrated:
            return self.pair_rate, eta_in, self.coupling_out * f_out
        try:
            pair_rate, eta = calibrate(self.target_singles_cph / 3600.0,
                                       self.target_coincidence_cph / 3600.0, self.beamsplitter())
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        eta_out = eta / eta_in
        if eta_out > f_out:
            raise ConfigError("target rates need an out-coupling efficiency above 1")
        return pair_rate, eta_in, eta_out

    def loss(self) -> LossParams:
        _, eta_in, eta_out = self.rates()
        return LossParams(eta_in, eta_in, eta_out, eta_out)

    def detector(self) -> DetectorModel:
        return DetectorModel(self.timing_resolution, self.dead_time, self.dark_rate)

    def scan(self) -> DelayScan:
        return DelayScan.linear(self.scan_start, self.scan_stop, self.scan_points)

    def source_config(self) -> SourceConfig:
        pair_rate, _, _ = self.rates()
        return SourceConfig(
            pair_rate=pair_rate, duration=self.duration, seed=self.seed, delay=0.0,
            profile=self.spectral_profile(), bs=self.beamsplitter(), loss=self.loss(),
            detector=self.detector(), mode_overlap=self.mode_overlap, source=self.source,
        )

    def to_dict(self) -> dict:
        return asdict(self)


_PARSERS = {}
for _f in fields(RunConfig):
    if _f.name == "base_dir":
        continue
    if _f.name in ("duration", "timing_resolution", "dead_time", "scan_start", "scan_stop", "window"):
        _PARSERS[_f.name] = parse_duration
    elif _f.name == "seed":
        _PARSERS[_f.name] = _seed
    elif _f.type in ("int",):
        _PARSERS[_f.name] = int
    elif _f.type in ("float",):
        _PARSERS[_f.name] = float
    elif _f.type in ("bool",):
        _PARSERS[_f.name] = _bool
    else:
        _PARSERS[_f.name] = str


def parse_config(text: str, source: str = "<config>", base_dir=".") -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None
        if isinstance(values[key], float) and not math.isfinite(values[key]):
            raise ConfigError(f"{source}:{lineno}: {key}: value must be finite")
    try:
        cfg = RunConfig(base_dir=str(base_dir), **values)
        cfg.source_config()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return cfg


def load_config(path) -> RunConfig:
    """Load a config file; a bare name like ``paper_plasmonic`` loads a shipped default."""
    p = Path(path)
    if not p.exists():
        name = p.name if p.suffix == ".cfg" else p.name + ".cfg"
        shipped = resources.files("plasmonhom") / "data" / name
        if not shipped.is_file():
            raise ConfigError(f"{path}: no such config file")
        return parse_config(shipped.read_text(), source=name, base_dir=".")
    return parse_config(p.read_text(), source=str(p), base_dir=p.parent)


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    kw = {k: v for k, v in kw.items() if v is not None}
    return replace(cfg, **kw) if kw else cfg
