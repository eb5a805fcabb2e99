"""Two-mode Fock-space model of a lossy two-photon beamsplitter.

Mode convention: input ports A and B, output ports B1 and B2, with

    a_A^dag -> i sqrt(R) b1^dag + sqrt(T) b2^dag
    a_B^dag -> sqrt(T) b1^dag + i sqrt(R) b2^dag

The factor ``i`` on reflection is a phase convention; every occupation
probability computed here is independent of it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping, Tuple

Occupation = Tuple[int, int]

_TOL = 1e-12


@dataclass(frozen=True)
class BeamsplitterParams:
    """Relative reflectance and transmittance of the splitting element."""

    R: float
    T: float

    def __post_init__(self):
        if not (0.0 <= self.R <= 1.0 and 0.0 <= self.T <= 1.0):
            raise ValueError(f"R and T must lie in [0, 1], got R={self.R}, T={self.T}")
        if abs(self.R + self.T - 1.0) >= _TOL:
            raise ValueError(f"R + T must equal 1, got {self.R + self.T!r}")

    @classmethod
    def from_transmission(cls, T: float) -> "BeamsplitterParams":
        return cls(R=1.0 - T, T=T)

    @classmethod
    def balanced(cls) -> "BeamsplitterParams":
        return cls(R=0.5, T=0.5)


@dataclass(frozen=True)
class LossParams:
    """Per-arm intensity transmission. Input arms A/B, output arms B1/B2."""

    eta_in_A: float = 1.0
    eta_in_B: float = 1.0
    eta_out_1: float = 1.0
    eta_out_2: float = 1.0

    def __post_init__(self):
        for name in ("eta_in_A", "eta_in_B", "eta_out_1", "eta_out_2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def pair_efficiency(self) -> float:
        """Probability that both photons of a pair survive every arm."""
        return self.eta_in_A * self.eta_in_B * self.eta_out_1 * self.eta_out_2


@dataclass(frozen=True)
class OverlapParam:
    """Mode-overlap amplitude between the two single-photon wavepackets."""

    mu: float

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"overlap mu must lie in [0, 1], got {self.mu}")


@dataclass(frozen=True)
class TwoModeFockState:
    """Amplitudes over occupations ``(n1, n2)`` of the output modes B1, B2.

    For partially distinguishable or lossy states the object describes a
    mixture: ``|amplitude|**2`` is the exact occupation probability and the
    phase is carried over from the coherent (indistinguishable) part.
    """

    amplitudes: Mapping[Occupation, complex]
    max_total: int = 4
    _probs: Dict[Occupation, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        amps = {}
        for (n1, n2), a in self.amplitudes.items():
            n1, n2 = int(n1), int(n2)
            if n1 < 0 or n2 < 0 or n1 + n2 > self.max_total:
                raise ValueError(f"occupation {(n1, n2)} outside 0 <= n1+n2 <= {self.max_total}")
            amps[(n1, n2)] = amps.get((n1, n2), 0j) + complex(a)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "_probs", {k: abs(a) ** 2 for k, a in amps.items()})
        if self.norm() > 1.0 + 1e-9:
            raise ValueError(f"total probability {self.norm()} exceeds 1")

    def amplitude(self, n1: int, n2: int) -> complex:
        return self.amplitudes.get((n1, n2), 0j)

    def probability(self, n1: int, n2: int) -> float:
        return self._probs.get((n1, n2), 0.0)

    def probabilities(self) -> Dict[Occupation, float]:
        return dict(self._probs)

    def norm(self) -> float:
        return math.fsum(self._probs.values())

    def sector(self, total: int) -> Dict[Occupation, float]:
        """Probabilities of occupations with exactly ``total`` photons."""
        return {k: p for k, p in self._probs.items() if k[0] + k[1] == total}

    def conditional(self, total: int) -> Dict[Occupation, float]:
        """Occupation distribution conditioned on ``total`` surviving photons."""
        sec = self.sector(total)
        z = math.fsum(sec.values())
        if z == 0.0:
            raise ValueError(f"no probability in the {total}-photon sector")
        return {k: p / z for k, p in sec.items()}

    def __iter__(self) -> Iterator[Occupation]:
        return iter(sorted(self.amplitudes))


def hom_output_state(bs: BeamsplitterParams, mu: OverlapParam | float = 1.0) -> TwoModeFockState:
    """Output of the beamsplitter for one photon in each input port.

    With full overlap the state is pure::

        i sqrt(2RT) |2,0> + i sqrt(2RT) |0,2> + (T - R) |1,1>

    For overlap ``mu < 1`` the occupation probabilities are
    ``P(2,0) = P(0,2) = RT (1 + mu^2)`` and ``P(1,1) = R^2 + T^2 - 2 RT mu^2``.
    """
    if not isinstance(mu, OverlapParam):
        mu = OverlapParam(float(mu))
    R, T, m2 = bs.R, bs.T, mu.mu ** 2
    if mu.mu == 1.0:
        bunched = 1j * math.sqrt(2.0 * R * T)
        coinc = complex(T - R)
    else:
        bunched = 1j * math.sqrt(R * T * (1.0 + m2))
        p11 = max(R * R + T * T - 2.0 * R * T * m2, 0.0)
        coinc = complex(math.copysign(math.sqrt(p11), T - R))
    return TwoModeFockState({(2, 0): bunched, (0, 2): bunched, (1, 1): coinc}, max_total=2)


def _binomial_survival(n: int, eta: float) -> Iterator[Tuple[int, float]]:
    for k in range(n + 1):
        yield k, math.comb(n, k) * eta ** k * (1.0 - eta) ** (n - k)


def apply_loss(state: TwoModeFockState, loss: LossParams) -> TwoModeFockState:
    """Independent per-photon survival in each output mode.

    Uniform input loss commutes with any passive beamsplitter, so equal input
    efficiencies are folded into the output survival probabilities. Unequal
    input efficiencies depend on which input photon was lost and cannot be
    applied to an output state; use
    :func:`plasmonhom.events.detection_probabilities` for that case.
    """
    if loss.eta_in_A != loss.eta_in_B:
        raise ValueError(
            "unequal input efficiencies do not commute with the beamsplitter; "
            "apply them before the splitting step"
        )
    eta1 = loss.eta_in_A * loss.eta_out_1
    eta2 = loss.eta_in_A * loss.eta_out_2
    probs: Dict[Occupation, float] = {}
    phases: Dict[Occupation, complex] = {}
    for (n1, n2), amp in state.amplitudes.items():
        for k1, p1 in _binomial_survival(n1, eta1):
            for k2, p2 in _binomial_survival(n2, eta2):
                w = p1 * p2
                if w == 0.0:
                    continue
                key = (k1, k2)
                probs[key] = probs.get(key, 0.0) + w * abs(amp) ** 2
                if (k1, k2) == (n1, n2) and amp != 0:
                    phases[key] = amp / abs(amp)
    out = {}
    for key, p in probs.items():
        # only the untouched sector keeps a coherent phase
        out[key] = math.sqrt(p) * phases.get(key, 1.0)
    return TwoModeFockState(out, max_total=state.max_total)


def fock_unitary_oracle(n_A: int, n_B: int, bs: BeamsplitterParams, max_total: int = 4) -> TwoModeFockState:
    """Brute-force output for ``|n_A, n_B>`` by polynomial expansion.

    Expands ``(i sqrt(R) b1 + sqrt(T) b2)^n_A (sqrt(T) b1 + i sqrt(R) b2)^n_B``
    in creation operators and applies the bosonic factors
    ``sqrt(p! q!) / sqrt(n_A! n_B!)``.
    """
    if n_A < 0 or n_B < 0:
        raise ValueError("photon numbers must be non-negative")
    if n_A + n_B > max_total:
        raise OverflowError(f"n_A + n_B = {n_A + n_B} exceeds max_total = {max_total}")
    r, t = math.sqrt(bs.R), math.sqrt(bs.T)
    poly: Dict[Occupation, complex] = {(0, 0): 1.0 + 0j}
    factors = [(1j * r, t)] * n_A + [(t, 1j * r)] * n_B
    for c1, c2 in factors:
        nxt: Dict[Occupation, complex] = {}
        for (p, q), c in poly.items():
            nxt[(p + 1, q)] = nxt.get((p + 1, q), 0j) + c * c1
            nxt[(p, q + 1)] = nxt.get((p, q + 1), 0j) + c * c2
        poly = nxt
    norm_in = math.sqrt(math.factorial(n_A) * math.factorial(n_B))
    amps = {
        (p, q): c * math.sqrt(math.factorial(p) * math.factorial(q)) / norm_in
        for (p, q), c in poly.items()
        if c != 0
    }
    return TwoModeFockState(amps, max_total=max_total)
