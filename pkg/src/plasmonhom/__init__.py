"""Plasmonic Hong-Ou-Mandel simulation and time-tag analysis."""
from .analysis import (CoincidenceResult, DipFit, accidental_rate, classical_visibility_oracle,
                       count_coincidences, fit_dip, quantum_threshold_test, visibility)
from .events import (Channel, DetectorModel, SourceConfig, TagStream, TimeTagRecord,
                     detection_probabilities, simulate_scan, simulate_stream)
from .fock import (BeamsplitterParams, LossParams, OverlapParam, TwoModeFockState, apply_loss,
                   fock_unitary_oracle, hom_output_state)
from .plasmonics import (BraggSpec, WaveguideSpec, bragg_lookup, fit_propagation_length,
                         propagation_transmission, relative_transmission)
from .wavepacket import (DelayScan, SpectralProfile, coherence_time, coincidence_probability,
                         overlap)

__version__ = "0.1.0"
