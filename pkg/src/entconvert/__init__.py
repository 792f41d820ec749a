"""Simulation of polarization entanglement converted from slit-correlated photon pairs."""

__version__ = "0.1.0"

from .modes import (
    PathMode,
    PathSet,
    Polarization,
    SingleMode,
    TwoPhotonState,
    equal_up_to_phase,
    inner_product,
    make_bell,
    make_state_eq1,
    make_state_eq2,
    normalize,
)
from .elements import OpticalElement, hwp_rotation, lift_apply, mirror_tilt, qwp_flip, roof_mirror_arm1
from .apparatus import ApparatusConfig, EffectiveSource, FilterSpec, build_source, overlap_factor, scan_delta_l
from .detection import AnalyzerSetting, CountRecord, coincidence_probability, scan_angle, simulate_counts
from .analysis import ChshResult, FringeFit, FringeScan, chsh_s, correlation_e, fit_fringe
