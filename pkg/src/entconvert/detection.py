"""Analyzer projections, the closed-form coincidence law, and Poisson counting."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .analysis import ANGLE_SCAN, FringeSample, FringeScan, PAPER_A, PAPER_B
from .modes import PathMode, PathSet, Polarization, SingleMode

if TYPE_CHECKING:
    from .apparatus import EffectiveSource


@dataclass(frozen=True)
class AnalyzerSetting:
    """Analyzer angles (radians from H) in paths Aout and Bout, reduced to [0, pi)."""

    theta_a: float
    theta_b: float

    def __post_init__(self):
        object.__setattr__(self, "theta_a", _reduce(self.theta_a))
        object.__setattr__(self, "theta_b", _reduce(self.theta_b))

    @classmethod
    def from_degrees(cls, theta_a_deg: float, theta_b_deg: float) -> AnalyzerSetting:
        return cls(math.radians(theta_a_deg), math.radians(theta_b_deg))

    def rotated(self, da: float = 0.0, db: float = 0.0) -> AnalyzerSetting:
        return AnalyzerSetting(self.theta_a + da, self.theta_b + db)


def _reduce(theta: float) -> float:
    r = math.fmod(theta, math.pi)
    if r < 0:
        r += math.pi
    return 0.0 if r >= math.pi else r


@dataclass(frozen=True)
class CountRecord:
    setting: AnalyzerSetting
    duration: float
    singles_a: int
    singles_b: int
    coincidences: int
    seed: int


def analyzer_vector(theta: float, path: PathMode) -> np.ndarray:
    """Transmitted polarization cos(theta) H + sin(theta) V on ``path``."""
    v = np.zeros(4)
    v[SingleMode(Polarization.H, path).index] = math.cos(theta)
    v[SingleMode(Polarization.V, path).index] = math.sin(theta)
    return v


# Slots reached by each slit of origin after the interferometer:
# slit A -> (H,Aout)(V,Bout), slit B -> (V,Aout)(H,Bout).
_BRANCH_A = np.zeros((4, 4), dtype=bool)
_BRANCH_A[0, 3] = _BRANCH_A[3, 0] = True
_BRANCH_B = np.zeros((4, 4), dtype=bool)
_BRANCH_B[2, 1] = _BRANCH_B[1, 2] = True
_BRANCH_REST = ~(_BRANCH_A | _BRANCH_B)


def _pass_probability(amp: np.ndarray, ua: np.ndarray, ub: np.ndarray) -> float:
    # one photon in each of two orthogonal modes: p = 2 |<ua ub|psi>|^2
    c = ua.conj() @ amp @ ub.conj()
    return 2.0 * abs(c) ** 2


def coincidence_probability(src: EffectiveSource, setting: AnalyzerSetting) -> float:
    """Probability that both analyzers transmit.

    Interference between the two slit-of-origin branches is scaled by
    ``src.cross_factor``; the incoherent remainder is the branch-wise sum.
    """
    state = src.state
    if state.pathset is not PathSet.OUTPUT:
        raise ValueError("coincidences are defined on the output paths")
    ua = analyzer_vector(setting.theta_a, PathMode.Aout)
    ub = analyzer_vector(setting.theta_b, PathMode.Bout)
    coherent = _pass_probability(state.amp, ua, ub)
    gamma = src.cross_factor
    if gamma == 1.0:
        p = coherent
    else:
        incoherent = sum(
            _pass_probability(np.where(mask, state.amp, 0.0), ua, ub)
            for mask in (_BRANCH_A, _BRANCH_B, _BRANCH_REST)
        )
        p = gamma * coherent + (1.0 - gamma) * incoherent
    return min(max(p, 0.0), 1.0)


def closed_form_probability(epsilon, phi, gamma, theta_a, theta_b):
    """Analytic coincidence law for the interferometer output; broadcasts over arrays."""
    ce, se = np.cos(epsilon), np.sin(epsilon)
    ca, sa = np.cos(theta_a), np.sin(theta_a)
    cb, sb = np.cos(theta_b), np.sin(theta_b)
    return (
        ce**2 * ca**2 * sb**2
        + se**2 * sa**2 * cb**2
        + 2.0 * gamma * ce * se * ca * sa * cb * sb * np.cos(phi)
    )


def marginal_probabilities(src: EffectiveSource, setting: AnalyzerSetting) -> tuple[float, float]:
    """Single-analyzer transmission probabilities in Aout and Bout."""
    half = math.pi / 2
    p = coincidence_probability(src, setting)
    p_a = p + coincidence_probability(src, setting.rotated(db=half))
    p_b = p + coincidence_probability(src, setting.rotated(da=half))
    return min(p_a, 1.0), min(p_b, 1.0)


def derive_seed(base: int, index: int) -> int:
    """Per-sample seed from (base seed, sample index)."""
    if base < 0 or index < 0:
        raise ValueError("seeds and indices must be non-negative")
    return int(np.random.SeedSequence([base, index]).generate_state(1, dtype=np.uint64)[0])


def simulate_counts(
    src: EffectiveSource,
    setting: AnalyzerSetting,
    pair_rate: float,
    duration: float,
    seed: int,
) -> CountRecord:
    """Draw singles and coincidences for one setting.

    Coincidences ~ Poisson(N p_c). Each singles channel adds an independent
    Poisson(N (p_x - p_c)) on top of the coincidences, so its marginal is
    Poisson(N p_x) and it never falls below the coincidence count.
    """
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    if pair_rate <= 0:
        raise ValueError(f"pair_rate must be positive, got {pair_rate}")
    rng = np.random.default_rng(seed)
    n = pair_rate * duration
    p_c = coincidence_probability(src, setting)
    p_a, p_b = marginal_probabilities(src, setting)
    coinc = int(rng.poisson(n * p_c))
    singles_a = coinc + int(rng.poisson(n * max(p_a - p_c, 0.0)))
    singles_b = coinc + int(rng.poisson(n * max(p_b - p_c, 0.0)))
    return CountRecord(setting, duration, singles_a, singles_b, coinc, seed)


def scan_angle(
    src: EffectiveSource,
    theta_b_fixed: float,
    theta_a_values: Sequence[float],
    pair_rate: float,
    duration: float,
    seed: int,
) -> FringeScan:
    """Rotate the Aout analyzer with Bout fixed; angles in radians, x in degrees."""
    if len(theta_a_values) == 0:
        raise ValueError("theta_a_values is empty")
    samples = []
    for i, theta_a in enumerate(theta_a_values):
        setting = AnalyzerSetting(theta_a, theta_b_fixed)
        rec = simulate_counts(src, setting, pair_rate, duration, derive_seed(seed, i))
        samples.append(FringeSample(
            x=math.degrees(theta_a),
            counts=rec.coincidences,
            duration=duration,
            singles_a=rec.singles_a,
            singles_b=rec.singles_b,
            probability_model=coincidence_probability(src, setting),
        ))
    return FringeScan(tuple(samples), ANGLE_SCAN)


def chsh_settings_deg(
    a: Sequence[float] = PAPER_A, b: Sequence[float] = PAPER_B
) -> list[tuple[float, float]]:
    """The 16 (theta_a, theta_b) pairs: each angle and its 90-degree partner."""
    angles_a = [a[0], a[1], a[0] + 90.0, a[1] + 90.0]
    angles_b = [b[0], b[1], b[0] + 90.0, b[1] + 90.0]
    angles_a = sorted(x % 180.0 for x in angles_a)
    angles_b = sorted(x % 180.0 for x in angles_b)
    return [(ta, tb) for ta in angles_a for tb in angles_b]


def expected_chsh_counts(
    src: EffectiveSource, n_pairs: float, settings_deg=None
) -> dict[tuple[float, float], float]:
    """Exact expected coincidences N p for every CHSH setting."""
    settings_deg = settings_deg or chsh_settings_deg()
    return {
        (ta, tb): n_pairs * coincidence_probability(src, AnalyzerSetting.from_degrees(ta, tb))
        for ta, tb in settings_deg
    }


def simulate_chsh(
    src: EffectiveSource, pair_rate: float, duration: float, seed: int, settings_deg=None
) -> list[CountRecord]:
    settings_deg = settings_deg or chsh_settings_deg()
    return [
        simulate_counts(src, AnalyzerSetting.from_degrees(ta, tb), pair_rate, duration, derive_seed(seed, i))
        for i, (ta, tb) in enumerate(settings_deg)
    ]
