"""Single-photon modes (polarization x path) and symmetric two-photon states.

A two-photon state is stored as a 4x4 complex array ``amp[m1, m2]`` over
ordered mode pairs. The two photons are treated as labelled slots whose
amplitude is symmetric under exchange, so ``amp == amp.T`` always holds.

Mode index layout within a path set::

    0: (H, first path)   1: (H, second path)
    2: (V, first path)   3: (V, second path)

The input path set is {A, B} (the two slits), the output path set is
{Aout, Bout} (after the interferometer).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SYMMETRY_TOL = 1e-12
NORM_TOL = 1e-12
PHASE_EQ_TOL = 1e-9
PRINT_ZERO = 1e-14


class Polarization(enum.Enum):
    H = 0
    V = 1


class PathMode(enum.Enum):
    A = "A"
    B = "B"
    Aout = "Aout"
    Bout = "Bout"

    @property
    def pathset(self) -> PathSet:
        return PathSet.INPUT if self in (PathMode.A, PathMode.B) else PathSet.OUTPUT

    @property
    def slot(self) -> int:
        return 0 if self in (PathMode.A, PathMode.Aout) else 1


class PathSet(enum.Enum):
    INPUT = "input"
    OUTPUT = "output"

    @property
    def paths(self) -> tuple[PathMode, PathMode]:
        if self is PathSet.INPUT:
            return (PathMode.A, PathMode.B)
        return (PathMode.Aout, PathMode.Bout)


class SingleMode(NamedTuple):
    pol: Polarization
    path: PathMode

    @property
    def index(self) -> int:
        return 2 * self.pol.value + self.path.slot

    @property
    def label(self) -> str:
        # "A"/"B" in labels; the path set is carried separately
        return f"{self.pol.name}.{'AB'[self.path.slot]}"


def modes_of(pathset: PathSet) -> list[SingleMode]:
    """All four single-photon modes of ``pathset`` in index order."""
    return [SingleMode(pol, path) for pol in Polarization for path in pathset.paths]


def mode_from_label(label: str, pathset: PathSet) -> SingleMode:
    pol, path = label.split(".")
    return SingleMode(Polarization[pol], pathset.paths["AB".index(path)])


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    """Exchange-symmetric two-photon amplitude over one path set."""

    amp: np.ndarray
    pathset: PathSet

    def __post_init__(self):
        amp = np.array(self.amp, dtype=complex)
        if amp.shape != (4, 4):
            raise ValueError(f"amplitude array must be 4x4, got {amp.shape}")
        if not np.allclose(amp, amp.T, rtol=0.0, atol=SYMMETRY_TOL):
            raise ValueError("two-photon amplitude is not exchange symmetric")
        amp.setflags(write=False)
        object.__setattr__(self, "amp", amp)

    def amplitude(self, m1: SingleMode, m2: SingleMode) -> complex:
        self._check_modes(m1, m2)
        return complex(self.amp[m1.index, m2.index])

    def coefficient(self, m1: SingleMode, m2: SingleMode) -> complex:
        """Coefficient on the normalized symmetric ket of the pair (m1, m2).

        For distinct modes this is sqrt(2) times the ordered-slot amplitude,
        i.e. the coefficient as written when transposed terms are omitted.
        """
        a = self.amplitude(m1, m2)
        return a if m1 == m2 else math.sqrt(2.0) * a

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amp) ** 2)))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def _check_modes(self, *modes: SingleMode) -> None:
        for m in modes:
            if m.path.pathset is not self.pathset:
                raise ValueError(f"mode {m} is not in the {self.pathset.value} path set")

    def terms(self, tol: float = PRINT_ZERO) -> dict[str, complex]:
        """Unordered mode-pair coefficients, with negligible entries dropped."""
        out = {}
        modes = modes_of(self.pathset)
        for i, m1 in enumerate(modes):
            for m2 in modes[i:]:
                c = self.coefficient(m1, m2)
                if abs(c) >= tol:
                    out[f"{m1.label}|{m2.label}"] = c
        return out

    def to_dict(self) -> dict:
        return {
            "pathset": self.pathset.value,
            "amplitudes": {k: [v.real, v.imag] for k, v in self.terms().items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> TwoPhotonState:
        pathset = PathSet(data["pathset"])
        amp = np.zeros((4, 4), dtype=complex)
        for key, (re, im) in data["amplitudes"].items():
            l1, l2 = key.split("|")
            m1, m2 = mode_from_label(l1, pathset), mode_from_label(l2, pathset)
            c = complex(re, im)
            if m1 == m2:
                amp[m1.index, m1.index] = c
            else:
                amp[m1.index, m2.index] = amp[m2.index, m1.index] = c / math.sqrt(2.0)
        return cls(amp, pathset)

    def __str__(self) -> str:
        parts = []
        for key, c in self.terms().items():
            parts.append(f"({c.real:+.6f}{c.imag:+.6f}j)|{key}>")
        return " ".join(parts) or "0"


def symmetrize(ordered: np.ndarray) -> np.ndarray:
    """Add the transposed terms: amp(m1, m2) + amp(m2, m1)."""
    ordered = np.asarray(ordered, dtype=complex)
    return ordered + ordered.T


def _from_terms(terms, pathset: PathSet) -> TwoPhotonState:
    ordered = np.zeros((4, 4), dtype=complex)
    for coef, m1, m2 in terms:
        ordered[m1.index, m2.index] += coef
    return TwoPhotonState(symmetrize(ordered), pathset)


def product_state(m1: SingleMode, m2: SingleMode) -> TwoPhotonState:
    """Symmetrized |m1>|m2> for two distinct modes, normalized."""
    if m1 == m2:
        raise ValueError("product_state needs two distinct modes")
    if m1.path.pathset is not m2.path.pathset:
        raise ValueError("modes belong to different path sets")
    return _from_terms([(1 / math.sqrt(2.0), m1, m2)], m1.path.pathset)


_H, _V = Polarization.H, Polarization.V
_A, _B = PathMode.A, PathMode.B
_AO, _BO = PathMode.Aout, PathMode.Bout


def make_state_eq1() -> TwoPhotonState:
    """Four-term symmetric state of two orthogonally polarized photons behind two slits.

    Each ordered term carries 1/(2*sqrt(2)); adding the transposed terms
    gives a unit-norm state.
    """
    c = 1.0 / (2.0 * math.sqrt(2.0))
    terms = [
        (c, SingleMode(_H, _A), SingleMode(_V, _A)),
        (c, SingleMode(_H, _B), SingleMode(_V, _B)),
        (c, SingleMode(_H, _A), SingleMode(_V, _B)),
        (c, SingleMode(_H, _B), SingleMode(_V, _A)),
    ]
    return _from_terms(terms, PathSet.INPUT)


def make_state_eq2(epsilon: float = math.pi / 4) -> TwoPhotonState:
    """Spatially correlated pair: both photons leave through slit A or both through B.

    ``epsilon`` sets the slit balance: cos(epsilon) weights slit A and
    sin(epsilon) slit B, so pi/4 is the balanced case.
    """
    if not 0.0 <= epsilon <= math.pi / 2:
        raise ValueError(f"epsilon must lie in [0, pi/2], got {epsilon}")
    s = 1.0 / math.sqrt(2.0)
    terms = [
        (s * math.cos(epsilon), SingleMode(_H, _A), SingleMode(_V, _A)),
        (s * math.sin(epsilon), SingleMode(_H, _B), SingleMode(_V, _B)),
    ]
    return _from_terms(terms, PathSet.INPUT)


def make_bell(phase: float = 0.0) -> TwoPhotonState:
    """(|H,Aout>|V,Bout> + e^{i phase}|V,Aout>|H,Bout>)/sqrt(2), symmetrized.

    phase=0 is the triplet, phase=pi the singlet.
    """
    s = 0.5
    terms = [
        (s, SingleMode(_H, _AO), SingleMode(_V, _BO)),
        (s * np.exp(1j * phase), SingleMode(_V, _AO), SingleMode(_H, _BO)),
    ]
    return _from_terms(terms, PathSet.OUTPUT)


def inner_product(s1: TwoPhotonState, s2: TwoPhotonState) -> complex:
    """<s1|s2>, conjugate-linear in ``s1``."""
    if s1.pathset is not s2.pathset:
        raise ValueError(
            f"path sets differ: {s1.pathset.value} vs {s2.pathset.value}"
        )
    return complex(np.vdot(s1.amp, s2.amp))


def normalize(s: TwoPhotonState) -> TwoPhotonState:
    n = s.norm()
    if n == 0.0:
        raise ValueError("cannot normalize the zero state")
    return TwoPhotonState(s.amp / n, s.pathset)


def equal_up_to_phase(s1: TwoPhotonState, s2: TwoPhotonState, tol: float = PHASE_EQ_TOL) -> bool:
    """True when the states agree after removing a global phase."""
    if s1.pathset is not s2.pathset:
        return False
    overlap = inner_product(s1, s2)
    if abs(overlap) == 0.0:
        return bool(np.allclose(s1.amp, s2.amp, rtol=0.0, atol=tol))
    phase = overlap / abs(overlap)
    return bool(np.allclose(s1.amp * phase, s2.amp, rtol=0.0, atol=tol))


def relabel_paths(s: TwoPhotonState, pathset: PathSet) -> TwoPhotonState:
    """Reinterpret the amplitudes on the other path set (Aout<->A, Bout<->B)."""
    return TwoPhotonState(s.amp, pathset)
