"""Linear optical elements acting on the four single-photon modes.

Each element is a 4x4 matrix in the mode index layout of
:mod:`entconvert.modes`; its two-photon action is ``M amp M^T``.
Reflection phases of the PBS and mirrors are absorbed into the convention,
so the only physical relative phase is the one set by :func:`mirror_tilt`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .modes import PathSet, TwoPhotonState

UNITARY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class OpticalElement:
    """A single-photon linear map.

    ``pathset_in``/``pathset_out`` are ``None`` for elements that work on
    either path set and leave it unchanged (wave plates, analyzer rotations).
    """

    matrix: np.ndarray
    label: str
    pathset_in: Optional[PathSet] = None
    pathset_out: Optional[PathSet] = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"element matrix must be 4x4, got {m.shape}")
        if (self.pathset_in is None) != (self.pathset_out is None):
            raise ValueError("pathset_in and pathset_out must both be set or both be None")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        return bool(np.allclose(self.matrix.conj().T @ self.matrix, np.eye(4), rtol=0.0, atol=tol))

    def __matmul__(self, other: OpticalElement) -> OpticalElement:
        """``self @ other``: apply ``other`` first, then ``self``."""
        if not isinstance(other, OpticalElement):
            return NotImplemented
        if other.pathset_out is not None and self.pathset_in is not None:
            if other.pathset_out is not self.pathset_in:
                raise ValueError(f"cannot compose {self.label} after {other.label}: path sets differ")
        pin = other.pathset_in if other.pathset_in is not None else self.pathset_in
        pout = self.pathset_out if self.pathset_out is not None else other.pathset_out
        return OpticalElement(self.matrix @ other.matrix, f"{self.label}*{other.label}", pin, pout)


def lift_apply(e: OpticalElement, s: TwoPhotonState) -> TwoPhotonState:
    """Apply ``e`` to both photons: amp'(m1, m2) = sum M(m1, n1) M(m2, n2) amp(n1, n2)."""
    if e.pathset_in is not None and e.pathset_in is not s.pathset:
        raise ValueError(
            f"{e.label} expects the {e.pathset_in.value} path set, state is on {s.pathset.value}"
        )
    out = e.pathset_out if e.pathset_out is not None else s.pathset
    return TwoPhotonState(e.matrix @ s.amp @ e.matrix.T, out)


def identity() -> OpticalElement:
    return OpticalElement(np.eye(4), "identity")


def roof_mirror_arm1() -> OpticalElement:
    """Net PBS -> arms -> PBS map of the modified Michelson interferometer.

    H photons (arm 2, plane mirror) keep their path: A->Aout, B->Bout.
    V photons (arm 1, roof mirror) swap: A->Bout, B->Aout.
    """
    # columns are inputs (H,A) (H,B) (V,A) (V,B); rows outputs on Aout/Bout
    m = np.zeros((4, 4))
    m[0, 0] = 1.0
    m[1, 1] = 1.0
    m[3, 2] = 1.0
    m[2, 3] = 1.0
    return OpticalElement(m, "interferometer", PathSet.INPUT, PathSet.OUTPUT)


def mirror_tilt(phi: float) -> OpticalElement:
    """Phase e^{i phi} on the (H, B) mode, from a tilt of the plane mirror."""
    m = np.eye(4, dtype=complex)
    m[1, 1] = np.exp(1j * phi)
    return OpticalElement(m, f"tilt({phi:.6g})", PathSet.INPUT, PathSet.INPUT)


def qwp_flip() -> OpticalElement:
    """Double-passed quarter-wave plate: H <-> V on each path, no phase."""
    m = np.zeros((4, 4))
    m[2, 0] = m[3, 1] = m[0, 2] = m[1, 3] = 1.0
    return OpticalElement(m, "qwp_flip")


def hwp_rotation(theta: float) -> OpticalElement:
    """Rotate the polarization basis by ``theta`` on both paths.

    H -> cos(theta) H + sin(theta) V, V -> -sin(theta) H + cos(theta) V.
    ``theta`` is the analyzer angle; the physical wave-plate angle is theta/2.
    """
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return OpticalElement(np.kron(rot, np.eye(2)), f"hwp({theta:.6g})")
