"""Fringe fitting and CHSH evaluation from coincidence counts."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

ANGLE_SCAN = "angle_scan"
DL_SCAN = "dl_scan"
MIN_ANGLE_SAMPLES = 8
MIN_DL_SAMPLES = 4
DL_MAX_ITER = 100
DL_XTOL = 1e-10

SCAN_COLUMNS = ("duration_s", "singles_a", "singles_b", "coincidences", "probability_model")
X_COLUMN = {ANGLE_SCAN: "setting_deg", DL_SCAN: "delta_l_um"}
CHSH_COLUMNS = ("theta_a_deg", "theta_b_deg", "coincidences", "duration_s")


class FitError(ValueError):
    """Raised when a fringe fit is underdetermined."""


class FitConvergenceError(RuntimeError):
    """Raised when the iterative envelope fit hits its iteration cap."""


@dataclass(frozen=True)
class FringeSample:
    x: float
    counts: float
    duration: float
    singles_a: Optional[int] = None
    singles_b: Optional[int] = None
    probability_model: Optional[float] = None


@dataclass(frozen=True)
class FringeScan:
    """Ordered scan samples. ``x`` is an angle in degrees or a delay in micrometres."""

    samples: tuple[FringeSample, ...]
    kind: str = ANGLE_SCAN

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.kind not in X_COLUMN:
            raise ValueError(f"unknown scan kind {self.kind!r}")
        if not self.samples:
            raise ValueError("scan has no samples")
        xs = [s.x for s in self.samples]
        if len(set(xs)) != len(xs):
            raise ValueError("scan x values must be distinct")
        for s in self.samples:
            if s.duration <= 0:
                raise ValueError("sample duration must be positive")
            if s.counts < 0:
                raise ValueError("counts must be non-negative")

    @property
    def x(self) -> np.ndarray:
        return np.array([s.x for s in self.samples], dtype=float)

    @property
    def counts(self) -> np.ndarray:
        """Counts rescaled to the first sample's duration."""
        d0 = self.samples[0].duration
        return np.array([s.counts * d0 / s.duration for s in self.samples], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow((X_COLUMN[self.kind],) + SCAN_COLUMNS)
        for s in self.samples:
            w.writerow((
                f"{s.x:.4f}",
                f"{s.duration:g}",
                "" if s.singles_a is None else int(s.singles_a),
                "" if s.singles_b is None else int(s.singles_b),
                _fmt_count(s.counts),
                "" if s.probability_model is None else f"{s.probability_model:.10f}",
            ))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> FringeScan:
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("scan CSV has no rows")
        header = list(rows[0].keys())
        kinds = [k for k, col in X_COLUMN.items() if col in header]
        missing = [c for c in SCAN_COLUMNS if c not in header]
        if len(kinds) != 1 or missing:
            raise ValueError(f"unrecognized scan CSV header: {header}")
        kind = kinds[0]

        def opt(v, conv):
            return None if v in ("", None) else conv(v)

        samples = [
            FringeSample(
                x=float(r[X_COLUMN[kind]]),
                counts=float(r["coincidences"]),
                duration=float(r["duration_s"]),
                singles_a=opt(r["singles_a"], int),
                singles_b=opt(r["singles_b"], int),
                probability_model=opt(r["probability_model"], float),
            )
            for r in rows
        ]
        return cls(tuple(samples), kind)


def _fmt_count(c: float) -> str:
    return str(int(c)) if float(c).is_integer() else repr(float(c))


@dataclass(frozen=True)
class FringeFit:
    offset: float
    amplitude: float
    phase: Optional[float]
    visibility: float
    residual_rms: float
    width: Optional[float] = None
    kind: str = ANGLE_SCAN

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "offset": self.offset,
            "amplitude": self.amplitude,
            "phase": self.phase,
            "width": self.width,
            "visibility": self.visibility,
            "residual_rms": self.residual_rms,
        }


def fit_fringe(scan: FringeScan, partner: Optional[FringeScan] = None) -> FringeFit:
    """Least-squares fringe fit.

    Angle scans use C = offset + amplitude*cos(2*theta - phase), solved
    linearly in the cos/sin coefficients. Delay scans use
    C = base + amp*exp(-dl^2 / (2 w^2)); the visibility is |amp|/base, or,
    when the opposite-sign ``partner`` scan is given, the contrast of the two
    fitted curves at zero delay.
    """
    if scan.kind == ANGLE_SCAN:
        if partner is not None:
            raise ValueError("partner scans are only used for delay scans")
        return _fit_angle(scan)
    fit = _fit_dl(scan)
    if partner is None:
        return fit
    if partner.kind != DL_SCAN:
        raise ValueError("partner must be a delay scan")
    other = _fit_dl(partner)
    peak_a = fit.offset + fit.amplitude
    peak_b = other.offset + other.amplitude
    hi, lo = max(peak_a, peak_b), min(peak_a, peak_b)
    if hi + lo <= 0:
        raise FitError("fitted curves have no positive counts at zero delay")
    vis = (hi - lo) / (hi + lo)
    return FringeFit(fit.offset, fit.amplitude, None, vis, fit.residual_rms, fit.width, DL_SCAN)


def _fit_angle(scan: FringeScan) -> FringeFit:
    if len(scan.samples) < MIN_ANGLE_SAMPLES:
        raise FitError(f"angle fit needs at least {MIN_ANGLE_SAMPLES} samples, got {len(scan.samples)}")
    two_theta = 2.0 * np.deg2rad(scan.x)
    y = scan.counts
    design = np.column_stack([np.ones_like(two_theta), np.cos(two_theta), np.sin(two_theta)])
    if np.linalg.matrix_rank(design) < 3:
        raise FitError("angle samples do not determine a sinusoid")
    (offset, ac, as_), *_ = np.linalg.lstsq(design, y, rcond=None)
    amplitude = math.hypot(ac, as_)
    phase = math.atan2(as_, ac)
    if offset <= 0:
        raise FitError("fitted offset is not positive")
    c_max, c_min = offset + amplitude, offset - amplitude
    visibility = (c_max - c_min) / (c_max + c_min)
    resid = y - design @ np.array([offset, ac, as_])
    return FringeFit(
        float(offset), float(amplitude), float(phase), float(visibility),
        float(np.sqrt(np.mean(resid**2))), None, ANGLE_SCAN,
    )


def _gauss_model(p, x):
    base, amp, width = p
    return base + amp * np.exp(-(x**2) / (2.0 * width**2))


def _fit_dl(scan: FringeScan) -> FringeFit:
    if len(scan.samples) < MIN_DL_SAMPLES:
        raise FitError(f"delay fit needs at least {MIN_DL_SAMPLES} samples, got {len(scan.samples)}")
    x, y = scan.x, scan.counts
    order = np.argsort(np.abs(x))
    wings = order[-max(2, len(x) // 4):]
    base0 = float(np.median(y[wings]))
    amp0 = float(y[order[0]] - base0)
    # half-height crossing as the width guess
    half = np.abs(y - base0) >= 0.5 * abs(amp0)
    span = np.ptp(x[half]) if half.sum() > 1 else np.ptp(x) / 4
    width0 = max(span / 2.3548, np.ptp(x) / (10 * len(x)))

    def resid(p):
        return _gauss_model(p, x) - y

    def jac(p):
        base, amp, width = p
        g = np.exp(-(x**2) / (2.0 * width**2))
        return np.column_stack([np.ones_like(x), g, amp * g * x**2 / width**3])

    res = least_squares(
        resid, [base0, amp0, width0], jac=jac, method="trf", x_scale="jac",
        xtol=DL_XTOL, ftol=None, gtol=None, max_nfev=DL_MAX_ITER,
    )
    if res.status == 0:
        raise FitConvergenceError(f"delay fit did not converge in {DL_MAX_ITER} iterations")
    base, amp, width = (float(v) for v in res.x)
    if base <= 0:
        raise FitError("fitted baseline is not positive")
    return FringeFit(
        base, amp, None, abs(amp) / base,
        float(np.sqrt(np.mean(res.fun**2))), abs(width), DL_SCAN,
    )


# -- CHSH ---------------------------------------------------------------------

PAPER_A = (0.0, 45.0)
PAPER_B = (22.5, 67.5)
E_LABELS = ("E(a,b)", "E(a,b')", "E(a',b)", "E(a',b')")


def correlation_e(c_ab, c_ab90, c_a90b, c_a90b90) -> tuple[float, float]:
    """Polarization correlation and its first-order Poisson standard error.

    With P = c_ab + c_a90b90, Q = c_ab90 + c_a90b and N = P + Q,
    E = (P - Q)/N and var(E) = 4 P Q / N^3.
    """
    counts = (c_ab, c_ab90, c_a90b, c_a90b90)
    if any(c < 0 for c in counts):
        raise ValueError("counts must be non-negative")
    p = float(c_ab) + float(c_a90b90)
    q = float(c_ab90) + float(c_a90b)
    n = p + q
    if n <= 0:
        raise ValueError("correlation needs a positive total count")
    return (p - q) / n, math.sqrt(4.0 * p * q / n**3)


@dataclass(frozen=True)
class ChshResult:
    e_values: tuple[float, float, float, float]
    e_sigmas: tuple[float, float, float, float]
    s_value: float
    s_error: float
    sign_combination: str
    all_patterns: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "E": list(self.e_values),
            "E_sigma": list(self.e_sigmas),
            "S": self.s_value,
            "S_sigma": self.s_error,
            "pattern": self.sign_combination,
        }


def _pattern_name(neg: int) -> str:
    return "".join(("-" if i == neg else "+") + lab for i, lab in enumerate(E_LABELS)).lstrip("+")


def _key(theta_a: float, theta_b: float) -> tuple[float, float]:
    return (round(theta_a % 180.0, 4) % 180.0, round(theta_b % 180.0, 4) % 180.0)


def chsh_s(
    counts: Mapping[tuple[float, float], float],
    a: float = PAPER_A[0],
    a_prime: float = PAPER_A[1],
    b: float = PAPER_B[0],
    b_prime: float = PAPER_B[1],
) -> ChshResult:
    """Bell parameter from a 16-setting coincidence table.

    ``counts`` maps (theta_a_deg, theta_b_deg) to coincidences. The
    orthogonal analyzer outcomes come from the settings shifted by 90 deg.
    S is the largest |sum| over the four patterns with one E negated.
    """
    table = {}
    for (ta, tb), c in counts.items():
        k = _key(ta, tb)
        if k in table:
            raise ValueError(f"duplicate setting {k} in count table")
        table[k] = c

    def lookup(ta, tb):
        k = _key(ta, tb)
        if k not in table:
            raise ValueError(f"count table is missing setting theta_a={k[0]}, theta_b={k[1]}")
        return table[k]

    es, sigmas = [], []
    for ta, tb in ((a, b), (a, b_prime), (a_prime, b), (a_prime, b_prime)):
        group = (lookup(ta, tb), lookup(ta, tb + 90), lookup(ta + 90, tb), lookup(ta + 90, tb + 90))
        if sum(group) <= 0:
            raise ValueError(f"no counts in the setting group at ({ta}, {tb})")
        e, s = correlation_e(*group)
        es.append(e)
        sigmas.append(s)

    patterns = {}
    for neg in range(4):
        signs = [-1.0 if i == neg else 1.0 for i in range(4)]
        patterns[_pattern_name(neg)] = abs(sum(sg * e for sg, e in zip(signs, es)))
    best = max(patterns, key=patterns.get)
    s_err = math.sqrt(sum(s * s for s in sigmas))
    return ChshResult(tuple(es), tuple(sigmas), patterns[best], s_err, best, patterns)


def chsh_table_to_csv(rows: Sequence[tuple[float, float, float, float]]) -> str:
    """Rows of (theta_a_deg, theta_b_deg, coincidences, duration_s)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CHSH_COLUMNS)
    for ta, tb, c, d in rows:
        w.writerow((f"{ta:.4f}", f"{tb:.4f}", _fmt_count(c), f"{d:g}"))
    return buf.getvalue()


def chsh_table_from_csv(text: str) -> dict[tuple[float, float], float]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or any(c not in rows[0] for c in CHSH_COLUMNS):
        raise ValueError(f"CHSH CSV needs columns {', '.join(CHSH_COLUMNS)}")
    durations = {float(r["duration_s"]) for r in rows}
    if len(durations) != 1:
        raise ValueError("CHSH table rows must share one counting duration")
    return {(float(r["theta_a_deg"]), float(r["theta_b_deg"])): float(r["coincidences"]) for r in rows}
