"""Drift families and the scalar functions of the diverse-market model.

The market follows  d log X_i = -g(mu_i) dt + dW_i  with an admissible drift
function g on (0, 1 - delta).  This module holds the built-in g families, the
auxiliary weight-drift function psi, and the coefficient functions A1, A2
whose endpoint values a1, a2 set the critical drift strengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import DomainError, EvaluationError, ParameterError

# Inputs are clamped this far inside the open interval before the family
# formulas run; protects quadrature points that round onto an endpoint.
EDGE_GUARD = 1e-12

# Shared slack for closed-form boundary comparisons (a * p >= 1).  Both the
# analytic classifier and the decision table compare through this constant so
# rounding cannot split them at a threshold.
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class PowerLaw:
    """g(z) = p / (1 - delta - z)**q on all of (0, 1 - delta)."""

    p: float
    q: float


@dataclass(frozen=True)
class PatchedPowerLaw:
    """Power-law blow-up near 1 - delta patched to -c/z near zero.

    g(z) = -c/z for z <= x_switch, the power law p/(1 - delta - z)**q from the
    bridge's right end onward, and a continuous linear bridge in between.
    The -c/z patch makes z * g(z) -> -c < 0 as z -> 0, which the n >= 3
    classification requires.
    """

    p: float
    q: float
    c: float
    x_switch: float


@dataclass(frozen=True)
class Custom:
    """Black-box drift handle; admissibility can only be sampled, not proven."""

    g_handle: Callable[[float], float]
    declared_limits: Optional[dict] = None


Family = Union[PowerLaw, PatchedPowerLaw, Custom]


@dataclass(frozen=True)
class DriftSpec:
    """A diversity threshold together with a drift-function family."""

    delta: float
    family: Family

    def __post_init__(self) -> None:
        if not (0.0 < self.delta < 0.5):
            raise ParameterError(f"delta must lie in (0, 1/2), got {self.delta}")
        fam = self.family
        if isinstance(fam, (PowerLaw, PatchedPowerLaw)):
            if fam.p <= 0 or fam.q <= 0:
                raise ParameterError(f"power family needs p, q > 0, got p={fam.p}, q={fam.q}")
        if isinstance(fam, PatchedPowerLaw):
            if fam.c <= 0:
                raise ParameterError(f"patch strength c must be positive, got {fam.c}")
            if not (0.0 < fam.x_switch < 1.0 - self.delta):
                raise ParameterError(
                    f"x_switch must lie in (0, 1 - delta), got {fam.x_switch}"
                )

    @property
    def right_end(self) -> float:
        """Right endpoint 1 - delta of g's domain."""
        return 1.0 - self.delta

    def label(self) -> str:
        fam = self.family
        if isinstance(fam, PowerLaw):
            return f"PowerLaw(delta={self.delta}, p={fam.p}, q={fam.q})"
        if isinstance(fam, PatchedPowerLaw):
            return (
                f"PatchedPowerLaw(delta={self.delta}, p={fam.p}, q={fam.q}, "
                f"c={fam.c}, x_switch={fam.x_switch})"
            )
        return f"Custom(delta={self.delta})"


def _bridge_interval(spec: DriftSpec) -> tuple[float, float]:
    """Endpoints of the linear bridge of a PatchedPowerLaw."""
    fam = spec.family
    lo = fam.x_switch
    hi = max(fam.x_switch + 0.05, 0.5)
    if hi >= spec.right_end:
        # Keep the bridge strictly inside the domain.
        hi = 0.5 * (fam.x_switch + spec.right_end)
    return lo, hi


def _power_tail(p: float, q: float, right_end: float, x: np.ndarray) -> np.ndarray:
    return p / (right_end - x) ** q


def g_clamped(spec: DriftSpec, x) -> np.ndarray:
    """Evaluate g with inputs clamped into [guard, 1 - delta - guard].

    Never raises for out-of-range inputs; the simulator relies on this for
    post-hit diagnostic stepping.
    """
    x = np.clip(np.asarray(x, dtype=float), EDGE_GUARD, spec.right_end - EDGE_GUARD)
    fam = spec.family
    if isinstance(fam, PowerLaw):
        return _power_tail(fam.p, fam.q, spec.right_end, x)
    if isinstance(fam, PatchedPowerLaw):
        lo, hi = _bridge_interval(spec)
        g_lo = -fam.c / lo
        g_hi = fam.p / (spec.right_end - hi) ** fam.q
        out = np.empty_like(x)
        left = x <= lo
        right = x >= hi
        mid = ~(left | right)
        out[left] = -fam.c / x[left]
        out[right] = _power_tail(fam.p, fam.q, spec.right_end, x[right])
        out[mid] = g_lo + (g_hi - g_lo) * (x[mid] - lo) / (hi - lo)
        return out
    # Custom handle: try vectorized call, fall back to a scalar loop.
    try:
        vals = np.asarray(fam.g_handle(x), dtype=float)
        if vals.shape != x.shape:
            raise TypeError
    except Exception:
        vals = np.array([float(fam.g_handle(float(v))) for v in x.ravel()]).reshape(x.shape)
    return vals


def g_eval(spec: DriftSpec, x: float) -> float:
    """g(x) for x strictly inside (0, 1 - delta)."""
    if not (0.0 < x < spec.right_end):
        raise DomainError(f"x={x} outside (0, {spec.right_end})")
    val = float(g_clamped(spec, x))
    if not math.isfinite(val):
        raise EvaluationError(f"g handle returned non-finite value {val} at x={x}")
    return val


def psi_clamped(spec: DriftSpec, s) -> np.ndarray:
    """psi(s) = s * (-g(s) + 1/2) - s**2, with the clamped g evaluation."""
    s = np.asarray(s, dtype=float)
    return s * (-g_clamped(spec, s) + 0.5) - s * s


def psi(spec: DriftSpec, s: float) -> float:
    """Weight-drift auxiliary function on (0, 1 - delta)."""
    if not (0.0 < s < spec.right_end):
        raise DomainError(f"s={s} outside (0, {spec.right_end})")
    val = float(psi_clamped(spec, s))
    if not math.isfinite(val):
        raise EvaluationError(f"psi non-finite at s={s}")
    return val


def A2_of(z) -> np.ndarray:
    """Coefficient function A2(z) = 1 / (z (1 - z))."""
    z = np.asarray(z, dtype=float)
    return 1.0 / (z * (1.0 - z))


def A1_of(n: int, z) -> np.ndarray:
    """Coefficient function A1(z) = [2 / (1 + (n-1)^-1)] * A2(z)."""
    return (2.0 / (1.0 + 1.0 / (n - 1))) * A2_of(z)


@dataclass(frozen=True)
class CriterionConstants:
    """Endpoint constants a1 = A1(1 - delta), a2 = A2(1 - delta)."""

    n: int
    a1: float
    a2: float
    x0: float = 0.5


def A_coeffs(n: int, delta: float) -> CriterionConstants:
    """Constants for the divergence criteria; x0 is fixed at 1/2."""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ParameterError(f"need an integer n >= 2, got {n!r}")
    if not (0.0 < delta < 0.5):
        raise ParameterError(f"delta must lie in (0, 1/2), got {delta}")
    a2 = float(A2_of(1.0 - delta))
    a1 = float(A1_of(int(n), 1.0 - delta))
    return CriterionConstants(n=int(n), a1=a1, a2=a2, x0=0.5)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Flags from the admissibility check.

    `sampled` marks verdicts obtained by grid sampling of a black-box handle;
    those are heuristic, not proven.
    """

    continuous: bool
    blows_up_at_right_endpoint: bool
    boundedness_at_zero: bool
    sampled: bool = False
    notes: tuple = ()

    @property
    def admissible(self) -> bool:
        return self.continuous and self.blows_up_at_right_endpoint


def check_admissible(spec: DriftSpec) -> AdmissibilityReport:
    """Admissibility flags; analytic for built-ins, sampled for Custom."""
    fam = spec.family
    if isinstance(fam, PowerLaw):
        # x * g(x) -> 0 as x -> 0: boundedness-at-zero fails (limit not < 0).
        return AdmissibilityReport(True, True, False)
    if isinstance(fam, PatchedPowerLaw):
        # x * g(x) -> -c < 0 on the patched branch.
        return AdmissibilityReport(True, True, True)
    return _check_admissible_sampled(spec)


def _check_admissible_sampled(spec: DriftSpec) -> AdmissibilityReport:
    right = spec.right_end
    notes = ["sampled, not proven"]

    # Blow-up at the right endpoint: x = 1 - delta - 2^-k.  The ladder stops
    # before the clamp guard so successive samples stay distinct.
    ks = np.arange(4, 40)
    xs = right - np.power(2.0, -ks.astype(float))
    xs = xs[(xs > 0.0) & (xs < right - EDGE_GUARD)]
    vals = g_clamped(spec, xs)
    tail = vals[-12:]
    finite = np.all(np.isfinite(tail))
    blows_up = bool(
        finite and np.all(np.diff(tail) > 0.0) and tail[-1] > 10.0
    )

    # Boundedness at zero: x * g(x) over x = 2^-k should settle strictly below 0.
    xs0 = np.power(2.0, -ks.astype(float))
    xs0 = xs0[xs0 < right]
    t0 = xs0 * g_clamped(spec, xs0)
    tail0 = t0[-8:]
    bounded0 = bool(
        np.all(np.isfinite(tail0))
        and np.all(tail0 < -1e-10)
        and np.all(tail0 > -1e12)
    )

    # Continuity: relative jump detection.  The grid is geometric toward
    # both endpoints (16 samples per octave) so functions that blow up
    # smoothly, like -c/x or p/(1-delta-x)^q, produce small relative steps
    # while genuine jumps still stand out.
    ratio = 2.0 ** (1.0 / 16.0)
    n_oct = int(np.ceil(np.log(right / 2e-9) / np.log(ratio)))
    ladder = 1e-9 * ratio ** np.arange(n_oct + 1)
    ladder = ladder[ladder <= right / 2.0]
    grid = np.unique(np.concatenate([ladder, right - ladder]))
    grid = grid[(grid > 0.0) & (grid < right)]
    gv = g_clamped(spec, grid)
    continuous = True
    if not np.all(np.isfinite(gv)):
        continuous = False
        notes.append("non-finite values on the sampling grid")
    else:
        dg = np.abs(np.diff(gv))
        scale = 1.0 + np.abs(gv[:-1]) + np.abs(gv[1:])
        for i in np.nonzero(dg > 0.2 * scale)[0]:
            # Steep-but-continuous segments pass a midpoint chord test; a
            # genuine jump leaves the midpoint stuck near one side.
            mid = 0.5 * (grid[i] + grid[i + 1])
            g_mid = float(g_clamped(spec, mid))
            chord = 0.5 * (gv[i] + gv[i + 1])
            if abs(g_mid - chord) > 0.3 * dg[i] + 1e-9:
                continuous = False
                notes.append("jump detected on the sampling grid")
                break

    return AdmissibilityReport(
        continuous=continuous,
        blows_up_at_right_endpoint=blows_up,
        boundedness_at_zero=bounded0,
        sampled=True,
        notes=tuple(notes),
    )
