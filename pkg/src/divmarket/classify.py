"""Analytic diversity verdicts.

For two stocks the divergence criterion is exact (an iff); for three or more
stocks the two one-sided criteria leave an explicit gap [1/a1, 1/a2) at q = 1
in which the verdict is honestly Inconclusive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import feller, model
from .errors import ParameterError


class Status(str, Enum):
    DIVERSE = "Diverse"
    NOT_DIVERSE = "NotDiverse"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class DiversityVerdict:
    status: Status
    rule: str
    evidence: dict = field(default_factory=dict)
    preconditions_ok: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "rule": self.rule,
            "evidence": {
                k: (v.to_dict() if isinstance(v, feller.DivergenceVerdict) else v)
                for k, v in self.evidence.items()
            },
            "preconditions_ok": dict(self.preconditions_ok),
        }


def classify_diversity(n: int, spec: model.DriftSpec) -> DiversityVerdict:
    """Theorem-level dispatch: exact for n = 2, one-sided for n >= 3."""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ParameterError(f"need an integer n >= 2, got {n!r}")
    n = int(n)

    report = model.check_admissible(spec)
    pre = {
        "admissible": report.admissible,
        "boundedness_at_zero": report.boundedness_at_zero,
        "sampled": report.sampled,
    }
    if not report.admissible:
        return DiversityVerdict(Status.INCONCLUSIVE, "PreconditionFail", {}, pre)

    if n == 2:
        v = feller.criterion_integral(spec, "A2", 2, x0=0.5)
        status = {
            feller.Divergence.DIVERGENT: Status.DIVERSE,
            feller.Divergence.CONVERGENT: Status.NOT_DIVERSE,
            feller.Divergence.INCONCLUSIVE: Status.INCONCLUSIVE,
        }[v.status]
        return DiversityVerdict(status, "Thm1-iff", {"A2": v}, pre)

    if not report.boundedness_at_zero:
        return DiversityVerdict(Status.INCONCLUSIVE, "PreconditionFail", {}, pre)

    v2 = feller.criterion_integral(spec, "A2", n, x0=0.5)
    if v2.status is feller.Divergence.DIVERGENT:
        return DiversityVerdict(Status.DIVERSE, "Thm2-ii", {"A2": v2}, pre)
    v1 = feller.criterion_integral(spec, "A1", n, x0=0.5)
    if v1.status is feller.Divergence.CONVERGENT:
        return DiversityVerdict(Status.NOT_DIVERSE, "Thm2-i", {"A1": v1, "A2": v2}, pre)
    return DiversityVerdict(Status.INCONCLUSIVE, "Gap", {"A1": v1, "A2": v2}, pre)


def corollary_rules(n: int, spec: model.DriftSpec, x0: float = 0.5) -> dict:
    """Independently testable corollary clauses, for cross-checking.

    These are strictly weaker than the theorem dispatch; keys map clause
    identifiers to Status values (Inconclusive when a clause does not fire).
    The existential 'for some eps > 0' is searched on a geometric grid.
    """
    consts = model.A_coeffs(n, spec.delta)
    g_int = feller.integral_of_g(spec, x0)
    out = {}

    if g_int.status is feller.Divergence.CONVERGENT:
        out["Cor-iii"] = Status.NOT_DIVERSE
    else:
        out["Cor-iii"] = Status.INCONCLUSIVE

    # Clause (i): exists eps > 0 with int exp((a2 - eps) int g) = infinity.
    fired = Status.INCONCLUSIVE
    if g_int.status is feller.Divergence.DIVERGENT:
        for k in range(1, 21):
            alpha = consts.a2 * (1.0 - 2.0 ** (-k))
            if (
                feller.exp_integral_of_g(spec, alpha, x0).status
                is feller.Divergence.DIVERGENT
            ):
                fired = Status.DIVERSE
                break
    out["Cor-i"] = fired

    # Clause (ii): int exp(a int g) < infinity with a = a2 (n = 2) or a1.
    a = consts.a2 if n == 2 else consts.a1
    if (
        g_int.status is feller.Divergence.DIVERGENT
        and feller.exp_integral_of_g(spec, a, x0).status
        is feller.Divergence.CONVERGENT
    ):
        out["Cor-ii"] = Status.NOT_DIVERSE
    else:
        out["Cor-ii"] = Status.INCONCLUSIVE
    return out


def golden_decision_table(n: int, delta: float, p: float, q: float) -> DiversityVerdict:
    """Closed-form case analysis for the power families (no quadrature).

    n = 2 reads the exact criterion; n >= 3 assumes the patched family (so
    the boundedness precondition holds) and applies the one-sided rules with
    the open gap [1/a1, 1/a2) at q = 1.
    """
    consts = model.A_coeffs(n, delta)
    if p <= 0 or q <= 0:
        raise ParameterError(f"need p, q > 0, got p={p}, q={q}")
    tol = model.BOUNDARY_TOL
    ev = {"a1": consts.a1, "a2": consts.a2}

    if abs(q - 1.0) > 1e-12:
        status = Status.NOT_DIVERSE if q < 1.0 else Status.DIVERSE
        rule = "Table-q<1" if q < 1.0 else "Table-q>1"
        return DiversityVerdict(status, rule, ev, {})

    if n == 2:
        status = Status.DIVERSE if p * consts.a2 >= 1.0 - tol else Status.NOT_DIVERSE
        return DiversityVerdict(status, "Table-n2-q1", ev, {})

    if p * consts.a2 >= 1.0 - tol:
        return DiversityVerdict(Status.DIVERSE, "Table-q1-diverse", ev, {})
    if p * consts.a1 < 1.0 - tol:
        return DiversityVerdict(Status.NOT_DIVERSE, "Table-q1-notdiverse", ev, {})
    return DiversityVerdict(Status.INCONCLUSIVE, "Table-q1-gap", ev, {})
