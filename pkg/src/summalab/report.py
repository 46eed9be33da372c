"""Estimate, verdict and report records shared by every functional."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

__all__ = ["FunctionalEstimate", "SummabilityVerdict", "TheoremReport", "STATUSES"]

STATUSES = ("pass", "fail", "inconclusive")


@dataclass(frozen=True)
class FunctionalEstimate:
    """A finite-grid estimate of a limsup-type functional.

    ``value`` is the estimate, ``companion_lower`` the matching liminf-side
    estimate from the same sweep (equal to ``value`` for lower functionals).
    ``trace`` holds ``(parameter, partial value)`` pairs of the sweep and
    ``stability_residual`` the change over its last step.
    """

    value: float
    companion_lower: float
    trace: tuple[tuple[float, float], ...]
    stability_residual: float
    grid: Any = None
    flags: tuple[str, ...] = ()
    name: str = ""

    @property
    def stable(self) -> bool:
        return "unstable" not in self.flags and "not_converged" not in self.flags

    @property
    def gap(self) -> float:
        return self.value - self.companion_lower


@dataclass(frozen=True)
class SummabilityVerdict:
    """Outcome of a summability test.

    ``status`` is ``"summable"``, ``"not_summable"`` or ``"inconclusive"``.
    ``uniformity_modulus`` maps each window length to the sup-deviation of
    the window means from ``alpha``.
    """

    method: str
    status: str
    alpha: float
    gap: float
    upper: float
    lower: float
    eps: float
    reason: str = ""
    uniformity_modulus: tuple[tuple[float, float], ...] = ()

    @property
    def summable(self) -> bool:
        return self.status == "summable"

    def __str__(self) -> str:
        if self.status == "summable":
            return f"Summable({self.alpha:.6g})"
        if self.status == "not_summable":
            return f"NotSummable(gap={self.gap:.6g})"
        return f"Inconclusive({self.reason})"


@dataclass(frozen=True)
class TheoremReport:
    """Machine-readable outcome of one theorem check on one case.

    Every entry of ``discrepancies`` has a tolerance of the same name in
    ``tolerances``; ``measurements`` carries further context that is not
    compared against anything.  ``premise_met`` is False for vacuous passes.
    """

    theorem_id: str
    status: str
    discrepancies: dict[str, float] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    measurements: dict[str, float] = field(default_factory=dict)
    notes: tuple[str, ...] = ()
    premise_met: bool = True
    traces: dict[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        missing = set(self.discrepancies) - set(self.tolerances)
        if missing:
            raise ValueError(f"discrepancies without tolerance: {sorted(missing)}")

    @property
    def within_tolerance(self) -> bool:
        return all(abs(v) <= self.tolerances[k] for k, v in self.discrepancies.items())
