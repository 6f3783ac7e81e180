"""Decoherence feasibility arithmetic for the cavity-mediated gates.

Small closed-form budget: the cavity lifetime T_c = Q / (2 pi nu), the
probability P = t_op / t_r that a gate run leaves a virtual photon exposed
to cavity loss, the resulting effective decay time T_c / P, and the minimum
quality factor q_min = 2 pi nu t_op the cavity must beat.  "Much greater
than" is operationalized as a configurable margin factor on q_min; the raw
number is always reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import TWO_PI
from .protocols import AraStep, DispersiveStep, GateSchedule

__all__ = [
    "FeasibilityInput",
    "FeasibilityReport",
    "assess",
    "gate_time_estimate",
    "DEFAULT_MARGIN",
]

DEFAULT_MARGIN = 10.0


@dataclass(frozen=True)
class FeasibilityInput:
    """Cavity quality factor, cavity frequency nu (Hz, the shifted cavity
    frequency, not the bare transition), gate time t_op (s), and the
    auxiliary-level relaxation time t_r (s)."""

    q_factor: float
    nu: float
    t_op: float
    t_r: float

    def __post_init__(self):
        for name in ("q_factor", "nu", "t_op", "t_r"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class FeasibilityReport:
    """Derived quantities; every field is recomputed by `assess`, nothing
    is cached across calls."""

    T_c: float
    P: float
    effective_decay: float
    q_min: float
    margin: float
    margin_achieved: float
    ok: bool

    def __bool__(self) -> bool:
        return self.ok

    def lines(self) -> tuple[str, ...]:
        """Structured text form used by the CLI."""
        verdict = "pass" if self.ok else "FAIL"
        return (
            f"cavity_lifetime_T_c_s      {self.T_c:.6e}",
            f"virtual_photon_prob_P      {self.P:.6e}",
            f"effective_decay_s          {self.effective_decay:.6e}",
            f"q_min                      {self.q_min:.6e}",
            f"margin_required            {self.margin:.6e}",
            f"margin_achieved            {self.margin_achieved:.6e}",
            f"verdict                    {verdict}",
        )


def assess(f: FeasibilityInput, margin: float = DEFAULT_MARGIN
           ) -> FeasibilityReport:
    """Evaluate the decoherence budget; passes iff Q >= margin * q_min."""
    if margin <= 0:
        raise ValueError("margin must be positive")
    t_c = f.q_factor / (TWO_PI * f.nu)
    p = f.t_op / f.t_r
    q_min = TWO_PI * f.nu * f.t_op
    return FeasibilityReport(
        T_c=t_c,
        P=p,
        effective_decay=t_c / p,
        q_min=q_min,
        margin=margin,
        margin_achieved=f.q_factor / q_min,
        ok=f.q_factor >= margin * q_min,
    )


def gate_time_estimate(gamma: float, schedule: GateSchedule,
                       rabi: float) -> float:
    """Wall-clock duration of a schedule at the given rates (s).

    Dispersive segments contribute their exact rational multiples of
    pi/gamma; a pulse group contributes the duration of its longest
    rotation, theta / (2 rabi), since simultaneous rotations overlap.
    """
    if gamma <= 0 or rabi <= 0:
        raise ValueError("gamma and rabi must be positive rates")
    total = 0.0
    for step in schedule.steps:
        if isinstance(step, DispersiveStep):
            total += float(step.duration_over_pi_gamma) * math.pi / gamma
        elif isinstance(step, AraStep):
            total += max(a.theta for a in step.actions) / (2.0 * rabi)
        else:
            raise TypeError(f"unsupported step type {type(step).__name__}")
    return total
