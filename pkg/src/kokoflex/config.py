"""Central tolerance configuration.

All equality and membership checks in the package quantize exact algebraic
conditions; the thresholds live here so that they are set once and can be
overridden per run.  ``tol_period`` (lattice membership) additionally honors
the ``KOKOFLEX_TOL_PERIOD`` environment variable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace


def _period_tol_default() -> float:
    raw = os.environ.get("KOKOFLEX_TOL_PERIOD")
    if raw is not None:
        value = float(raw)
        if value <= 0:
            raise ValueError("KOKOFLEX_TOL_PERIOD must be positive")
        return value
    return 1e-8


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used across the package."""

    # function identities (sn^2+cn^2-1 and friends)
    tol_identity: float = 1e-11
    # lattice membership / period predicates
    tol_period: float = field(default_factory=_period_tol_default)
    # angle conditions are tested on the defining trigonometric identity
    tol_angle: float = 1e-10
    # parametrization residual against the biquadratic
    tol_residual: float = 1e-9
    # class conditions: satisfied below tol_class, violated above tol_margin,
    # undetermined in between
    tol_class: float = 1e-8
    tol_margin: float = 1e-3
    # continuation: flexible above arc_flexible, rigid below arc_rigid
    arc_flexible: float = 0.1
    arc_rigid: float = 1e-4

    def with_period_tol(self, value: float) -> "Tolerances":
        if value <= 0:
            raise ValueError("period tolerance must be positive")
        return replace(self, tol_period=value)


DEFAULT_TOL = Tolerances()
