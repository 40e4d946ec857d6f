from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Every numerical tolerance used by the LP and branch-and-bound layers."""

    feasibility: float = 1e-7
    integrality: float = 1e-6
    gap: float = 1e-6
    optimality: float = 1e-9
    pivot: float = 1e-9


DEFAULT_TOLERANCES = Tolerances()
