"""Piecewise-linear desirability functions and the CNS MPO score."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

from .physchem import PhyschemProfile


@dataclass(frozen=True)
class DesirabilityFunction:
    """Linear interpolation between ``(value, desirability)`` breakpoints.

    Values outside the breakpoint range take the nearest endpoint's
    desirability.
    """

    kind: str
    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.kind not in ("monotone-decreasing", "hump"):
            raise ValueError(f"unknown desirability kind {self.kind!r}")
        xs = [x for x, _ in self.breakpoints]
        if len(xs) < 2 or any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("breakpoints need at least two strictly increasing values")
        if any(not 0.0 <= d <= 1.0 for _, d in self.breakpoints):
            raise ValueError("desirability values must lie in [0, 1]")

    def __call__(self, value: float) -> float:
        pts = self.breakpoints
        if value <= pts[0][0]:
            return pts[0][1]
        if value >= pts[-1][0]:
            return pts[-1][1]
        k = bisect_right([x for x, _ in pts], value)
        (x0, y0), (x1, y1) = pts[k - 1], pts[k]
        return y0 + (y1 - y0) * (value - x0) / (x1 - x0)


def _dec(best: float, worst: float) -> DesirabilityFunction:
    return DesirabilityFunction("monotone-decreasing", ((best, 1.0), (worst, 0.0)))


CNS_MPO_FUNCTIONS: dict[str, DesirabilityFunction] = {
    "clogp": _dec(3.0, 5.0),
    "clogd": _dec(2.0, 4.0),
    "mw": _dec(360.0, 500.0),
    "tpsa": DesirabilityFunction("hump", ((20.0, 0.0), (40.0, 1.0), (90.0, 1.0), (120.0, 0.0))),
    "hbd": _dec(0.5, 3.5),
    "pka_basic": _dec(8.0, 10.0),
}


def cns_mpo_components(profile: PhyschemProfile) -> dict[str, float]:
    out = {}
    for name, fn in CNS_MPO_FUNCTIONS.items():
        value = getattr(profile, name)
        out[name] = 1.0 if value is None else fn(float(value))
    return out


def cns_mpo_score(profile: PhyschemProfile) -> float:
    """Mean of the six desirabilities, so the 0-6 scale maps onto [0, 1]."""
    return sum(cns_mpo_components(profile).values()) / len(CNS_MPO_FUNCTIONS)
