"""Critical visibility: how much depolarizing noise a certification survives.

Depolarizing the preparations, rho -> v rho + (1-v) 1/2, scales every
preparation Bloch vector by v.  The witness is affine in those vectors:
the base part interpolates between its maximally mixed value a_rand and
its ideal value, while the penalty (zero for an ideal strategy, exactly
k on mixed preparations by POVM completeness) contributes -k(1-v).  An
ideal strategy seen through visibility v therefore scores

    A(v) = v (a_q + k) + (1 - v)(a_rand - k),

and the visibility at which this drops to a bound B is

    v_crit = (B - a_rand + k) / (a_q - a_rand + k).

Sweeping k trades the tightness of the bound against the size of the
penalty; the sweep's minimum is the noise-robust operating point.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .optimize import OptimizerConfig, projective_bound, three_outcome_max
from .witness import Strategy, WitnessSpec, build_witness

log = logging.getLogger(__name__)

BOUND_KINDS = ("projective", "three-outcome")

# matches the shipped sweep granularity; fine enough to localize the
# minimum to 0.01 in k
DEFAULT_K_GRID = tuple(round(0.01 * i, 2) for i in range(1, 101))


def a_rand(spec: WitnessSpec) -> float:
    """Base witness value on maximally mixed preparations.

    Every binary-setting probability is 1/2 regardless of the measured
    observable, so the observables drop out and the value is half the
    coefficient sum.  The penalty is excluded: on mixed preparations it
    equals exactly k by completeness, which the +k terms of the
    critical-visibility formula account for separately.
    """
    return spec.offset


class CriticalVisibility(NamedTuple):
    value: float
    clamped: bool


def critical_visibility(k: float, bound: float, a_q: float, a_rand: float) -> CriticalVisibility:
    """Visibility at which a depolarized ideal strategy hits the bound.

    Clamps to [0, 1] (flagged and logged): a bound above a_q cannot be
    violated at any visibility, one below a_rand - k is violated even by
    noise alone.
    """
    for name, val in (("k", k), ("bound", bound), ("a_q", a_q), ("a_rand", a_rand)):
        if not np.isfinite(val):
            raise ValueError(f"{name} must be finite")
    if k < 0:
        raise ValueError("penalty weight k must be >= 0")
    denom = a_q - a_rand + k
    if denom <= 0:
        raise ValueError(
            f"a_q - a_rand + k = {denom:.6g} is not positive; no visibility scale"
        )
    v = (bound - a_rand + k) / denom
    if 0.0 <= v <= 1.0:
        return CriticalVisibility(float(v), False)
    log.warning("critical visibility %.6g outside [0, 1]; clamped", v)
    return CriticalVisibility(float(np.clip(v, 0.0, 1.0)), True)


@dataclass(frozen=True)
class VisibilityResult:
    """One point of a noise-robustness curve."""

    k: float
    bound_kind: str
    bound_value: float
    a_rand: float
    a_q: float
    v_crit: float
    clamped: bool
    heuristic: bool

    def __post_init__(self) -> None:
        if self.bound_kind not in BOUND_KINDS:
            raise ValueError(f"bound_kind must be one of {BOUND_KINDS}")
        if not 0.0 <= self.v_crit <= 1.0:
            raise ValueError("v_crit must lie in [0, 1]")


def visibility_curve(
    family: str,
    bound_kind: str,
    k_grid: Sequence[float] | None = None,
    config: OptimizerConfig | None = None,
) -> list[VisibilityResult]:
    """Critical visibility of one witness family across penalty weights.

    Per k: the requested bound (closed form where one exists, numeric
    search otherwise; `heuristic` records which), the family's quantum
    value, and the resulting v_crit.  Numeric-bound points inherit the
    usual caveat that a search can undershoot the true bound, which
    makes their v_crit an underestimate.
    """
    if bound_kind not in BOUND_KINDS:
        raise ValueError(f"bound_kind must be one of {BOUND_KINDS}")
    grid = DEFAULT_K_GRID if k_grid is None else tuple(float(k) for k in k_grid)
    if not grid:
        raise ValueError("k grid must be nonempty")
    if any(k < 0 or not np.isfinite(k) for k in grid):
        raise ValueError("k grid entries must be finite and >= 0")
    config = config or OptimizerConfig()

    curve: list[VisibilityResult] = []
    for k in grid:
        spec = build_witness(family, k)
        if spec.quantum_max is None:
            raise ValueError(f"family {family!r} has no known quantum value")
        if bound_kind == "projective":
            res = projective_bound(spec, config)
        else:
            res = three_outcome_max(spec, config)
        rand = a_rand(spec)
        v = critical_visibility(k, res.value, spec.quantum_max, rand)
        curve.append(
            VisibilityResult(
                k=k,
                bound_kind=bound_kind,
                bound_value=res.value,
                a_rand=rand,
                a_q=spec.quantum_max,
                v_crit=v.value,
                clamped=v.clamped,
                heuristic=res.heuristic,
            )
        )
    return curve


def most_robust_point(curve: Sequence[VisibilityResult]) -> VisibilityResult:
    """The sweep point tolerating the most noise (smallest v_crit)."""
    if not curve:
        raise ValueError("curve is empty")
    return min(curve, key=lambda p: p.v_crit)


def visibility_curve_to_csv(curve: Sequence[VisibilityResult]) -> str:
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(["k", "bound_kind", "bound", "v_crit"])
    for p in curve:
        w.writerow([repr(p.k), p.bound_kind, repr(p.bound_value), repr(p.v_crit)])
    return out.getvalue()


def depolarize_preparations(strategy: Strategy, v: float) -> Strategy:
    """Shrink every preparation Bloch vector by the visibility v."""
    if not 0.0 <= v <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    return Strategy.from_arrays(
        v * strategy.prep_blochs,
        strategy.binary_axes,
        strategy.povm.weights,
        strategy.povm.blochs,
    )
