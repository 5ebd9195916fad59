"""Prepare-and-measure witnesses over qubit strategies.

A scenario has X preparations, Y binary measurement settings, and one
extra setting realized by an O-outcome POVM.  A witness is the linear
functional

    A = sum_{x,y,b} c_{xyb} P(b | x, y)  -  k * sum_x P(b = x | x, povm)

of the observed table, with penalty weight k >= 0.  The penalty pairs
preparation x with POVM outcome x, so scenarios require X >= O.

Because every strategy here is a qubit strategy in Bloch form, the
binary part collapses to

    A_base = offset + sum_{x,y} D_{xy} (m_x . n_y),
    offset = (1/2) sum_{xyb} c_{xyb},    D_{xy} = (c_{xy0} - c_{xy1}) / 2,

with m_x the preparation Bloch vectors and n_y the observable axes.
`offset` is also the base value on maximally mixed preparations, which
the robustness module uses as the classical baseline.

Three families ship as builders: a four-outcome witness maximized by a
tetrahedral (symmetric informationally complete) POVM, and two
three-outcome witnesses maximized by a trine POVM.  Their coefficient
tables, ideal strategies, and quantum maxima are fixed here; everything
downstream treats them as ordinary `WitnessSpec` values.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .qubit import Observable, Povm, QubitState, unit

Array = np.ndarray

SQ3 = np.sqrt(3.0)

# Tetrahedron of Bloch directions whose quarter-weight POVM is the
# four-outcome target, and the coplanar trine for the three-outcome ones.
TETRAHEDRON = np.array(
    [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
) / SQ3
TRINE = np.array([[0.0, 0.0, -1.0], [-SQ3 / 2, 0.0, 0.5], [SQ3 / 2, 0.0, 0.5]])

ROW_SUM_TOL = 1e-6


@dataclass(frozen=True)
class Scenario:
    """Table dimensions: X preparations, Y binary settings, O POVM outcomes."""

    preparations: int
    binary_settings: int
    povm_outcomes: int

    def __post_init__(self) -> None:
        if self.preparations < 1 or self.binary_settings < 1 or self.povm_outcomes < 2:
            raise ValueError("scenario dimensions out of range")
        if self.preparations < self.povm_outcomes:
            raise ValueError(
                "penalty pairs preparation x with POVM outcome x: need X >= O"
            )


@dataclass(frozen=True)
class WitnessSpec:
    """Coefficient tensor c (shape (X, Y, 2)) plus penalty weight k.

    `quantum_max` is the known quantum value for shipped families and
    None for custom tensors.
    """

    name: str
    scenario: Scenario
    coeffs: Array
    k: float
    quantum_max: float | None = None

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=float)
        expected = (self.scenario.preparations, self.scenario.binary_settings, 2)
        if c.shape != expected:
            raise ValueError(f"coefficient tensor must have shape {expected}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if not np.isfinite(self.k) or self.k < 0:
            raise ValueError("penalty weight k must be >= 0")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def bloch_coeffs(self) -> Array:
        """D_{xy} = (c_{xy0} - c_{xy1}) / 2, the Bloch-form coupling matrix."""
        return (self.coeffs[:, :, 0] - self.coeffs[:, :, 1]) / 2.0

    @property
    def offset(self) -> float:
        """Base value on maximally mixed preparations."""
        return float(self.coeffs.sum()) / 2.0

    def with_k(self, k: float) -> "WitnessSpec":
        return WitnessSpec(self.name, self.scenario, self.coeffs, float(k), self.quantum_max)

    def to_dict(self) -> dict:
        cells = []
        X, Y, _ = self.coeffs.shape
        for x in range(X):
            for y in range(Y):
                for b in range(2):
                    c = self.coeffs[x, y, b]
                    if c != 0.0:
                        cells.append({"x": x, "y": y, "b": b, "c": float(c)})
        return {
            "name": self.name,
            "k": float(self.k),
            "coeffs": cells,
            "povm_outcomes": self.scenario.povm_outcomes,
            "quantum_max": None if self.quantum_max is None else float(self.quantum_max),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "WitnessSpec":
        cells = data["coeffs"]
        X = max(cell["x"] for cell in cells) + 1
        Y = max(cell["y"] for cell in cells) + 1
        c = np.zeros((X, Y, 2))
        for cell in cells:
            c[cell["x"], cell["y"], cell["b"]] = cell["c"]
        scenario = Scenario(X, Y, int(data["povm_outcomes"]))
        return cls(data["name"], scenario, c, float(data["k"]), data.get("quantum_max"))

    @classmethod
    def from_json(cls, text: str) -> "WitnessSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Strategy:
    """A full qubit strategy: preparations, binary observables, POVM."""

    preparations: tuple[QubitState, ...]
    binaries: tuple[Observable, ...]
    povm: Povm

    @property
    def prep_blochs(self) -> Array:
        return np.array([s.bloch for s in self.preparations])

    @property
    def binary_axes(self) -> Array:
        return np.array([o.axis for o in self.binaries])

    def to_dict(self) -> dict:
        return {
            "preparations": [[float(c) for c in s.bloch] for s in self.preparations],
            "binaries": [[float(c) for c in o.axis] for o in self.binaries],
            "povm": self.povm.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Strategy":
        return cls(
            tuple(QubitState(np.asarray(r, dtype=float)) for r in data["preparations"]),
            tuple(Observable(np.asarray(a, dtype=float)) for a in data["binaries"]),
            Povm.from_dict(data["povm"]),
        )

    @classmethod
    def from_arrays(cls, prep_blochs, binary_axes, weights, povm_blochs) -> "Strategy":
        return cls(
            tuple(QubitState(np.asarray(r, dtype=float)) for r in prep_blochs),
            tuple(Observable(np.asarray(a, dtype=float)) for a in binary_axes),
            Povm.from_arrays(weights, povm_blochs),
        )


@dataclass(frozen=True)
class ProbabilityTable:
    """Observed table: binary part (X, Y, 2) and POVM part (X, O).

    Error arrays, when present, hold one standard error per cell and
    share the shapes of their probability arrays.
    """

    binary: Array
    povm: Array
    binary_err: Array | None = None
    povm_err: Array | None = None

    def __post_init__(self) -> None:
        b = np.asarray(self.binary, dtype=float)
        p = np.asarray(self.povm, dtype=float)
        if b.ndim != 3 or b.shape[2] != 2:
            raise ValueError("binary part must have shape (X, Y, 2)")
        if p.ndim != 2 or p.shape[0] != b.shape[0]:
            raise ValueError("povm part must have shape (X, O) with matching X")
        for arr in (b, p):
            if not np.all(np.isfinite(arr)):
                raise ValueError("probabilities must be finite")
            if arr.min() < -1e-9 or arr.max() > 1 + 1e-9:
                raise ValueError("probabilities must lie in [0, 1]")
        if np.max(np.abs(b.sum(axis=2) - 1.0)) > ROW_SUM_TOL:
            raise ValueError("binary outcome rows must sum to 1")
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise ValueError("povm outcome rows must sum to 1")
        object.__setattr__(self, "binary", b)
        object.__setattr__(self, "povm", p)
        for name, err, shape in (
            ("binary_err", self.binary_err, b.shape),
            ("povm_err", self.povm_err, p.shape),
        ):
            if err is not None:
                err = np.asarray(err, dtype=float)
                if err.shape != shape or err.min() < 0:
                    raise ValueError(f"{name} must be nonnegative with shape {shape}")
                object.__setattr__(self, name, err)

    @property
    def scenario(self) -> Scenario:
        return Scenario(self.binary.shape[0], self.binary.shape[1], self.povm.shape[1])

    @property
    def has_errors(self) -> bool:
        return self.binary_err is not None and self.povm_err is not None

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out)
        w.writerow(["x", "y", "b", "p", "stderr"])
        X, Y, _ = self.binary.shape
        O = self.povm.shape[1]
        for x in range(X):
            for y in range(Y):
                for b in range(2):
                    err = "" if self.binary_err is None else repr(float(self.binary_err[x, y, b]))
                    w.writerow([x, y, b, repr(float(self.binary[x, y, b])), err])
            for b in range(O):
                err = "" if self.povm_err is None else repr(float(self.povm_err[x, b]))
                w.writerow([x, "povm", b, repr(float(self.povm[x, b])), err])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ProbabilityTable":
        binary_cells: dict[tuple[int, int, int], tuple[float, float | None]] = {}
        povm_cells: dict[tuple[int, int], tuple[float, float | None]] = {}
        reader = csv.DictReader(io.StringIO(text))
        required = {"x", "y", "b", "p"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError("probability CSV needs columns x,y,b,p[,stderr]")
        for row in reader:
            x, b, p = int(row["x"]), int(row["b"]), float(row["p"])
            err = row.get("stderr", "")
            err_val = float(err) if err not in ("", None) else None
            if row["y"].strip() == "povm":
                povm_cells[(x, b)] = (p, err_val)
            else:
                binary_cells[(x, int(row["y"]), b)] = (p, err_val)
        if not binary_cells or not povm_cells:
            raise ValueError("probability CSV must contain binary and povm rows")
        X = max(x for x, _, _ in binary_cells) + 1
        Y = max(y for _, y, _ in binary_cells) + 1
        O = max(b for _, b in povm_cells) + 1
        binary = np.zeros((X, Y, 2))
        povm = np.zeros((X, O))
        have_err = any(e is not None for _, e in binary_cells.values()) or any(
            e is not None for _, e in povm_cells.values()
        )
        binary_err = np.zeros((X, Y, 2)) if have_err else None
        povm_err = np.zeros((X, O)) if have_err else None
        for (x, y, b), (p, e) in binary_cells.items():
            binary[x, y, b] = p
            if binary_err is not None and e is not None:
                binary_err[x, y, b] = e
        for (x, b), (p, e) in povm_cells.items():
            povm[x, b] = p
            if povm_err is not None and e is not None:
                povm_err[x, b] = e
        return cls(binary, povm, binary_err, povm_err)


class WitnessValue(NamedTuple):
    value: float
    stderr: float | None


def probability_table(
    preparations, binaries, povm: Povm
) -> ProbabilityTable:
    """Exact Born-rule table for a qubit strategy, computed in Bloch form."""
    M = np.array([s.bloch for s in preparations])
    N = np.array([o.axis for o in binaries])
    corr = M @ N.T  # (X, Y)
    binary = np.stack([(1 + corr) / 2, (1 - corr) / 2], axis=2)
    pov = povm.weights[None, :] * (1.0 + M @ povm.blochs.T)
    return ProbabilityTable(binary, pov)


def evaluate_witness(spec: WitnessSpec, table: ProbabilityTable) -> WitnessValue:
    """Witness value on a table; propagates cell standard errors when present.

    Error propagation is first-order with independent cells:
    sigma_A^2 = sum c^2 sigma^2 + k^2 sum_x sigma(x|x)^2.
    """
    sc = table.scenario
    if sc != spec.scenario:
        raise ValueError(f"table scenario {sc} does not match witness scenario {spec.scenario}")
    O = sc.povm_outcomes
    diag = np.arange(O)
    value = float(np.sum(spec.coeffs * table.binary)) - spec.k * float(
        np.sum(table.povm[diag, diag])
    )
    stderr = None
    if table.has_errors:
        var = float(np.sum(spec.coeffs**2 * table.binary_err**2))
        var += spec.k**2 * float(np.sum(table.povm_err[diag, diag] ** 2))
        stderr = float(np.sqrt(var))
    return WitnessValue(value, stderr)


# ---------------------------------------------------------------------------
# shipped witness families
# ---------------------------------------------------------------------------

# outcome table for the four-outcome witness: row x lists the rewarded
# binary outcome for settings y = 0, 1, 2
_SIC_CELLS = np.array([[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]])

SIC_QUANTUM_MAX = 0.5 * (1.0 + 1.0 / SQ3)
TRINE_QUANTUM_MAX = 5.0
SYM_TRINE_QUANTUM_MAX = 5.0 / 6.0


def sic_witness(k: float) -> WitnessSpec:
    """Four-outcome family: X=4 preparations, Y=3 binary settings, O=4.

    Coefficient 1/12 on one rewarded outcome per (x, y) cell; maximized
    at (1 + 1/sqrt3)/2 by tetrahedral preparations, Pauli observables,
    and the anti-aligned quarter-weight tetrahedral POVM.
    """
    c = np.zeros((4, 3, 2))
    for x in range(4):
        for y in range(3):
            c[x, y, _SIC_CELLS[x, y]] = 1.0 / 12.0
    return WitnessSpec("sic", Scenario(4, 3, 4), c, float(k), SIC_QUANTUM_MAX)


def trine_witness(k: float) -> WitnessSpec:
    """Three-outcome family with X=3, Y=2 and unnormalized coefficients.

    c_{xy b} = T_{xy} (-1)^b with T columns (1, 1, -1) and
    (sqrt3, -sqrt3, 0); quantum maximum 5.
    """
    T = np.array([[1.0, SQ3], [1.0, -SQ3], [-1.0, 0.0]])
    c = np.stack([T, -T], axis=2)
    return WitnessSpec("trine", Scenario(3, 2, 3), c, float(k), TRINE_QUANTUM_MAX)


def sym_trine_witness(k: float) -> WitnessSpec:
    """Symmetrized three-outcome family: X=Y=3, coefficient 1/9 on b = [x == y]."""
    c = np.zeros((3, 3, 2))
    for x in range(3):
        for y in range(3):
            c[x, y, 1 if x == y else 0] = 1.0 / 9.0
    return WitnessSpec("sym-trine", Scenario(3, 3, 3), c, float(k), SYM_TRINE_QUANTUM_MAX)


WITNESS_BUILDERS = {
    "sic": sic_witness,
    "trine": trine_witness,
    "sym-trine": sym_trine_witness,
}


def build_witness(name: str, k: float) -> WitnessSpec:
    try:
        return WITNESS_BUILDERS[name](k)
    except KeyError:
        raise ValueError(f"unknown witness family {name!r}; have {sorted(WITNESS_BUILDERS)}") from None


def ideal_sic_strategy() -> Strategy:
    """Tetrahedral preparations, Pauli observables, anti-aligned SIC POVM."""
    return Strategy.from_arrays(
        TETRAHEDRON, np.eye(3), np.full(4, 0.25), -TETRAHEDRON
    )


def ideal_trine_strategy() -> Strategy:
    """Reversed-trine preparations with sigma_z/sigma_x observables.

    The coefficient table reaches its quantum value 5 in this frame
    (direct check: columns give 2 and 3); the POVM is anti-aligned with
    the preparations, so the penalty vanishes at every k.
    """
    preps = TRINE[::-1]
    axes = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    return Strategy.from_arrays(preps, axes, np.full(3, 1 / 3), -preps)


def ideal_sym_trine_strategy() -> Strategy:
    """Trine preparations with observables and POVM anti-aligned to them."""
    return Strategy.from_arrays(TRINE, -TRINE, np.full(3, 1 / 3), -TRINE)


IDEAL_STRATEGIES = {
    "sic": ideal_sic_strategy,
    "trine": ideal_trine_strategy,
    "sym-trine": ideal_sym_trine_strategy,
}


def strategy_value(spec: WitnessSpec, strategy: Strategy) -> float:
    """Witness value of an explicit strategy (exact Born probabilities)."""
    table = probability_table(strategy.preparations, strategy.binaries, strategy.povm)
    return evaluate_witness(spec, table).value
