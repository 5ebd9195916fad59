"""Witness maximization: see-saw heuristics and certified projective bounds.

The see-saw alternates three exact coordinate maximizations in Bloch
form.  With coupling D_{xy} = (c_{xy0} - c_{xy1})/2 the witness reads

    A = offset + sum_{xy} D_{xy} m_x . n_y - k sum_x w_x (1 + p_x . m_x),

so for fixed everything else the best observable axis is
n_y = unit(sum_x D_{xy} m_x), the best preparation is
m_x = unit(sum_y D_{xy} n_y - k w_x p_x), and the POVM step minimizes
the penalty sum_x w_x (1 + p_x . m_x) over valid POVMs.  The POVM
minimum is searched over the extremal parameterization (unit directions
with weights solved from completeness) by a warm-started batched
Nelder-Mead plus closed-form probes: the anti-aligned extremal POVM and
every projective two-outcome assignment.  The current POVM always stays
in the candidate set, so the see-saw value never decreases.

Every quantity of a batch of restarts advances in lock step through
numpy array ops; a "row" below is one restart (or one restart of one
outcome assignment).  All see-saw results are heuristic lower bounds on
the true maximum and are labeled as such; the two closed-form projective
bounds (the four-outcome family and the symmetric three-outcome family)
are certified, reducing the projective maximum to a one-dimensional
concave-free maximization on [-1, 1] handled by bracketed golden
section.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ._numerics import bracketed_scan_max, nelder_mead_batch
from .qubit import Povm
from .sampling import (
    RngStream,
    random_extremal_povms,
    random_unit_vectors,
    solve_weights_directions,
    solve_weights_inplane,
)
from .witness import Strategy, WitnessSpec

Array = np.ndarray

SQ2 = np.sqrt(2.0)

# penalty objective barrier for infeasible extremal parameters; feasible
# penalties live in [0, 2], so anything above 10 is a rejection marker
_BARRIER = 1e2
_NM_ITERS_SEESAW = 60
_NM_ITERS_STANDALONE = 300
_NM_STEP = 0.15


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs shared by every heuristic search."""

    restarts: int = 32
    max_iters: int = 500
    tol: float = 1e-10
    seed: int = 0

    def stream(self, index: int = 0) -> RngStream:
        return RngStream(self.seed, index)


@dataclass(frozen=True)
class BoundResult:
    """One bound value with its provenance.

    `heuristic` is False only for certified closed-form bounds; see-saw
    values are lower bounds on the quantity they chase.  `argmax` holds
    the achieving strategy (or the closed form's scalar argument).
    """

    kind: str
    value: float
    k: float
    heuristic: bool
    argmax: Strategy | dict | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        arg = self.argmax.to_dict() if isinstance(self.argmax, Strategy) else self.argmax
        return {
            "kind": self.kind,
            "value": float(self.value),
            "k": float(self.k),
            "heuristic": bool(self.heuristic),
            "argmax": arg,
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------------------
# batched geometry helpers
# ---------------------------------------------------------------------------


def _normalize_rows(v: Array, fallback: Array) -> Array:
    """Row-normalize (..., 3); rows with (near) zero norm keep the fallback."""
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    ok = n > 1e-14
    safe = np.where(ok, n, 1.0)
    return np.where(ok, v / safe, fallback)


def _spherical_dirs(angles: Array) -> Array:
    """(..., 2) polar/azimuth pairs -> (..., 3) unit vectors."""
    th, ph = angles[..., 0], angles[..., 1]
    st = np.sin(th)
    return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=-1)


def _spherical_angles(dirs: Array) -> Array:
    th = np.arccos(np.clip(dirs[..., 2], -1.0, 1.0))
    ph = np.arctan2(dirs[..., 1], dirs[..., 0])
    return np.stack([th, ph], axis=-1)


def _frame_from_normal(u: Array) -> tuple[Array, Array]:
    """Deterministic in-plane orthonormal frame for unit normals (B, 3)."""
    B = u.shape[0]
    a = np.where(
        (np.abs(u[:, 0]) < 0.9)[:, None],
        np.array([1.0, 0.0, 0.0]),
        np.array([0.0, 0.0, 1.0]),
    )
    e1 = a - np.sum(a * u, axis=1, keepdims=True) * u
    e1 = _normalize_rows(e1, np.array([1.0, 0.0, 0.0]))
    e2 = np.cross(u, e1)
    return e1, e2


def _plane_normal(dirs: Array) -> Array:
    """Unit normal of the span of (B, 3, 3) nearly-coplanar direction triples."""
    u = np.cross(dirs[:, 0], dirs[:, 1])
    alt = np.cross(dirs[:, 0], dirs[:, 2])
    small = np.linalg.norm(u, axis=1) < 1e-9
    u[small] = alt[small]
    still = np.linalg.norm(u, axis=1) < 1e-9
    if still.any():
        # all three directions colinear; any perpendicular will do
        base = dirs[still, 0]
        alt2 = np.cross(base, np.array([1.0, 0.0, 0.0]))
        bad = np.linalg.norm(alt2, axis=1) < 1e-9
        alt2[bad] = np.cross(base[bad], np.array([0.0, 0.0, 1.0]))
        u[still] = alt2
    return _normalize_rows(u, np.array([0.0, 0.0, 1.0]))


# ---------------------------------------------------------------------------
# see-saw core
# ---------------------------------------------------------------------------


def _values(C0: float, D: Array, k: float, M: Array, N: Array, PW: Array, PN: Array) -> Array:
    base = np.einsum("xy,bxi,byi->b", D, M, N)
    O = PW.shape[1]
    pen = np.einsum("bo,bo->b", PW, 1.0 + np.einsum("boi,boi->bo", PN, M[:, :O, :]))
    return C0 + base - k * pen


def _penalty_of(PW: Array, PN: Array, M_S: Array) -> Array:
    """Penalty sum_x w_x (1 + n_x . m_x) for aligned (B, T) blocks."""
    return np.einsum("bt,bt->b", PW, 1.0 + np.einsum("bti,bti->bt", PN, M_S))


def _binary_step(D: Array, M: Array, N_old: Array) -> Array:
    return _normalize_rows(np.einsum("xy,bxi->byi", D, M), N_old)


def _prep_step(D: Array, N: Array, k: float, PW: Array, PN: Array, M_old: Array) -> Array:
    H = np.einsum("xy,byi->bxi", D, N)
    O = PW.shape[1]
    H[:, :O, :] = H[:, :O, :] - k * PW[..., None] * PN
    return _normalize_rows(H, M_old)


def _projective_povm_step(
    M: Array, ii: Array, jj: Array, O: int, PN_old: Array
) -> tuple[Array, Array]:
    """Exact penalty minimizer over projective POVMs with outcomes (ii, jj)."""
    B = M.shape[0]
    rows = np.arange(B)
    d = M[rows, ii] - M[rows, jj]
    n = _normalize_rows(-d, PN_old[rows, ii])
    PW = np.zeros((B, O))
    PW[rows, ii] = 0.5
    PW[rows, jj] = 0.5
    PN = PN_old.copy()
    PN[rows, ii] = n
    PN[rows, jj] = -n
    return PW, PN


def _three_dirs_from_params(params: Array) -> Array:
    """(B, 5) plane angles + 3 in-plane angles -> (B, 3, 3) coplanar dirs."""
    u = _spherical_dirs(params[:, :2])
    e1, e2 = _frame_from_normal(u)
    al = params[:, 2:5]
    return np.cos(al)[..., None] * e1[:, None, :] + np.sin(al)[..., None] * e2[:, None, :]


def _three_params_from_dirs(dirs: Array) -> Array:
    u = _plane_normal(dirs)
    e1, e2 = _frame_from_normal(u)
    al = np.arctan2(
        np.einsum("bti,bi->bt", dirs, e2), np.einsum("bti,bi->bt", dirs, e1)
    )
    return np.concatenate([_spherical_angles(u), al], axis=1)


def _three_weights(dirs: Array) -> tuple[Array, Array]:
    """Completeness weights for coplanar triples, via their own plane frame."""
    u = _plane_normal(dirs)
    e1, e2 = _frame_from_normal(u)
    cos_a = np.einsum("bti,bi->bt", dirs, e1)
    sin_a = np.einsum("bti,bi->bt", dirs, e2)
    return solve_weights_inplane(cos_a, sin_a)


def _extremal_objective(T: int, M_S_ext: Array):
    """Penalty objective over extremal parameters for `nelder_mead_batch`."""

    def objective(params: Array, idx: Array) -> Array:
        m = M_S_ext[idx]
        if T == 3:
            dirs = _three_dirs_from_params(params)
            w, ok = solve_weights_inplane(
                np.cos(params[:, 2:5]), np.sin(params[:, 2:5])
            )
        else:
            dirs = _spherical_dirs(params.reshape(-1, 4, 2))
            w, ok = solve_weights_directions(dirs)
        pen = np.einsum("bt,bt->b", w, 1.0 + np.einsum("bti,bti->bt", dirs, m))
        neg = np.clip(-w, 0.0, None).sum(axis=1)
        bad = ~ok | (neg > 1e-12)
        return np.where(bad, _BARRIER + neg, pen)

    return objective


def _extremal_candidates_from_params(T: int, params: Array) -> tuple[Array, Array, Array]:
    """Rebuild (dirs, weights, feasible) from NM-refined parameters."""
    if T == 3:
        dirs = _three_dirs_from_params(params)
        w, ok = solve_weights_inplane(np.cos(params[:, 2:5]), np.sin(params[:, 2:5]))
    else:
        dirs = _spherical_dirs(params.reshape(-1, 4, 2))
        w, ok = solve_weights_directions(dirs)
    ok = ok & np.all(w > -1e-12, axis=1)
    return dirs, np.clip(w, 0.0, None), ok


def _anti_aligned_block(M_S: Array) -> tuple[Array, Array, Array]:
    """Anti-aligned extremal candidate for (B, T, 3) preparation blocks."""
    T = M_S.shape[1]
    if T == 4:
        dirs = -_normalize_rows(M_S, np.array([0.0, 0.0, 1.0]))
        w, ok = solve_weights_directions(dirs)
    else:
        # project preparations onto their best-fit plane, flip, renormalize
        _, _, vh = np.linalg.svd(M_S)
        e1, e2 = vh[:, 0, :], vh[:, 1, :]
        c1 = np.einsum("bti,bi->bt", M_S, e1)
        c2 = np.einsum("bti,bi->bt", M_S, e2)
        proj = -(c1[..., None] * e1[:, None, :] + c2[..., None] * e2[:, None, :])
        nrm = np.linalg.norm(proj, axis=2)
        okn = np.all(nrm > 1e-12, axis=1)
        dirs = proj / np.where(nrm > 1e-12, nrm, 1.0)[..., None]
        w, ok = _three_weights(dirs)
        ok &= okn
    ok = ok & np.all(w > -1e-12, axis=1)
    return dirs, np.clip(w, 0.0, None), ok


def _extremal_povm_step(
    M: Array,
    subset: Array,
    PW: Array,
    PN: Array,
    nm_iters: int,
    extra_starts: Array | None = None,
) -> tuple[Array, Array]:
    """Penalty-minimizing POVM step over extremal POVMs on `subset` outcomes.

    subset is (B, T) with T in {3, 4}: the outcomes allowed a nonzero
    weight (others are forced to zero).  Candidates per row: the current
    POVM, the anti-aligned extremal probe, every projective pair inside
    the subset, and a Nelder-Mead refinement warm-started from the
    current parameters (plus optional extra starting parameters).  The
    best feasible candidate wins, so the step never increases the
    penalty.
    """
    B, O = PW.shape
    T = subset.shape[1]
    rows = np.arange(B)
    M_S = np.take_along_axis(M, subset[:, :, None], axis=1)
    PW_S = np.take_along_axis(PW, subset, axis=1)
    PN_S = np.take_along_axis(PN, subset[:, :, None], axis=1)

    cand_dirs = [PN_S]
    cand_w = [PW_S]
    cand_pen = [_penalty_of(PW_S, PN_S, M_S)]

    a_dirs, a_w, a_ok = _anti_aligned_block(M_S)
    pen = np.where(a_ok, _penalty_of(a_w, a_dirs, M_S), np.inf)
    cand_dirs.append(a_dirs)
    cand_w.append(a_w)
    cand_pen.append(pen)

    for a, b in combinations(range(T), 2):
        d = M_S[:, a] - M_S[:, b]
        n = _normalize_rows(-d, PN_S[:, a])
        dirs = PN_S.copy()
        dirs[:, a] = n
        dirs[:, b] = -n
        w = np.zeros((B, T))
        w[:, a] = 0.5
        w[:, b] = 0.5
        cand_dirs.append(dirs)
        cand_w.append(w)
        cand_pen.append(1.0 - 0.5 * np.linalg.norm(d, axis=1))

    if nm_iters > 0:
        if T == 3:
            warm = _three_params_from_dirs(PN_S)
        else:
            warm = _spherical_angles(PN_S).reshape(B, 8)
        starts = [warm]
        if extra_starts is not None:
            starts.append(extra_starts)
        x0 = np.concatenate(starts, axis=0)
        idx_map = np.tile(rows, len(starts))
        objective = _extremal_objective(T, M_S)

        def remapped(p: Array, i: Array) -> Array:
            return objective(p, idx_map[i])

        xb, _ = nelder_mead_batch(remapped, x0, step=_NM_STEP, iters=nm_iters, ftol=1e-13)
        dirs, w, ok = _extremal_candidates_from_params(T, xb)
        for s in range(len(starts)):
            sl = slice(s * B, (s + 1) * B)
            d_s, w_s, ok_s = dirs[sl], w[sl], ok[sl]
            pen = np.where(ok_s, _penalty_of(w_s, d_s, M_S), np.inf)
            cand_dirs.append(d_s)
            cand_w.append(w_s)
            cand_pen.append(pen)

    pens = np.stack(cand_pen)  # (C, B)
    pick = np.argmin(pens, axis=0)
    dirs = np.stack(cand_dirs)[pick, rows]  # (B, T, 3)
    w = np.stack(cand_w)[pick, rows]  # (B, T)

    PW_new = np.zeros((B, O))
    np.put_along_axis(PW_new, subset, w, axis=1)
    PN_new = PN.copy()
    np.put_along_axis(PN_new, subset[:, :, None], dirs, axis=1)
    return PW_new, PN_new


def _run_seesaw(
    spec: WitnessSpec,
    M: Array,
    N: Array,
    PW: Array,
    PN: Array,
    config: OptimizerConfig,
    povm_mode: str,
    subset: Array | None = None,
    pair: tuple[Array, Array] | None = None,
    record: bool = False,
) -> dict:
    """Alternate exact steps until every row's value stalls below tol."""
    D = spec.bloch_coeffs
    k = spec.k
    C0 = spec.offset
    O = spec.scenario.povm_outcomes
    vals = _values(C0, D, k, M, N, PW, PN)
    trace = [vals.copy()] if record else None
    iterations = 0
    converged = False
    for it in range(config.max_iters):
        iterations = it + 1
        N = _binary_step(D, M, N)
        M = _prep_step(D, N, k, PW, PN, M)
        if k > 0 and povm_mode != "fixed":
            if povm_mode == "projective":
                PW, PN = _projective_povm_step(M, pair[0], pair[1], O, PN)
            else:
                PW, PN = _extremal_povm_step(M, subset, PW, PN, _NM_ITERS_SEESAW)
        new_vals = _values(C0, D, k, M, N, PW, PN)
        delta = new_vals - vals
        vals = new_vals
        if record:
            trace.append(vals.copy())
        if it >= 1 and float(np.max(delta)) < config.tol:
            converged = True
            break
    return {
        "M": M,
        "N": N,
        "PW": PW,
        "PN": PN,
        "values": vals,
        "iterations": iterations,
        "converged": converged,
        "trace": trace,
    }


def _strategy_from_row(state: dict, row: int) -> Strategy:
    w = np.clip(state["PW"][row], 0.0, None)
    return Strategy.from_arrays(
        state["M"][row], state["N"][row], w, state["PN"][row]
    )


def _random_init(spec: WitnessSpec, B: int, rng) -> tuple[Array, Array, Array, Array]:
    X = spec.scenario.preparations
    Y = spec.scenario.binary_settings
    O = spec.scenario.povm_outcomes
    M = random_unit_vectors(rng, (B, X))
    N = random_unit_vectors(rng, (B, Y))
    sample = random_extremal_povms(O, B, rng)
    return M, N, sample.weights, sample.blochs


# ---------------------------------------------------------------------------
# public heuristics
# ---------------------------------------------------------------------------


def seesaw_maximize(
    spec: WitnessSpec,
    config: OptimizerConfig | None = None,
    record_trace: bool = False,
) -> BoundResult:
    """Multistart see-saw over unrestricted qubit strategies.

    Returns the best value across restarts as a heuristic lower bound on
    the quantum maximum, with the achieving strategy attached.  With
    `record_trace` the diagnostics carry the per-iteration values of
    every restart (each step is a coordinate maximization, so the trace
    never decreases).
    """
    config = config or OptimizerConfig()
    rng = config.stream(0).generator()
    B = config.restarts
    M, N, PW, PN = _random_init(spec, B, rng)
    O = spec.scenario.povm_outcomes
    subset = np.tile(np.arange(O), (B, 1))
    state = _run_seesaw(
        spec, M, N, PW, PN, config, "extremal", subset=subset, record=record_trace
    )
    vals = state["values"]
    best = int(np.argmax(vals))
    diagnostics = {
        "witness": spec.name,
        "restarts": B,
        "iterations": state["iterations"],
        "converged": bool(state["converged"]),
        "value_spread": float(vals.max() - vals.min()),
        "seed": config.seed,
    }
    if record_trace:
        diagnostics["value_trace"] = [
            [float(v) for v in step] for step in state["trace"]
        ]
    return BoundResult(
        kind="quantum-seesaw",
        value=float(vals[best]),
        k=spec.k,
        heuristic=True,
        argmax=_strategy_from_row(state, best),
        diagnostics=diagnostics,
    )


def maximize_given_povm_batch(
    spec: WitnessSpec,
    weights: Array,
    blochs: Array,
    config: OptimizerConfig | None = None,
    restarts: int = 8,
) -> Array:
    """Best witness value for each fixed POVM in a batch.

    weights (S, O) and blochs (S, O, 3); returns (S,) values.  Runs the
    see-saw over preparations and observables only, `restarts` times per
    sample, vectorized across the whole batch.
    """
    config = config or OptimizerConfig()
    S, O = weights.shape
    if O != spec.scenario.povm_outcomes:
        raise ValueError("POVM outcome count does not match the witness scenario")
    rng = config.stream(1).generator()
    B = S * restarts
    X = spec.scenario.preparations
    Y = spec.scenario.binary_settings
    M = random_unit_vectors(rng, (B, X))
    N = random_unit_vectors(rng, (B, Y))
    PW = np.repeat(weights, restarts, axis=0)
    PN = np.repeat(blochs, restarts, axis=0)
    state = _run_seesaw(spec, M, N, PW, PN, config, "fixed")
    return state["values"].reshape(S, restarts).max(axis=1)


def maximize_given_povm(
    spec: WitnessSpec, povm: Povm, config: OptimizerConfig | None = None, restarts: int = 8
) -> float:
    """Best witness value reachable with the POVM held fixed."""
    vals = maximize_given_povm_batch(
        spec, povm.weights[None, :], povm.blochs[None, :, :], config, restarts
    )
    return float(vals[0])


def projective_bound_numeric(
    spec: WitnessSpec,
    config: OptimizerConfig | None = None,
    assignment: tuple[int, int] | None = None,
) -> BoundResult:
    """See-saw restricted to projective POVMs.

    A projective O-outcome measurement is two orthogonal rank-one
    projectors on some outcome pair and zero effects elsewhere.  By
    default every pair assignment is searched and the maximum over
    assignments is returned; this is the threshold a certification must
    clear, since a projective device may label its outcomes arbitrarily.
    Pass `assignment` to restrict to one pair (diagnostics always carry
    the per-pair values).

    Restricting the assignment matters for witnesses whose coefficients
    are not symmetric under outcome permutations: for the three-outcome
    trine family, placing the projectors on the two symmetric outcomes
    gives 4.89165 at k=1, while the asymmetric assignments reach
    4.91199, so the unrestricted default is strictly larger there.

    Heuristic: a lower bound on the projective maximum that in practice
    saturates it.  The POVM step is closed form (anti-aligned axis for
    the assigned pair), so each restart is fully deterministic given its
    start.
    """
    config = config or OptimizerConfig()
    O = spec.scenario.povm_outcomes
    if assignment is None:
        pairs = list(combinations(range(O), 2))
    else:
        a, b = sorted(int(v) for v in assignment)
        if not (0 <= a < b < O):
            raise ValueError("assignment must be two distinct outcomes of the scenario")
        pairs = [(a, b)]
    R = config.restarts
    B = R * len(pairs)
    rng = config.stream(2).generator()
    X = spec.scenario.preparations
    Y = spec.scenario.binary_settings
    M = random_unit_vectors(rng, (B, X))
    N = random_unit_vectors(rng, (B, Y))
    ii = np.repeat([a for a, _ in pairs], R)
    jj = np.repeat([b for _, b in pairs], R)
    axis = random_unit_vectors(rng, B)
    PW = np.zeros((B, O))
    PN = np.tile(np.array([0.0, 0.0, 1.0]), (B, O, 1))
    rows = np.arange(B)
    PW[rows, ii] = 0.5
    PW[rows, jj] = 0.5
    PN[rows, ii] = axis
    PN[rows, jj] = -axis
    state = _run_seesaw(spec, M, N, PW, PN, config, "projective", pair=(ii, jj))
    vals = state["values"]
    best = int(np.argmax(vals))
    per_pair = {
        f"{a},{b}": float(vals[(idx * R) : (idx + 1) * R].max())
        for idx, (a, b) in enumerate(pairs)
    }
    diagnostics = {
        "witness": spec.name,
        "restarts_per_pair": R,
        "iterations": state["iterations"],
        "converged": bool(state["converged"]),
        "pair_values": per_pair,
        "seed": config.seed,
    }
    if assignment is not None:
        diagnostics["assignment"] = list(pairs[0])
    return BoundResult(
        kind="projective-numeric",
        value=float(vals[best]),
        k=spec.k,
        heuristic=True,
        argmax=_strategy_from_row(state, best),
        diagnostics=diagnostics,
    )


def three_outcome_max(
    spec: WitnessSpec, config: OptimizerConfig | None = None
) -> BoundResult:
    """See-saw with at most three nonzero POVM outcomes (four-outcome scenarios).

    Every assignment of the zero effect is searched.  Heuristic, like
    all see-saw values; used as the threshold for claiming a genuinely
    four-outcome measurement.
    """
    config = config or OptimizerConfig()
    O = spec.scenario.povm_outcomes
    if O != 4:
        raise ValueError("three-outcome restriction applies to four-outcome scenarios")
    R = config.restarts
    B = 4 * R
    rng = config.stream(3).generator()
    X = spec.scenario.preparations
    Y = spec.scenario.binary_settings
    M = random_unit_vectors(rng, (B, X))
    N = random_unit_vectors(rng, (B, Y))
    trios = np.array([sorted(set(range(4)) - {z}) for z in range(4)])
    subset = np.repeat(trios, R, axis=0)  # (B, 3)
    sample = random_extremal_povms(3, B, rng)
    PW = np.zeros((B, 4))
    PN = np.tile(np.array([0.0, 0.0, 1.0]), (B, 4, 1))
    np.put_along_axis(PW, subset, sample.weights, axis=1)
    np.put_along_axis(PN, subset[:, :, None], sample.blochs, axis=1)
    state = _run_seesaw(spec, M, N, PW, PN, config, "extremal", subset=subset)
    vals = state["values"]
    best = int(np.argmax(vals))
    per_zero = {
        str(z): float(vals[(z * R) : (z + 1) * R].max()) for z in range(4)
    }
    return BoundResult(
        kind="three-outcome-numeric",
        value=float(vals[best]),
        k=spec.k,
        heuristic=True,
        argmax=_strategy_from_row(state, best),
        diagnostics={
            "witness": spec.name,
            "restarts_per_assignment": R,
            "iterations": state["iterations"],
            "converged": bool(state["converged"]),
            "zero_assignment_values": per_zero,
            "seed": config.seed,
        },
    )


# ---------------------------------------------------------------------------
# single-shot optimal responses
# ---------------------------------------------------------------------------


def _bloch_part(matrix: Array) -> Array:
    from .qubit import HERMITICITY_TOL, PAULIS

    m = np.asarray(matrix, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
        raise ValueError("matrix is not Hermitian")
    return np.real(np.einsum("ijk,kj->i", PAULIS, m)) / 2.0


_LEX_SMALLEST_AXIS = np.array([-1.0, 0.0, 0.0])


def optimal_binary_observable(w_matrix: Array):
    """Observable maximizing Tr(W M_0) - Tr(W M_1) for Hermitian W.

    The optimum aligns with W's Bloch part; a degenerate W (no Bloch
    part) ties, broken deterministically by the lexicographically
    smallest axis.
    """
    from .qubit import Observable

    beta = _bloch_part(w_matrix)
    n = np.linalg.norm(beta)
    axis = _LEX_SMALLEST_AXIS if n < 1e-12 else beta / n
    return Observable(axis)


def optimal_preparation(l_matrix: Array):
    """Pure state maximizing Tr(rho L) for Hermitian L; ties break as above."""
    from .qubit import QubitState

    beta = _bloch_part(l_matrix)
    n = np.linalg.norm(beta)
    axis = _LEX_SMALLEST_AXIS if n < 1e-12 else beta / n
    return QubitState(axis)


def penalty_value(prep_blochs: Array, povm: Povm) -> float:
    """sum_x Tr(rho_x E_x) for the first O preparations."""
    m = np.asarray(prep_blochs, dtype=float)
    O = povm.outcomes
    if m.shape[0] < O:
        raise ValueError("need at least one preparation per POVM outcome")
    return float(
        np.sum(povm.weights * (1.0 + np.einsum("oi,oi->o", povm.blochs, m[:O])))
    )


def anti_aligned_povm(prep_blochs: Array, outcomes: int) -> Povm:
    """Extremal POVM with directions opposing the given preparations.

    For three outcomes the preparations are first projected onto their
    best-fit plane.  Raises when the resulting weights are infeasible
    (preparations too lopsided for an anti-aligned extremal POVM).
    """
    m = np.asarray(prep_blochs, dtype=float)[None, :outcomes, :]
    dirs, w, ok = _anti_aligned_block(m)
    if not ok[0] or np.any(w[0] <= 0):
        raise ValueError("anti-aligned extremal POVM infeasible for these preparations")
    return Povm.from_arrays(w[0], dirs[0])


def optimal_penalty_povm(
    prep_blochs: Array, outcomes: int, config: OptimizerConfig | None = None
) -> Povm:
    """POVM minimizing sum_x Tr(rho_x E_x) over O-outcome POVMs.

    Multistart Nelder-Mead over the extremal parameterization, plus the
    anti-aligned and projective-pair probes; the reported POVM is at
    least as good as every probe and random start in the run.
    """
    config = config or OptimizerConfig()
    if outcomes not in (3, 4):
        raise ValueError("penalty POVM search supports 3 or 4 outcomes")
    m = np.asarray(prep_blochs, dtype=float)
    if m.ndim != 2 or m.shape[0] < outcomes:
        raise ValueError("need (X, 3) preparations with X >= outcomes")
    rng = config.stream(4).generator()
    B = max(config.restarts, 2)
    M = np.tile(m[None, :, :], (B, 1, 1))
    sample = random_extremal_povms(outcomes, B, rng)
    subset = np.tile(np.arange(outcomes), (B, 1))
    a_dirs, _, a_ok = _anti_aligned_block(m[None, :outcomes, :])
    extra = None
    if a_ok[0]:
        if outcomes == 3:
            p = _three_params_from_dirs(a_dirs)
        else:
            p = _spherical_angles(a_dirs).reshape(1, 8)
        extra = np.tile(p, (B, 1))
    PW, PN = _extremal_povm_step(
        M, subset, sample.weights, sample.blochs, _NM_ITERS_STANDALONE, extra_starts=extra
    )
    pens = _penalty_of(
        np.take_along_axis(PW, subset, axis=1),
        np.take_along_axis(PN, subset[:, :, None], axis=1),
        M[:, :outcomes, :],
    )
    best = int(np.argmin(pens))
    return Povm.from_arrays(np.clip(PW[best], 0.0, None), PN[best])


# ---------------------------------------------------------------------------
# certified closed-form projective bounds
# ---------------------------------------------------------------------------


def _sic_projective_profile(k: float):
    r = 3.0 + 144.0 * k * k

    def f(x: float) -> float:
        return (
            (1.0 - 2.0 * k) / 2.0
            + (SQ2 / 24.0) * np.sqrt(6.0 - 4.0 * x)
            + (SQ2 / 24.0) * np.sqrt(2.0 * r + 4.0 * x + 48.0 * k * SQ2 * np.sqrt(1.0 + x))
        )

    return f


def _sym_trine_projective_profile(k: float):
    r = 3.0 + 81.0 * k * k

    def f(x: float) -> float:
        return (
            (1.0 - 2.0 * k) / 2.0
            + (SQ2 / 18.0) * np.sqrt(2.0 * r - 4.0 * x + 36.0 * k * SQ2 * np.sqrt(1.0 - x))
            + (1.0 / 18.0) * np.sqrt(3.0 + 2.0 * x + 2.0 * SQ2 * np.sqrt(1.0 + x))
        )

    return f


def _closed_form_bound(name: str, profile, k: float) -> BoundResult:
    if not np.isfinite(k) or k < 0:
        raise ValueError("penalty weight k must be >= 0")
    x, fx = bracketed_scan_max(profile, -1.0, 1.0, subintervals=64, tol=1e-10)
    return BoundResult(
        kind="projective-closed-form",
        value=float(fx),
        k=float(k),
        heuristic=False,
        argmax={"x": float(x)},
        diagnostics={"witness": name, "method": "closed-form", "subintervals": 64},
    )


def projective_bound_sic(k: float) -> BoundResult:
    """Certified projective bound for the four-outcome family.

    The projective maximum reduces to a one-parameter family; the
    profile is maximized on [-1, 1] by bracketed golden section.
    """
    return _closed_form_bound("sic", _sic_projective_profile(k), k)


def projective_bound_sym_trine(k: float) -> BoundResult:
    """Certified projective bound for the symmetric three-outcome family."""
    return _closed_form_bound("sym-trine", _sym_trine_projective_profile(k), k)


CLOSED_FORM_PROJECTIVE = {
    "sic": projective_bound_sic,
    "sym-trine": projective_bound_sym_trine,
}


def projective_bound(spec: WitnessSpec, config: OptimizerConfig | None = None) -> BoundResult:
    """Certified closed form when the family has one, else the numeric heuristic."""
    fn = CLOSED_FORM_PROJECTIVE.get(spec.name)
    if fn is not None:
        return fn(spec.k)
    return projective_bound_numeric(spec, config)
