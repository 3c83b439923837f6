"""ADMM solver for minimum-count base-station placement.

The combinatorial problem (fewest candidate points whose capacity columns
jointly give every user the target rate) is relaxed to a convex program over
a rate matrix R: column g carries the rates a station at candidate g would
serve, constrained by 0 <= R <= C entrywise and by fixed row sums equal to
the target rate. The objective sum_g w_g * ||R[:, g]||_inf is a weighted
group-sparsity surrogate that drives whole columns to zero, so few
candidates remain active.

The splitting keeps the column slack structure in one block (X-step: per
column, a quadratic prox under r <= s * 1 plus a linear slack cost) and the
row constraints in the other (Z-step: per row, projection onto the
fixed-sum box). Both per-block solutions reduce to finding the root of a
piecewise-linear nonincreasing scalar function, located by bisection inside
analytic brackets:

  X-step, column g: find s with sum_m max((z - u)_m - s, 0) = w_g / rho,
      bracketed by min/max of (z - u) minus w_g / (M rho); then
      r = min(z - u, s * 1). With w_g = 0 the slack constraint is inactive
      and r = z - u exactly.

  Z-step, row m: find lam with sum_g max(0, min(c_g, (r + u)_g - lam)) =
      r_min, bracketed below by min_g((r + u - c)_g) and above by
      max over {g : c_g > r_min / G} of (r + u)_g - r_min / G; then
      z = max(0, min(c, r + u - lam)). Rows with total capacity below
      r_min are infeasible.

The dual update is U <- U + R - Z. Convergence uses the standard scaled
primal/dual residual rule. Solutions are extracted by thresholding column
sup-norms, then repaired (greedy add by decreasing column norm) and pruned
(greedy drop, weakest column first) against the actual capacities so the
returned set is always feasible and contains no redundant station.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

try:  # compiled bisection kernels; the numpy path below is the fallback
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

from .channel import CapacityMatrix
from .errors import InfeasibleError
from .geometry import Point3

__all__ = [
    "PlacementConfig",
    "AdmmState",
    "PlacementResult",
    "x_step_column",
    "z_step_row",
    "admm_solve",
    "reweight",
    "solve_placement",
    "covers",
    "greedy_cover_from_scores",
    "write_trace_csv",
]


@dataclass(frozen=True)
class PlacementConfig:
    """Solver knobs; scale-dependent tolerances are relative to the target rate."""

    rho: float = 1.0
    eps_abs: float = 1e-6
    eps_rel: float = 1e-4
    max_iter: int = 10000
    bisect_max_iter: int = 100
    reweight_rounds: int = 4
    reweight_eps: float = 1e-3
    select_threshold: float = 1e-3
    extract_from: str = "R"

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.extract_from not in ("R", "Z"):
            raise ValueError(f"extract_from must be 'R' or 'Z', got {self.extract_from!r}")
        if self.reweight_rounds < 1:
            raise ValueError("at least one solve round is required")


@dataclass(frozen=True)
class AdmmState:
    """Final solver state plus its residual history.

    R, Z, U are M x G in original rate units; trace columns are
    (iteration, primal residual, dual residual, objective).
    row_sum_max_dev is the worst row-sum violation of Z seen at any
    iteration, in rate units.
    """

    R: np.ndarray
    Z: np.ndarray
    U: np.ndarray
    w: np.ndarray
    rho: float
    iterations: int
    converged: bool
    trace: np.ndarray
    row_sum_max_dev: float

    @property
    def objective(self) -> float:
        return float(self.trace[-1, 3])


@dataclass(frozen=True)
class PlacementResult:
    """Selected candidate set with per-user achieved rates.

    ``selected`` holds column indices into the capacity matrix;
    ``user_rates[m]`` is the total capacity user m receives from the
    selected candidates. ``feasible`` is True iff every user meets the
    target rate, recomputed from actual capacities.
    """

    selected: tuple[int, ...]
    positions: tuple[Point3, ...]
    user_rates: np.ndarray
    feasible: bool
    objective_trace: np.ndarray
    iterations: int
    converged: bool

    @property
    def n_abs(self) -> int:
        return len(self.selected)


_WIDTH_RTOL = 1e-15  # bisection stops once the bracket shrinks to this, relative


def _x_step_numpy(A, w, rho, max_iter):
    m = A.shape[0]
    targets = w / rho
    lo = A.min(axis=0) - targets / m
    hi = A.max(axis=0) - targets / m
    for _ in range(max_iter):
        # the bracket contracts to the root, so judge width at its current scale
        tol = _WIDTH_RTOL * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        f = np.maximum(A - mid[None, :], 0.0).sum(axis=0)
        go_right = f > targets
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    s = 0.5 * (lo + hi)
    R = np.minimum(A, s[None, :])
    zero_w = w == 0.0
    if zero_w.any():
        # Without a slack cost the inequality is inactive: prox is the identity.
        R[:, zero_w] = A[:, zero_w]
        s = np.where(zero_w, A.max(axis=0), s)
    return R, s


def _z_step_numpy(B, C, r_min, max_iter):
    g = C.shape[1]
    thresh = r_min / g
    lo = (B - C).min(axis=1)
    masked = np.where(C > thresh, B, -np.inf)
    hi = masked.max(axis=1) - thresh
    # Rows with no column above r_min/G only happen when sum(C) == r_min
    # exactly; the root then sits at the lower bracket end (z = c).
    hi = np.where(np.isfinite(hi), hi, lo)
    hi = np.maximum(hi, lo)
    for _ in range(max_iter):
        tol = _WIDTH_RTOL * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        gv = np.maximum(0.0, np.minimum(C, B - mid[:, None])).sum(axis=1)
        go_right = gv > r_min
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    lam = 0.5 * (lo + hi)
    return np.maximum(0.0, np.minimum(C, B - lam[:, None]))


if _HAVE_NUMBA:

    @njit(cache=True)
    def _x_step_kernel(A, w, rho, max_iter):  # pragma: no cover - compiled
        m, g = A.shape
        R = np.empty_like(A)
        s_out = np.empty(g)
        for j in range(g):
            amin = A[0, j]
            amax = A[0, j]
            for i in range(1, m):
                v = A[i, j]
                if v < amin:
                    amin = v
                if v > amax:
                    amax = v
            if w[j] == 0.0:
                for i in range(m):
                    R[i, j] = A[i, j]
                s_out[j] = amax
                continue
            target = w[j] / rho
            lo = amin - target / m
            hi = amax - target / m
            for _ in range(max_iter):
                if hi - lo <= _WIDTH_RTOL * max(1.0, abs(lo), abs(hi)):
                    break
                mid = 0.5 * (lo + hi)
                f = 0.0
                for i in range(m):
                    d = A[i, j] - mid
                    if d > 0.0:
                        f += d
                if f > target:
                    lo = mid
                else:
                    hi = mid
            s = 0.5 * (lo + hi)
            s_out[j] = s
            for i in range(m):
                R[i, j] = A[i, j] if A[i, j] < s else s
        return R, s_out

    @njit(cache=True)
    def _z_step_kernel(B, C, r_min, max_iter):  # pragma: no cover - compiled
        m, g = B.shape
        Z = np.empty_like(B)
        thresh = r_min / g
        for i in range(m):
            lo = B[i, 0] - C[i, 0]
            top = -np.inf
            for j in range(g):
                v = B[i, j] - C[i, j]
                if v < lo:
                    lo = v
                if C[i, j] > thresh and B[i, j] > top:
                    top = B[i, j]
            hi = top - thresh if top > -np.inf else lo
            if hi < lo:
                hi = lo
            for _ in range(max_iter):
                if hi - lo <= _WIDTH_RTOL * max(1.0, abs(lo), abs(hi)):
                    break
                mid = 0.5 * (lo + hi)
                gv = 0.0
                for j in range(g):
                    v = B[i, j] - mid
                    if v > C[i, j]:
                        v = C[i, j]
                    if v > 0.0:
                        gv += v
                if gv > r_min:
                    lo = mid
                else:
                    hi = mid
            lam = 0.5 * (lo + hi)
            for j in range(g):
                v = B[i, j] - lam
                if v > C[i, j]:
                    v = C[i, j]
                if v < 0.0:
                    v = 0.0
                Z[i, j] = v
        return Z


def _x_step(Z, U, w, rho, max_iter):
    """All X-step columns at once; returns (R, s)."""
    A = Z - U
    if _HAVE_NUMBA:
        return _x_step_kernel(np.ascontiguousarray(A), w, rho, max_iter)
    return _x_step_numpy(A, w, rho, max_iter)


def _z_step(R, U, C, r_min, max_iter):
    """All Z-step rows at once; assumes every row satisfies sum(C) >= r_min."""
    B = R + U
    if _HAVE_NUMBA:
        return _z_step_kernel(np.ascontiguousarray(B), np.ascontiguousarray(C), r_min, max_iter)
    return _z_step_numpy(B, C, r_min, max_iter)


def x_step_column(z_col, u_col, w_g: float, rho: float, bisect_max_iter: int = 100):
    """Single-column X-step; returns (rate column, slack).

    The slack solves sum(max(z - u - s, 0)) = w_g / rho by bisection on the
    analytic bracket; the rate column is min(z - u, s). For w_g = 0 the
    column is returned unchanged (r = z - u) and the slack reported as its
    maximum entry.
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if w_g < 0:
        raise ValueError(f"weight must be nonnegative, got {w_g}")
    z = np.asarray(z_col, dtype=float).reshape(-1, 1)
    u = np.asarray(u_col, dtype=float).reshape(-1, 1)
    R, s = _x_step(z, u, np.array([float(w_g)]), rho, bisect_max_iter)
    return R[:, 0], float(s[0])


def z_step_row(r_row, u_row, c_row, r_min: float, bisect_max_iter: int = 100):
    """Single-row Z-step: project r + u onto {z : sum(z) = r_min, 0 <= z <= c}.

    Independent of the step size. Raises InfeasibleError when the row's
    total capacity cannot reach r_min.
    """
    r = np.asarray(r_row, dtype=float).reshape(1, -1)
    u = np.asarray(u_row, dtype=float).reshape(1, -1)
    c = np.asarray(c_row, dtype=float).reshape(1, -1)
    if c.sum() < r_min:
        raise InfeasibleError(
            f"row capacity {c.sum():.6g} below the target rate {r_min:.6g}", users=(0,)
        )
    return _z_step(r, u, c, float(r_min), bisect_max_iter)[0]


def _capacity_values(C) -> np.ndarray:
    return np.asarray(getattr(C, "values", C), dtype=float)


def _check_rows_coverable(values: np.ndarray, r_min: float) -> None:
    short = np.flatnonzero(values.sum(axis=1) < r_min)
    if short.size:
        raise InfeasibleError(
            "users not coverable even with every candidate active: "
            + ", ".join(str(int(m)) for m in short),
            users=short.tolist(),
        )


def admm_solve(
    C,
    r_min: float,
    rho: float = 1.0,
    w=None,
    max_iter: int = 10000,
    eps_abs: float = 1e-6,
    eps_rel: float = 1e-4,
    bisect_max_iter: int = 100,
    z0=None,
    u0=None,
) -> AdmmState:
    """Run the splitting to convergence on one weighted problem instance.

    Rates are internally rescaled so the target rate is 1 (one rho default
    then works across rate scales); eps_abs is interpreted relative to the
    target rate. Stops when both the primal residual ||R - Z||_F and the
    dual residual rho * ||Z_k+1 - Z_k||_F fall below
    eps_abs * sqrt(M G) + eps_rel * max(||R||_F, ||Z||_F).

    ``z0`` / ``u0`` warm-start the iteration (original rate units);
    otherwise Z starts at min(C, r_min / G) and U at zero.

    Columns are reordered internally into a canonical (lexicographic)
    order before iterating and mapped back on return, so the result does
    not depend on how the candidates happened to be enumerated (float
    reductions are order-sensitive at machine precision, and the
    extraction threshold could otherwise flip on reordered input).
    """
    values = _capacity_values(C)
    m, g = values.shape
    _check_rows_coverable(values, r_min)
    w = np.ones(g) if w is None else np.asarray(w, dtype=float)
    if w.shape != (g,) or np.any(w < 0):
        raise ValueError("w must be a nonnegative G-vector")

    order = np.lexsort(values)  # canonical column order; stable on duplicates
    invert = np.argsort(order, kind="stable")
    values = values[:, order]
    w = w[order]

    cn = values / r_min
    Z = np.minimum(cn, 1.0 / g) if z0 is None else np.asarray(z0, dtype=float)[:, order] / r_min
    U = np.zeros((m, g)) if u0 is None else np.asarray(u0, dtype=float)[:, order] / r_min
    sq_mg = math.sqrt(m * g)
    trace = []
    row_dev = 0.0
    converged = False
    iterations = 0
    for k in range(1, max_iter + 1):
        iterations = k
        R, _ = _x_step(Z, U, w, rho, bisect_max_iter)
        z_new = _z_step(R, U, cn, 1.0, bisect_max_iter)
        U = U + R - z_new
        primal = float(np.linalg.norm(R - z_new))
        dual = rho * float(np.linalg.norm(z_new - Z))
        Z = z_new
        row_dev = max(row_dev, float(np.abs(Z.sum(axis=1) - 1.0).max()))
        objective = float(w @ np.abs(R).max(axis=0))
        trace.append((k, primal, dual, objective))
        tol = eps_abs * sq_mg + eps_rel * max(np.linalg.norm(R), np.linalg.norm(Z))
        if primal <= tol and dual <= tol:
            converged = True
            break

    trace_arr = np.array(trace)
    trace_arr[:, 1:] *= r_min  # residuals and objective back to rate units
    return AdmmState(
        R=R[:, invert] * r_min,
        Z=Z[:, invert] * r_min,
        U=U[:, invert] * r_min,
        w=w[invert].copy(),
        rho=rho,
        iterations=iterations,
        converged=converged,
        trace=trace_arr,
        row_sum_max_dev=row_dev * r_min,
    )


def reweight(R: np.ndarray, r_min: float, eps: float = 1e-3) -> np.ndarray:
    """Next sparsity weights: w_g = 1 / (eps + ||R[:, g]||_inf / r_min).

    Column magnitudes are normalized by the target rate so eps is
    scale-free; larger columns get strictly smaller weights.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return 1.0 / (eps + np.abs(R).max(axis=0) / r_min)


def covers(values: np.ndarray, subset, r_min: float) -> bool:
    """True iff the selected columns jointly give every user at least r_min.

    Row totals use exact summation so the verdict cannot depend on the
    order the columns are listed in.
    """
    subset = list(subset)
    if not subset:
        return bool(r_min <= 0)
    sub = values[:, subset]
    return all(math.fsum(row) >= r_min for row in sub)


def greedy_cover_from_scores(values: np.ndarray, r_min: float, scores, selected) -> list[int]:
    """Repair then prune a candidate set against actual capacities.

    Adds unselected columns in decreasing score order until the set covers,
    then tries to drop columns in increasing score order (weakest station
    first), keeping only drops that preserve coverage. Exact score ties are
    ordered by the columns' values (their canonical lexicographic rank), so
    visit order is a function of column content, not position: reordering
    the candidates reorders the output set identically. The column index is
    the final fallback, relevant only for byte-identical duplicate columns.
    Assumes the full column set covers.
    """
    scores = np.asarray(scores, dtype=float)
    rank = np.empty(values.shape[1], dtype=int)
    rank[np.lexsort(values)] = np.arange(values.shape[1])
    selected = sorted(set(int(g) for g in selected))
    if not covers(values, selected, r_min):
        remaining = [g for g in range(values.shape[1]) if g not in selected]
        remaining.sort(key=lambda g: (-scores[g], rank[g], g))
        for g in remaining:
            selected.append(g)
            if covers(values, selected, r_min):
                break
    for g in sorted(selected, key=lambda g: (scores[g], -rank[g], -g)):
        trial = [h for h in selected if h != g]
        if covers(values, trial, r_min):
            selected = trial
    return sorted(selected)


def solve_placement(C: CapacityMatrix, r_min: float, config: PlacementConfig = PlacementConfig()) -> PlacementResult:
    """Reweighted ADMM placement: solve, extract, repair, prune.

    Runs ``reweight_rounds`` solves (uniform weights first, then reweighted),
    each warm-started from the previous round. Candidates whose extracted
    column sup-norm exceeds ``select_threshold * r_min`` are kept, then the
    set is repaired/pruned against the actual capacities, so the returned
    placement is always feasible with no redundant station.
    """
    values = _capacity_values(C)
    _check_rows_coverable(values, r_min)
    g = values.shape[1]
    w = np.ones(g)
    z0 = u0 = None
    traces = []
    offset = 0
    total_iterations = 0
    all_converged = True
    state = None
    for _ in range(config.reweight_rounds):
        state = admm_solve(
            values,
            r_min,
            rho=config.rho,
            w=w,
            max_iter=config.max_iter,
            eps_abs=config.eps_abs,
            eps_rel=config.eps_rel,
            bisect_max_iter=config.bisect_max_iter,
            z0=z0,
            u0=u0,
        )
        tr = state.trace.copy()
        tr[:, 0] += offset
        traces.append(tr)
        offset += state.iterations
        total_iterations += state.iterations
        all_converged = all_converged and state.converged
        z0, u0 = state.Z, state.U
        w = reweight(state.R, r_min, config.reweight_eps)
        # Rescaling all weights leaves the argmin unchanged but keeps the
        # slack costs commensurate with rho, which conditions the iteration.
        w /= w.max()

    extracted = state.R if config.extract_from == "R" else state.Z
    scores = np.abs(extracted).max(axis=0)
    initial = np.flatnonzero(scores > config.select_threshold * r_min)
    selected = greedy_cover_from_scores(values, r_min, scores, initial)
    rates = values[:, selected].sum(axis=1) if selected else np.zeros(values.shape[0])
    positions = tuple(C.candidates[g] for g in selected) if isinstance(C, CapacityMatrix) else ()
    return PlacementResult(
        selected=tuple(selected),
        positions=positions,
        user_rates=rates,
        feasible=covers(values, selected, r_min),
        objective_trace=np.vstack(traces),
        iterations=total_iterations,
        converged=all_converged,
    )


def write_trace_csv(trace: np.ndarray, path) -> None:
    """Residual history as CSV: iteration, primal, dual, objective."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "primal", "dual", "objective"])
        for row in np.asarray(trace):
            writer.writerow([repr(int(row[0]))] + [repr(float(v)) for v in row[1:]])
