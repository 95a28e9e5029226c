"""Exact piecewise-linear solution paths for sorted-L1 penalized least squares.

The engine maintains the fused-group structure of the solution while the
weights move along a ray lam(eta) = lam0 + eta * lam_bar.  Within one
structure the grouped values are affine in eta:

    levels(eta) = Ainv (XG^T y - lamG(eta)),   d levels / d eta = -Ainv lamG_bar

where XG stacks the signed grouped columns and Ainv is the cached inverse
of XG^T XG plus the ridge-size diagonal.  Three event families end a
segment: adjacent group values colliding (fuse, including a group hitting
zero), a grouped inequality margin reaching zero (split, including
activations out of the zero group), and the within-group gradient order
or the leading zero-coordinate gradient sign changing (switches).  Event
times are kept as absolute eta values so switch events only touch the few
entries they invalidate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IterationCapError,
    NegativeTimingError,
    NumericalError,
    StructureInvariantBrokenError,
    ValidationError,
)
from .model import (
    GroupStructure,
    PathEvent,
    PathSegment,
    ProblemInstance,
    SolutionPath,
    WeightRay,
    eval_path,
    instance_hash,
    validate_instance,
    validate_ray,
)
from .prox import SolverOptions, solve_slope

__all__ = [
    "PathOptions",
    "EngineState",
    "grouped_design",
    "segment_solution",
    "structure_from_beta",
    "next_fuse_times",
    "next_split_times",
    "next_switch_times",
    "apply_event",
    "run_path",
    "eval_path",
]


@dataclass(frozen=True)
class PathOptions:
    """Tuning knobs for a path run.

    ``iteration_cap`` defaults to 50 p^2 events, a safety net against
    cycling rather than a truncation.  ``validate_every`` > 0 checks the
    cached Gram inverse against a from-scratch inversion every K events
    and records the relative error in the path diagnostics;
    ``check_invariants`` additionally asserts that check after every
    structural event (debug mode).  ``solver`` configures the initializer
    used when the ray starts at nonzero weights.
    """

    iteration_cap: int | None = None
    validate_every: int = 0
    timing_clamp: float = 1e-10
    tie_rtol: float = 1e-12
    negative_margin_rtol: float = 1e-7
    group_tol_scale: float = 1e-7
    probe_tol: float = 1e-6
    solver: SolverOptions = field(default_factory=SolverOptions)
    check_invariants: bool = False


def grouped_design(structure: GroupStructure, X: np.ndarray) -> np.ndarray:
    """Signed grouped columns, one per nonzero group.

    Column j is sum_{i in G_j} sign(beta_i) x_i; for the stored sign
    convention that is -sum s_i x_i.  The zero group contributes nothing.
    """
    X = np.asarray(X, dtype=float)
    cols = []
    for j in range(structure.n_groups):
        members = structure.order[structure.member_positions(j)]
        cols.append(-(X[:, members] * structure.signs[members]).sum(axis=1))
    if not cols:
        return np.zeros((X.shape[0], 0))
    return np.column_stack(cols)


def segment_solution(structure: GroupStructure, instance: ProblemInstance,
                     ray: WeightRay, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """Grouped values and their eta-slope for a fixed structure.

    Solves the stationarity system of the reduced problem:
    levels = Ainv (XG^T y - lamG(eta)) and slope = -Ainv lamG_bar with
    A = XG^T XG + ridge * diag(group sizes).
    """
    XG = grouped_design(structure, instance.X)
    sizes = np.diff(structure.offsets)
    A = XG.T @ XG + instance.ridge * np.diag(sizes.astype(float))
    lam0g, lambarg = _grouped_weight_sums(ray, structure.offsets)
    rhs = XG.T @ instance.y - lam0g - eta * lambarg
    levels = np.linalg.solve(A, rhs) if A.size else np.zeros(0)
    slope = -np.linalg.solve(A, lambarg) if A.size else np.zeros(0)
    return levels, slope


def _grouped_weight_sums(ray: WeightRay, offsets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cum0 = np.concatenate(([0.0], np.cumsum(ray.lam0)))
    cumbar = np.concatenate(([0.0], np.cumsum(ray.lam_bar)))
    lo = offsets[:-1]
    hi = offsets[1:]
    return cum0[hi] - cum0[lo], cumbar[hi] - cumbar[lo]


def structure_from_beta(beta, gradient, tol: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Read (order, offsets, levels, signs) off a coefficient vector.

    Coordinates within ``tol`` of zero form the zero group; the rest are
    chained into shared-value clusters whenever consecutive sorted
    magnitudes differ by at most ``tol``.  Zero coordinates are ordered by
    ascending |gradient|, nonzero groups by ascending s * gradient, ties
    by coordinate index.
    """
    beta = np.asarray(beta, dtype=float)
    gradient = np.asarray(gradient, dtype=float)
    p = beta.size
    absb = np.abs(beta)

    s = np.where(beta > 0, -1.0, np.where(beta < 0, 1.0, 0.0))
    zero_mask = absb <= tol
    s[zero_mask] = np.where(gradient[zero_mask] >= 0, 1.0, -1.0)

    zero_idx = np.flatnonzero(zero_mask)
    zero_idx = zero_idx[np.lexsort((zero_idx, np.abs(gradient[zero_idx])))]

    nz = np.flatnonzero(~zero_mask)
    nz = nz[np.argsort(absb[nz], kind="stable")]
    clusters: list[np.ndarray] = []
    start = 0
    for i in range(1, nz.size):
        if absb[nz[i]] - absb[nz[i - 1]] > tol:
            clusters.append(nz[start:i])
            start = i
    if nz.size:
        clusters.append(nz[start:])

    order_parts = [zero_idx]
    levels = np.empty(len(clusters))
    for ci, cluster in enumerate(clusters):
        key = s[cluster] * gradient[cluster]
        order_parts.append(cluster[np.lexsort((cluster, key))])
        levels[ci] = absb[cluster].mean()
    order = np.concatenate(order_parts).astype(int)
    sizes = [len(c) for c in clusters]
    if sizes:
        offsets = np.concatenate(([zero_idx.size],
                                  zero_idx.size + np.cumsum(sizes))).astype(int)
    else:
        offsets = np.array([p], dtype=int)
    return order, offsets, levels, s


# --- incremental symmetric inverse updates --------------------------------


def _inv_delete(B: np.ndarray, j: int) -> np.ndarray:
    keep = np.delete(np.arange(B.shape[0]), j)
    return B[np.ix_(keep, keep)] - np.outer(B[keep, j], B[j, keep]) / B[j, j]


def _inv_insert(B: np.ndarray, a: np.ndarray, alpha: float, at: int) -> np.ndarray:
    """Inverse after bordering with cross products ``a`` and diagonal
    ``alpha``, then moving the new index to position ``at``.  Raises
    NumericalError when the Schur complement is not positive."""
    m = B.shape[0]
    if m == 0:
        if alpha <= 0:
            raise NumericalError("non-positive diagonal in rank-1 insert")
        return np.array([[1.0 / alpha]])
    v = B @ a
    schur = alpha - float(a @ v)
    if schur <= 0:
        raise NumericalError("non-positive Schur complement in bordered insert")
    top = B + np.outer(v, v) / schur
    out = np.empty((m + 1, m + 1))
    out[:m, :m] = top
    out[:m, m] = -v / schur
    out[m, :m] = -v / schur
    out[m, m] = 1.0 / schur
    if at != m:
        perm = list(range(at)) + [m] + list(range(at, m))
        out = out[np.ix_(perm, perm)]
    return out


def _sym_delete(M: np.ndarray, j: int) -> np.ndarray:
    keep = np.delete(np.arange(M.shape[0]), j)
    return M[np.ix_(keep, keep)]


def _sym_insert(M: np.ndarray, a: np.ndarray, alpha: float, at: int) -> np.ndarray:
    m = M.shape[0]
    out = np.empty((m + 1, m + 1))
    out[:m, :m] = M
    out[:m, m] = a
    out[m, :m] = a
    out[m, m] = alpha
    if at != m:
        perm = list(range(at)) + [m] + list(range(at, m))
        out = out[np.ix_(perm, perm)]
    return out


# --- the engine state ------------------------------------------------------


class EngineState:
    """Mutable state of one path run.

    Positions are 0-based: the zero group occupies positions
    [0, starts[0]) of ``order`` and nonzero group j (ascending level)
    occupies [starts[j], starts[j+1]).  All event times are absolute eta
    values; ``inf`` marks an event that cannot happen under the current
    structure.
    """

    def __init__(self, instance: ProblemInstance, ray: WeightRay,
                 beta0: np.ndarray, options: PathOptions):
        self.instance = instance
        self.ray = ray
        self.options = options
        self.X = instance.X
        self.y = instance.y
        self.ridge = instance.ridge
        self.n, self.p = instance.X.shape
        self.Xty = instance.X.T @ instance.y
        self.cum0 = np.concatenate(([0.0], np.cumsum(ray.lam0)))
        self.cumbar = np.concatenate(([0.0], np.cumsum(ray.lam_bar)))

        self.eta = 0.0
        gradient = instance.gradient(beta0)
        tol = options.group_tol_scale * (1.0 + float(np.max(np.abs(beta0), initial=0.0)))
        self.order, self.starts, self.levels, self.s = structure_from_beta(
            beta0, gradient, tol)

        self._rebuild_linear_algebra()

        # event bookkeeping
        self.n_events = 0
        self.n_fuse = 0
        self.n_split = 0
        self.n_switch = 0
        self.n_sign_switch = 0
        self.fallbacks = 0
        self.gram_checks: list[tuple[int, float]] = []
        self._suppress: dict = {}

        self.refresh()

    # -- basic derived quantities --

    @property
    def n_groups(self) -> int:
        return self.starts.size - 1

    @property
    def zero_count(self) -> int:
        return int(self.starts[0])

    @property
    def nnz(self) -> int:
        return self.p - self.zero_count

    def group_of_position(self, pos: int) -> int:
        """Nonzero group index for a position, -1 for the zero group."""
        if pos < self.starts[0]:
            return -1
        return int(np.searchsorted(self.starts, pos, side="right")) - 1

    def slice_of_group(self, j: int) -> tuple[int, int]:
        if j < 0:
            return 0, int(self.starts[0])
        return int(self.starts[j]), int(self.starts[j + 1])

    def to_structure(self) -> GroupStructure:
        return GroupStructure(
            order=self.order.copy(),
            offsets=self.starts.copy(),
            levels=self.levels.copy(),
            signs=self.s.copy(),
            gram_inverse=self.Ainv.copy(),
        )

    def scatter_beta(self) -> np.ndarray:
        beta = np.zeros(self.p)
        for j in range(self.n_groups):
            a, b = self.slice_of_group(j)
            members = self.order[a:b]
            beta[members] = -self.s[members] * self.levels[j]
        return beta

    def scatter_slope(self) -> np.ndarray:
        slope = np.zeros(self.p)
        for j in range(self.n_groups):
            a, b = self.slice_of_group(j)
            members = self.order[a:b]
            slope[members] = -self.s[members] * self.slopeG[j]
        return slope

    # -- linear algebra maintenance --

    def _group_column(self, members: np.ndarray) -> np.ndarray:
        return -(self.X[:, members] * self.s[members]).sum(axis=1)

    def _group_ydot(self, members: np.ndarray) -> float:
        return float(-(self.s[members] * self.Xty[members]).sum())

    def _rebuild_linear_algebra(self) -> None:
        """From-scratch grouped columns, Gram, and inverse."""
        m = self.n_groups
        self.XG = np.zeros((self.n, m))
        self.XGty = np.zeros(m)
        sizes = np.diff(self.starts).astype(float)
        for j in range(m):
            a, b = self.slice_of_group(j)
            members = self.order[a:b]
            self.XG[:, j] = self._group_column(members)
            self.XGty[j] = self._group_ydot(members)
        self.A = self.XG.T @ self.XG + self.ridge * np.diag(sizes)
        self.Ainv = np.linalg.inv(self.A) if m else np.zeros((0, 0))

    def _probe_inverse(self) -> None:
        m = self.n_groups
        if m == 0:
            return
        j = self.n_events % m
        resid = self.A @ self.Ainv[:, j]
        resid[j] -= 1.0
        if float(np.max(np.abs(resid))) > self.options.probe_tol:
            self.Ainv = np.linalg.inv(self.A)
            self.fallbacks += 1

    def _delete_group_algebra(self, j: int) -> None:
        self.XG = np.delete(self.XG, j, axis=1)
        self.XGty = np.delete(self.XGty, j)
        self.Ainv = _inv_delete(self.Ainv, j) if self.A.shape[0] > 1 else np.zeros((0, 0))
        self.A = _sym_delete(self.A, j)

    def _insert_group_algebra(self, members: np.ndarray, at: int) -> None:
        col = self._group_column(members)
        a = self.XG.T @ col
        alpha = float(col @ col) + self.ridge * members.size
        try:
            self.Ainv = _inv_insert(self.Ainv, a, alpha, at)
        except NumericalError:
            self.A = _sym_insert(self.A, a, alpha, at)
            self.Ainv = np.linalg.inv(self.A)
            self.fallbacks += 1
        else:
            self.A = _sym_insert(self.A, a, alpha, at)
        self.XG = np.insert(self.XG, at, col, axis=1)
        self.XGty = np.insert(self.XGty, at, self._group_ydot(members))

    def scratch_check(self) -> float:
        """Relative Frobenius error of the cached inverse against a fresh
        rebuild of the grouped Gram from the raw design."""
        m = self.n_groups
        if m == 0:
            return 0.0
        XG = np.zeros((self.n, m))
        for j in range(m):
            a, b = self.slice_of_group(j)
            XG[:, j] = self._group_column(self.order[a:b])
        A = XG.T @ XG + self.ridge * np.diag(np.diff(self.starts).astype(float))
        fresh = np.linalg.inv(A)
        denom = float(np.linalg.norm(fresh))
        return float(np.linalg.norm(self.Ainv - fresh)) / max(denom, 1e-300)

    # -- grouped weights --

    def _lam_sums(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.starts[:-1], self.starts[1:]
        return self.cum0[hi] - self.cum0[lo], self.cumbar[hi] - self.cumbar[lo]

    # -- full refresh: closed-form state and every event timing --

    def refresh(self) -> None:
        m = self.n_groups
        lam0g, lambarg = self._lam_sums()
        if m:
            self.levels = self.Ainv @ (self.XGty - lam0g - self.eta * lambarg)
            self.slopeG = -(self.Ainv @ lambarg)
        else:
            self.levels = np.zeros(0)
            self.slopeG = np.zeros(0)

        level_tol = 1e-9 * (1.0 + float(np.max(self.levels, initial=0.0)))
        if m and (self.levels[0] < -level_tol or np.any(np.diff(self.levels) < -level_tol)):
            raise StructureInvariantBrokenError(
                f"group values not strictly ordered at eta={self.eta!r}: {self.levels}"
            )

        r = self.y - self.XG @ self.levels
        u = self.XG @ self.slopeG
        c = self.X.T @ r
        d = self.X.T @ u

        o = self.order
        so = self.s[o]
        sizes = np.diff(np.concatenate(([0], self.starts)))
        level_pos = np.repeat(np.concatenate(([0.0], self.levels)), sizes)
        slope_pos = np.repeat(np.concatenate(([0.0], self.slopeG)), sizes)

        self.sgrad_val = -so * c[o] - self.ridge * level_pos
        self.sgrad_rate = so * d[o] - self.ridge * slope_pos

        self._slice_end = np.repeat(self.starts, sizes)
        self.suf_val = _suffix_within(self.sgrad_val, self._slice_end)
        self.suf_rate = _suffix_within(self.sgrad_rate, self._slice_end)

        self._order_check()
        self.eta_ref = self.eta
        self._mscale = self._margin_scale()
        self._recompute_all_times()
        self._apply_suppressions()

        if self.options.check_invariants:
            err = self.scratch_check()
            if err > 1e-8:
                raise StructureInvariantBrokenError(
                    f"cached inverse off by {err:.3e} at eta={self.eta!r}"
                )

    def _order_check(self) -> None:
        grad_scale = 1.0 + float(np.max(np.abs(self.sgrad_val), initial=0.0))
        tol = 1e-7 * grad_scale
        pos = np.arange(self.p - 1)
        same = self._slice_end[:-1] == self._slice_end[1:] if self.p > 1 else np.zeros(0, bool)
        bad = same & (self.sgrad_val[1:] - self.sgrad_val[:-1] < -tol)
        if np.any(bad):
            k = int(pos[bad][0])
            raise StructureInvariantBrokenError(
                f"within-group gradient order violated at positions {k},{k + 1} "
                f"(eta={self.eta!r})"
            )

    # -- event times --

    def _margin_scale(self) -> float:
        lam_now = float(self.cum0[-1] + abs(self.eta) * np.max(np.abs(self.cumbar)))
        grad = float(np.max(np.abs(self.sgrad_val), initial=0.0))
        return 1.0 + lam_now + grad

    def _recompute_all_times(self) -> None:
        p, m = self.p, self.n_groups
        clamp = self.options.timing_clamp

        # fuse: group j colliding with the level below it; the ordering
        # check in refresh() already bounds how negative a gap can be, so
        # event-instant ties are simply clipped to zero here
        self.fuse_t = np.full(m, math.inf)
        if m:
            below_level = np.concatenate(([0.0], self.levels[:-1]))
            below_slope = np.concatenate(([0.0], self.slopeG[:-1]))
            gap = np.maximum(self.levels - below_level, 0.0)
            closing = below_slope - self.slopeG
            ok = closing > 0
            dt = np.full(m, math.inf)
            dt[ok] = gap[ok] / closing[ok]
            dt[dt <= clamp] = 0.0
            self.fuse_t = self.eta + dt

        # split: one candidate per admissible suffix start (vectorized; the
        # scalar _split_time_at handles the selective switch-path updates)
        ends = self._slice_end
        pos = np.arange(p)
        lam_sufbar = self.cumbar[ends] - self.cumbar[pos]
        m_now = (self.cum0[ends] - self.cum0[pos]) + self.eta * lam_sufbar \
            - (self.suf_val + (self.eta - self.eta_ref) * self.suf_rate)
        m_rate = lam_sufbar - self.suf_rate
        admissible = np.ones(p, dtype=bool)
        if self.starts.size > 1:
            admissible[self.starts[:-1]] = False
        neg_tol = self.options.negative_margin_rtol * self._mscale
        bad = admissible & (m_now < -neg_tol)
        if np.any(bad):
            worst = int(pos[bad][np.argmin(m_now[bad])])
            raise NegativeTimingError(
                f"optimality margin {m_now[worst]:.3e} already violated at "
                f"eta={self.eta!r} (suffix position {worst})"
            )
        with np.errstate(divide="ignore", invalid="ignore"):
            dt = np.where(m_rate < 0, np.maximum(m_now, 0.0) / -m_rate, math.inf)
        dt[dt <= clamp] = 0.0
        self.split_t = np.where(admissible, self.eta + dt, math.inf)

        # order switches: adjacent same-group pairs
        self.switch_t = np.full(max(p - 1, 0), math.inf)
        if p > 1:
            same = ends[:-1] == ends[1:]
            diff_now = (self.sgrad_val[1:] - self.sgrad_val[:-1]) \
                + (self.eta - self.eta_ref) * (self.sgrad_rate[1:] - self.sgrad_rate[:-1])
            rate = self.sgrad_rate[1:] - self.sgrad_rate[:-1]
            order_tol = 1e-7 * (1.0 + np.abs(self.sgrad_val[:-1])
                                + np.abs(self.sgrad_val[1:]))
            bad = same & (diff_now < -order_tol)
            if np.any(bad):
                k = int(np.flatnonzero(bad)[0])
                raise StructureInvariantBrokenError(
                    f"gradient order already inverted at positions {k},{k + 1}"
                )
            with np.errstate(divide="ignore", invalid="ignore"):
                dts = np.where(rate < 0, np.maximum(diff_now, 0.0) / -rate, math.inf)
            dts[dts <= clamp] = 0.0
            self.switch_t = np.where(same, self.eta + dts, math.inf)

        self.sign_t = self._sign_time()

    def _split_admissible(self, pos: int) -> bool:
        if pos < self.starts[0]:
            return True
        return not np.any(self.starts[:-1] == pos)

    def _split_time_at(self, pos: int) -> float:
        """Absolute time at which the suffix margin at ``pos`` hits zero."""
        if not self._split_admissible(pos):
            return math.inf
        end = int(self._slice_end[pos])
        lam_suffix0 = self.cum0[end] - self.cum0[pos]
        lam_suffixbar = self.cumbar[end] - self.cumbar[pos]
        m_ref = lam_suffix0 + self.eta_ref * lam_suffixbar - self.suf_val[pos]
        m_rate = lam_suffixbar - self.suf_rate[pos]
        m_now = m_ref + (self.eta - self.eta_ref) * m_rate
        if m_now < -self.options.negative_margin_rtol * self._mscale:
            raise NegativeTimingError(
                f"optimality margin {m_now:.3e} already violated at eta={self.eta!r} "
                f"(suffix position {pos})"
            )
        if m_rate >= 0:
            return math.inf
        dt = max(m_now, 0.0) / -m_rate
        if dt <= self.options.timing_clamp:
            dt = 0.0
        return self.eta + dt

    def _switch_time_at(self, k: int) -> float:
        ends = self._slice_end
        if ends[k] != ends[k + 1]:
            return math.inf
        diff_ref = self.sgrad_val[k + 1] - self.sgrad_val[k]
        rate = self.sgrad_rate[k + 1] - self.sgrad_rate[k]
        diff_now = diff_ref + (self.eta - self.eta_ref) * rate
        if diff_now < -1e-7 * (1.0 + abs(self.sgrad_val[k]) + abs(self.sgrad_val[k + 1])):
            raise StructureInvariantBrokenError(
                f"gradient order already inverted at positions {k},{k + 1}"
            )
        if rate >= 0:
            return math.inf
        dt = max(diff_now, 0.0) / -rate
        if dt <= self.options.timing_clamp:
            dt = 0.0
        return self.eta + dt

    def _sign_time(self) -> float:
        if self.zero_count == 0:
            return math.inf
        val_ref = self.sgrad_val[0]
        rate = self.sgrad_rate[0]
        val_now = val_ref + (self.eta - self.eta_ref) * rate
        if rate >= 0:
            return math.inf
        dt = max(val_now, 0.0) / -rate
        if dt <= self.options.timing_clamp:
            dt = 0.0
        return self.eta + dt

    def _apply_suppressions(self) -> None:
        """Blank out candidates that would exactly undo the event just
        applied (floating-point bounces; impossible in exact arithmetic)."""
        sup = self._suppress
        if not sup:
            return
        window = sup["eta"] + max(self.options.timing_clamp,
                                  4.0 * np.spacing(abs(sup["eta"]) + 1.0))
        kind = sup["kind"]
        if kind == "merge":
            j = sup["group"]
            a, b = self.slice_of_group(j)
            upper = sup["upper"]
            for pos in range(a + 1, b):
                if self.split_t[pos] <= window and set(self.order[pos:b]) == upper:
                    self.split_t[pos] = math.inf
        elif kind == "death":
            dead = sup["members"]
            p0 = self.zero_count
            for pos in range(p0):
                if self.split_t[pos] <= window and set(self.order[pos:p0]) == dead:
                    self.split_t[pos] = math.inf
        elif kind == "split":
            j = sup["upper_group"]
            if j < self.fuse_t.size and self.fuse_t[j] <= window:
                self.fuse_t[j] = math.inf
        self._suppress = {}

    # -- event selection and application --

    def next_event(self) -> tuple[float, str, int]:
        """Earliest event as (absolute eta, kind, index).

        On ties within the relative tolerance the priority is
        fuse > sign switch > order switch > split, each class taking its
        smallest index.
        """
        t_fuse = float(np.min(self.fuse_t)) if self.fuse_t.size else math.inf
        t_switch = float(np.min(self.switch_t)) if self.switch_t.size else math.inf
        t_split = float(np.min(self.split_t)) if self.split_t.size else math.inf
        t_sign = self.sign_t
        t_min = min(t_fuse, t_sign, t_switch, t_split)
        if math.isinf(t_min):
            return math.inf, "none", -1
        window = t_min + self.options.tie_rtol * max(1.0, abs(t_min))
        if t_fuse <= window:
            return t_fuse, "fuse", int(np.argmin(self.fuse_t))
        if t_sign <= window:
            return t_sign, "switch_sign", 0
        if t_switch <= window:
            return t_switch, "switch_order", int(np.argmin(self.switch_t))
        return t_split, "split", int(np.argmin(self.split_t))

    def advance(self, eta_new: float) -> None:
        if eta_new < self.eta:
            # tie-priority can pick an event a hair later than another
            # queue's minimum; the loser then fires "in the past" by up to
            # the tie window and is absorbed at the current position
            if self.eta - eta_new > 1e-9 * (1.0 + abs(self.eta)):
                raise NumericalError(f"cannot move backwards: {eta_new} < {self.eta}")
            eta_new = self.eta
        self.levels = self.levels + (eta_new - self.eta) * self.slopeG
        self.eta = eta_new

    def apply_fuse(self, j: int) -> tuple[int, int | None]:
        """Fuse group j with the level below it (the zero group for j=0)."""
        self.n_fuse += 1
        if j == 0:
            a, b = self.slice_of_group(0)
            members = self.order[a:b].copy()
            self._delete_group_algebra(0)
            self.starts = np.delete(self.starts, 0)
            self.levels = np.delete(self.levels, 0)
            self.slopeG = np.delete(self.slopeG, 0)
            # fresh gradient for the newly zeroed coordinates, then keep the
            # zero slice sorted by |gradient|
            r = self.y - self.XG @ self.levels
            grad = -(self.X[:, members].T @ r)
            self.s[members] = np.where(grad >= 0, 1.0, -1.0)
            p0 = self.zero_count
            zero_members = self.order[:p0]
            zgrad = -(self.X[:, zero_members].T @ r)
            key = np.abs(zgrad)
            self.order[:p0] = zero_members[np.lexsort((zero_members, key))]
            self._suppress = {"kind": "death", "eta": self.eta,
                              "members": set(int(i) for i in members)}
        else:
            lo_a, lo_b = self.slice_of_group(j - 1)
            hi_a, hi_b = self.slice_of_group(j)
            upper = set(int(i) for i in self.order[hi_a:hi_b])
            members = self.order[lo_a:hi_b].copy()
            # order the merged slice by the current gradient values
            sg_now = self.sgrad_val[lo_a:hi_b] + (self.eta - self.eta_ref) \
                * self.sgrad_rate[lo_a:hi_b]
            self.order[lo_a:hi_b] = members[np.lexsort((members, sg_now))]
            merged_members = self.order[lo_a:hi_b]
            self._delete_group_algebra(j)
            self._delete_group_algebra(j - 1)
            self._insert_group_algebra(merged_members, j - 1)
            self.starts = np.delete(self.starts, j)
            lvl = self.levels[j - 1]
            self.levels = np.delete(self.levels, j)
            self.levels[j - 1] = lvl
            self.slopeG = np.delete(self.slopeG, j)
            self._suppress = {"kind": "merge", "eta": self.eta,
                              "group": j - 1, "upper": upper}
        self._probe_inverse()
        self.refresh()
        return j, None

    def apply_split(self, pos: int) -> tuple[int, int]:
        """Split at a suffix start position; returns grouped (g, k) labels."""
        self.n_split += 1
        p0 = self.zero_count
        if pos < p0:
            members = self.order[pos:p0]
            self._insert_group_algebra(members, 0)
            self.starts = np.concatenate(([pos], self.starts))
            self.levels = np.concatenate(([0.0], self.levels))
            self.slopeG = np.concatenate(([0.0], self.slopeG))
            self._suppress = {"kind": "split", "eta": self.eta, "upper_group": 0}
            g, k = 0, pos + 1
        else:
            j = self.group_of_position(pos)
            a, b = self.slice_of_group(j)
            lower = self.order[a:pos]
            upper = self.order[pos:b]
            self._delete_group_algebra(j)
            self._insert_group_algebra(lower, j)
            self._insert_group_algebra(upper, j + 1)
            self.starts = np.insert(self.starts, j + 1, pos)
            self.levels = np.insert(self.levels, j + 1, self.levels[j])
            self.slopeG = np.insert(self.slopeG, j + 1, self.slopeG[j])
            self._suppress = {"kind": "split", "eta": self.eta, "upper_group": j + 1}
            g, k = j + 1, pos - a + 1
        self._probe_inverse()
        self.refresh()
        return g, k

    def apply_switch(self, k: int) -> None:
        """Swap the coordinates at positions k and k+1 (same group)."""
        self.n_switch += 1
        if self._slice_end[k] != self._slice_end[k + 1]:
            raise NumericalError("switch across a group boundary")
        self.order[[k, k + 1]] = self.order[[k + 1, k]]
        self.sgrad_val[[k, k + 1]] = self.sgrad_val[[k + 1, k]]
        self.sgrad_rate[[k, k + 1]] = self.sgrad_rate[[k + 1, k]]
        end = int(self._slice_end[k])
        nxt = self.suf_val[k + 2] if k + 2 < end else 0.0
        nxt_rate = self.suf_rate[k + 2] if k + 2 < end else 0.0
        self.suf_val[k + 1] = self.sgrad_val[k + 1] + nxt
        self.suf_rate[k + 1] = self.sgrad_rate[k + 1] + nxt_rate
        self.split_t[k + 1] = self._split_time_at(k + 1)
        for kk in (k - 1, k, k + 1):
            if 0 <= kk < self.switch_t.size:
                self.switch_t[kk] = self._switch_time_at(kk)
        # the pair that just swapped cannot immediately swap back
        if self.switch_t.size > k and self.switch_t[k] <= self.eta + self.options.timing_clamp:
            self.switch_t[k] = math.inf
        if k == 0:
            self.sign_t = self._sign_time()

    def apply_sign_switch(self) -> None:
        """Flip the sign assigned to the leading zero-group coordinate."""
        self.n_sign_switch += 1
        if self.zero_count == 0:
            raise NumericalError("sign switch without zeroed coordinates")
        i0 = self.order[0]
        self.s[i0] = -self.s[i0]
        self.sgrad_val[0] = -self.sgrad_val[0]
        self.sgrad_rate[0] = -self.sgrad_rate[0]
        p0 = self.zero_count
        nxt = self.suf_val[1] if 1 < p0 else 0.0
        nxt_rate = self.suf_rate[1] if 1 < p0 else 0.0
        self.suf_val[0] = self.sgrad_val[0] + nxt
        self.suf_rate[0] = self.sgrad_rate[0] + nxt_rate
        self.split_t[0] = self._split_time_at(0)
        if self.switch_t.size:
            self.switch_t[0] = self._switch_time_at(0)
        self.sign_t = self._sign_time()
        if self.sign_t <= self.eta + self.options.timing_clamp:
            self.sign_t = math.inf


def _suffix_within(values: np.ndarray, slice_ends: np.ndarray) -> np.ndarray:
    """Per-position suffix sums restricted to each position's slice."""
    p = values.size
    if p == 0:
        return values.copy()
    total = np.concatenate((np.cumsum(values[::-1])[::-1], [0.0]))
    return total[:p] - total[slice_ends]


# --- public event-timing wrappers (relative times, grouped labels) ---------


def next_fuse_times(state: EngineState) -> np.ndarray:
    """Relative fuse times, entry g for the collision of (grouped) G_g and
    G_{g+1}; entry 0 is the lowest group vanishing into zero."""
    return state.fuse_t - state.eta


def next_split_times(state: EngineState) -> dict[tuple[int, int], float]:
    """Relative split times keyed by grouped labels (g, k)."""
    out: dict[tuple[int, int], float] = {}
    p0 = state.zero_count
    for pos in range(state.p):
        t = state.split_t[pos]
        if math.isinf(t):
            continue
        if pos < p0:
            out[(0, pos + 1)] = t - state.eta
        else:
            j = state.group_of_position(pos)
            a, _ = state.slice_of_group(j)
            out[(j + 1, pos - a + 1)] = t - state.eta
    return out


def next_switch_times(state: EngineState) -> tuple[dict[int, float], float]:
    """Relative order-switch times keyed by 1-based position, plus the
    sign-switch time."""
    out = {k + 1: state.switch_t[k] - state.eta
           for k in range(state.switch_t.size)
           if not math.isinf(state.switch_t[k])}
    sign = state.sign_t - state.eta if not math.isinf(state.sign_t) else math.inf
    return out, sign


def apply_event(state: EngineState, event: PathEvent) -> EngineState:
    """Advance the state to an event's time and apply it.

    The event must match the queue's earliest candidate (same kind and
    time within tolerance).
    """
    t, kind, idx = state.next_event()
    if kind != event.kind or not math.isclose(t, event.eta, rel_tol=1e-9, abs_tol=1e-12):
        raise ValidationError(
            f"event {event.kind}@{event.eta} is not the queue head ({kind}@{t})"
        )
    state.advance(t)
    state.n_events += 1
    if kind == "fuse":
        state.apply_fuse(idx)
    elif kind == "split":
        state.apply_split(idx)
    elif kind == "switch_order":
        state.apply_switch(idx)
    else:
        state.apply_sign_switch()
    return state


# --- the path driver --------------------------------------------------------


def _initial_beta(instance: ProblemInstance, ray: WeightRay,
                  options: PathOptions) -> np.ndarray:
    if np.any(ray.lam0 != 0):
        return solve_slope(instance, ray.lam0, options.solver).beta
    gram = instance.X.T @ instance.X
    if instance.ridge:
        gram = gram + instance.ridge * np.eye(instance.p)
    return np.linalg.solve(gram, instance.X.T @ instance.y)


def run_path(instance: ProblemInstance, ray: WeightRay,
             options: PathOptions | None = None) -> SolutionPath:
    """Trace the full solution path over eta in [0, eta_max).

    Starts from the least-squares solution when lam0 = 0, otherwise from
    the proximal-gradient solver at lam0.  Ends at eta_max with a clipped
    final segment, or with an infinite final segment once no further
    event can occur.
    """
    options = options or PathOptions()
    instance = validate_instance(instance)
    checked = validate_ray(ray.lam0, ray.lam_bar)
    ray = WeightRay(checked.lam0, checked.lam_bar,
                    min(ray.eta_max, checked.eta_max))
    if ray.p != instance.p:
        raise ValidationError("weight ray length must match the number of columns")

    cap = options.iteration_cap if options.iteration_cap is not None \
        else 50 * instance.p * instance.p

    beta0 = _initial_beta(instance, ray, options)
    state = EngineState(instance, ray, beta0, options)

    segments: list[PathSegment] = []
    events: list[PathEvent] = []
    seg_eta = 0.0
    seg_beta = state.scatter_beta()
    seg_slope = state.scatter_slope()

    while True:
        t, kind, idx = state.next_event()
        if t >= ray.eta_max or math.isinf(t):
            end = ray.eta_max if math.isfinite(ray.eta_max) else math.inf
            terminal = PathEvent(kind="terminate", eta=end,
                                 nnz=state.nnz, n_groups=state.n_groups)
            segments.append(PathSegment(seg_eta, end, seg_beta, seg_slope, terminal))
            events.append(terminal)
            break
        if state.n_events >= cap:
            raise IterationCapError(
                f"event cap {cap} reached at eta={state.eta!r}; "
                "raise iteration_cap if the path is genuinely this long"
            )
        state.advance(t)
        state.n_events += 1
        if kind == "fuse":
            g, k = state.apply_fuse(idx)
        elif kind == "split":
            g, k = state.apply_split(idx)
        elif kind == "switch_order":
            state.apply_switch(idx)
            g, k = None, idx + 1
        else:
            state.apply_sign_switch()
            g, k = None, None
        event = PathEvent(kind=kind, eta=t, g=g, k=k,
                          nnz=state.nnz, n_groups=state.n_groups)
        events.append(event)
        if options.validate_every and state.n_events % options.validate_every == 0:
            state.gram_checks.append((state.n_events, state.scratch_check()))
        if t > seg_eta:
            segments.append(PathSegment(seg_eta, t, seg_beta, seg_slope, event))
            seg_eta = t
        seg_beta = state.scatter_beta()
        seg_slope = state.scatter_slope()

    provenance = {
        "instance_hash": instance_hash(instance),
        "ray": ray.describe(),
        "options": {
            "iteration_cap": cap,
            "validate_every": options.validate_every,
            "timing_clamp": options.timing_clamp,
        },
        "diagnostics": {
            "events": state.n_events,
            "fuse_events": state.n_fuse,
            "split_events": state.n_split,
            "switch_events": state.n_switch,
            "sign_switch_events": state.n_sign_switch,
            "fallback_refactorizations": state.fallbacks,
            "gram_checks": [[i, err] for i, err in state.gram_checks],
        },
    }
    return SolutionPath(segments=tuple(segments), events=tuple(events),
                        provenance=provenance)
