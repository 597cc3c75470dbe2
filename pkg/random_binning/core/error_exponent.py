"""Bit-error exponent E(R, beta) of the finite-temperature decoder.

    E(R, beta) = min_{Q_XY << P} [ D(Q_XY || P) + A(Q_XY, R, beta) ]

    A = min [R - H_Q(X'|Y)]_+  over Q_{X'|Y} with
        beta * ell(Q_{X'Y}) + [H_Q(X'|Y) - R]_+ >= beta * ell(Q_XY)

The competitor Q_{X'Y} shares the Y-marginal of Q_XY. For a fixed Q_Y the
inner problem is solved exactly on the metric's constraint curve: A vanishes
iff beta * ell(Q_XY) <= r0(Q_Y), the diluted optimum of that curve, and is
otherwise R minus the largest competitor entropy at energy <= -ell(Q_XY).
The outer problem runs a composition grid over supp(P), refines the best
cells and snaps the best zero-A type toward P.
"""

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional, Union

import numpy as np
from scipy.special import xlogy

from ..config import OptimizerConfig, get_config
from ..exceptions import OutOfRangeError
from ..logging_config import get_logger
from ..models.exponent import ExponentPhase, ExponentResult, InnerExponent, MetricKind, MetricName
from ..models.phase import DecoderKind
from ..models.source import ConditionalType, JointSource, JointType
from .information import divergence
from .metrics import ConstraintCurve, DecodingMetric, metric_for
from .phase_diagram import PhaseDiagram

logger = get_logger('error_exponent')

MetricLike = Union[MetricKind, DecodingMetric, None]

# Bisection steps of the snap toward P
SNAP_ITERATIONS = 60


def _as_metric(src: JointSource, metric: MetricLike,
               config: Optional[OptimizerConfig]) -> DecodingMetric:
    if isinstance(metric, DecodingMetric):
        return metric
    return metric_for(src, metric, config)


def _check_arguments(r: float, beta: float) -> None:
    if not r >= 0:
        raise OutOfRangeError('rate', r, 0.0, None)
    if not beta > 0:
        raise OutOfRangeError('beta', beta, 0.0, None)


# =============================================================================
# Inner problem
# =============================================================================

def _inner_values(curve: ConstraintCurve, ell: np.ndarray, r: float, beta: float,
                  tol: float) -> np.ndarray:
    """A for a batch of scores sharing one side marginal."""
    ell = np.asarray(ell, dtype=float)
    out = np.zeros(ell.shape)
    if math.isinf(beta):
        active = np.ones(ell.shape, dtype=bool)
    else:
        r0 = curve.diluted_optimum(beta, r)
        active = np.ones(ell.shape, dtype=bool) if r0 == -math.inf else beta * ell > r0 + tol
    if active.any():
        best, _ = curve.max_entropy_below(-ell[active])
        out[active] = np.where(np.isfinite(best), np.maximum(r - best, 0.0), math.inf)
    return out


def _inner_solution(curve: ConstraintCurve, threshold: float, r: float, beta: float,
                    tol: float) -> InnerExponent:
    """E_1 at ``threshold`` with its minimizing competitor."""
    r0 = curve.diluted_optimum(beta, r)
    if r0 > -math.inf and threshold <= r0 + tol:
        handle = curve.diluted_maximizer(beta, r)
        return InnerExponent(threshold, 0.0, r0, curve.conditional(handle))
    best, handle = curve.max_entropy_below(-threshold / beta)
    if not np.isfinite(best[0]):
        return InnerExponent(threshold, math.inf, r0, None)
    return InnerExponent(threshold, max(r - float(best[0]), 0.0), r0, curve.conditional(float(handle[0])))


def _word_solution(curve: ConstraintCurve, ell: float, r: float) -> InnerExponent:
    best, handle = curve.max_entropy_below(-ell)
    if not np.isfinite(best[0]):
        return InnerExponent(ell, math.inf, -math.inf, None)
    return InnerExponent(ell, max(r - float(best[0]), 0.0), -math.inf, curve.conditional(float(handle[0])))


def inner_e1(
    src: JointSource,
    t: float,
    beta: float,
    r: float,
    q_y,
    metric: MetricLike = None,
    config: Optional[OptimizerConfig] = None,
) -> InnerExponent:
    """E_1(t, beta, R, Q_Y) = min{[R - H']_+ : beta*ell' + [H' - R]_+ >= t} and r0(Q_Y)."""
    _check_arguments(r, beta)
    m = _as_metric(src, metric, config)
    return _inner_solution(m.curve(np.asarray(q_y, dtype=float)), t, r, beta, m.config.constraint_tolerance)


def solve_a(
    src: JointSource,
    q_xy: Union[JointType, np.ndarray],
    r: float,
    beta: float,
    metric: MetricLike = None,
    config: Optional[OptimizerConfig] = None,
) -> InnerExponent:
    """A(Q_XY, R, beta) with its minimizing Q_{X'|Y}; beta may be math.inf."""
    _check_arguments(r, beta)
    m = _as_metric(src, metric, config)
    q = q_xy.q if isinstance(q_xy, JointType) else np.asarray(q_xy, dtype=float)
    curve = m.curve(q.sum(axis=0))
    ell = m.score(q)
    if math.isinf(beta):
        return _word_solution(curve, ell, r)
    return _inner_solution(curve, beta * ell, r, beta, m.config.constraint_tolerance)


def a_term(
    src: JointSource,
    q_xy: Union[JointType, np.ndarray],
    r: float,
    beta: float,
    metric: MetricLike = None,
    config: Optional[OptimizerConfig] = None,
) -> float:
    """A(Q_XY, R, beta); math.inf when no competitor satisfies the constraint."""
    return solve_a(src, q_xy, r, beta, metric, config).value


def e0_term(
    src: JointSource,
    q_xprime: ConditionalType,
    q_y,
    t: float,
    beta: float,
    r: float,
    metric: MetricLike = None,
) -> float:
    """Exponent of one competitor type: [R - H']_+ if beta*ell' >= t - [H' - R]_+, else inf."""
    m = _as_metric(src, metric, None)
    q_y = np.asarray(q_y, dtype=float)
    joint = q_xprime.q * q_y[None, :]
    entropy = float(-np.dot(q_y, xlogy(q_xprime.q, q_xprime.q).sum(axis=0)))
    if beta * m.score(joint) + max(entropy - r, 0.0) >= t - m.config.constraint_tolerance:
        return max(r - entropy, 0.0)
    return math.inf


# =============================================================================
# Outer problem
# =============================================================================

def compositions(total: int, parts: int) -> np.ndarray:
    """All non-negative integer vectors of length ``parts`` summing to ``total``, lexicographic."""
    if parts == 1:
        return np.array([[total]])
    bars = np.array(list(itertools.combinations(range(total + parts - 1), parts - 1)), dtype=int)
    edges = np.hstack([
        np.full((len(bars), 1), -1),
        bars,
        np.full((len(bars), 1), total + parts - 1),
    ])
    return np.diff(edges, axis=1) - 1


class TypeSearch:
    """Minimizes D(Q||P) + penalty(Q) over joint types Q << P.

    ``penalty`` maps stacked joint types (N, |X|, |Y|) to non-negative values
    (possibly inf); zero-penalty types define the region the snap step uses.
    """

    def __init__(self, src: JointSource, penalty: Callable[[np.ndarray], np.ndarray],
                 config: Optional[OptimizerConfig] = None):
        self.src = src
        self.penalty = penalty
        self.config = config or get_config().optimizer
        self.cells = np.flatnonzero(src.support.ravel())
        self.k = len(self.cells)
        self.p = src.p.ravel()[self.cells]
        self.log_p = np.log(self.p)
        self._offsets = self._neighbourhood_offsets()

    def embed(self, weights: np.ndarray) -> np.ndarray:
        weights = np.atleast_2d(weights)
        full = np.zeros((len(weights), self.src.size_x * self.src.size_y))
        full[:, self.cells] = weights
        return full.reshape(len(weights), self.src.size_x, self.src.size_y)

    def evaluate(self, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(D, penalty) per row of support weights."""
        weights = np.atleast_2d(weights)
        d = np.maximum((xlogy(weights, weights) - weights * self.log_p).sum(axis=1), 0.0)
        return d, self.penalty(self.embed(weights))

    def coarse_grid(self) -> np.ndarray:
        total = max(1, int(round(1.0 / self.config.grid_step)))
        requested = total
        while total > 1 and math.comb(total + self.k - 1, self.k - 1) > self.config.max_grid_points:
            total -= 1
        if total != requested:
            logger.warning(
                f"Grid step widened from 1/{requested} to 1/{total} "
                f"({self.k} support cells, cap {self.config.max_grid_points})"
            )
        self.grid_total = total
        return compositions(total, self.k) / total

    def _neighbourhood_offsets(self) -> np.ndarray:
        """Integer offsets on the first k-1 cells; the last cell absorbs the difference."""
        reach = self.config.refine_shrink
        free = self.k - 1
        if (2 * reach + 1) ** free <= self.config.max_grid_points:
            axes = [np.arange(-reach, reach + 1)] * free
            grid = np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, free)
            return np.hstack([grid, -grid.sum(axis=1, keepdims=True)])
        moves = []
        for i, j in itertools.combinations(range(self.k), 2):
            for step in range(1, reach + 1):
                for sign in (1, -1):
                    move = np.zeros(self.k)
                    move[i] += sign * step
                    move[j] -= sign * step
                    moves.append(move)
        return np.array(moves)

    def _neighbours(self, centre: np.ndarray, step: float) -> np.ndarray:
        points = centre[None, :] + step * self._offsets
        points = points[np.all(points >= -1e-15, axis=1)]
        points = np.maximum(points, 0.0)
        return points / points.sum(axis=1, keepdims=True)

    def refine(self, centre: np.ndarray, value: float, step: float) -> tuple[np.ndarray, float]:
        for round_index in range(self.config.refine_rounds):
            step /= self.config.refine_shrink
            points = self._neighbours(centre, step)
            d, a = self.evaluate(points)
            total = d + a
            i = int(np.argmin(total))
            if total[i] < value:
                centre, value = points[i], float(total[i])
            logger.debug(f"refine round {round_index + 1}: step={step:.3g} best={value:.10g}")
        return centre, value

    def snap(self, inside: np.ndarray, outside: np.ndarray) -> np.ndarray:
        """Last zero-penalty point on the segment from ``inside`` toward ``outside``."""
        lo, hi = 0.0, 1.0
        for _ in range(SNAP_ITERATIONS):
            mid = 0.5 * (lo + hi)
            _, a = self.evaluate((1 - mid) * inside + mid * outside)
            if a[0] == 0:
                lo = mid
            else:
                hi = mid
        return (1 - lo) * inside + lo * outside

    def minimize(self) -> tuple[float, np.ndarray]:
        """(minimum value, minimizing joint type as an |X| x |Y| matrix)."""
        points = np.vstack([self.coarse_grid(), self.p[None, :]])
        d, a = self.evaluate(points)
        total = d + a
        step = 1.0 / self.grid_total

        order = np.argsort(total, kind='stable')[:self.config.refine_candidates]
        results = [self.refine(points[i], float(total[i]), step) for i in order]

        zero = a == 0
        if zero.any() and not zero[-1]:
            nearest = int(np.argmin(np.where(zero, d, np.inf)))
            edge = self.snap(points[nearest], self.p)
            d_edge, a_edge = self.evaluate(edge)
            results.append(self.refine(edge, float(d_edge[0] + a_edge[0]), step / self.config.refine_shrink))

        best_point, best_value = results[0]
        for point, value in results[1:]:
            if value < best_value:
                best_point, best_value = point, value
        logger.debug(f"Type search over {len(points)} grid points: best={best_value:.10g}")
        return best_value, self.embed(best_point)[0]


def _exponent_penalty(metric: DecodingMetric, r: float, beta: float) -> Callable[[np.ndarray], np.ndarray]:
    """A(Q, R, beta) for stacked joint types, grouped by side marginal."""
    tol = metric.config.constraint_tolerance

    def penalty(q: np.ndarray) -> np.ndarray:
        ell = metric.scores(q)
        q_y = q.sum(axis=1)
        keys, inverse = np.unique(np.round(q_y, 12), axis=0, return_inverse=True)
        inverse = np.asarray(inverse).ravel()
        out = np.empty(len(q))
        for g, key in enumerate(keys):
            members = inverse == g
            curve = metric.curve(key / key.sum())
            out[members] = _inner_values(curve, ell[members], r, beta, tol)
        return out

    return penalty


# =============================================================================
# Exponent
# =============================================================================

def _nonzero_phase(name: MetricName, beta: float) -> ExponentPhase:
    if name is MetricName.MIN_CONDITIONAL_ENTROPY:
        return ExponentPhase.POSITIVE
    return ExponentPhase.FERRO_BETA_GE_1 if beta >= 1 else ExponentPhase.FERRO_BETA_LT_1


def exponent(
    src: JointSource,
    r: float,
    beta: float,
    metric: MetricLike = None,
    config: Optional[OptimizerConfig] = None,
) -> ExponentResult:
    """E(R, beta); beta = math.inf gives the word-error exponent.

    The exponent vanishes exactly when A(P, R, beta) = 0, since every other
    type has D > 0 and the zero-A region is closed.
    """
    _check_arguments(r, beta)
    m = _as_metric(src, metric, config)

    at_source = solve_a(src, src.p, r, beta, m)
    if at_source.value == 0:
        return ExponentResult(r, beta, 0.0, ExponentPhase.ZERO, JointType(src.p),
                              at_source.q_xprime, m.name)

    search = TypeSearch(src, _exponent_penalty(m, r, beta), m.config)
    value, q = search.minimize()
    inner = solve_a(src, q, r, beta, m)
    value = max(0.0, divergence(JointType(q), src) + inner.value)
    logger.debug(f"E(R={r:.6g}, beta={beta:.6g}) = {value:.10g} [{m.name.value}]")
    return ExponentResult(r, beta, value, _nonzero_phase(m.name, beta), JointType(q),
                          inner.q_xprime, m.name)


def exponent_word(src: JointSource, r: float, metric: MetricLike = None,
                  config: Optional[OptimizerConfig] = None) -> float:
    """E(R, inf), the word-error exponent."""
    return exponent(src, r, math.inf, metric, config).value


def exponent_phase(src: JointSource, r: float, beta: float,
                   metric: Optional[MetricKind] = None) -> ExponentPhase:
    """Region of (R, beta): zero, the beta >= 1 plateau, or the beta < 1 sub-phase.

    The minimum conditional entropy metric only distinguishes zero/positive.
    """
    _check_arguments(r, beta)
    kind = metric or MetricKind.matched()

    if kind.name is MetricName.MIN_CONDITIONAL_ENTROPY:
        diagram = PhaseDiagram(src, DecoderKind.UNIVERSAL)
        tol = diagram.config.boundary_tolerance
        zero = r <= diagram.ferro_glassy_rate + tol or (
            beta < 1 and r <= diagram.ferro_para_rate(beta) + tol
        )
        return ExponentPhase.ZERO if zero else ExponentPhase.POSITIVE

    if kind.name is MetricName.MISMATCHED:
        diagram = PhaseDiagram(src, DecoderKind.MISMATCHED, kind.mismatch)
    else:
        diagram = PhaseDiagram(src, DecoderKind.MATCHED)
    if r <= diagram.ferro_glassy_rate + diagram.config.boundary_tolerance:
        return ExponentPhase.ZERO
    if beta < 1 and beta <= diagram.gamma_inverse(r):
        return ExponentPhase.ZERO
    return _nonzero_phase(kind.name, beta)


def self_choice_bound(src: JointSource, r: float, config: Optional[OptimizerConfig] = None) -> float:
    """min_Q [D(Q||P) + [R - H_Q(X|Y)]_+], an upper bound on every E(R, beta)."""
    if not r >= 0:
        raise OutOfRangeError('rate', r, 0.0, None)

    def penalty(q: np.ndarray) -> np.ndarray:
        q_y = q.sum(axis=1)
        conditional = xlogy(q_y, q_y).sum(axis=1) - xlogy(q, q).sum(axis=(1, 2))
        return np.maximum(r - conditional, 0.0)

    value, _ = TypeSearch(src, penalty, config).minimize()
    return max(0.0, value)


# =============================================================================
# Sweeps
# =============================================================================

def _sweep_cell(args) -> ExponentResult:
    src, r, beta, metric, config = args
    return exponent(src, r, beta, metric, config)


def exponent_sweep(
    src: JointSource,
    rates: Iterable[float],
    betas: Iterable[float],
    metric: Optional[MetricKind] = None,
    config: Optional[OptimizerConfig] = None,
    workers: int = 1,
    on_progress: Optional[Callable[[int, int], None]] = None,
) -> list[ExponentResult]:
    """E on the rate x beta grid, rate-major; output order is independent of workers."""
    config = config or get_config().optimizer
    cells = [(src, float(r), float(b), metric, config) for r in rates for b in betas]
    total = len(cells)
    results = []
    if workers > 1 and total > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            for done, result in enumerate(executor.map(_sweep_cell, cells), start=1):
                results.append(result)
                if on_progress:
                    on_progress(done, total)
    else:
        for done, cell in enumerate(cells, start=1):
            results.append(_sweep_cell(cell))
            if on_progress:
                on_progress(done, total)
    return results
