"""Decoding metrics and their constraint curves.

A metric scores a joint type by ``ell(Q_XY)``; larger is more likely. Fixing
the side marginal Q_Y, the pairs (ell(Q'), H_Q(X'|Y)) a competitor can reach
are bounded by a concave curve, and the exponent only needs three queries on
it: the diluted optimum r0, the largest entropy below an energy, and the
conditional attaining either.
"""

import math
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np
from scipy.optimize import bisect
from scipy.special import xlogy

from ..config import OptimizerConfig, get_config
from ..models.exponent import MetricKind, MetricName
from ..models.source import ConditionalType, JointSource
from .spectrum import Spectrum


class ConstraintCurve(ABC):
    """Entropy-energy frontier of competitors with a fixed side marginal."""

    @abstractmethod
    def diluted_optimum(self, beta: float, r: float) -> float:
        """max{H' - r - beta * eps' : H' >= r}, -inf if no competitor has H' >= r."""

    @abstractmethod
    def diluted_maximizer(self, beta: float, r: float) -> float:
        """Handle of the competitor attaining diluted_optimum."""

    @abstractmethod
    def max_entropy_below(self, energies: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(S(e), handle) with S(e) = max{H' : eps' <= e}, -inf when empty."""

    @abstractmethod
    def conditional(self, handle: float) -> ConditionalType:
        """Competitor Q(x'|y) for a handle."""


class SpectrumCurve(ConstraintCurve):
    """Frontier given by the Q_Y-weighted spectrum of a model; handles are tilts."""

    def __init__(self, spectrum: Spectrum, config: OptimizerConfig):
        self.spectrum = spectrum
        self.config = config

    def diluted_optimum(self, beta: float, r: float) -> float:
        return self.spectrum.diluted_optimum(beta, r)

    def diluted_maximizer(self, beta: float, r: float) -> float:
        if self.spectrum.is_degenerate:
            return 0.0
        critical, _ = self.spectrum.critical_point(min(max(r, 0.0), self.spectrum.max_entropy))
        return beta if beta < critical else critical

    def max_entropy_below(self, energies):
        return self.spectrum.max_entropy_below(
            energies, self.config.bisection_iterations, self.config.alpha_ceiling
        )

    def conditional(self, handle: float) -> ConditionalType:
        return self.spectrum.conditional_at(handle)


class LinearCurve(ConstraintCurve):
    """Minimum conditional entropy frontier s(eps) = eps on [0, ln|X|]; handles are entropies."""

    def __init__(self, size_x: int, size_y: int):
        self.size_x = size_x
        self.size_y = size_y
        self.log_alphabet = math.log(size_x)

    def diluted_optimum(self, beta: float, r: float) -> float:
        if r > self.log_alphabet:
            return -math.inf
        if beta < 1:
            return (1.0 - beta) * self.log_alphabet - r
        return -beta * r

    def diluted_maximizer(self, beta: float, r: float) -> float:
        return self.log_alphabet if beta < 1 else min(max(r, 0.0), self.log_alphabet)

    def max_entropy_below(self, energies):
        e = np.atleast_1d(np.asarray(energies, dtype=float))
        best = np.where(e >= -1e-12, np.minimum(np.maximum(e, 0.0), self.log_alphabet), -np.inf)
        return best, best

    def conditional(self, handle: float) -> ConditionalType:
        column = geometric_with_entropy(self.size_x, handle)
        return ConditionalType(np.repeat(column[:, None], self.size_y, axis=1))


def geometric_with_entropy(size: int, entropy: float) -> np.ndarray:
    """p_i proportional to exp(-lam * i) with H(p) = entropy."""
    log_size = math.log(size)
    if size == 1 or entropy <= 0:
        p = np.zeros(size)
        p[0] = 1.0
        return p
    if entropy >= log_size:
        return np.full(size, 1.0 / size)
    index = np.arange(size)

    def pmf(lam: float) -> np.ndarray:
        w = np.exp(-lam * index)
        return w / w.sum()

    def gap(lam: float) -> float:
        p = pmf(lam)
        return float(-xlogy(p, p).sum()) - entropy

    upper = 1.0
    while gap(upper) > 0:
        upper *= 2.0
    return pmf(bisect(gap, 0.0, upper, xtol=1e-14, maxiter=200))


class DecodingMetric(ABC):
    """Scores joint types and builds the competitor frontier for a side marginal."""

    name: MetricName

    def __init__(self, src: JointSource, config: Optional[OptimizerConfig] = None):
        self.src = src
        self.config = config or get_config().optimizer

    @abstractmethod
    def scores(self, q: np.ndarray) -> np.ndarray:
        """ell for joint types stacked as (..., |X|, |Y|)."""

    @abstractmethod
    def curve(self, q_y: np.ndarray) -> ConstraintCurve:
        """Frontier of competitors whose joint type has Y-marginal q_y."""

    def score(self, q: np.ndarray) -> float:
        return float(self.scores(np.asarray(q, dtype=float)))


class LikelihoodMetric(DecodingMetric):
    """ell(Q) = sum Q ln P_m for a model P_m (P itself, or P~)."""

    def __init__(self, src: JointSource, model: JointSource, name: MetricName,
                 config: Optional[OptimizerConfig] = None):
        super().__init__(src, config)
        self.model = model
        self.name = name
        self._log_model = np.where(model.support, model.log_p, 0.0)

    def scores(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        value = np.sum(q * self._log_model, axis=(-2, -1))
        touches_zero = np.any((q > 0) & ~self.model.support, axis=(-2, -1))
        return np.where(touches_zero, -np.inf, value)

    def curve(self, q_y: np.ndarray) -> ConstraintCurve:
        spectrum = Spectrum.conditional_x_given_y(self.model, weights=q_y)
        return SpectrumCurve(spectrum, self.config)


class MinConditionalEntropyMetric(DecodingMetric):
    """ell(Q) = -H_Q(X|Y)."""

    name = MetricName.MIN_CONDITIONAL_ENTROPY

    def scores(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        q_y = q.sum(axis=-2)
        joint = xlogy(q, q).sum(axis=(-2, -1))
        return joint - xlogy(q_y, q_y).sum(axis=-1)

    def curve(self, q_y: np.ndarray) -> ConstraintCurve:
        return LinearCurve(self.src.size_x, self.src.size_y)


def metric_for(src: JointSource, kind: Optional[MetricKind] = None,
               config: Optional[OptimizerConfig] = None) -> DecodingMetric:
    """Build the DecodingMetric of a MetricKind."""
    kind = kind or MetricKind.matched()
    if kind.name is MetricName.MISMATCHED:
        return LikelihoodMetric(src, kind.mismatch.tilde_source, kind.name, config)
    if kind.name is MetricName.MIN_CONDITIONAL_ENTROPY:
        return MinConditionalEntropyMetric(src, config)
    return LikelihoodMetric(src, src, kind.name, config)
