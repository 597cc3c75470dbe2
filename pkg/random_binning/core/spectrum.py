"""Entropy spectra s(epsilon), their Legendre structure and RDM free energies.

A numerical spectrum is a weighted collection of groups. Each group is a
vector of log-probabilities over its support and carries a weight:

    conditional_x_given_y   groups = y,      entries ln P(x, y) over x, weight P(y)
    conditional_y_given_x   groups = x,      entries ln P(x, y) over y, weight P(x)
    joint_xy                one group,       entries ln P(x, y) over (x, y), weight 1

With ``zeta(alpha|g) = sum exp(alpha * entry)`` the tilted family gives

    epsilon(alpha) = -sum_g w_g E_{Q_alpha}[entry]
    s(epsilon)     = sum_g w_g ln zeta(alpha|g) + alpha * epsilon
    phi(beta)      = sum_g w_g ln zeta(beta|g)

The error exponent builds the same object with arbitrary Y-weights Q_Y.
"""

import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import bisect
from scipy.special import logsumexp, xlogy

from ..config import SpectrumConfig, get_config
from ..exceptions import DegenerateRowError, DegenerateSpectrumError, OutOfRangeError
from ..logging_config import get_logger
from ..models.source import ConditionalType, JointSource
from ..models.spectrum import SpectrumKind, SpectrumPoint

logger = get_logger('spectrum')

# Slack when comparing a query against the ends of a range
ENDPOINT_TOL = 1e-12


def bisect_decreasing(fn: Callable[[np.ndarray], np.ndarray], targets: np.ndarray,
                      lower: float, upper: float, iterations: int) -> np.ndarray:
    """Solve fn(x) = target elementwise for a non-increasing fn on [lower, upper].

    Targets outside [fn(upper), fn(lower)] converge to the nearer end.
    """
    targets = np.asarray(targets, dtype=float)
    lo = np.full(targets.shape, float(lower))
    hi = np.full(targets.shape, float(upper))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        right = fn(mid) > targets
        lo = np.where(right, mid, lo)
        hi = np.where(right, hi, mid)
    return 0.5 * (lo + hi)


class EntropySpectrum(ABC):
    """Common interface of numerical and closed-form spectra."""

    kind: SpectrumKind

    @property
    @abstractmethod
    def energy_range(self) -> tuple[float, float]:
        """(epsilon_min, epsilon_max)."""

    @abstractmethod
    def epsilon_of_alpha(self, alpha: float) -> float:
        """Energy of the tilted distribution Q_alpha."""

    @abstractmethod
    def alpha_of_epsilon(self, eps: float) -> float:
        """The slope s'(eps) for eps strictly inside the energy range."""

    @abstractmethod
    def s_at(self, eps: float) -> float:
        """Entropy s(eps)."""

    @abstractmethod
    def s_inverse(self, r: float) -> float:
        """Ground-state energy eps_0 with s(eps_0) = r on the increasing branch."""

    @abstractmethod
    def phi(self, beta: float) -> float:
        """Normalized log-partition function of the non-diluted system."""

    def beta_c(self, r: float) -> float:
        """Glassy critical inverse temperature s'(s^{-1}(r))."""
        return self.alpha_of_epsilon(self.s_inverse(r))

    def phi_diluted(self, beta: float, r: float) -> float:
        """RDM free energy: phi(beta) - r below beta_c(r), -beta * s^{-1}(r) above."""
        if beta < 0:
            raise OutOfRangeError('beta', beta, 0.0, None)
        critical = self.beta_c(r)
        if beta < critical:
            return self.phi(beta) - r
        return -beta * self.s_inverse(r)


class Spectrum(EntropySpectrum):
    """Entropy spectrum of a finite-alphabet source, computed from tilts."""

    def __init__(
        self,
        kind: SpectrumKind,
        log_values: np.ndarray,
        weights: Sequence[float],
        source: Optional[JointSource] = None,
        config: Optional[SpectrumConfig] = None,
    ):
        """Build a spectrum from per-group log-probabilities.

        Args:
            kind: Which curve this is
            log_values: (groups, entries) matrix of ln P, -inf outside the support
            weights: Non-negative group weights summing to one
            source: The source the groups were read from, if any
            config: Root-finding and table settings (default from config)
        """
        self.kind = SpectrumKind(kind)
        self.source = source
        self.config = config or get_config().spectrum

        log_values = np.asarray(log_values, dtype=float)
        weights = np.asarray(weights, dtype=float)
        active = weights > 0
        for g in np.flatnonzero(active):
            if not np.isfinite(log_values[g]).any():
                raise DegenerateRowError(int(g))

        self.group_index = np.flatnonzero(active)
        self.n_entries = log_values.shape[1]
        self._weights = weights[active]
        self._mask = np.isfinite(log_values[active])
        self._values = np.where(self._mask, log_values[active], 0.0)

        top = np.where(self._mask, self._values, -np.inf).max(axis=1)
        bottom = np.where(self._mask, self._values, np.inf).min(axis=1)
        counts = self._mask.sum(axis=1)
        at_top = (np.abs(self._values - top[:, None]) <= ENDPOINT_TOL) & self._mask
        at_bottom = (np.abs(self._values - bottom[:, None]) <= ENDPOINT_TOL) & self._mask

        self.eps_min = float(-np.dot(self._weights, top))
        self.eps_max = float(-np.dot(self._weights, bottom))
        self.eps_flat = float(-np.dot(self._weights, self._values.sum(axis=1) / counts))
        self.max_entropy = float(np.dot(self._weights, np.log(counts)))
        self.ground_degeneracy = float(np.dot(self._weights, np.log(at_top.sum(axis=1))))
        self.ceiling_degeneracy = float(np.dot(self._weights, np.log(at_bottom.sum(axis=1))))
        self.is_degenerate = self.eps_max - self.eps_min <= ENDPOINT_TOL * max(1.0, abs(self.eps_max))

        self._table: Optional[list[SpectrumPoint]] = None
        self._table_lock = threading.Lock()

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def conditional_x_given_y(cls, src: JointSource, weights: Optional[Sequence[float]] = None,
                              config: Optional[SpectrumConfig] = None) -> 'Spectrum':
        """s_{X|Y}; ``weights`` replaces P(y) (e.g. by a type's Q_Y)."""
        w = src.p_y if weights is None else weights
        return cls(SpectrumKind.CONDITIONAL_X_GIVEN_Y, src.log_p.T, w, src, config)

    @classmethod
    def conditional_y_given_x(cls, src: JointSource,
                              config: Optional[SpectrumConfig] = None) -> 'Spectrum':
        """s_{Y|X}."""
        return cls(SpectrumKind.CONDITIONAL_Y_GIVEN_X, src.log_p, src.p_x, src, config)

    @classmethod
    def joint(cls, src: JointSource, config: Optional[SpectrumConfig] = None) -> 'Spectrum':
        """s_{XY}."""
        return cls(SpectrumKind.JOINT_XY, src.log_p.reshape(1, -1), [1.0], src, config)

    def __getstate__(self):
        state = self.__dict__.copy()
        del state['_table_lock']
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._table_lock = threading.Lock()

    # ------------------------------------------------------------------
    # Vectorized evaluation
    # ------------------------------------------------------------------

    @property
    def energy_range(self) -> tuple[float, float]:
        return self.eps_min, self.eps_max

    def _scaled(self, alpha) -> np.ndarray:
        a = np.asarray(alpha, dtype=float)[..., None, None]
        return np.where(self._mask, a * self._values, -np.inf)

    def log_zeta(self, alpha) -> np.ndarray:
        """ln zeta(alpha|g) per group, shape alpha.shape + (groups,)."""
        return logsumexp(self._scaled(alpha), axis=-1)

    def tilted(self, alpha) -> np.ndarray:
        """Q_alpha per group, shape alpha.shape + (groups, entries)."""
        scaled = self._scaled(alpha)
        return np.exp(scaled - logsumexp(scaled, axis=-1, keepdims=True))

    def energies(self, alpha) -> np.ndarray:
        """epsilon(alpha), vectorized over alpha."""
        q = self.tilted(alpha)
        return -np.einsum('...gk,gk,g->...', q, self._values, self._weights)

    def entropies(self, alpha) -> np.ndarray:
        """sum_g w_g H(Q_alpha(.|g)), vectorized over alpha."""
        q = self.tilted(alpha)
        return -np.einsum('...gk,g->...', xlogy(q, q), self._weights)

    def log_partition(self, beta) -> np.ndarray:
        """phi(beta), vectorized over beta."""
        return self.log_zeta(beta) @ self._weights

    # ------------------------------------------------------------------
    # Scalar operations
    # ------------------------------------------------------------------

    def epsilon_of_alpha(self, alpha: float) -> float:
        if not math.isfinite(alpha):
            raise OutOfRangeError('alpha', alpha)
        return float(self.energies(alpha))

    def point(self, alpha: float) -> SpectrumPoint:
        """The SpectrumPoint of the tilt alpha."""
        return SpectrumPoint(float(alpha), self.epsilon_of_alpha(alpha), float(self.entropies(alpha)))

    def _require_nondegenerate(self) -> None:
        if self.is_degenerate:
            raise DegenerateSpectrumError(self.kind.value, self.eps_min)

    def _bracket(self, fn: Callable[[float], float], lower: float, upper: float,
                 quantity: str, value: float) -> tuple[float, float]:
        """Double the bracket ends until fn(lower) >= 0 >= fn(upper)."""
        ceiling = self.config.alpha_ceiling
        while fn(upper) > 0:
            upper *= 2.0
            if upper > ceiling:
                raise OutOfRangeError(quantity, value, self.eps_min, self.eps_max)
        while fn(lower) < 0:
            lower *= 2.0
            if lower < -ceiling:
                raise OutOfRangeError(quantity, value, self.eps_min, self.eps_max)
        return lower, upper

    def alpha_of_epsilon(self, eps: float) -> float:
        """The unique alpha with epsilon(alpha) = eps, by bracketed bisection.

        Raises:
            OutOfRangeError: unless eps_min < eps < eps_max
            DegenerateSpectrumError: if the energy range is a single point
        """
        self._require_nondegenerate()
        if not self.eps_min < eps < self.eps_max:
            raise OutOfRangeError('epsilon', eps, self.eps_min, self.eps_max)

        def gap(alpha: float) -> float:
            return float(self.energies(alpha)) - eps

        lower, upper = self._bracket(gap, -1.0, 1.0, 'epsilon', eps)
        logger.debug(f"alpha bracket for eps={eps:.6g}: [{lower}, {upper}]")
        return bisect(gap, lower, upper, xtol=self.config.root_xtol,
                      maxiter=self.config.max_iterations)

    def s_at(self, eps: float) -> float:
        """s(eps); endpoints take the log ground-state degeneracies.

        Raises:
            OutOfRangeError: if eps lies outside [eps_min, eps_max]
        """
        if eps < self.eps_min - ENDPOINT_TOL or eps > self.eps_max + ENDPOINT_TOL:
            raise OutOfRangeError('epsilon', eps, self.eps_min, self.eps_max)
        if self.is_degenerate or eps <= self.eps_min + ENDPOINT_TOL:
            return self.ground_degeneracy
        if eps >= self.eps_max - ENDPOINT_TOL:
            return self.ceiling_degeneracy
        alpha = self.alpha_of_epsilon(eps)
        # The Legendre form is stationary in alpha, so root error enters squared
        return float(self.log_partition(alpha) + alpha * eps)

    def _check_rate(self, r: float) -> None:
        self._require_nondegenerate()
        if r < 0 or r > self.max_entropy + ENDPOINT_TOL:
            raise OutOfRangeError('rate', r, 0.0, self.max_entropy)

    def critical_point(self, r: float) -> tuple[float, float]:
        """(alpha, eps_0) on the increasing branch with s(eps_0) = r."""
        self._check_rate(r)
        if r <= self.ground_degeneracy:
            return math.inf, self.eps_min
        if r >= self.max_entropy:
            return 0.0, self.eps_flat

        def excess(alpha: float) -> float:
            return float(self.entropies(alpha)) - r

        upper = 1.0
        while excess(upper) > 0:
            upper *= 2.0
            if upper > self.config.alpha_ceiling:
                logger.debug(f"rate {r} is within numerical reach of the ground state")
                return math.inf, self.eps_min
        alpha = bisect(excess, 0.0, upper, xtol=self.config.root_xtol,
                       maxiter=self.config.max_iterations)
        return alpha, self.epsilon_of_alpha(alpha)

    def s_inverse(self, r: float) -> float:
        """Ground-state energy after dilution at rate r.

        Raises:
            OutOfRangeError: if r < 0 or r exceeds the spectrum maximum
            DegenerateSpectrumError: if the energy range is a single point
        """
        return self.critical_point(r)[1]

    def beta_c(self, r: float) -> float:
        """alpha(s^{-1}(r)); infinite when r does not exceed the ground degeneracy."""
        return self.critical_point(r)[0]

    def phi(self, beta: float) -> float:
        """phi(beta) = sum_g w_g ln sum exp(beta * entry)."""
        if beta < 0 or not math.isfinite(beta):
            raise OutOfRangeError('beta', beta, 0.0, None)
        return float(self.log_partition(beta))

    def phi_diluted(self, beta: float, r: float) -> float:
        if beta < 0:
            raise OutOfRangeError('beta', beta, 0.0, None)
        critical, ground = self.critical_point(r)
        if beta < critical:
            return self.phi(beta) - r
        return -beta * ground

    # ------------------------------------------------------------------
    # Helpers for the error exponent
    # ------------------------------------------------------------------

    def diluted_optimum(self, beta: float, r: float) -> float:
        """max{s(eps) - r - beta*eps : s(eps) >= r}, -inf when r exceeds s_max.

        Equals phi_diluted but also covers degenerate spectra.
        """
        if r > self.max_entropy + ENDPOINT_TOL:
            return -math.inf
        if self.is_degenerate:
            return self.max_entropy - r - beta * self.eps_min
        return self.phi_diluted(beta, max(r, 0.0))

    def max_entropy_below(self, energies: np.ndarray, iterations: int,
                          alpha_ceiling: float) -> tuple[np.ndarray, np.ndarray]:
        """S(e) = max{s(eps) : eps <= e} and the attaining alpha >= 0, elementwise.

        S is -inf (alpha nan) where e < eps_min.
        """
        e = np.atleast_1d(np.asarray(energies, dtype=float))
        best = np.full(e.shape, -np.inf)
        alpha = np.full(e.shape, np.nan)

        flat = e >= self.eps_flat - ENDPOINT_TOL
        best[flat] = self.max_entropy
        alpha[flat] = 0.0

        inner = ~flat & (e >= self.eps_min - ENDPOINT_TOL)
        if inner.any():
            targets = np.maximum(e[inner], self.eps_min)
            solved = bisect_decreasing(self.energies, targets, 0.0, alpha_ceiling, iterations)
            alpha[inner] = solved
            legendre = self.log_partition(solved) + solved * targets
            best[inner] = np.maximum(legendre, self.ground_degeneracy)
        return best, alpha

    def conditional_at(self, alpha: float) -> ConditionalType:
        """Q_alpha(x|y) as a full ConditionalType (conditional_x_given_y only).

        alpha = inf gives the uniform distribution over each column's maximizers.
        """
        if self.kind is not SpectrumKind.CONDITIONAL_X_GIVEN_Y or self.source is None:
            raise OutOfRangeError('kind', self.kind.value)
        if math.isinf(alpha):
            top = np.where(self._mask, self._values, -np.inf).max(axis=1, keepdims=True)
            ground = (np.abs(self._values - top) <= ENDPOINT_TOL) & self._mask
            groups = ground / ground.sum(axis=1, keepdims=True)
        else:
            groups = self.tilted(alpha)
        q = np.full((self.n_entries, self.source.size_y), 1.0 / self.n_entries)
        q[:, self.group_index] = groups.T
        return ConditionalType(q / q.sum(axis=0, keepdims=True))

    # ------------------------------------------------------------------
    # Cached table (plotting only)
    # ------------------------------------------------------------------

    def table(self) -> list[SpectrumPoint]:
        """Tanh-spaced (alpha, epsilon, s) table sorted by increasing epsilon."""
        if self._table is None:
            with self._table_lock:
                if self._table is None:
                    self._table = self._build_table()
        return self._table

    def _build_table(self) -> list[SpectrumPoint]:
        cfg = self.config
        u = np.linspace(1.0 - cfg.table_edge, -1.0 + cfg.table_edge, cfg.table_size)
        alphas = cfg.table_scale * np.arctanh(u)
        eps = self.energies(alphas)
        entropy = self.entropies(alphas)
        logger.debug(f"Built {self.kind.value} table with {len(alphas)} points")
        return [SpectrumPoint(float(a), float(e), float(s)) for a, e, s in zip(alphas, eps, entropy)]

    def interpolate(self, eps) -> np.ndarray:
        """Linear interpolation of s on the cached table."""
        points = self.table()
        xs = np.array([p.epsilon for p in points])
        ys = np.array([p.entropy for p in points])
        return np.interp(eps, xs, ys)


def two_sided_spectra(src: JointSource,
                      config: Optional[SpectrumConfig] = None) -> tuple[Spectrum, Spectrum, Spectrum]:
    """(s_{X|Y}, s_{Y|X}, s_{XY}) of a source."""
    return (
        Spectrum.conditional_x_given_y(src, config=config),
        Spectrum.conditional_y_given_x(src, config=config),
        Spectrum.joint(src, config=config),
    )


# =============================================================================
# Closed-form spectra
# =============================================================================

@dataclass(frozen=True)
class ClosedFormSpectrum(EntropySpectrum):
    """A spectrum given by analytic expressions instead of a finite source."""

    name: str
    parameters: dict
    s_of_eps: Callable[[float], float] = field(repr=False)
    s_prime_of_eps: Callable[[float], float] = field(repr=False)
    s_inverse_of_r: Callable[[float], float] = field(repr=False)
    eps_of_alpha: Callable[[float], float] = field(repr=False)
    phi_of_beta: Callable[[float], float] = field(repr=False)
    eps_lower: float = 0.0
    eps_upper: float = math.inf

    kind = SpectrumKind.CLOSED_FORM

    @property
    def energy_range(self) -> tuple[float, float]:
        return self.eps_lower, self.eps_upper

    def _inside(self, eps: float) -> None:
        if not self.eps_lower < eps < self.eps_upper:
            raise OutOfRangeError('epsilon', eps, self.eps_lower, self.eps_upper)

    def epsilon_of_alpha(self, alpha: float) -> float:
        if not 0 < alpha < math.inf:
            raise OutOfRangeError('alpha', alpha, 0.0, None)
        return self.eps_of_alpha(alpha)

    def alpha_of_epsilon(self, eps: float) -> float:
        self._inside(eps)
        return self.s_prime_of_eps(eps)

    def s_at(self, eps: float) -> float:
        self._inside(eps)
        return self.s_of_eps(eps)

    def s_inverse(self, r: float) -> float:
        if r < 0:
            raise OutOfRangeError('rate', r, 0.0, None)
        return self.s_inverse_of_r(r)

    def phi(self, beta: float) -> float:
        if not 0 < beta < math.inf:
            raise OutOfRangeError('beta', beta, 0.0, None)
        return self.phi_of_beta(beta)


def harmonic_spectrum(kappa: float, a: float) -> ClosedFormSpectrum:
    """Particles in a harmonic potential: s(eps) = 1/2 ln(4 pi e eps / (kappa a^2))."""
    if kappa <= 0 or a <= 0:
        raise OutOfRangeError('kappa*a^2', kappa * a * a, 0.0, None)
    stiffness = kappa * a * a
    scale = 4.0 * math.pi * math.e / stiffness

    return ClosedFormSpectrum(
        name='harmonic',
        parameters={'kappa': kappa, 'a': a},
        s_of_eps=lambda eps: 0.5 * math.log(scale * eps),
        s_prime_of_eps=lambda eps: 0.5 / eps,
        s_inverse_of_r=lambda r: math.exp(2.0 * r) / scale,
        eps_of_alpha=lambda alpha: 0.5 / alpha,
        phi_of_beta=lambda beta: 0.5 * math.log(2.0 * math.pi / (beta * stiffness)),
    )


CLOSED_FORM_FAMILIES: dict[str, Callable[..., ClosedFormSpectrum]] = {
    'harmonic': harmonic_spectrum,
}
