"""Phase diagrams of the finite-temperature binning decoder.

For a typical side sequence the posterior partition function splits into the
correct term Z_c (growth rate -beta * E_c) and the erroneous term Z_e, which
is a random dilution model at rate R. Comparing the two gives three phases
in the (R, T) plane separated by

    ferro-glassy   R = R_fg                (H(X|Y) for the matched decoder)
    ferro-para     R = Gamma(beta)         (beta below the critical point)
    para-glassy    beta = beta_c(R)

The matched, mismatched and universal (minimum conditional entropy)
decoders differ only in E_c, the spectrum and the critical point.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional, Union

import numpy as np
from scipy.optimize import bisect

from ..config import PhaseConfig, get_config
from ..exceptions import BetaOutOfRangeError, OutOfRangeError, ValidationError
from ..logging_config import get_logger
from ..models.phase import (
    Boundary,
    BoundaryPoint,
    BoundarySet,
    DecoderKind,
    DominantTerm,
    Phase,
    PhaseLabel,
    TwoSidedQuery,
    TwoSidedResult,
)
from ..models.source import JointSource, MismatchModel
from .information import (
    conditional_cross_entropy,
    cross_entropy,
    entropy_x_given_y,
    joint_entropy,
)
from .spectrum import Spectrum, two_sided_spectra

logger = get_logger('phase_diagram')

DecoderLike = Union[DecoderKind, str]


class PhaseDiagram:
    """Boundaries and classification for one source and decoder.

    Critical points are cached per rate, so sweeping a grid of temperatures
    at a fixed rate solves for beta_c once.
    """

    def __init__(
        self,
        src: JointSource,
        decoder: DecoderLike = DecoderKind.MATCHED,
        mismatch: Optional[MismatchModel] = None,
        config: Optional[PhaseConfig] = None,
    ):
        self.src = src
        self.decoder = DecoderKind(decoder)
        self.config = config or get_config().phase
        self.conditional_entropy = entropy_x_given_y(src)
        self.log_alphabet = math.log(src.size_x)

        if self.decoder is DecoderKind.MISMATCHED:
            if mismatch is None:
                raise ValidationError("The mismatched decoder needs a p_tilde model", field='p_tilde')
            self.correct_energy = cross_entropy(src, mismatch)
            if math.isinf(self.correct_energy):
                raise ValidationError(
                    "p_tilde vanishes where p is positive; the correct sequence has no weight",
                    field='p_tilde',
                )
            self.ferro_glassy_rate = conditional_cross_entropy(src, mismatch)
            self.spectrum = Spectrum.conditional_x_given_y(mismatch.tilde_source)
        elif self.decoder is DecoderKind.UNIVERSAL:
            self.correct_energy = self.conditional_entropy
            self.ferro_glassy_rate = self.conditional_entropy
            self.spectrum = None
        else:
            self.correct_energy = joint_entropy(src)
            self.ferro_glassy_rate = self.conditional_entropy
            self.spectrum = Spectrum.conditional_x_given_y(src)

        self._critical: dict[float, float] = {}

    # ------------------------------------------------------------------
    # Curves
    # ------------------------------------------------------------------

    def ferro_para_rates(self, betas) -> np.ndarray:
        """Rate on the ferro-para line at each beta, vectorized."""
        betas = np.asarray(betas, dtype=float)
        if self.spectrum is None:
            return (1.0 - betas) * self.log_alphabet + betas * self.conditional_entropy
        return betas * self.correct_energy + self.spectrum.log_partition(betas)

    def ferro_para_rate(self, beta: float) -> float:
        """Gamma(beta) for matched/mismatched, (1-beta) ln|X| + beta H(X|Y) for universal."""
        if beta < 0 or not math.isfinite(beta):
            raise OutOfRangeError('beta', beta, 0.0, None)
        return float(self.ferro_para_rates(beta))

    def critical_beta(self, r: float) -> float:
        """beta_c(r) of the erroneous term; 1 for the universal decoder.

        Rates above the spectrum maximum have no surviving competitors and
        return 0.
        """
        if r < 0:
            raise OutOfRangeError('rate', r, 0.0, None)
        if self.spectrum is None:
            return 1.0
        cached = self._critical.get(r)
        if cached is not None:
            return cached
        if r >= self.spectrum.max_entropy:
            value = 0.0
        else:
            value = self.spectrum.beta_c(r)
        self._critical[r] = value
        return value

    def critical_temperature(self, r: float) -> float:
        """T_c(r) = 1 / beta_c(r), 0 where beta_c is infinite."""
        beta = self.critical_beta(r)
        if math.isinf(beta):
            return 0.0
        return math.inf if beta == 0 else 1.0 / beta

    def gamma_inverse(self, r: float) -> float:
        """Smallest beta in [0, 1] above which the ferro-para rate stays <= r.

        Raises:
            OutOfRangeError: if r is below the rate at beta = 1
        """
        betas = np.linspace(0.0, 1.0, self.config.gamma_scan_points)
        values = self.ferro_para_rates(betas)
        if r < values[-1] - self.config.boundary_tolerance:
            raise OutOfRangeError('rate', r, float(values[-1]), float(values.max()))
        if r <= values[-1] + 1e-12:
            return 1.0
        above = np.flatnonzero(values > r)
        if above.size == 0:
            return 0.0
        i = int(above[-1])

        def excess(beta: float) -> float:
            return float(self.ferro_para_rates(beta)) - r

        return bisect(excess, betas[i], betas[i + 1], xtol=1e-15, maxiter=200)

    # ------------------------------------------------------------------
    # Free energies
    # ------------------------------------------------------------------

    def correct_free_energy(self, beta: float) -> float:
        """Growth rate of Z_c."""
        return -beta * self.correct_energy

    def error_free_energy(self, beta: float, r: float) -> float:
        """Growth rate of Z_e for a typical side sequence (-inf if nothing survives)."""
        if self.spectrum is None:
            return universal_error_free_energy(self.src, beta, r)
        return self.spectrum.diluted_optimum(beta, r)

    def free_energies(self, beta: float, r: float) -> tuple[float, float]:
        """(growth rate of Z_c, growth rate of Z_e)."""
        return self.correct_free_energy(beta), self.error_free_energy(beta, r)

    # ------------------------------------------------------------------
    # Classification
    # ------------------------------------------------------------------

    def classify(self, r: float, temperature: float) -> PhaseLabel:
        """Phase of (r, T); ties go to the ferromagnetic phase.

        Raises:
            OutOfRangeError: for r < 0 or T <= 0
            DegenerateSpectrumError: when beta_c is needed but undefined
        """
        if r < 0:
            raise OutOfRangeError('rate', r, 0.0, None)
        if not temperature > 0:
            raise OutOfRangeError('temperature', temperature, 0.0, None)

        tol = self.config.boundary_tolerance
        beta = 1.0 / temperature
        label = PhaseLabel(Phase.FERROMAGNETIC, r, temperature, self.decoder)

        ceiling = self.log_alphabet if self.spectrum is None else self.spectrum.max_entropy
        if r > ceiling + tol:
            return label

        critical = self.critical_beta(r)
        gamma = self.ferro_para_rate(beta)
        if beta < critical:
            ferro = r >= gamma - tol
        else:
            ferro = r >= self.ferro_glassy_rate - tol

        if not ferro:
            label.phase = Phase.GLASSY if beta >= critical else Phase.PARAMAGNETIC

        if beta <= critical and abs(r - gamma) < tol:
            label.boundaries.append(Boundary.FERRO_PARA)
        if beta >= critical and abs(r - self.ferro_glassy_rate) < tol:
            label.boundaries.append(Boundary.FERRO_GLASSY)
        if r <= self.ferro_glassy_rate + tol:
            t_c = 0.0 if math.isinf(critical) else (math.inf if critical == 0 else 1.0 / critical)
            if abs(temperature - t_c) < tol:
                label.boundaries.append(Boundary.PARA_GLASSY)
        return label

    # ------------------------------------------------------------------
    # Boundaries
    # ------------------------------------------------------------------

    def triple_temperature(self) -> float:
        """Temperature where the three boundaries meet."""
        if self.decoder is not DecoderKind.MISMATCHED:
            return 1.0
        r = min(self.ferro_glassy_rate, self.spectrum.max_entropy)
        return min(self.critical_temperature(r), self.config.max_temperature)

    def boundaries(self) -> BoundarySet:
        """The decoder's BoundarySet."""
        if self.spectrum is None:
            para_glassy = lambda r: 1.0  # noqa: E731
        elif self.spectrum.is_degenerate:
            para_glassy = None
        else:
            para_glassy = self.critical_beta
        return BoundarySet(
            decoder=self.decoder,
            ferro_glassy_rate=self.ferro_glassy_rate,
            ferro_para_curve=self.ferro_para_rate,
            para_glassy_curve=para_glassy,
            triple_temperature=self.triple_temperature(),
        )

    def sample_boundaries(self, grid: int) -> list[BoundaryPoint]:
        """(R, T) polylines for the three curves, sorted by curve id then R."""
        if grid < 2:
            raise ValidationError(f"grid must be at least 2, got {grid}", field='grid', value=grid)

        t_triple = self.triple_temperature()
        t_max = max(self.config.max_temperature, t_triple)
        points = [
            BoundaryPoint(Boundary.FERRO_GLASSY, self.ferro_glassy_rate, float(t))
            for t in np.linspace(0.0, t_triple, grid)
        ]

        temperatures = np.linspace(t_triple, t_max, grid)
        temperatures = temperatures[temperatures > 0]
        rates = self.ferro_para_rates(1.0 / temperatures)
        points.extend(
            BoundaryPoint(Boundary.FERRO_PARA, float(r), float(t))
            for r, t in zip(rates, temperatures)
        )

        if self.spectrum is None:
            points.extend(
                BoundaryPoint(Boundary.PARA_GLASSY, float(r), 1.0)
                for r in np.linspace(0.0, self.ferro_glassy_rate, grid)
            )
        elif self.spectrum.is_degenerate:
            logger.warning("Spectrum is degenerate; the para-glassy curve is omitted")
        else:
            top = min(self.ferro_glassy_rate, self.spectrum.max_entropy)
            points.extend(
                BoundaryPoint(Boundary.PARA_GLASSY, float(r), self.critical_temperature(float(r)))
                for r in np.linspace(0.0, top, grid)
            )

        logger.debug(f"Sampled {len(points)} boundary points for the {self.decoder.value} decoder")
        return sorted(points, key=lambda p: (p.curve_id.value, p.rate))


# =============================================================================
# Module-level operations
# =============================================================================

def gamma(src: JointSource, beta: float) -> float:
    """Gamma(beta) = beta H(X,Y) + phi(beta)."""
    return PhaseDiagram(src).ferro_para_rate(beta)


def gamma_mismatched(src: JointSource, mismatch: MismatchModel, beta: float) -> float:
    """Gamma~(beta) = -beta E ln P~(X,Y) + sum_y P(y) ln sum_x P~^beta(x,y)."""
    return PhaseDiagram(src, DecoderKind.MISMATCHED, mismatch).ferro_para_rate(beta)


def mismatched_ferro_glassy_rate(src: JointSource, mismatch: MismatchModel) -> float:
    """-E ln P~(X|Y)."""
    return conditional_cross_entropy(src, mismatch)


def gamma_inverse(src: JointSource, r: float, config: Optional[PhaseConfig] = None) -> float:
    """Gamma^{-1}(r) on beta in [0, 1]."""
    return PhaseDiagram(src, config=config).gamma_inverse(r)


def classify(
    src: JointSource,
    r: float,
    temperature: float,
    decoder: DecoderLike = DecoderKind.MATCHED,
    mismatch: Optional[MismatchModel] = None,
    config: Optional[PhaseConfig] = None,
) -> PhaseLabel:
    """Phase of (r, T) for the chosen decoder."""
    return PhaseDiagram(src, decoder, mismatch, config).classify(r, temperature)


def free_energies(
    src: JointSource,
    r: float,
    beta: float,
    decoder: DecoderLike = DecoderKind.MATCHED,
    mismatch: Optional[MismatchModel] = None,
) -> tuple[float, float]:
    """Growth rates of (Z_c, Z_e) at (R, beta)."""
    return PhaseDiagram(src, decoder, mismatch).free_energies(beta, r)


def boundaries(src: JointSource, decoder: DecoderLike = DecoderKind.MATCHED,
               mismatch: Optional[MismatchModel] = None) -> BoundarySet:
    return PhaseDiagram(src, decoder, mismatch).boundaries()


def sample_boundaries(
    src: JointSource,
    decoder: DecoderLike = DecoderKind.MATCHED,
    grid: int = 256,
    mismatch: Optional[MismatchModel] = None,
    config: Optional[PhaseConfig] = None,
) -> list[BoundaryPoint]:
    """Boundary polylines ready for CSV emission."""
    return PhaseDiagram(src, decoder, mismatch, config).sample_boundaries(grid)


def universal_error_free_energy(src: JointSource, beta: float, r: float) -> float:
    """Growth rate of Z_e under the minimum conditional entropy decoder.

    (1 - beta) ln|X| - R below beta = 1 and -beta R above, for R <= ln|X|.
    """
    log_alphabet = math.log(src.size_x)
    if r > log_alphabet:
        return -math.inf
    if beta < 1:
        return (1.0 - beta) * log_alphabet - r
    return -beta * r


def universal_ferro_para_temperature(src: JointSource, r: float) -> float:
    """T = (ln|X| - H(X|Y)) / (ln|X| - R).

    Raises:
        OutOfRangeError: unless H(X|Y) <= r < ln|X|
    """
    log_alphabet = math.log(src.size_x)
    h = entropy_x_given_y(src)
    if not h - 1e-12 <= r < log_alphabet:
        raise OutOfRangeError('rate', r, h, log_alphabet)
    return (log_alphabet - h) / (log_alphabet - r)


# =============================================================================
# Two-sided coding
# =============================================================================

TIE_ORDER = (DominantTerm.CC, DominantTerm.EC, DominantTerm.CE, DominantTerm.EE)


def two_sided_growth_rates(src: JointSource, q: TwoSidedQuery,
                           spectra: Optional[tuple] = None) -> dict[DominantTerm, float]:
    """Growth rates of Z_cc, Z_ec, Z_ce, Z_ee."""
    s_x, s_y, s_xy = spectra or two_sided_spectra(src)
    return {
        DominantTerm.CC: -q.beta * joint_entropy(src),
        DominantTerm.EC: s_x.phi(q.beta) - q.r_x,
        DominantTerm.CE: s_y.phi(q.beta) - q.r_y,
        DominantTerm.EE: s_xy.phi(q.beta) - q.r_x - q.r_y,
    }


def two_sided_dominance(src: JointSource, q: TwoSidedQuery,
                        spectra: Optional[tuple] = None) -> DominantTerm:
    """The term with the largest growth rate, ties toward cc, ec, ce, ee.

    Raises:
        BetaOutOfRangeError: for beta > 1
    """
    if q.beta > 1:
        raise BetaOutOfRangeError(q.beta)
    rates = two_sided_growth_rates(src, q, spectra)
    best = TIE_ORDER[0]
    for term in TIE_ORDER[1:]:
        if rates[term] > rates[best]:
            best = term
    return best


def reliability_region_check(src: JointSource, q: TwoSidedQuery,
                             spectra: Optional[tuple] = None) -> bool:
    """True iff Z_cc beats all three erroneous terms strictly."""
    s_x, s_y, s_xy = spectra or two_sided_spectra(src)
    base = q.beta * joint_entropy(src)
    return (
        q.r_x > base + s_x.phi(q.beta)
        and q.r_y > base + s_y.phi(q.beta)
        and q.r_x + q.r_y > base + s_xy.phi(q.beta)
    )


def two_sided(src: JointSource, q: TwoSidedQuery, spectra: Optional[tuple] = None) -> TwoSidedResult:
    """Dominance and reliability of one query."""
    spectra = spectra or two_sided_spectra(src)
    rates = two_sided_growth_rates(src, q, spectra)
    return TwoSidedResult(
        query=q,
        dominant=two_sided_dominance(src, q, spectra),
        reliable=reliability_region_check(src, q, spectra),
        growth_rates={k.value: v for k, v in rates.items()},
    )


def _two_sided_row(args) -> list[TwoSidedResult]:
    src, r_x, rates_y, beta, spectra = args
    return [two_sided(src, TwoSidedQuery(r_x, r_y, beta), spectra) for r_y in rates_y]


def two_sided_sweep(
    src: JointSource,
    rates_x: Iterable[float],
    rates_y: Iterable[float],
    beta: float = 1.0,
    workers: int = 1,
    on_progress: Optional[Callable[[int, int], None]] = None,
) -> list[TwoSidedResult]:
    """two_sided on the R_X x R_Y grid, R_X-major; one task per R_X row.

    Output order is independent of ``workers``.

    Raises:
        BetaOutOfRangeError: for beta > 1
    """
    if beta > 1:
        raise BetaOutOfRangeError(beta)
    spectra = two_sided_spectra(src)
    rates_y = [float(r) for r in rates_y]
    rows = [(src, float(r), rates_y, beta, spectra) for r in rates_x]
    total = len(rows)
    results: list[TwoSidedResult] = []
    if workers > 1 and total > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            for done, row in enumerate(executor.map(_two_sided_row, rows), start=1):
                results.extend(row)
                if on_progress:
                    on_progress(done, total)
    else:
        for done, row in enumerate(rows, start=1):
            results.extend(_two_sided_row(row))
            if on_progress:
                on_progress(done, total)
    return results
