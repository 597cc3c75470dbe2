"""Random dilution experiment on the conditional energy landscape of a source.

The side sequence y is fixed to the exact type closest to P_Y, so the
undiluted log-partition function per symbol is exactly the spectrum's phi.
Each microstate x in X^n survives independently with probability e^{-nr}.
"""

import math
from typing import Iterable, Optional

import numpy as np
from scipy.special import logsumexp

from ..config import SimulationConfig, SpectrumConfig, get_config
from ..exceptions import BinningError, EmptyDilutionError, MemoryBudgetExceededError, ValidationError
from ..logging_config import get_logger
from ..models.simulation import DilutionCell, DilutionReport
from ..models.source import JointSource
from .simulator import sequence_scores
from .spectrum import Spectrum

logger = get_logger('dilution')


def typical_counts(p: np.ndarray, n: int) -> np.ndarray:
    """Integer counts summing to n closest to n*p (largest remainder)."""
    raw = n * np.asarray(p, dtype=float)
    counts = np.floor(raw).astype(int)
    short = n - int(counts.sum())
    if short > 0:
        order = np.argsort(-(raw - counts), kind='stable')
        counts[order[:short]] += 1
    return counts


def _survivors(seed: int, realization: int, sequences: int,
               keep: float) -> tuple[np.ndarray, np.random.Generator]:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(realization,))))
    return rng.random(sequences) < keep, rng


def _knee(betas: np.ndarray, measured: np.ndarray, spectrum: Spectrum, r: float):
    """Split the measured curve into a paramagnetic and a frozen branch.

    The paramagnetic branch is phi(beta) - r; the frozen branch is the line
    -beta * eps fitted through the origin. Returns (beta_c, eps) or (None, None)
    when no frozen branch is found.
    """
    para = np.array([spectrum.phi(b) - r for b in betas])
    best = None
    for k in range(len(betas) + 1):
        head = np.sum((measured[:k] - para[:k]) ** 2)
        tail_b, tail_m = betas[k:], measured[k:]
        if tail_b.size:
            eps = -float(np.dot(tail_b, tail_m) / np.dot(tail_b, tail_b))
            tail = np.sum((tail_m + tail_b * eps) ** 2)
        else:
            eps, tail = None, 0.0
        if best is None or head + tail < best[0] - 1e-15:
            best = (head + tail, k, eps)

    _, k, eps = best
    if eps is None:
        return None, None
    lower = betas[k - 1] if k > 0 else 0.0
    upper = betas[k]
    try:
        tangency = spectrum.alpha_of_epsilon(eps)
    except BinningError:
        tangency = 0.5 * (lower + upper)
    return float(min(max(tangency, lower), upper)), eps


def rdm_dilution_experiment(
    src: JointSource,
    n: int,
    r: float,
    betas: Iterable[float],
    seed: Optional[int] = None,
    realizations: Optional[int] = None,
    keep_correct: bool = False,
    config: Optional[SimulationConfig] = None,
    spectrum_config: Optional[SpectrumConfig] = None,
) -> DilutionReport:
    """Measure (1/n) ln Z_D(beta) averaged over dilution realizations.

    Args:
        src: Finite-alphabet source; energies are -ln P(x, y) summed over positions
        n: Blocklength
        r: Dilution rate, survival probability e^{-nr}
        betas: Positive inverse temperatures
        seed: Root seed (default simulation.default_seed)
        realizations: Dilution draws to average (default simulation.dilution_realizations)
        keep_correct: Force survival of a sequence drawn from P(.|y)

    Raises:
        MemoryBudgetExceededError: if |X|^n exceeds simulation.max_sequences
        EmptyDilutionError: if no realization keeps a finite-energy microstate
    """
    config = config or get_config().simulation
    seed = config.default_seed if seed is None else seed
    realizations = realizations or config.dilution_realizations
    betas = np.asarray(sorted(float(b) for b in betas))
    if betas.size == 0 or np.any(betas <= 0) or not np.all(np.isfinite(betas)):
        raise ValidationError("betas must be a non-empty list of positive numbers", field='betas')
    if r < 0:
        raise ValidationError(f"rate must be non-negative, got {r}", field='rate', value=r)
    if n < 1:
        raise ValidationError(f"n must be at least 1, got {n}", field='n', value=n)

    sequences = src.size_x ** n
    if sequences > config.max_sequences:
        raise MemoryBudgetExceededError(sequences, config.max_sequences)

    counts = typical_counts(src.p_y, n)
    y = np.repeat(np.arange(src.size_y), counts)
    energies = -sequence_scores(src.log_p, y)
    finite = np.isfinite(energies)
    keep = math.exp(-n * r)
    place = src.size_x ** np.arange(n - 1, -1, -1)

    totals = np.zeros(betas.size)
    empty = 0
    for j in range(realizations):
        alive, rng = _survivors(seed, j, sequences, keep)
        if keep_correct:
            x = [rng.choice(src.size_x, p=src.p_x_given_y[:, b]) for b in y]
            alive[int(np.dot(x, place))] = True
        alive &= finite
        if not alive.any():
            empty += 1
            continue
        kept = energies[alive]
        totals += np.array([logsumexp(-b * kept) for b in betas]) / n

    used = realizations - empty
    if used == 0:
        raise EmptyDilutionError(n, r, realizations)
    if empty:
        logger.warning(f"{empty}/{realizations} realizations kept no microstate")
    measured = totals / used

    spectrum = Spectrum.conditional_x_given_y(src, weights=counts / n, config=spectrum_config)
    log_p = np.where(src.support, src.log_p, 0.0)
    correct = float(np.dot(counts / n, -(src.p_x_given_y * log_p).sum(axis=0)))
    cells = []
    for b, m in zip(betas, measured):
        analytic = spectrum.diluted_optimum(b, r)
        if keep_correct:
            analytic = max(analytic, -b * correct)
        cells.append(DilutionCell(float(b), float(m), float(analytic)))

    try:
        beta_c_analytic = spectrum.beta_c(r)
    except BinningError as e:
        logger.debug(f"No analytic transition at r={r}: {e}")
        beta_c_analytic = None
    beta_c_estimate, ground = _knee(betas, measured, spectrum, r)

    logger.info(f"Dilution n={n} r={r}: {used} realizations, knee at beta={beta_c_estimate}")
    return DilutionReport(
        n=n,
        rate=r,
        seed=seed,
        realizations=realizations,
        empty_realizations=empty,
        keep_correct=keep_correct,
        cells=cells,
        beta_c_estimate=beta_c_estimate,
        beta_c_analytic=beta_c_analytic,
        ground_energy_estimate=ground,
    )
