"""Exact-enumeration simulator of random binning with finite-temperature decoding.

Every sequence x' in X^n receives an independent uniform bin; the decoder sees
the bin u of the true x and the side sequence y, and for position i decides

    argmax_a  sum_{x' in bin u, x'_i = a}  exp(beta * score(x', y))

where score is ln P (matched), ln P~ (mismatched) or -n H(x'|y) (minimum
conditional entropy). Sequences are indexed with x'_1 most significant.

Randomness is counter based: trial t draws (x, y) from
SeedSequence(seed, spawn_key=(t, 0)) and bins from a Philox stream seeded
with spawn_key=(t, 1), so trials are independent of scheduling.
"""

import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.special import logsumexp, xlogy
from scipy.stats import norm

from ..batch_runner import TrialRunner
from ..config import SimulationConfig, get_config
from ..exceptions import MemoryBudgetExceededError
from ..logging_config import LogContext, get_logger
from ..models.exponent import MetricName
from ..models.simulation import DominanceCell, SimConfig, SimReport, SweepPoint, TrialRecord
from ..models.source import JointSource

logger = get_logger('simulator')

# Absolute tolerance on log posterior masses for declaring a tie
TIE_TOL = 1e-12

SOURCE_STREAM = 0
BIN_STREAM = 1


def _logsumexp(values: np.ndarray) -> float:
    if values.size == 0:
        return -math.inf
    with np.errstate(divide='ignore', invalid='ignore'):
        return float(logsumexp(values))


def symbol_error(masses: np.ndarray, true_symbol: int, tie_policy: str) -> int:
    """Error of the argmax decision in half units: 0, 1 (tie at the truth) or 2."""
    top = masses.max()
    if masses[true_symbol] < top - TIE_TOL:
        return 2
    tied = int(np.sum(masses >= top - TIE_TOL))
    if tied > 1:
        return 1 if tie_policy == 'half' else 2
    return 0


def wilson_interval(successes: float, total: int, confidence: float) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    z = float(norm.ppf(0.5 + confidence / 2.0))
    p_hat = successes / total
    denom = 1.0 + z * z / total
    centre = (p_hat + z * z / (2.0 * total)) / denom
    half_width = z * math.sqrt(p_hat * (1.0 - p_hat) / total + z * z / (4.0 * total * total)) / denom
    return max(0.0, centre - half_width), min(1.0, centre + half_width)


def sequence_scores(log_model: np.ndarray, y: np.ndarray) -> np.ndarray:
    """sum_i ln P_m(x'_i, y_i) for every x' in X^n."""
    scores = np.array(log_model[:, y[0]], dtype=float)
    for symbol in y[1:]:
        scores = (scores[:, None] + log_model[:, symbol][None, :]).ravel()
    return scores


def mce_scores(size_x: int, size_y: int, y: np.ndarray) -> np.ndarray:
    """-n H(x'|y) for every x' in X^n, from joint type counts."""
    counts = np.zeros((1, size_x, size_y), dtype=np.int32)
    for symbol in y:
        step = np.zeros((size_x, size_x, size_y), dtype=np.int32)
        step[np.arange(size_x), np.arange(size_x), symbol] = 1
        counts = (counts[:, None] + step[None]).reshape(-1, size_x, size_y)
    side = np.bincount(y, minlength=size_y)
    return xlogy(counts, counts).sum(axis=(1, 2)) - float(xlogy(side, side).sum())


@dataclass
class TrialState:
    """Everything the decoder sees in one trial."""

    x: np.ndarray
    y: np.ndarray
    x_index: int
    members: np.ndarray     # sorted sequence indices sharing the bin of x
    scores: np.ndarray      # metric score of each member

    @property
    def correct_position(self) -> int:
        return int(np.searchsorted(self.members, self.x_index))


class BinningSimulator:
    """Runs binning trials for one SimConfig."""

    def __init__(self, cfg: SimConfig, config: Optional[SimulationConfig] = None):
        self.cfg = cfg
        self.config = config or get_config().simulation
        self.seed = cfg.seed if cfg.seed is not None else self.config.default_seed
        self.tie_policy = cfg.tie_policy or self.config.tie_policy

        src = cfg.source
        self.size_x = src.size_x
        self.size_y = src.size_y
        self.sequences = src.size_x ** cfg.n
        if self.sequences > self.config.max_sequences:
            raise MemoryBudgetExceededError(self.sequences, self.config.max_sequences)

        self.bins = cfg.bins
        self._pair_p = src.p.ravel()
        self._place_values = src.size_x ** np.arange(cfg.n - 1, -1, -1, dtype=np.int64)
        self._positions = list(range(cfg.n)) if cfg.all_positions else [0]
        if cfg.metric.name is MetricName.MISMATCHED:
            self._log_model = cfg.metric.mismatch.tilde_source.log_p
        else:
            self._log_model = src.log_p

    def _stream(self, trial: int, stream: int) -> np.random.Philox:
        return np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=(trial, stream)))

    def draw(self, trial: int) -> tuple[np.ndarray, np.ndarray]:
        """The i.i.d. pair (x, y) of a trial."""
        rng = np.random.Generator(self._stream(trial, SOURCE_STREAM))
        pairs = rng.choice(self._pair_p.size, size=self.cfg.n, p=self._pair_p)
        x, y = np.divmod(pairs, self.size_y)
        return x, y

    def scores(self, y: np.ndarray) -> np.ndarray:
        if self.cfg.metric.name is MetricName.MIN_CONDITIONAL_ENTROPY:
            return mce_scores(self.size_x, self.size_y, y)
        return sequence_scores(self._log_model, y)

    def bin_members(self, trial: int, x_index: int) -> np.ndarray:
        """Sorted indices of all sequences hashed to the bin of ``x_index``."""
        if self.bins == 1:
            return np.arange(self.sequences)
        modulus = np.uint64(self.bins)
        if self.cfg.n <= self.config.materialize_max_n:
            table = self._stream(trial, BIN_STREAM).random_raw(self.sequences) % modulus
            return np.flatnonzero(table == table[x_index])

        chunk = self.config.chunk_size
        stream = self._stream(trial, BIN_STREAM)
        start = 0
        while True:
            block = stream.random_raw(min(chunk, self.sequences - start)) % modulus
            if x_index < start + len(block):
                target = block[x_index - start]
                break
            start += len(block)

        stream = self._stream(trial, BIN_STREAM)
        members = []
        start = 0
        while start < self.sequences:
            block = stream.random_raw(min(chunk, self.sequences - start)) % modulus
            members.append(np.flatnonzero(block == target) + start)
            start += len(block)
        return np.concatenate(members)

    def trial_state(self, trial: int) -> TrialState:
        x, y = self.draw(trial)
        x_index = int(np.dot(x, self._place_values))
        members = self.bin_members(trial, x_index)
        return TrialState(x, y, x_index, members, self.scores(y)[members])

    def symbol_masses(self, state: TrialState, position: int) -> np.ndarray:
        """ln sum over bin members with x'_position = a of exp(beta * score), per a."""
        weights = self.cfg.beta * state.scores
        digits = (state.members // self._place_values[position]) % self.size_x
        return np.array([_logsumexp(weights[digits == a]) for a in range(self.size_x)])

    def run_trial(self, trial: int) -> TrialRecord:
        """Decode one trial and record its errors and partition-function split."""
        state = self.trial_state(trial)
        n = self.cfg.n
        at = state.correct_position
        others = np.delete(state.scores, at)

        half_errors = 0
        if self.cfg.word_map:
            best = state.members[int(np.argmax(state.scores))]
            for i in self._positions:
                decided = (best // self._place_values[i]) % self.size_x
                half_errors += 0 if decided == state.x[i] else 2
            log_zc = state.scores[at] / n
            log_ze = float(others.max()) / n if others.size else -math.inf
        else:
            for i in self._positions:
                half_errors += symbol_error(self.symbol_masses(state, i), int(state.x[i]), self.tie_policy)
            log_zc = self.cfg.beta * state.scores[at] / n
            log_ze = _logsumexp(self.cfg.beta * others) / n

        return TrialRecord(
            trial=trial,
            half_errors=half_errors,
            positions=len(self._positions),
            log_z_correct=float(log_zc),
            log_z_error=float(log_ze),
            correct_dominates=bool(log_zc > log_ze),
            bin_size=len(state.members),
        )

    def aggregate(self, records: list[TrialRecord]) -> SimReport:
        """Order-independent aggregation into a SimReport."""
        records = sorted(records, key=lambda r: r.trial)
        half = sum(r.half_errors for r in records)
        symbols = sum(r.positions for r in records)
        errors = half / 2.0
        low, high = wilson_interval(errors, symbols, self.config.confidence)

        finite = [r.log_z_error for r in records if math.isfinite(r.log_z_error)]
        count = len(records)
        ber = errors / symbols
        return SimReport(
            n=self.cfg.n,
            rate=self.cfg.rate,
            beta=self.cfg.beta,
            bins=self.bins,
            trials=count,
            metric=self.cfg.metric.name.value,
            tie_policy=self.tie_policy,
            ber=ber,
            ber_low=low,
            ber_high=high,
            symbol_errors=errors,
            symbols=symbols,
            log_z_correct=math.fsum(r.log_z_correct for r in records) / count,
            log_z_error=math.fsum(finite) / len(finite) if finite else -math.inf,
            empty_bin_fraction=1.0 - len(finite) / count,
            dominance_fraction=sum(r.correct_dominates for r in records) / count,
            seeds={
                'seed': self.seed,
                'source_stream': f"SeedSequence({self.seed}, spawn_key=(trial, {SOURCE_STREAM}))",
                'bin_stream': f"Philox(SeedSequence({self.seed}, spawn_key=(trial, {BIN_STREAM})))",
                'trials': [records[0].trial, records[-1].trial] if records else [],
            },
            slope_estimate=empirical_slope(ber, symbols, self.cfg.n)[0],
        )


# =============================================================================
# Operations
# =============================================================================

def empirical_slope(ber: float, symbols: int, n: int) -> tuple[float, float]:
    """-ln(BER)/n and its delta-method standard error; (inf, inf) when no error was seen."""
    if ber <= 0:
        return math.inf, math.inf
    slope = -math.log(ber) / n
    stderr = math.sqrt(ber * (1.0 - ber) / symbols) / (ber * n)
    return slope, stderr


def run_binning_trial(cfg: SimConfig, trial: int, config: Optional[SimulationConfig] = None) -> TrialRecord:
    """One trial of ``cfg``; the trial index selects the random streams."""
    return BinningSimulator(cfg, config).run_trial(trial)


def estimate_ber(
    cfg: SimConfig,
    runner: Optional[TrialRunner] = None,
    config: Optional[SimulationConfig] = None,
    on_progress: Optional[Callable[[int, int], None]] = None,
) -> SimReport:
    """Monte Carlo BER with a Wilson interval; deterministic given the seed."""
    simulator = BinningSimulator(cfg, config)
    runner = runner or TrialRunner()
    with LogContext(logger, n=cfg.n, rate=cfg.rate, beta=cfg.beta):
        logger.debug(f"Simulating {cfg.trials} trials with M={simulator.bins} bins")
        result = runner.run(simulator.run_trial, cfg.trials, on_progress=on_progress)
    if result.interrupted:
        raise KeyboardInterrupt
    return simulator.aggregate(result.records)


def ber_sweep(
    cfg: SimConfig,
    ns: Iterable[int],
    runner: Optional[TrialRunner] = None,
    config: Optional[SimulationConfig] = None,
    on_progress: Optional[Callable[[int, int], None]] = None,
) -> list[SweepPoint]:
    """BER and empirical slope -ln(BER)/n for each blocklength."""
    points = []
    for n in ns:
        report = estimate_ber(replace(cfg, n=int(n)), runner, config, on_progress)
        slope, stderr = empirical_slope(report.ber, report.symbols, report.n)
        points.append(SweepPoint(report.n, report.ber, report.ber_low, report.ber_high, slope, stderr))
        logger.info(f"n={report.n}: BER={report.ber:.4g} slope={slope:.4g}")
    return points


def dominance_map(
    cfg: SimConfig,
    rates: Iterable[float],
    temperatures: Iterable[float],
    runner: Optional[TrialRunner] = None,
    config: Optional[SimulationConfig] = None,
) -> list[DominanceCell]:
    """Fraction of trials with Z_c > Z_e on an (R, T) grid, rate-major."""
    temperatures = list(temperatures)
    cells = []
    for r in rates:
        for t in temperatures:
            report = estimate_ber(replace(cfg, rate=float(r), beta=1.0 / float(t)), runner, config)
            cells.append(DominanceCell(float(r), float(t), report.dominance_fraction, report.trials))
    return cells


def exact_ber(
    src: JointSource,
    n: int,
    bins: int,
    beta: float = 1.0,
    tie_policy: str = 'half',
    position: int = 0,
    budget: int = 2 ** 22,
) -> float:
    """Expected BER at ``position`` by total enumeration over (x, y) and all binnings."""
    sequences = src.size_x ** n
    work = (bins ** sequences) * (src.size_x * src.size_y) ** n
    if work > budget:
        raise MemoryBudgetExceededError(work, budget)

    place = src.size_x ** np.arange(n - 1, -1, -1)
    digits = (np.arange(sequences)[:, None] // place[None, :]) % src.size_x
    binnings = np.array(list(itertools.product(range(bins), repeat=sequences)))
    total = 0.0
    for y in itertools.product(range(src.size_y), repeat=n):
        y = np.array(y)
        weights = beta * sequence_scores(src.log_p, y)
        for x_index in range(sequences):
            prob = float(np.prod(src.p[digits[x_index], y]))
            if prob == 0:
                continue
            errors = 0
            for binning in binnings:
                members = binning == binning[x_index]
                masses = np.array([
                    _logsumexp(weights[members & (digits[:, position] == a)])
                    for a in range(src.size_x)
                ])
                errors += symbol_error(masses, int(digits[x_index, position]), tie_policy)
            total += prob * errors / (2.0 * len(binnings))
    return total
