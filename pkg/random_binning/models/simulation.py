"""Simulation configuration and report models."""

import math
from dataclasses import dataclass, field
from typing import Optional

from ..exceptions import ValidationError
from .exponent import MetricKind
from .source import JointSource

# Bin counts above this are indistinguishable from "every sequence alone"
MAX_BINS = 2 ** 62


@dataclass
class SimConfig:
    """One simulator configuration (source, blocklength, rate, temperature)."""

    source: JointSource
    n: int
    rate: float
    beta: float = 1.0                 # math.inf selects word-MAP decoding
    trials: int = 1000
    seed: Optional[int] = None        # None -> simulation.default_seed
    metric: MetricKind = field(default_factory=MetricKind.matched)
    all_positions: bool = False       # average errors over every position
    tie_policy: Optional[str] = None  # None -> simulation.tie_policy

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"n must be at least 1, got {self.n}", field='n', value=self.n)
        if not self.rate >= 0:
            raise ValidationError(f"rate must be non-negative, got {self.rate}", field='rate', value=self.rate)
        if not self.beta > 0:
            raise ValidationError(f"beta must be positive, got {self.beta}", field='beta', value=self.beta)
        if self.trials < 1:
            raise ValidationError(f"trials must be at least 1, got {self.trials}",
                                  field='trials', value=self.trials)
        if self.tie_policy not in (None, 'half', 'pessimistic'):
            raise ValidationError(f"unknown tie policy {self.tie_policy!r}",
                                  field='tie_policy', value=self.tie_policy)

    @property
    def bins(self) -> int:
        """M = round(e^{nR}), at least 2 when R > 0 and 1 when R = 0."""
        if self.rate == 0:
            return 1
        exponent = self.n * self.rate
        if exponent >= math.log(MAX_BINS):
            return MAX_BINS
        return max(2, int(round(math.exp(exponent))))

    @property
    def word_map(self) -> bool:
        return math.isinf(self.beta)


@dataclass
class TrialRecord:
    """Outcome of one binning trial."""

    trial: int
    half_errors: int          # symbol errors in half units (ties count 1)
    positions: int
    log_z_correct: float      # (1/n) ln Z_c
    log_z_error: float        # (1/n) ln Z_e, -inf when x is alone in its bin
    correct_dominates: bool
    bin_size: int


@dataclass
class SimReport:
    """Aggregate of a simulation run."""

    n: int
    rate: float
    beta: float
    bins: int
    trials: int
    metric: str
    tie_policy: str
    ber: float
    ber_low: float
    ber_high: float
    symbol_errors: float
    symbols: int
    log_z_correct: float
    log_z_error: float
    empty_bin_fraction: float
    dominance_fraction: float
    seeds: dict = field(default_factory=dict)
    slope_estimate: Optional[float] = None   # -ln(BER)/n, inf when no error was seen

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            'n': self.n,
            'rate': self.rate,
            'beta': self.beta,
            'bins': self.bins,
            'trials': self.trials,
            'metric': self.metric,
            'tie_policy': self.tie_policy,
            'ber': self.ber,
            'ber_low': self.ber_low,
            'ber_high': self.ber_high,
            'symbol_errors': self.symbol_errors,
            'symbols': self.symbols,
            'log_z_correct': self.log_z_correct,
            'log_z_error': self.log_z_error,
            'empty_bin_fraction': self.empty_bin_fraction,
            'dominance_fraction': self.dominance_fraction,
            'seeds': self.seeds,
            'slope_estimate': self.slope_estimate,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'SimReport':
        """Create from dictionary."""
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})


@dataclass(frozen=True)
class SweepPoint:
    """One blocklength of an N-sweep."""

    n: int
    ber: float
    ber_low: float
    ber_high: float
    slope: float            # -ln(BER) / n
    slope_stderr: float

    def to_row(self) -> dict:
        return {
            'n': self.n,
            'ber': self.ber,
            'ber_low': self.ber_low,
            'ber_high': self.ber_high,
            'slope': self.slope,
            'slope_stderr': self.slope_stderr,
        }


@dataclass(frozen=True)
class DominanceCell:
    """Fraction of trials where the correct term dominates, at one (R, T)."""

    rate: float
    temperature: float
    fraction: float
    trials: int

    def to_row(self) -> dict:
        return {'R': self.rate, 'T': self.temperature, 'dominance': self.fraction, 'trials': self.trials}


@dataclass(frozen=True)
class DilutionCell:
    """Measured and analytic diluted free energy at one beta."""

    beta: float
    measured: float
    analytic: float

    @property
    def deviation(self) -> float:
        return self.measured - self.analytic

    def to_dict(self) -> dict:
        return {'beta': self.beta, 'measured': self.measured, 'analytic': self.analytic}


@dataclass
class DilutionReport:
    """Outcome of a random dilution experiment."""

    n: int
    rate: float
    seed: int
    realizations: int
    empty_realizations: int
    keep_correct: bool
    cells: list[DilutionCell] = field(default_factory=list)
    beta_c_estimate: Optional[float] = None
    beta_c_analytic: Optional[float] = None
    ground_energy_estimate: Optional[float] = None

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            'n': self.n,
            'rate': self.rate,
            'seed': self.seed,
            'realizations': self.realizations,
            'empty_realizations': self.empty_realizations,
            'keep_correct': self.keep_correct,
            'cells': [c.to_dict() for c in self.cells],
            'beta_c_estimate': self.beta_c_estimate,
            'beta_c_analytic': self.beta_c_analytic,
            'ground_energy_estimate': self.ground_energy_estimate,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'DilutionReport':
        """Create from dictionary."""
        return cls(
            n=data['n'],
            rate=data['rate'],
            seed=data['seed'],
            realizations=data['realizations'],
            empty_realizations=data['empty_realizations'],
            keep_correct=data['keep_correct'],
            cells=[DilutionCell(**c) for c in data.get('cells', [])],
            beta_c_estimate=data.get('beta_c_estimate'),
            beta_c_analytic=data.get('beta_c_analytic'),
            ground_energy_estimate=data.get('ground_energy_estimate'),
        )
