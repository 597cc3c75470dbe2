"""Error-exponent data models."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .source import ConditionalType, JointType, MismatchModel


class MetricName(str, Enum):
    """Decoding metrics that can be plugged into the exponent."""
    MATCHED = "matched"
    MISMATCHED = "mismatched"
    MIN_CONDITIONAL_ENTROPY = "mce"


class ExponentPhase(str, Enum):
    """Regions of the (R, beta) plane by exponent behaviour."""
    ZERO = "zero"
    FERRO_BETA_GE_1 = "ferro_beta_ge_1"  # plateau, equal to the word exponent
    FERRO_BETA_LT_1 = "ferro_beta_lt_1"  # between Gamma^{-1}(R) and 1
    POSITIVE = "positive"                # min conditional entropy metric


@dataclass(frozen=True)
class MetricKind:
    """A decoding metric; the mismatched one carries its model."""

    name: MetricName = MetricName.MATCHED
    mismatch: Optional[MismatchModel] = None

    def __post_init__(self):
        object.__setattr__(self, 'name', MetricName(self.name))
        if self.name is MetricName.MISMATCHED and self.mismatch is None:
            raise ValueError("mismatched metric requires a MismatchModel")

    @classmethod
    def matched(cls) -> 'MetricKind':
        return cls(MetricName.MATCHED)

    @classmethod
    def mismatched(cls, mismatch: MismatchModel) -> 'MetricKind':
        return cls(MetricName.MISMATCHED, mismatch)

    @classmethod
    def min_conditional_entropy(cls) -> 'MetricKind':
        return cls(MetricName.MIN_CONDITIONAL_ENTROPY)


@dataclass
class InnerExponent:
    """E_1 at threshold ``threshold`` and the zero-region edge r0."""

    threshold: float
    value: float
    r0: float
    q_xprime: Optional[ConditionalType] = None

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.value)


@dataclass
class ExponentResult:
    """E(R, beta) with its minimizers and phase."""

    rate: float
    beta: float
    value: float
    phase: ExponentPhase
    minimizing_q_xy: Optional[JointType] = None
    minimizing_q_xprime: Optional[ConditionalType] = None
    metric: MetricName = MetricName.MATCHED

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.value)

    def to_row(self) -> dict:
        return {
            'R': self.rate,
            'beta': self.beta,
            'E': self.value,
            'phase': self.phase.value,
        }
