"""Phase-diagram data models."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional


class Phase(str, Enum):
    """Thermodynamic phase of the posterior partition function."""
    FERROMAGNETIC = "ferromagnetic"   # correct term dominates
    GLASSY = "glassy"                 # frozen on subexponentially many ground states
    PARAMAGNETIC = "paramagnetic"     # exponentially many typical competitors


class DecoderKind(str, Enum):
    """Decoding metric whose phase diagram is drawn."""
    MATCHED = "matched"
    UNIVERSAL = "universal"
    MISMATCHED = "mismatched"


class Boundary(str, Enum):
    """Phase boundaries, also used as curve ids in boundary CSVs."""
    FERRO_GLASSY = "ferro_glassy"
    FERRO_PARA = "ferro_para"
    PARA_GLASSY = "para_glassy"


class DominantTerm(str, Enum):
    """Two-sided partition-function terms (c = correct, e = erroneous)."""
    CC = "cc"
    EC = "ec"
    CE = "ce"
    EE = "ee"


@dataclass
class PhaseLabel:
    """Classification of a point (R, T)."""

    phase: Phase
    rate: float
    temperature: float
    decoder: DecoderKind = DecoderKind.MATCHED
    boundaries: list[Boundary] = field(default_factory=list)  # within tolerance

    @property
    def on_boundary(self) -> bool:
        return bool(self.boundaries)

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            'phase': self.phase.value,
            'rate': self.rate,
            'temperature': self.temperature,
            'decoder': self.decoder.value,
            'boundaries': [b.value for b in self.boundaries],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'PhaseLabel':
        """Create from dictionary."""
        return cls(
            phase=Phase(data['phase']),
            rate=data['rate'],
            temperature=data['temperature'],
            decoder=DecoderKind(data.get('decoder', 'matched')),
            boundaries=[Boundary(b) for b in data.get('boundaries', [])],
        )


@dataclass
class BoundarySet:
    """The three phase boundaries of one decoder.

    ``ferro_para_curve`` maps beta to the rate on the ferro-para line and
    ``para_glassy_curve`` maps a rate to the critical inverse temperature.
    """

    decoder: DecoderKind
    ferro_glassy_rate: float
    ferro_para_curve: Callable[[float], float] = field(repr=False)
    para_glassy_curve: Optional[Callable[[float], float]] = field(default=None, repr=False)
    triple_temperature: float = 1.0

    @property
    def triple_point(self) -> tuple[float, float]:
        """(R, T) where the three curves meet."""
        return self.ferro_glassy_rate, self.triple_temperature


@dataclass(frozen=True)
class BoundaryPoint:
    """One vertex of a boundary polyline."""

    curve_id: Boundary
    rate: float
    temperature: float

    def to_row(self) -> dict:
        return {'curve_id': self.curve_id.value, 'R': self.rate, 'T': self.temperature}


@dataclass(frozen=True)
class TwoSidedQuery:
    """Rates of both encoders and the decoder's inverse temperature."""

    r_x: float
    r_y: float
    beta: float = 1.0

    def __post_init__(self):
        if self.r_x < 0 or self.r_y < 0:
            raise ValueError(f"rates must be non-negative, got ({self.r_x}, {self.r_y})")


@dataclass
class TwoSidedResult:
    """Dominant term and reliability verdict for a TwoSidedQuery."""

    query: TwoSidedQuery
    dominant: DominantTerm
    reliable: bool
    growth_rates: dict[str, float] = field(default_factory=dict)

    def to_row(self) -> dict:
        return {
            'R_X': self.query.r_x,
            'R_Y': self.query.r_y,
            'beta': self.query.beta,
            'dominant': self.dominant.value,
            'reliable': self.reliable,
        }
