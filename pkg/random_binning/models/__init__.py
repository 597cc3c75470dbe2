# Models module - data classes for sources, spectra, phases, exponents and simulations
from .source import JointSource, MismatchModel, ConditionalType, JointType
from .spectrum import SpectrumKind, SpectrumPoint
from .phase import (
    Phase, DecoderKind, Boundary, DominantTerm, PhaseLabel, BoundarySet, BoundaryPoint,
    TwoSidedQuery, TwoSidedResult,
)
from .exponent import MetricName, MetricKind, ExponentPhase, InnerExponent, ExponentResult
from .simulation import (
    SimConfig, TrialRecord, SimReport, SweepPoint, DominanceCell, DilutionCell, DilutionReport,
)

__all__ = [
    'JointSource',
    'MismatchModel',
    'ConditionalType',
    'JointType',
    'SpectrumKind',
    'SpectrumPoint',
    'Phase',
    'DecoderKind',
    'Boundary',
    'DominantTerm',
    'PhaseLabel',
    'BoundarySet',
    'BoundaryPoint',
    'TwoSidedQuery',
    'TwoSidedResult',
    'MetricName',
    'MetricKind',
    'ExponentPhase',
    'InnerExponent',
    'ExponentResult',
    'SimConfig',
    'TrialRecord',
    'SimReport',
    'SweepPoint',
    'DominanceCell',
    'DilutionCell',
    'DilutionReport',
]
