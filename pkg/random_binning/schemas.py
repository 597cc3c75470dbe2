"""Pydantic schemas for source files and JSON reports.

Non-finite floats are written as the strings "inf", "-inf" and "nan" so every
report stays valid JSON.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Any, Optional, Union

from pydantic import BaseModel, BeforeValidator, Field, PlainSerializer, model_validator
from pydantic import ValidationError as PydanticValidationError

from .core.spectrum import CLOSED_FORM_FAMILIES, ClosedFormSpectrum
from .exceptions import SourceModelError, ValidationError
from .logging_config import get_logger
from .models.phase import Boundary, DecoderKind, DominantTerm, Phase, PhaseLabel, TwoSidedResult
from .models.simulation import DilutionReport, SimReport
from .models.source import JointSource, MismatchModel

logger = get_logger('schemas')


def _parse_float(value: Any) -> Any:
    if isinstance(value, str):
        return float(value)
    return value


def _dump_float(value: float) -> Union[float, str]:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


ExtendedFloat = Annotated[
    float,
    BeforeValidator(_parse_float),
    PlainSerializer(_dump_float, return_type=Union[float, str], when_used='json'),
]
Symbol = Union[int, str]


# =============================================================================
# Source files
# =============================================================================

class SourceFileSchema(BaseModel):
    """A source file: a joint pmf (optionally with a decoder model) or a closed-form family."""
    alphabet_x: Optional[list[Symbol]] = Field(default=None, description="Symbols of X")
    alphabet_y: Optional[list[Symbol]] = Field(default=None, description="Symbols of Y")
    p: Optional[list[list[float]]] = Field(default=None, description="P(x, y), rows indexed by x")
    p_tilde: Optional[list[list[float]]] = Field(
        default=None, description="Decoder model P~(x, y) for mismatched decoding"
    )
    closed_form: Optional[str] = Field(default=None, description="Closed-form family name")
    kappa: Optional[float] = Field(default=None, gt=0)
    a: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode='after')
    def _one_kind(self) -> 'SourceFileSchema':
        if (self.p is None) == (self.closed_form is None):
            raise ValueError("exactly one of 'p' and 'closed_form' must be given")
        if self.p_tilde is not None and self.p is None:
            raise ValueError("'p_tilde' requires 'p'")
        if self.closed_form is not None:
            if self.closed_form not in CLOSED_FORM_FAMILIES:
                raise ValueError(f"unknown closed form {self.closed_form!r}, "
                                 f"expected one of {sorted(CLOSED_FORM_FAMILIES)}")
            if self.kappa is None or self.a is None:
                raise ValueError("closed forms need 'kappa' and 'a'")
        return self


@dataclass
class LoadedSource:
    """What a source file describes."""
    source: Optional[JointSource] = None
    mismatch: Optional[MismatchModel] = None
    closed_form: Optional[ClosedFormSpectrum] = None

    @property
    def is_closed_form(self) -> bool:
        return self.closed_form is not None

    def require_source(self, purpose: str) -> JointSource:
        if self.source is None:
            raise ValidationError(f"{purpose} needs a finite source file, got a closed form",
                                  field='source')
        return self.source


def load_source(path: Union[str, Path]) -> LoadedSource:
    """Read and validate a JSON source file.

    Raises:
        ValidationError: if the file is missing, not JSON, fails the schema,
            or holds an invalid pmf
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"source file not found: {path}", field='source', value=str(path))
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
        schema = SourceFileSchema.model_validate(data)
    except json.JSONDecodeError as e:
        raise ValidationError(f"source file {path} is not valid JSON: {e}", field='source') from e
    except PydanticValidationError as e:
        raise ValidationError(f"source file {path} is invalid: {e}", field='source') from e

    if schema.closed_form is not None:
        family = CLOSED_FORM_FAMILIES[schema.closed_form]
        logger.debug(f"Loaded closed form {schema.closed_form} from {path}")
        return LoadedSource(closed_form=family(schema.kappa, schema.a))

    try:
        source = JointSource(schema.p, schema.alphabet_x, schema.alphabet_y)
        mismatch = MismatchModel(source, schema.p_tilde) if schema.p_tilde is not None else None
    except SourceModelError as e:
        raise ValidationError(f"source file {path}: {e}", field='source') from e
    logger.debug(f"Loaded {source.size_x}x{source.size_y} source from {path}")
    return LoadedSource(source=source, mismatch=mismatch)


# =============================================================================
# Reports
# =============================================================================

class SimReportSchema(BaseModel):
    """JSON form of a SimReport."""
    n: int = Field(ge=1)
    rate: float = Field(ge=0)
    beta: ExtendedFloat
    bins: int = Field(ge=1)
    trials: int = Field(ge=1)
    metric: str
    tie_policy: str
    ber: float = Field(ge=0, le=1)
    ber_low: float = Field(ge=0, le=1)
    ber_high: float = Field(ge=0, le=1)
    symbol_errors: float = Field(ge=0)
    symbols: int = Field(ge=1)
    log_z_correct: ExtendedFloat
    log_z_error: ExtendedFloat
    empty_bin_fraction: float = Field(ge=0, le=1)
    dominance_fraction: float = Field(ge=0, le=1)
    seeds: dict[str, Any]
    slope_estimate: Optional[ExtendedFloat] = None

    @classmethod
    def from_report(cls, report: SimReport) -> 'SimReportSchema':
        return cls.model_validate(report.to_dict())

    def to_report(self) -> SimReport:
        return SimReport.from_dict(self.model_dump())


class DilutionCellSchema(BaseModel):
    beta: float = Field(gt=0)
    measured: ExtendedFloat
    analytic: ExtendedFloat


class DilutionReportSchema(BaseModel):
    """JSON form of a DilutionReport."""
    n: int = Field(ge=1)
    rate: float = Field(ge=0)
    seed: int
    realizations: int = Field(ge=1)
    empty_realizations: int = Field(ge=0)
    keep_correct: bool
    cells: list[DilutionCellSchema]
    beta_c_estimate: Optional[ExtendedFloat] = None
    beta_c_analytic: Optional[ExtendedFloat] = None
    ground_energy_estimate: Optional[ExtendedFloat] = None

    @classmethod
    def from_report(cls, report: DilutionReport) -> 'DilutionReportSchema':
        return cls.model_validate(report.to_dict())

    def to_report(self) -> DilutionReport:
        return DilutionReport.from_dict(self.model_dump())


class PhaseLabelSchema(BaseModel):
    """JSON form of a PhaseLabel."""
    phase: Phase
    rate: float = Field(ge=0)
    temperature: ExtendedFloat
    decoder: DecoderKind = DecoderKind.MATCHED
    boundaries: list[Boundary] = Field(default_factory=list)

    @classmethod
    def from_label(cls, label: PhaseLabel) -> 'PhaseLabelSchema':
        return cls.model_validate(label.to_dict())

    def to_label(self) -> PhaseLabel:
        return PhaseLabel.from_dict(self.model_dump())


class TwoSidedSchema(BaseModel):
    """JSON form of a two-sided query result."""
    R_X: float = Field(ge=0)
    R_Y: float = Field(ge=0)
    beta: float = Field(gt=0)
    dominant: DominantTerm
    reliable: bool
    growth_rates: dict[str, ExtendedFloat] = Field(default_factory=dict)

    @classmethod
    def from_result(cls, result: TwoSidedResult) -> 'TwoSidedSchema':
        return cls.model_validate({**result.to_row(), 'growth_rates': result.growth_rates})
