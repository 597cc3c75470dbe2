"""Custom exceptions for the random binning toolkit.

Exception Hierarchy:
    BinningError (base)
    ├── SourceModelError
    │   ├── InvalidDistributionError
    │   ├── AbsoluteContinuityError
    │   ├── DegenerateRowError
    │   └── InfiniteEnergyError
    ├── SpectrumError
    │   ├── OutOfRangeError
    │   └── DegenerateSpectrumError
    ├── PhaseDiagramError
    │   └── BetaOutOfRangeError
    ├── SimulationError
    │   ├── MemoryBudgetExceededError
    │   └── EmptyDilutionError
    ├── ValidationError
    └── ConfigurationError
"""

from typing import Optional


class BinningError(Exception):
    """Base exception for all random binning errors."""

    def __init__(self, message: str, details: Optional[dict] = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def __str__(self) -> str:
        if self.details:
            return f"{self.message} | Details: {self.details}"
        return self.message


# =============================================================================
# Source Model Errors
# =============================================================================

class SourceModelError(BinningError):
    """Base class for errors raised while building or evaluating sources."""
    pass


class InvalidDistributionError(SourceModelError):
    """Raised when a probability matrix is malformed.

    Attributes:
        row: Offending row (x index), if the problem is localized
        column: Offending column (y index), if the problem is localized
    """

    def __init__(self, message: str, row: Optional[int] = None,
                 column: Optional[int] = None):
        self.row = row
        self.column = column
        details = {}
        if row is not None:
            details['row'] = row
        if column is not None:
            details['column'] = column
        super().__init__(message, details=details)


class AbsoluteContinuityError(SourceModelError):
    """Raised when a type puts mass where the model has none."""

    def __init__(self, row: int, column: int):
        self.row = row
        self.column = column
        super().__init__(
            f"Type has mass at (x={row}, y={column}) where the model is zero",
            details={'row': row, 'column': column}
        )


class DegenerateRowError(SourceModelError):
    """Raised when a side symbol with positive probability has no support."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(
            f"Column y={column} has positive probability but no supported x",
            details={'column': column}
        )


class InfiniteEnergyError(SourceModelError):
    """Raised when a type touches a zero of the evaluation model."""

    def __init__(self, row: int, column: int):
        self.row = row
        self.column = column
        super().__init__(
            f"Infinite energy: type touches a zero of the model at (x={row}, y={column})",
            details={'row': row, 'column': column}
        )


# =============================================================================
# Spectrum Errors
# =============================================================================

class SpectrumError(BinningError):
    """Base class for entropy-spectrum errors."""
    pass


class OutOfRangeError(SpectrumError):
    """Raised when an argument lies outside the valid range of a curve.

    Attributes:
        quantity: Name of the argument (e.g. 'epsilon', 'rate')
        value: The rejected value
        lower: Lower end of the valid range
        upper: Upper end of the valid range
    """

    def __init__(self, quantity: str, value: float,
                 lower: Optional[float] = None, upper: Optional[float] = None):
        self.quantity = quantity
        self.value = value
        self.lower = lower
        self.upper = upper
        message = f"{quantity}={value!r} is out of range"
        if lower is not None or upper is not None:
            message += f" [{lower}, {upper}]"
        super().__init__(
            message,
            details={'quantity': quantity, 'value': value, 'lower': lower, 'upper': upper}
        )


class DegenerateSpectrumError(SpectrumError):
    """Raised when the energy range collapses to a single point."""

    def __init__(self, kind: str, energy: float):
        self.kind = kind
        self.energy = energy
        super().__init__(
            f"Spectrum '{kind}' is degenerate (all states at energy {energy:.6g})",
            details={'kind': kind, 'energy': energy}
        )


# =============================================================================
# Phase Diagram Errors
# =============================================================================

class PhaseDiagramError(BinningError):
    """Base class for phase-diagram errors."""
    pass


class BetaOutOfRangeError(PhaseDiagramError):
    """Raised when a two-sided dominance query asks for beta > 1."""

    def __init__(self, beta: float, limit: float = 1.0):
        self.beta = beta
        super().__init__(
            f"Two-sided dominance is only defined for beta <= {limit} (got {beta})",
            details={'beta': beta, 'limit': limit}
        )


# =============================================================================
# Simulation Errors
# =============================================================================

class SimulationError(BinningError):
    """Base class for simulator errors."""
    pass


class MemoryBudgetExceededError(SimulationError):
    """Raised when |X|^n exceeds the enumeration budget."""

    def __init__(self, sequences: int, budget: int):
        self.sequences = sequences
        self.budget = budget
        super().__init__(
            f"Enumerating {sequences} sequences exceeds the budget of {budget}",
            details={'sequences': sequences, 'budget': budget}
        )


class EmptyDilutionError(SimulationError):
    """Raised when every dilution realization removed all microstates."""

    def __init__(self, n: int, rate: float, realizations: int):
        self.n = n
        self.rate = rate
        super().__init__(
            f"No microstate survived dilution in any of {realizations} realizations "
            f"(n={n}, r={rate})",
            details={'n': n, 'rate': rate, 'realizations': realizations}
        )


# =============================================================================
# Validation Errors
# =============================================================================

class ValidationError(BinningError):
    """Raised when user input fails validation."""

    def __init__(self, message: str, field: Optional[str] = None,
                 value: Optional[str] = None):
        self.field = field
        self.value = value
        details = {}
        if field:
            details['field'] = field
        if value is not None:
            details['value'] = str(value)[:100]  # Truncate long values
        super().__init__(message, details=details)


# =============================================================================
# Configuration Errors
# =============================================================================

class ConfigurationError(BinningError):
    """Raised when there's a configuration problem."""

    def __init__(self, message: str, config_key: Optional[str] = None):
        self.config_key = config_key
        super().__init__(message, details={'config_key': config_key})
