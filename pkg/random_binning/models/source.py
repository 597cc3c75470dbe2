"""Source and type data models.

Matrices are indexed ``[x, y]`` (row = x symbol, column = y symbol) and
stored as read-only float arrays.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from ..exceptions import InvalidDistributionError

NORMALIZATION_TOL = 1e-12
MARGINAL_TOL = 1e-10


def _as_matrix(values, name: str) -> np.ndarray:
    """Copy ``values`` into a float matrix and check it is a valid pmf shape."""
    try:
        matrix = np.array(values, dtype=float)
    except (TypeError, ValueError) as e:
        raise InvalidDistributionError(f"{name} is not a numeric matrix: {e}") from e
    if matrix.ndim != 2 or matrix.shape[0] == 0 or matrix.shape[1] == 0:
        raise InvalidDistributionError(f"{name} must be a non-empty 2-D matrix, got shape {matrix.shape}")
    bad = np.argwhere(~np.isfinite(matrix))
    if bad.size:
        row, col = (int(v) for v in bad[0])
        raise InvalidDistributionError(f"{name}[{row}][{col}] is not finite", row=row, column=col)
    bad = np.argwhere(matrix < 0)
    if bad.size:
        row, col = (int(v) for v in bad[0])
        raise InvalidDistributionError(
            f"{name}[{row}][{col}] = {matrix[row, col]} is negative", row=row, column=col
        )
    return matrix


def _check_normalized(matrix: np.ndarray, name: str) -> None:
    total = float(matrix.sum())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise InvalidDistributionError(f"{name} sums to {total!r}, expected 1")


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _alphabet(symbols: Optional[Sequence], size: int, name: str) -> tuple:
    if symbols is None:
        return tuple(range(size))
    symbols = tuple(symbols)
    if len(symbols) != size:
        raise InvalidDistributionError(
            f"{name} has {len(symbols)} symbols but the matrix has {size}"
        )
    if len(set(symbols)) != len(symbols):
        raise InvalidDistributionError(f"{name} contains duplicate symbols")
    return symbols


@dataclass(frozen=True, eq=False)
class JointSource:
    """A finite-alphabet joint distribution P(x, y).

    Immutable after construction; marginals and logarithms are cached on
    first access.
    """

    p: np.ndarray
    alphabet_x: Optional[tuple] = None
    alphabet_y: Optional[tuple] = None

    def __post_init__(self):
        p = _as_matrix(self.p, 'p')
        _check_normalized(p, 'p')
        object.__setattr__(self, 'p', _freeze(p))
        object.__setattr__(self, 'alphabet_x', _alphabet(self.alphabet_x, p.shape[0], 'alphabet_x'))
        object.__setattr__(self, 'alphabet_y', _alphabet(self.alphabet_y, p.shape[1], 'alphabet_y'))

    @property
    def size_x(self) -> int:
        return self.p.shape[0]

    @property
    def size_y(self) -> int:
        return self.p.shape[1]

    @cached_property
    def p_x(self) -> np.ndarray:
        """Marginal P(x)."""
        return _freeze(self.p.sum(axis=1))

    @cached_property
    def p_y(self) -> np.ndarray:
        """Marginal P(y)."""
        return _freeze(self.p.sum(axis=0))

    @cached_property
    def support(self) -> np.ndarray:
        """Boolean mask of P(x, y) > 0."""
        return _freeze(self.p > 0)

    @cached_property
    def log_p(self) -> np.ndarray:
        """ln P(x, y) with -inf outside the support."""
        with np.errstate(divide='ignore'):
            return _freeze(np.log(self.p))

    @cached_property
    def p_x_given_y(self) -> np.ndarray:
        """P(x|y); columns with P(y) = 0 are uniform."""
        cond = np.full(self.p.shape, 1.0 / self.size_x)
        positive = self.p_y > 0
        cond[:, positive] = self.p[:, positive] / self.p_y[positive]
        return _freeze(cond)

    @classmethod
    def dsbs(cls, crossover: float) -> 'JointSource':
        """Doubly symmetric binary source: X uniform, Y = X through a BSC."""
        if not 0.0 <= crossover <= 1.0:
            raise InvalidDistributionError(f"crossover must lie in [0, 1], got {crossover}")
        q = 1.0 - crossover
        return cls(np.array([[q / 2, crossover / 2], [crossover / 2, q / 2]]))

    @classmethod
    def from_conditional(cls, p_x: Sequence[float], channel) -> 'JointSource':
        """Build P(x, y) = P(x) W(y|x) from a prior and a row-stochastic channel."""
        p_x = np.asarray(p_x, dtype=float)
        channel = _as_matrix(channel, 'channel')
        if channel.shape[0] != p_x.shape[0]:
            raise InvalidDistributionError("channel rows must match the prior length")
        return cls(p_x[:, None] * channel)

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            'alphabet_x': list(self.alphabet_x),
            'alphabet_y': list(self.alphabet_y),
            'p': self.p.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'JointSource':
        """Create from dictionary."""
        return cls(
            p=data['p'],
            alphabet_x=data.get('alphabet_x'),
            alphabet_y=data.get('alphabet_y'),
        )


@dataclass(frozen=True, eq=False)
class MismatchModel:
    """A decoder model P̃(x, y) on the alphabets of ``source``.

    P̃(y) must equal P(y); only the conditional P̃(x|y) matters to the decoder.
    """

    source: JointSource
    p_tilde: np.ndarray

    def __post_init__(self):
        p_tilde = _as_matrix(self.p_tilde, 'p_tilde')
        if p_tilde.shape != self.source.p.shape:
            raise InvalidDistributionError(
                f"p_tilde shape {p_tilde.shape} does not match p shape {self.source.p.shape}"
            )
        _check_normalized(p_tilde, 'p_tilde')
        gap = np.abs(p_tilde.sum(axis=0) - self.source.p_y)
        if gap.max() > MARGINAL_TOL:
            column = int(np.argmax(gap))
            raise InvalidDistributionError(
                f"p_tilde column y={column} has marginal {p_tilde[:, column].sum()!r}, "
                f"expected P(y)={self.source.p_y[column]!r}",
                column=column,
            )
        object.__setattr__(self, 'p_tilde', _freeze(p_tilde))

    @cached_property
    def tilde_source(self) -> JointSource:
        """P̃ as a JointSource, for spectra and energies."""
        return JointSource(self.p_tilde, self.source.alphabet_x, self.source.alphabet_y)

    @classmethod
    def from_conditional(cls, source: JointSource, p_tilde_x_given_y) -> 'MismatchModel':
        """Build P̃(x, y) = P(y) P̃(x|y) from a column-stochastic matrix."""
        cond = _as_matrix(p_tilde_x_given_y, 'p_tilde_x_given_y')
        return cls(source, cond * source.p_y[None, :])


@dataclass(frozen=True, eq=False)
class ConditionalType:
    """A conditional distribution Q(x|y); column ``y`` is a pmf over x."""

    q: np.ndarray

    def __post_init__(self):
        q = _as_matrix(self.q, 'q')
        sums = q.sum(axis=0)
        bad = np.flatnonzero(np.abs(sums - 1.0) > NORMALIZATION_TOL)
        if bad.size:
            column = int(bad[0])
            raise InvalidDistributionError(
                f"column y={column} of Q(x|y) sums to {sums[column]!r}", column=column
            )
        object.__setattr__(self, 'q', _freeze(q))

    def joint(self, weights: np.ndarray) -> 'JointType':
        """Q(x, y) = weights(y) Q(x|y)."""
        return JointType(self.q * np.asarray(weights, dtype=float)[None, :])

    def to_dict(self) -> dict:
        return {'q': self.q.tolist()}


@dataclass(frozen=True, eq=False)
class JointType:
    """A joint distribution Q(x, y) on X × Y."""

    q: np.ndarray
    marginal_y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        q = _as_matrix(self.q, 'q')
        _check_normalized(q, 'q')
        object.__setattr__(self, 'q', _freeze(q))
        object.__setattr__(self, 'marginal_y', _freeze(q.sum(axis=0)))

    @property
    def marginal_x(self) -> np.ndarray:
        return self.q.sum(axis=1)

    def conditional(self) -> ConditionalType:
        """Q(x|y); columns with Q(y) = 0 are uniform."""
        cond = np.full(self.q.shape, 1.0 / self.q.shape[0])
        positive = self.marginal_y > 0
        cond[:, positive] = self.q[:, positive] / self.marginal_y[positive]
        return ConditionalType(cond)

    def to_dict(self) -> dict:
        return {'q': self.q.tolist()}
