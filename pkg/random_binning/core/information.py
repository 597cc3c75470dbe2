"""Information measures of joint sources and the tilted conditional family.

All quantities are in nats. Entropies use the 0 ln 0 = 0 convention through
``scipy.special.xlogy``; tilts are computed in the log domain so that
|alpha| in the hundreds stays finite.
"""

import math
from typing import Union

import numpy as np
from scipy.special import logsumexp, xlogy

from ..exceptions import (
    AbsoluteContinuityError,
    DegenerateRowError,
    InfiniteEnergyError,
)
from ..models.source import ConditionalType, JointSource, JointType, MismatchModel

Model = Union[JointSource, MismatchModel]
AnyType = Union[ConditionalType, JointType]


def _entropy(p: np.ndarray) -> float:
    return float(-xlogy(p, p).sum())


def _model_source(model: Model) -> JointSource:
    return model.tilde_source if isinstance(model, MismatchModel) else model


def entropy_x(src: JointSource) -> float:
    """H(X)."""
    return _entropy(src.p_x)


def entropy_y(src: JointSource) -> float:
    """H(Y)."""
    return _entropy(src.p_y)


def joint_entropy(src: JointSource) -> float:
    """H(X,Y), the typical per-symbol energy of the correct sequence."""
    return _entropy(src.p)


def entropy_x_given_y(src: JointSource) -> float:
    """H(X|Y) = -sum P(x,y) ln P(x|y)."""
    return max(0.0, joint_entropy(src) - entropy_y(src))


def entropy_y_given_x(src: JointSource) -> float:
    """H(Y|X)."""
    return max(0.0, joint_entropy(src) - entropy_x(src))


def divergence(q: JointType, src: JointSource) -> float:
    """D(Q||P) for a joint type absolutely continuous w.r.t. P.

    Raises:
        AbsoluteContinuityError: if Q has mass where P is zero
    """
    _require_support(q.q, src.support, AbsoluteContinuityError)
    mask = q.q > 0
    value = float(np.sum(q.q[mask] * (np.log(q.q[mask]) - src.log_p[mask])))
    return max(0.0, value)


def cross_entropy(src: JointSource, model: Model) -> float:
    """-E_P ln P~(X,Y); infinite when P charges a zero of P~."""
    log_model = _model_source(model).log_p
    mask = src.p > 0
    if np.any(np.isneginf(log_model[mask])):
        return math.inf
    return float(-np.sum(src.p[mask] * log_model[mask]))


def conditional_cross_entropy(src: JointSource, model: Model) -> float:
    """-E_P ln P~(X|Y), the mismatched ferromagnetic-glassy rate."""
    return cross_entropy(src, model) - entropy_y(src)


def conditional_entropy_of_type(q: ConditionalType, weights: np.ndarray) -> float:
    """H_Q(X|Y) = sum_y w(y) H(Q(.|y))."""
    per_column = -xlogy(q.q, q.q).sum(axis=0)
    return float(np.dot(np.asarray(weights, dtype=float), per_column))


def tilted_conditional(src: JointSource, alpha: float) -> ConditionalType:
    """Q_alpha(x|y) = P^alpha(x,y) / zeta(alpha|y), restricted to the support.

    Columns with P(y) = 0 are returned uniform; they carry no weight anywhere.

    Raises:
        DegenerateRowError: if a column with P(y) > 0 has no support
    """
    support = src.support
    q = np.full(src.p.shape, 1.0 / src.size_x)
    for y in range(src.size_y):
        column = support[:, y]
        if src.p_y[y] <= 0:
            continue
        if not column.any():
            raise DegenerateRowError(y)
        scaled = alpha * src.log_p[column, y]
        q[:, y] = 0.0
        q[column, y] = np.exp(scaled - logsumexp(scaled))
    return ConditionalType(q / q.sum(axis=0, keepdims=True))


def _require_support(q: np.ndarray, support: np.ndarray, error) -> None:
    bad = np.argwhere((q > 0) & ~support)
    if bad.size:
        row, col = (int(v) for v in bad[0])
        raise error(row, col)


def energy_of_type(q: AnyType, model: Model) -> float:
    """Per-symbol energy -E_Q[ln P(X,Y)] >= 0 under the evaluation model.

    A ConditionalType is weighted by the model's Y-marginal (for a mismatch
    model this equals P(y)).

    Raises:
        InfiniteEnergyError: if q touches a zero of the model
    """
    evaluation = _model_source(model)
    if isinstance(q, ConditionalType):
        joint = q.q * evaluation.p_y[None, :]
    else:
        joint = q.q
    _require_support(joint, evaluation.support, InfiniteEnergyError)
    mask = joint > 0
    return float(-np.sum(joint[mask] * evaluation.log_p[mask]))


def log_likelihood_rate(q: AnyType, model: Model) -> float:
    """The signed metric sum Q ln P, i.e. the negated energy."""
    return -energy_of_type(q, model)
