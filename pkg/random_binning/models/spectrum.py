"""Entropy-spectrum data models."""

from dataclasses import dataclass
from enum import Enum


class SpectrumKind(str, Enum):
    """Which entropy-energy curve a spectrum describes."""
    CONDITIONAL_X_GIVEN_Y = "conditional_x_given_y"
    CONDITIONAL_Y_GIVEN_X = "conditional_y_given_x"
    JOINT_XY = "joint_xy"
    CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class SpectrumPoint:
    """A point (alpha, epsilon, s(epsilon)) on the entropy-energy curve."""

    alpha: float
    epsilon: float
    entropy: float

    def to_dict(self) -> dict:
        return {
            'alpha': self.alpha,
            'epsilon': self.epsilon,
            'entropy': self.entropy,
        }
