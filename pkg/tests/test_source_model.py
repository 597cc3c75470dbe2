import math

import numpy as np
import pytest

from random_binning.core.information import (
    conditional_cross_entropy,
    conditional_entropy_of_type,
    divergence,
    energy_of_type,
    entropy_x_given_y,
    joint_entropy,
    log_likelihood_rate,
    tilted_conditional,
)
from random_binning.exceptions import (
    AbsoluteContinuityError,
    BinningError,
    InfiniteEnergyError,
    InvalidDistributionError,
)
from random_binning.models.source import ConditionalType, JointSource, JointType, MismatchModel

H_01 = -0.1 * math.log(0.1) - 0.9 * math.log(0.9)


class TestJointSource:
    def test_dsbs_marginals(self, dsbs):
        assert np.allclose(dsbs.p_x, [0.5, 0.5])
        assert np.allclose(dsbs.p_y, [0.5, 0.5])
        assert np.allclose(dsbs.p_x_given_y, [[0.9, 0.1], [0.1, 0.9]])

    def test_dsbs_entropies(self, dsbs):
        assert entropy_x_given_y(dsbs) == pytest.approx(H_01, abs=1e-12)
        assert joint_entropy(dsbs) == pytest.approx(math.log(2) + H_01, abs=1e-12)

    def test_is_read_only(self, dsbs):
        with pytest.raises(ValueError):
            dsbs.p[0, 0] = 1.0

    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidDistributionError):
            JointSource([[0.5, 0.2], [0.2, 0.2]])

    def test_rejects_negative_entry_with_location(self):
        with pytest.raises(InvalidDistributionError) as exc:
            JointSource([[0.6, -0.1], [0.3, 0.2]])
        assert (exc.value.row, exc.value.column) == (0, 1)

    def test_rejects_alphabet_mismatch(self):
        with pytest.raises(InvalidDistributionError):
            JointSource([[0.5, 0.5]], alphabet_x=['a', 'b'])

    def test_errors_share_base(self):
        with pytest.raises(BinningError):
            JointSource([[1.5, -0.5]])

    def test_dict_round_trip(self, dsbs):
        again = JointSource.from_dict(dsbs.to_dict())
        assert np.array_equal(again.p, dsbs.p)
        assert again.alphabet_x == dsbs.alphabet_x

    def test_zero_column_is_uniform(self):
        src = JointSource([[0.5, 0.0], [0.5, 0.0]])
        assert np.allclose(src.p_x_given_y[:, 1], [0.5, 0.5])


class TestMismatchModel:
    def test_marginal_must_match(self, dsbs):
        with pytest.raises(InvalidDistributionError):
            MismatchModel(dsbs, [[0.6, 0.1], [0.1, 0.2]])

    def test_cross_entropy(self, dsbs, mismatch):
        expected = -(0.9 * math.log(0.8) + 0.1 * math.log(0.2))
        assert conditional_cross_entropy(dsbs, mismatch) == pytest.approx(expected, abs=1e-12)

    def test_matched_model_gives_conditional_entropy(self, dsbs):
        model = MismatchModel(dsbs, dsbs.p)
        assert conditional_cross_entropy(dsbs, model) == pytest.approx(H_01, abs=1e-12)


class TestTypes:
    def test_divergence_zero_at_source(self, dsbs):
        assert divergence(JointType(dsbs.p), dsbs) == pytest.approx(0.0, abs=1e-15)

    def test_divergence_requires_support(self):
        src = JointSource([[0.5, 0.0], [0.25, 0.25]])
        with pytest.raises(AbsoluteContinuityError):
            divergence(JointType([[0.25, 0.25], [0.25, 0.25]]), src)

    def test_energy_of_conditional_type(self, dsbs):
        q = ConditionalType(dsbs.p_x_given_y)
        assert energy_of_type(q, dsbs) == pytest.approx(joint_entropy(dsbs), abs=1e-12)

    def test_energy_outside_support(self):
        src = JointSource([[0.5, 0.0], [0.25, 0.25]])
        with pytest.raises(InfiniteEnergyError):
            energy_of_type(ConditionalType([[0.5, 0.5], [0.5, 0.5]]), src)

    def test_conditional_type_columns_must_sum_to_one(self):
        with pytest.raises(InvalidDistributionError):
            ConditionalType([[0.5, 0.3], [0.5, 0.3]])


class TestTilt:
    def test_tilt_one_is_posterior(self, dsbs):
        assert np.allclose(tilted_conditional(dsbs, 1.0).q, dsbs.p_x_given_y)

    def test_tilt_zero_is_uniform_on_support(self):
        src = JointSource([[0.4, 0.0], [0.3, 0.1], [0.1, 0.1]])
        q = tilted_conditional(src, 0.0).q
        assert np.allclose(q[:, 0], 1 / 3)
        assert np.allclose(q[:, 1], [0.0, 0.5, 0.5])

    @pytest.mark.parametrize("alpha", [300.0, -300.0])
    def test_large_tilts_stay_finite(self, dsbs, alpha):
        q = tilted_conditional(dsbs, alpha).q
        assert np.all(np.isfinite(q))
        assert np.allclose(q.sum(axis=0), 1.0)


class TestTypeEntropies:
    def test_posterior_conditional_entropy(self, dsbs):
        q = ConditionalType(dsbs.p_x_given_y)
        assert conditional_entropy_of_type(q, dsbs.p_y) == pytest.approx(H_01, abs=1e-12)

    def test_weights_select_columns(self):
        q = ConditionalType(np.array([[0.5, 1.0], [0.5, 0.0]]))
        assert conditional_entropy_of_type(q, [1.0, 0.0]) == pytest.approx(math.log(2))
        assert conditional_entropy_of_type(q, [0.0, 1.0]) == 0.0

    def test_log_likelihood_rate_is_negated_energy(self, dsbs):
        q = JointType(dsbs.p)
        assert log_likelihood_rate(q, dsbs) == pytest.approx(-joint_entropy(dsbs), abs=1e-12)
