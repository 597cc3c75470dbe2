import itertools
import math

import numpy as np
import pytest
from scipy.special import logsumexp

from random_binning.batch_runner import TrialRunner
from random_binning.config import SimulationConfig
from random_binning.core.error_exponent import exponent
from random_binning.core.phase_diagram import PhaseDiagram
from random_binning.core.simulator import (
    BinningSimulator,
    ber_sweep,
    dominance_map,
    empirical_slope,
    estimate_ber,
    exact_ber,
    run_binning_trial,
    symbol_error,
    wilson_interval,
)
from random_binning.exceptions import MemoryBudgetExceededError, ValidationError
from random_binning.models.exponent import MetricKind
from random_binning.models.phase import Phase
from random_binning.models.simulation import MAX_BINS, SimConfig


def explicit_ber(src, n, bins):
    """BER of the first symbol at beta = 1 by plain loops over y, x and every binning."""
    sequences = list(itertools.product(range(src.size_x), repeat=n))
    total = 0.0
    for y in itertools.product(range(src.size_y), repeat=n):
        for x in sequences:
            p_xy = math.prod(src.p[a, b] for a, b in zip(x, y))
            errors = 0.0
            binnings = list(itertools.product(range(bins), repeat=len(sequences)))
            for binning in binnings:
                u = binning[sequences.index(x)]
                mass = [0.0] * src.size_x
                for seq, b in zip(sequences, binning):
                    if b == u:
                        mass[seq[0]] += math.prod(src.p[a, c] for a, c in zip(seq, y))
                top = max(mass)
                if mass[x[0]] < top * (1 - 1e-12):
                    errors += 1.0
                elif sum(m >= top * (1 - 1e-12) for m in mass) > 1:
                    errors += 0.5
            total += p_xy * errors / len(binnings)
    return total


class TestHelpers:
    def test_symbol_error_units(self):
        assert symbol_error(np.array([0.0, -1.0]), 0, 'half') == 0
        assert symbol_error(np.array([0.0, -1.0]), 1, 'half') == 2
        assert symbol_error(np.array([-0.5, -0.5]), 0, 'half') == 1
        assert symbol_error(np.array([-0.5, -0.5]), 0, 'pessimistic') == 2

    def test_three_way_tie_counts_half(self):
        assert symbol_error(np.array([0.0, 0.0, 0.0]), 2, 'half') == 1

    def test_wilson_interval(self):
        low, high = wilson_interval(10, 100, 0.95)
        assert low < 0.1 < high
        narrow = wilson_interval(100, 1000, 0.95)
        assert narrow[1] - narrow[0] < high - low
        assert wilson_interval(0, 50, 0.95)[0] == 0.0


class TestSimConfig:
    def test_bins(self, dsbs):
        assert SimConfig(dsbs, n=10, rate=0.0).bins == 1
        assert SimConfig(dsbs, n=10, rate=0.5).bins == 148
        assert SimConfig(dsbs, n=1, rate=0.01).bins == 2
        assert SimConfig(dsbs, n=4, rate=20.0).bins == MAX_BINS

    @pytest.mark.parametrize("kwargs", [
        {'n': 0, 'rate': 0.1},
        {'n': 4, 'rate': -0.1},
        {'n': 4, 'rate': 0.1, 'beta': 0.0},
        {'n': 4, 'rate': 0.1, 'trials': 0},
        {'n': 4, 'rate': 0.1, 'tie_policy': 'coin'},
    ])
    def test_rejects_invalid(self, dsbs, kwargs):
        with pytest.raises(ValidationError):
            SimConfig(dsbs, **kwargs)

    def test_memory_budget(self, dsbs):
        with pytest.raises(MemoryBudgetExceededError):
            BinningSimulator(SimConfig(dsbs, n=30, rate=0.1))


class TestTrials:
    def test_posterior_is_normalized(self, dsbs):
        sim = BinningSimulator(SimConfig(dsbs, n=8, rate=0.2, beta=1.5))
        for trial in range(20):
            state = sim.trial_state(trial)
            masses = sim.symbol_masses(state, 3)
            assert logsumexp(masses) == pytest.approx(logsumexp(1.5 * state.scores), abs=1e-10)

    def test_true_sequence_is_in_its_bin(self, dsbs):
        sim = BinningSimulator(SimConfig(dsbs, n=8, rate=0.4))
        for trial in range(20):
            state = sim.trial_state(trial)
            assert state.members[state.correct_position] == state.x_index

    def test_streaming_matches_materialized(self, dsbs):
        cfg = SimConfig(dsbs, n=6, rate=0.3)
        materialized = BinningSimulator(cfg, SimulationConfig())
        streaming = BinningSimulator(cfg, SimulationConfig(materialize_max_n=0, chunk_size=5))
        for trial in range(10):
            x_index = materialized.trial_state(trial).x_index
            assert np.array_equal(materialized.bin_members(trial, x_index),
                                  streaming.bin_members(trial, x_index))

    def test_trial_is_reproducible(self, dsbs):
        cfg = SimConfig(dsbs, n=6, rate=0.3, seed=7)
        assert run_binning_trial(cfg, 5) == run_binning_trial(cfg, 5)

    def test_singleton_bins(self, dsbs):
        report = estimate_ber(SimConfig(dsbs, n=4, rate=20.0, trials=50),
                              TrialRunner(batch_size=16, workers=1))
        assert report.ber == 0.0
        assert report.log_z_error == -math.inf
        assert report.empty_bin_fraction == 1.0
        assert report.dominance_fraction == 1.0

    def test_low_temperature_agrees_with_word_map(self, dsbs):
        soft = BinningSimulator(SimConfig(dsbs, n=8, rate=0.3, beta=64.0))
        hard = BinningSimulator(SimConfig(dsbs, n=8, rate=0.3, beta=math.inf))
        compared = agree = 0
        for trial in range(200):
            state = hard.trial_state(trial)
            top = state.scores.max()
            winners = state.members[state.scores >= top - 1e-9]
            first_symbols = {int(w // 2 ** 7) for w in winners}
            if len(first_symbols) > 1:
                continue
            compared += 1
            decided = int(np.argmax(soft.symbol_masses(soft.trial_state(trial), 0)))
            agree += decided == first_symbols.pop()
        assert compared > 100
        assert agree >= 0.99 * compared


class TestBerEstimates:
    def test_zero_rate_is_side_information_only(self, dsbs):
        report = estimate_ber(SimConfig(dsbs, n=4, rate=0.0, trials=4000),
                              TrialRunner(batch_size=500, workers=1))
        assert report.ber == pytest.approx(0.1, abs=0.025)
        assert report.ber_low <= report.ber <= report.ber_high

    def test_exact_ber_matches_explicit_loops(self, dsbs):
        assert exact_ber(dsbs, 2, 2) == pytest.approx(explicit_ber(dsbs, 2, 2), abs=1e-12)

    def test_exact_ber_budget(self, dsbs):
        with pytest.raises(MemoryBudgetExceededError):
            exact_ber(dsbs, 4, 2)

    @pytest.mark.slow
    def test_monte_carlo_matches_exact(self, dsbs):
        exact = exact_ber(dsbs, 2, 2)
        trials = 4000
        report = estimate_ber(SimConfig(dsbs, n=2, rate=math.log(2) / 2, trials=trials),
                              TrialRunner(batch_size=500, workers=1))
        assert report.bins == 2
        stderr = math.sqrt(exact * (1 - exact) / trials)
        assert abs(report.ber - exact) <= 4 * stderr + 1e-3

    def test_deterministic_given_seed(self, dsbs):
        cfg = SimConfig(dsbs, n=6, rate=0.3, trials=100, seed=11, all_positions=True)
        first = estimate_ber(cfg, TrialRunner(batch_size=7, workers=1))
        second = estimate_ber(cfg, TrialRunner(batch_size=50, workers=1))
        assert first.to_dict() == second.to_dict()
        assert first.seeds['seed'] == 11
        assert first.seeds['trials'] == [0, 99]

    @pytest.mark.slow
    def test_parallel_matches_sequential(self, dsbs):
        cfg = SimConfig(dsbs, n=6, rate=0.3, trials=96, seed=3)
        sequential = estimate_ber(cfg, TrialRunner(batch_size=16, workers=1))
        parallel = estimate_ber(cfg, TrialRunner(batch_size=16, workers=2))
        assert sequential.to_dict() == parallel.to_dict()

    def test_all_positions_counts_every_symbol(self, dsbs):
        report = estimate_ber(SimConfig(dsbs, n=5, rate=0.2, trials=20, all_positions=True),
                              TrialRunner(batch_size=10, workers=1))
        assert report.symbols == 100

    def test_other_metrics_run(self, dsbs, mismatch):
        runner = TrialRunner(batch_size=25, workers=1)
        for kind in (MetricKind.min_conditional_entropy(), MetricKind.mismatched(mismatch)):
            report = estimate_ber(SimConfig(dsbs, n=6, rate=0.3, trials=50, metric=kind), runner)
            assert 0.0 <= report.ber <= 1.0
            assert report.metric == kind.name.value


class TestSweeps:
    def test_ber_sweep(self, dsbs):
        points = ber_sweep(SimConfig(dsbs, n=2, rate=0.5, trials=200), [2, 4, 6],
                           TrialRunner(batch_size=100, workers=1))
        assert [p.n for p in points] == [2, 4, 6]
        for p in points:
            if p.ber > 0:
                assert p.slope == pytest.approx(-math.log(p.ber) / p.n)
            else:
                assert math.isinf(p.slope)

    def test_dominance_map(self, dsbs):
        cells = dominance_map(SimConfig(dsbs, n=12, rate=0.0, trials=200), [0.0, 0.6], [1.0, 0.5],
                              TrialRunner(batch_size=100, workers=1))
        by_cell = {(c.rate, c.temperature): c.fraction for c in cells}
        assert [(c.rate, c.temperature) for c in cells] == [(0.0, 1.0), (0.0, 0.5), (0.6, 1.0), (0.6, 0.5)]
        assert by_cell[(0.0, 1.0)] == 0.0
        assert by_cell[(0.6, 0.5)] >= 0.9

    def test_report_carries_slope(self, dsbs):
        report = estimate_ber(SimConfig(dsbs, n=6, rate=0.3, trials=200, seed=5),
                              TrialRunner(batch_size=100, workers=1))
        assert report.ber > 0
        assert report.slope_estimate == pytest.approx(-math.log(report.ber) / 6)
        assert report.slope_estimate == empirical_slope(report.ber, report.symbols, 6)[0]

    def test_slope_without_errors(self):
        assert empirical_slope(0.0, 100, 4) == (math.inf, math.inf)

    @pytest.mark.slow
    def test_slope_approaches_exponent(self, dsbs):
        # Polynomial prefactors keep -ln(BER)/n above E at these blocklengths
        target = exponent(dsbs, 0.55, 1.0).value
        points = ber_sweep(SimConfig(dsbs, n=8, rate=0.55, trials=1500, seed=9, all_positions=True),
                           [8, 12, 16, 20], TrialRunner(batch_size=250, workers=2))
        slopes = [p.slope for p in points]
        errors = [p.slope_stderr for p in points]
        assert all(math.isfinite(s) for s in slopes)
        for (a, ea), (b, eb) in zip(zip(slopes, errors), zip(slopes[1:], errors[1:])):
            assert b <= a + 2 * math.hypot(ea, eb)
        assert slopes[-1] < slopes[0]
        assert abs(slopes[-1] - target) < abs(slopes[0] - target)
        assert slopes[-1] >= 0.5 * target

    @pytest.mark.slow
    def test_dominance_band_brackets_boundary(self, dsbs):
        rates = np.round(np.linspace(0.0, 0.8, 17), 3)
        cells = dominance_map(SimConfig(dsbs, n=12, rate=0.0, trials=400, seed=21), rates, [1.0],
                              TrialRunner(batch_size=200, workers=1))
        fractions = np.array([c.fraction for c in cells])
        assert fractions[0] <= 0.1 and fractions[-1] >= 0.9
        low = rates[np.flatnonzero(fractions <= 0.1).max()]
        high = rates[np.flatnonzero(fractions >= 0.9).min()]
        assert low < high
        diagram = PhaseDiagram(dsbs)
        fine = np.linspace(0.0, 0.8, 1601)
        boundary = next(float(r) for r in fine if diagram.classify(float(r), 1.0).phase is Phase.FERROMAGNETIC)
        assert boundary == pytest.approx(0.3251, abs=1e-3)
        assert low - 0.05 <= boundary <= high + 0.05
