import csv
import json

import pytest

from random_binning import cli
from random_binning import config as config_module
from random_binning.cli import parse_and_dispatch, parse_sweep
from random_binning.schemas import SimReportSchema

from .conftest import SOURCES_DIR

DSBS = str(SOURCES_DIR / 'dsbs01.json')
HARMONIC = str(SOURCES_DIR / 'harmonic.json')
MISMATCH = str(SOURCES_DIR / 'dsbs01_mismatch.json')


def _rows(path):
    with open(path, newline='') as f:
        return list(csv.DictReader(f))


class TestParsing:
    def test_sweep_axes(self):
        axes = parse_sweep('rate=0:1:5,beta=2:2:1')
        assert axes['rate'].tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert axes['beta'].tolist() == [2.0]

    def test_no_command(self):
        assert parse_and_dispatch([]) == 2

    def test_missing_source(self, capsys):
        assert parse_and_dispatch(['phase', '--grid', '8']) == 2
        assert 'source' in capsys.readouterr().err

    def test_negative_rate(self):
        assert parse_and_dispatch(['exponent', '--source', DSBS, '--rate', '-0.1']) == 2

    def test_bad_sweep(self):
        assert parse_and_dispatch(['exponent', '--source', DSBS, '--sweep', 'rate=0:1']) == 2

    def test_unknown_sweep_axis(self, tmp_path):
        code = parse_and_dispatch(['exponent', '--source', DSBS, '--sweep', 'gamma=0:1:3',
                                   '--out', str(tmp_path / 'e.csv')])
        assert code == 2


class TestCommands:
    def test_phase(self, tmp_path):
        out = tmp_path / 'b.csv'
        assert parse_and_dispatch(['-q', 'phase', '--source', DSBS, '--decoder', 'matched',
                                   '--grid', '256', '--out', str(out)]) == 0
        rows = _rows(out)
        assert list(rows[0]) == ['curve_id', 'R', 'T']
        assert {r['curve_id'] for r in rows} == {'ferro_glassy', 'ferro_para', 'para_glassy'}

    def test_phase_needs_finite_source(self, capsys):
        assert parse_and_dispatch(['phase', '--source', HARMONIC]) == 2
        assert 'source' in capsys.readouterr().err

    def test_missing_source_file(self, tmp_path, capsys):
        assert parse_and_dispatch(['phase', '--source', str(tmp_path / 'none.json')]) == 2
        assert 'source' in capsys.readouterr().err

    def test_classify(self, capsys):
        assert parse_and_dispatch(['-q', 'classify', '--source', DSBS,
                                   '--rate', '0.6', '--temperature', '0.5']) == 0
        label = json.loads(capsys.readouterr().out)
        assert label['phase'] == 'ferromagnetic'

    def test_spectrum_closed_form(self, tmp_path):
        out = tmp_path / 's.csv'
        assert parse_and_dispatch(['-q', 'spectrum', '--source', HARMONIC,
                                   '--sweep', 'alpha=0.5:2:4', '--out', str(out)]) == 0
        rows = _rows(out)
        assert len(rows) == 4
        assert float(rows[0]['epsilon']) == pytest.approx(1.0)

    def test_spectrum_table(self, tmp_path):
        out = tmp_path / 's.csv'
        assert parse_and_dispatch(['-q', 'spectrum', '--source', DSBS, '--kind', 'joint_xy',
                                   '--out', str(out)]) == 0
        assert len(_rows(out)) == 2048

    def test_exponent_grid(self, tmp_path):
        out = tmp_path / 'e.csv'
        assert parse_and_dispatch(['-q', 'exponent', '--source', DSBS,
                                   '--sweep', 'rate=0.3:0.6:2,beta=1:2:2', '--out', str(out)]) == 0
        rows = _rows(out)
        assert [(r['R'], r['beta']) for r in rows] == [('0.3', '1'), ('0.3', '2'), ('0.6', '1'), ('0.6', '2')]
        assert rows[0]['phase'] == 'zero'

    def test_mismatched_metric_needs_model(self, capsys):
        code = parse_and_dispatch(['exponent', '--source', DSBS, '--rate', '0.5',
                                   '--metric', 'mismatched'])
        assert code == 2
        assert '--metric' in capsys.readouterr().err

    def test_simulate_report(self, tmp_path):
        out = tmp_path / 'r.json'
        assert parse_and_dispatch(['-q', 'simulate', '--source', DSBS, '--n', '6', '--rate', '0.3',
                                   '--trials', '50', '--seed', '4', '--out', str(out)]) == 0
        report = SimReportSchema.model_validate_json(out.read_text()).to_report()
        assert report.trials == 50
        assert report.seeds['seed'] == 4

    def test_simulate_n_sweep(self, tmp_path):
        out = tmp_path / 'sweep.csv'
        assert parse_and_dispatch(['-q', 'simulate', '--source', DSBS, '--n-sweep', '2,4',
                                   '--rate', '0.5', '--trials', '30', '--out', str(out)]) == 0
        assert [r['n'] for r in _rows(out)] == ['2', '4']

    def test_simulate_needs_blocklength(self):
        assert parse_and_dispatch(['simulate', '--source', DSBS, '--rate', '0.3']) == 2

    def test_simulate_memory_budget(self, capsys):
        code = parse_and_dispatch(['simulate', '--source', DSBS, '--n', '40', '--rate', '0.3'])
        assert code == 1
        assert 'MemoryBudgetExceededError' in capsys.readouterr().err

    def test_dominance_sweep(self, tmp_path):
        out = tmp_path / 'd.csv'
        assert parse_and_dispatch(['-q', 'simulate', '--source', DSBS, '--n', '6', '--rate', '0',
                                   '--trials', '20', '--dominance-sweep', 'rate=0:0.6:2,temperature=1:1:1',
                                   '--out', str(out)]) == 0
        assert len(_rows(out)) == 2

    def test_dilution(self, tmp_path):
        out = tmp_path / 'd.json'
        assert parse_and_dispatch(['-q', 'dilution', '--source', DSBS, '--n', '8', '--rate', '0.2',
                                   '--sweep', 'beta=0.5:2:4', '--realizations', '4',
                                   '--out', str(out)]) == 0
        report = json.loads(out.read_text())
        assert len(report['cells']) == 4

    def test_two_sided_single_point(self, tmp_path):
        out = tmp_path / 'ts.csv'
        assert parse_and_dispatch(['-q', 'two-sided', '--source', DSBS,
                                   '--sweep', 'rate_x=0.6:0.6:1,rate_y=0.6:0.6:1', '--out', str(out)]) == 0
        rows = _rows(out)
        assert len(rows) == 1
        assert rows[0]['dominant'] == 'cc'
        assert rows[0]['reliable'] == 'true'

    def test_two_sided_beta_above_one(self, capsys):
        code = parse_and_dispatch(['two-sided', '--source', DSBS, '--rate-x', '0.5',
                                   '--rate-y', '0.5', '--beta', '2'])
        assert code == 1
        assert 'BetaOutOfRangeError' in capsys.readouterr().err


REPRODUCIBLE_RUNS = [
    pytest.param(['spectrum', '--source', DSBS, '--kind', 'joint_xy'], 'csv', 1, id='spectrum'),
    pytest.param(['phase', '--source', MISMATCH, '--decoder', 'mismatched', '--grid', '32'], 'csv', 1,
                 id='phase'),
    pytest.param(['classify', '--source', DSBS, '--rate', '0.5', '--temperature', '0.8'], 'json', 1,
                 id='classify'),
    pytest.param(['exponent', '--source', DSBS, '--sweep', 'rate=0.3:0.6:2,beta=1:2:2'], 'csv', 1,
                 id='exponent'),
    pytest.param(['exponent', '--source', DSBS, '--sweep', 'rate=0.3:0.6:2,beta=1:2:2'], 'csv', 2,
                 id='exponent-workers'),
    pytest.param(['simulate', '--source', MISMATCH, '--n', '6', '--rate', '0.3', '--trials', '40',
                  '--metric', 'mismatched'], 'json', 1, id='simulate'),
    pytest.param(['dilution', '--source', DSBS, '--n', '8', '--rate', '0.2', '--sweep', 'beta=0.5:2:3',
                  '--realizations', '4', '--seed', '3'], 'json', 1, id='dilution'),
    pytest.param(['two-sided', '--source', DSBS, '--sweep', 'rate_x=0:1:4,rate_y=0:1:4'], 'csv', 1,
                 id='two-sided'),
    pytest.param(['two-sided', '--source', DSBS, '--sweep', 'rate_x=0:1:4,rate_y=0:1:4'], 'csv', 2,
                 id='two-sided-workers'),
]


def _run_with_workers(tmp_path, monkeypatch, argv, out, workers):
    monkeypatch.setattr(config_module, '_config', None)
    path = tmp_path / f'workers{workers}.yaml'
    path.write_text(f'sweep:\n  workers: {workers}\n')
    assert parse_and_dispatch(['-q', '--config', str(path), *argv, '--out', str(out)]) == 0
    return out.read_bytes()


class TestReproducibility:
    @pytest.mark.parametrize("argv,suffix,workers", REPRODUCIBLE_RUNS)
    def test_identical_runs(self, tmp_path, monkeypatch, argv, suffix, workers):
        first = _run_with_workers(tmp_path, monkeypatch, argv, tmp_path / f'a.{suffix}', workers)
        second = _run_with_workers(tmp_path, monkeypatch, argv, tmp_path / f'b.{suffix}', workers)
        assert first
        assert first == second

    @pytest.mark.parametrize("argv", [
        ['exponent', '--source', DSBS, '--sweep', 'rate=0.3:0.6:2,beta=0.5:2:2'],
        ['two-sided', '--source', DSBS, '--sweep', 'rate_x=0:1:5,rate_y=0:1:5'],
    ], ids=['exponent', 'two-sided'])
    def test_worker_count_does_not_change_output(self, tmp_path, monkeypatch, argv):
        serial = _run_with_workers(tmp_path, monkeypatch, argv, tmp_path / 'serial.csv', 1)
        parallel = _run_with_workers(tmp_path, monkeypatch, argv, tmp_path / 'parallel.csv', 2)
        assert serial == parallel


class TestOutputPath:
    @pytest.fixture
    def calls(self, monkeypatch):
        seen = []
        monkeypatch.setattr(cli, 'load_source', lambda *a, **k: seen.append('load_source'))
        monkeypatch.setattr(cli, 'exponent_sweep', lambda *a, **k: seen.append('exponent_sweep'))
        return seen

    def test_parent_is_a_file(self, tmp_path, calls, capsys):
        blocker = tmp_path / 'blocker'
        blocker.write_text('')
        code = parse_and_dispatch(['exponent', '--source', DSBS, '--rate', '0.5',
                                   '--out', str(blocker / 'e.csv')])
        assert code == 2
        assert calls == []
        assert 'ValidationError' in capsys.readouterr().err

    def test_out_is_a_directory(self, tmp_path, calls):
        assert parse_and_dispatch(['exponent', '--source', DSBS, '--rate', '0.5', '--out', str(tmp_path)]) == 2
        assert calls == []

    def test_missing_parent_is_created(self, tmp_path):
        out = tmp_path / 'nested' / 'deeper' / 'label.json'
        assert parse_and_dispatch(['-q', 'classify', '--source', DSBS, '--rate', '0.6',
                                   '--temperature', '0.5', '--out', str(out)]) == 0
        assert json.loads(out.read_text())['phase'] == 'ferromagnetic'
