import json
import math

import pytest

from random_binning.exceptions import InvalidDistributionError, ValidationError
from random_binning.export import check_writable, emit, format_value, render_csv
from random_binning.models.phase import Boundary, DecoderKind, Phase, PhaseLabel
from random_binning.models.simulation import DilutionCell, DilutionReport
from random_binning.schemas import (
    DilutionReportSchema,
    PhaseLabelSchema,
    SourceFileSchema,
    load_source,
)


def _write(tmp_path, data, name='source.json'):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


class TestLoadSource:
    def test_finite_source(self, dsbs_file):
        loaded = load_source(dsbs_file)
        assert not loaded.is_closed_form
        assert loaded.source.p[0, 0] == 0.45
        assert loaded.mismatch is None

    def test_mismatch_model(self, tmp_path, dsbs):
        path = _write(tmp_path, {**dsbs.to_dict(), 'p_tilde': [[0.4, 0.1], [0.1, 0.4]]})
        assert load_source(path).mismatch.p_tilde[0, 1] == 0.1

    def test_closed_form(self, tmp_path):
        loaded = load_source(_write(tmp_path, {'closed_form': 'harmonic', 'kappa': 1.0, 'a': 1.0}))
        assert loaded.is_closed_form
        with pytest.raises(ValidationError) as exc:
            loaded.require_source('exponent')
        assert exc.value.field == 'source'

    @pytest.mark.parametrize("data", [
        {'closed_form': 'harmonic', 'kappa': 1.0, 'a': 1.0, 'p': [[1.0]]},
        {},
        {'closed_form': 'anharmonic', 'kappa': 1.0, 'a': 1.0},
        {'closed_form': 'harmonic', 'kappa': 1.0},
        {'closed_form': 'harmonic', 'kappa': -1.0, 'a': 1.0},
        {'p_tilde': [[1.0]], 'closed_form': 'harmonic', 'kappa': 1.0, 'a': 1.0},
    ])
    def test_schema_violations(self, tmp_path, data):
        with pytest.raises(ValidationError):
            load_source(_write(tmp_path, data))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError) as exc:
            load_source(tmp_path / 'absent.json')
        assert 'source' in str(exc.value)

    def test_not_json(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text('{"p": [[0.5, ')
        with pytest.raises(ValidationError):
            load_source(path)

    def test_invalid_pmf(self, tmp_path):
        with pytest.raises(ValidationError) as exc:
            load_source(_write(tmp_path, {'p': [[0.5, 0.6], [0.0, 0.0]]}))
        assert isinstance(exc.value.__cause__, InvalidDistributionError)

    def test_schema_accepts_symbol_names(self):
        schema = SourceFileSchema(alphabet_x=['a', 'b'], alphabet_y=[0, 1], p=[[0.5, 0.0], [0.0, 0.5]])
        assert schema.alphabet_x == ['a', 'b']


class TestReportSchemas:
    def test_phase_label_round_trip(self):
        label = PhaseLabel(Phase.GLASSY, 0.1, math.inf, DecoderKind.MATCHED, [Boundary.PARA_GLASSY])
        schema = PhaseLabelSchema.from_label(label)
        text = schema.model_dump_json()
        assert '"inf"' in text
        again = PhaseLabelSchema.model_validate_json(text).to_label()
        assert again == label

    def test_dilution_report_round_trip(self):
        report = DilutionReport(
            n=10, rate=0.2, seed=1, realizations=4, empty_realizations=0, keep_correct=False,
            cells=[DilutionCell(0.5, -0.3, -0.31), DilutionCell(3.0, -2.7, -2.69)],
            beta_c_estimate=1.1, beta_c_analytic=None, ground_energy_estimate=0.9,
        )
        text = DilutionReportSchema.from_report(report).model_dump_json()
        again = DilutionReportSchema.model_validate_json(text).to_report()
        assert again.to_dict() == report.to_dict()


class TestExport:
    def test_format_value(self):
        assert format_value(1 / 3, 12) == '0.333333333333'
        assert format_value(math.inf, 12) == 'inf'
        assert format_value(True, 12) == 'true'
        assert format_value(None, 12) == ''
        assert format_value(Phase.GLASSY, 12) == 'glassy'

    def test_render_csv(self):
        text = render_csv([{'R': 0.5, 'T': 2.0}, {'R': 0.25, 'T': 1.0}], ['R', 'T'], digits=12)
        assert text == 'R,T\n0.5,2\n0.25,1\n'

    def test_emit_infers_format_from_suffix(self, tmp_path):
        out = tmp_path / 'nested' / 'rows.json'
        emit([{'E': math.inf}], out)
        assert json.loads(out.read_text()) == [{'E': 'inf'}]

    def test_emit_model_as_csv(self, tmp_path):
        label = PhaseLabelSchema.from_label(PhaseLabel(Phase.FERROMAGNETIC, 0.5, 1.0))
        with pytest.raises(ValueError):
            emit(label, tmp_path / 'label.csv')

    def test_emit_to_stdout(self, capsys):
        emit([{'n': 4}], None, 'csv')
        assert capsys.readouterr().out == 'n\n4\n'

    def test_check_writable(self, tmp_path):
        check_writable(None)
        check_writable(tmp_path / 'new' / 'rows.csv')
        assert (tmp_path / 'new').is_dir()
        blocker = tmp_path / 'file'
        blocker.write_text('')
        with pytest.raises(ValidationError) as excinfo:
            check_writable(blocker / 'rows.csv')
        assert excinfo.value.field == '--out'
        with pytest.raises(ValidationError):
            check_writable(tmp_path)
