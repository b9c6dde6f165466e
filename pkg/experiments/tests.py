import json
import math
from pathlib import Path

import pandas as pd
import pytest

from core.exceptions import ConfigurationError, ValidationError, VerificationFailure
from core.export import read_exported_csv
from core.reports import CheckResult, VerificationReport
from experiments import commands
from experiments.models import ExperimentConfig, apply_overrides, load_config, parse_config, validate_config
from experiments.services import ExperimentService
from experiments.tasks import TaskRunner

CANTOR_H = math.log(2) / math.log(3)
CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'


def cantor_document(output_dir, **extra):
    document = {
        'system': {'kind': 'affine', 'name': 'cantor', 'ratios': [1 / 3, 1 / 3], 'offsets': [0.0, 2 / 3]},
        'depth': 6,
        'discretization_level': 5,
        'verify_depth': 4,
        'r_values': [2.0],
        'n_grid': [1, 2, 4, 8],
        'q_grid': [-1.0, 0.0, 1.0],
        'output_dir': str(output_dir),
    }
    document.update(extra)
    return document


@pytest.fixture
def cantor_config(tmp_path):
    return validate_config(cantor_document(tmp_path / 'out'))


@pytest.fixture(scope='module')
def experiment_service(geometry, pressure_service, gibbs_service, quantizer_service):
    return ExperimentService(
        geometry=geometry, pressure=pressure_service, gibbs=gibbs_service, quantizer=quantizer_service,
    )


@pytest.fixture(autouse=True)
def quiet_logging(monkeypatch):
    monkeypatch.setattr('quantdim.log.setup_logging', lambda level=None: None)


class TestExperimentConfig:
    def test_defaults(self, tmp_path):
        config = validate_config({'system': {'kind': 'logistic'}})
        assert config.n_grid == [1, 2, 4, 8, 16, 32, 64, 128]
        assert config.q_grid[0] == -1.0 and config.q_grid[-1] == 2.0
        assert config.r_values == [1.0, 2.0]

    def test_json_error_carries_position(self):
        with pytest.raises(ConfigurationError) as excinfo:
            parse_config('{\n  "system": {"kind": "affine",,}\n}', source='broken.json')
        assert excinfo.value.message.startswith('broken.json:2:')
        assert excinfo.value.details['line'] == 2

    def test_field_path_in_message(self, tmp_path):
        document = cantor_document(tmp_path)
        document['system']['ratios'] = [0.3, 'wide']
        with pytest.raises(ConfigurationError) as excinfo:
            validate_config(document)
        assert 'system.ratios.1' in excinfo.value.message

    def test_rejects_unknown_fields(self, tmp_path):
        with pytest.raises(ConfigurationError) as excinfo:
            validate_config(cantor_document(tmp_path, colour='blue'))
        assert 'colour' in excinfo.value.details

    @pytest.mark.parametrize('field,value', [
        ('n_grid', [1, 4, 2]),
        ('q_grid', [0.0, 0.0, 1.0]),
        ('r_values', [2.0, 1.0]),
        ('depth', 0),
        ('window', [5, 2]),
    ])
    def test_rejects_bad_values(self, tmp_path, field, value):
        with pytest.raises(ConfigurationError):
            validate_config(cantor_document(tmp_path, **{field: value}))

    def test_ratios_must_contract(self, tmp_path):
        document = cantor_document(tmp_path)
        document['system']['ratios'] = [0.5, 1.5]
        with pytest.raises(ConfigurationError):
            validate_config(document)

    def test_affine_needs_offsets(self, tmp_path):
        document = cantor_document(tmp_path)
        del document['system']['offsets']
        with pytest.raises(ConfigurationError):
            validate_config(document)

    def test_discretization_level_within_depth(self, tmp_path):
        with pytest.raises(ConfigurationError):
            validate_config(cantor_document(tmp_path, discretization_level=7))

    def test_overrides_win(self, cantor_config, tmp_path):
        config = apply_overrides(cantor_config, output_dir=str(tmp_path / 'other'), depth=8, tol=None)
        assert config.output_dir == str(tmp_path / 'other')
        assert config.depth == 8
        assert config.tol is None

    def test_overrides_are_validated(self, cantor_config):
        with pytest.raises(ConfigurationError):
            apply_overrides(cantor_config, depth=-1)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / 'missing.json')

    def test_builds_system(self, cantor_config):
        system = cantor_config.system.build()
        assert system.name == 'cantor'
        assert system.is_affine

    def test_shipped_configs_parse(self):
        for name in ('cantor', 'golden', 'logistic'):
            assert isinstance(load_config(CONFIG_DIR / f"{name}.json"), ExperimentConfig)


class TestTaskRunner:
    @pytest.mark.parametrize('threads', [1, 4])
    def test_keeps_submission_order(self, threads):
        assert TaskRunner(threads).map(lambda x: x * x, range(20)) == [x * x for x in range(20)]

    def test_callable_as_mapper(self):
        assert TaskRunner(2)(str, [3, 1, 2]) == ['3', '1', '2']


class TestExperimentService:
    def test_unknown_subcommand(self, experiment_service, cantor_config):
        with pytest.raises(ValidationError, match='Unknown subcommand'):
            experiment_service.run_subcommand('plot', cantor_config)

    def test_dim(self, experiment_service, cantor_config):
        outcome = experiment_service.run_subcommand('dim', cantor_config)
        assert outcome.exit_code == 0
        row = read_exported_csv(outcome.artifacts[0]).iloc[0]
        assert row['lo'] <= CANTOR_H <= row['hi']
        assert row['mid'] == pytest.approx(CANTOR_H, abs=1e-8)

    def test_output_is_reproducible(self, experiment_service, cantor_config):
        first = experiment_service.run_subcommand('dim', cantor_config).artifacts[0].read_bytes()
        second = experiment_service.run_subcommand('dim', cantor_config).artifacts[0].read_bytes()
        assert first == second
        assert first.startswith(b'# quantdim ')

    def test_kappa_matches_self_similar_equation(self, experiment_service, tmp_path):
        config = validate_config(cantor_document(tmp_path, r_values=[0.5, 1.0, 2.0, 3.0]))
        frame = read_exported_csv(experiment_service.run_subcommand('kappa', config).artifacts[0])
        assert frame['r'].tolist() == [0.5, 1.0, 2.0, 3.0]
        assert frame['kappa_mid'].to_numpy() == pytest.approx([CANTOR_H] * 4, abs=1e-6)
        assert frame['self_similar'].to_numpy() == pytest.approx([CANTOR_H] * 4, abs=1e-8)

    def test_beta(self, experiment_service, cantor_config):
        outcome = experiment_service.run_subcommand('beta', cantor_config)
        frame = read_exported_csv(outcome.artifacts[0])
        assert list(frame.columns) == ['q', 'beta_lo', 'beta_mid', 'beta_hi', 'alpha', 'f_alpha']
        assert frame['beta_mid'].to_numpy() == pytest.approx(CANTOR_H * (1 - frame['q'].to_numpy()), abs=1e-8)
        assert outcome.summary['success']

    def test_figure1_intersection(self, experiment_service, cantor_config):
        outcome = experiment_service.run_subcommand('figure1', cantor_config)
        samples, rows = (read_exported_csv(path) for path in outcome.artifacts[:2])
        assert samples['line_r2'].to_numpy() == pytest.approx(2 * samples['q'].to_numpy())
        row = rows.iloc[0]
        assert row['q_r'] == pytest.approx(CANTOR_H / (CANTOR_H + 2), abs=1e-6)
        assert row['line_at_qr'] == pytest.approx(row['beta_at_qr'], abs=1e-6)
        assert row['y_intercept'] == pytest.approx(CANTOR_H, abs=1e-6)

    def test_measure(self, experiment_service, cantor_config):
        outcome = experiment_service.run_subcommand('measure', cantor_config)
        cylinders, atoms, stability = (read_exported_csv(path) for path in outcome.artifacts)
        assert len(cylinders) == len(atoms) == 32
        assert atoms['weight'].sum() == pytest.approx(1.0)
        assert atoms['weight'].to_numpy() == pytest.approx([1 / 32] * 32)
        assert 'max_spread' in stability.columns

    def test_quantize(self, experiment_service, cantor_config):
        outcome = experiment_service.run_subcommand('quantize', cantor_config)
        names = [path.name for path in outcome.artifacts]
        assert names == ['error_curve.csv', 'dr_fit.csv', 'quantizer.csv']
        curve = read_exported_csv(outcome.artifacts[0])
        assert curve['n'].tolist() == [1, 2, 4, 8]
        assert curve['V'].is_monotonic_decreasing
        fit = read_exported_csv(outcome.artifacts[1])
        assert fit['status'].iloc[0] in ('ok', 'INSUFFICIENT_DATA_ERROR')
        centers = read_exported_csv(outcome.artifacts[2])
        assert centers.groupby('n').size().to_dict() == {1: 1, 2: 2, 4: 4, 8: 8}

    def test_verify_passes_on_cantor(self, experiment_service, cantor_config):
        outcome = experiment_service.run_subcommand('verify', cantor_config)
        assert outcome.exit_code == 0
        report = read_exported_csv(outcome.artifacts[0])
        assert report['passed'].all()
        suites = {check.split('[')[0] for check in report['check']}
        assert suites == {
            'system', 'hausdorff_dimension', 'gibbs', 'kappa', 'temperature_curve',
            'quantizer', 'antichain', 'antichain_measure_comparison',
        }

    def test_verify_failure_raises_after_export(self, experiment_service, cantor_config, monkeypatch):
        failing = VerificationReport(title='gibbs[cantor]', checks=[CheckResult(name='eta_bracket', passed=False)])
        monkeypatch.setattr(experiment_service.gibbs, 'gibbs_bracket_check', lambda surrogate, depth=None: failing)
        with pytest.raises(VerificationFailure) as excinfo:
            experiment_service.run_subcommand('verify', cantor_config)
        assert 'gibbs[cantor].eta_bracket' in excinfo.value.details['failed']
        report = pd.read_csv(excinfo.value.details['report'], comment='#')
        assert not report['passed'].all()

    def test_svg_output(self, experiment_service, tmp_path):
        pytest.importorskip('matplotlib')
        config = validate_config(cantor_document(tmp_path, svg=True))
        outcome = experiment_service.run_subcommand('beta', config)
        svg = outcome.artifacts[-1]
        assert svg.suffix == '.svg'
        assert '<svg' in svg.read_text()


class TestCommandLine:
    def write_config(self, tmp_path, **extra):
        path = tmp_path / 'cantor.json'
        path.write_text(json.dumps(cantor_document(tmp_path / 'from_file', **extra)))
        return path

    def test_dim_exit_zero(self, tmp_path):
        out = tmp_path / 'flags'
        code = commands.main(['dim', '--config', str(self.write_config(tmp_path)), '--out', str(out), '--depth', '8'])
        assert code == 0
        assert (out / 'dim.csv').exists()

    def test_config_required(self):
        with pytest.raises(SystemExit):
            commands.main(['dim'])

    def test_bad_json_exit_one(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"system": ')
        assert commands.main(['dim', '--config', str(path)]) == 1

    def test_missing_config_exit_one(self, tmp_path):
        assert commands.main(['dim', '--config', str(tmp_path / 'nope.json')]) == 1

    def test_cap_exit_three(self, tmp_path):
        document = cantor_document(tmp_path / 'out')
        document['system']['enumeration_cap'] = 4
        path = tmp_path / 'capped.json'
        path.write_text(json.dumps(document))
        assert commands.main(['dim', '--config', str(path)]) == 3

    def test_verify_failure_exit_two(self, tmp_path):
        class FailingService:
            def run_subcommand(self, name, config):
                raise VerificationFailure('1 of 1 checks failed for cantor', {'failed': 'x'})

        path = self.write_config(tmp_path)
        assert commands.main(['verify', '--config', str(path)], service=FailingService()) == 2
