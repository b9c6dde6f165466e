import logging

import pandas as pd
import pytest

from core.base.repository import BulkRepository
from core.cache import InMemoryCacheService
from core.error_handling import EXIT_CONFIG_ERROR, EXIT_RESOURCE_CAP, EXIT_VERIFY_FAILURE, ErrorHandler
from core.exceptions import (
    ConfigurationError,
    EnumerationCapError,
    SaturatedCurveError,
    ValidationError,
    VerificationFailure,
)
from core.export import CsvExportService, config_hash, read_exported_csv
from core.reports import CheckResult, VerificationReport


class TestErrorHandler:
    @pytest.mark.parametrize('exception, code', [
        (ConfigurationError('bad field'), EXIT_CONFIG_ERROR),
        (SaturatedCurveError('V = 0'), EXIT_CONFIG_ERROR),
        (VerificationFailure('3 checks failed'), EXIT_VERIFY_FAILURE),
        (EnumerationCapError('too many words'), EXIT_RESOURCE_CAP),
    ])
    def test_exit_codes(self, exception, code):
        assert ErrorHandler().handle(exception) == code

    def test_unexpected_exception_logs_traceback(self, caplog):
        with caplog.at_level(logging.ERROR, logger='core'):
            code = ErrorHandler().handle(RuntimeError('boom'), {'subcommand': 'dim'})
        assert code == EXIT_CONFIG_ERROR
        assert 'Unexpected exception: boom' in caplog.text
        assert 'subcommand: dim' in caplog.text

    def test_error_record(self):
        record = ErrorHandler().create_error_record('id', 'msg', 'CONFIG_ERROR', 1, {'loc': 'system.ratios'})
        assert record['details'] == {'loc': 'system.ratios'}
        assert ConfigurationError('x').to_dict()['error_type'] == 'CONFIG_ERROR'


class TestReports:
    def test_summary_and_failures(self):
        report = VerificationReport(title='suite')
        report.add(CheckResult(name='a', passed=True))
        report.add(CheckResult(name='b', passed=False, witness='1.2'))
        assert not report.passed
        assert [c.name for c in report.failures] == ['b']
        assert report.summary() == {'title': 'suite', 'total': 2, 'passed': 1, 'failed': 1, 'success': False}

    def test_merge_prefixes_names(self):
        inner = VerificationReport(title='system[cantor]', checks=[CheckResult(name='nesting', passed=True)])
        outer = VerificationReport(title='all')
        outer.merge(inner)
        assert outer.get('system[cantor].nesting').passed

    def test_frame(self):
        report = VerificationReport(title='t', checks=[CheckResult(name='a', passed=True, worst=0.5)])
        frame = report.to_frame()
        assert frame.loc[0, 'check'] == 'a'
        assert frame.loc[0, 'worst'] == 0.5


class TestExport:
    def test_header_and_round_trip(self, tmp_path):
        service = CsvExportService(tmp_path, provenance=config_hash({'depth': 10}))
        frame = pd.DataFrame({'q': [0.0, 0.5], 'beta': [0.6309297535714574, 0.3154648767857287]})
        path = service.export(frame, 'curve')

        lines = path.read_text().splitlines()
        assert lines[0].startswith('# quantdim ')
        assert lines[0].endswith(f"config={config_hash({'depth': 10})}")
        assert lines[1] == 'q,beta'
        pd.testing.assert_frame_equal(read_exported_csv(path), frame)

    def test_rendering_is_deterministic(self, tmp_path):
        service = CsvExportService(tmp_path, provenance='abc')
        frame = pd.DataFrame({'x': [1 / 3, 2 / 3]})
        assert service.render(frame) == service.render(frame.copy())

    def test_config_hash_ignores_key_order(self):
        assert config_hash({'a': 1, 'b': 2}) == config_hash({'b': 2, 'a': 1})


class TestStorage:
    def test_repository_is_write_once(self):
        repository = BulkRepository()
        repository.bulk_create({2: 'b', 1: 'a'})
        assert repository.get_all() == ['a', 'b']
        with pytest.raises(ValidationError):
            repository.create(1, 'again')
        assert repository.count() == 2

    def test_cache(self):
        cache = InMemoryCacheService()
        cache.set(('atlas', 3), 'value')
        assert cache.get(('atlas', 3)) == 'value'
        assert cache.get(('atlas', 4)) is None
