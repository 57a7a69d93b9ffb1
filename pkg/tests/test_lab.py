"""
Tests for experiment configuration, drivers, report emission, the run
ledger and the lab subcommands
"""

import csv
import io
import json
import tempfile
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings

from zeronoise import __version__
from zeronoise.exceptions import ConfigError, LabError, ParameterError, StageError
from zeronoise.models import ExperimentRun
from zeronoise.services import ExperimentService, Report, ReportService, load_config
from zeronoise.services.config_service import ExperimentConfig, parse_config_text, with_overrides
from zeronoise.services.experiment_service import stage
from zeronoise.services.report_service import LabJSONEncoder
from zeronoise.tasks import compute_sweep_point
from zeronoise.utils import Verdict

EXPERIMENTS_DIR = Path(settings.BASE_DIR) / 'experiments'

QUICK_SWEEP = {
    'cells': '64',
    'eps_ladder': '0.1, 0.05',
    'quad_order': '3',
    'n_starts': '1',
    't_grid': '11',
}


def quick_config(experiment, **overrides):
    values = dict(QUICK_SWEEP)
    values.update(overrides)
    return load_config(overrides=values, experiment=experiment)


class TempDirMixin:

    def make_tmp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        return Path(tmp.name)


class ConfigParsingTests(SimpleTestCase):

    def test_values_are_typed(self):
        values = parse_config_text(
            'experiment = thmA_sweep\n'
            '# a comment line\n'
            'alpha = 0.7   # trailing comment\n'
            'cells = 1e3\n'
            'master_seed = 0x10\n'
            'eps_ladder = 0.05, 0.01\n'
            'arcs = 0.4:0.01, 0.0:1e-9\n'
            'record_runtime = yes\n'
        )
        self.assertEqual(values['alpha'], 0.7)
        self.assertEqual(values['cells'], 1000)
        self.assertEqual(values['master_seed'], 16)
        self.assertEqual(values['eps_ladder'], (0.05, 0.01))
        self.assertEqual(values['arcs'], ((0.4, 0.01), (0.0, 1e-9)))
        self.assertIs(values['record_runtime'], True)

    def test_malformed_line_names_its_position(self):
        with self.assertRaisesRegex(ConfigError, 'run.conf:2'):
            parse_config_text('alpha = 0.5\njust words\n', source='run.conf')

    def test_duplicate_and_unknown_keys(self):
        with self.assertRaises(ConfigError):
            parse_config_text('alpha = 0.5\nalpha = 0.6\n')
        with self.assertRaises(ConfigError):
            parse_config_text('bogus = 1\n')
        with self.assertRaises(ConfigError):
            parse_config_text('cells = 10.5\n')

    def test_shipped_files_load(self):
        expected = {
            'thm_a.conf': 'thmA_sweep',
            'thm_b.conf': 'thmB_sweep',
            'thm_c.conf': 'thmC_instability',
            'mixing.conf': 'mixing',
            'diagnostics.conf': 'diagnostics',
        }
        for name, experiment in expected.items():
            config = load_config(EXPERIMENTS_DIR / name, experiment=experiment)
            self.assertEqual(config.experiment, experiment)

    def test_file_and_request_must_agree(self):
        with self.assertRaises(ConfigError):
            load_config(EXPERIMENTS_DIR / 'thm_a.conf', experiment='mixing')

    def test_missing_file_and_experiment(self):
        with self.assertRaises(ConfigError):
            load_config('/nonexistent/lab.conf', experiment='mixing')
        with self.assertRaises(ConfigError):
            load_config(overrides={'alpha': '0.5'})

    def test_overrides_win_and_none_is_skipped(self):
        config = load_config(EXPERIMENTS_DIR / 'thm_a.conf', {'cells': '128', 'alpha': None}, 'thmA_sweep')
        self.assertEqual(config.cells, 128)
        self.assertEqual(config.alpha, 0.5)

    def test_ladder_validation(self):
        for ladder in ('', '0.01, 0.05', '0.05, -0.01', '0.05, 0.05'):
            with self.assertRaises(ConfigError):
                quick_config('thmA_sweep', eps_ladder=ladder)

    def test_range_validation(self):
        for key, value in (('alpha', '0'), ('cells', '4'), ('delta', '0.7'), ('workers', '-1'), ('master_seed', '-3')):
            with self.assertRaises(ConfigError):
                quick_config('thmB_sweep', **{key: value})

    def test_echo_leaves_out_execution_keys(self):
        config = quick_config('thmA_sweep', output_dir='/tmp/somewhere', workers='4')
        lines = config.echo_lines()
        self.assertIn('experiment = thmA_sweep', lines)
        self.assertIn('eps_ladder = 0.1, 0.05', lines)
        self.assertFalse(any(line.startswith(('output_dir', 'workers')) for line in lines))
        self.assertNotIn('workers', config.echo_dict())

    def test_dict_form_rebuilds_the_config(self):
        config = quick_config('mixing', arcs='0.4:0.01, 0.0:1.0')
        self.assertEqual(ExperimentConfig.from_dict(config.to_dict()), config)

    def test_with_overrides_revalidates(self):
        config = quick_config('thmA_sweep')
        self.assertEqual(with_overrides(config, cells=128).cells, 128)
        with self.assertRaises(ConfigError):
            with_overrides(config, cells=2)


class StageTests(SimpleTestCase):

    def test_lab_errors_name_the_stage(self):
        with self.assertRaises(StageError) as ctx:
            with stage('assembly'):
                raise ParameterError('bad cells')
        self.assertEqual(ctx.exception.stage, 'assembly')
        self.assertEqual(ctx.exception.exit_code, 2)

    def test_other_errors_pass_through(self):
        with self.assertRaises(KeyError):
            with stage('assembly'):
                raise KeyError('x')


class SweepDriverTests(SimpleTestCase):

    def setUp(self):
        self.service = ExperimentService(backend='local', workers=1)

    def test_thmA_rows_follow_the_ladder(self):
        report = self.service.run(quick_config('thmA_sweep', alpha='0.5'))
        self.assertEqual(report.eps, [0.1, 0.05])
        for row in report.rows:
            self.assertLessEqual(row['residual'], 1e-10)
            self.assertIsNotNone(row['mixture_t'])
            self.assertGreaterEqual(row['mixture_distance'], 0.0)
            self.assertLessEqual(row['w1_to_dirac'], 0.5)
        self.assertEqual(set(report.verdicts), {'mixture_distance_non_increasing', 'stationary_unique'})

    def test_thmA_needs_alpha_below_one(self):
        with self.assertRaises(ConfigError):
            self.service.run(quick_config('thmA_sweep', alpha='1.2'))

    def test_thmB_rows_have_no_srb_columns(self):
        report = self.service.run(quick_config('thmB_sweep', alpha='1.5'))
        self.assertEqual(report.column('w1_to_srb'), [None, None])
        self.assertEqual(report.column('mixture_t'), [None, None])
        self.assertIn('w1_to_dirac_halved', report.verdicts)
        self.assertIsNotNone(report.summary['w1_ratio_last_first'])

    def test_missed_halving_is_flagged_not_failed(self):
        report = self.service.run(quick_config('thmB_sweep', alpha='1.5', eps_ladder='0.1, 0.09'))
        self.assertEqual(report.verdicts['w1_to_dirac_halved'], Verdict.FLAGGED)
        self.assertGreater(report.summary['w1_ratio_last_first'], 0.5)

    def test_thmB_needs_alpha_at_least_one(self):
        with self.assertRaises(ConfigError):
            self.service.run(quick_config('thmB_sweep', alpha='0.5'))

    def test_unknown_backend(self):
        with self.assertRaises(ConfigError):
            ExperimentService(backend='threads')

    def test_celery_task_computes_one_point(self):
        config = quick_config('thmB_sweep', alpha='1.5')
        row = compute_sweep_point.apply(args=(config.to_dict(), 1)).get()
        self.assertEqual(row['eps'], 0.05)
        self.assertIsNone(row['w1_to_srb'])


class OtherDriverTests(SimpleTestCase):

    def setUp(self):
        self.service = ExperimentService(backend='local', workers=1)

    def test_mixing_flags_exhausted_arcs(self):
        config = quick_config('mixing', alpha='1', arcs='0.4:0.01, 0.0:1.0, 0.0:1e-9', n_max='1000')
        report = self.service.run(config)
        self.assertEqual(report.verdicts['arc_0'], Verdict.PASS)
        self.assertEqual(report.verdicts['arc_1'], Verdict.PASS)
        self.assertEqual(report.verdicts['arc_2'], Verdict.FLAGGED)
        self.assertEqual(report.verdict, Verdict.FLAGGED)
        self.assertEqual(report.rows[1]['covering_time'], 0)
        self.assertTrue(report.rows[2]['exhausted'])
        self.assertEqual(report.summary['covered'], 2)

    def test_mixing_keeps_a_trace_head_for_every_arc(self):
        config = quick_config('mixing', alpha='1', arcs='0.4:0.01, 0.0:1e-9, 0.3:0.0', n_max='1000')
        report = self.service.run(config)
        covered, exhausted, point = report.rows
        self.assertEqual(len(covered['lengths']), covered['covering_time'] + 1)
        self.assertEqual(covered['lengths'][-1], 1.0)
        self.assertFalse(covered['trace_truncated'])
        for row in (exhausted, point):
            self.assertEqual(len(row['lengths']), 256)
            self.assertTrue(row['trace_truncated'])
            self.assertEqual(row['lengths'][0], row['length'])
        self.assertGreater(exhausted['lengths'][-1], exhausted['lengths'][0])
        self.assertEqual(set(point['lengths']), {0.0})
        self.assertEqual(report.verdicts['arc_1'], Verdict.FLAGGED)
        self.assertEqual(report.verdicts['arc_2'], Verdict.FLAGGED)

    def test_mixing_needs_arcs(self):
        with self.assertRaises(ConfigError):
            self.service.run(quick_config('mixing', arcs=''))

    def test_mixing_rejects_bad_arcs(self):
        with self.assertRaises(ConfigError):
            self.service.run(quick_config('mixing', arcs='0.4:1.5'))

    def test_instability_report(self):
        config = quick_config(
            'thmC_instability', trials='20', n_max='20000', steps='200',
            n_orbits='4', burn_in='100', keep='50',
        )
        report = self.service.run(config)
        self.assertEqual(len(report.rows), 20)
        self.assertEqual(set(report.verdicts), {'escape', 'funnel', 'concentration', 'srb_contrast'})
        self.assertEqual(report.verdicts['funnel'], Verdict.PASS)
        band = report.summary['band']
        self.assertLess(band['s'], band['u'])
        self.assertLess(band['p_u'], band['p_s'])

    def test_instability_needs_alpha_below_one(self):
        with self.assertRaises(ConfigError):
            self.service.run(quick_config('thmC_instability', alpha='1.5'))

    def test_diagnostics_report(self):
        config = quick_config(
            'diagnostics', eps_ladder='0.05', block_max='2', n_omega='2', samples='2000',
        )
        report = self.service.run(config)
        self.assertEqual([row['block'] for row in report.rows], [1, 2])
        self.assertIn('semicontinuity', report.verdicts)
        self.assertEqual(report.verdicts['gap_positive'], Verdict.PASS)
        self.assertEqual(report.verdicts['partition_refines'], Verdict.PASS)
        self.assertGreater(report.summary['gap_beta'], 0.0)


class ReportEmissionTests(TempDirMixin, SimpleTestCase):

    def test_worker_count_does_not_change_outputs(self):
        service = ExperimentService(backend='local')
        first = service.run(quick_config('thmA_sweep', workers='1'))
        second = service.run(quick_config('thmA_sweep', workers='2'))

        root_a, root_b = self.make_tmp(), self.make_tmp()
        paths_a = ReportService(output_root=root_a).emit(first)
        paths_b = ReportService(output_root=root_b).emit(second)
        self.assertEqual([p.name for p in paths_a], ['thmA_sweep.csv', 'thmA_sweep.json'])
        for a, b in zip(paths_a, paths_b):
            self.assertEqual(a.read_bytes(), b.read_bytes())

    def test_csv_and_json_layout(self):
        config = quick_config('mixing', record_runtime='true')
        report = Report(
            experiment='mixing', config=config, columns=('arc', 'covering_time'),
            rows=[{'arc': 0, 'covering_time': None, 'runtime': 0.5}],
            verdicts={'arc_0': Verdict.FLAGGED},
        )
        reports = ReportService(output_root=self.make_tmp())

        lines = reports.render_csv(report).splitlines()
        self.assertEqual(lines[0], f'# zeronoise {__version__}')
        self.assertIn('# experiment = mixing', lines)
        self.assertEqual(lines[-2], 'arc,covering_time,runtime')
        self.assertEqual(lines[-1], '0,,0.5')

        document = json.loads(reports.render_json(report))
        self.assertEqual(document['verdict'], 'flagged')
        self.assertEqual(document['columns'], ['arc', 'covering_time', 'runtime'])
        self.assertEqual(document['master_seed'], 0)
        self.assertNotIn('output_dir', document['config'])

    def test_json_floats_read_back_exactly(self):
        import numpy as np

        values = [0.1 + 0.2, 1.0 / 3.0, float(np.float64(2.0) / 3.0), 1e-300, 123456.789e10]
        report = Report(
            experiment='mixing', config=quick_config('mixing'), columns=('arc', 'length'),
            rows=[{'arc': i, 'length': v} for i, v in enumerate(values)],
            summary={'ratio': np.float64(values[1])},
        )
        reports = ReportService(output_root=self.make_tmp())
        document = json.loads(reports.render_json(report))
        self.assertEqual([row['length'] for row in document['rows']], values)
        self.assertEqual(document['summary']['ratio'], values[1])

        csv_rows = list(csv.reader(reports.render_csv(report).splitlines()[-len(values):]))
        self.assertEqual([float(row[1]) for row in csv_rows], values)

    def test_runtime_hidden_by_default(self):
        config = quick_config('mixing')
        report = Report(experiment='mixing', config=config, columns=('arc',), rows=[{'arc': 0, 'runtime': 1.0}])
        self.assertEqual(report.emitted_rows(), [{'arc': 0}])

    @override_settings(LAB_OUT='/tmp/lab-default-root')
    def test_default_directory(self):
        config = quick_config('mixing')
        self.assertEqual(ReportService().directory_for(config), Path('/tmp/lab-default-root') / 'mixing')
        self.assertEqual(ReportService().directory_for(with_overrides(config, output_dir='/x')), Path('/x'))

    def test_unwritable_directory(self):
        blocker = self.make_tmp() / 'blocker'
        blocker.write_text('not a directory')
        report = Report(experiment='mixing', config=quick_config('mixing'), columns=('arc',))
        with self.assertRaises(LabError):
            ReportService(output_root=blocker).emit(report)

    def test_encoder_handles_numpy(self):
        import numpy as np

        text = json.dumps({'a': np.arange(2), 'b': np.bool_(True), 'c': np.int64(3)}, cls=LabJSONEncoder, sort_keys=True)
        self.assertEqual(text, '{"a": [0, 1], "b": true, "c": 3}')


class ExperimentCommandTests(TempDirMixin, TestCase):

    def call(self, *args):
        out, err = io.StringIO(), io.StringIO()
        call_command(*args, stdout=out, stderr=err)
        return out.getvalue()

    def test_mixing_run_is_recorded(self):
        tmp = self.make_tmp()
        output = self.call('mixing', '--alpha', '1', '--arcs', '0.4:0.01', '--n-max', '1000', '--out', str(tmp))
        self.assertIn('mixing: pass', output)
        self.assertTrue((tmp / 'mixing.csv').exists())
        self.assertTrue((tmp / 'mixing.json').exists())

        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, 'completed')
        self.assertEqual(run.verdict, 'pass')
        self.assertEqual(run.config['alpha'], 1.0)
        self.assertEqual(len(run.output_files), 2)
        self.assertIsNotNone(run.completed_at)

        listing = self.call('runs')
        self.assertIn(str(run.id), listing)
        detail = self.call('runs', str(run.id))
        self.assertIn('Verdict: pass', detail)
        self.assertIn(str(tmp), detail)

    def test_no_record(self):
        tmp = self.make_tmp()
        self.call('mixing', '--alpha', '1', '--arcs', '0.4:0.01', '--n-max', '1000', '--out', str(tmp), '--no-record')
        self.assertFalse(ExperimentRun.objects.exists())

    def test_bad_parameter_exits_with_two(self):
        tmp = self.make_tmp()
        with self.assertRaises(CommandError) as ctx:
            self.call('sweep-a', '--alpha', '1.5', '--set', 'cells=64', '--out', str(tmp))
        self.assertEqual(ctx.exception.returncode, 2)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, 'failed')
        self.assertIn('alpha', run.error_message)

    def test_unknown_key_exits_with_two(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('sweep-b', '--set', 'bogus=1')
        self.assertEqual(ctx.exception.returncode, 2)
        with self.assertRaises(CommandError) as ctx:
            self.call('sweep-b', '--set', 'cells')
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertFalse(ExperimentRun.objects.exists())

    def test_failed_verdict_exits_with_one(self):
        tmp = self.make_tmp()
        with self.assertRaises(CommandError) as ctx:
            self.call(
                'instability', '--trials', '4', '--n-max', '1', '--cells', '64', '--out', str(tmp),
                '--set', 'n_orbits=2', '--set', 'burn_in=10', '--set', 'keep=10', '--set', 'steps=100',
            )
        self.assertEqual(ctx.exception.returncode, 1)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, 'completed')
        self.assertEqual(run.verdict, 'fail')
        self.assertTrue((tmp / 'thmC_instability.json').exists())

    def test_every_config_key_has_a_flag(self):
        tmp = self.make_tmp()
        self.call(
            'mixing', '--alpha', '1', '--arcs', '0.4:0.01', '--n-max', '1000', '--delta', '0.1',
            '--t-grid', '11', '--quad-order', '3', '--master-seed', '7', '--output-dir', str(tmp),
        )
        run = ExperimentRun.objects.get()
        self.assertEqual(run.config['delta'], 0.1)
        self.assertEqual(run.config['t_grid'], 11)
        self.assertEqual(run.config['quad_order'], 3)
        self.assertEqual(run.master_seed, '7')
        self.assertTrue((tmp / 'mixing.json').exists())

    def test_bad_flag_value_exits_with_two(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('sweep-b', '--n-starts', 'many', '--no-record')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_unknown_run(self):
        for run_id in ('00000000-0000-0000-0000-000000000000', 'not-a-uuid'):
            with self.assertRaises(CommandError) as ctx:
                self.call('runs', run_id)
            self.assertEqual(ctx.exception.returncode, 2)

    def test_empty_ledger(self):
        self.assertIn('No runs recorded yet.', self.call('runs'))


class OperationCommandTests(TempDirMixin, SimpleTestCase):

    def call(self, *args):
        out, err = io.StringIO(), io.StringIO()
        call_command(*args, stdout=out, stderr=err)
        return out.getvalue()

    def test_orbit_csv(self):
        rows = list(csv.reader(io.StringIO(self.call('orbit', '--alpha', '1', '--steps', '3'))))
        self.assertEqual(rows[0], ['step', 'state', 'draw', 'log_deriv'])
        self.assertEqual(rows[1], ['0', '0.25', '', ''])
        self.assertAlmostEqual(float(rows[2][1]), 0.375, places=15)
        self.assertAlmostEqual(float(rows[4][1]), 0.419921875, places=14)
        self.assertEqual(len(rows), 5)

    def test_orbit_bad_kernel_exits_with_two(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('orbit', '--noise', 'gauss(0.1)')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_escape_csv(self):
        rows = list(csv.reader(io.StringIO(self.call('escape', '--trials', '5', '--nmax', '1000'))))
        self.assertEqual(rows[0], ['trial', 'x0', 'escape_step', 'escaped'])
        self.assertEqual(len(rows), 6)
        self.assertIn(rows[1][3], ('true', 'false'))

    def test_ulam_and_measure(self):
        tmp = self.make_tmp()
        srb, noisy = tmp / 'srb.csv', tmp / 'noisy.csv'
        self.call('ulam', '--mode', 'deterministic', '--cells', '64', '--out', str(srb))
        self.call('ulam', '--eps', '0.05', '--cells', '64', '--n-starts', '1', '--out', str(noisy))

        tv = json.loads(self.call('measure', '--a', str(srb), '--b', str(noisy), '--metric', 'tv'))
        self.assertGreaterEqual(tv['value'], 0.0)
        self.assertLessEqual(tv['value'], 1.0)
        w1 = json.loads(self.call('measure', '--a', str(srb), '--b', str(srb)))
        self.assertAlmostEqual(w1['value'], 0.0, places=12)
        mass = json.loads(self.call('measure', '--a', str(srb), '--metric', 'mass', '--delta', '0.5'))
        self.assertAlmostEqual(mass['value'], 1.0, places=9)

    def test_ulam_to_stdout(self):
        lines = self.call('ulam', '--eps', '0', '--cells', '16').splitlines()
        self.assertEqual(lines[0], 'cell_index,cell_left,weight,density')
        self.assertEqual(len(lines), 17)

    def test_ulam_point_kernel_in_parametric_mode(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('ulam', '--mode', 'parametric', '--eps', '0', '--cells', '16')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_measure_needs_two_files(self):
        tmp = self.make_tmp()
        path = tmp / 'srb.csv'
        self.call('ulam', '--eps', '0', '--cells', '16', '--out', str(path))
        with self.assertRaises(CommandError) as ctx:
            self.call('measure', '--a', str(path), '--metric', 'w1')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_diagnose_gap_of_doubling(self):
        document = json.loads(self.call(
            'diagnose', '--what', 'gap', '--map', 'doubling', '--eps', '0', '--delta0', '0.05', '--rho0', '0.2'
        ))
        self.assertEqual(document['what'], 'gap')
        self.assertEqual(document['inputs']['map'], 'doubling')
        self.assertAlmostEqual(document['result']['beta'], 0.05, delta=1e-6)

    def test_diagnose_partition_of_doubling(self):
        document = json.loads(self.call('diagnose', '--what', 'partition', '--map', 'doubling', '--eps', '0', '--n', '3'))
        self.assertEqual(document['result']['diameter'], 1.0 / 16.0)

    def test_measure_needs_a(self):
        with self.assertRaises(CommandError):
            self.call('measure', '--metric', 'mass')

    def test_diagnose_needs_what(self):
        with self.assertRaises(CommandError):
            self.call('diagnose', '--map', 'doubling')

    def test_diagnose_shares_config_flags(self):
        document = json.loads(self.call(
            'diagnose', '--what', 'partition', '--map', 'doubling', '--eps', '0', '--n', '2',
            '--k-cells', '4', '--seed', '5',
        ))
        self.assertEqual(document['inputs']['k_cells'], 4)
        self.assertEqual(document['inputs']['seed'], 5)
        self.assertEqual(document['result']['diameter'], 1.0 / 16.0)

    def test_diagnose_nondegeneracy(self):
        document = json.loads(self.call('diagnose', '--what', 'nondegeneracy', '--mode', 'parametric', '--eps', '0.1'))
        self.assertFalse(document['result']['absolutely_continuous'])
        self.assertEqual(document['result']['degenerate_points'], [0.0, 0.5])

    def test_diagnose_band(self):
        document = json.loads(self.call('diagnose', '--what', 'band', '--s', '0.9'))
        result = document['result']
        self.assertGreater(result['u'], 0.9)
        self.assertGreater(result['beta1'], 0.0)
        self.assertLess(result['gamma'], 1.0)

    def test_diagnose_map_needs_additive_mode(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('diagnose', '--what', 'gap', '--mode', 'parametric', '--map', 'doubling', '--eps', '0.1')
        self.assertEqual(ctx.exception.returncode, 2)


class LedgerDisabledTests(SimpleTestCase):

    def test_ledger_disabled_needs_no_database(self):
        from zeronoise.services.ledger_service import RunLedger

        ledger = RunLedger(enabled=False)
        run = ledger.start(quick_config('mixing'))
        self.assertIsNone(run)
        ledger.complete(run, None)
        ledger.fail(run, RuntimeError('ignored'))
