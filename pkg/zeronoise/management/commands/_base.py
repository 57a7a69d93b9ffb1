"""
Shared plumbing for lab subcommands

Lab errors become CommandError with the matching exit code:
2 for configuration or parameter problems, 3 for numerical ones, and 1 when
an experiment ran but one of its verdicts failed.
"""

import io
import json

from django.core.management.base import BaseCommand, CommandError

from zeronoise.exceptions import ConfigError, LabError
from zeronoise.perturbation import Mode, RandomSystem, interval_kernel, parse_noise, point_kernel, uniform_kernel
from zeronoise.services import ExperimentService, ReportService, load_config
from zeronoise.services.config_service import PARSERS
from zeronoise.services.report_service import LabJSONEncoder
from zeronoise.services.ledger_service import RunLedger
from zeronoise.utils import Verdict

EXIT_VERDICT_FAILED = 1


def build_system(mode, alpha, eps=None, noise=None):
    """
    RandomSystem for the single-operation subcommands

    An explicit --noise wins. Otherwise additive noise is uniform(eps) and
    parametric noise is interval(1 - eps, 1); eps = 0 gives the point kernel
    at the unperturbed parameter.
    """
    mode = Mode(mode)
    if noise:
        kernel = parse_noise(noise)
    elif eps is None:
        raise ConfigError('Give --eps or --noise')
    elif eps == 0:
        kernel = point_kernel(0.0 if mode is Mode.ADDITIVE else 1.0)
    elif mode is Mode.ADDITIVE:
        kernel = uniform_kernel(eps)
    else:
        kernel = interval_kernel(1.0 - eps, 1.0)
    return RandomSystem(mode, kernel, alpha)


class LabCommand(BaseCommand):
    """BaseCommand that maps the lab exception hierarchy onto exit codes"""

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except CommandError:
            raise
        except LabError as e:
            raise CommandError(str(e), returncode=e.exit_code)

    def run(self, **options):
        raise NotImplementedError

    def write_text(self, text):
        self.stdout.write(text, ending='')

    def write_json(self, document):
        self.write_text(json.dumps(document, cls=LabJSONEncoder, sort_keys=True, indent=2) + '\n')

    def write_file(self, path, text):
        try:
            with open(path, 'w', encoding='utf-8', newline='') as f:
                f.write(text)
        except OSError as e:
            raise LabError(f'Cannot write {path}: {e}')

    def write_csv(self, writer_fn, *args):
        buffer = io.StringIO()
        writer_fn(*args, buffer)
        self.write_text(buffer.getvalue())


class ExperimentCommand(LabCommand):
    """
    Runs one theorem-level experiment from a config file plus overrides

    Every config key has an override flag, the key with hyphens
    (--eps-ladder, --n-max, ...). --set KEY=VALUE reaches the same keys.
    """

    experiment = None

    # extra spellings for a few keys
    FLAG_ALIASES = {
        'master_seed': ('--seed',),
        'output_dir': ('--out',),
    }
    FLAG_HELP = {
        'eps_ladder': 'comma separated, strictly decreasing',
        'arcs': 'e.g. "0.4:0.01, 0.0:1e-9"',
        'workers': '0 = LAB_THREADS',
    }

    @staticmethod
    def config_flag(key):
        return '--' + key.replace('_', '-')

    def add_arguments(self, parser):
        parser.add_argument('--config', type=str, help='Experiment file (key = value lines)')
        for key in PARSERS:
            if key == 'experiment':
                continue
            detail = self.FLAG_HELP.get(key)
            parser.add_argument(
                self.config_flag(key),
                *self.FLAG_ALIASES.get(key, ()),
                dest=key,
                type=str,
                metavar='VALUE',
                help=f'Override {key}' + (f' ({detail})' if detail else ''),
            )
        parser.add_argument(
            '--set',
            action='append',
            default=[],
            metavar='KEY=VALUE',
            help='Override any config key; may be repeated'
        )
        parser.add_argument(
            '--backend',
            choices=['local', 'celery'],
            help='Where sweep points run (default: LAB_BACKEND)'
        )
        parser.add_argument(
            '--no-record',
            action='store_true',
            help='Do not write a run ledger entry'
        )

    def overrides(self, options):
        values = {key: options.get(key) for key in PARSERS if key != 'experiment'}
        for item in options.get('set') or []:
            key, sep, value = item.partition('=')
            if not sep:
                raise CommandError(f'--set expects KEY=VALUE, got {item!r}', returncode=2)
            values[key.strip()] = value
        return values

    def run(self, **options):
        config = load_config(options.get('config'), self.overrides(options), experiment=self.experiment)
        service = ExperimentService(backend=options.get('backend'))
        reports = ReportService()
        ledger = RunLedger(enabled=not options.get('no_record'))

        run = ledger.start(config, output_dir=reports.directory_for(config))
        try:
            report = service.run(config)
            paths = reports.emit(report)
        except LabError as e:
            ledger.fail(run, e)
            raise
        ledger.complete(run, report, paths)

        for path in paths:
            self.stdout.write(f'Wrote {path}')
        for name, verdict in report.verdicts.items():
            style = {
                Verdict.PASS: self.style.SUCCESS,
                Verdict.FLAGGED: self.style.WARNING,
                Verdict.FAIL: self.style.ERROR,
            }[Verdict(verdict)]
            self.stdout.write(style(f'{name}: {Verdict(verdict).value}'))

        if report.verdict == Verdict.FAIL:
            raise CommandError(f'{config.experiment}: a verdict failed', returncode=EXIT_VERDICT_FAILED)
        self.stdout.write(self.style.SUCCESS(f'{config.experiment}: {report.verdict.value}'))
