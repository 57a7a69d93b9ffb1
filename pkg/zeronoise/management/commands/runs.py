from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError
from django.db import DatabaseError

from zeronoise.models import ExperimentRun


class Command(BaseCommand):
    help = 'List recorded experiment runs, or show one'

    def add_arguments(self, parser):
        parser.add_argument('run_id', type=str, nargs='?', help='ID of the run to show')
        parser.add_argument('--limit', type=int, default=20, help='Runs to list (default: 20)')

    def handle(self, *args, **options):
        try:
            if options['run_id']:
                self.show(options['run_id'])
            else:
                self.list_runs(options['limit'])
        except DatabaseError as e:
            raise CommandError(f'Run ledger unavailable (did you run migrate?): {e}', returncode=2)

    def list_runs(self, limit):
        runs = ExperimentRun.objects.all()[:limit]
        if not runs:
            self.stdout.write('No runs recorded yet.')
            return
        for run in runs:
            verdict = run.verdict or '-'
            self.stdout.write(f'{run.id}  {run.created_at:%Y-%m-%d %H:%M:%S}  {run.experiment:<17} {run.status:<10} {verdict}')

    def show(self, run_id):
        try:
            run = ExperimentRun.objects.get(id=run_id)
        except (ExperimentRun.DoesNotExist, ValidationError):
            raise CommandError(f'Run not found: {run_id}', returncode=2)

        self.stdout.write(self.style.SUCCESS(f'Run ID: {run.id}'))
        self.stdout.write(f'Experiment: {run.experiment}')
        self.stdout.write(f'Status: {run.status}')
        self.stdout.write(f'Master seed: {run.master_seed}')
        self.stdout.write(f'Created: {run.created_at}')
        if run.completed_at:
            self.stdout.write(f'Completed: {run.completed_at}')
        if run.output_dir:
            self.stdout.write(f'Output: {run.output_dir}')
        for path in run.output_files:
            self.stdout.write(f'  {path}')

        if run.error_message:
            self.stdout.write(self.style.ERROR(f'Error: {run.error_message}'))
        if run.verdict == 'pass':
            self.stdout.write(self.style.SUCCESS(f'Verdict: {run.verdict}'))
        elif run.verdict:
            self.stdout.write(self.style.WARNING(f'Verdict: {run.verdict}'))
