"""
Run ledger: one ExperimentRun row per theorem-level run

The ledger is bookkeeping only. Database problems are logged as warnings
and never stop an experiment.
"""

import json
import logging

from django.db import DatabaseError
from django.utils import timezone

from ..models import ExperimentRun
from .report_service import LabJSONEncoder

logger = logging.getLogger(__name__)


def _plain(data):
    """Round-trip through JSON so numpy values and Verdicts become plain types"""
    return json.loads(json.dumps(data, cls=LabJSONEncoder))


class RunLedger:
    """Records run lifecycle: pending -> running -> completed | failed"""

    def __init__(self, enabled=True):
        self.enabled = enabled

    def start(self, config, output_dir=''):
        """
        Create a running ExperimentRun

        Returns:
            ExperimentRun, or None when the ledger is disabled or unavailable
        """
        if not self.enabled:
            return None
        try:
            run = ExperimentRun.objects.create(
                experiment=config.experiment,
                status='running',
                config=_plain(config.to_dict()),
                master_seed=str(config.master_seed),
                output_dir=str(output_dir),
            )
        except DatabaseError as e:
            logger.warning(f"Run ledger unavailable, continuing without it: {str(e)}")
            return None
        logger.info(f"Ledger run {run.id} started for {config.experiment}")
        return run

    def complete(self, run, report, paths=()):
        if run is None:
            return
        try:
            run.status = 'completed'
            run.verdict = report.verdict.value
            run.summary = _plain(report.summary)
            run.output_files = [str(p) for p in paths]
            run.completed_at = timezone.now()
            run.save()
        except DatabaseError as e:
            logger.warning(f"Could not record completion of run {run.id}: {str(e)}")
            return
        logger.info(f"Ledger run {run.id} completed with verdict {run.verdict}")

    def fail(self, run, error):
        if run is None:
            return
        try:
            run.status = 'failed'
            run.error_message = str(error)
            run.completed_at = timezone.now()
            run.save()
        except DatabaseError as e:
            logger.warning(f"Could not record failure of run {run.id}: {str(e)}")
            return
        logger.info(f"Ledger run {run.id} marked failed")
