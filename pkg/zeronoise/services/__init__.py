"""
Services for the zero-noise laboratory

Configuration: flat experiment files to ExperimentConfig
Experiments: theorem-level drivers producing reports
Reports: CSV and JSON emission
Ledger: run bookkeeping in the database (import ledger_service directly,
  it needs the app registry)
"""

from .config_service import ExperimentConfig, load_config
from .experiment_service import ExperimentService
from .report_service import Report, ReportService, SweepReport

__all__ = [
    'ExperimentConfig',
    'load_config',
    'ExperimentService',
    'Report',
    'ReportService',
    'SweepReport',
]
