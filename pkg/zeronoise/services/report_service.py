"""
Report types and their CSV/JSON emission
"""

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.serializers.json import DjangoJSONEncoder

from .. import __version__
from ..exceptions import LabError
from ..utils import Verdict, format_float

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    'eps', 'w1_to_dirac', 'w1_to_srb', 'mass_near_zero',
    'mixture_t', 'mixture_distance', 'residual', 'multiplicity',
)
RUNTIME_COLUMN = 'runtime'


class LabJSONEncoder(DjangoJSONEncoder):
    """DjangoJSONEncoder that also understands numpy scalars and arrays"""

    def default(self, o):
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


@dataclass
class Report:
    """
    Outcome of one experiment

    rows are dicts keyed by `columns`; a `runtime` entry may be present in
    memory and is only emitted when the config records runtimes.
    """

    experiment: str
    config: object
    columns: tuple
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return Verdict.combine(self.verdicts.values())

    @property
    def emitted_columns(self):
        if self.config.record_runtime and RUNTIME_COLUMN not in self.columns:
            return tuple(self.columns) + (RUNTIME_COLUMN,)
        return tuple(self.columns)

    def emitted_rows(self):
        columns = self.emitted_columns
        return [{c: row.get(c) for c in columns} for row in self.rows]


@dataclass
class SweepReport(Report):
    """One row per ladder entry, in ladder order"""

    columns: tuple = SWEEP_COLUMNS

    @property
    def eps(self):
        return [row['eps'] for row in self.rows]

    def column(self, name):
        return [row[name] for row in self.rows]


class ReportService:
    """Writes reports as CSV plus a JSON summary"""

    def __init__(self, output_root=None):
        self.output_root = Path(output_root or settings.LAB_OUT)

    def directory_for(self, config):
        if config.output_dir:
            return Path(config.output_dir)
        return self.output_root / config.experiment

    def render_csv(self, report):
        """
        CSV text: `# key = value` config echo lines, then the header row
        """
        buffer = io.StringIO()
        buffer.write(f"# zeronoise {__version__}\n")
        for line in report.config.echo_lines():
            buffer.write(f"# {line}\n")
        writer = csv.writer(buffer, lineterminator='\n')
        columns = report.emitted_columns
        writer.writerow(columns)
        for row in report.emitted_rows():
            writer.writerow([format_float(row[c]) for c in columns])
        return buffer.getvalue()

    def render_json(self, report):
        """
        JSON text with the config echo, rows, summary and verdicts

        Floats use the shortest repr that reads back to the same double, so
        JSON values carry the same bits as the 17-digit CSV fields.
        """
        document = {
            'experiment': report.experiment,
            'version': __version__,
            'master_seed': report.config.master_seed,
            'config': report.config.echo_dict(),
            'columns': list(report.emitted_columns),
            'rows': report.emitted_rows(),
            'summary': report.summary,
            'verdicts': {name: Verdict(v).value for name, v in report.verdicts.items()},
            'verdict': report.verdict.value,
        }
        return json.dumps(document, cls=LabJSONEncoder, sort_keys=True, indent=2) + '\n'

    def emit(self, report, formats=('csv', 'json')):
        """
        Write the report into its output directory

        Args:
            report: Report to write
            formats: Any of 'csv', 'json'

        Returns:
            List of written paths

        Raises:
            LabError: the directory or a file could not be written
        """
        directory = self.directory_for(report.config)
        renderers = {'csv': self.render_csv, 'json': self.render_json}
        paths = []
        for fmt in formats:
            if fmt not in renderers:
                raise LabError(f"Unknown report format {fmt!r}")
            path = directory / f"{report.experiment}.{fmt}"
            try:
                directory.mkdir(parents=True, exist_ok=True)
                with open(path, 'w', encoding='utf-8', newline='') as f:
                    f.write(renderers[fmt](report))
            except OSError as e:
                raise LabError(f"Cannot write report {path}: {e}")
            paths.append(path)
            logger.info(f"Wrote {fmt} report to {path}")
        return paths
