"""
Experiment configuration: flat `key = value` files plus command-line overrides
"""

import logging
from dataclasses import dataclass, fields, replace

from ..exceptions import ConfigError
from ..sampling import SeedPolicy

logger = logging.getLogger(__name__)

EXPERIMENTS = ('thmA_sweep', 'thmB_sweep', 'thmC_instability', 'mixing', 'diagnostics')
# where and how a run executes; not part of the experiment echo
EXECUTION_KEYS = ('output_dir', 'workers')


def _parse_int(text):
    value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _parse_seed(text):
    text = str(text).strip()
    return int(text, 0) if text.lower().startswith('0x') else _parse_int(text)


def _parse_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _parse_floats(text):
    return tuple(float(part) for part in str(text).split(',') if part.strip())


def _parse_arcs(text):
    arcs = []
    for part in str(text).split(','):
        if not part.strip():
            continue
        start, sep, length = part.partition(':')
        if not sep:
            raise ValueError(f"arc {part.strip()!r} must be written start:length")
        arcs.append((float(start), float(length)))
    return tuple(arcs)


def _format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ', '.join(f"{a!r}:{b!r}" for a, b in value)
        return ', '.join(repr(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Resolved experiment configuration

    Field order is the order keys are echoed into output headers.
    """

    experiment: str
    alpha: float = 0.5
    eps_ladder: tuple = (0.05, 0.02, 0.01, 0.005)
    cells: int = 4096
    quad_order: int = 5
    tol: float = 1e-10
    max_iter: int = 1_000_000
    n_starts: int = 3
    t_grid: int = 101
    delta: float = 0.05
    master_seed: int = 0
    n_orbits: int = 1000
    burn_in: int = 10_000
    keep: int = 1000
    s: float = 0.9
    trials: int = 1000
    n_max: int = 1_000_000
    steps: int = 10_000
    arcs: tuple = ((0.4, 0.01),)
    k_cells: int = 2
    block_max: int = 8
    n_omega: int = 32
    samples: int = 100_000
    delta0: float = 0.1
    rho0: float = 0.25
    noise: str = ''
    output_dir: str = ''
    workers: int = 0
    record_runtime: bool = False

    @property
    def seeds(self):
        return SeedPolicy(self.master_seed)

    def to_dict(self):
        """JSON-ready mapping in field order"""
        data = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == 'arcs':
                value = [list(arc) for arc in value]
            elif isinstance(value, tuple):
                value = list(value)
            data[f.name] = value
        return data

    @classmethod
    def from_dict(cls, data):
        values = dict(data)
        if 'eps_ladder' in values:
            values['eps_ladder'] = tuple(float(e) for e in values['eps_ladder'])
        if 'arcs' in values:
            values['arcs'] = tuple((float(a), float(b)) for a, b in values['arcs'])
        return cls(**values)

    def echo_dict(self):
        """to_dict() without the execution keys"""
        return {k: v for k, v in self.to_dict().items() if k not in EXECUTION_KEYS}

    def echo_lines(self):
        """`key = value` lines reproducing this config, execution keys excluded"""
        return [
            f"{f.name} = {_format_value(getattr(self, f.name))}"
            for f in fields(self) if f.name not in EXECUTION_KEYS
        ]

    def validate(self):
        """
        Check ranges shared by all experiments

        Raises:
            ConfigError: first problem found
        """
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"Unknown experiment {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        if self.experiment in ('thmA_sweep', 'thmB_sweep'):
            ladder = self.eps_ladder
            if not ladder:
                raise ConfigError("eps_ladder is empty")
            if any(e <= 0 for e in ladder):
                raise ConfigError(f"eps_ladder must be positive, got {list(ladder)}")
            if any(b >= a for a, b in zip(ladder, ladder[1:])):
                raise ConfigError(f"eps_ladder must be strictly decreasing, got {list(ladder)}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.cells < 8:
            raise ConfigError(f"cells must be >= 8, got {self.cells}")
        if not 0 < self.delta <= 0.5:
            raise ConfigError(f"delta must lie in (0, 1/2], got {self.delta}")
        if self.workers < 0:
            raise ConfigError(f"workers must be >= 0, got {self.workers}")
        try:
            self.seeds
        except ValueError as e:
            raise ConfigError(str(e))
        return self


PARSERS = {
    'experiment': str,
    'alpha': float,
    'eps_ladder': _parse_floats,
    'cells': _parse_int,
    'quad_order': _parse_int,
    'tol': float,
    'max_iter': _parse_int,
    'n_starts': _parse_int,
    't_grid': _parse_int,
    'delta': float,
    'master_seed': _parse_seed,
    'n_orbits': _parse_int,
    'burn_in': _parse_int,
    'keep': _parse_int,
    's': float,
    'trials': _parse_int,
    'n_max': _parse_int,
    'steps': _parse_int,
    'arcs': _parse_arcs,
    'k_cells': _parse_int,
    'block_max': _parse_int,
    'n_omega': _parse_int,
    'samples': _parse_int,
    'delta0': float,
    'rho0': float,
    'noise': str,
    'output_dir': str,
    'workers': _parse_int,
    'record_runtime': _parse_bool,
}


def parse_value(key, raw):
    if key not in PARSERS:
        raise ConfigError(f"Unknown config key {key!r}")
    if not isinstance(raw, str):
        return tuple(raw) if isinstance(raw, list) else raw
    try:
        return PARSERS[key](raw.strip())
    except ValueError as e:
        raise ConfigError(f"Bad value for {key}: {e}")


def parse_config_text(text, source='<config>'):
    """
    Parse the flat config format into a dict of typed values

    Raises:
        ConfigError: malformed line, unknown or repeated key
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split('#', 1)[0].strip()
        if not stripped:
            continue
        key, sep, raw = stripped.partition('=')
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key = key.strip()
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = parse_value(key, raw)
        except ConfigError as e:
            raise ConfigError(f"{source}:{lineno}: {e}")
    return values


def load_config(path=None, overrides=None, experiment=None):
    """
    Resolve an ExperimentConfig from a file, overrides and defaults

    Args:
        path: Optional config file
        overrides: Mapping of key -> value (strings are parsed); None values
            are ignored
        experiment: Experiment expected by the caller

    Returns:
        Validated ExperimentConfig
    """
    values = {}
    if path:
        try:
            with open(path, encoding='utf-8') as f:
                values = parse_config_text(f.read(), source=str(path))
        except OSError as e:
            raise ConfigError(f"Cannot read config {path}: {e}")

    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        values[key] = parse_value(key, raw)

    if experiment:
        declared = values.setdefault('experiment', experiment)
        if declared != experiment:
            raise ConfigError(f"Config declares experiment {declared!r} but {experiment!r} was requested")
    if 'experiment' not in values:
        raise ConfigError("Config does not name an experiment")

    config = ExperimentConfig(**values).validate()
    logger.info(f"Resolved {config.experiment} config (master_seed={config.master_seed})")
    return config


def with_overrides(config, **changes):
    return replace(config, **changes).validate()
