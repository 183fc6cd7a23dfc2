"""
Experiment configurations for the command-line front end

Each command that takes a JSON document has a frozen dataclass here.
ExperimentConfig.from_dict validates the document against the dataclass
fields: unknown keys, missing required keys and wrongly-typed values all
raise ConfigError.
"""

import numbers
from dataclasses import MISSING, asdict, dataclass, field, fields
from typing import Any, Callable, Dict, Optional, Tuple, Type

from config import settings
from core.errors import ConfigError, InvalidParams
from core.estimation import ClickRecord, Pom, get_pom


def _is_int(value) -> bool:
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


def _is_number(value) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _is_str(value) -> bool:
    return isinstance(value, str)


def _list_of(check: Callable[[Any], bool]) -> Callable[[Any], bool]:
    def validate(value):
        return isinstance(value, (list, tuple)) and all(check(v) for v in value)
    return validate


def _optional(check: Callable[[Any], bool]) -> Callable[[Any], bool]:
    return lambda value: value is None or check(value)


def _required(check: Callable[[Any], bool], kind: str):
    return field(metadata={'check': check, 'kind': kind})


def _default(value, check: Callable[[Any], bool], kind: str):
    if isinstance(value, (list, tuple)):
        return field(default_factory=lambda: tuple(value), metadata={'check': check, 'kind': kind})
    return field(default=value, metadata={'check': check, 'kind': kind})


_INTS = _list_of(_is_int)
_NUMBERS = _list_of(_is_number)
_OPTIONAL_NUMBERS = _list_of(_optional(_is_number))


@dataclass(frozen=True)
class MeasurementConfig:
    """Built-in POM and the click counts recorded with it."""

    pom: str = _required(_is_str, 'string')
    clicks: Tuple[int, ...] = _required(_INTS, 'list of integers')

    def __post_init__(self):
        object.__setattr__(self, 'clicks', tuple(self.clicks))
        # resolve early so that a bad name or count fails before any work is done
        self.click_record().check(self.get_pom())

    def get_pom(self) -> Pom:
        return get_pom(self.pom)

    def click_record(self) -> ClickRecord:
        return ClickRecord(self.clicks)

    def to_dict(self) -> Dict:
        data = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in data.items()}


@dataclass(frozen=True)
class PosteriorConfig(MeasurementConfig):
    """Posterior (pom, clicks) and the proposal used to sample it."""

    strategy: str = _default('interior', _is_str, 'string')
    N: Optional[int] = _default(None, _optional(_is_int), 'integer or null')
    alpha: float = _default(settings.DEFAULT_UNIFORM_ALPHA, _is_number, 'number')
    interior_mu: Optional[float] = _default(None, _optional(_is_number), 'number or null')
    boundary_N: Optional[int] = _default(None, _optional(_is_int), 'integer or null')
    boundary_mu: Optional[float] = _default(None, _optional(_is_number), 'number or null')
    weights: Tuple[float, float] = _default((0.5, 0.5), _NUMBERS, 'list of numbers')
    grid_resolution: Optional[float] = _default(None, _optional(_is_number), 'number or null')
    safety: float = _default(settings.DEFAULT_SAFETY, _is_number, 'number')
    seed: int = _default(settings.DEFAULT_SEED, _is_int, 'integer')
    output_prefix: Optional[str] = _default(None, _optional(_is_str), 'string or null')

    def __post_init__(self):
        object.__setattr__(self, 'weights', tuple(self.weights))
        if self.seed < 0:
            raise InvalidParams('seed must be non-negative', seed=self.seed)
        if (self.grid_resolution is not None and not self.grid_resolution > 0) or not self.safety >= 1:
            raise InvalidParams('grid_resolution must be positive and safety at least 1',
                                grid_resolution=self.grid_resolution, safety=self.safety)
        super().__post_init__()

    def knobs(self):
        from analytics.sampler import ProposalKnobs
        return ProposalKnobs(N=self.N, alpha=self.alpha, interior_mu=self.interior_mu,
                             boundary_N=self.boundary_N, boundary_mu=self.boundary_mu,
                             weights=self.weights)


@dataclass(frozen=True)
class PosteriorSampleConfig(PosteriorConfig):
    n_accept: int = _default(1000, _is_int, 'integer')

    def __post_init__(self):
        super().__post_init__()
        if self.n_accept < 1:
            raise InvalidParams('n_accept must be at least 1', n_accept=self.n_accept)


@dataclass(frozen=True)
class BlrConfig(PosteriorConfig):
    """Samples for bounded-likelihood curves; sizes, if given, adds a convergence table."""

    strategy: str = _default('uniform', _is_str, 'string')
    n_samples: int = _default(100_000, _is_int, 'integer')
    lambda_points: int = _default(settings.DEFAULT_LAMBDA_POINTS, _is_int, 'integer')
    sizes: Optional[Tuple[int, ...]] = _default(None, _optional(_INTS), 'list of integers or null')

    def __post_init__(self):
        super().__post_init__()
        if self.sizes is not None:
            object.__setattr__(self, 'sizes', tuple(self.sizes))
            if not self.sizes or min(self.sizes) < 1:
                raise InvalidParams('sizes must be positive', sizes=list(self.sizes))
        if self.n_samples < 1 or self.lambda_points < 2:
            raise InvalidParams('n_samples must be positive and lambda_points at least 2',
                                n_samples=self.n_samples, lambda_points=self.lambda_points)


@dataclass(frozen=True)
class BenchAcceptanceConfig(PosteriorConfig):
    """
    Acceptance sweep over column counts, uniform admixtures and means.

    N_values sweeps the interior column count, mu_values the mean of the
    strategy's characteristic component (boundary mean for boundary and mix,
    interior mean for interior); null entries mean the automatic choice.
    """

    N_values: Tuple[int, ...] = _default((), _INTS, 'list of integers')
    alphas: Tuple[float, ...] = _default((settings.DEFAULT_UNIFORM_ALPHA,), _NUMBERS, 'list of numbers')
    mu_values: Tuple[Optional[float], ...] = _default((None,), _OPTIONAL_NUMBERS, 'list of numbers or nulls')
    n_proposals: int = _default(100_000, _is_int, 'integer')
    include_uniform: bool = _default(True, lambda v: isinstance(v, bool), 'boolean')

    def __post_init__(self):
        super().__post_init__()
        for name in ('N_values', 'alphas', 'mu_values'):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.alphas or not self.mu_values:
            raise InvalidParams('alphas and mu_values must not be empty')
        if self.n_proposals < 1:
            raise InvalidParams('n_proposals must be at least 1', n_proposals=self.n_proposals)


COMMAND_CONFIGS: Dict[str, Type[MeasurementConfig]] = {
    'mle': MeasurementConfig,
    'posterior-sample': PosteriorSampleConfig,
    'bench-time': PosteriorSampleConfig,
    'blr': BlrConfig,
    'bench-acceptance': BenchAcceptanceConfig,
}


class ExperimentConfig:
    """Schema validation and construction of command configs."""

    @staticmethod
    def schema(config_cls: Type[MeasurementConfig]) -> Dict[str, Dict]:
        return {
            f.name: {'type': f.metadata['kind'],
                     'required': f.default is MISSING and f.default_factory is MISSING}
            for f in fields(config_cls)
        }

    @classmethod
    def from_dict(cls, command: str, data: Dict[str, Any]) -> MeasurementConfig:
        """
        Build the config of a command from a JSON document.

        Raises:
            ConfigError: unknown command, unknown or missing keys, wrong value types
            InvalidParams: values of the right type but out of range
        """
        if command not in COMMAND_CONFIGS:
            raise ConfigError(f"Command '{command}' takes no config", allowed=sorted(COMMAND_CONFIGS))
        if not isinstance(data, dict):
            raise ConfigError('Config must be a JSON object')
        config_cls = COMMAND_CONFIGS[command]
        known = {f.name: f for f in fields(config_cls)}

        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError('Unknown config keys', command=command, keys=unknown)
        missing = sorted(name for name, spec in cls.schema(config_cls).items()
                         if spec['required'] and name not in data)
        if missing:
            raise ConfigError('Missing required config keys', command=command, keys=missing)
        for name, value in data.items():
            if not known[name].metadata['check'](value):
                raise ConfigError(f"Config key '{name}' must be a {known[name].metadata['kind']}",
                                  command=command, key=name, value=value)
        return config_cls(**data)
