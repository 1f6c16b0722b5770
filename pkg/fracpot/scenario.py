"""Scenario files: versioned TOML mapped onto frozen dataclasses.

Every table is checked against its dataclass; an unknown key is reported with
its dotted path, e.g. ``picard.radius`` when ``picard.radii`` was meant.
"""
from dataclasses import asdict, dataclass, field, fields, replace
import logging
import math
import numpy as np
import tomli
from .config import Config
from .errors import ConfigError, DomainError, RecurrenceError
from .kinds import MeasureKind
from .profiles import (
    MeasureProfile,
    ModelParams,
    SameAsVolumeMeasure,
    VolumeProfile,
    euclidean_volume,
    get_measure_factory,
    get_volume_factory,
)

logger = logging.getLogger(__name__)

COMMANDS = ('criteria', 'green', 'kernel-check', 'iterate', 'solve')


def _check_keys(cls, data, path: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"'{path}' must be a table")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown key '{path}.{key}'" if path else f"unknown key '{key}'")
    return data


def _plain(value):
    """Lists become tuples so specs stay comparable and hashable-ish"""
    if isinstance(value, list):
        return tuple(_plain(v) for v in value)
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def _construct(cls, data, path: str):
    data = _check_keys(cls, data, path)
    try:
        return cls(**{k: _plain(v) for k, v in data.items()})
    except (TypeError, ValueError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(f"'{path}': {err}") from err


@dataclass(frozen=True)
class ModelSpec:
    n: float = 3.
    alpha: float = 0.5
    q: float = 2.
    gamma: float = 0.
    r0: float = Config.R0
    a: float = 1.

    def __post_init__(self):
        try:
            self.params().require_gamma()
        except DomainError as err:
            raise ConfigError(f"'model': {err}") from err

    def params(self) -> ModelParams:
        return ModelParams(alpha=self.alpha, q=self.q, n=self.n, gamma=self.gamma, r0=self.r0, a=self.a)


@dataclass(frozen=True)
class VolumeSpec:
    kind: str = 'euclidean'
    params: dict = field(default_factory=lambda: {'n': 3})

    def build(self) -> VolumeProfile:
        try:
            return get_volume_factory(self.kind)(**self.params)
        except RecurrenceError:
            raise
        except (TypeError, ValueError) as err:
            raise ConfigError(f"'volume': {err}") from err


@dataclass(frozen=True)
class MeasureSpec:
    kind: str = 'same-as-volume'
    params: dict = field(default_factory=dict)

    def build(self, volume: VolumeProfile | None = None) -> MeasureProfile:
        try:
            factory = get_measure_factory(self.kind)
            if factory is SameAsVolumeMeasure and 'volume' not in self.params:
                return SameAsVolumeMeasure(volume if volume is not None else euclidean_volume(3))
            return factory(**self.params)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"'measure': {err}") from err


@dataclass(frozen=True)
class GridSpec:
    """Sample points: ``points`` in total, or ``points_per_decade`` for log grids"""
    min: float = 1.
    max: float = 10.
    points: int | None = None
    points_per_decade: int | None = None
    log: bool = True

    def __post_init__(self):
        if not self.max >= self.min:
            raise ConfigError(f"grid max {self.max} is below min {self.min}")
        if self.log and not self.min > 0:
            raise ConfigError(f"log grid needs a positive min, got {self.min}")
        if self.points is not None and self.points < 1:
            raise ConfigError(f"grid needs at least one point, got {self.points}")

    def values(self) -> np.ndarray:
        if self.points is not None:
            if self.log:
                return np.logspace(math.log10(self.min), math.log10(self.max), self.points)
            return np.linspace(self.min, self.max, self.points)
        if not self.log:
            raise ConfigError("a linear grid needs 'points'")
        ppd = self.points_per_decade or Config.POINTS_PER_DECADE
        decades = math.log10(self.max / self.min)
        return np.logspace(math.log10(self.min), math.log10(self.max), int(round(decades * ppd)) + 1)


@dataclass(frozen=True)
class GridsSpec:
    x: GridSpec | None = None
    r: GridSpec | None = None
    t: GridSpec | None = None
    d: GridSpec | None = None


@dataclass(frozen=True)
class DiscreteSpec:
    """Finite spaces: ``count`` seeded draws from a registered generator, or one space file"""
    generator: str = 'riesz'
    seed: int = Config.SEED
    count: int = 1
    params: dict = field(default_factory=dict)
    space_file: str | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError(f"'discrete.count' must be at least 1, got {self.count}")


@dataclass(frozen=True)
class IterateSpec:
    depth: int = 5
    q: float | None = None
    weighted: bool = False

    def __post_init__(self):
        if self.depth < 0:
            raise ConfigError(f"'iterate.depth' must be non-negative, got {self.depth}")


@dataclass(frozen=True)
class PicardSpec:
    radii: tuple = (2.,)
    h: float = 0.125
    tol: float = Config.PICARD_TOL
    max_iters: int = Config.PICARD_MAX_ITERS
    amplitude: float = Config.ETA_AMPLITUDE
    eta_radius: float = Config.ETA_RADIUS
    max_cells: int = Config.MAX_CELLS
    cache_dir: str | None = None
    equivalence: bool = True

    def __post_init__(self):
        if not self.radii or any(not r > 0 for r in self.radii):
            raise ConfigError(f"'picard.radii' must be a non-empty list of positive radii, got {self.radii}")
        if not self.tol > 0 or self.max_iters < 1:
            raise ConfigError("'picard.tol' must be positive and 'picard.max_iters' at least 1")


@dataclass(frozen=True)
class OutputSpec:
    format: str = 'csv'
    path: str | None = None

    def __post_init__(self):
        if self.format not in ('csv', 'json'):
            raise ConfigError(f"Invalid output format '{self.format}'. Must be one of: ['csv', 'json']")


_SECTIONS = {
    'model': ModelSpec,
    'volume': VolumeSpec,
    'measure': MeasureSpec,
    'discrete': DiscreteSpec,
    'iterate': IterateSpec,
    'picard': PicardSpec,
    'output': OutputSpec,
}


@dataclass(frozen=True)
class ScenarioConfig:
    schema_version: int = Config.SCHEMA_VERSION
    name: str = 'scenario'
    command: str | None = None
    model: ModelSpec = field(default_factory=ModelSpec)
    volume: VolumeSpec = field(default_factory=VolumeSpec)
    measure: MeasureSpec = field(default_factory=MeasureSpec)
    grids: GridsSpec = field(default_factory=GridsSpec)
    discrete: DiscreteSpec = field(default_factory=DiscreteSpec)
    iterate: IterateSpec = field(default_factory=IterateSpec)
    picard: PicardSpec = field(default_factory=PicardSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    def __post_init__(self):
        measure_gamma = self.measure_gamma
        if measure_gamma is not None and self.model.gamma != measure_gamma:
            raise ConfigError(f"'model.gamma' = {self.model.gamma} disagrees with the {self.measure.kind} "
                              f"measure, whose gamma is {measure_gamma}")

    @property
    def measure_gamma(self) -> float | None:
        """gamma of the weight |x|^gamma the measure stands for, None when it has none"""
        if self.measure.kind == MeasureKind.POWER_DENSITY.label:
            return float(self.measure.params.get('gamma', 0.))
        if self.measure.kind == MeasureKind.SAME_AS_VOLUME.label:
            return 0.
        return None

    def with_seed(self, seed: int) -> 'ScenarioConfig':
        return replace(self, discrete=replace(self.discrete, seed=seed))

    def to_dict(self) -> dict:
        return asdict(self)

    def build_volume(self) -> VolumeProfile:
        return self.volume.build()

    def build_measure(self, volume: VolumeProfile | None = None) -> MeasureProfile:
        return self.measure.build(self.build_volume() if volume is None else volume)

    def grid(self, name: str, default=None):
        spec = getattr(self.grids, name)
        return default if spec is None else spec.values()


def scenario_from_dict(data: dict) -> ScenarioConfig:
    _check_keys(ScenarioConfig, data, '')
    version = data.get('schema_version')
    if version != Config.SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {Config.SCHEMA_VERSION}, got {version!r}")
    command = data.get('command')
    if command is not None and command not in COMMANDS:
        raise ConfigError(f"Invalid command '{command}'. Must be one of: {list(COMMANDS)}")
    kwargs = {'schema_version': version, 'name': str(data.get('name', 'scenario')), 'command': command}
    for key, cls in _SECTIONS.items():
        if key in data:
            kwargs[key] = _construct(cls, data[key], key)
    if 'grids' in data:
        grids = _check_keys(GridsSpec, data['grids'], 'grids')
        kwargs['grids'] = GridsSpec(**{k: _construct(GridSpec, v, f'grids.{k}') for k, v in grids.items()})
    return ScenarioConfig(**kwargs)


def loads_scenario(text: str) -> ScenarioConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as err:
        raise ConfigError(f"invalid TOML: {err}") from err
    return scenario_from_dict(data)


def load_scenario(path) -> ScenarioConfig:
    try:
        with open(path, 'rb') as fh:
            data = tomli.load(fh)
    except tomli.TOMLDecodeError as err:
        raise ConfigError(f"{path}: invalid TOML: {err}") from err
    except OSError as err:
        raise ConfigError(f"cannot read scenario '{path}': {err}") from err
    logger.debug("loaded scenario %s", path)
    return scenario_from_dict(data)
