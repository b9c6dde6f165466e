"""
Experiment configuration
JSON documents validated with pydantic; errors are re-raised as
ConfigurationError carrying a line/column or a dotted field path
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError

from core.exceptions import ConfigurationError
from quantdim import settings
from system.families import system_from_definition
from system.models import CookieCutterSystem

DEFAULT_N_GRID = [1, 2, 4, 8, 16, 32, 64, 128]
DEFAULT_Q_GRID = [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]
SUBCOMMANDS = ('dim', 'beta', 'kappa', 'measure', 'quantize', 'verify', 'figure1')


def _strictly_increasing(values: List[float], label: str) -> List[float]:
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{label} must be sorted and strictly increasing")
    return values


class SystemDefinition(BaseModel):
    """
    System section of an experiment config
    Affine systems need ratios and offsets; c and gamma default to 0 and 1
    """
    model_config = ConfigDict(extra='forbid')

    kind: Literal['affine', 'logistic']
    name: Optional[str] = None
    ratios: Optional[List[float]] = None
    offsets: Optional[List[float]] = None
    c: float = Field(default=0.0, ge=0.0)
    gamma: PositiveFloat = 1.0
    enumeration_cap: Optional[PositiveInt] = None
    grid_points: Optional[int] = Field(default=None, ge=2)

    @field_validator('ratios')
    @classmethod
    def validate_ratios(cls, value):
        """Contraction ratios"""
        if value is not None:
            if len(value) < 2:
                raise ValueError('need at least two branches')
            if any(not 0 < abs(s) < 1 for s in value):
                raise ValueError('every ratio must satisfy 0 < |s| < 1')
        return value

    @model_validator(mode='after')
    def validate_affine_fields(self):
        if self.kind == 'affine':
            if self.ratios is None or self.offsets is None:
                raise ValueError('affine systems need ratios and offsets')
            if len(self.ratios) != len(self.offsets):
                raise ValueError('ratios and offsets must have the same length')
        return self

    def build(self) -> CookieCutterSystem:
        definition = self.model_dump(exclude_none=True, exclude={'enumeration_cap', 'grid_points'})
        return system_from_definition(definition, name=self.name)


class ExperimentConfig(BaseModel):
    """
    One experiment: a system plus the depth, tolerance, averaging window,
    discretization level and the r, n and q grids every subcommand reads
    """
    model_config = ConfigDict(extra='forbid')

    system: SystemDefinition
    depth: PositiveInt = Field(default_factory=lambda: settings.DEFAULT_DEPTH)
    tol: Optional[PositiveFloat] = None
    window: Tuple[int, int] = Field(default_factory=lambda: tuple(settings.CESARO_WINDOW))
    discretization_level: PositiveInt = 8
    verify_depth: PositiveInt = 8
    r_values: List[PositiveFloat] = Field(default_factory=lambda: [1.0, 2.0], min_length=1)
    n_grid: List[PositiveInt] = Field(default_factory=lambda: list(DEFAULT_N_GRID), min_length=1)
    q_grid: List[float] = Field(default_factory=lambda: list(DEFAULT_Q_GRID), min_length=3)
    output_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)
    threads: PositiveInt = Field(default_factory=lambda: settings.THREADS)
    svg: bool = False
    # reserved; every computation is deterministic
    seed: int = 0

    @field_validator('window')
    @classmethod
    def validate_window(cls, value):
        n0, n1 = value
        if n0 < 0 or n1 < n0:
            raise ValueError('window must satisfy 0 <= n0 <= n1')
        return value

    @field_validator('n_grid')
    @classmethod
    def validate_n_grid(cls, value):
        return _strictly_increasing(value, 'n_grid')

    @field_validator('q_grid')
    @classmethod
    def validate_q_grid(cls, value):
        return _strictly_increasing(value, 'q_grid')

    @field_validator('r_values')
    @classmethod
    def validate_r_values(cls, value):
        return _strictly_increasing(value, 'r_values')

    @model_validator(mode='after')
    def validate_levels(self):
        if self.discretization_level > self.depth:
            raise ValueError(f"discretization_level {self.discretization_level} exceeds depth {self.depth}")
        return self

    def payload(self) -> Dict[str, Any]:
        """JSON-ready dump used for the provenance hash"""
        return self.model_dump(mode='json')


def _field_path(location) -> str:
    return '.'.join(str(part) for part in location) or '<root>'


def parse_config(text: str, source: str = '<config>') -> ExperimentConfig:
    """Parse and validate a JSON experiment document"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}",
            {'line': exc.lineno, 'column': exc.colno},
        ) from exc
    return validate_config(data, source)


def validate_config(data: Any, source: str = '<config>') -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except PydanticValidationError as exc:
        problems = {_field_path(error['loc']): error['msg'] for error in exc.errors()}
        first = next(iter(problems.items()))
        raise ConfigurationError(f"{source}: {first[0]}: {first[1]}", problems) from exc


def load_config(path: Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise ConfigurationError(f"Cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, source=str(path))


def apply_overrides(config: ExperimentConfig, **overrides: Any) -> ExperimentConfig:
    """Command-line flags win over the file; None means not given"""
    updates = {key: value for key, value in overrides.items() if value is not None}
    if not updates:
        return config
    return validate_config({**config.payload(), **updates}, source='<command line>')


@dataclass
class ExperimentOutcome:
    """Exit code and written files of one subcommand run"""

    subcommand: str
    exit_code: int = 0
    artifacts: List[Path] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
