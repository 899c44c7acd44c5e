"""braidforge configuration - numeric tolerances, grid sizes and runtime knobs."""
import json
import logging
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)

EMIT_CHOICES = ("g", "f", "ftilde", "bounds")
LANE_ORDERS = ("descending", "ascending")

_POSITIVE_FIELDS = (
    "interp_tolerance", "hermite_tolerance", "condition_limit", "duplicate_angle_gap",
    "coefficient_limit", "jitter_fraction", "bisection_tolerance", "epsilon_fraction",
    "prune_tolerance", "newton_tolerance", "continuation_step", "delta_floor", "delta_max",
    "regularity_floor", "vanishing_tolerance", "lambda_safety", "lambda_min", "lambda_max",
    "fibration_tolerance", "divergence_tolerance",
)
_GRID_FIELDS = (
    "crossing_samples", "verification_grid", "ring_angles", "time_samples",
    "lambda_ring_angles", "lambda_time_samples", "grid_scan_size",
)


class Tuning(BaseModel):
    """Every numeric knob of the pipeline, shared by Settings and RunConfig."""

    # interpolation
    interp_tolerance: float = 1e-9
    hermite_tolerance: float = 1e-8
    condition_limit: float = 1e12
    duplicate_angle_gap: float = 1e-9
    coefficient_limit: float = 1e6
    jitter_attempts: int = 3
    jitter_fraction: float = 0.1

    # strands
    crossing_samples: int = 8192
    bisection_tolerance: float = 1e-10
    verification_grid: int = 4096
    epsilon_fraction: float = 0.9
    lane_order: str = "descending"

    # polynomials
    prune_tolerance: float = 1e-14
    mul_chunk_terms: int = 2_000_000

    # verifier
    ring_angles: int = 64
    time_samples: int = 256
    lambda_ring_angles: int = 16
    lambda_time_samples: int = 64
    grid_scan_size: int = 32
    newton_tolerance: float = 1e-12
    newton_max_iter: int = 50
    continuation_step: float = 1e-2
    delta_floor: float = 0.05
    delta_max: float = 0.5
    bisection_iterations: int = 20
    regularity_floor: float = 1e-6
    vanishing_tolerance: float = 1e-8
    lambda_safety: float = 0.9
    lambda_min: float = 1e-6
    lambda_max: float = 1.0
    fibration_samples: int = 100
    fibration_tolerance: float = 1e-6

    # vector field
    divergence_tolerance: float = 1e-6

    # runtime
    threads: Optional[int] = Field(default=None)
    seed: int = 0
    log_level: str = "WARNING"
    output_dir: str = "out"

    @field_validator(*_POSITIVE_FIELDS)
    @classmethod
    def _positive(cls, value: float, info) -> float:
        if not value > 0:
            raise ValueError(f"{info.field_name} must be positive, got {value}")
        return value

    @field_validator(*_GRID_FIELDS)
    @classmethod
    def _grid_size(cls, value: int, info) -> int:
        if value < 16:
            raise ValueError(f"{info.field_name} must be at least 16, got {value}")
        return value

    @field_validator("lane_order")
    @classmethod
    def _lane_order(cls, value: str) -> str:
        value = value.strip().lower()
        if value not in LANE_ORDERS:
            raise ValueError(f"lane_order must be one of {LANE_ORDERS}")
        return value

    @field_validator("threads")
    @classmethod
    def _threads(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value < 1:
            raise ValueError("threads must be at least 1")
        return value


class Settings(Tuning, BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="BRAIDFORGE_",
        case_sensitive=False,
        extra="ignore",
    )


class RunConfig(Tuning):
    """Per-command snapshot of the configuration plus the run's own choices."""

    lambda_mode: Union[str, float] = "auto"
    emit: List[str] = Field(default_factory=lambda: list(EMIT_CHOICES))

    @field_validator("lambda_mode", mode="before")
    @classmethod
    def _lambda_mode(cls, value: Any) -> Union[str, float]:
        if isinstance(value, str) and value.strip().lower() == "auto":
            return "auto"
        try:
            number = float(value)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"lambda must be 'auto' or a positive number, got {value!r}") from exc
        if not number > 0:
            raise ValueError(f"lambda must be positive, got {number}")
        return number

    @field_validator("emit", mode="before")
    @classmethod
    def _emit(cls, value: Any) -> List[str]:
        if isinstance(value, str):
            text = value.strip()
            if text.startswith("["):
                value = json.loads(text)
            else:
                value = [part.strip() for part in text.split(",") if part.strip()]
        items = [str(v).strip().lower() for v in value]
        unknown = sorted(set(items).difference(EMIT_CHOICES))
        if unknown:
            raise ValueError(f"unknown emit targets {unknown}; choose from {list(EMIT_CHOICES)}")
        return [v for v in EMIT_CHOICES if v in items]

    @property
    def auto_lambda(self) -> bool:
        return self.lambda_mode == "auto"

    @classmethod
    def from_settings(
        cls,
        settings: Optional[Settings] = None,
        config_file: Optional[Union[str, Path]] = None,
        **overrides: Any,
    ) -> "RunConfig":
        """Precedence: keyword overrides > config file > settings (overrides.json > env > default)."""
        settings = settings or get_settings()
        data: Dict[str, Any] = {name: getattr(settings, name) for name in Tuning.model_fields}
        if config_file is not None:
            data.update(load_config_file(config_file))
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a JSON config file; unknown keys are rejected."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    known = set(RunConfig.model_fields)
    unknown = sorted(set(data).difference(known))
    if unknown:
        raise ValueError(f"unknown config keys in {path}: {unknown}")
    return data


OVERRIDES_FILE = Path(__file__).parent / "overrides.json"


def _load_overrides() -> Dict[str, Any]:
    """Load persisted overrides from the local JSON file (if it exists)."""
    if not OVERRIDES_FILE.exists():
        return {}
    try:
        data = json.loads(OVERRIDES_FILE.read_text(encoding="utf-8"))
        return data if isinstance(data, dict) else {}
    except Exception:
        logger.warning("Ignoring unreadable overrides file %s", OVERRIDES_FILE)
        return {}


def _known(values: Dict[str, Any]) -> Dict[str, Any]:
    return {k: v for k, v in values.items() if k in Tuning.model_fields}


def _first_problem(error: ValidationError) -> str:
    problem = error.errors()[0]
    field = ".".join(str(part) for part in problem.get("loc", ()))
    message = str(problem.get("msg", error)).removeprefix("Value error, ")
    return f"{field}: {message}" if field and field not in message else message


@lru_cache
def get_settings() -> Settings:
    # File-based overrides win over env-based values and go through the same validators
    overrides = _known(_load_overrides())
    try:
        return Settings(**overrides)
    except ValidationError as e:
        bad = {str(problem["loc"][0]) for problem in e.errors() if problem.get("loc")}
        if not bad.intersection(overrides):
            raise
        logger.warning("Ignoring invalid overrides %s in %s", sorted(bad), OVERRIDES_FILE)
        return Settings(**{k: v for k, v in overrides.items() if k not in bad})


def save_overrides(values: Dict[str, Any]) -> None:
    """Validate ``values``, merge them into the overrides file and reset the settings cache."""
    unknown = sorted(set(values).difference(Tuning.model_fields))
    if unknown:
        raise ValueError(f"unknown settings: {unknown}")
    data = _load_overrides()
    data.update(values)
    current = get_settings().model_dump(include=set(Tuning.model_fields))
    try:
        Tuning.model_validate({**current, **_known(data)})
    except ValidationError as e:
        raise ValueError(f"invalid override: {_first_problem(e)}") from e
    OVERRIDES_FILE.write_text(json.dumps(data, indent=2, sort_keys=True), encoding="utf-8")
    clear_settings_cache()


def clear_settings_cache() -> None:
    """Clear the cached settings so the next call reloads from .env + overrides.json."""
    get_settings.cache_clear()
