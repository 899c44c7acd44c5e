"""Configuration module for braidforge."""
from .settings import (
    EMIT_CHOICES,
    OVERRIDES_FILE,
    RunConfig,
    Settings,
    Tuning,
    clear_settings_cache,
    get_settings,
    load_config_file,
    save_overrides,
)

__all__ = [
    "EMIT_CHOICES",
    "OVERRIDES_FILE",
    "RunConfig",
    "Settings",
    "Tuning",
    "clear_settings_cache",
    "get_settings",
    "load_config_file",
    "save_overrides",
]
