"""Load experiment defaults from configs/defaults.yml."""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from nbapprox.errors import DomainError

logger = logging.getLogger(__name__)

DEFAULTS_PATH = Path(__file__).resolve().parent.parent / "configs" / "defaults.yml"


def load_defaults(path: Optional[Path] = None) -> Dict[str, Any]:
    """Read the defaults file and return its top-level mapping."""
    config_path = Path(path) if path is not None else DEFAULTS_PATH
    if not config_path.exists():
        raise DomainError(f"Config file not found at {config_path}")

    with open(config_path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}

    if not isinstance(data, dict):
        raise DomainError(f"Config file {config_path} must hold a mapping")
    logger.debug("Loaded %d config sections from %s", len(data), config_path)
    return data


def command_defaults(name: str, path: Optional[Path] = None) -> Dict[str, Any]:
    """Return the defaults section for one CLI subcommand (empty if absent)."""
    section = load_defaults(path).get(name) or {}
    if not isinstance(section, dict):
        raise DomainError(f"Config section '{name}' must be a mapping")
    return dict(section)
