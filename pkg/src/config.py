"""Settings loaded from ums.yaml."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from src.builder import TowerConfig
from src.utils import PathLike, read_text

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = Path(__file__).resolve().parent.parent / 'ums.yaml'

DEFAULT_TOWER = {
    'grid': ['1/2', '1', '3/2', '2', '5/2', '3'],
    'max_support': 3,
    'depth': 3,
    'max_points': 5000,
}


def _int_field(section: str, data: Dict[str, Any], name: str, default: int, minimum: int) -> int:
    value = data.get(name, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError(f"{section}.{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{section}.{name} must be at least {minimum}, got {value}")
    return value


@dataclass(frozen=True)
class FixsetConfig:
    horizon: int = 2
    exclude_powers: int = 1

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FixsetConfig':
        return cls(
            horizon=_int_field('fixset', data, 'horizon', 2, 1),
            exclude_powers=_int_field('fixset', data, 'exclude_powers', 1, 0),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {'horizon': self.horizon, 'exclude_powers': self.exclude_powers}


@dataclass(frozen=True)
class Settings:
    """All tunables, with the defaults of ums.yaml."""
    tower: TowerConfig = field(default_factory=lambda: TowerConfig.from_dict(DEFAULT_TOWER))
    fixset: FixsetConfig = field(default_factory=FixsetConfig)
    workers: int = 4
    seed: int = 20240101
    exhaustive_limit: int = 12

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'Settings':
        """Create Settings from a parsed YAML mapping; missing sections take defaults."""
        data = data or {}
        if not isinstance(data, dict):
            raise ValueError("Config root must be a mapping")
        sections = {}
        for name in ('tower', 'fixset', 'audit', 'random', 'search'):
            section = data.get(name, {})
            if not isinstance(section, dict):
                raise ValueError(f"Config section {name} must be a mapping")
            sections[name] = section
        unknown = sorted(set(data) - set(sections))
        if unknown:
            logger.warning(f"Ignoring unknown config sections: {', '.join(unknown)}")
        return cls(
            tower=TowerConfig.from_dict({**DEFAULT_TOWER, **sections['tower']}),
            fixset=FixsetConfig.from_dict(sections['fixset']),
            workers=_int_field('audit', sections['audit'], 'workers', 4, 1),
            seed=_int_field('random', sections['random'], 'seed', 20240101, 0),
            exhaustive_limit=_int_field('search', sections['search'], 'exhaustive_limit', 12, 0),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'tower': self.tower.to_dict(),
            'fixset': self.fixset.to_dict(),
            'audit': {'workers': self.workers},
            'random': {'seed': self.seed},
            'search': {'exhaustive_limit': self.exhaustive_limit},
        }


def load_settings(path: Optional[PathLike] = None) -> Settings:
    """Read settings from path, or from ums.yaml when it exists."""
    if path is None:
        if not DEFAULT_CONFIG.exists():
            return Settings()
        path = DEFAULT_CONFIG
    try:
        data = yaml.safe_load(read_text(path))
    except yaml.YAMLError as e:
        raise ValueError(f"Invalid YAML in {path}: {e}")
    settings = Settings.from_dict(data)
    logger.info(f"Loaded settings from {path}")
    return settings


def dump_settings(settings: Settings) -> str:
    return yaml.safe_dump(settings.to_dict(), sort_keys=False, allow_unicode=True)
