import json
import os
import logging
from typing import Dict, Any, Optional

logger = logging.getLogger(__name__)

DEFAULT_SETTINGS = {
    'seed': 0,
    'sg_window': 51,
    'sg_order': 3,
    'omega0': 6.0,
    'n_scales': 128,
    'scaleogram_size': 128,
    'image_side': 64,
    'health_k': 80,
    'engine_health_k': 25,
    'rul_knee': 125,
    'smooth_degree': 3,
    'test_fraction': 0.2,
    'validation_split': 0.15,
    'mask_value': -10.0,
    'sequence_length': 30,
    'epochs': 30,
    'batch_size': 32,
    'learning_rate': 0.001,
    'optimizer': 'adam',
}

INT_KEYS = {
    'seed', 'sg_window', 'sg_order', 'n_scales', 'scaleogram_size', 'image_side',
    'health_k', 'engine_health_k', 'rul_knee', 'smooth_degree', 'sequence_length', 'epochs', 'batch_size',
}
FLOAT_KEYS = {
    'omega0', 'test_fraction', 'validation_split', 'mask_value',
    'learning_rate',
}


class Settings:
    def __init__(self, config_file: Optional[str] = None):
        """Initialize settings, optionally layered over a JSON file."""
        self.config_file = config_file
        self._settings = self.load()

    def load(self) -> Dict[str, Any]:
        """Load settings from file or fall back to defaults."""
        settings = DEFAULT_SETTINGS.copy()
        if self.config_file and os.path.exists(self.config_file):
            try:
                with open(self.config_file, 'r') as f:
                    loaded = json.load(f)
                if not isinstance(loaded, dict):
                    raise ValueError("top-level JSON value must be an object")
                for key, value in loaded.items():
                    if key not in DEFAULT_SETTINGS:
                        logger.warning(f"Ignoring unknown setting '{key}'")
                        continue
                    settings[key] = self._coerce(key, value)
            except Exception as e:
                logger.error(f"Error loading settings from {self.config_file}: {e}")
                return DEFAULT_SETTINGS.copy()
        elif self.config_file:
            logger.error(f"Settings file {self.config_file} not found, using defaults")
        return settings

    def save(self, path: Optional[str] = None) -> None:
        """Save current settings to file."""
        target = path or self.config_file
        if not target:
            return
        try:
            with open(target, 'w') as f:
                json.dump(self._settings, f, indent=4, sort_keys=True)
        except Exception as e:
            logger.error(f"Error saving settings: {e}")

    @staticmethod
    def _coerce(key: str, value: Any) -> Any:
        try:
            if key in INT_KEYS:
                return int(value)
            if key in FLOAT_KEYS:
                return float(value)
        except (ValueError, TypeError):
            logger.error(f"Invalid {key} value: {value}, using default")
            return DEFAULT_SETTINGS[key]
        return value

    def get(self, key: str, default: Any = None) -> Any:
        """Get a setting value."""
        return self._settings.get(key, default)

    def set(self, key: str, value: Any) -> None:
        """Set a setting value."""
        self._settings[key] = self._coerce(key, value)

    def update(self, settings: Dict[str, Any]) -> None:
        """Update multiple settings at once, skipping unset (None) values."""
        for key, value in settings.items():
            if value is not None:
                self.set(key, value)

    @property
    def all(self) -> Dict[str, Any]:
        """Get all settings."""
        return self._settings.copy()
