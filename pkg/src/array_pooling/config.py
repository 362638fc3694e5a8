"""
Configuration module for array-pooling.
"""

import os
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml

from array_pooling.numerics import Tolerance

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATHS = [
    "./config.yaml",
    "~/.array-pooling/config.yaml",
    "/etc/array-pooling/config.yaml",
]

DEFAULT_TABLE = {"p_min": 1e-4, "p_max": 0.249790, "step": 1e-4}
DEFAULT_ROBUST = {
    "q_max": 0.996,
    "grid_step": 1e-3,
    "n_min": 5,
    "n_max": 64,
    "prior_lo": 0.750210,
    "prior_hi": 1.0,
    "quad_tol": 1e-8,
    "calibration_lo": 0.995,
    "calibration_hi": 0.998,
    "calibration_step": 1e-4,
}
DEFAULT_SIMULATION = {"trials": 100000, "seed": 1}


def _merge(section: str, defaults: Mapping[str, Any], values: Any) -> Dict[str, Any]:
    """Overlay configured values on the defaults, converting to the defaults' types."""
    merged = dict(defaults)
    if not isinstance(values, Mapping):
        if values is not None:
            logger.warning(f"Ignoring section '{section}': expected a mapping, got {values!r}")
        return merged
    for key, value in values.items():
        if key not in defaults:
            logger.warning(f"Ignoring unknown setting '{section}.{key}'")
            continue
        kind = type(defaults[key])
        try:
            merged[key] = kind(value)
        except (TypeError, ValueError) as e:
            raise ValueError(f"Invalid value for '{section}.{key}': {value!r}") from e
    return merged


class Config:
    """Configuration handler for array-pooling."""

    def __init__(self, config_path: Optional[str] = None):
        """Initialize the configuration.

        :param config_path: Path to the configuration file. If None, default paths will be checked.
        """
        self.config_data: dict[str, Any] = {}
        self.config_path: Optional[str] = None

        if config_path:
            self._load_config(config_path)
        else:
            for path in DEFAULT_CONFIG_PATHS:
                expanded_path = os.path.expanduser(path)
                if os.path.exists(expanded_path):
                    self._load_config(expanded_path)
                    break
            else:
                logger.debug(
                    f"No configuration file found in default paths: {DEFAULT_CONFIG_PATHS}"
                )

    def _load_config(self, config_path: str) -> None:
        """Load configuration from a YAML file.

        :param config_path: Path to the configuration file.
        """
        try:
            with open(config_path, "r") as f:
                self.config_data = yaml.safe_load(f)
            if self.config_data is None:
                self.config_data = {}
            self.config_path = config_path
            logger.info(f"Loaded configuration from {config_path}")
        except Exception as e:
            logger.error(f"Failed to load configuration from {config_path}: {e}")
            raise

    def get_tolerance(self) -> Tolerance:
        """Get the stopping rule for root finding, minimisation and quadrature.

        :return: Tolerance built from the ``tolerance`` section.
        :raises ValueError: If a value is malformed or out of range.
        """
        defaults = {"abs_x": 1e-12, "abs_f": 0.0, "max_iter": 200}
        values = _merge("tolerance", defaults, self.config_data.get("tolerance"))
        return Tolerance(**values)

    def get_table_settings(self) -> Dict[str, Any]:
        """Get the prevalence range of the comparison table.

        :return: Mapping with ``p_min``, ``p_max`` and ``step``.
        """
        return _merge("table", DEFAULT_TABLE, self.config_data.get("table"))

    def get_robust_settings(self) -> Dict[str, Any]:
        """Get the minimax grid, Bayesian prior and calibration band.

        :return: Mapping of robust-choice settings.
        """
        return _merge("robust", DEFAULT_ROBUST, self.config_data.get("robust"))

    def get_simulation_settings(self) -> Dict[str, Any]:
        return _merge("simulation", DEFAULT_SIMULATION, self.config_data.get("simulation"))

    def get_output_dir(self) -> str:
        """Get the directory for tables and plot data.

        :return: Path to the output directory.
        """
        output_dir = self.config_data.get("output_dir", "./output")
        # Create the directory if it doesn't exist
        Path(output_dir).mkdir(parents=True, exist_ok=True)
        return output_dir
