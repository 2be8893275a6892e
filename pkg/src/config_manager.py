"""Configuration management for muskat-spectral."""

import copy
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from .models.experiment_plan import ExperimentKind, ExperimentPlan, InitialDataSpec
from .models.solver_config import SolverConfig
from .spectral.mollifier import MollifierSpec
from .utils.key_matcher import KeyMatcher

logger = logging.getLogger(__name__)


class ConfigError(Exception):
    """Custom exception for configuration-related errors."""
    pass


class ConfigManager:
    """Loads, merges and validates run configuration into an ExperimentPlan.

    Values come from (lowest to highest priority) the built-in defaults, the
    YAML file, the environment and explicit overrides set with `set`.
    """

    DEFAULT_CONFIG_PATH = "config/muskat.yaml"
    DEFAULT_CONFIG_TEMPLATE: Dict[str, Dict[str, Any]] = {
        "experiment": {
            "kind": "single",
            "sweep_values": [],
            "pair_parameter": "corner_eps",
            "tip_alpha": 3.141592653589793,
            "label": "",
        },
        "initial_data": {
            "preset": "flat",
            "amplitude": 1e-3,
            "mode": 1,
            "seed": 0,
            "k_cut": 8,
            "decay": 2.0,
            "nu": 0.4,
            "corner_eps": 0.05,
            "snapshot_path": None,
            "depth": 0.05,
        },
        "grid": {
            "n": 256,
        },
        "solver": {
            "t_end": 1.0,
            "dt": "auto",
            "scheme": "rk4",
            "cfl_safety": 0.5,
            "epsilon": 0.0,
            "delta": 0.0,
            "mollifier_profile": "gaussian",
            "formulation": "g",
            "energy_orders": [1, 2],
            "max_halvings": 10,
            "growth_limit": 0.1,
            "blowup_threshold": 1e6,
        },
        "output": {
            "dir": None,
            "snapshot_every": 1,
            "checkpoint_every": 0,
            "format": "json",
        },
        "runtime": {
            "seed": 0,
            "threads": 1,
            "resume": None,
        },
    }

    FLAT_ALIASES = {
        "kind": "experiment.kind",
        "sweep_values": "experiment.sweep_values",
        "sweep": "experiment.sweep_values",
        "pair_parameter": "experiment.pair_parameter",
        "tip_alpha": "experiment.tip_alpha",
        "label": "experiment.label",
        "preset": "initial_data.preset",
        "amplitude": "initial_data.amplitude",
        "mode": "initial_data.mode",
        "nu": "initial_data.nu",
        "corner_eps": "initial_data.corner_eps",
        "snapshot_path": "initial_data.snapshot_path",
        "depth": "initial_data.depth",
        "n": "grid.n",
        "t_end": "solver.t_end",
        "dt": "solver.dt",
        "scheme": "solver.scheme",
        "cfl_safety": "solver.cfl_safety",
        "epsilon": "solver.epsilon",
        "delta": "solver.delta",
        "mollifier_profile": "solver.mollifier_profile",
        "formulation": "solver.formulation",
        "energy_orders": "solver.energy_orders",
        "out": "output.dir",
        "snapshot_every": "output.snapshot_every",
        "checkpoint_every": "output.checkpoint_every",
        "format": "output.format",
        "seed": "runtime.seed",
        "threads": "runtime.threads",
        "resume": "runtime.resume",
    }

    ENV_OVERRIDES = {
        "MUSKAT_THREADS": "runtime.threads",
    }

    def __init__(self, config_path: Optional[Union[str, Path]] = None):
        """Initialize ConfigManager with optional custom config path."""
        self.explicit_path = config_path is not None
        self.config_path = Path(config_path or self.DEFAULT_CONFIG_PATH)
        self.config_data: Dict[str, Any] = copy.deepcopy(self.DEFAULT_CONFIG_TEMPLATE)
        self.provided: set = set()
        self.overrides: Dict[str, Any] = {}
        self.key_matcher = KeyMatcher()

    @classmethod
    def known_paths(cls) -> List[str]:
        return [f"{section}.{key}" for section, values in cls.DEFAULT_CONFIG_TEMPLATE.items() for key in values]

    def load_config(self) -> Dict[str, Any]:
        """Merge file, environment and overrides over the defaults.

        A missing file is an error only when its path was given explicitly.
        """
        self.config_data = copy.deepcopy(self.DEFAULT_CONFIG_TEMPLATE)
        self.provided = set()
        if self.config_path.exists():
            try:
                with open(self.config_path, "r", encoding="utf-8") as file:
                    raw = yaml.safe_load(file) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"Invalid YAML in config file: {e}")
            except OSError as e:
                raise ConfigError(f"Error reading config file: {e}")
            if not isinstance(raw, dict):
                raise ConfigError(f"Config file {self.config_path} must hold a mapping at top level")
            self._merge(raw)
            logger.info(f"Configuration loaded from {self.config_path}")
        elif self.explicit_path:
            raise ConfigError(f"Configuration file not found: {self.config_path}")

        self._load_env_overrides()
        for path, value in self.overrides.items():
            self._set_nested_value(self.config_data, path, value)
            self.provided.add(path)
        return self.config_data

    def set(self, key: str, value: Any) -> None:
        """Override one value by dot path or flat alias (applied on the next load)."""
        self.overrides[self.resolve_key(key)] = value

    def resolve_key(self, key: str) -> str:
        """Dot path for a flat alias or dot path.

        Raises:
            ConfigError: If the key is unknown
        """
        if key in self.FLAT_ALIASES:
            return self.FLAT_ALIASES[key]
        if key in self.known_paths():
            return key
        suggestion = self.key_matcher.suggest(key, self.known_paths() + list(self.FLAT_ALIASES))
        hint = f"; did you mean '{suggestion}'?" if suggestion else ""
        raise ConfigError(f"Unknown configuration key '{key}'{hint}")

    def _merge(self, raw: Dict[str, Any]) -> None:
        for key, value in raw.items():
            if key in self.DEFAULT_CONFIG_TEMPLATE and isinstance(value, dict):
                for sub_key, sub_value in value.items():
                    path = self.resolve_key(f"{key}.{sub_key}")
                    self._set_nested_value(self.config_data, path, sub_value)
                    self.provided.add(path)
            elif key in self.DEFAULT_CONFIG_TEMPLATE:
                raise ConfigError(f"Section '{key}' must be a mapping")
            else:
                path = self.resolve_key(key)
                self._set_nested_value(self.config_data, path, value)
                self.provided.add(path)

    def _load_env_overrides(self):
        """Load configuration overrides from environment variables."""
        for env_var, config_path in self.ENV_OVERRIDES.items():
            value = os.getenv(env_var)
            if value:
                try:
                    self._set_nested_value(self.config_data, config_path, int(value))
                except ValueError:
                    raise ConfigError(f"{env_var} must be an integer, got '{value}'")
                self.provided.add(config_path)

    def _set_nested_value(self, data: Dict[str, Any], path: str, value: Any):
        """Set a nested dictionary value using dot notation."""
        keys = path.split(".")
        current = data
        for key in keys[:-1]:
            current = current.setdefault(key, {})
        current[keys[-1]] = value

    def _get_nested_value(self, data: Dict[str, Any], path: str) -> Any:
        """Get a nested dictionary value using dot notation."""
        current = data
        try:
            for key in path.split("."):
                current = current[key]
            return current
        except (KeyError, TypeError):
            return None

    def get(self, path: str, default: Any = None) -> Any:
        """Get a configuration value using dot notation."""
        value = self._get_nested_value(self.config_data, path)
        return value if value is not None else default

    def build_plan(self) -> ExperimentPlan:
        """Validated plan from the loaded values.

        Raises:
            ConfigError: If a value is malformed or violates a model invariant
        """
        try:
            return self._build_plan()
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid configuration: {e}")

    def _build_plan(self) -> ExperimentPlan:
        kind = ExperimentKind(self.get("experiment.kind"))
        dt = self.get("solver.dt")
        solver = SolverConfig(
            t_end=float(self.get("solver.t_end")),
            dt=None if dt in (None, "auto") else float(dt),
            epsilon=float(self.get("solver.epsilon")),
            mollifier=MollifierSpec(
                delta=float(self.get("solver.delta")), profile=self.get("solver.mollifier_profile")
            ),
            scheme=self.get("solver.scheme"),
            cfl_safety=float(self.get("solver.cfl_safety")),
            formulation=self.get("solver.formulation"),
            snapshot_every=int(self.get("output.snapshot_every")),
            checkpoint_every=int(self.get("output.checkpoint_every")),
            energy_orders=tuple(self.get("solver.energy_orders")),
            max_halvings=int(self.get("solver.max_halvings")),
            growth_limit=float(self.get("solver.growth_limit")),
            blowup_threshold=float(self.get("solver.blowup_threshold")),
        )
        seed = int(self.get("runtime.seed"))
        initial_data = InitialDataSpec(
            preset=self.get("initial_data.preset"),
            amplitude=float(self.get("initial_data.amplitude")),
            mode=int(self.get("initial_data.mode")),
            seed=int(self.get("initial_data.seed", seed)) if "initial_data.seed" in self.provided else seed,
            k_cut=int(self.get("initial_data.k_cut")),
            decay=float(self.get("initial_data.decay")),
            nu=float(self.get("initial_data.nu")),
            corner_eps=float(self.get("initial_data.corner_eps")),
            snapshot_path=self.get("initial_data.snapshot_path"),
            depth=float(self.get("initial_data.depth")),
        )
        sweep = self.get("experiment.sweep_values") or []
        if isinstance(sweep, str):
            sweep = [s for s in sweep.replace(",", " ").split() if s]
        output_dir = self.get("output.dir") or Path("runs") / kind.value
        defaults_used = tuple(path for path in self.known_paths() if path not in self.provided)
        return ExperimentPlan(
            kind=kind,
            base_config=solver,
            initial_data=initial_data,
            n_points=int(self.get("grid.n")),
            sweep_values=tuple(float(v) for v in sweep),
            pair_parameter=self.get("experiment.pair_parameter"),
            output_dir=Path(output_dir),
            seed=seed,
            threads=int(self.get("runtime.threads")),
            tip_alpha=float(self.get("experiment.tip_alpha")),
            report_format=self.get("output.format"),
            label=str(self.get("experiment.label", "")),
            resume_from=self.get("runtime.resume"),
            defaults_used=defaults_used,
        )

    def create_default_config(self, force: bool = False):
        """Create a default configuration file."""
        if self.config_path.exists() and not force:
            raise ConfigError(f"Configuration file already exists: {self.config_path}")
        self.config_path.parent.mkdir(parents=True, exist_ok=True)
        try:
            with open(self.config_path, "w", encoding="utf-8") as file:
                yaml.safe_dump(self.DEFAULT_CONFIG_TEMPLATE, file, default_flow_style=False, indent=2, sort_keys=False)
        except OSError as e:
            raise ConfigError(f"Error creating default config file: {e}")

    @property
    def threads(self) -> int:
        return int(self.get("runtime.threads", 1))

    @property
    def output_dir(self) -> Optional[str]:
        return self.get("output.dir")

    @property
    def report_format(self) -> str:
        return self.get("output.format", "json")


def parse_config(
    path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None
) -> ExperimentPlan:
    """Plan from an optional YAML file plus flag overrides (flat aliases or dot paths).

    Raises:
        ConfigError: On unknown keys, malformed files or invalid values
    """
    manager = ConfigManager(path)
    for key, value in (overrides or {}).items():
        manager.set(key, value)
    manager.load_config()
    return manager.build_plan()
