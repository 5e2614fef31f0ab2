"""Project configuration: an INI file with one section per module.

CLI flags of the form ``--section.key value`` override file entries.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

DEFAULTS: dict[str, dict[str, str]] = {
    "film": {
        "samples": "",
        "deposition": "",
    },
    "line": {
        "n_supercells": "523",
        "n_unloaded": "60",
        "n_loaded": "6",
        "cell_length_um": "5.0",
        "l_cell_ph": "50.0",
        "z_unloaded_ohm": "50.0",
        "z_loaded_ohm": "80.0",
        "loading_pattern": "end",
        "z_source_ohm": "50.0",
        "z_load_ohm": "50.0",
        "sweep_start_ghz": "0.1",
        "sweep_stop_ghz": "12.0",
        "sweep_points": "1190",
        "gap_search_max_ghz": "10.0",
        "gap_resolution_mhz": "10.0",
        "vswr_max_ghz": "6.0",
    },
    "nonlinear": {
        "scaling_current_ma": "5.3",
        "critical_current_ma": "1.5",
        "dc_current_ma": "1.0",
        "pump_frequency_ghz": "9.5",
        "pump_ratio": "auto",
        "target_gain_db": "10.0",
        "calibration_n_supercells": "523",
        "signal_start_ghz": "4.0",
        "signal_stop_ghz": "5.0",
        "signal_points": "41",
        "steps_per_supercell": "20",
        "slope_convention": "half",
        "phase_scan": "",
        "theta0_correction": "0.0",
    },
    "noise": {
        "scan": "",
        "gain_kitwpa_db": "7.2",
        "gain_hemt_db": "30.0",
        "t_hemt_k": "2.0",
        "f1": "0.9",
        "f2": "0.8",
        "frequency_ghz": "4.0",
        "quanta_convention": "rayleigh-jeans",
    },
    "output": {
        "directory": "",
    },
}

PATH_KEYS = {("film", "samples"), ("film", "deposition"), ("nonlinear", "phase_scan"), ("noise", "scan")}
CHOICES = {
    ("nonlinear", "slope_convention"): ("half", "unity"),
    ("noise", "quanta_convention"): ("rayleigh-jeans", "planck"),
}


@dataclass
class ProjectConfig:
    values: dict[str, dict[str, str]]
    base_dir: Path = field(default_factory=Path.cwd)
    source: Path | None = None

    def get(self, section: str, key: str) -> str:
        try:
            return self.values[section][key]
        except KeyError:
            raise ConfigError(f"unknown config key {section}.{key}") from None

    def number(self, section: str, key: str) -> float:
        raw = self.get(section, key)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected a number, got {raw!r}") from None

    def integer(self, section: str, key: str) -> int:
        raw = self.get(section, key)
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected an integer, got {raw!r}") from None

    def path(self, section: str, key: str) -> Path | None:
        raw = self.get(section, key).strip()
        if not raw:
            return None
        p = Path(raw)
        return p if p.is_absolute() else self.base_dir / p

    def digest(self) -> str:
        blob = json.dumps(self.values, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def validate(self) -> "ProjectConfig":
        for (section, key), allowed in CHOICES.items():
            if self.get(section, key) not in allowed:
                raise ConfigError(f"{section}.{key} must be one of {', '.join(allowed)}")
        for section, key in PATH_KEYS:
            p = self.path(section, key)
            if p is not None and not p.is_file():
                raise ConfigError(f"{section}.{key}: file not found: {p}")
        for key in ("n_supercells", "n_unloaded", "n_loaded", "sweep_points"):
            if self.integer("line", key) < 0:
                raise ConfigError(f"line.{key} must be >= 0")
        for key in ("cell_length_um", "l_cell_ph", "z_unloaded_ohm", "z_loaded_ohm", "z_source_ohm", "z_load_ohm"):
            if self.number("line", key) <= 0:
                raise ConfigError(f"line.{key} must be positive")
        ratio = self.get("nonlinear", "pump_ratio")
        if ratio != "auto":
            self.number("nonlinear", "pump_ratio")
        return self


def load_config(path=None, overrides: dict[str, str] | None = None) -> ProjectConfig:
    values = {s: dict(kv) for s, kv in DEFAULTS.items()}
    base = Path.cwd()
    source = None
    if path is not None:
        source = Path(path)
        if not source.is_file():
            raise ConfigError(f"config file not found: {source}")
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read(source)
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}") from None
        for section in parser.sections():
            if section not in values:
                raise ConfigError(f"{source}: unknown section [{section}]")
            for key, val in parser.items(section):
                if key not in values[section]:
                    raise ConfigError(f"{source}: unknown key {section}.{key}")
                values[section][key] = val.strip()
        base = source.resolve().parent
    for dotted, val in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if section not in values or key not in values[section]:
            raise ConfigError(f"unknown override --{dotted}")
        values[section][key] = str(val)
    return ProjectConfig(values, base, source).validate()


def write_config(cfg_values: dict[str, dict[str, str]], path) -> Path:
    parser = configparser.ConfigParser(interpolation=None)
    for section, kv in cfg_values.items():
        parser[section] = kv
    path = Path(path)
    with open(path, "w") as fh:
        parser.write(fh)
    return path
