"""Run configuration: built-in defaults plus an INI-style override file.

Sections and keys (all optional, defaults shown by `pipestab` docs):

    [plant]       c k g q Te Omega_e A21 A22 b e1 e2
    [controller]  type = feedforward | dynamic | custom
                  for custom: n plus Ac Bc1 Bc2 C1 C2 K as row-major
                  space/comma separated number lists
    [sim]         M dt_factor T stride ic (ramp|equilibrium|perturbed) seed
    [analysis]    N N_max tol margin_tol cap

The PIPESTAB_CONFIG environment variable supplies a default file path.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .model import (ControllerParams, PlantParams, dynamic_controller,
                    feedforward_controller, reference_plant)
from .sim import SimConfig

ENV_VAR = "PIPESTAB_CONFIG"


@dataclass(frozen=True)
class AnalysisConfig:
    N: int = 2
    N_max: int = 3
    tol: float = 1e-4
    margin_tol: float = 1e-7
    cap: float | None = None


@dataclass(frozen=True)
class RunConfig:
    """Merged view of all sections plus any applied overrides."""

    plant: PlantParams
    controller_type: str = "feedforward"
    controller: ControllerParams = field(default_factory=feedforward_controller)
    sim: SimConfig = field(default_factory=SimConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    seed: int = 0
    overrides: tuple[str, ...] = ()

    def describe(self) -> dict:
        """JSON-ready dictionary of the resolved configuration."""
        def clean(obj):
            if isinstance(obj, np.ndarray):
                return obj.tolist()
            if dataclasses.is_dataclass(obj):
                return {k: clean(v) for k, v in dataclasses.asdict(obj).items()}
            if isinstance(obj, (list, tuple)):
                return [clean(v) for v in obj]
            return obj
        return {
            "plant": clean(self.plant),
            "controller_type": self.controller_type,
            "controller": clean(self.controller),
            "sim": clean(self.sim),
            "analysis": clean(self.analysis),
            "seed": self.seed,
            "overrides": list(self.overrides),
        }


def default_config() -> RunConfig:
    return RunConfig(plant=reference_plant())


def _floats(text: str) -> list[float]:
    parts = text.replace(",", " ").split()
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"expected numbers, got {text!r}") from exc


def _matrix(text: str, rows: int, cols: int, name: str) -> np.ndarray:
    vals = _floats(text)
    if len(vals) != rows * cols:
        raise ConfigError(f"{name} needs {rows * cols} entries ({rows}x{cols} "
                          f"row-major), got {len(vals)}")
    return np.array(vals).reshape(rows, cols)


def controller_from_type(kind: str, section=None) -> ControllerParams:
    if kind == "feedforward":
        return feedforward_controller()
    if kind == "dynamic":
        return dynamic_controller()
    if kind != "custom":
        raise ConfigError(f"controller type must be feedforward|dynamic|custom, got {kind!r}")
    if section is None or "n" not in section:
        raise ConfigError("custom controller needs an explicit n and matrices")
    n = int(section["n"])
    def mat(key, rows, cols):
        if key not in section:
            if rows * cols == 0:
                return np.zeros((rows, cols))
            raise ConfigError(f"custom controller is missing {key}")
        return _matrix(section[key], rows, cols, key)
    return ControllerParams(
        n=n, Ac=mat("Ac", n, n), Bc1=mat("Bc1", n, 2), Bc2=mat("Bc2", n, 2),
        C1=mat("C1", 1, n + 2), C2=mat("C2", 1, n), K=mat("K", 1, 2))


def load_config(path: str | None = None) -> RunConfig:
    """Defaults merged with an optional INI file (path or PIPESTAB_CONFIG)."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    base = default_config()
    if path is None:
        return base
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str        # keys are case-sensitive (M, Te, Ac, ...)
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc

    overrides = []
    plant_kwargs = dataclasses.asdict(base.plant)
    if parser.has_section("plant"):
        for key, val in parser.items("plant"):
            match = {k.lower(): k for k in plant_kwargs}
            if key not in match:
                raise ConfigError(f"unknown plant key {key!r}")
            plant_kwargs[match[key]] = float(val)
            overrides.append(f"plant.{match[key]}={val}")
    try:
        plant = PlantParams(**plant_kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc

    ctype = base.controller_type
    controller = base.controller
    if parser.has_section("controller"):
        sec = parser["controller"]
        ctype = sec.get("type", ctype)
        controller = controller_from_type(ctype, sec)
        overrides.append(f"controller.type={ctype}")

    sim_kwargs = dataclasses.asdict(base.sim)
    if parser.has_section("sim"):
        for key, val in parser.items("sim"):
            if key not in sim_kwargs:
                raise ConfigError(f"unknown sim key {key!r}")
            if isinstance(sim_kwargs[key], str):
                sim_kwargs[key] = val
            elif isinstance(sim_kwargs[key], int):
                sim_kwargs[key] = int(float(val))
            else:
                sim_kwargs[key] = float(val)
            overrides.append(f"sim.{key}={val}")
    sim_cfg = SimConfig(**sim_kwargs)

    ana_kwargs = dataclasses.asdict(base.analysis)
    if parser.has_section("analysis"):
        for key, val in parser.items("analysis"):
            if key.lower() == "n":
                ana_kwargs["N"] = int(val)
            elif key.lower() == "n_max":
                ana_kwargs["N_max"] = int(val)
            elif key in ("tol", "margin_tol", "cap"):
                ana_kwargs[key] = float(val)
            else:
                raise ConfigError(f"unknown analysis key {key!r}")
            overrides.append(f"analysis.{key}={val}")
    analysis_cfg = AnalysisConfig(**ana_kwargs)

    seed = base.seed
    if parser.has_section("run") and parser.has_option("run", "seed"):
        seed = parser.getint("run", "seed")
        overrides.append(f"run.seed={seed}")

    return RunConfig(plant=plant, controller_type=ctype, controller=controller,
                     sim=sim_cfg, analysis=analysis_cfg, seed=seed,
                     overrides=tuple(overrides))
