"""Strict JSON scenario configuration."""
import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ParamsConfig(_Strict):
    lam: float = Field(3.0, gt=0.0, description="cosmological constant")
    mass: float = Field(0.1, gt=0.0)
    spin: float = Field(0.0, ge=0.0)
    spin_cap: float = Field(0.1, gt=0.0, le=1.0)


class GridConfig(_Strict):
    n_r: int = Field(64, ge=16)
    n_theta: int = Field(16, ge=16)
    mode_m: int = 0
    epsilon_ext_fraction: float = Field(0.05, gt=0.0, lt=0.5)


class EvolutionSettings(_Strict):
    cfl: float = Field(0.25, gt=0.0, lt=1.0)
    t_end: float = Field(1.0, gt=0.0)
    dissipation: float = Field(0.01, ge=0.0)
    output_stride: int = Field(1, ge=1)
    rhs_kind: Literal["scalar", "tensor", "nonlinear"] = "scalar"
    symmetry: Literal["spherical", "axisymmetric"] = "spherical"
    # None selects 1 for scalar runs and 1e-3 for tensor runs
    amplitude: Optional[float] = Field(None, gt=0.0)
    pulse_center: Optional[float] = None
    pulse_width: float = Field(0.05, gt=0.0)


class InterpolationSettings(_Strict):
    n_fields: int = Field(10000, ge=1)
    l: int = Field(3, ge=0)
    N: int = Field(6, ge=2)
    n_grid: int = Field(64, ge=8)
    k_max: int = Field(16, ge=1)


class ConvergenceSettings(_Strict):
    # three nested grids: the configured grid and two successive refinements
    levels: Literal[3] = 3


class DecaySettings(_Strict):
    window: Optional[Tuple[float, float]] = None
    multiplier: Literal["T", "N"] = "N"


class ScenarioConfig(_Strict):
    params: ParamsConfig = Field(default_factory=ParamsConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    evolution: EvolutionSettings = Field(default_factory=EvolutionSettings)
    multipliers: List[Literal["T", "Phi", "N"]] = Field(default_factory=lambda: ["T", "N"])
    norms: List[int] = Field(default_factory=lambda: [0, 1])
    seed: int = 0
    interpolation: InterpolationSettings = Field(default_factory=InterpolationSettings)
    convergence: ConvergenceSettings = Field(default_factory=ConvergenceSettings)
    decay: DecaySettings = Field(default_factory=DecaySettings)

    def echo(self):
        """Fully populated dictionary, defaults included."""
        return self.model_dump(mode="json")


def _describe(err):
    issues = []
    for e in err.errors():
        key = ".".join(str(p) for p in e["loc"]) or "<root>"
        issues.append({"key": key, "constraint": e["msg"], "type": e["type"]})
    return issues


def config_from_dict(data):
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as err:
        issues = _describe(err)
        first = issues[0]
        raise ConfigError(f"invalid config key {first['key']!r}: {first['constraint']}",
                          issues=issues) from None


def parse_config(path):
    """Read and validate a JSON scenario file; ``None`` gives all defaults."""
    if path is None:
        return ScenarioConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", path=str(path))
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err.msg}", line=err.lineno,
                          column=err.colno) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(data)
