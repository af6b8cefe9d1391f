"""
Configuration for simulations.

Two documents feed a run:

* a system document (JSON, or the `[tool.raman-echo.system]` table of a TOML
  file) describing levels, transitions, rates, ensemble and populations;
* run settings from the `[tool.raman-echo]` table of a pyproject-style TOML
  file (integrator, step, sampling, threads, efficiency metric).

Command-line flags override both.
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..core.errors import ConfigurationError
from .analysis import DEFAULT_NOISE_FLOOR, EfficiencyMetric
from .model import EnsembleSpec, FieldName, LevelSystem, Transition, rate_table
from .propagate import DEFAULT_DT_US, DEFAULT_SAMPLE_INTERVAL_US, Integrator

logger = logging.getLogger(__name__)

TOOL_SECTION = "raman-echo"


def parse_pair(key: str) -> Tuple[int, int]:
    """'31' -> (3, 1)"""
    key = key.strip()
    if len(key) != 2 or not key.isdigit():
        raise ValueError(f"rate key '{key}' must be two level digits such as '31'")
    return int(key[0]), int(key[1])


class TransitionEntry(BaseModel):
    """One field-coupled transition of the system document"""

    field: FieldName
    lower: int = Field(..., ge=1, le=4)
    upper: int = Field(..., ge=1, le=4)


class EnsembleEntry(BaseModel):
    fwhm_khz: float = Field(default=200.0, ge=0, description="Gaussian FWHM")
    spacing_khz: float = Field(default=2.0, gt=0, description="Bin spacing")
    truncation_khz: float = Field(default=250.0, gt=0, description="Grid half-width")


class SystemDocument(BaseModel):
    """System document; rate keys are level pairs such as "31" """

    model_config = ConfigDict(extra="forbid")

    levels: int = Field(default=3, ge=3, le=4, description="Number of levels")
    transitions: Optional[List[TransitionEntry]] = None
    gamma: Dict[str, float] = Field(default_factory=dict, description="Coherence linewidths (kHz)")
    big_gamma: Dict[str, float] = Field(default_factory=dict, description="Population decay rates (kHz)")
    shift_target: int = Field(default=2, ge=2, le=3)
    ensemble: EnsembleEntry = Field(default_factory=EnsembleEntry)
    initial_populations: Optional[List[float]] = None

    @field_validator("gamma", "big_gamma")
    @classmethod
    def validate_keys(cls, v: Dict[str, float]) -> Dict[str, float]:
        for key in v:
            parse_pair(key)
        return v

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "SystemDocument":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigurationError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
        return cls._from_data(data, path)

    @classmethod
    def from_toml(cls, path: Union[str, Path]) -> "SystemDocument":
        """Read the `[tool.raman-echo.system]` table; defaults when absent"""
        data = _read_toml(Path(path))
        section = data.get("tool", {}).get(TOOL_SECTION, {}).get("system", {})
        return cls._from_data(section, Path(path))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SystemDocument":
        """Dispatch on the file suffix (.json or .toml)"""
        path = Path(path)
        if path.suffix.lower() == ".toml":
            return cls.from_toml(path)
        return cls.from_json(path)

    @classmethod
    def _from_data(cls, data: Any, path: Path) -> "SystemDocument":
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: top level must be an object")
        try:
            return cls(**data)
        except ValidationError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc

    @classmethod
    def from_system(
        cls,
        system: LevelSystem,
        ensemble: Optional[EnsembleSpec] = None,
        populations: Optional[Tuple[float, ...]] = None,
    ) -> "SystemDocument":
        """Inverse of to_system; zero rates are omitted"""

        def table(rates: Tuple[Tuple[float, ...], ...], symmetric: bool) -> Dict[str, float]:
            out = {}
            for i, row in enumerate(rates, start=1):
                for j, value in enumerate(row, start=1):
                    if i == j or value == 0.0 or (symmetric and i < j):
                        continue
                    out[f"{i}{j}"] = value
            return out

        ensemble = ensemble or EnsembleSpec(shift_target=system.shift_target)
        return cls(
            levels=system.n_levels,
            transitions=[TransitionEntry(field=t.name, lower=t.lower, upper=t.upper) for t in system.transitions],
            gamma=table(system.gamma, symmetric=True),
            big_gamma=table(system.big_gamma, symmetric=False),
            shift_target=system.shift_target,
            ensemble=EnsembleEntry(
                fwhm_khz=ensemble.fwhm_khz,
                spacing_khz=ensemble.spacing_khz,
                truncation_khz=ensemble.truncation_khz,
            ),
            initial_populations=None if populations is None else list(populations),
        )

    def to_system(self) -> LevelSystem:
        """
        LevelSystem from the document.

        gamma is symmetric, so "21" and "12" name the same linewidth; big_gamma
        is directional ("31" is |3> -> |1>).
        """
        n = self.levels
        try:
            gamma = rate_table(n, {parse_pair(k): v for k, v in self.gamma.items()}, symmetric=True)
            big_gamma = rate_table(n, {parse_pair(k): v for k, v in self.big_gamma.items()})
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        if self.transitions is None:
            system = LevelSystem.from_rates(n, {}, {}, shift_target=self.shift_target)
            transitions = system.transitions
        else:
            transitions = tuple(Transition(name=t.field, lower=t.lower, upper=t.upper) for t in self.transitions)
        return LevelSystem(
            n_levels=n,
            transitions=transitions,
            big_gamma=big_gamma,
            gamma=gamma,
            shift_target=self.shift_target,
        )

    def to_ensemble(self) -> EnsembleSpec:
        return EnsembleSpec(
            fwhm_khz=self.ensemble.fwhm_khz,
            spacing_khz=self.ensemble.spacing_khz,
            truncation_khz=self.ensemble.truncation_khz,
            shift_target=self.shift_target,
        )

    def populations(self) -> Optional[Tuple[float, ...]]:
        return None if self.initial_populations is None else tuple(self.initial_populations)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json", exclude_none=True), indent=2, sort_keys=True) + "\n"


class RunSettings(BaseModel):
    """Numerical and reporting settings of a run"""

    integrator: Integrator = Field(default=Integrator.EXACT, description="exact or rk4")
    dt_us: float = Field(default=DEFAULT_DT_US, gt=0, description="RK4 step bound")
    sample_interval_us: float = Field(default=DEFAULT_SAMPLE_INTERVAL_US, gt=0, description="Output spacing")
    threads: Optional[int] = Field(default=None, ge=1, description="Worker cap; CPU count when unset")
    efficiency_metric: EfficiencyMetric = Field(default=EfficiencyMetric.AMPLITUDE)
    noise_floor: float = Field(default=DEFAULT_NOISE_FLOOR, gt=0, description="Echo peak threshold")
    cross_check: bool = Field(default=False, description="Compare exact and RK4 on one member")

    @classmethod
    def from_toml(cls, path: Union[str, Path]) -> "RunSettings":
        """Load the `[tool.raman-echo]` table; the `system` sub-table is ignored here."""
        data = _read_toml(Path(path))
        section = dict(data.get("tool", {}).get(TOOL_SECTION, {}))
        section.pop("system", None)
        try:
            return cls(**section)
        except ValidationError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc

    def merged(self, **overrides: Any) -> "RunSettings":
        """Copy with every non-None override applied"""
        update = {key: value for key, value in overrides.items() if value is not None}
        return self.model_validate({**self.model_dump(), **update})


def _read_toml(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ConfigurationError(f"configuration file not found: {path}")
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


def load_settings(path: Optional[Union[str, Path]] = None) -> RunSettings:
    """Settings from an explicit TOML file, else defaults; nothing is discovered implicitly."""
    if path is None:
        return RunSettings()
    logger.debug(f"reading run settings from {path}")
    return RunSettings.from_toml(path)
