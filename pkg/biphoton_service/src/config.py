import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator, model_validator
from scipy.constants import c as SPEED_OF_LIGHT

from common_lib.errors import NUMERICAL_ERRORS, ConfigError
from common_lib.optics.biphoton import X_HAT, Y_HAT, Z_HAT, AxisSpec, EnvelopeKind, JsaGridSpec, PumpEnvelope
from common_lib.optics.egh_modes import ModeExpansion, ModeIndex, PumpGeometry
from common_lib.optics.optimizer import IndexSet, TargetDirection
from common_lib.optics.phasematch import CrystalConfig, CrystalSegment, MismatchConvention, chi_from_entries
from common_lib.settings import get_settings

logger = logging.getLogger(__name__)

Axis = Literal["x", "y", "z"]
UNIT_VECTORS = {"x": X_HAT, "y": Y_HAT, "z": Z_HAT}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModeIndexConfig(_Section):
    n: int = Field(..., ge=0)
    m: int = Field(..., ge=0)

    def index(self) -> ModeIndex:
        return ModeIndex(self.n, self.m)


class ModeCoefficientConfig(ModeIndexConfig):
    re: float
    im: float = 0.0


class PumpConfig(_Section):
    wavelength_m: float = Field(..., gt=0, description="Free-space pump wavelength")
    n_p: float = Field(1.0, ge=1)
    waist_m: float = Field(..., gt=0)
    u0_re: float = 1.0
    u0_im: float = 0.0
    polarization: Axis = "z"
    modes: list[ModeCoefficientConfig] = Field(default_factory=lambda: [ModeCoefficientConfig(n=0, m=0, re=1.0)])
    max_order: Optional[int] = Field(None, ge=0)
    normalize: bool = False
    field_csv: Optional[Path] = None

    @field_validator("field_csv")
    @classmethod
    def _resolve_field_csv(cls, value: Optional[Path], info: ValidationInfo) -> Optional[Path]:
        if value is None:
            return None
        base_dir = (info.context or {}).get("base_dir")
        if base_dir is not None and not value.is_absolute():
            value = Path(base_dir) / value
        if not value.is_file():
            raise ValueError(f"field file {value} does not exist")
        return value


class EnvelopeConfig(_Section):
    kind: EnvelopeKind = EnvelopeKind.CW
    f_p_hz: Optional[float] = Field(None, gt=0, description="Defaults to c / wavelength_m")
    sigma_f_hz: float = Field(0.0, ge=0)
    cw_cell_hz: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _pulse_has_bandwidth(self) -> "EnvelopeConfig":
        if self.kind == EnvelopeKind.GAUSSIAN_PULSE and self.sigma_f_hz <= 0:
            raise ValueError("a gaussian_pulse envelope needs sigma_f_hz > 0")
        return self


class SegmentConfig(_Section):
    offset_m: float = 0.0


class CrystalSection(_Section):
    length_m: float = Field(..., gt=0)
    delta_z_m: float = 0.0
    segments: list[SegmentConfig] = Field(default_factory=lambda: [SegmentConfig()], min_length=1)
    n_s: float = Field(1.0, ge=1)
    n_i: float = Field(1.0, ge=1)
    chi: dict[str, float] = Field(default_factory=lambda: {"zxy": 1.0})

    @field_validator("chi")
    @classmethod
    def _chi_keys(cls, value: dict[str, float]) -> dict[str, float]:
        chi_from_entries(value)
        return value


class AxisConfig(_Section):
    start: float
    stop: float
    count: int = Field(..., ge=1)

    def spec(self) -> AxisSpec:
        return AxisSpec(self.start, self.stop, self.count)


class JsaSection(_Section):
    f_s_hz: Optional[float] = Field(None, gt=0, description="Defaults to half the pump frequency")
    f_i_hz: Optional[float] = Field(None, gt=0, description="Defaults to the pump frequency minus f_s_hz")
    signal_x: AxisConfig
    signal_y: AxisConfig
    idler_x: AxisConfig
    idler_y: AxisConfig
    signal_polarization: Axis = "x"
    idler_polarization: Axis = "y"

    def spec(self) -> JsaGridSpec:
        return JsaGridSpec(self.signal_x.spec(), self.signal_y.spec(), self.idler_x.spec(), self.idler_y.spec())


class ModesSection(_Section):
    x: AxisConfig
    y: AxisConfig
    z_m: list[float] = Field(default_factory=lambda: [0.0], min_length=1)
    mode: Optional[ModeIndexConfig] = Field(None, description="A single mode; the pump expansion when omitted")
    nu_x: Optional[AxisConfig] = None
    nu_y: Optional[AxisConfig] = None

    @model_validator(mode="after")
    def _spectrum_axes_together(self) -> "ModesSection":
        if (self.nu_x is None) != (self.nu_y is None):
            raise ValueError("nu_x and nu_y must be given together")
        return self


class TargetSection(_Section):
    X: float
    Y: float
    max_order: int = Field(2, ge=0)
    index_set: IndexSet = IndexSet.ALL_NONZERO_ORDERS


class DecomposeSection(_Section):
    max_order: int = Field(4, ge=0)


class RunConfig(_Section):
    pump: PumpConfig
    envelope: EnvelopeConfig = Field(default_factory=EnvelopeConfig)
    crystal: Optional[CrystalSection] = None
    jsa: Optional[JsaSection] = None
    modes: Optional[ModesSection] = None
    target: Optional[TargetSection] = None
    decompose: Optional[DecomposeSection] = None
    convention: MismatchConvention = MismatchConvention.EXPONENT_CONSISTENT
    seed: int = 0
    output_path: Path = Path("output")

    @model_validator(mode="after")
    def _within_budget(self) -> "RunConfig":
        budget = get_settings().max_grid_points
        if self.jsa is not None and self.jsa.spec().size > budget:
            raise ValueError(f"jsa grid has {self.jsa.spec().size} points, above the budget of {budget}")
        if self.modes is not None:
            size = self.modes.x.count * self.modes.y.count * len(self.modes.z_m)
            if size > budget:
                raise ValueError(f"modes grid has {size} points, above the budget of {budget}")
        if self.jsa is not None and self.crystal is None:
            raise ValueError("a jsa section needs a crystal section")
        return self

    def geometry(self) -> PumpGeometry:
        return PumpGeometry.from_free_space(
            self.pump.wavelength_m, self.pump.n_p, self.pump.waist_m, complex(self.pump.u0_re, self.pump.u0_im)
        )

    def expansion(self) -> ModeExpansion:
        coefficients = {mode.index(): complex(mode.re, mode.im) for mode in self.pump.modes}
        max_order = self.pump.max_order
        if max_order is None:
            max_order = max(idx.order for idx in coefficients)
        if self.pump.normalize:
            return ModeExpansion.normalized(coefficients, max_order)
        return ModeExpansion(coefficients, max_order)

    @property
    def pump_frequency(self) -> float:
        return self.envelope.f_p_hz or SPEED_OF_LIGHT / self.pump.wavelength_m

    def pump_envelope(self) -> PumpEnvelope:
        return PumpEnvelope(self.envelope.kind, self.pump_frequency, self.envelope.sigma_f_hz, self.envelope.cw_cell_hz)

    def crystal_config(self) -> CrystalConfig:
        if self.crystal is None:
            raise ConfigError("config has no 'crystal' section")
        return CrystalConfig(
            length=self.crystal.length_m,
            delta_z=self.crystal.delta_z_m,
            segments=tuple(CrystalSegment(s.offset_m) for s in self.crystal.segments),
            n_p=self.pump.n_p,
            n_s=self.crystal.n_s,
            n_i=self.crystal.n_i,
            chi=chi_from_entries(self.crystal.chi),
        )

    def signal_frequencies(self) -> tuple[float, float]:
        f_s = self.jsa.f_s_hz or self.pump_frequency / 2
        f_i = self.jsa.f_i_hz or self.pump_frequency - f_s
        return f_s, f_i

    def target_direction(self) -> TargetDirection:
        if self.target is None:
            raise ConfigError("config has no 'target' section")
        return TargetDirection(self.target.X, self.target.Y)

    def with_overrides(
        self,
        seed: Optional[int] = None,
        convention: Optional[MismatchConvention] = None,
        output_path: Optional[Path] = None,
    ) -> "RunConfig":
        update = {}
        if seed is not None:
            update["seed"] = seed
        if convention is not None:
            update["convention"] = MismatchConvention(convention)
        if output_path is not None:
            update["output_path"] = Path(output_path)
        return self.model_copy(update=update)


def _describe(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"  {location}: {item['msg']}")
    return "\n".join(lines)


def parse_config(text: str, source: str = "<config>", base_dir: Optional[Path] = None) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    try:
        return RunConfig.model_validate(data, context={"base_dir": base_dir})
    except ValidationError as e:
        raise ConfigError(f"{source}: invalid config\n{_describe(e)}") from e


def load_config(path: Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    config = parse_config(text, str(path), path.parent)
    logger.debug(f"loaded config {path}")
    return config


@contextmanager
def config_errors():
    """Report domain objects the config cannot build (bad geometry, unnormalized modes) as ConfigError"""
    try:
        yield
    except ConfigError:
        raise
    except NUMERICAL_ERRORS:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from e


def polarization(axis: Axis) -> tuple[complex, complex, complex]:
    return UNIT_VECTORS[axis]
