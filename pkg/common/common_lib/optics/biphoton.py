"""Joint spectral amplitude of the SPDC biphoton for an arbitrary EGH pump expansion.

Signal and idler are taken as Type-II (orthogonally polarized, commuting);
no exchange symmetrization is applied.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from math import isfinite, pi, sqrt
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.constants import h as PLANCK

from common_lib.errors import ConfigError, EvanescentModeError
from common_lib.optics.egh_modes import ModeExpansion, ModeIndex, PumpGeometry, synthesize, xi
from common_lib.optics.phasematch import (
    CrystalConfig,
    MismatchConvention,
    delta_nu_components,
    on_shell_nu_z,
    phi_multi,
)
from common_lib.optics.transforms import SpatialFrequency
from common_lib.settings import BiphotonSettings, get_settings
from common_lib.util import trapezoid_2d

logger = logging.getLogger(__name__)

X_HAT = (1.0 + 0j, 0j, 0j)
Y_HAT = (0j, 1.0 + 0j, 0j)
Z_HAT = (0j, 0j, 1.0 + 0j)

AMPLITUDE_NOTE = (
    "Amplitudes are per transverse-frequency cell with nu_z fixed on-shell; "
    "no d^3 nu Jacobian is applied and the overall phase is carried by the prefactor."
)


def _unit_vector(pol: Sequence[complex], name: str) -> tuple[complex, complex, complex]:
    vector = tuple(complex(v) for v in pol)
    if len(vector) != 3:
        raise ValueError(f"{name} polarization must have 3 components, got {len(vector)}")
    norm = sqrt(sum(abs(v) ** 2 for v in vector))
    if abs(norm - 1) > 1e-9:
        raise ValueError(f"{name} polarization must be a unit vector, got norm {norm!r}")
    return vector


@dataclass(frozen=True)
class PhotonMode:
    nu: SpatialFrequency
    f: float
    pol: tuple[complex, complex, complex] = X_HAT

    def __post_init__(self):
        if not (isfinite(self.f) and self.f > 0):
            raise ValueError(f"Photon frequency must be positive, got {self.f}")
        object.__setattr__(self, "pol", _unit_vector(self.pol, "Photon"))

    @classmethod
    def on_shell(cls, f: float, n: float, nu_x: float, nu_y: float, pol: Sequence[complex] = X_HAT) -> "PhotonMode":
        nu_z = on_shell_nu_z(f, n, sqrt(nu_x**2 + nu_y**2))
        return cls(SpatialFrequency(nu_x, nu_y, nu_z), f, tuple(pol))


class EnvelopeKind(str, Enum):
    CW = "cw"
    GAUSSIAN_PULSE = "gaussian_pulse"


@dataclass(frozen=True)
class PumpEnvelope:
    kind: EnvelopeKind
    f_p: float
    sigma_f: float = 0.0
    cw_cell: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EnvelopeKind(self.kind))
        if not (isfinite(self.f_p) and self.f_p > 0):
            raise ValueError(f"Pump center frequency must be positive, got {self.f_p}")
        if self.kind == EnvelopeKind.GAUSSIAN_PULSE and not self.sigma_f > 0:
            raise ValueError(f"A pulsed envelope needs sigma_f > 0, got {self.sigma_f}")
        if self.cw_cell is not None and not self.cw_cell > 0:
            raise ValueError(f"CW cell width must be positive, got {self.cw_cell}")

    @property
    def cell_width(self) -> float:
        return self.cw_cell if self.cw_cell is not None else get_settings().cw_cell_hz

    def describe(self) -> dict:
        description = {"kind": self.kind.value, "f_p_hz": self.f_p}
        if self.kind == EnvelopeKind.CW:
            description["cw_cell_hz"] = self.cell_width
            description["note"] = "CW envelope is a discretized delta: 1 within half a cell of f_p, else 0"
        else:
            description["sigma_f_hz"] = self.sigma_f
        return description


def chi_effective(chi: np.ndarray, e_p: Sequence[complex], e_s: Sequence[complex], e_i: Sequence[complex]) -> complex:
    """Contract chi^{oqr} with the pump polarization and the conjugated signal and idler ones"""
    return complex(
        np.einsum(
            "oqr,o,q,r->",
            np.asarray(chi, dtype=complex),
            np.asarray(e_p, dtype=complex),
            np.conj(np.asarray(e_s, dtype=complex)),
            np.conj(np.asarray(e_i, dtype=complex)),
        )
    )


def envelope_eval(env: PumpEnvelope, f_plus):
    f_plus = np.asarray(f_plus, dtype=float)
    detuning = f_plus - env.f_p
    if env.kind == EnvelopeKind.CW:
        value = np.where(np.abs(detuning) <= env.cell_width / 2, 1.0 + 0j, 0j)
    else:
        value = np.exp(-(detuning**2) / (4 * env.sigma_f**2)) + 0j
    return complex(value) if value.ndim == 0 else value


def _items(coefficients: ModeExpansion | Mapping[ModeIndex, complex]) -> list[tuple[ModeIndex, complex]]:
    if isinstance(coefficients, ModeExpansion):
        return list(coefficients)
    return [(ModeIndex(*k) if not isinstance(k, ModeIndex) else k, complex(c)) for k, c in coefficients.items()]


def mode_sum_factor(coefficients: ModeExpansion | Mapping[ModeIndex, complex], nu_plus_x, nu_plus_y, w0: float):
    """sum c_nm (2 pi i w0 nu_x)^n (2 pi i w0 nu_y)^m; coefficients need not be normalized"""
    items = _items(coefficients)
    base_x = 2j * pi * w0 * np.asarray(nu_plus_x, dtype=float)
    base_y = 2j * pi * w0 * np.asarray(nu_plus_y, dtype=float)
    powers_x = [np.ones_like(base_x)]
    for _ in range(max(idx.n for idx, _ in items)):
        powers_x.append(powers_x[-1] * base_x)
    powers_y = [np.ones_like(base_y)]
    for _ in range(max(idx.m for idx, _ in items)):
        powers_y.append(powers_y[-1] * base_y)
    total = 0
    for idx, c in items:
        total = total + c * powers_x[idx.n] * powers_y[idx.m]
    return complex(total) if np.ndim(total) == 0 else total


def jsa_prefactor(
    geom: PumpGeometry,
    crystal: CrystalConfig,
    e_p: Sequence[complex],
    e_s: Sequence[complex],
    e_i: Sequence[complex],
) -> complex:
    """2 h chi_eff V u0 with interaction volume V = pi w0^2 L"""
    volume = pi * geom.w0**2 * crystal.length
    return 2 * PLANCK * chi_effective(crystal.chi, e_p, e_s, e_i) * volume * geom.u0


def _amplitude(items, geom, crystal, env, conv, prefactor, sx, sy, sz, f_s, ix, iy, iz, f_i):
    # used by both jsa_point and jsa_grid
    px = sx + ix
    py = sy + iy
    dnu = delta_nu_components(px, py, sz + iz, geom, conv)
    gaussian = np.exp(-pi * geom.wavelength * geom.z_r * (px**2 + py**2))
    return (
        prefactor
        * envelope_eval(env, f_s + f_i)
        * np.sqrt(f_s * f_i)
        * phi_multi(dnu, crystal)
        * gaussian
        * mode_sum_factor(items, px, py, geom.w0)
    )


def jsa_from_coefficients(
    coefficients: Mapping[ModeIndex, complex],
    geom: PumpGeometry,
    crystal: CrystalConfig,
    env: PumpEnvelope,
    s: PhotonMode,
    i: PhotonMode,
    conv: MismatchConvention = MismatchConvention.EXPONENT_CONSISTENT,
    pump_pol: Sequence[complex] = Z_HAT,
) -> complex:
    """jsa_point without the normalization requirement; linear in the coefficients"""
    items = dict(_items(coefficients))
    prefactor = jsa_prefactor(geom, crystal, pump_pol, s.pol, i.pol)
    value = _amplitude(
        items, geom, crystal, env, conv, prefactor,
        s.nu.nu_x, s.nu.nu_y, s.nu.nu_z, s.f,
        i.nu.nu_x, i.nu.nu_y, i.nu.nu_z, i.f,
    )
    return complex(value)


def jsa_point(
    expansion: ModeExpansion,
    geom: PumpGeometry,
    crystal: CrystalConfig,
    env: PumpEnvelope,
    s: PhotonMode,
    i: PhotonMode,
    conv: MismatchConvention = MismatchConvention.EXPONENT_CONSISTENT,
    pump_pol: Sequence[complex] = Z_HAT,
) -> complex:
    return jsa_from_coefficients(expansion.coefficients, geom, crystal, env, s, i, conv, pump_pol)


@dataclass(frozen=True)
class AxisSpec:
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"Axis count must be at least 1, got {self.count}")

    def samples(self) -> np.ndarray:
        if self.count == 1:
            return np.array([float(self.start)])
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class JsaGridSpec:
    signal_x: AxisSpec
    signal_y: AxisSpec
    idler_x: AxisSpec
    idler_y: AxisSpec

    @property
    def size(self) -> int:
        return self.signal_x.count * self.signal_y.count * self.idler_x.count * self.idler_y.count


@dataclass(frozen=True)
class JointAmplitudeGrid:
    nu_sx: np.ndarray
    nu_sy: np.ndarray
    nu_ix: np.ndarray
    nu_iy: np.ndarray
    f_s: float
    f_i: float
    values: np.ndarray = field(repr=False)
    prefactor: complex
    convention: MismatchConvention
    envelope: PumpEnvelope

    def __post_init__(self):
        shape = (self.nu_sx.size, self.nu_sy.size, self.nu_ix.size, self.nu_iy.size)
        if self.values.shape != shape:
            raise ValueError(f"JSA values have shape {self.values.shape}, axes imply {shape}")
        if self.prefactor == 0:
            raise ValueError("JSA prefactor vanishes: the polarizations annihilate the susceptibility")

    def columns(self) -> dict[str, np.ndarray]:
        """Flat columns in storage order (nu_sx outermost, nu_iy innermost)"""
        sx, sy, ix, iy = np.meshgrid(self.nu_sx, self.nu_sy, self.nu_ix, self.nu_iy, indexing="ij")
        flat = self.values.ravel()
        return {
            "nu_sx": sx.ravel(),
            "nu_sy": sy.ravel(),
            "nu_ix": ix.ravel(),
            "nu_iy": iy.ravel(),
            "re": flat.real,
            "im": flat.imag,
        }

    def metadata(self) -> dict:
        return {
            "prefactor": {"re": self.prefactor.real, "im": self.prefactor.imag},
            "convention": self.convention.value,
            "envelope": self.envelope.describe(),
            "f_s_hz": self.f_s,
            "f_i_hz": self.f_i,
            "shape": list(self.values.shape),
            "axes": {
                "nu_sx": self.nu_sx.tolist(),
                "nu_sy": self.nu_sy.tolist(),
                "nu_ix": self.nu_ix.tolist(),
                "nu_iy": self.nu_iy.tolist(),
            },
            "note": AMPLITUDE_NOTE,
        }


def _on_shell_plane(f: float, n: float, nu_x: np.ndarray, nu_y: np.ndarray, role: str) -> np.ndarray:
    gx, gy = np.meshgrid(nu_x, nu_y, indexing="ij")
    try:
        return on_shell_nu_z(f, n, np.sqrt(gx**2 + gy**2))
    except EvanescentModeError as e:
        raise EvanescentModeError(
            f"{role}: {e}; offending ({role[0]}x, {role[0]}y) indices {e.indices}",
            indices=[(role, *(int(k) for k in index)) for index in e.indices],
        ) from e


def jsa_grid(
    expansion: ModeExpansion,
    geom: PumpGeometry,
    crystal: CrystalConfig,
    env: PumpEnvelope,
    grid_spec: JsaGridSpec,
    f_s: float,
    f_i: float,
    conv: MismatchConvention = MismatchConvention.EXPONENT_CONSISTENT,
    signal_pol: Sequence[complex] = X_HAT,
    idler_pol: Sequence[complex] = Y_HAT,
    pump_pol: Sequence[complex] = Z_HAT,
    settings: Optional[BiphotonSettings] = None,
) -> JointAmplitudeGrid:
    settings = settings or get_settings()
    if grid_spec.size > settings.max_grid_points:
        raise ConfigError(f"JSA grid has {grid_spec.size} points, above the budget of {settings.max_grid_points}")
    signal_pol = _unit_vector(signal_pol, "Signal")
    idler_pol = _unit_vector(idler_pol, "Idler")
    pump_pol = _unit_vector(pump_pol, "Pump")

    nu_sx, nu_sy = grid_spec.signal_x.samples(), grid_spec.signal_y.samples()
    nu_ix, nu_iy = grid_spec.idler_x.samples(), grid_spec.idler_y.samples()
    signal_z = _on_shell_plane(f_s, crystal.n_s, nu_sx, nu_sy, "signal")
    idler_z = _on_shell_plane(f_i, crystal.n_i, nu_ix, nu_iy, "idler")
    if env.kind == EnvelopeKind.CW:
        logger.warning(f"CW envelope is discretized on a {env.cell_width:g} Hz cell around f_p")

    prefactor = jsa_prefactor(geom, crystal, pump_pol, signal_pol, idler_pol)
    values = _amplitude(
        dict(expansion.coefficients), geom, crystal, env, conv, prefactor,
        nu_sx[:, None, None, None], nu_sy[None, :, None, None], signal_z[:, :, None, None], f_s,
        nu_ix[None, None, :, None], nu_iy[None, None, None, :], idler_z[None, None, :, :], f_i,
    )
    values = np.broadcast_to(values, (nu_sx.size, nu_sy.size, nu_ix.size, nu_iy.size)).astype(complex)
    logger.debug(f"tabulated JSA on a {values.shape} grid")
    return JointAmplitudeGrid(nu_sx, nu_sy, nu_ix, nu_iy, f_s, f_i, values, prefactor, conv, env)


def coincidence_probability(amp: complex, window_s: float, window_i: float) -> float:
    """Point-detector coincidence probability |amp * window_s * window_i|^2"""
    if window_s < 0 or window_i < 0:
        raise ValueError(f"Detector windows must be nonnegative, got {window_s}, {window_i}")
    return float(abs(amp * window_s * window_i) ** 2)


def volume_integral_oracle(
    coefficients: ModeExpansion | Mapping[ModeIndex, complex],
    geom: PumpGeometry,
    crystal: CrystalConfig,
    nu_plus: SpatialFrequency,
    transverse_points: int = 201,
    z_nodes: int = 0,
) -> complex:
    """Direct quadrature of u_pump(r) exp(i 2 pi z / lambda) exp(-i 2 pi nu_plus . r) over the crystal.

    Gauss-Legendre along z over every segment, trapezoid over a +/-10 w0 |xi| window transversally.
    """
    items = dict(_items(coefficients))
    axial = 1 / geom.wavelength - nu_plus.nu_z
    total = 0j
    for segment in crystal.segments:
        start, end = crystal.z_interval(segment)
        half = (end - start) / 2
        nodes = z_nodes or 48 + int(4 * abs(axial) * (end - start))
        points, weights = np.polynomial.legendre.leggauss(nodes)
        for z, weight in zip((start + end) / 2 + half * points, weights):
            reach = 10 * geom.w0 * abs(xi(z, geom))
            axis = np.linspace(-reach, reach, transverse_points)
            gx, gy = np.meshgrid(axis, axis, indexing="ij")
            pump = synthesize(items, geom, gx, gy, z)
            carrier = np.exp(-2j * pi * (nu_plus.nu_x * gx + nu_plus.nu_y * gy))
            plane = trapezoid_2d(pump * carrier, axis, axis)
            total += half * weight * plane * np.exp(2j * pi * axial * z)
    return complex(total)


def jsa_volume_oracle(
    coefficients: ModeExpansion | Mapping[ModeIndex, complex],
    geom: PumpGeometry,
    crystal: CrystalConfig,
    env: PumpEnvelope,
    s: PhotonMode,
    i: PhotonMode,
    pump_pol: Sequence[complex] = Z_HAT,
    transverse_points: int = 201,
) -> complex:
    """The JSA rebuilt from the volume integral, for comparison with jsa_point.

    The mode sum carries (2 pi i w0 nu)^n while the exp(-2 pi i nu.r) volume
    integral yields (-2 pi i w0 nu)^n, so the integral is taken at the mirrored
    transverse sum frequency. Agreement holds for the exponent-consistent mismatch.
    """
    plus = s.nu + i.nu
    mirrored = SpatialFrequency(-plus.nu_x, -plus.nu_y, plus.nu_z)
    integral = volume_integral_oracle(coefficients, geom, crystal, mirrored, transverse_points)
    chi = chi_effective(crystal.chi, pump_pol, s.pol, i.pol)
    return complex(2 * PLANCK * chi * envelope_eval(env, s.f + i.f) * sqrt(s.f * i.f) * integral)
