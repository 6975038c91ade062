import logging
from dataclasses import dataclass, field
from enum import Enum
from math import pi
from typing import Mapping

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from common_lib.errors import EvanescentModeError, InvalidGeometryError, OverlappingSegmentsError
from common_lib.optics.egh_modes import PumpGeometry
from common_lib.optics.transforms import SpatialFrequency

logger = logging.getLogger(__name__)

SINC_SERIES_LIMIT = 1e-8
AXES = {"x": 0, "y": 1, "z": 2}


class MismatchConvention(str, Enum):
    PAPER_LITERAL = "paper"
    EXPONENT_CONSISTENT = "exponent"


def chi_from_entries(entries: Mapping[str, complex]) -> np.ndarray:
    """Build a rank-3 susceptibility from entries keyed like "zxy" (pump, signal, idler axes)"""
    chi = np.zeros((3, 3, 3), dtype=complex)
    for key, value in entries.items():
        if len(key) != 3 or any(axis not in AXES for axis in key.lower()):
            raise ValueError(f"Susceptibility key must be three of x/y/z, got {key!r}")
        o, q, r = (AXES[axis] for axis in key.lower())
        chi[o, q, r] = value
    return chi


@dataclass(frozen=True)
class CrystalSegment:
    offset: float = 0.0


@dataclass(frozen=True)
class CrystalConfig:
    """Crystal (or stack of equal-length crystals) along the pump axis.

    Segment j occupies pump-axis positions [delta_z + offset_j - L/2, delta_z + offset_j + L/2],
    so the pump focus sits delta_z before the center of the first segment.
    """

    length: float
    delta_z: float = 0.0
    segments: tuple[CrystalSegment, ...] = (CrystalSegment(0.0),)
    n_p: float = 1.0
    n_s: float = 1.0
    n_i: float = 1.0
    chi: np.ndarray = field(default_factory=lambda: chi_from_entries({"zxy": 1.0}), compare=False)

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidGeometryError(f"Crystal length must be positive, got {self.length}")
        for name in ("n_p", "n_s", "n_i"):
            if getattr(self, name) < 1:
                raise InvalidGeometryError(f"Refractive index {name} must be >= 1, got {getattr(self, name)}")
        segments = tuple(s if isinstance(s, CrystalSegment) else CrystalSegment(float(s)) for s in self.segments)
        object.__setattr__(self, "segments", segments)
        chi = np.asarray(self.chi, dtype=complex)
        if chi.shape != (3, 3, 3):
            raise InvalidGeometryError(f"Susceptibility must be a 3x3x3 tensor, got shape {chi.shape}")
        object.__setattr__(self, "chi", chi)
        check_segments(self)

    def z_interval(self, segment: CrystalSegment = CrystalSegment(0.0)) -> tuple[float, float]:
        center = self.delta_z + segment.offset
        return center - self.length / 2, center + self.length / 2


def check_segments(crystal: CrystalConfig):
    if not crystal.segments:
        raise OverlappingSegmentsError("A crystal needs at least one segment")
    offsets = sorted(s.offset for s in crystal.segments)
    # touching segments are allowed; rounding in offsets like k * L is tolerated
    slack = 1e-12 * crystal.length
    for first, second in zip(offsets, offsets[1:]):
        if second - first < crystal.length - slack:
            raise OverlappingSegmentsError(
                f"Segments at offsets {first} and {second} overlap for length {crystal.length}"
            )


def delta_nu_components(
    nu_plus_x,
    nu_plus_y,
    nu_plus_z,
    geom: PumpGeometry,
    conv: MismatchConvention = MismatchConvention.EXPONENT_CONSISTENT,
):
    """Momentum mismatch for (arrays of) summed signal+idler spatial frequencies"""
    perp_squared = np.asarray(nu_plus_x) ** 2 + np.asarray(nu_plus_y) ** 2
    weight = geom.wavelength if conv == MismatchConvention.PAPER_LITERAL else geom.wavelength / 2
    return 1 / geom.wavelength - weight * perp_squared - np.asarray(nu_plus_z)


def delta_nu(
    nu_s: SpatialFrequency,
    nu_i: SpatialFrequency,
    geom: PumpGeometry,
    conv: MismatchConvention = MismatchConvention.EXPONENT_CONSISTENT,
) -> float:
    plus = nu_s + nu_i
    return float(delta_nu_components(plus.nu_x, plus.nu_y, plus.nu_z, geom, conv))


def phi(dnu, crystal: CrystalConfig):
    """exp(i 2 pi dnu delta_z) sin(pi dnu L) / (pi dnu L); the series limit 1 near dnu = 0"""
    dnu = np.asarray(dnu, dtype=float)
    argument = pi * dnu * crystal.length
    small = np.abs(argument) < SINC_SERIES_LIMIT
    safe = np.where(small, 1.0, argument)
    sinc = np.where(small, 1.0, np.sin(safe) / safe)
    value = np.exp(2j * pi * dnu * crystal.delta_z) * sinc
    return complex(value) if value.ndim == 0 else value


def phi_multi(dnu, crystal: CrystalConfig):
    """Coherent sum over the crystal segments of the single-crystal phase matching"""
    check_segments(crystal)
    dnu = np.asarray(dnu, dtype=float)
    single = phi(dnu, crystal)
    total = 0
    for segment in crystal.segments:
        total = total + np.exp(2j * pi * dnu * segment.offset) * single
    return complex(total) if np.ndim(total) == 0 else total


def on_shell_nu_z(f, n: float, nu_perp):
    """Longitudinal in-medium spatial frequency sqrt((n f / c)^2 - nu_perp^2)"""
    k = n * np.asarray(f, dtype=float) / SPEED_OF_LIGHT
    nu_perp = np.asarray(nu_perp, dtype=float)
    radicand = k**2 - nu_perp**2
    if np.any(radicand < 0):
        offending = np.argwhere(np.broadcast_to(radicand < 0, radicand.shape))
        raise EvanescentModeError(
            f"{len(offending)} point(s) have transverse frequency beyond n f / c (evanescent)",
            indices=[tuple(index) for index in offending],
        )
    value = np.sqrt(radicand)
    return float(value) if value.ndim == 0 else value


def phase_integral_oracle(dnu: float, crystal: CrystalConfig, nodes: int = 0) -> complex:
    """Gauss-Legendre quadrature of exp(i 2 pi dnu z) over the first segment's interval"""
    start, end = crystal.z_interval(crystal.segments[0])
    nodes = nodes or 64 + int(4 * abs(dnu) * crystal.length)
    points, weights = np.polynomial.legendre.leggauss(nodes)
    half = (end - start) / 2
    z = (start + end) / 2 + half * points
    return complex(half * np.sum(weights * np.exp(2j * pi * dnu * z)))
