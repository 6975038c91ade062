"""Elegant (complex) Gauss-Hermite pump modes.

A mode of order (n, m) is the (n, m)-th transverse derivative of the paraxial
kernel exp(-pi rho^2 / (lambda z_r xi)), scaled by u0 (-w0)^(n+m) / xi, with
xi = 1 + i z / z_r. Evaluation uses the equivalent Hermite closed form.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from math import factorial, isfinite, pi, sqrt
from typing import Callable, Iterator, Literal, Mapping, Optional

import numpy as np

from common_lib.errors import (
    InsufficientDomainError,
    InsufficientPowerError,
    InvalidGeometryError,
    QuadratureNonConvergenceError,
)
from common_lib.settings import BiphotonSettings, get_settings
from common_lib.util import boundary_ratio, cauchy_mixed_derivative, trapezoid_2d

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-12
DECOMPOSE_BOUNDARY_LIMIT = 1e-6


@dataclass(frozen=True, order=True)
class ModeIndex:
    n: int
    m: int

    def __post_init__(self):
        if int(self.n) != self.n or int(self.m) != self.m or self.n < 0 or self.m < 0:
            raise ValueError(f"Mode orders must be nonnegative integers, got ({self.n}, {self.m})")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))

    @property
    def order(self) -> int:
        return self.n + self.m

    def __str__(self) -> str:
        return f"({self.n},{self.m})"


def mode_indices(max_order: int) -> list[ModeIndex]:
    """All (n, m) with n + m <= max_order, ordered by total order then n descending"""
    if max_order < 0:
        raise ValueError(f"max_order must be nonnegative, got {max_order}")
    return [ModeIndex(order - m, m) for order in range(max_order + 1) for m in range(order + 1)]


@dataclass(frozen=True)
class PumpGeometry:
    """Pump beam geometry. `wavelength` is the in-medium wavelength (free space / n_p)."""

    wavelength: float
    w0: float
    u0: complex = 1.0

    def __post_init__(self):
        if not (isfinite(self.wavelength) and self.wavelength > 0):
            raise InvalidGeometryError(f"Pump wavelength must be positive, got {self.wavelength}")
        if not (isfinite(self.w0) and self.w0 > 0):
            raise InvalidGeometryError(f"Pump waist must be positive, got {self.w0}")

    @classmethod
    def from_free_space(cls, wavelength_m: float, n_p: float, waist_m: float, u0: complex = 1.0) -> "PumpGeometry":
        if n_p < 1:
            raise InvalidGeometryError(f"Refractive index must be >= 1, got {n_p}")
        return cls(wavelength=wavelength_m / n_p, w0=waist_m, u0=u0)

    @property
    def z_r(self) -> float:
        return pi * self.w0**2 / self.wavelength

    @property
    def wavenumber(self) -> float:
        return 2 * pi / self.wavelength


@dataclass(frozen=True)
class TransversePoint:
    x: float
    y: float
    z: float = 0.0


@dataclass(frozen=True)
class ModeExpansion:
    coefficients: Mapping[ModeIndex, complex]
    max_order: int

    def __post_init__(self):
        coefficients = {ModeIndex(*k) if not isinstance(k, ModeIndex) else k: complex(v) for k, v in self.coefficients.items()}
        if not coefficients:
            raise ValueError("A mode expansion needs at least one coefficient")
        too_high = [str(idx) for idx in coefficients if idx.order > self.max_order]
        if too_high:
            raise ValueError(f"Indices {too_high} exceed max order {self.max_order}")
        power = sum(abs(c) ** 2 for c in coefficients.values())
        if abs(power - 1) > NORMALIZATION_TOLERANCE:
            raise ValueError(f"Mode coefficients must satisfy sum |c|^2 = 1, got {power!r}")
        object.__setattr__(self, "coefficients", dict(sorted(coefficients.items())))

    @classmethod
    def normalized(cls, coefficients: Mapping[ModeIndex, complex], max_order: Optional[int] = None) -> "ModeExpansion":
        coefficients = {ModeIndex(*k) if not isinstance(k, ModeIndex) else k: complex(v) for k, v in coefficients.items()}
        power = sum(abs(c) ** 2 for c in coefficients.values())
        if power == 0:
            raise InsufficientPowerError("Cannot normalize an expansion with zero power")
        scale = 1 / sqrt(power)
        if max_order is None:
            max_order = max(idx.order for idx in coefficients)
        return cls({idx: c * scale for idx, c in coefficients.items()}, max_order)

    @classmethod
    def pure(cls, idx: ModeIndex) -> "ModeExpansion":
        return cls({idx: 1.0}, idx.order)

    def __iter__(self) -> Iterator[tuple[ModeIndex, complex]]:
        return iter(self.coefficients.items())

    def coefficient(self, idx: ModeIndex) -> complex:
        return self.coefficients.get(idx, 0j)

    def power(self) -> float:
        return float(sum(abs(c) ** 2 for c in self.coefficients.values()))

    def to_records(self) -> list[dict]:
        return [
            {"n": idx.n, "m": idx.m, "re": c.real, "im": c.imag}
            for idx, c in self.coefficients.items()
        ]


class PartnerConvention(str, Enum):
    PAPER_LITERAL = "paper"
    BIORTHOGONAL = "biorthogonal"


def xi(z, geom: PumpGeometry):
    """Complex beam parameter 1 + i z / z_r (works on scalars and arrays)"""
    value = 1 + 1j * np.asarray(z, dtype=float) / geom.z_r
    return complex(value) if np.ndim(value) == 0 else value


def hermite(n: int, w):
    """Physicists' Hermite polynomial H_n(w) for complex w, by three-term recursion"""
    if n < 0:
        raise ValueError(f"Hermite order must be nonnegative, got {n}")
    w = np.asarray(w, dtype=complex)
    previous = np.ones_like(w)
    if n == 0:
        return complex(previous) if previous.ndim == 0 else previous
    current = 2 * w
    for k in range(1, n):
        previous, current = current, 2 * w * current - 2 * k * previous
    return complex(current) if current.ndim == 0 else current


def egh_kernel(geom: PumpGeometry, x, y, z):
    """The paraxial Gaussian kernel exp(-pi rho^2 / (lambda z_r xi)); accepts complex x, y"""
    q = 1 + 1j * np.asarray(z) / geom.z_r
    return np.exp(-pi * (np.asarray(x) ** 2 + np.asarray(y) ** 2) / (geom.wavelength * geom.z_r * q))


def egh_field(idx: ModeIndex, geom: PumpGeometry, x, y, z) -> np.ndarray:
    x, y, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float), np.asarray(z, dtype=float))
    q = 1 + 1j * z / geom.z_r
    root = np.sqrt(q)
    scale = geom.w0 * root
    return (
        geom.u0
        / q
        / root**idx.order
        * hermite(idx.n, x / scale)
        * hermite(idx.m, y / scale)
        * egh_kernel(geom, x, y, z)
    )


def egh_eval(idx: ModeIndex, geom: PumpGeometry, p: TransversePoint) -> complex:
    return complex(egh_field(idx, geom, p.x, p.y, p.z))


def synthesize(expansion: ModeExpansion | Mapping[ModeIndex, complex], geom: PumpGeometry, x, y, z) -> np.ndarray:
    items = expansion.coefficients.items() if isinstance(expansion, ModeExpansion) else expansion.items()
    total = None
    for idx, c in items:
        term = c * egh_field(idx, geom, x, y, z)
        total = term if total is None else total + term
    return total


def egh_derivative_form(idx: ModeIndex, geom: PumpGeometry, p: TransversePoint, nodes: int = 64) -> complex:
    """Evaluate a mode from its defining derivative form, differentiating the kernel numerically"""
    q = xi(p.z, geom)
    radius = 0.5 * geom.w0 * abs(np.sqrt(q))
    derivative = cauchy_mixed_derivative(
        lambda zx, zy: egh_kernel(geom, zx, zy, p.z),
        p.x,
        p.y,
        idx.n,
        idx.m,
        radius=radius,
        nodes=nodes,
    )
    return complex(geom.u0 * (-geom.w0) ** idx.order / q * derivative)


def psi_field(
    idx: ModeIndex,
    geom: PumpGeometry,
    x,
    y,
    z,
    convention: PartnerConvention = PartnerConvention.BIORTHOGONAL,
) -> np.ndarray:
    x, y, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float), np.asarray(z, dtype=float))
    q = 1 + 1j * z / geom.z_r
    if convention == PartnerConvention.PAPER_LITERAL:
        a = np.sqrt(pi / (geom.wavelength * geom.z_r * np.conj(q)))
        return hermite(idx.n, a * x) * hermite(idx.m, a * y)
    root = np.sqrt(q)
    scale = geom.w0 * root
    return root**idx.order * hermite(idx.n, x / scale) * hermite(idx.m, y / scale)


def psi_eval(
    idx: ModeIndex,
    geom: PumpGeometry,
    p: TransversePoint,
    convention: PartnerConvention = PartnerConvention.BIORTHOGONAL,
) -> complex:
    return complex(psi_field(idx, geom, p.x, p.y, p.z, convention))


def overlap_norm(idx: ModeIndex, geom: PumpGeometry) -> complex:
    """Diagonal overlap f_nm = u0 pi w0^2 2^(n+m) n! m! of a mode with its partner"""
    return geom.u0 * pi * geom.w0**2 * 2**idx.order * factorial(idx.n) * factorial(idx.m)


def biorthogonal_overlap(
    a: ModeIndex,
    b: ModeIndex,
    geom: PumpGeometry,
    z: float,
    convention: PartnerConvention = PartnerConvention.BIORTHOGONAL,
    settings: Optional[BiphotonSettings] = None,
) -> complex:
    settings = settings or get_settings()
    half_width = 8 * geom.w0 * max(1.0, abs(xi(z, geom)))
    points = settings.quadrature_initial_points
    previous = None
    for refinement in range(settings.quadrature_max_refinements + 1):
        axis = np.linspace(-half_width, half_width, points)
        gx, gy = np.meshgrid(axis, axis, indexing="ij")
        integrand = egh_field(a, geom, gx, gy, z) * psi_field(b, geom, gx, gy, z, convention)
        value = trapezoid_2d(integrand, axis, axis)
        scale = trapezoid_2d(np.abs(integrand), axis, axis).real
        if previous is not None:
            change = abs(value - previous)
            logger.debug(f"overlap {a}x{b} at z={z}: {points} points, change {change:.3e}")
            if change <= settings.quadrature_rtol * max(scale, abs(value)):
                return value
        previous = value
        points = 2 * points - 1
    raise QuadratureNonConvergenceError(
        f"Overlap of {a} with partner {b} at z={z} did not converge after "
        f"{settings.quadrature_max_refinements} refinements"
    )


@dataclass(frozen=True)
class DecompositionResult:
    expansion: ModeExpansion
    captured_power: float


def decompose(field: np.ndarray, x: np.ndarray, y: np.ndarray, geom: PumpGeometry, N: int) -> DecompositionResult:
    """Project a sampled field at z = 0 onto the EGH modes of order <= N.

    `field` is indexed [x, y] on the uniform axes `x` and `y`, which must reach
    at least 5 waists either side of the axis.
    """
    field = np.asarray(field, dtype=complex)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if field.shape != (x.size, y.size):
        raise ValueError(f"Field shape {field.shape} does not match axes ({x.size}, {y.size})")
    if N < 0:
        raise ValueError(f"N must be nonnegative, got {N}")
    if not np.any(field):
        raise InsufficientPowerError("Field is zero everywhere; nothing to decompose")
    reach = 5 * geom.w0 * (1 - 1e-9)
    if min(-x.min(), x.max(), -y.min(), y.max()) < reach:
        raise InsufficientDomainError(f"Sample grid must cover at least +/-5 w0 = {5 * geom.w0:.6g} m per axis")
    ratio = boundary_ratio(field)
    if ratio > DECOMPOSE_BOUNDARY_LIMIT:
        raise InsufficientDomainError(
            f"Field magnitude at the grid boundary is {ratio:.3e} of its peak (limit {DECOMPOSE_BOUNDARY_LIMIT:g})"
        )

    gx, gy = np.meshgrid(x, y, indexing="ij")
    raw = {}
    for idx in mode_indices(N):
        overlap = trapezoid_2d(field * psi_field(idx, geom, gx, gy, 0.0), x, y)
        raw[idx] = overlap / overlap_norm(idx, geom)
    captured = float(sum(abs(c) ** 2 for c in raw.values()))
    if captured == 0:
        raise InsufficientPowerError("Field has no overlap with any mode of the requested orders")
    logger.debug(f"decomposed field onto {len(raw)} modes, captured power {captured:.6g}")
    return DecompositionResult(ModeExpansion.normalized(raw, N), captured)


@dataclass(frozen=True)
class FiniteDifferenceGrid:
    """Evaluation points (outer product of x, y, z) and the stencil steps"""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    dx: float
    dy: float
    dz: float

    @classmethod
    def reference(cls, geom: PumpGeometry, points: int = 7) -> "FiniteDifferenceGrid":
        axis = np.linspace(-1.5 * geom.w0, 1.5 * geom.w0, points)
        return cls(
            x=axis,
            y=axis,
            z=np.array([-0.5, 0.0, 0.7]) * geom.z_r,
            dx=geom.w0 / 200,
            dy=geom.w0 / 200,
            dz=geom.z_r / 200,
        )


def paraxial_residual(
    idx: ModeIndex,
    geom: PumpGeometry,
    grid: FiniteDifferenceGrid,
    field: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]] = None,
    scale: Literal["wavenumber", "laplacian"] = "wavenumber",
) -> float:
    """Largest central-difference residual of lap_perp(u) + 2ik du/dz on the grid.

    "wavenumber" divides by max|k^2 u|; "laplacian" divides by max|lap_perp(u)|.
    """
    u = field or (lambda x, y, z: egh_field(idx, geom, x, y, z))
    gx, gy, gz = np.meshgrid(grid.x, grid.y, grid.z, indexing="ij")
    center = u(gx, gy, gz)
    laplacian = (u(gx + grid.dx, gy, gz) - 2 * center + u(gx - grid.dx, gy, gz)) / grid.dx**2 + (
        u(gx, gy + grid.dy, gz) - 2 * center + u(gx, gy - grid.dy, gz)
    ) / grid.dy**2
    dudz = (u(gx, gy, gz + grid.dz) - u(gx, gy, gz - grid.dz)) / (2 * grid.dz)
    k = geom.wavenumber
    residual = np.abs(laplacian + 2j * k * dudz).max()
    if scale == "laplacian":
        reference = np.abs(laplacian).max()
    else:
        reference = (k**2 * np.abs(center)).max()
    return float(residual / reference)
