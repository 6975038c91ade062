import logging
from dataclasses import dataclass
from math import pi, sqrt
from typing import Optional

import numpy as np

from common_lib.errors import BoundaryLeakageError
from common_lib.optics.egh_modes import ModeExpansion, ModeIndex, PumpGeometry, hermite, xi
from common_lib.util import boundary_ratio, is_power_of_two

logger = logging.getLogger(__name__)

BOUNDARY_LIMIT = 1e-6


@dataclass(frozen=True)
class SpatialFrequency:
    """In-medium spatial frequency in cycles/meter (free-space value divided by n)"""

    nu_x: float
    nu_y: float
    nu_z: float = 0.0

    def __add__(self, other: "SpatialFrequency") -> "SpatialFrequency":
        return SpatialFrequency(self.nu_x + other.nu_x, self.nu_y + other.nu_y, self.nu_z + other.nu_z)


@dataclass(frozen=True)
class SampledSpectrum:
    nu_x: np.ndarray
    nu_y: np.ndarray
    values: np.ndarray  # indexed [nu_x, nu_y]

    @property
    def spacing(self) -> float:
        return float(self.nu_x[1] - self.nu_x[0])

    @property
    def nyquist(self) -> float:
        return self.spacing * self.nu_x.size / 2

    def central_mask(self) -> np.ndarray:
        """Samples with |nu_x| and |nu_y| at most half the Nyquist frequency"""
        limit = self.nyquist / 2
        gx, gy = np.meshgrid(self.nu_x, self.nu_y, indexing="ij")
        return (np.abs(gx) <= limit) & (np.abs(gy) <= limit)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.nu_x, self.nu_y, indexing="ij")


def sample_axis(samples: int, extent: float) -> np.ndarray:
    """Beam-centered sample positions (j - N/2) * extent / N; x = 0 is a sample"""
    return (np.arange(samples) - samples // 2) * (extent / samples)


def egh_transverse_ft(idx: ModeIndex, geom: PumpGeometry, nu_x, nu_y, z: float = 0.0, kernel_sign: int = -1):
    """Closed-form transverse Fourier transform of an EGH mode.

    kernel_sign = -1 is the exp(-2 pi i nu.r) convention. The derivative factors
    follow the kernel, so +1 gives the transform for the opposite convention.
    """
    nu_x = np.asarray(nu_x, dtype=float)
    nu_y = np.asarray(nu_y, dtype=float)
    area = pi * geom.w0**2
    base_x = kernel_sign * 2j * pi * geom.w0 * nu_x
    base_y = kernel_sign * 2j * pi * geom.w0 * nu_y
    value = (
        geom.u0
        * area
        * base_x**idx.n
        * base_y**idx.m
        * np.exp(-pi * geom.wavelength * geom.z_r * xi(z, geom) * (nu_x**2 + nu_y**2))
    )
    return complex(value) if np.ndim(value) == 0 else value


def expansion_transverse_ft(expansion: ModeExpansion, geom: PumpGeometry, nu_x, nu_y, z: float = 0.0, kernel_sign: int = -1):
    total = 0
    for idx, c in expansion:
        total = total + c * egh_transverse_ft(idx, geom, nu_x, nu_y, z, kernel_sign)
    return total


def _check_boundary(field: np.ndarray):
    ratio = boundary_ratio(field)
    if ratio >= BOUNDARY_LIMIT:
        raise BoundaryLeakageError(
            f"Field at the grid boundary is {ratio:.3e} of its peak; "
            f"the oracle needs a field that has decayed below {BOUNDARY_LIMIT:g}"
        )


def dft_oracle(field: np.ndarray, extent: float) -> SampledSpectrum:
    """Continuous transverse FT approximated by a scaled, phase-corrected 2-D DFT.

    `field` is sampled on sample_axis(N, extent) in both directions, N a power
    of two, and indexed [x, y].
    """
    field = np.asarray(field, dtype=complex)
    if field.ndim != 2 or field.shape[0] != field.shape[1] or not is_power_of_two(field.shape[0]):
        raise ValueError(f"Field must be a 2^k x 2^k array, got shape {field.shape}")
    _check_boundary(field)
    samples = field.shape[0]
    step = extent / samples
    origin = -(samples // 2) * step
    nu = np.fft.fftshift(np.fft.fftfreq(samples, d=step))
    spectrum = np.fft.fftshift(np.fft.fft2(field))
    phase = np.exp(-2j * pi * nu * origin)
    values = step**2 * spectrum * phase[:, None] * phase[None, :]
    return SampledSpectrum(nu_x=nu, nu_y=nu.copy(), values=values)


def dft_oracle_1d(samples: np.ndarray, extent: float) -> tuple[np.ndarray, np.ndarray]:
    samples = np.asarray(samples, dtype=complex)
    if samples.ndim != 1 or not is_power_of_two(samples.size):
        raise ValueError(f"Samples must be a 1-D array of length 2^k, got shape {samples.shape}")
    _check_boundary(samples)
    step = extent / samples.size
    origin = -(samples.size // 2) * step
    nu = np.fft.fftshift(np.fft.fftfreq(samples.size, d=step))
    values = step * np.fft.fftshift(np.fft.fft(samples)) * np.exp(-2j * pi * nu * origin)
    return nu, values


def scaling_rule_check(n: int, a: float, samples: int = 1024) -> float:
    """Compare FT(d^n/dx^n f(x/a)) against a (2 pi i nu)^n F(a nu) for f = exp(-pi x^2).

    Returns the largest discrepancy over |nu| <= half Nyquist, relative to the
    largest expected magnitude there.
    """
    if not 0 <= n <= 4:
        raise ValueError(f"Derivative order must be between 0 and 4, got {n}")
    extent = 24 * a
    x = sample_axis(samples, extent)
    s = a / sqrt(pi)
    derivative = (-1 / s) ** n * hermite(n, x / s) * np.exp(-((x / s) ** 2))
    nu, computed = dft_oracle_1d(derivative, extent)
    expected = a * (2j * pi * nu) ** n * np.exp(-pi * (a * nu) ** 2)
    central = np.abs(nu) <= np.abs(nu).max() / 2
    discrepancy = np.abs(computed - expected)[central].max() / np.abs(expected)[central].max()
    logger.debug(f"scaling rule n={n}, a={a:.3e}: discrepancy {discrepancy:.3e}")
    return float(discrepancy)


def relative_l2_error(computed: np.ndarray, expected: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    computed = np.asarray(computed)
    expected = np.asarray(expected)
    if mask is not None:
        computed = computed[mask]
        expected = expected[mask]
    return float(np.linalg.norm(computed - expected) / np.linalg.norm(expected))


def parseval_gap(field: np.ndarray, extent: float, spectrum: SampledSpectrum) -> float:
    """Relative difference between the field energy and the spectrum energy"""
    step = extent / field.shape[0]
    energy = np.sum(np.abs(field) ** 2) * step**2
    spectral = np.sum(np.abs(spectrum.values) ** 2) * spectrum.spacing**2
    return float(abs(energy - spectral) / energy)
