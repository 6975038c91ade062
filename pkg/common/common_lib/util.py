from math import factorial
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def boundary_ratio(field: np.ndarray) -> float:
    """Largest magnitude on the outer edge of a sampled field relative to its peak.

    Works for 1-D and 2-D samples. Returns inf when the field is identically zero.
    """
    magnitude = np.abs(np.asarray(field))
    peak = magnitude.max()
    if peak == 0:
        return float("inf")
    if magnitude.ndim == 1:
        edge = max(magnitude[0], magnitude[-1])
    else:
        edge = max(
            magnitude[0, :].max(),
            magnitude[-1, :].max(),
            magnitude[:, 0].max(),
            magnitude[:, -1].max(),
        )
    return float(edge / peak)


def trapezoid_2d(values: np.ndarray, x: np.ndarray, y: np.ndarray) -> complex:
    """Tensor-product trapezoid rule; values are indexed [x, y]"""
    return complex(trapezoid(trapezoid(values, x=y, axis=1), x=x, axis=0))


def cauchy_mixed_derivative(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x0: float,
    y0: float,
    n: int,
    m: int,
    radius: float,
    nodes: int = 64,
) -> complex:
    """d^n/dx^n d^m/dy^m f at (x0, y0) for f analytic in both arguments.

    Cauchy's integral formula on a circle of the given radius in each variable,
    discretized with the trapezoid rule (spectrally accurate for entire functions).
    """
    theta = 2 * np.pi * np.arange(nodes) / nodes
    ring = radius * np.exp(1j * theta)
    zx, zy = np.meshgrid(x0 + ring, y0 + ring, indexing="ij")
    samples = f(zx, zy)
    weights_x = np.exp(-1j * n * theta)
    weights_y = np.exp(-1j * m * theta)
    total = weights_x @ samples @ weights_y
    return complex(factorial(n) * factorial(m) * total / (nodes**2 * radius ** (n + m)))
