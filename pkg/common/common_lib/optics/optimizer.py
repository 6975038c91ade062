import logging
from dataclasses import dataclass
from enum import Enum
from math import pi, sqrt
from typing import Optional

import numpy as np

from common_lib.errors import OptimizerNonConvergenceError
from common_lib.optics.egh_modes import ModeExpansion, ModeIndex, mode_indices
from common_lib.settings import BiphotonSettings, get_settings

logger = logging.getLogger(__name__)

PARAXIAL_ADVISORY = 0.3
BRUTE_FORCE_MAX_ORDER = 4
_MINUS_I_POWERS = (1 + 0j, -1j, -1 + 0j, 1j)


@dataclass(frozen=True)
class TargetDirection:
    """Target transverse sum direction, X = 2 pi w0 nu_+x and Y = 2 pi w0 nu_+y"""

    X: float
    Y: float

    def __post_init__(self):
        if abs(self.X) >= 1 or abs(self.Y) >= 1:
            logger.warning(f"Target ({self.X}, {self.Y}) is far outside the paraxial regime")
        elif abs(self.X) > PARAXIAL_ADVISORY or abs(self.Y) > PARAXIAL_ADVISORY:
            logger.warning(f"Target ({self.X}, {self.Y}) exceeds the paraxial advisory bound {PARAXIAL_ADVISORY}")

    @classmethod
    def from_frequencies(cls, nu_plus_x: float, nu_plus_y: float, w0: float) -> "TargetDirection":
        return cls(2 * pi * w0 * nu_plus_x, 2 * pi * w0 * nu_plus_y)


class IndexSet(str, Enum):
    ALL_NONZERO_ORDERS = "all"
    STRICTLY_POSITIVE_PAIRS = "positive"


class OptimizationMethod(str, Enum):
    CLOSED_FORM = "closed_form"
    BRUTE_FORCE = "brute_force"


def index_set_members(N: int, index_set: IndexSet = IndexSet.ALL_NONZERO_ORDERS) -> list[ModeIndex]:
    """The non-(0,0) indices of order <= N the optimization may populate"""
    if N < 0:
        raise ValueError(f"N must be nonnegative, got {N}")
    members = [idx for idx in mode_indices(N) if idx.order > 0]
    if IndexSet(index_set) == IndexSet.STRICTLY_POSITIVE_PAIRS:
        members = [idx for idx in members if idx.n >= 1 and idx.m >= 1]
    return members


@dataclass(frozen=True)
class OptimizationResult:
    expansion: ModeExpansion
    objective: float
    method: OptimizationMethod
    iterations: int = 0
    index_set: IndexSet = IndexSet.ALL_NONZERO_ORDERS

    def to_report(self) -> dict:
        return {
            "method": self.method.value,
            "index_set": self.index_set.value,
            "objective": self.objective,
            "iterations": self.iterations,
            "coefficients": [
                {"index": str(idx), "n": idx.n, "m": idx.m, "re": c.real, "im": c.imag}
                for idx, c in self.expansion
            ],
        }


def _target_vector(indices: list[ModeIndex], t: TargetDirection) -> np.ndarray:
    return np.array([(1j * t.X) ** idx.n * (1j * t.Y) ** idx.m for idx in indices])


def measurement_objective(exp: ModeExpansion, t: TargetDirection) -> float:
    """|sum c_nm (iX)^n (iY)^m|^2, the detection weight of the mode sum at the target"""
    total = sum(c * (1j * t.X) ** idx.n * (1j * t.Y) ** idx.m for idx, c in exp)
    return float(abs(total) ** 2)


def optimal_expansion(
    t: TargetDirection, N: int, index_set: IndexSet = IndexSet.ALL_NONZERO_ORDERS
) -> OptimizationResult:
    index_set = IndexSet(index_set)
    members = index_set_members(N, index_set)
    # the sum runs over the finite index set, never a closed-form series
    total = 1 + sum(t.X ** (2 * idx.n) * t.Y ** (2 * idx.m) for idx in members)
    norm = sqrt(total)
    coefficients = {ModeIndex(0, 0): 1 / norm}
    for idx in members:
        coefficients[idx] = _MINUS_I_POWERS[idx.order % 4] * t.X**idx.n * t.Y**idx.m / norm
    expansion = ModeExpansion(coefficients, N)
    return OptimizationResult(
        expansion=expansion,
        objective=measurement_objective(expansion, t),
        method=OptimizationMethod.CLOSED_FORM,
        index_set=index_set,
    )


def random_unit_expansion(rng: np.random.Generator, indices: list[ModeIndex]) -> ModeExpansion:
    draws = rng.normal(size=len(indices)) + 1j * rng.normal(size=len(indices))
    return ModeExpansion.normalized(dict(zip(indices, draws)), max(idx.order for idx in indices))


def _ascend(a: np.ndarray, start: np.ndarray, settings: BiphotonSettings) -> tuple[np.ndarray, float, int, bool]:
    # treats c and conj(c) as independent: the gradient of |a.c|^2 in conj(c) is conj(a) (a.c)
    c = start / np.linalg.norm(start)
    history = [abs(a @ c) ** 2]
    step = 1.0 / max(1.0, float(np.vdot(a, a).real))
    for iteration in range(1, settings.optimizer_max_iterations + 1):
        c = c + step * np.conj(a) * (a @ c)
        c = c / np.linalg.norm(c)
        history.append(abs(a @ c) ** 2)
        if iteration >= settings.optimizer_window:
            window = history[-settings.optimizer_window - 1 :]
            if max(window) - min(window) < settings.optimizer_tolerance:
                return c, history[-1], iteration, True
    return c, history[-1], settings.optimizer_max_iterations, False


def brute_force_optimal(
    t: TargetDirection,
    N: int,
    index_set: IndexSet = IndexSet.ALL_NONZERO_ORDERS,
    seed: int = 0,
    settings: Optional[BiphotonSettings] = None,
) -> OptimizationResult:
    """Projected gradient ascent of the objective over the unit sphere, from seeded random restarts"""
    settings = settings or get_settings()
    index_set = IndexSet(index_set)
    if N > BRUTE_FORCE_MAX_ORDER:
        raise ValueError(f"Brute force is limited to N <= {BRUTE_FORCE_MAX_ORDER}, got {N}")
    indices = [ModeIndex(0, 0)] + index_set_members(N, index_set)
    a = _target_vector(indices, t)
    rng = np.random.default_rng(seed)

    diagnostics = []
    best = None
    for restart in range(settings.optimizer_restarts):
        start = rng.normal(size=len(indices)) + 1j * rng.normal(size=len(indices))
        c, objective, iterations, converged = _ascend(a, start, settings)
        diagnostics.append(
            {"restart": restart, "iterations": iterations, "objective": float(objective), "converged": converged}
        )
        logger.debug(f"restart {restart}: objective {objective:.15g} after {iterations} iterations")
        if converged and (best is None or objective > best[1]):
            best = (c, objective, iterations)

    if best is None:
        raise OptimizerNonConvergenceError(
            f"No restart converged within {settings.optimizer_max_iterations} iterations",
            diagnostics=diagnostics,
        )
    c, _, iterations = best
    # global phase: c_00 real and positive
    if abs(c[0]) > 0:
        c = c * np.conj(c[0]) / abs(c[0])
    expansion = ModeExpansion.normalized(dict(zip(indices, c)), N)
    return OptimizationResult(
        expansion=expansion,
        objective=measurement_objective(expansion, t),
        method=OptimizationMethod.BRUTE_FORCE,
        iterations=iterations,
        index_set=index_set,
    )


def compare_methods(closed: OptimizationResult, brute: OptimizationResult) -> dict:
    """Objective, coefficient-modulus and relative-phase differences between two results"""
    indices = sorted(set(closed.expansion.coefficients) | set(brute.expansion.coefficients))
    modulus_delta = max(
        abs(abs(closed.expansion.coefficient(idx)) - abs(brute.expansion.coefficient(idx))) for idx in indices
    )
    phase_delta = 0.0
    origin = ModeIndex(0, 0)
    for idx in indices:
        a = closed.expansion.coefficient(idx) * np.conj(closed.expansion.coefficient(origin))
        b = brute.expansion.coefficient(idx) * np.conj(brute.expansion.coefficient(origin))
        if abs(a) > 1e-12 and abs(b) > 1e-12:
            phase_delta = max(phase_delta, abs(np.angle(a * np.conj(b))))
    return {
        "objective_delta": abs(closed.objective - brute.objective),
        "max_modulus_delta": float(modulus_delta),
        "max_phase_delta": float(phase_delta),
    }
