"""Named numerical invariants run by the `validate` command.

Each check is registered with @invariant and returns a CheckResult; run_suite
evaluates them in registration order at reference sizes.
"""
import logging
from dataclasses import dataclass, field
from math import pi, sqrt
from typing import Callable, Optional

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from common_lib.errors import BiphotonError
from common_lib.optics.biphoton import (
    EnvelopeKind,
    PhotonMode,
    PumpEnvelope,
    chi_effective,
    coincidence_probability,
    jsa_from_coefficients,
    jsa_point,
    jsa_volume_oracle,
)
from common_lib.optics.egh_modes import (
    FiniteDifferenceGrid,
    ModeExpansion,
    ModeIndex,
    PumpGeometry,
    TransversePoint,
    biorthogonal_overlap,
    decompose,
    egh_derivative_form,
    egh_eval,
    egh_field,
    mode_indices,
    overlap_norm,
    paraxial_residual,
    synthesize,
)
from common_lib.optics.optimizer import (
    IndexSet,
    TargetDirection,
    brute_force_optimal,
    compare_methods,
    index_set_members,
    measurement_objective,
    optimal_expansion,
    random_unit_expansion,
)
from common_lib.optics.phasematch import (
    SINC_SERIES_LIMIT,
    CrystalConfig,
    CrystalSegment,
    delta_nu,
    phase_integral_oracle,
    phi,
    phi_multi,
)
from common_lib.optics.transforms import (
    SpatialFrequency,
    dft_oracle,
    egh_transverse_ft,
    parseval_gap,
    relative_l2_error,
    sample_axis,
    scaling_rule_check,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class SuiteContext:
    geom: PumpGeometry
    ft_kernel_sign: int = -1
    seed: int = 0

    def rng(self, offset: int = 0) -> np.random.Generator:
        return np.random.default_rng(self.seed + offset)


@dataclass
class _Registry:
    checks: dict[str, Callable[[SuiteContext], CheckResult]] = field(default_factory=dict)


_registry = _Registry()


def invariant(name: str):
    def register(func: Callable[[SuiteContext], tuple[bool, str]]):
        def run(ctx: SuiteContext) -> CheckResult:
            passed, detail = func(ctx)
            return CheckResult(name, bool(passed), detail)

        _registry.checks[name] = run
        return func

    return register


def registered_checks() -> list[str]:
    return list(_registry.checks)


def reference_geometry() -> PumpGeometry:
    return PumpGeometry.from_free_space(405e-9, 1.0, 40e-6)


# ----- egh_modes -----


@invariant("rodrigues_equivalence")
def _rodrigues(ctx: SuiteContext):
    geom = ctx.geom
    rng = ctx.rng(1)
    worst = 0.0
    for idx in mode_indices(4):
        points = [
            TransversePoint(*rng.uniform(-2 * geom.w0, 2 * geom.w0, 2), rng.uniform(-geom.z_r, geom.z_r))
            for _ in range(20)
        ]
        closed = np.array([egh_eval(idx, geom, p) for p in points])
        derived = np.array([egh_derivative_form(idx, geom, p) for p in points])
        worst = max(worst, np.abs(closed - derived).max() / np.abs(closed).max())
    return worst <= 1e-6, f"max relative difference {worst:.3e} over orders <= 4"


@invariant("biorthogonality")
def _biorthogonality(ctx: SuiteContext):
    geom = ctx.geom
    reference = abs(overlap_norm(ModeIndex(0, 0), geom))
    worst = 0.0
    for z in (0.0, 0.5 * geom.z_r):
        for a in mode_indices(3):
            for b in mode_indices(3):
                if a != b:
                    worst = max(worst, abs(biorthogonal_overlap(a, b, geom, z)) / reference)
    return worst <= 1e-8, f"largest off-diagonal overlap {worst:.3e} of f_00"


@invariant("diagonal_constancy")
def _diagonal(ctx: SuiteContext):
    geom = ctx.geom
    worst = 0.0
    for idx in mode_indices(2):
        expected = overlap_norm(idx, geom)
        for z in (0.0, 0.5 * geom.z_r, 2 * geom.z_r):
            worst = max(worst, abs(biorthogonal_overlap(idx, idx, geom, z) - expected) / abs(expected))
    return worst <= 1e-6, f"largest diagonal drift {worst:.3e} across three planes"


@invariant("paraxial_equation")
def _paraxial(ctx: SuiteContext):
    geom = ctx.geom
    grid = FiniteDifferenceGrid.reference(geom)
    worst = max(paraxial_residual(idx, geom, grid) for idx in mode_indices(3))
    strict = max(paraxial_residual(idx, geom, grid, scale="laplacian") for idx in mode_indices(3))
    return worst <= 1e-3 and strict <= 1e-3, f"residual {worst:.3e} (k^2 scale), {strict:.3e} (laplacian scale)"


@invariant("paraxial_rejects_carrier_wave")
def _paraxial_negative(ctx: SuiteContext):
    geom = ctx.geom
    reference = FiniteDifferenceGrid.reference(geom)
    grid = FiniteDifferenceGrid(reference.x, reference.y, reference.z, reference.dx, reference.dy, geom.wavelength / 200)
    k = geom.wavenumber
    residual = paraxial_residual(
        ModeIndex(0, 0), geom, grid, field=lambda x, y, z: np.exp(1j * k * z) * np.ones_like(x, dtype=complex)
    )
    return residual > 1.0, f"full-carrier plane wave residual {residual:.3f} (must be rejected)"


@invariant("decompose_roundtrip")
def _decompose(ctx: SuiteContext):
    geom = ctx.geom
    rng = ctx.rng(2)
    expansion = random_unit_expansion(rng, mode_indices(3))
    axis = np.linspace(-8 * geom.w0, 8 * geom.w0, 321)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    result = decompose(synthesize(expansion, geom, gx, gy, 0.0), axis, axis, geom, 3)
    worst = max(abs(result.expansion.coefficient(idx) - c) for idx, c in expansion)
    return worst <= 1e-8, f"largest coefficient error {worst:.3e}, captured power {result.captured_power:.6f}"


# ----- transforms -----


def _ft_grid(geom: PumpGeometry, samples: int = 1024):
    extent = 20 * geom.w0
    axis = sample_axis(samples, extent)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    return extent, gx, gy


@invariant("ft_oracle_agreement")
def _ft_oracle(ctx: SuiteContext):
    geom = ctx.geom
    extent, gx, gy = _ft_grid(geom)
    worst = 0.0
    for z in (0.0, geom.z_r):
        for idx in mode_indices(4):
            spectrum = dft_oracle(egh_field(idx, geom, gx, gy, z), extent)
            nx, ny = spectrum.mesh()
            analytic = egh_transverse_ft(idx, geom, nx, ny, z, kernel_sign=ctx.ft_kernel_sign)
            worst = max(worst, relative_l2_error(analytic, spectrum.values, spectrum.central_mask()))
    return worst <= 1e-6, f"largest relative L2 error {worst:.3e} over orders <= 4, z in {{0, z_r}}"


@invariant("ft_sign_convention")
def _ft_sign(ctx: SuiteContext):
    geom = ctx.geom
    extent, gx, gy = _ft_grid(geom, 256)
    idx = ModeIndex(1, 0)
    spectrum = dft_oracle(egh_field(idx, geom, gx, gy, 0.0), extent)
    nx, ny = spectrum.mesh()
    analytic = egh_transverse_ft(idx, geom, nx, ny, 0.0, kernel_sign=ctx.ft_kernel_sign)
    mask = spectrum.central_mask()
    correlation = np.vdot(analytic[mask], spectrum.values[mask]).real
    error = relative_l2_error(analytic, spectrum.values, mask)
    argument = np.angle(egh_transverse_ft(idx, geom, 1 / geom.w0, 0.0, 0.0, kernel_sign=ctx.ft_kernel_sign))
    passed = correlation > 0 and error <= 1e-6 and abs(argument + pi / 2) <= 1e-15
    return passed, f"arg at nu_x > 0 is {argument:.15f}, odd-mode correlation {correlation:.3e}, error {error:.3e}"


@invariant("parseval")
def _parseval(ctx: SuiteContext):
    geom = ctx.geom
    extent, gx, gy = _ft_grid(geom, 512)
    worst = 0.0
    for idx in (ModeIndex(0, 0), ModeIndex(2, 1)):
        field_ = egh_field(idx, geom, gx, gy, 0.0)
        worst = max(worst, parseval_gap(field_, extent, dft_oracle(field_, extent)))
    return worst <= 1e-8, f"largest energy gap {worst:.3e}"


@invariant("ft_scaling_rule")
def _scaling(ctx: SuiteContext):
    worst = max(scaling_rule_check(n, a) for n in range(5) for a in (0.5, 1.0, 2.0))
    return worst <= 1e-8, f"largest discrepancy {worst:.3e}"


# ----- phasematch -----


def _reference_crystal(delta_z: float = 0.0) -> CrystalConfig:
    return CrystalConfig(length=1e-3, delta_z=delta_z)


@invariant("phi_limit_continuity")
def _phi_limit(ctx: SuiteContext):
    crystal = _reference_crystal()
    L = crystal.length
    at_zero = abs(phi(0.0, crystal) - 1)
    near = max(abs(phi(s * 1e-9 / L, crystal) - 1) for s in (-1, 1))
    edge = SINC_SERIES_LIMIT / (pi * L)
    jump = abs(phi(edge * (1 - 1e-6), crystal) - phi(edge * (1 + 1e-6), crystal))
    passed = at_zero == 0 and near <= 1e-12 and jump <= 1e-14
    return passed, f"phi(0)-1 = {at_zero:.1e}, near-zero deviation {near:.1e}, jump at series limit {jump:.1e}"


@invariant("phi_zeros")
def _phi_zeros(ctx: SuiteContext):
    crystal = _reference_crystal(delta_z=0.37e-3)
    worst = max(abs(phi(k / crystal.length, crystal)) for k in (-3, -2, -1, 1, 2, 3))
    return worst <= 1e-10, f"largest |phi| at k/L: {worst:.3e}"


@invariant("phi_integral_oracle")
def _phi_oracle(ctx: SuiteContext):
    rng = ctx.rng(3)
    worst = 0.0
    for _ in range(50):
        crystal = _reference_crystal(delta_z=rng.uniform(-2e-3, 2e-3))
        dnu = rng.uniform(-5, 5) / crystal.length
        oracle = phase_integral_oracle(dnu, crystal)
        worst = max(worst, abs(phi(dnu, crystal) * crystal.length - oracle) / crystal.length)
    return worst <= 1e-8, f"largest relative difference {worst:.3e} over 50 mismatches"


@invariant("phi_multi_reduction")
def _phi_multi(ctx: SuiteContext):
    rng = ctx.rng(4)
    L = 1e-3
    worst = 0.0
    for dnu in rng.uniform(-4, 4, 20) / L:
        single = _reference_crystal(delta_z=0.2e-3)
        worst = max(worst, abs(phi_multi(dnu, single) - phi(dnu, single)))
        touching = CrystalConfig(L, 0.2e-3, (CrystalSegment(0.0), CrystalSegment(L)))
        doubled = CrystalConfig(2 * L, 0.2e-3 + L / 2)
        worst = max(worst, abs(L * phi_multi(dnu, touching) - 2 * L * phi(dnu, doubled)) / L)
    return worst <= 1e-12, f"largest deviation {worst:.3e}"


# ----- biphoton -----


@dataclass(frozen=True)
class _Setup:
    geom: PumpGeometry
    crystal: CrystalConfig
    env: PumpEnvelope
    f_p: float


def _biphoton_setup(delta_z: float = 0.0) -> _Setup:
    wavelength = 405e-9
    geom = PumpGeometry.from_free_space(wavelength, 1.0, 20e-6)
    f_p = SPEED_OF_LIGHT / wavelength
    return _Setup(geom, CrystalConfig(length=1e-3, delta_z=delta_z), PumpEnvelope(EnvelopeKind.CW, f_p), f_p)


def _random_pair(rng: np.random.Generator, setup: _Setup, spread: float = 2000.0) -> tuple[PhotonMode, PhotonMode]:
    f_s = setup.f_p / 2 * (1 + rng.uniform(-1e-3, 1e-3))
    f_i = setup.f_p - f_s
    s = PhotonMode.on_shell(f_s, setup.crystal.n_s, *rng.uniform(-spread, spread, 2), pol=(1, 0, 0))
    i = PhotonMode.on_shell(f_i, setup.crystal.n_i, *rng.uniform(-spread, spread, 2), pol=(0, 1, 0))
    return s, i


@invariant("chi_contraction")
def _chi(ctx: SuiteContext):
    rng = ctx.rng(5)
    chi = rng.normal(size=(3, 3, 3)) + 1j * rng.normal(size=(3, 3, 3))
    vectors = [v / np.linalg.norm(v) for v in rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))]
    e_p, e_s, e_i = vectors
    loop = sum(
        chi[o, q, r] * e_p[o] * np.conj(e_s[q]) * np.conj(e_i[r]) for o in range(3) for q in range(3) for r in range(3)
    )
    difference = abs(chi_effective(chi, e_p, e_s, e_i) - loop)
    return difference <= 1e-12 * max(1.0, abs(loop)), f"difference from 27-term sum {difference:.3e}"


@invariant("jsa_volume_oracle")
def _jsa_oracle(ctx: SuiteContext):
    rng = ctx.rng(6)
    worst = 0.0
    for _ in range(10):
        setup = _biphoton_setup(delta_z=rng.uniform(-1e-3, 1e-3))
        expansion = random_unit_expansion(rng, mode_indices(2))
        s, i = _random_pair(rng, setup)
        amplitude = jsa_point(expansion, setup.geom, setup.crystal, setup.env, s, i)
        oracle = jsa_volume_oracle(expansion, setup.geom, setup.crystal, setup.env, s, i)
        worst = max(worst, abs(amplitude - oracle) / abs(amplitude))
    return worst <= 1e-4, f"largest relative difference {worst:.3e} over 10 instances"


@invariant("jsa_linearity")
def _linearity(ctx: SuiteContext):
    rng = ctx.rng(7)
    setup = _biphoton_setup()
    s, i = _random_pair(rng, setup)
    indices = mode_indices(2)
    a = dict(zip(indices, rng.normal(size=6) + 1j * rng.normal(size=6)))
    b = dict(zip(indices, rng.normal(size=6) + 1j * rng.normal(size=6)))
    alpha, beta = 0.7 - 0.2j, -1.3 + 0.5j
    combined = {idx: alpha * a[idx] + beta * b[idx] for idx in indices}

    def jsa(coefficients):
        return jsa_from_coefficients(coefficients, setup.geom, setup.crystal, setup.env, s, i)

    lhs = jsa(combined)
    rhs = alpha * jsa(a) + beta * jsa(b)
    gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
    return gap <= 1e-12, f"relative superposition gap {gap:.3e}"


@invariant("jsa_transverse_damping")
def _damping(ctx: SuiteContext):
    setup = _biphoton_setup()
    geom = setup.geom
    expansion = ModeExpansion.pure(ModeIndex(0, 0))
    f = setup.f_p / 2
    worst = 0.0
    reference = None
    for nu in (0.0, 500.0, 1500.0, 3000.0, 6000.0):
        s = PhotonMode.on_shell(f, 1.0, nu / 2, 0.0)
        i = PhotonMode.on_shell(f, 1.0, nu / 2, 0.0, pol=(0, 1, 0))
        amplitude = jsa_point(expansion, geom, setup.crystal, setup.env, s, i)
        shape = abs(amplitude / phi_multi(delta_nu(s.nu, i.nu, geom), setup.crystal))
        if reference is None:
            reference = shape
        expected = np.exp(-pi * geom.wavelength * geom.z_r * nu**2)
        worst = max(worst, abs(shape / reference - expected) / expected)
    return worst <= 1e-12, f"largest deviation from exp(-pi lambda z_r nu^2) {worst:.3e}"


@invariant("jsa_energy_weighting")
def _energy(ctx: SuiteContext):
    setup = _biphoton_setup()
    env = PumpEnvelope(EnvelopeKind.CW, setup.f_p, cw_cell=1e30)
    expansion = ModeExpansion({ModeIndex(0, 0): 1 / sqrt(2), ModeIndex(1, 1): -1j / sqrt(2)}, 2)
    nu_s = SpatialFrequency(800.0, -300.0, 1.2e6)
    nu_i = SpatialFrequency(-200.0, 900.0, 1.2e6)
    f_s, f_i = 0.4 * setup.f_p, 0.6 * setup.f_p
    worst = 0.0
    base = jsa_point(expansion, setup.geom, setup.crystal, env, PhotonMode(nu_s, f_s), PhotonMode(nu_i, f_i, (0, 1, 0)))
    for scale in (0.5, 2.0, 3.0):
        scaled = jsa_point(
            expansion, setup.geom, setup.crystal, env,
            PhotonMode(nu_s, scale * f_s), PhotonMode(nu_i, scale * f_i, (0, 1, 0)),
        )
        worst = max(worst, abs(scaled / base - scale) / scale)
    return worst <= 1e-12, f"largest deviation from sqrt(f_s f_i) scaling {worst:.3e}"


# ----- optimizer -----


def _targets(rng: np.random.Generator, count: int = 10) -> list[TargetDirection]:
    return [TargetDirection(*rng.uniform(-0.3, 0.3, 2)) for _ in range(count)]


@invariant("optimizer_oracle_agreement")
def _oracle_agreement(ctx: SuiteContext):
    rng = ctx.rng(8)
    worst_objective = worst_modulus = 0.0
    for t in _targets(rng):
        for N in (1, 2):
            for index_set in IndexSet:
                if not index_set_members(N, index_set):
                    continue
                deltas = compare_methods(optimal_expansion(t, N, index_set), brute_force_optimal(t, N, index_set, ctx.seed))
                worst_objective = max(worst_objective, deltas["objective_delta"])
                worst_modulus = max(worst_modulus, deltas["max_modulus_delta"])
    passed = worst_objective <= 1e-9 and worst_modulus <= 1e-6
    return passed, f"objective delta {worst_objective:.3e}, modulus delta {worst_modulus:.3e}"


@invariant("tem00_collinear")
def _tem00(ctx: SuiteContext):
    results = [optimal_expansion(TargetDirection(0.0, 0.0), N) for N in range(5)]
    passed = all(
        r.expansion.coefficient(ModeIndex(0, 0)) == 1 and all(c == 0 for idx, c in r.expansion if idx.order > 0)
        for r in results
    )
    return passed, "collinear optimum is exactly the fundamental mode" if passed else "collinear optimum has higher modes"


@invariant("optimizer_dominance")
def _dominance(ctx: SuiteContext):
    rng = ctx.rng(9)
    worst = -np.inf
    for t in [TargetDirection(0.3, 0.2)] + _targets(rng, 3):
        best = optimal_expansion(t, 2)
        indices = [ModeIndex(0, 0)] + index_set_members(2)
        for _ in range(1000):
            worst = max(worst, measurement_objective(random_unit_expansion(rng, indices), t) - best.objective)
    return worst <= 1e-12, f"largest random excess over the optimum {worst:.3e}"


@invariant("optimizer_phase_law")
def _phase_law(ctx: SuiteContext):
    rng = ctx.rng(10)
    worst = 0.0
    for _ in range(10):
        t = TargetDirection(*rng.uniform(0.01, 0.3, 2))
        expansion = optimal_expansion(t, 4).expansion
        c00 = expansion.coefficient(ModeIndex(0, 0))
        for idx, c in expansion:
            expected = -idx.order * pi / 2
            worst = max(worst, abs(np.angle(c / c00 * np.exp(-1j * expected))))
    return worst <= 1e-10, f"largest phase-law deviation {worst:.3e} rad"


@invariant("optimizer_normalization")
def _normalization(ctx: SuiteContext):
    rng = ctx.rng(11)
    worst = 0.0
    for t in _targets(rng, 5):
        for result in (optimal_expansion(t, 3), brute_force_optimal(t, 2, seed=ctx.seed)):
            worst = max(worst, abs(result.expansion.power() - 1))
    return worst <= 1e-12, f"largest normalization error {worst:.3e}"


@invariant("hamiltonian_consistency")
def _hamiltonian(ctx: SuiteContext):
    setup = _biphoton_setup()
    geom = setup.geom
    t = TargetDirection(0.2, 0.1)
    nu_x = t.X / (2 * pi * geom.w0)
    nu_y = t.Y / (2 * pi * geom.w0)
    f = setup.f_p / 2
    s = PhotonMode.on_shell(f, 1.0, nu_x / 2, nu_y / 2)
    i = PhotonMode.on_shell(f, 1.0, nu_x / 2, nu_y / 2, pol=(0, 1, 0))
    fundamental = jsa_from_coefficients({ModeIndex(0, 0): 1.0}, geom, setup.crystal, setup.env, s, i)

    def reduced(coefficients) -> complex:
        # jsa with Phi, Gaussian and prefactor divided out
        return jsa_from_coefficients(coefficients, geom, setup.crystal, setup.env, s, i) / fundamental

    indices = [ModeIndex(0, 0)] + index_set_members(2)
    a = np.array([reduced({idx: 1.0}) for idx in indices])
    brute = brute_force_optimal(t, 2, seed=ctx.seed)
    closed = optimal_expansion(t, 2)
    # |a.c| over the unit sphere peaks at conj(a) / |a|
    best = np.conj(a) / np.linalg.norm(a)
    best = best * np.conj(best[0]) / abs(best[0])
    modulus_gap = max(abs(abs(best[k]) - abs(brute.expansion.coefficient(idx))) for k, idx in enumerate(indices))
    weight_gap = abs(abs(reduced(closed.expansion.coefficients)) ** 2 - closed.objective) / closed.objective
    return modulus_gap <= 1e-4 and weight_gap <= 1e-10, f"argmax gap {modulus_gap:.3e}, weight gap {weight_gap:.3e}"


@invariant("limit_independence")
def _limits(ctx: SuiteContext):
    rng = ctx.rng(12)
    t = TargetDirection(0.25, -0.15)
    indices = [ModeIndex(0, 0)] + index_set_members(2)
    candidates = [optimal_expansion(t, 2).expansion] + [random_unit_expansion(rng, indices) for _ in range(50)]
    choices = set()
    for window_s, window_i in ((1.0, 1.0), (1e-3, 4e2), (7.5, 0.02)):
        scores = [coincidence_probability(sqrt(measurement_objective(e, t)), window_s, window_i) for e in candidates]
        choices.add(int(np.argmax(scores)))
    return choices == {0}, f"winning candidates across windows: {sorted(choices)}"


def run_suite(ft_kernel_sign: int = -1, names: Optional[list[str]] = None, seed: int = 0) -> list[CheckResult]:
    """Run every registered invariant (or the named subset); errors count as failures"""
    ctx = SuiteContext(geom=reference_geometry(), ft_kernel_sign=ft_kernel_sign, seed=seed)
    selected = names or registered_checks()
    unknown = [name for name in selected if name not in _registry.checks]
    if unknown:
        raise ValueError(f"Unknown invariants: {unknown}")
    results = []
    for name in selected:
        logger.info(f"running {name}")
        try:
            result = _registry.checks[name](ctx)
        except BiphotonError as e:
            result = CheckResult(name, False, f"{type(e).__name__}: {e}")
        logger.info(f"{name}: {'PASS' if result.passed else 'FAIL'} {result.detail}")
        results.append(result)
    return results
