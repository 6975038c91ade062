from math import exp, pi, sqrt

import numpy as np
import pytest
from scipy.constants import c as SPEED_OF_LIGHT

from common_lib.errors import ConfigError, EvanescentModeError
from common_lib.optics.biphoton import (
    X_HAT,
    Y_HAT,
    Z_HAT,
    AxisSpec,
    EnvelopeKind,
    JsaGridSpec,
    PhotonMode,
    PumpEnvelope,
    chi_effective,
    coincidence_probability,
    envelope_eval,
    jsa_from_coefficients,
    jsa_grid,
    jsa_point,
    jsa_prefactor,
    jsa_volume_oracle,
    mode_sum_factor,
)
from common_lib.optics.egh_modes import ModeExpansion, ModeIndex, PumpGeometry
from common_lib.optics.phasematch import CrystalConfig, chi_from_entries
from common_lib.settings import BiphotonSettings

WAVELENGTH = 405e-9
F_P = SPEED_OF_LIGHT / WAVELENGTH


@pytest.fixture
def geom():
    return PumpGeometry.from_free_space(WAVELENGTH, 1.0, 20e-6)


@pytest.fixture
def crystal():
    return CrystalConfig(length=1e-3)


@pytest.fixture
def cw():
    return PumpEnvelope(EnvelopeKind.CW, F_P)


def _pair(nu_s=(0.0, 0.0), nu_i=(0.0, 0.0), f_s=F_P / 2):
    f_i = F_P - f_s
    return PhotonMode.on_shell(f_s, 1.0, *nu_s, pol=X_HAT), PhotonMode.on_shell(f_i, 1.0, *nu_i, pol=Y_HAT)


def test_chi_single_entry():
    chi = chi_from_entries({"zxy": 2.5 - 1j})
    assert chi_effective(chi, Z_HAT, X_HAT, Y_HAT) == 2.5 - 1j


def test_chi_annihilated_by_orthogonal_signal():
    chi = chi_from_entries({"zxy": 1.0})
    assert chi_effective(chi, Z_HAT, Z_HAT, Y_HAT) == 0


def test_chi_matches_triple_loop():
    rng = np.random.default_rng(3)
    chi = rng.normal(size=(3, 3, 3)) + 1j * rng.normal(size=(3, 3, 3))
    e_p, e_s, e_i = (v / np.linalg.norm(v) for v in rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    loop = sum(
        chi[o, q, r] * e_p[o] * np.conj(e_s[q]) * np.conj(e_i[r]) for o in range(3) for q in range(3) for r in range(3)
    )
    assert chi_effective(chi, e_p, e_s, e_i) == pytest.approx(loop, rel=1e-12)


def test_cw_envelope_is_a_discretized_delta():
    env = PumpEnvelope(EnvelopeKind.CW, F_P, cw_cell=1e9)
    assert envelope_eval(env, F_P) == 1
    assert envelope_eval(env, F_P + 0.4e9) == 1
    assert envelope_eval(env, F_P + 0.6e9) == 0


def test_pulsed_envelope():
    env = PumpEnvelope(EnvelopeKind.GAUSSIAN_PULSE, F_P, sigma_f=1e11)
    assert envelope_eval(env, F_P) == 1
    assert envelope_eval(env, F_P + 2e11) == pytest.approx(exp(-1), rel=1e-12)


def test_pulsed_envelope_needs_bandwidth():
    with pytest.raises(ValueError):
        PumpEnvelope(EnvelopeKind.GAUSSIAN_PULSE, F_P)


def test_photon_polarization_must_be_unit():
    with pytest.raises(ValueError):
        PhotonMode.on_shell(F_P / 2, 1.0, 0.0, 0.0, pol=(1.0, 1.0, 0.0))


def test_collinear_fundamental_is_prefactor_times_energy(geom, crystal, cw):
    s, i = _pair()
    amplitude = jsa_point(ModeExpansion.pure(ModeIndex(0, 0)), geom, crystal, cw, s, i)
    expected = jsa_prefactor(geom, crystal, Z_HAT, X_HAT, Y_HAT) * sqrt(s.f * i.f)
    assert amplitude == pytest.approx(expected, rel=1e-12)


def test_odd_mode_vanishes_without_transverse_sum(geom, crystal, cw):
    s, i = _pair((1000.0, 300.0), (-1000.0, 500.0))
    assert jsa_point(ModeExpansion.pure(ModeIndex(1, 0)), geom, crystal, cw, s, i) == 0


@pytest.mark.parametrize(
    "coefficients",
    [
        {ModeIndex(0, 0): 1 / sqrt(2), ModeIndex(1, 1): -1j / sqrt(2)},
        {ModeIndex(0, 0): 0.6, ModeIndex(1, 0): 0.48j, ModeIndex(0, 2): -0.64},
    ],
)
def test_matches_volume_integral(geom, cw, coefficients):
    rng = np.random.default_rng(11)
    crystal = CrystalConfig(length=1e-3, delta_z=0.3e-3)
    expansion = ModeExpansion(coefficients, 2)
    for _ in range(3):
        s, i = _pair(rng.uniform(-2000, 2000, 2), rng.uniform(-2000, 2000, 2), F_P / 2 * (1 + rng.uniform(-1e-3, 1e-3)))
        amplitude = jsa_point(expansion, geom, crystal, cw, s, i)
        assert jsa_volume_oracle(expansion, geom, crystal, cw, s, i) == pytest.approx(amplitude, rel=1e-4)


def test_linear_in_coefficients(geom, crystal, cw):
    s, i = _pair((800.0, -200.0), (300.0, 600.0))
    a = {ModeIndex(0, 0): 1.5, ModeIndex(2, 0): 0.3j}
    b = {ModeIndex(0, 0): -0.2j, ModeIndex(1, 1): 2.0}
    alpha, beta = 0.7 - 0.2j, -1.3 + 0.5j
    combined = {idx: alpha * a.get(idx, 0) + beta * b.get(idx, 0) for idx in set(a) | set(b)}
    lhs = jsa_from_coefficients(combined, geom, crystal, cw, s, i)
    rhs = alpha * jsa_from_coefficients(a, geom, crystal, cw, s, i) + beta * jsa_from_coefficients(b, geom, crystal, cw, s, i)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_mode_sum_factor_monomials():
    w0 = 20e-6
    nu_x, nu_y = 1000.0, -500.0
    value = mode_sum_factor({ModeIndex(2, 1): 1.0}, nu_x, nu_y, w0)
    assert value == pytest.approx((2j * pi * w0 * nu_x) ** 2 * (2j * pi * w0 * nu_y), rel=1e-14)


def test_energy_weighting(geom, crystal):
    env = PumpEnvelope(EnvelopeKind.CW, F_P, cw_cell=1e30)
    expansion = ModeExpansion.pure(ModeIndex(0, 0))
    nu_s = PhotonMode.on_shell(0.4 * F_P, 1.0, 500.0, 0.0).nu
    nu_i = PhotonMode.on_shell(0.6 * F_P, 1.0, -100.0, 0.0).nu
    base = jsa_point(expansion, geom, crystal, env, PhotonMode(nu_s, 0.4 * F_P), PhotonMode(nu_i, 0.6 * F_P, Y_HAT))
    doubled = jsa_point(expansion, geom, crystal, env, PhotonMode(nu_s, 0.8 * F_P), PhotonMode(nu_i, 1.2 * F_P, Y_HAT))
    assert doubled == pytest.approx(2 * base, rel=1e-12)


def _spec(signal=(-2000.0, 2000.0, 3), idler=(-2000.0, 2000.0, 3)):
    return JsaGridSpec(AxisSpec(*signal), AxisSpec(*signal), AxisSpec(*idler), AxisSpec(*idler))


def test_single_point_grid_matches_point(geom, crystal, cw):
    spec = JsaGridSpec(AxisSpec(500.0, 500.0, 1), AxisSpec(0.0, 0.0, 1), AxisSpec(-300.0, -300.0, 1), AxisSpec(0.0, 0.0, 1))
    expansion = ModeExpansion.pure(ModeIndex(0, 0))
    grid = jsa_grid(expansion, geom, crystal, cw, spec, F_P / 2, F_P / 2)
    s, i = _pair((500.0, 0.0), (-300.0, 0.0))
    assert grid.values.shape == (1, 1, 1, 1)
    assert grid.values[0, 0, 0, 0] == pytest.approx(jsa_point(expansion, geom, crystal, cw, s, i), rel=1e-14)


def test_grid_is_even_for_fundamental(geom, crystal, cw):
    grid = jsa_grid(ModeExpansion.pure(ModeIndex(0, 0)), geom, crystal, cw, _spec(), F_P / 2, F_P / 2)
    np.testing.assert_allclose(grid.values[::-1, ::-1, ::-1, ::-1], grid.values, rtol=1e-12)


def test_grid_matches_pointwise_evaluation(geom, crystal, cw):
    expansion = ModeExpansion({ModeIndex(0, 0): 0.6, ModeIndex(1, 0): 0.48j, ModeIndex(1, 1): -0.64}, 2)
    spec = _spec((-1500.0, 1800.0, 8), (-1700.0, 1600.0, 8))
    grid = jsa_grid(expansion, geom, crystal, cw, spec, F_P / 2, F_P / 2)
    for a, sx in enumerate(grid.nu_sx):
        for b, sy in enumerate(grid.nu_sy):
            for c, ix in enumerate(grid.nu_ix):
                for d, iy in enumerate(grid.nu_iy):
                    s, i = _pair((sx, sy), (ix, iy))
                    expected = jsa_point(expansion, geom, crystal, cw, s, i)
                    assert grid.values[a, b, c, d] == pytest.approx(expected, rel=1e-12, abs=1e-300)


def test_grid_storage_order(geom, crystal, cw):
    grid = jsa_grid(ModeExpansion.pure(ModeIndex(0, 0)), geom, crystal, cw, _spec(), F_P / 2, F_P / 2)
    columns = grid.columns()
    assert list(columns) == ["nu_sx", "nu_sy", "nu_ix", "nu_iy", "re", "im"]
    assert columns["nu_sx"][0] == columns["nu_sx"][26] == -2000.0
    assert columns["nu_iy"][:3].tolist() == [-2000.0, 0.0, 2000.0]
    np.testing.assert_array_equal(columns["re"], grid.values.ravel().real)


def test_evanescent_grid_points_are_listed(geom, crystal, cw):
    k = F_P / 2 / SPEED_OF_LIGHT
    spec = JsaGridSpec(AxisSpec(0.0, 2 * k, 2), AxisSpec(0.0, 0.0, 1), AxisSpec(0.0, 0.0, 1), AxisSpec(0.0, 0.0, 1))
    with pytest.raises(EvanescentModeError) as excinfo:
        jsa_grid(ModeExpansion.pure(ModeIndex(0, 0)), geom, crystal, cw, spec, F_P / 2, F_P / 2)
    assert excinfo.value.indices == [("signal", 1, 0)]


def test_grid_respects_budget(geom, crystal, cw):
    with pytest.raises(ConfigError):
        jsa_grid(
            ModeExpansion.pure(ModeIndex(0, 0)), geom, crystal, cw, _spec(), F_P / 2, F_P / 2,
            settings=BiphotonSettings(max_grid_points=10),
        )


def test_annihilating_polarizations_are_rejected(geom, crystal, cw):
    with pytest.raises(ValueError):
        jsa_grid(ModeExpansion.pure(ModeIndex(0, 0)), geom, crystal, cw, _spec(), F_P / 2, F_P / 2, signal_pol=Z_HAT)


def test_grid_metadata(geom, crystal, cw):
    grid = jsa_grid(ModeExpansion.pure(ModeIndex(0, 0)), geom, crystal, cw, _spec(), F_P / 2, F_P / 2)
    metadata = grid.metadata()
    assert metadata["convention"] == "exponent"
    assert metadata["envelope"]["kind"] == "cw"
    assert "cw_cell_hz" in metadata["envelope"]
    assert metadata["shape"] == [3, 3, 3, 3]
    assert metadata["prefactor"]["re"] == grid.prefactor.real


def test_coincidence_probability():
    assert coincidence_probability(0.3 + 0.1j, 0.0, 2.0) == 0
    assert coincidence_probability(1.0, 1.0, 1.0) == 1
    base = coincidence_probability(0.3 + 0.1j, 1.5, 2.0)
    assert coincidence_probability(0.3 + 0.1j, 3.0, 2.0) == pytest.approx(4 * base, rel=1e-15)
    with pytest.raises(ValueError):
        coincidence_probability(1.0, -1.0, 1.0)
