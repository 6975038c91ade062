from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from common_lib.errors import InsufficientDomainError, InsufficientPowerError, InvalidGeometryError
from common_lib.optics.egh_modes import (
    FiniteDifferenceGrid,
    ModeExpansion,
    ModeIndex,
    PartnerConvention,
    PumpGeometry,
    TransversePoint,
    biorthogonal_overlap,
    decompose,
    egh_derivative_form,
    egh_eval,
    hermite,
    mode_indices,
    overlap_norm,
    paraxial_residual,
    psi_eval,
    synthesize,
    xi,
)


@pytest.fixture
def geom():
    return PumpGeometry(wavelength=405e-9, w0=40e-6)


def test_rayleigh_range_is_derived(geom):
    assert geom.z_r == pytest.approx(pi * (40e-6) ** 2 / 405e-9, rel=1e-15)


def test_free_space_wavelength_is_divided_by_index():
    geom = PumpGeometry.from_free_space(810e-9, 2.0, 1e-4)
    assert geom.wavelength == pytest.approx(405e-9, rel=1e-15)


@pytest.mark.parametrize("wavelength, w0", [(0.0, 1e-5), (-1e-6, 1e-5), (1e-6, 0.0), (1e-6, -1e-5)])
def test_degenerate_geometry_is_rejected(wavelength, w0):
    with pytest.raises(InvalidGeometryError):
        PumpGeometry(wavelength=wavelength, w0=w0)


def test_mode_indices_order():
    assert mode_indices(2) == [
        ModeIndex(0, 0),
        ModeIndex(1, 0),
        ModeIndex(0, 1),
        ModeIndex(2, 0),
        ModeIndex(1, 1),
        ModeIndex(0, 2),
    ]


def test_mode_index_rejects_negative_orders():
    with pytest.raises(ValueError):
        ModeIndex(-1, 0)


@pytest.mark.parametrize("factor, expected", [(0.0, 1 + 0j), (1.0, 1 + 1j), (-2.0, 1 - 2j)])
def test_xi(geom, factor, expected):
    assert xi(factor * geom.z_r, geom) == expected


def test_hermite_examples():
    assert hermite(0, 3.7 - 2j) == 1
    assert hermite(1, 2 + 1j) == 4 + 2j
    assert hermite(2, 1.0) == 2


@given(st.integers(min_value=0, max_value=8), st.floats(min_value=-3, max_value=3))
def test_hermite_matches_numpy_series(n, w):
    expected = np.polynomial.hermite.hermval(w, [0] * n + [1])
    assert hermite(n, w) == pytest.approx(expected, rel=1e-9, abs=1e-9)


def test_fundamental_mode_at_origin_is_u0():
    geom = PumpGeometry(wavelength=405e-9, w0=40e-6, u0=2 - 1j)
    assert egh_eval(ModeIndex(0, 0), geom, TransversePoint(0.0, 0.0, 0.0)) == 2 - 1j


def test_odd_mode_vanishes_on_axis(geom):
    p = TransversePoint(0.0, 0.3 * geom.w0, 0.4 * geom.z_r)
    assert egh_eval(ModeIndex(1, 0), geom, p) == 0


def test_closed_form_matches_derivative_definition(geom):
    p = TransversePoint(0.3 * geom.w0, -0.2 * geom.w0, 0.5 * geom.z_r)
    closed = egh_eval(ModeIndex(2, 1), geom, p)
    assert egh_derivative_form(ModeIndex(2, 1), geom, p) == pytest.approx(closed, rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=0, max_value=4),
    st.integers(min_value=0, max_value=4),
    st.floats(min_value=-2, max_value=2),
    st.floats(min_value=-2, max_value=2),
    st.floats(min_value=-1, max_value=1),
)
def test_rodrigues_equivalence(n, m, x, y, z):
    geom = PumpGeometry(wavelength=405e-9, w0=40e-6)
    p = TransversePoint(x * geom.w0, y * geom.w0, z * geom.z_r)
    closed = egh_eval(ModeIndex(n, m), geom, p)
    derived = egh_derivative_form(ModeIndex(n, m), geom, p)
    assert abs(derived - closed) <= 1e-6 * (1 + abs(closed))


@pytest.mark.parametrize("convention", list(PartnerConvention))
def test_psi_examples(geom, convention):
    assert psi_eval(ModeIndex(0, 0), geom, TransversePoint(0.4 * geom.w0, 0.1 * geom.w0, geom.z_r), convention) == 1
    assert psi_eval(ModeIndex(1, 1), geom, TransversePoint(0.0, 0.0, geom.z_r), convention) == 0
    assert psi_eval(ModeIndex(2, 0), geom, TransversePoint(geom.w0, 0.0, 0.0), convention) == pytest.approx(2, rel=1e-12)


def test_off_diagonal_overlap_vanishes(geom):
    reference = abs(overlap_norm(ModeIndex(0, 0), geom))
    assert abs(biorthogonal_overlap(ModeIndex(1, 0), ModeIndex(0, 1), geom, 0.0)) <= 1e-8 * reference
    assert abs(biorthogonal_overlap(ModeIndex(2, 0), ModeIndex(0, 0), geom, 0.7 * geom.z_r)) <= 1e-8 * reference


def test_fundamental_overlap_is_gaussian_integral(geom):
    value = biorthogonal_overlap(ModeIndex(0, 0), ModeIndex(0, 0), geom, 0.0)
    assert value == pytest.approx(geom.u0 * geom.wavelength * geom.z_r, rel=1e-9)


def test_diagonal_overlap_is_constant_along_z(geom):
    idx = ModeIndex(1, 1)
    at_waist = biorthogonal_overlap(idx, idx, geom, 0.0)
    assert biorthogonal_overlap(idx, idx, geom, 0.7 * geom.z_r) == pytest.approx(at_waist, rel=1e-6)
    assert at_waist == pytest.approx(overlap_norm(idx, geom), rel=1e-6)


def test_printed_partner_is_not_biorthogonal_off_waist(geom):
    reference = abs(overlap_norm(ModeIndex(0, 0), geom))
    leak = biorthogonal_overlap(ModeIndex(0, 0), ModeIndex(2, 0), geom, geom.z_r, PartnerConvention.PAPER_LITERAL)
    assert abs(leak) > 1e-3 * reference


def test_expansion_requires_unit_power():
    with pytest.raises(ValueError):
        ModeExpansion({ModeIndex(0, 0): 0.5}, 0)


def test_expansion_rejects_orders_above_max():
    with pytest.raises(ValueError):
        ModeExpansion({ModeIndex(2, 0): 1.0}, 1)


def test_normalized_expansion():
    expansion = ModeExpansion.normalized({(0, 0): 3.0, (1, 1): 4j})
    assert expansion.max_order == 2
    assert expansion.coefficient(ModeIndex(0, 0)) == pytest.approx(0.6)
    assert expansion.coefficient(ModeIndex(1, 1)) == pytest.approx(0.8j)
    assert expansion.power() == pytest.approx(1, abs=1e-15)


def test_normalizing_zero_power_fails():
    with pytest.raises(InsufficientPowerError):
        ModeExpansion.normalized({ModeIndex(0, 0): 0.0})


def _grid(geom, reach=8.0, samples=257):
    axis = np.linspace(-reach * geom.w0, reach * geom.w0, samples)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    return axis, gx, gy


def test_decompose_fundamental(geom):
    axis, gx, gy = _grid(geom)
    result = decompose(synthesize(ModeExpansion.pure(ModeIndex(0, 0)), geom, gx, gy, 0.0), axis, axis, geom, 3)
    assert result.expansion.coefficient(ModeIndex(0, 0)) == pytest.approx(1, abs=1e-8)
    for idx, c in result.expansion:
        if idx != ModeIndex(0, 0):
            assert abs(c) < 1e-8
    assert result.captured_power == pytest.approx(1, rel=1e-8)


def test_decompose_recovers_mixture(geom):
    axis, gx, gy = _grid(geom)
    expansion = ModeExpansion({ModeIndex(0, 0): 1 / sqrt(2), ModeIndex(1, 1): 1 / sqrt(2)}, 2)
    result = decompose(synthesize(expansion, geom, gx, gy, 0.0), axis, axis, geom, 2)
    for idx, c in expansion:
        assert result.expansion.coefficient(idx) == pytest.approx(c, abs=1e-8)


def test_decompose_zero_field(geom):
    axis, _, _ = _grid(geom, samples=65)
    with pytest.raises(InsufficientPowerError):
        decompose(np.zeros((65, 65)), axis, axis, geom, 2)


def test_decompose_needs_five_waists(geom):
    axis, gx, gy = _grid(geom, reach=3.0, samples=65)
    with pytest.raises(InsufficientDomainError):
        decompose(synthesize(ModeExpansion.pure(ModeIndex(0, 0)), geom, gx, gy, 0.0), axis, axis, geom, 2)


def test_decompose_rejects_undecayed_field(geom):
    axis, _, _ = _grid(geom, reach=6.0, samples=65)
    with pytest.raises(InsufficientDomainError):
        decompose(np.ones((65, 65), dtype=complex), axis, axis, geom, 2)


@pytest.mark.parametrize("idx", [ModeIndex(0, 0), ModeIndex(1, 0), ModeIndex(2, 1)])
def test_paraxial_residual_is_small(geom, idx):
    grid = FiniteDifferenceGrid.reference(geom)
    assert paraxial_residual(idx, geom, grid) <= 1e-3
    assert paraxial_residual(idx, geom, grid, scale="laplacian") <= 1e-3


def test_paraxial_residual_rejects_plane_wave(geom):
    reference = FiniteDifferenceGrid.reference(geom)
    grid = FiniteDifferenceGrid(reference.x, reference.y, reference.z, reference.dx, reference.dy, geom.wavelength / 200)
    k = geom.wavenumber
    residual = paraxial_residual(
        ModeIndex(0, 0), geom, grid, field=lambda x, y, z: np.exp(1j * k * z) * np.ones_like(x, dtype=complex)
    )
    assert residual > 1
