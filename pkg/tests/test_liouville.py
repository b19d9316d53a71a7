"""Truncated-energy diagnostics: boundary terms, identities, decay scans."""

import numpy as np
import pytest

from fnslab.forcing import (
    ForcingSpec,
    build_forcing,
    decaying_solenoidal_field,
    random_solenoidal_field,
)
from fnslab.liouville import (
    decay_scan,
    energy_identity_defect,
    integration_identities_check,
    predicted_decay_exponents,
    pressure_integrability,
    regime_condition,
    truncated_terms,
)
from fnslab.norms import lebesgue_norm, sobolev_norm
from fnslab.solver import recover_pressure
from fnslab.spectral import Grid, SpectralField, transform_inverse


def strictly_decreasing(values):
    mags = [abs(v) for v in values]
    return all(b < a for a, b in zip(mags, mags[1:]))


class TestTruncatedTerms:
    def test_zero_field_gives_zero_terms(self):
        grid = Grid(16, 32.0)
        z3 = SpectralField.zeros(grid, 3)
        z1 = SpectralField.zeros(grid, 1)
        assert truncated_terms(z3, z1, 1.0, 8.0) == (0.0, 0.0, 0.0, 0.0)

    def test_flux_terms_vanish_when_support_misses_annulus(self):
        # field concentrated well inside B_{R/4}: grad(theta) never sees it
        grid = Grid(64, 32.0)
        radius = 14.0
        u = decaying_solenoidal_field(
            grid, seed=5, band=(1, 6), width=radius / 14.0, envelope="gaussian"
        )
        p = recover_pressure(u)
        _, cubic, pressure_flux, _ = truncated_terms(u, p, 1.0, radius)
        u_phys = transform_inverse(u)
        cubic_scale = lebesgue_norm(u_phys, 3.0) ** 3 / grid.box_len
        assert abs(cubic) < 1e-10 * cubic_scale
        press_scale = (
            lebesgue_norm(transform_inverse(p), 2.0)
            * lebesgue_norm(u_phys, 2.0)
            / grid.box_len
        )
        assert abs(pressure_flux) < 1e-10 * press_scale

    def test_truncated_energy_bounded_by_total(self):
        grid = Grid(32, 32.0)
        u = random_solenoidal_field(grid, seed=1, band=(1, 5))
        p = recover_pressure(u)
        total = sobolev_norm(u, 0.5) ** 2
        for radius in (4.0, 8.0, 12.0):
            te = truncated_terms(u, p, 1.0, radius)[3]
            assert 0.0 <= te <= total * (1 + 1e-12)

    def test_rejects_radius_outside_box(self):
        grid = Grid(16, 32.0)
        z3 = SpectralField.zeros(grid, 3)
        z1 = SpectralField.zeros(grid, 1)
        with pytest.raises(ValueError, match="box_len/2"):
            truncated_terms(z3, z1, 1.0, 16.0)


class TestIntegrationIdentities:
    @pytest.fixture(scope="class")
    def resolved_field(self):
        grid = Grid(128, 32.0)
        u = random_solenoidal_field(grid, seed=2, band=(1, 6))
        return grid, u, recover_pressure(u)

    def test_random_solenoidal_field_defect_levels(self, resolved_field):
        # well-resolved cutoff: every integration-by-parts identity closes
        _, u, p = resolved_field
        d = integration_identities_check(u, p, 1.0, 14.0)
        assert d.dissipation_split < 1e-12
        assert d.cubic_reduction < 1e-9
        assert d.pressure_reduction < 1e-9
        assert d.assembled < 1e-9

    def test_assembled_identity_at_moderate_resolution(self):
        grid = Grid(64, 32.0)
        u = random_solenoidal_field(grid, seed=3, band=(1, 6))
        p = recover_pressure(u)
        defect, scale = energy_identity_defect(u, p, 1.0, 12.0)
        assert abs(defect) <= 1e-8 * scale

    def test_cutoff_equal_to_one_on_support_kills_nonlinear_pairing(self):
        # skew symmetry: the advective pairing against theta*u reduces to the
        # annulus flux, which the compact field never reaches
        grid = Grid(64, 32.0)
        radius = 14.0
        u = decaying_solenoidal_field(
            grid, seed=4, band=(1, 6), width=1.0, envelope="gaussian"
        )
        p = recover_pressure(u)
        _, cubic, _, _ = truncated_terms(u, p, 1.0, radius)
        scale = lebesgue_norm(transform_inverse(u), 3.0) ** 3 / grid.box_len
        assert abs(cubic) < 1e-9 * scale

    def test_constant_pressure_contributes_nothing(self, resolved_field):
        # grad(theta) against a solenoidal field integrates to zero, so a
        # constant pressure cannot feed the flux term; compare the residue
        # against the uncancelled integrand mass
        from fnslab.solver import cutoff_gradient

        grid, u, _ = resolved_field
        coeffs = np.zeros((1,) + (grid.n,) * 3, dtype=complex)
        coeffs[0, 0, 0, 0] = 3.0
        p_const = SpectralField(grid, coeffs)
        _, _, pressure_flux, _ = truncated_terms(u, p_const, 1.0, 14.0)
        grad_theta = cutoff_gradient(grid, 14.0).values
        u_phys = transform_inverse(u).values
        mass = 3.0 * float(
            np.sum(np.abs(np.sum(grad_theta * u_phys, axis=0))) * grid.cell_volume
        )
        assert abs(pressure_flux) < 1e-8 * mass


class TestRegimesAndPredictions:
    def test_alpha_one_regime(self):
        regime, ok = regime_condition(1.0, 1.0)
        assert regime == "alpha_one" and ok
        assert predicted_decay_exponents(1.0, 1.0)["I_b"] == -1.0
        assert predicted_decay_exponents(1.0, 1.0)["I_c"] == -1.0

    def test_supercritical_regime_window(self):
        regime, ok = regime_condition(1.5, 1.5)
        assert regime == "supercritical" and ok
        regime, ok = regime_condition(1.9, 0.3)
        assert regime == "supercritical" and not ok

    def test_subcritical_regime_window(self):
        regime, ok = regime_condition(0.9, 0.5)
        assert regime == "subcritical" and ok
        regime, ok = regime_condition(0.62, 2.0 * 0.62 - 1e-9)
        assert regime == "subcritical"

    def test_flux_exponent_formulas(self):
        alpha, eps = 1.5, 1.5
        pred = predicted_decay_exponents(alpha, eps)
        expected = -1.0 + 3.0 * (3 * alpha - 3 - eps) / (6.0 - eps)
        assert pred["I_b"] == pytest.approx(expected)
        assert pred["I_c"] == pytest.approx(expected)
        alpha, eps = 0.9, 0.5
        pred = predicted_decay_exponents(alpha, eps)
        expected = -1.0 + 3.0 * (3 * alpha - 3 + eps) / (6.0 + eps)
        assert pred["I_b"] == pytest.approx(expected)

    def test_commutator_exponent_uses_interpolation_parameter(self):
        alpha, eps = 1.0, 1.0
        base = -0.5 * alpha + (6 * alpha - 3 * eps) / (12 - 2 * eps)
        for nu in (0.25, 0.5, 0.75):
            pred = predicted_decay_exponents(alpha, eps, nu)
            assert pred["I_a"] == pytest.approx((1 - nu) * base)
        with pytest.raises(ValueError, match="nu"):
            predicted_decay_exponents(alpha, eps, 1.0)

    def test_outside_every_regime_yields_no_prediction(self):
        pred = predicted_decay_exponents(0.5, 0.5)
        assert pred == {"I_a": None, "I_b": None, "I_c": None}


class TestDecayScan:
    @pytest.fixture(scope="class")
    def gaussian_scan(self):
        grid = Grid(64, 32.0)
        u = decaying_solenoidal_field(
            grid, seed=7, band=(1, 6), width=1.3, envelope="gaussian"
        )
        p = recover_pressure(u)
        radii = np.geomspace(1.5, 15.0, 10)
        return decay_scan(u, p, alpha=1.0, eps_param=1.0, radii=radii)

    def test_flux_terms_decay_monotonically_over_the_decade(self, gaussian_scan):
        assert strictly_decreasing(gaussian_scan.cubic_flux)
        assert strictly_decreasing(gaussian_scan.pressure_flux)

    def test_commutator_decays_monotonically_past_its_peak(self, gaussian_scan):
        mags = [abs(v) for v in gaussian_scan.commutator]
        peak = int(np.argmax(mags))
        assert peak <= 3
        assert all(b < a for a, b in zip(mags[peak:], mags[peak + 1 :]))
        assert mags[-1] < 1e-3 * mags[peak]

    def test_truncated_energy_monotone_and_bounded(self, gaussian_scan):
        te = gaussian_scan.truncated_energy
        assert all(b >= a for a, b in zip(te, te[1:]))
        assert te[-1] <= gaussian_scan.total_energy * (1 + 1e-12)

    def test_alpha_one_cubic_slope_meets_prediction_with_slack(self, gaussian_scan):
        assert gaussian_scan.fitted_slopes["I_b"] <= -0.7
        assert gaussian_scan.slope_flags["I_b"] is True

    def test_inverse_square_envelope_gives_negative_slopes(self):
        grid = Grid(64, 32.0)
        u = decaying_solenoidal_field(
            grid, seed=7, band=(2, 5), width=1.2, envelope="inverse_square"
        )
        p = recover_pressure(u)
        report = decay_scan(
            u, p, alpha=1.0, eps_param=1.0, radii=np.geomspace(1.55, 15.5, 10)
        )
        for key in ("I_a", "I_b", "I_c"):
            assert report.fitted_slopes[key] is not None
            assert report.fitted_slopes[key] < 0.0

    def test_zero_field_reports_absent_slopes(self):
        grid = Grid(16, 32.0)
        report = decay_scan(
            SpectralField.zeros(grid, 3),
            SpectralField.zeros(grid, 1),
            1.0,
            1.0,
            [2.0, 4.0, 8.0],
        )
        assert all(v == 0.0 for v in report.commutator)
        assert report.fitted_slopes == {"I_a": None, "I_b": None, "I_c": None}
        assert report.slope_flags == {"I_a": None, "I_b": None, "I_c": None}

    def test_scan_is_deterministic(self):
        grid = Grid(32, 32.0)
        u = decaying_solenoidal_field(grid, seed=9, band=(1, 4), width=1.5)
        p = recover_pressure(u)
        first = decay_scan(u, p, 1.0, 1.0, [2.0, 4.0, 8.0, 12.0])
        second = decay_scan(u, p, 1.0, 1.0, [2.0, 4.0, 8.0, 12.0])
        assert first == second

    def test_radius_validation(self):
        grid = Grid(16, 32.0)
        z3 = SpectralField.zeros(grid, 3)
        z1 = SpectralField.zeros(grid, 1)
        with pytest.raises(ValueError, match="increasing"):
            decay_scan(z3, z1, 1.0, 1.0, [4.0, 2.0])
        with pytest.raises(ValueError, match="box_len/2"):
            decay_scan(z3, z1, 1.0, 1.0, [2.0, 18.0])

    def test_out_of_regime_scan_still_runs_with_flag(self):
        grid = Grid(32, 32.0)
        u = decaying_solenoidal_field(grid, seed=10, band=(1, 4), width=1.5)
        p = recover_pressure(u)
        report = decay_scan(u, p, alpha=1.9, eps_param=0.3, radii=[2.0, 4.0, 8.0])
        assert not report.regime_ok
        assert len(report.radii) == 3


class TestTruncatedEnergyConvergence:
    def test_converges_to_total_energy_for_compact_fields(self):
        # strong dissipation order and a tight envelope: the nonlocal tail of
        # the half-order operator must leave < 1e-6 of the energy outside the
        # largest admissible ball
        grid = Grid(128, 32.0)
        alpha = 1.8
        u = decaying_solenoidal_field(
            grid, seed=3, band=(1, 6), width=0.45, envelope="gaussian"
        )
        p = SpectralField.zeros(grid, 1)  # truncated energy ignores pressure
        total = sobolev_norm(u, 0.5 * alpha) ** 2
        te_small = truncated_terms(u, p, alpha, 8.0)[3]
        te_large = truncated_terms(u, p, alpha, 15.9)[3]
        assert te_small <= te_large <= total * (1 + 1e-12)
        assert total - te_large < 1e-6 * total


class TestPressureIntegrability:
    def test_zero_field(self):
        grid = Grid(16, 32.0)
        p_norm, bound = pressure_integrability(SpectralField.zeros(grid, 3), 4.0)
        assert p_norm == 0.0 and bound == 0.0

    def test_rejects_exponent_at_or_below_two(self):
        grid = Grid(16, 32.0)
        with pytest.raises(ValueError, match="2 < q"):
            pressure_integrability(SpectralField.zeros(grid, 3), 2.0)

    def test_taylor_green_ratio_stable_under_refinement(self):
        ratios = []
        for n in (32, 64):
            grid = Grid(n)
            u = build_forcing(grid, ForcingSpec("taylor_green_like", amplitude=1.0))
            p_norm, bound = pressure_integrability(u, 4.0)
            ratios.append(p_norm / bound)
        assert abs(ratios[1] - ratios[0]) < 0.01 * ratios[0]

    def test_hundred_random_fields_at_critical_exponent(self):
        grid = Grid(32)
        q = 4.5
        ratios = []
        for seed in range(100):
            u = random_solenoidal_field(grid, seed=seed, band=(1, 8))
            p_norm, bound = pressure_integrability(u, q)
            ratios.append(p_norm / bound)
        assert all(np.isfinite(r) for r in ratios)
        assert max(ratios) < 10.0
