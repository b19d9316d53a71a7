"""Fixed-point solver: cutoff, map composition, iteration, pressure, residual."""

import numpy as np
import pytest

from fnslab.forcing import (
    ForcingSpec,
    build_forcing,
    random_solenoidal_field,
    scale_to_sobolev_norm,
)
from fnslab.norms import lebesgue_norm, sobolev_norm
from fnslab.solver import (
    SolverParams,
    apply_T,
    continuation_solve,
    cutoff_field,
    cutoff_gradient,
    energy_inequality_check,
    null_identity_defect,
    picard_solve,
    recover_pressure,
    regularized_residual,
    residual,
)
from fnslab.spectral import (
    Grid,
    PhysicalField,
    SpectralField,
    divergence,
    fractional_laplacian,
    regularized_inverse,
    transform_forward,
    transform_inverse,
)

L = 2.0 * np.pi


def small_single_mode_forcing(grid, alpha, target=0.05):
    f = build_forcing(grid, ForcingSpec("single_mode", amplitude=1.0, band=(1, 1)))
    return scale_to_sobolev_norm(f, -0.5 * alpha, target)


def default_params(**kw):
    base = dict(alpha=1.5, epsilon=0.1, cutoff_radius=0.45 * L, tol=1e-11)
    base.update(kw)
    return SolverParams(**base)


class TestSolverParams:
    def test_validation(self):
        with pytest.raises(ValueError, match="alpha"):
            SolverParams(alpha=2.0, epsilon=0.1, cutoff_radius=2.0)
        with pytest.raises(ValueError, match="epsilon"):
            SolverParams(alpha=1.0, epsilon=0.0, cutoff_radius=2.0)
        with pytest.raises(ValueError, match="cutoff_radius"):
            SolverParams(alpha=1.0, epsilon=0.1, cutoff_radius=1.0)
        with pytest.raises(ValueError, match="lam"):
            SolverParams(alpha=1.0, epsilon=0.1, cutoff_radius=2.0, lam=1.5)
        with pytest.raises(ValueError, match="damping"):
            SolverParams(alpha=1.0, epsilon=0.1, cutoff_radius=2.0, damping=0.0)

    def test_continuation_schedule_monotonicity(self):
        with pytest.raises(ValueError, match="decreasing in epsilon"):
            SolverParams(
                alpha=1.0, epsilon=0.1, cutoff_radius=2.0,
                continuation=((0.1, 2.0), (0.1, 2.0)),
            )
        with pytest.raises(ValueError, match="nondecreasing in cutoff"):
            SolverParams(
                alpha=1.0, epsilon=0.1, cutoff_radius=2.0,
                continuation=((0.1, 2.5), (0.05, 2.0)),
            )


class TestCutoff:
    def test_plateau_values_are_exact(self):
        grid = Grid(32)
        radius = 0.45 * L
        theta = cutoff_field(grid, radius)
        r = grid.radius_from_center
        assert theta.values[0][r < 0.5 * radius].min() == 1.0
        assert np.abs(theta.values[0][r >= radius]).max() == 0.0
        assert theta.values[0].min() >= 0.0
        assert theta.values[0].max() <= 1.0

    def test_center_value_is_one(self):
        grid = Grid(32)
        theta = cutoff_field(grid, 0.45 * L)
        c = grid.n // 2
        assert theta.values[0][c, c, c] == 1.0

    def test_radial_monotonicity_on_1000_radii(self):
        # evaluate the radial profile directly on a dense ladder
        from fnslab.solver import _smooth_step

        radius = 2.0
        radii = np.linspace(0.0, 1.2 * radius, 1000)
        values = _smooth_step(2.0 * (1.0 - radii / radius))
        assert np.all(np.diff(values) <= 1e-15)

    def test_rejects_radius_outside_box(self):
        grid = Grid(16)
        with pytest.raises(ValueError, match="box_len/2"):
            cutoff_field(grid, 0.5 * L)

    def test_gradient_supported_on_annulus_and_matches_fd(self):
        grid = Grid(32)
        radius = 0.4 * L
        grad = cutoff_gradient(grid, radius)
        r = grid.radius_from_center
        outside = (r < 0.5 * radius - 1e-9) | (r > radius + 1e-9)
        assert np.abs(np.stack(grad.values)[:, outside]).max() == 0.0
        # finite-difference check of the radial derivative
        from fnslab.solver import _smooth_step

        rr = np.linspace(0.55 * radius, 0.95 * radius, 7)
        h = 1e-6
        fd = (
            _smooth_step(2.0 * (1.0 - (rr + h) / radius))
            - _smooth_step(2.0 * (1.0 - (rr - h) / radius))
        ) / (2 * h)
        from fnslab.solver import _bump, _bump_deriv

        t = 2.0 * (1.0 - rr / radius)
        g, g1 = _bump(t), _bump(1.0 - t)
        dg, dg1 = _bump_deriv(t), _bump_deriv(1.0 - t)
        analytic = (dg * g1 + g * dg1) / (g + g1) ** 2 * (-2.0 / radius)
        assert np.abs(fd - analytic).max() < 1e-5


class TestApplyT:
    def test_zero_velocity_gives_scaled_regularized_force(self):
        grid = Grid(32)
        params = default_params(lam=0.7)
        f = small_single_mode_forcing(grid, params.alpha)
        u0 = SpectralField.zeros(grid, 3)
        out = apply_T(u0, f, params)
        expected = regularized_inverse(f, params.epsilon, params.alpha)
        assert np.abs(out.coeffs - 0.7 * expected.coeffs).max() < 1e-14

    def test_zero_force_zero_velocity_is_fixed(self):
        grid = Grid(16)
        params = default_params()
        f = SpectralField.zeros(grid, 3)
        out = apply_T(SpectralField.zeros(grid, 3), f, params)
        assert np.abs(out.coeffs).max() == 0.0

    def test_uncut_map_matches_hand_assembled_multiplier_chain(self):
        # with theta forced to 1 the cellular mode's advection is a pure
        # gradient, the projector kills it, and T reduces mode by mode to
        # division by the dissipation symbol
        grid = Grid(32)
        params = default_params()
        f = small_single_mode_forcing(grid, params.alpha)
        u = build_forcing(grid, ForcingSpec("taylor_green_like", amplitude=0.3))
        ones = PhysicalField.scalar(grid, np.ones((grid.n,) * 3))
        out = apply_T(u, f, params, theta=ones)
        symbol = params.epsilon * grid.k_squared + grid.k_mag**params.alpha
        mult = np.zeros_like(symbol)
        mult[symbol > 0] = 1.0 / symbol[symbol > 0]
        expected = f.coeffs * mult
        scale = np.abs(expected).max()
        assert np.abs(out.coeffs - expected).max() < 1e-11 * scale

    def test_output_is_mean_free(self):
        grid = Grid(16)
        params = default_params()
        f = small_single_mode_forcing(grid, params.alpha)
        u = random_solenoidal_field(grid, seed=0, band=(1, 4), amplitude=0.1)
        out = apply_T(u, f, params)
        assert np.abs(out.mean_coefficients()).max() == 0.0


class TestPicard:
    def test_zero_force_converges_to_zero_immediately(self):
        grid = Grid(16)
        sol = picard_solve(SpectralField.zeros(grid, 3), default_params())
        assert sol.converged
        assert sol.iterations_used == 1
        assert np.abs(sol.velocity.coeffs).max() == 0.0
        assert sol.residual_norm == 0.0

    def test_small_data_satisfies_dual_bound(self):
        grid = Grid(32)
        params = default_params()
        f = small_single_mode_forcing(grid, params.alpha)
        sol = picard_solve(f, params)
        assert sol.converged
        assert sobolev_norm(sol.velocity, 0.75) <= sobolev_norm(f, -0.75) + 1e-12

    def test_fixed_point_independent_of_damping(self):
        grid = Grid(32)
        f = small_single_mode_forcing(grid, 1.5)
        sols = [
            picard_solve(f, default_params(tol=1e-12, damping=gamma))
            for gamma in (1.0, 0.5)
        ]
        diff = sobolev_norm(
            SpectralField(grid, sols[0].velocity.coeffs - sols[1].velocity.coeffs),
            0.75,
        )
        assert diff < 1e-11

    def test_iterates_stay_divergence_free(self):
        grid = Grid(32)
        params = default_params()
        f = small_single_mode_forcing(grid, params.alpha)
        sol = picard_solve(f, params)
        div = divergence(sol.velocity)
        scale = (grid.k_mag * np.abs(sol.velocity.coeffs)).max()
        assert np.abs(div.coeffs).max() < 1e-13 * scale

    def test_fixed_point_self_consistency(self):
        grid = Grid(32)
        params = default_params(tol=1e-11)
        f = small_single_mode_forcing(grid, params.alpha)
        sol = picard_solve(f, params)
        t_u = apply_T(sol.velocity, f, params)
        drift = sobolev_norm(
            SpectralField(grid, sol.velocity.coeffs - t_u.coeffs), 0.75
        )
        assert drift <= params.tol

    def test_null_identity_at_iterates(self):
        grid = Grid(32)
        params = default_params()
        f = small_single_mode_forcing(grid, params.alpha)
        sol = picard_solve(f, params)
        defect, scale = null_identity_defect(sol.velocity, params.cutoff_radius)
        assert abs(defect) <= 1e-10 * scale

    def test_energy_ledger_schema(self):
        grid = Grid(16)
        params = default_params()
        f = small_single_mode_forcing(grid, params.alpha)
        sol = picard_solve(f, params)
        assert len(sol.energy_ledger) == sol.iterations_used + 1
        for i, row in enumerate(sol.energy_ledger):
            assert row[0] == i if i < len(sol.energy_ledger) - 1 else True
            assert len(row) == 4

    def test_lambda_zero_forces_zero_solution(self):
        grid = Grid(16)
        params = default_params(lam=0.0)
        f = small_single_mode_forcing(grid, params.alpha)
        sol = picard_solve(f, params)
        assert sol.converged
        assert np.abs(sol.velocity.coeffs).max() == 0.0

    def test_large_forcing_reports_max_iter(self):
        grid = Grid(16)
        params = default_params(max_iter=25)
        f = small_single_mode_forcing(grid, params.alpha, target=50.0)
        sol = picard_solve(f, params)
        assert sol.status == "max_iter"
        assert not sol.converged
        assert len(sol.energy_ledger) >= 25

    def test_blowup_reports_nan_with_last_finite_state(self):
        grid = Grid(16)
        params = default_params(max_iter=30)
        f = small_single_mode_forcing(grid, params.alpha, target=1e6)
        sol = picard_solve(f, params)
        assert sol.status == "nan"
        assert np.isfinite(sol.velocity.coeffs.view(np.float64)).all()

    def test_rejects_non_solenoidal_forcing(self):
        grid = Grid(16)
        coeffs = transform_forward(
            PhysicalField(
                grid, np.random.default_rng(0).standard_normal((3,) + (16,) * 3)
            )
        ).coeffs.copy()
        coeffs[:, 0, 0, 0] = 0.0
        with pytest.raises(ValueError, match="divergence-free"):
            picard_solve(SpectralField(grid, coeffs), default_params())


class TestContinuation:
    def test_single_stage_equals_picard(self):
        grid = Grid(16)
        params = default_params()
        f = small_single_mode_forcing(grid, params.alpha)
        direct = picard_solve(f, params)
        result = continuation_solve(f, params)
        assert len(result.stages) == 1
        assert np.array_equal(
            result.stages[0].velocity.coeffs, direct.velocity.coeffs
        )

    def test_schedule_keeps_uniform_bound_and_contracts(self):
        grid = Grid(32)
        radius = 0.45 * L
        params = default_params(
            continuation=((0.1, radius), (0.05, radius), (0.025, radius))
        )
        f = small_single_mode_forcing(grid, params.alpha)
        result = continuation_solve(f, params)
        assert result.halted_stage is None
        f_dual = sobolev_norm(f, -0.75)
        for sol in result.stages:
            assert sol.converged
            assert sobolev_norm(sol.velocity, 0.75) <= f_dual + 1e-12
        assert len(result.stage_distances) == 2
        assert result.stage_distances[1] < result.stage_distances[0]

    def test_diverging_stage_halts_with_partial_results(self):
        grid = Grid(16)
        radius = 0.45 * L
        params = default_params(
            max_iter=20,
            continuation=((0.1, radius), (1e-6, radius)),
        )
        f = small_single_mode_forcing(grid, params.alpha, target=12.0)
        result = continuation_solve(f, params)
        assert result.halted_stage == 1
        assert result.stages[0].converged
        assert not result.stages[1].converged
        assert len(result.stages) == 2


class TestPressure:
    def test_zero_velocity_gives_zero_pressure(self):
        grid = Grid(16)
        p = recover_pressure(SpectralField.zeros(grid, 3))
        assert np.abs(p.coeffs).max() == 0.0

    def test_taylor_green_closed_form(self):
        grid = Grid(32)
        u = build_forcing(grid, ForcingSpec("taylor_green_like", amplitude=1.0))
        p = transform_inverse(recover_pressure(u))
        x, y, _ = grid.mesh()
        expected = -(np.cos(2 * x) + np.cos(2 * y)) / 4.0
        assert np.abs(p.values[0] - expected).max() < 1e-10

    def test_taylor_green_is_steady_solution_of_forced_balance(self):
        # advective term and pressure gradient cancel, so f = dissipation alone
        grid = Grid(32)
        u = build_forcing(grid, ForcingSpec("taylor_green_like", amplitude=1.0))
        p = recover_pressure(u)
        for alpha in (1.0, 1.5):
            f = fractional_laplacian(u, alpha)
            assert residual(u, p, f, alpha) < 1e-12

    def test_riesz_bound_on_random_solenoidal_fields(self):
        grid = Grid(32)
        q = 4.0
        ratios = []
        for seed in range(10):
            u = random_solenoidal_field(grid, seed=seed, band=(1, 8))
            p = recover_pressure(u)
            ratios.append(
                lebesgue_norm(transform_inverse(p), q / 2)
                / lebesgue_norm(transform_inverse(u), q) ** 2
            )
        assert all(np.isfinite(r) for r in ratios)
        assert max(ratios) < 10.0

    def test_rejects_non_solenoidal_velocity(self):
        grid = Grid(16)
        bad = transform_forward(
            PhysicalField(
                grid, np.random.default_rng(1).standard_normal((3,) + (16,) * 3)
            )
        )
        with pytest.raises(ValueError, match="divergence-free"):
            recover_pressure(bad)


class TestResidual:
    def test_all_zero_fields(self):
        grid = Grid(16)
        z3 = SpectralField.zeros(grid, 3)
        z1 = SpectralField.zeros(grid, 1)
        assert residual(z3, z1, z3, 1.5) == 0.0

    def test_converged_solution_has_small_fixed_point_residual(self):
        grid = Grid(32)
        params = default_params(tol=1e-11)
        f = small_single_mode_forcing(grid, params.alpha)
        sol = picard_solve(f, params)
        recomputed = regularized_residual(sol.velocity, f, params)
        assert recomputed < 1e-8
        assert abs(recomputed - sol.residual_norm) <= 1e-12 + 1e-6 * recomputed

    def test_perturbation_grows_residual_linearly(self):
        grid = Grid(32)
        params = default_params()
        f = small_single_mode_forcing(grid, params.alpha)
        sol = picard_solve(f, params)
        base = residual(sol.velocity, sol.pressure, f, params.alpha)

        # perturb along the forcing mode so the residual derivative is
        # nondegenerate in that direction
        x = grid.x1d.reshape(-1, 1, 1)
        bump = np.cos(2 * np.pi * x / L) * np.ones((grid.n,) * 3)
        mode = transform_forward(
            PhysicalField.vector(grid, np.zeros_like(bump), bump, np.zeros_like(bump))
        )

        def perturbed(delta):
            coeffs = sol.velocity.coeffs + delta * mode.coeffs
            return residual(
                SpectralField(grid, coeffs), sol.pressure, f, params.alpha
            )

        deltas = np.array([1e-4, 2e-4, 4e-4])
        slopes = np.array([(perturbed(d) - base) / d for d in deltas])
        assert np.all(np.abs(slopes) > 0)
        assert np.abs(slopes[1] / slopes[0] - 1.0) < 0.01
        assert np.abs(slopes[2] / slopes[1] - 1.0) < 0.01

    def test_pressure_gauge_invariance(self):
        grid = Grid(16)
        params = default_params()
        f = small_single_mode_forcing(grid, params.alpha)
        sol = picard_solve(f, params)
        shifted = sol.pressure.coeffs.copy()
        shifted[0, 0, 0, 0] += 42.0
        r1 = residual(sol.velocity, sol.pressure, f, params.alpha)
        r2 = residual(sol.velocity, SpectralField(grid, shifted), f, params.alpha)
        assert r1 == r2

    def test_rejects_grid_mismatch(self):
        a, b = Grid(16), Grid(32)
        with pytest.raises(ValueError, match="different grids"):
            residual(
                SpectralField.zeros(a, 3),
                SpectralField.zeros(a, 1),
                SpectralField.zeros(b, 3),
                1.0,
            )


class TestEnergyChecks:
    def test_zero_force_gives_zero_sides(self):
        grid = Grid(16)
        params = default_params()
        f = SpectralField.zeros(grid, 3)
        sol = picard_solve(f, params)
        for check in energy_inequality_check(sol, f, params):
            assert check.lhs == 0.0
            assert check.rhs == 0.0
            assert check.passed

    def test_converged_small_data_passes_all_inequalities(self):
        grid = Grid(32)
        for alpha in (0.8, 1.5):
            params = default_params(alpha=alpha)
            f = small_single_mode_forcing(grid, alpha)
            sol = picard_solve(f, params)
            checks = energy_inequality_check(sol, f, params)
            assert all(c.passed for c in checks)
            assert min(c.rel_slack for c in checks) >= -1e-8

    def test_lambda_homotopy_scales_the_balance(self):
        grid = Grid(32)
        params = default_params(lam=0.5)
        f = small_single_mode_forcing(grid, params.alpha)
        sol = picard_solve(f, params)
        checks = {c.name: c for c in energy_inequality_check(sol, f, params)}
        assert checks["energy_balance"].passed
        assert checks["dual_bound"].rel_slack > 0.4  # lam=1/2 halves the response
