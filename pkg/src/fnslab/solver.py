"""Regularized fixed-point construction of stationary solutions.

The stationary momentum balance with fractional dissipation of order alpha,

    (-Lap)^(alpha/2) u + (u.grad) u + grad p - f = 0,    div u = 0,

is solved through the regularized fixed-point problem u = T(u) with

    T(u) = [eps*(-Lap) + (-Lap)^(alpha/2)]^(-1) ( f - P[((theta_R u).grad)(theta_R u)] ),

where P is the Leray projection and theta_R a smooth radial cutoff equal to 1
inside radius R/2 and 0 outside radius R.  A damped Picard iteration from
u = 0 realizes the map; a continuation schedule in (eps, R) relaxes the
regularization.  The fixed point satisfies the regularized equation, not the
original one: `Solution.residual_norm` is the regularized-equation residual
(what the iteration drives to zero), while `residual` / `pde_residual_norm`
evaluate the original balance, which retains the O(eps) regularization and
cutoff contributions.

The nonlinear term of the cutoff equation has a nonzero spatial mean on the
box (div(theta_R u) != 0); its k=0 component is discarded before inverting
the dissipation symbol.  This is the same mean-free gauge every inverse
multiplier in this package uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .norms import lebesgue_norm, sobolev_norm
from .spectral import (
    Grid,
    PhysicalField,
    SpectralField,
    _fftn,
    advective_term,
    fractional_laplacian,
    gradient,
    leray_project,
    regularized_inverse,
    transform_forward,
    transform_inverse,
)

__all__ = [
    "SolverParams",
    "Solution",
    "ContinuationResult",
    "cutoff_field",
    "cutoff_gradient",
    "apply_T",
    "picard_solve",
    "continuation_solve",
    "recover_pressure",
    "residual",
    "regularized_residual",
    "energy_inequality_check",
    "EnergyCheck",
    "null_identity_defect",
]


@dataclass(frozen=True)
class SolverParams:
    """Parameters of the regularized fixed-point map and its iteration.

    `lam` is the homotopy factor multiplying the whole right-hand side; the
    physical equation corresponds to lam = 1.  `continuation` is an optional
    schedule of (epsilon, cutoff_radius) stages, strictly decreasing in
    epsilon and nondecreasing in radius.
    """

    alpha: float
    epsilon: float
    cutoff_radius: float
    lam: float = 1.0
    damping: float = 1.0
    tol: float = 1e-10
    max_iter: int = 400
    continuation: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.cutoff_radius > 1:
            raise ValueError(
                f"cutoff_radius must exceed 1, got {self.cutoff_radius}"
            )
        if not 0 <= self.lam <= 1:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")
        if not 0 < self.damping <= 1:
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        eps_prev, r_prev = None, None
        for stage, (eps, radius) in enumerate(self.continuation):
            if eps_prev is not None:
                if not eps < eps_prev:
                    raise ValueError(
                        "continuation schedule must be strictly decreasing in epsilon"
                    )
                if radius < r_prev:
                    raise ValueError(
                        "continuation schedule must be nondecreasing in cutoff radius"
                    )
            if not eps > 0:
                raise ValueError(f"continuation stage {stage}: epsilon must be positive")
            if not radius > 1:
                raise ValueError(
                    f"continuation stage {stage}: cutoff radius must exceed 1"
                )
            eps_prev, r_prev = eps, radius


@dataclass(frozen=True)
class Solution:
    """Converged (or halted) state of a Picard solve.

    residual_norm is the regularized-equation residual in the dual norm; the
    original-equation residual (which keeps the O(eps) terms) is stored as
    pde_residual_norm.  energy_ledger rows are (iter, H1, Halpha2, residual).
    """

    velocity: SpectralField
    pressure: SpectralField
    params: SolverParams
    residual_norm: float
    pde_residual_norm: float
    iterations_used: int
    status: str  # converged | max_iter | nan
    energy_ledger: tuple[tuple[int, float, float, float], ...] = field(repr=False)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


@dataclass(frozen=True)
class ContinuationResult:
    stages: tuple[Solution, ...]
    schedule: tuple[tuple[float, float], ...]
    stage_distances: tuple[float, ...]  # Halpha2 distance between consecutive stages
    halted_stage: int | None  # index of the first non-converged stage, if any


def _bump(t: np.ndarray) -> np.ndarray:
    """exp(-1/t) for t > 0, zero otherwise; the mollifier building block."""
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _bump_deriv(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, monotone in between."""
    g = _bump(t)
    return g / (g + _bump(1.0 - t))


def _check_cutoff_radius(grid: Grid, radius: float):
    if not 0 < radius < 0.5 * grid.box_len:
        raise ValueError(
            f"cutoff radius must lie in (0, box_len/2) = (0, {0.5 * grid.box_len}), "
            f"got {radius}"
        )


def cutoff_field(grid: Grid, radius: float) -> PhysicalField:
    """Radial bump about the box center: 1 inside radius/2, 0 outside radius.

    Profile: smooth_step(2*(1 - r/radius)), built from the exp(-1/t)
    mollifier, hence C-infinity with exact plateau values.
    """
    _check_cutoff_radius(grid, radius)
    t = 2.0 * (1.0 - grid.radius_from_center / radius)
    return PhysicalField.scalar(grid, _smooth_step(t))


def cutoff_gradient(grid: Grid, radius: float) -> PhysicalField:
    """Analytic gradient of cutoff_field; supported on the transition annulus."""
    _check_cutoff_radius(grid, radius)
    r = grid.radius_from_center
    t = 2.0 * (1.0 - r / radius)
    g, g1 = _bump(t), _bump(1.0 - t)
    dg, dg1 = _bump_deriv(t), _bump_deriv(1.0 - t)
    denom = (g + g1) ** 2
    sprime = np.zeros_like(t)
    nz = denom > 0
    sprime[nz] = (dg[nz] * g1[nz] + g[nz] * dg1[nz]) / denom[nz]
    dtheta_dr = sprime * (-2.0 / radius)
    c = 0.5 * grid.box_len
    x, y, z = grid.mesh()
    with np.errstate(invalid="ignore"):
        scale = np.where(r > 0, dtheta_dr / np.where(r > 0, r, 1.0), 0.0)
    return PhysicalField.vector(grid, scale * (x - c), scale * (y - c), scale * (z - c))


def _cutoff_nonlinearity(
    u: SpectralField, theta: PhysicalField, lam: float
) -> SpectralField:
    """lam * P[((theta u).grad)(theta u)], mean-free gauge applied."""
    grid = u.grid
    u_phys = transform_inverse(u)
    w = PhysicalField(grid, theta.values * u_phys.values)
    adv = transform_forward(advective_term(w, w))
    proj = leray_project(adv)
    coeffs = proj.coeffs.copy()
    coeffs[:, 0, 0, 0] = 0.0  # cutoff breaks solenoidality; drop the mean
    if lam != 1.0:
        coeffs *= lam
    return SpectralField(grid, coeffs)


def apply_T(
    u: SpectralField,
    f: SpectralField,
    params: SolverParams,
    theta: PhysicalField | None = None,
) -> SpectralField:
    """One application of the regularized fixed-point map.

    Composition: cutoff multiply, advect, Leray-project, subtract the force,
    negate, invert the dissipation symbol, scale by lam.  Passing a
    precomputed `theta` avoids rebuilding the cutoff in iteration loops.
    """
    grid = u.grid
    if f.grid != grid:
        raise ValueError("apply_T: velocity and force live on different grids")
    if theta is None:
        theta = cutoff_field(grid, params.cutoff_radius)
    nonlin = _cutoff_nonlinearity(u, theta, params.lam)
    rhs = SpectralField(grid, params.lam * f.coeffs - nonlin.coeffs)
    return regularized_inverse(rhs, params.epsilon, params.alpha)


def _regularized_operator(v: SpectralField, params: SolverParams) -> SpectralField:
    symbol = (
        params.epsilon * v.grid.k_squared + v.grid.k_mag**params.alpha
    )
    return SpectralField(v.grid, v.coeffs * symbol)


def regularized_residual(
    u: SpectralField,
    f: SpectralField,
    params: SolverParams,
    theta: PhysicalField | None = None,
    t_of_u: SpectralField | None = None,
) -> float:
    """Dual-norm residual of the regularized equation at u.

    Computed as ||[eps(-Lap) + (-Lap)^(a/2)](u - T(u))|| in the order
    -alpha/2 norm, which equals the residual of the lam-scaled equation.
    """
    if t_of_u is None:
        t_of_u = apply_T(u, f, params, theta)
    diff = SpectralField(u.grid, u.coeffs - t_of_u.coeffs)
    return sobolev_norm(_regularized_operator(diff, params), -0.5 * params.alpha)


def _check_force(f: SpectralField, params: SolverParams):
    from .forcing import validate_forcing

    validate_forcing(f)
    # both dual norms must be finite, which on the box reduces to mean-free
    sobolev_norm(f, -1.0)
    sobolev_norm(f, -0.5 * params.alpha)


def picard_solve(
    f: SpectralField,
    params: SolverParams,
    initial: SpectralField | None = None,
) -> Solution:
    """Damped Picard iteration u <- (1-gamma) u + gamma T(u) from u = 0.

    Stops when the relative H^{alpha/2} increment drops below params.tol.
    Non-convergence within max_iter is reported through status="max_iter"
    (expected for large forcing), NaN blowup through status="nan" with the
    last finite iterate retained.
    """
    grid = f.grid
    _check_force(f, params)
    theta = cutoff_field(grid, params.cutoff_radius)
    u = initial if initial is not None else SpectralField.zeros(grid, 3)
    if u.grid != grid:
        raise ValueError("picard_solve: initial guess grid mismatch")
    gamma = params.damping
    half_alpha = 0.5 * params.alpha
    ledger: list[tuple[int, float, float, float]] = []
    status = "max_iter"
    iterations = 0
    for it in range(params.max_iter):
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                t_u = apply_T(u, f, params, theta)
            except ValueError:
                # overflow inside the nonlinearity surfaces as a non-finite
                # field; structural errors would already raise at it == 0
                if it == 0:
                    raise
                status = "nan"
                break
            res_u = regularized_residual(u, f, params, theta, t_of_u=t_u)
            ledger.append(
                (it, sobolev_norm(u, 1.0), sobolev_norm(u, half_alpha), res_u)
            )
            new_coeffs = (1.0 - gamma) * u.coeffs + gamma * t_u.coeffs
            if not np.isfinite(new_coeffs.view(np.float64).sum()):
                status = "nan"
                break
            u_new = SpectralField(grid, new_coeffs)
            increment = sobolev_norm(
                SpectralField(grid, u_new.coeffs - u.coeffs), half_alpha
            )
            denom = max(1.0, sobolev_norm(u, half_alpha))
        iterations = it + 1
        u = u_new
        if increment / denom < params.tol:
            status = "converged"
            break
    # post-processing can overflow for blown-up (finite but huge) states;
    # fall back to the last ledger entry and a zero pressure in that case
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            t_final = apply_T(u, f, params, theta)
            res_final = regularized_residual(u, f, params, theta, t_of_u=t_final)
            ledger.append(
                (iterations, sobolev_norm(u, 1.0), sobolev_norm(u, half_alpha), res_final)
            )
            pressure = recover_pressure(u)
            pde_res = residual(u, pressure, f, params.alpha)
        except ValueError:
            if status == "converged":
                raise
            res_final = ledger[-1][3] if ledger else float("nan")
            pressure = SpectralField.zeros(grid, 1)
            pde_res = float("nan")
    return Solution(
        velocity=u,
        pressure=pressure,
        params=params,
        residual_norm=res_final,
        pde_residual_norm=pde_res,
        iterations_used=iterations,
        status=status,
        energy_ledger=tuple(ledger),
    )


def continuation_solve(f: SpectralField, params: SolverParams) -> ContinuationResult:
    """Run picard_solve along the (epsilon, radius) schedule with warm starts.

    The H^{alpha/2} distance between consecutive stage solutions is the
    numerical surrogate for the vanishing-regularization limit.  A diverging
    stage halts the schedule; earlier stages are still returned.
    """
    schedule = params.continuation or ((params.epsilon, params.cutoff_radius),)
    half_alpha = 0.5 * params.alpha
    stages: list[Solution] = []
    distances: list[float] = []
    halted = None
    warm: SpectralField | None = None
    for idx, (eps, radius) in enumerate(schedule):
        stage_params = replace(
            params, epsilon=eps, cutoff_radius=radius, continuation=()
        )
        sol = picard_solve(f, stage_params, initial=warm)
        stages.append(sol)
        if warm is not None:
            distances.append(
                sobolev_norm(
                    SpectralField(f.grid, sol.velocity.coeffs - warm.coeffs),
                    half_alpha,
                )
            )
        if not sol.converged:
            halted = idx
            break
        warm = sol.velocity
    return ContinuationResult(
        stages=tuple(stages),
        schedule=tuple(schedule[: len(stages)]),
        stage_distances=tuple(distances),
        halted_stage=halted,
    )


def recover_pressure(u: SpectralField) -> SpectralField:
    """Pressure from the velocity: inverse Laplacian of div div (u (x) u).

    The tensor product is formed pointwise and dealiased; the input must be
    solenoidal (relative divergence below 1e-10).
    """
    grid = u.grid
    if u.components != 3:
        raise ValueError("recover_pressure expects a 3-component field")
    scale = float((grid.k_mag * np.abs(u.coeffs)).max())
    if scale > 0:
        div_max = float(
            np.abs(
                sum(1j * grid.k_axis_deriv(a) * u.coeffs[a] for a in range(3))
            ).max()
        )
        if div_max > 1e-10 * scale:
            raise ValueError(
                f"recover_pressure: input not divergence-free "
                f"(relative defect {div_max / scale:.3e})"
            )
    u_phys = transform_inverse(u)
    kd = [grid.k_axis_deriv(a) for a in range(3)]
    k2 = kd[0] ** 2 + kd[1] ** 2 + kd[2] ** 2
    inv_k2 = np.zeros_like(k2)
    nz = k2 > 0
    inv_k2[nz] = 1.0 / k2[nz]
    pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
    prods = np.stack([u_phys.values[j] * u_phys.values[l] for j, l in pairs])
    t_hats = _fftn(prods) * grid.dealias_mask
    # div div (u x u) at k is -sum k_j k_l T_jl; dividing by |k|^2 inverts -Lap
    num = np.zeros((grid.n,) * 3, dtype=complex)
    for (j, l), t_hat in zip(pairs, t_hats):
        weight = kd[j] * kd[l]
        num += (weight if j == l else 2.0 * weight) * t_hat
    p_hat = -num * inv_k2
    p_hat[0, 0, 0] = 0.0
    return SpectralField(grid, p_hat[np.newaxis])


def residual(
    u: SpectralField, p: SpectralField, f: SpectralField, alpha: float
) -> float:
    """Dual-norm residual of the original stationary balance.

    Assembles (-Lap)^(alpha/2) u + (u.grad) u + grad p - f term by term and
    returns its H^{-alpha/2} norm.  The advective mean, which vanishes
    analytically for solenoidal u, is zeroed to keep the left-hand side
    exactly mean-free.
    """
    grid = u.grid
    if p.grid != grid or f.grid != grid:
        raise ValueError("residual: fields live on different grids")
    if p.components != 1:
        raise ValueError("residual: pressure must be scalar")
    u_phys = transform_inverse(u)
    adv = transform_forward(advective_term(u_phys, u_phys))
    lhs = (
        fractional_laplacian(u, alpha).coeffs
        + adv.coeffs
        + gradient(p).coeffs
        - f.coeffs
    )
    lhs[:, 0, 0, 0] = 0.0
    return sobolev_norm(SpectralField(grid, lhs), -0.5 * alpha)


@dataclass(frozen=True)
class EnergyCheck:
    name: str
    lhs: float
    rhs: float
    slack: float
    rel_slack: float
    passed: bool


def energy_inequality_check(
    sol, f: SpectralField, params: SolverParams, allowance: float = 1e-8
) -> list[EnergyCheck]:
    """Evaluate the three a-priori bounds a fixed point must satisfy.

    1. energy balance: eps ||u||_H1^2 + ||u||^2 <= lam ||u|| ||f||_dual
    2. H1 bound:       ||u||_H1 <= ||f||_dual / sqrt(2 eps)
    3. dual bound:     ||u|| <= ||f||_dual
    with || || the H^{alpha/2} norm and || ||_dual its negative-order pair.
    Slack is rhs - lhs; relative slack is measured against the rhs scale and
    must stay above -allowance (discretization slack).

    `sol` may be a Solution or a bare velocity field (e.g. from a snapshot).
    """
    u = sol.velocity if isinstance(sol, Solution) else sol
    h1 = sobolev_norm(u, 1.0)
    ha = sobolev_norm(u, 0.5 * params.alpha)
    f_dual = sobolev_norm(f, -0.5 * params.alpha)
    checks = []
    for name, lhs, rhs in (
        (
            "energy_balance",
            params.epsilon * h1**2 + ha**2,
            params.lam * ha * f_dual,
        ),
        ("h1_bound", h1, f_dual / np.sqrt(2.0 * params.epsilon)),
        ("dual_bound", ha, f_dual),
    ):
        slack = rhs - lhs
        scale = max(abs(rhs), abs(lhs), 1e-300)
        rel = slack / scale
        checks.append(
            EnergyCheck(
                name=name,
                lhs=lhs,
                rhs=rhs,
                slack=slack,
                rel_slack=rel,
                passed=bool(rel >= -allowance),
            )
        )
    return checks


def null_identity_defect(u: SpectralField, radius: float) -> tuple[float, float]:
    """Quadrature of u . [((theta u).grad)(theta u)] and its natural scale.

    The integral vanishes identically for solenoidal u and any smooth cutoff,
    so the returned value isolates quadrature and aliasing error.  The scale
    is the cubed L3 norm of u.
    """
    grid = u.grid
    theta = cutoff_field(grid, radius)
    u_phys = transform_inverse(u)
    w = PhysicalField(grid, theta.values * u_phys.values)
    adv = advective_term(w, w)
    integral = float(np.sum(u_phys.values * adv.values) * grid.cell_volume)
    scale = lebesgue_norm(u_phys, 3.0) ** 3
    return integral, scale
