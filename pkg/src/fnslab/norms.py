"""Lebesgue and homogeneous Sobolev norms, plus empirical inequality checkers.

Lebesgue norms are rectangle-rule quadratures on the collocation grid, which
is spectrally accurate for band-limited inputs.  Homogeneous Sobolev norms of
order s are weighted spectral sums

    ||f||_s = ( V * sum_k |k|^(2s) |f_hat(k)|^2 )^(1/2),

with the k=0 mode excluded for s != 0; negative orders demand mean-free
fields rather than silently projecting the mean away.

The checkers return the ratio lhs/rhs of the corresponding inequality for a
given pair of fields.  No constant is asserted: the ratios are empirical
lower bounds for the (unspecified) constants, and randomized suites report
their spread.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    PhysicalField,
    SpectralField,
    dealias,
    fractional_laplacian,
    transform_forward,
    transform_inverse,
)

__all__ = [
    "lebesgue_norm",
    "sobolev_norm",
    "sobolev_lp_norm",
    "check_product_rule",
    "check_fractional_leibniz",
    "check_sobolev_embedding",
    "TrialRecord",
    "product_rule_trials",
    "fractional_leibniz_trials",
    "embedding_trials",
]


def lebesgue_norm(f: PhysicalField, q: float) -> float:
    """L^q norm by rectangle rule; vector fields use the pointwise magnitude."""
    if q < 1:
        raise ValueError(f"Lebesgue exponent must satisfy q >= 1, got {q}")
    mag = f.magnitude()
    return float((np.sum(mag**q) * f.grid.cell_volume) ** (1.0 / q))


def sobolev_norm(f: SpectralField, s: float) -> float:
    """Homogeneous Sobolev norm of order s via the weighted spectral sum."""
    grid = f.grid
    if s == 0:
        weighted = np.abs(f.coeffs) ** 2
    else:
        if s < 0 and not f.is_mean_free():
            raise ValueError(
                "sobolev_norm: negative order requires a mean-free field"
            )
        with np.errstate(divide="ignore"):
            w = grid.k_mag ** (2.0 * s)
        w[0, 0, 0] = 0.0
        weighted = w * np.abs(f.coeffs) ** 2
    return float(np.sqrt(grid.volume * weighted.sum()))


def sobolev_lp_norm(f: SpectralField, s: float, q: float) -> float:
    """Mixed-scale norm ||(-Lap)^{s/2} f||_{L^q}; requires s >= 0 and q > 1."""
    if s < 0:
        raise ValueError(f"sobolev_lp_norm requires s >= 0, got {s}")
    if not q > 1:
        raise ValueError(f"sobolev_lp_norm requires q > 1, got {q}")
    return lebesgue_norm(transform_inverse(fractional_laplacian(f, s)), q)


def _dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    fp = transform_inverse(f).values
    gp = transform_inverse(g).values
    prod = transform_forward(PhysicalField(f.grid, fp * gp))
    return dealias(prod)


def _drop_mean(v: SpectralField) -> SpectralField:
    c = v.coeffs.copy()
    c[:, 0, 0, 0] = 0.0
    return SpectralField(v.grid, c)


def check_product_rule(
    f: SpectralField, g: SpectralField, s: float, delta: float
) -> float:
    """Ratio for ||fg||_{s+delta-3/2} <= C (||f||_delta ||g||_s + ||g||_delta ||f||_s).

    The product fg is computed pseudo-spectrally with dealiasing.  Its mean is
    dropped before taking the (possibly negative-order) norm: on the periodic
    box the constant mode carries no homogeneous-norm content.
    """
    if s < 0:
        raise ValueError(f"product rule requires s >= 0, got {s}")
    if not 0 < delta < 1.5:
        raise ValueError(f"product rule requires 0 < delta < 3/2, got {delta}")
    rhs = sobolev_norm(f, delta) * sobolev_norm(g, s) + sobolev_norm(
        g, delta
    ) * sobolev_norm(f, s)
    if rhs == 0.0:
        return 0.0
    fg = _drop_mean(_dealiased_product(f, g))
    lhs = sobolev_norm(fg, s + delta - 1.5)
    return lhs / rhs


def check_fractional_leibniz(
    f: SpectralField,
    g: SpectralField,
    s: float,
    s1: float,
    s2: float,
    p: float,
    p1: float,
    p2: float,
) -> float:
    """Ratio for the commutator estimate of the fractional Leibniz rule.

    lhs is ||D^s(fg) - (D^s f) g - (D^s g) f||_{L^p} with D^s the |k|^s
    multiplier, products dealiased; rhs is ||D^{s1} f||_{L^{p1}} ||D^{s2} g||_{L^{p2}}.
    """
    for name, val in (("s", s), ("s1", s1), ("s2", s2)):
        if not 0 < val < 1:
            raise ValueError(f"fractional Leibniz requires 0 < {name} < 1, got {val}")
    if abs(s - (s1 + s2)) > 1e-12:
        raise ValueError(f"fractional Leibniz requires s = s1 + s2, got {s} != {s1}+{s2}")
    for name, val in (("p", p), ("p1", p1), ("p2", p2)):
        if not 1 < val < np.inf:
            raise ValueError(f"exponent {name} must lie in (1, inf), got {val}")
    if abs(1.0 / p - (1.0 / p1 + 1.0 / p2)) > 1e-12:
        raise ValueError("exponents must satisfy 1/p = 1/p1 + 1/p2")

    term_fg = fractional_laplacian(_dealiased_product(f, g), s)
    term_f = _dealiased_product(fractional_laplacian(f, s), g)
    term_g = _dealiased_product(fractional_laplacian(g, s), f)
    comm = SpectralField(f.grid, term_fg.coeffs - term_f.coeffs - term_g.coeffs)
    rhs = lebesgue_norm(
        transform_inverse(fractional_laplacian(f, s1)), p1
    ) * lebesgue_norm(transform_inverse(fractional_laplacian(g, s2)), p2)
    if rhs == 0.0:
        return 0.0
    lhs = lebesgue_norm(transform_inverse(comm), p)
    return lhs / rhs


def check_sobolev_embedding(f: SpectralField, s: float, q: float) -> float:
    """Ratio ||f||_{L^q} / ||f||_{H^s} on the p=2 scale, q = 6/(3-2s)."""
    if not 0 < s < 1.5:
        raise ValueError(f"embedding requires 0 < s < 3/2, got {s}")
    q_expected = 6.0 / (3.0 - 2.0 * s)
    if abs(q - q_expected) > 1e-9 * q_expected:
        raise ValueError(
            f"embedding exponents must satisfy q = 6/(3-2s); got q={q}, expected {q_expected}"
        )
    if not f.is_mean_free():
        raise ValueError("embedding checker requires a mean-free field")
    denom = sobolev_norm(f, s)
    if denom == 0.0:
        return 0.0
    return lebesgue_norm(transform_inverse(f), q) / denom


@dataclass(frozen=True)
class TrialRecord:
    checker: str
    params: str
    trial_seed: int
    lhs: float
    rhs: float
    ratio: float


def _random_unit_scalar(grid, seed, band):
    # local import: forcing depends on spectral only, no cycle
    from .forcing import random_band_scalar

    return random_band_scalar(grid, seed=seed, band=band)


def product_rule_trials(grid, s, delta, trials=100, seed=0, band=None):
    """Seeded randomized suite for the product-rule checker."""
    band = band or (1, max(2, grid.n // 3 - 1))
    records = []
    for i in range(trials):
        f = _random_unit_scalar(grid, seed + 2 * i, band)
        g = _random_unit_scalar(grid, seed + 2 * i + 1, band)
        ratio = check_product_rule(f, g, s, delta)
        rhs = sobolev_norm(f, delta) * sobolev_norm(g, s) + sobolev_norm(
            g, delta
        ) * sobolev_norm(f, s)
        records.append(
            TrialRecord(
                checker="product_rule",
                params=f"s={s};delta={delta};n={grid.n};band={band[0]}:{band[1]}",
                trial_seed=seed + 2 * i,
                lhs=ratio * rhs,
                rhs=rhs,
                ratio=ratio,
            )
        )
    return records


def fractional_leibniz_trials(
    grid, s1, s2, p1, p2, trials=100, seed=0, band=None
):
    """Seeded randomized suite for the fractional-Leibniz checker."""
    band = band or (1, max(2, grid.n // 3 - 1))
    s = s1 + s2
    p = 1.0 / (1.0 / p1 + 1.0 / p2)
    records = []
    for i in range(trials):
        f = _random_unit_scalar(grid, seed + 2 * i, band)
        g = _random_unit_scalar(grid, seed + 2 * i + 1, band)
        ratio = check_fractional_leibniz(f, g, s, s1, s2, p, p1, p2)
        rhs = lebesgue_norm(
            transform_inverse(fractional_laplacian(f, s1)), p1
        ) * lebesgue_norm(transform_inverse(fractional_laplacian(g, s2)), p2)
        records.append(
            TrialRecord(
                checker="fractional_leibniz",
                params=(
                    f"s1={s1};s2={s2};p1={p1};p2={p2};n={grid.n};band={band[0]}:{band[1]}"
                ),
                trial_seed=seed + 2 * i,
                lhs=ratio * rhs,
                rhs=rhs,
                ratio=ratio,
            )
        )
    return records


def embedding_trials(grid, s, trials=100, seed=0, band=None):
    """Seeded randomized suite for the Sobolev embedding checker."""
    band = band or (1, max(2, grid.n // 3 - 1))
    q = 6.0 / (3.0 - 2.0 * s)
    records = []
    for i in range(trials):
        f = _random_unit_scalar(grid, seed + i, band)
        ratio = check_sobolev_embedding(f, s, q)
        denom = sobolev_norm(f, s)
        records.append(
            TrialRecord(
                checker="sobolev_embedding",
                params=f"s={s};q={q};n={grid.n};band={band[0]}:{band[1]}",
                trial_seed=seed + i,
                lhs=ratio * denom,
                rhs=denom,
                ratio=ratio,
            )
        )
    return records
