"""Construction of divergence-free, mean-free input fields.

Three forcing constructions are supported (single Fourier mode, a
Taylor-Green-like cellular field, and band-limited random noise), plus
spatially decaying solenoidal fields for the localization diagnostics.
Every generated field is exactly mean-free and solenoidal by construction:
random fields are built by Leray projection, decaying fields as spectral
curls of enveloped vector potentials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .norms import sobolev_norm
from .spectral import (
    Grid,
    PhysicalField,
    SpectralField,
    transform_forward,
    transform_inverse,
)

__all__ = [
    "ForcingSpec",
    "build_forcing",
    "scale_to_sobolev_norm",
    "random_band_scalar",
    "random_solenoidal_field",
    "decaying_solenoidal_field",
    "validate_forcing",
]

CONSTRUCTIONS = ("single_mode", "taylor_green_like", "random_band")


@dataclass(frozen=True)
class ForcingSpec:
    """Recipe for an external force: construction, amplitude, band, seed."""

    construction: str = "single_mode"
    amplitude: float = 1.0
    band: tuple[int, int] = (1, 4)
    seed: int = 0

    def __post_init__(self):
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(
                f"unknown forcing construction {self.construction!r}; "
                f"expected one of {CONSTRUCTIONS}"
            )
        lo, hi = self.band
        if not (1 <= lo <= hi):
            raise ValueError(f"forcing band must satisfy 1 <= lo <= hi, got {self.band}")


def _band_mask(grid: Grid, lo: int, hi: int) -> np.ndarray:
    m = grid.modes
    m2 = (
        m.reshape(-1, 1, 1) ** 2 + m.reshape(1, -1, 1) ** 2 + m.reshape(1, 1, -1) ** 2
    )
    return (m2 >= lo * lo) & (m2 <= hi * hi)


def _zero_mean(coeffs: np.ndarray) -> np.ndarray:
    coeffs[..., 0, 0, 0] = 0.0
    return coeffs


def _band_pairs(grid: Grid, lo: int, hi: int):
    """Canonical band modes and the index arrays of their conjugate partners.

    Coefficients are drawn only on one representative of each {m, -m} pair,
    the other half is filled by conjugation, so fields are exactly real.
    Requires hi < n/2 (no self-conjugate Nyquist modes inside the band).
    """
    if hi >= grid.n // 2:
        raise ValueError(
            f"band upper limit must stay below n/2 = {grid.n // 2}, got {hi}"
        )
    m = grid.modes
    mx = m.reshape(-1, 1, 1)
    my = m.reshape(1, -1, 1)
    mz = m.reshape(1, 1, -1)
    m2 = mx * mx + my * my + mz * mz
    band = (m2 >= lo * lo) & (m2 <= hi * hi)
    canon = band & (
        (mz > 0) | ((mz == 0) & (my > 0)) | ((mz == 0) & (my == 0) & (mx > 0))
    )
    idx = np.nonzero(canon)
    mirror = tuple((grid.n - i) % grid.n for i in idx)
    kvec = (2.0 * np.pi / grid.box_len) * np.stack(
        [m[idx[0]], m[idx[1]], m[idx[2]]]
    ).astype(float)
    return idx, mirror, kvec


def random_band_scalar(grid: Grid, seed: int, band=(1, 4)) -> SpectralField:
    """Random scalar supported on the shell band lo <= |m| <= hi, unit L2 norm.

    Coefficients are iid complex Gaussian on the band, drawn directly in
    spectral space with exact Hermitian pairing.
    """
    rng = np.random.default_rng(seed)
    idx, mirror, _ = _band_pairs(grid, *band)
    vals = rng.standard_normal(len(idx[0])) + 1j * rng.standard_normal(len(idx[0]))
    norm = np.sqrt(grid.volume * 2.0 * np.sum(np.abs(vals) ** 2))
    if norm > 0:
        vals /= norm
    coeffs = np.zeros((1,) + (grid.n,) * 3, dtype=complex)
    coeffs[0][idx] = vals
    coeffs[0][mirror] = np.conj(vals)
    return SpectralField(grid, coeffs)


def random_solenoidal_field(
    grid: Grid, seed: int, band=(1, 4), amplitude: float = 1.0
) -> SpectralField:
    """Random solenoidal band field, L2 norm = amplitude.

    Complex Gaussian coefficients on the band are projected onto the plane
    orthogonal to k mode by mode, which is the Leray projection restricted
    to the band.
    """
    rng = np.random.default_rng(seed)
    idx, mirror, kvec = _band_pairs(grid, *band)
    ncoef = len(idx[0])
    vals = rng.standard_normal((3, ncoef)) + 1j * rng.standard_normal((3, ncoef))
    k2 = np.sum(kvec**2, axis=0)
    kdot = np.sum(kvec * vals, axis=0)
    vals -= kvec * (kdot / k2)
    norm = np.sqrt(grid.volume * 2.0 * np.sum(np.abs(vals) ** 2))
    if norm > 0:
        vals *= amplitude / norm
    coeffs = np.zeros((3,) + (grid.n,) * 3, dtype=complex)
    for c in range(3):
        coeffs[c][idx] = vals[c]
        coeffs[c][mirror] = np.conj(vals[c])
    return SpectralField(grid, coeffs)


def _single_mode(grid: Grid, amplitude: float, mode: int) -> SpectralField:
    kappa = 2.0 * np.pi * mode / grid.box_len
    x = grid.x1d.reshape(-1, 1, 1)
    zero = np.zeros((grid.n,) * 3)
    fy = amplitude * np.cos(kappa * x) * np.ones_like(zero)
    f = PhysicalField.vector(grid, zero, fy, zero)
    return transform_forward(f)


def _taylor_green(grid: Grid, amplitude: float, mode: int) -> SpectralField:
    """Cellular field A (cos kx sin ky, -sin kx cos ky, 0); solenoidal."""
    kappa = 2.0 * np.pi * mode / grid.box_len
    x = grid.x1d.reshape(-1, 1, 1)
    y = grid.x1d.reshape(1, -1, 1)
    ones_z = np.ones((1, 1, grid.n))
    ux = amplitude * np.cos(kappa * x) * np.sin(kappa * y) * ones_z
    uy = -amplitude * np.sin(kappa * x) * np.cos(kappa * y) * ones_z
    uz = np.zeros((grid.n,) * 3)
    return transform_forward(PhysicalField.vector(grid, ux, uy, uz))


def build_forcing(grid: Grid, spec: ForcingSpec) -> SpectralField:
    """Realize a ForcingSpec on a grid; output is solenoidal and mean-free."""
    if spec.construction == "single_mode":
        return _single_mode(grid, spec.amplitude, spec.band[0])
    if spec.construction == "taylor_green_like":
        return _taylor_green(grid, spec.amplitude, spec.band[0])
    return random_solenoidal_field(
        grid, seed=spec.seed, band=spec.band, amplitude=spec.amplitude
    )


def scale_to_sobolev_norm(f: SpectralField, s: float, target: float) -> SpectralField:
    """Rescale f so that its order-s Sobolev norm equals `target`."""
    current = sobolev_norm(f, s)
    if current == 0.0:
        if target == 0.0:
            return f
        raise ValueError("cannot rescale the zero field to a nonzero norm")
    return SpectralField(f.grid, f.coeffs * (target / current))


def validate_forcing(f: SpectralField, rtol: float = 1e-10) -> None:
    """Reject forcings that are not mean-free and divergence-free."""
    if f.components != 3:
        raise ValueError("forcing must be a 3-component field")
    if not f.is_mean_free():
        raise ValueError("forcing must be mean-free")
    grid = f.grid
    scale = float((grid.k_mag * np.abs(f.coeffs)).max())
    if scale == 0.0:
        return
    div_max = float(
        np.abs(
            sum(1j * grid.k_axis_deriv(a) * f.coeffs[a] for a in range(3))
        ).max()
    )
    if div_max > rtol * scale:
        raise ValueError(
            f"forcing must be divergence-free: max |k.f| = {div_max:.3e} "
            f"exceeds {rtol:g} of the field scale {scale:.3e}"
        )


def decaying_solenoidal_field(
    grid: Grid,
    seed: int,
    band=(1, 4),
    width: float | None = None,
    envelope: str = "gaussian",
    amplitude: float = 1.0,
) -> SpectralField:
    """Spatially decaying solenoidal field: curl of an enveloped potential.

    A random band-limited vector potential is damped by a radial envelope
    about the box center and the curl is taken spectrally, so the result is
    solenoidal to machine precision and inherits the envelope's decay.

    envelope: "gaussian"  exp(-r^2 / (2 width^2))
              "inverse_square"  1 / (1 + (r/width)^2)
    """
    if envelope not in ("gaussian", "inverse_square"):
        raise ValueError(f"unknown envelope {envelope!r}")
    width = width if width is not None else grid.box_len / 8.0
    pot = random_solenoidal_field(grid, seed=seed, band=band)
    pot_phys = transform_inverse(pot)
    r = grid.radius_from_center
    if envelope == "gaussian":
        env = np.exp(-0.5 * (r / width) ** 2)
    else:
        env = 1.0 / (1.0 + (r / width) ** 2)
    ph = transform_forward(PhysicalField(grid, pot_phys.values * env)).coeffs
    kx, ky, kz = (grid.k_axis_deriv(a) for a in range(3))
    curl = np.stack(
        [
            1j * (ky * ph[2] - kz * ph[1]),
            1j * (kz * ph[0] - kx * ph[2]),
            1j * (kx * ph[1] - ky * ph[0]),
        ]
    )
    _zero_mean(curl)
    u = SpectralField(grid, curl)
    norm = sobolev_norm(u, 0.0)
    if norm > 0:
        u = SpectralField(grid, u.coeffs * (amplitude / norm))
    return u
