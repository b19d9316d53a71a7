"""Periodic-box fields and Fourier-multiplier operators.

Every field lives on a uniform n^3 collocation grid over a cube of side
``box_len`` with periodic boundary conditions.  Spectral coefficients use the
Fourier-series convention: the forward transform carries the 1/n^3 factor, so
the k=0 coefficient equals the spatial mean of the field.  Wavenumbers are
k = 2*pi*m/box_len for integer modes m in standard FFT layout.

Conventions baked into every operator here:

* inverse and negative-power multipliers map the k=0 mode to 0 and demand
  mean-free input (constants carry no homogeneous-norm content);
* pointwise products that feed back into spectral operators are dealiased
  with the 2/3 rule (all modes with any ``|m_j| > n/3`` zeroed);
* the Nyquist mode ``m_j = -n/2`` is zeroed in odd-derivative multipliers,
  where its sign is ambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as _fft

__all__ = [
    "Grid",
    "PhysicalField",
    "SpectralField",
    "transform_forward",
    "transform_inverse",
    "fractional_laplacian",
    "leray_project",
    "regularized_inverse",
    "gradient",
    "divergence",
    "dealias",
    "advective_term",
    "spectral_inner",
]

MEAN_FREE_RTOL = 1e-13

# scipy FFT worker count; -1 uses every core.  Set to 1 when running several
# solves in separate processes.
FFT_WORKERS = -1


def _fftn(a):
    return _fft.fftn(a, axes=(1, 2, 3), norm="forward", workers=FFT_WORKERS)


def _ifftn(a):
    return _fft.ifftn(a, axes=(1, 2, 3), norm="forward", workers=FFT_WORKERS)


def _rfftn(a):
    return _fft.rfftn(a, axes=(1, 2, 3), norm="forward", workers=FFT_WORKERS)


def _irfftn(a, n):
    return _fft.irfftn(a, s=(n, n, n), axes=(1, 2, 3), norm="forward", workers=FFT_WORKERS)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: n points per dimension on a cube of side box_len.

    Powers of two are the intended resolutions (FFT speed); the hard
    requirements are that n is even and at least 8 so the 2/3-rule mask and
    the Nyquist conventions are well defined.
    """

    n: int
    box_len: float = 2.0 * np.pi

    def __post_init__(self):
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"grid resolution must be even and >= 8, got n={self.n}")
        if not self.box_len > 0:
            raise ValueError(f"box_len must be positive, got {self.box_len}")

    @cached_property
    def spacing(self) -> float:
        return self.box_len / self.n

    @cached_property
    def cell_volume(self) -> float:
        return self.spacing**3

    @cached_property
    def volume(self) -> float:
        return self.box_len**3

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer FFT modes [0, 1, ..., n/2-1, -n/2, ..., -1]; 0 appears once."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).astype(np.int64)

    @cached_property
    def k1d(self) -> np.ndarray:
        return (2.0 * np.pi / self.box_len) * self.modes

    @cached_property
    def k1d_deriv(self) -> np.ndarray:
        """Differentiation wavenumbers: Nyquist entry zeroed."""
        k = self.k1d.copy()
        k[self.n // 2] = 0.0
        return k

    def k_axis(self, axis: int) -> np.ndarray:
        """k values of `axis` reshaped for broadcasting over (n, n, n)."""
        shape = [1, 1, 1]
        shape[axis] = self.n
        return self.k1d.reshape(shape)

    def k_axis_deriv(self, axis: int) -> np.ndarray:
        shape = [1, 1, 1]
        shape[axis] = self.n
        return self.k1d_deriv.reshape(shape)

    @cached_property
    def k_squared(self) -> np.ndarray:
        return (
            self.k_axis(0) ** 2 + self.k_axis(1) ** 2 + self.k_axis(2) ** 2
        )

    @cached_property
    def k_mag(self) -> np.ndarray:
        return np.sqrt(self.k_squared)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: True where all |m_j| <= n/3 (integer comparison)."""

        def keep(axis):
            shape = [1, 1, 1]
            shape[axis] = self.n
            return (3 * np.abs(self.modes) <= self.n).reshape(shape)

        return keep(0) & keep(1) & keep(2)

    # --- half-spectrum layout (real transforms; last axis holds modes 0..n/2)

    @cached_property
    def modes_half(self) -> np.ndarray:
        return np.arange(self.n // 2 + 1, dtype=np.int64)

    def k_axis_deriv_half(self, axis: int) -> np.ndarray:
        """Differentiation wavenumbers for the rfft layout, Nyquist zeroed."""
        if axis < 2:
            shape = [1, 1, 1]
            shape[axis] = self.n
            return self.k1d_deriv.reshape(shape)
        k = (2.0 * np.pi / self.box_len) * self.modes_half.astype(float)
        k[-1] = 0.0
        return k.reshape(1, 1, -1)

    @cached_property
    def dealias_mask_half(self) -> np.ndarray:
        keep01 = 3 * np.abs(self.modes) <= self.n
        keep2 = 3 * self.modes_half <= self.n
        return (
            keep01.reshape(-1, 1, 1) & keep01.reshape(1, -1, 1) & keep2.reshape(1, 1, -1)
        )

    @cached_property
    def x1d(self) -> np.ndarray:
        return self.spacing * np.arange(self.n)

    def mesh(self):
        """Coordinate arrays (x, y, z), each of shape (n, n, n)."""
        return np.meshgrid(self.x1d, self.x1d, self.x1d, indexing="ij")

    @cached_property
    def radius_from_center(self) -> np.ndarray:
        """Distance of every grid point from the box center."""
        c = 0.5 * self.box_len
        x, y, z = self.mesh()
        return np.sqrt((x - c) ** 2 + (y - c) ** 2 + (z - c) ** 2)


def _as_component_stack(grid, arr, dtype, what):
    arr = np.asarray(arr, dtype=dtype)
    n = grid.n
    if arr.shape == (n, n, n):
        arr = arr[np.newaxis]
    if arr.ndim != 4 or arr.shape[1:] != (n, n, n):
        raise ValueError(
            f"{what} must have shape (components, {n}, {n}, {n}), got {arr.shape}"
        )
    if arr.shape[0] not in (1, 3):
        raise ValueError(f"{what} must have 1 or 3 components, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True)
class PhysicalField:
    """Real samples on the collocation grid; scalar (1) or vector (3) valued.

    Fields are value objects: the sample array is frozen at construction and
    every operator returns a new field.
    """

    grid: Grid
    values: np.ndarray  # (components, n, n, n) float64

    def __post_init__(self):
        values = _as_component_stack(self.grid, self.values, np.float64, "values")
        for c in range(values.shape[0]):
            if not np.isfinite(values[c]).all():
                raise ValueError(f"non-finite samples in component {c}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def components(self) -> int:
        return self.values.shape[0]

    @classmethod
    def scalar(cls, grid: Grid, samples) -> "PhysicalField":
        return cls(grid, np.asarray(samples, dtype=np.float64)[np.newaxis])

    @classmethod
    def vector(cls, grid: Grid, vx, vy, vz) -> "PhysicalField":
        return cls(grid, np.stack([vx, vy, vz]).astype(np.float64))

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean magnitude, shape (n, n, n)."""
        if self.components == 1:
            return np.abs(self.values[0])
        return np.sqrt(np.sum(self.values**2, axis=0))


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients on the full wavenumber lattice.

    Coefficients of a real field satisfy Hermitian symmetry,
    coeff(-k) = conj(coeff(k)); all multiplier operators in this module are
    real and even in k and therefore preserve it.  ``hermitian_defect``
    measures the violation for verification purposes.
    """

    grid: Grid
    coeffs: np.ndarray  # (components, n, n, n) complex128

    def __post_init__(self):
        coeffs = _as_component_stack(self.grid, self.coeffs, np.complex128, "coeffs")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def zeros(cls, grid: Grid, components: int = 1) -> "SpectralField":
        return cls(grid, np.zeros((components, grid.n, grid.n, grid.n), complex))

    def mean_coefficients(self) -> np.ndarray:
        return self.coeffs[:, 0, 0, 0].copy()

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max()) if self.coeffs.size else 0.0

    def is_mean_free(self, rtol: float = MEAN_FREE_RTOL) -> bool:
        scale = self.max_abs()
        if scale == 0.0:
            return True
        return bool(np.abs(self.mean_coefficients()).max() <= rtol * scale)

    def hermitian_defect(self) -> float:
        """Max |coeff(-k) - conj(coeff(k))| over the lattice."""
        c = self.coeffs
        rev = c[:, ::-1, ::-1, ::-1]
        rev = np.roll(rev, 1, axis=(1, 2, 3))
        return float(np.abs(rev - np.conj(c)).max())


def _require_same_grid(a, b, what):
    if a.grid != b.grid:
        raise ValueError(f"{what}: fields live on different grids")


def _require_mean_free(v: SpectralField, context: str):
    if not v.is_mean_free():
        raise ValueError(
            f"{context}: input must be mean-free (|mean coefficient| exceeds "
            f"{MEAN_FREE_RTOL:g} of the max coefficient magnitude)"
        )


def transform_forward(f: PhysicalField) -> SpectralField:
    """FFT with the 1/n^3 factor: the k=0 coefficient is the mean of f."""
    return SpectralField(f.grid, _fftn(f.values))


def transform_inverse(v: SpectralField) -> PhysicalField:
    """Inverse FFT back to grid samples.

    Coefficients are taken to satisfy Hermitian symmetry (the SpectralField
    invariant), so the inverse is computed as a real transform of the
    non-redundant half-spectrum.
    """
    half = v.coeffs[..., : v.grid.n // 2 + 1]
    return PhysicalField(v.grid, _irfftn(half, v.grid.n))


def fractional_laplacian(v: SpectralField, s: float) -> SpectralField:
    """Apply the |k|^s multiplier, realizing the s/2 power of -Laplacian.

    The k=0 coefficient maps to 0 for s > 0; for s < 0 the inverse multiplier
    is singular at the zero mode, so the input must be mean-free.  s = 0 is
    the identity.
    """
    if s == 0:
        return v
    if s < 0:
        _require_mean_free(v, "fractional_laplacian with negative exponent")
    kmag = v.grid.k_mag
    with np.errstate(divide="ignore"):
        mult = kmag**s
    mult[0, 0, 0] = 0.0
    return SpectralField(v.grid, v.coeffs * mult)


def leray_project(v: SpectralField) -> SpectralField:
    """Project onto divergence-free fields: delta_jl - k_j k_l / |k|^2.

    Uses the differentiation wavenumbers (Nyquist zeroed) so the projector is
    exactly consistent with `divergence`.  The k=0 mode (a constant,
    trivially solenoidal) passes through unchanged.
    """
    if v.components != 3:
        raise ValueError("leray_project expects a 3-component field")
    grid = v.grid
    kx, ky, kz = (grid.k_axis_deriv(a) for a in range(3))
    k2 = kx**2 + ky**2 + kz**2
    inv_k2 = np.zeros_like(k2)
    nz = k2 > 0
    inv_k2[nz] = 1.0 / k2[nz]
    kd = kx * v.coeffs[0] + ky * v.coeffs[1] + kz * v.coeffs[2]
    q = kd * inv_k2
    out = np.stack(
        [v.coeffs[0] - kx * q, v.coeffs[1] - ky * q, v.coeffs[2] - kz * q]
    )
    return SpectralField(grid, out)


def regularized_inverse(v: SpectralField, epsilon: float, alpha: float) -> SpectralField:
    """Divide by the symbol eps*|k|^2 + |k|^alpha; k=0 maps to 0.

    The symbol vanishes at k=0, so the input must be mean-free and epsilon
    strictly positive.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    # alpha = 2 admitted for the bare operator (plain Laplacian endpoint);
    # the solver itself keeps alpha strictly below 2
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    _require_mean_free(v, "regularized_inverse")
    grid = v.grid
    symbol = epsilon * grid.k_squared + grid.k_mag**alpha
    mult = np.zeros_like(symbol)
    nz = symbol > 0
    mult[nz] = 1.0 / symbol[nz]
    return SpectralField(grid, v.coeffs * mult)


def gradient(v: SpectralField) -> SpectralField:
    """Spectral gradient of a scalar; Nyquist modes are zeroed."""
    if v.components != 1:
        raise ValueError("gradient expects a scalar field")
    grid = v.grid
    c = v.coeffs[0]
    out = np.stack([1j * grid.k_axis_deriv(a) * c for a in range(3)])
    return SpectralField(grid, out)


def divergence(v: SpectralField) -> SpectralField:
    """Spectral divergence of a vector; Nyquist modes are zeroed."""
    if v.components != 3:
        raise ValueError("divergence expects a 3-component field")
    grid = v.grid
    out = sum(1j * grid.k_axis_deriv(a) * v.coeffs[a] for a in range(3))
    return SpectralField(grid, out[np.newaxis])


def dealias(v: SpectralField) -> SpectralField:
    """Zero every mode with any |m_j| > n/3 (the 2/3 rule)."""
    return SpectralField(v.grid, v.coeffs * v.grid.dealias_mask)


def advective_term(b: PhysicalField, v: PhysicalField) -> PhysicalField:
    """Pseudo-spectral (b . grad) v with 2/3-rule dealiasing of the product.

    The derivatives of v are exact spectral derivatives; the pointwise
    product with b is dealiased before returning to grid samples.
    """
    _require_same_grid(b, v, "advective_term")
    if b.components != 3 or v.components != 3:
        raise ValueError("advective_term expects two 3-component fields")
    grid = b.grid
    vh = _rfftn(v.values)
    acc = np.zeros_like(v.values)
    for j in range(3):
        dv_j = _irfftn(1j * grid.k_axis_deriv_half(j) * vh, grid.n)
        np.multiply(b.values[j], dv_j, out=dv_j)
        acc += dv_j
    prod_hat = _rfftn(acc)
    prod_hat *= grid.dealias_mask_half
    return PhysicalField(grid, _irfftn(prod_hat, grid.n))


def spectral_inner(u: SpectralField, v: SpectralField) -> float:
    """L2 inner product evaluated spectrally: V * sum conj(u) v (real part)."""
    _require_same_grid(u, v, "spectral_inner")
    if u.components != v.components:
        raise ValueError("spectral_inner: component count mismatch")
    return float(u.grid.volume * np.sum(np.conj(u.coeffs) * v.coeffs).real)
