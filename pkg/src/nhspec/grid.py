"""Periodic grids, Fourier coefficient storage and the spectral transforms.

Coefficients follow the normalisation ``c_k = (1/N) sum_x f(x) exp(-i k.x)``
with ``N = n**dim``, so that ``f(x) = sum_k c_k exp(i k.x)`` and Parseval
reads ``sum_k |c_k|**2 * L**dim = integral |f|**2``.

Arrays are kept in FFT-native index order. Any number of leading "component"
axes may precede the ``dim`` spatial axes; every transform acts on the
trailing axes only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import InvalidDimension, OddResolution

THREADS_ENV = "NHSPEC_THREADS"
DEBUG_ENV = "NHSPEC_DEBUG"

EULER = "euler"
LAGRANGE = "lagrange"
SPACE_TAGS = (EULER, LAGRANGE)


def fft_workers() -> int:
    """Number of FFT worker threads, read from ``NHSPEC_THREADS``."""
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def debug_enabled() -> bool:
    return os.environ.get(DEBUG_ENV, "") not in ("", "0", "false", "False")


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the torus ``[0, period)**dim``.

    Parameters
    ----------
    dim : int
        Spatial dimension, 2 or 3.
    n : int
        Points per axis, a power of two no smaller than 8.
    period : float
        Side length ``L`` of the periodic box.
    """

    dim: int
    n: int
    period: float = 2 * np.pi

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InvalidDimension(f"dimension must be 2 or 3, got {self.dim}")
        n = self.n
        if n % 2:
            raise OddResolution(f"resolution must be even, got {n}")
        if n < 8 or n & (n - 1):
            raise OddResolution(f"resolution must be a power of two >= 8, got {n}")
        if not self.period > 0:
            raise ValueError("period must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    @property
    def npoints(self) -> int:
        return self.n**self.dim

    @property
    def spacing(self) -> float:
        return self.period / self.n

    @property
    def volume(self) -> float:
        return self.period**self.dim

    @property
    def k0(self) -> float:
        """Fundamental wavenumber ``2 pi / L``."""
        return 2 * np.pi / self.period

    @cached_property
    def index(self) -> np.ndarray:
        """Integer lattice indices ``-n/2 .. n/2-1`` in FFT order, shape (dim, *shape)."""
        m = np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)
        return np.stack(np.meshgrid(*([m] * self.dim), indexing="ij"))

    @cached_property
    def k(self) -> np.ndarray:
        """Lattice wavenumbers, Nyquist entries kept at ``-n/2``."""
        return self.k0 * self.index

    @cached_property
    def kd(self) -> np.ndarray:
        """Wavenumbers used by odd symbols (derivatives), Nyquist entries zeroed.

        The Nyquist mode is its own conjugate partner, so an odd symbol cannot
        map a real field to a real field there.
        """
        kd = self.k.copy()
        kd[self.index == -self.n // 2] = 0.0
        return kd

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(np.sum(self.k**2, axis=0))

    @cached_property
    def kdmag(self) -> np.ndarray:
        return np.sqrt(np.sum(self.kd**2, axis=0))

    @property
    def kmax(self) -> float:
        """Largest resolvable |k| on the lattice."""
        return self.k0 * (self.n / 2) * np.sqrt(self.dim)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep modes with every ``|m_j| <= n/3``."""
        return np.all(np.abs(self.index) <= self.n / 3, axis=0)

    @property
    def dealias_kmax(self) -> float:
        """Largest per-axis wavenumber kept by the two-thirds rule."""
        return self.k0 * (self.n // 3)

    @cached_property
    def x(self) -> np.ndarray:
        """Physical coordinates, shape (dim, *shape)."""
        x1 = np.arange(self.n) * self.spacing
        return np.stack(np.meshgrid(*([x1] * self.dim), indexing="ij"))

    def zeros(self, *lead: int, dtype=complex) -> np.ndarray:
        return np.zeros(tuple(lead) + self.shape, dtype=dtype)


def make_grid(dim: int, n: int, period: float = 2 * np.pi) -> Grid:
    """Build a validated periodic grid."""
    return Grid(dim=int(dim), n=int(n), period=float(period))


# --------------------------------------------------------------------------
# raw transforms on arrays


def forward(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Physical values to Fourier coefficients (trailing ``dim`` axes)."""
    return sfft.fftn(values, axes=grid.axes, workers=fft_workers()) / grid.npoints


def inverse(grid: Grid, coeffs: np.ndarray, real: bool = True) -> np.ndarray:
    """Fourier coefficients to physical values.

    With ``real=True`` the imaginary round-off is dropped.
    """
    out = sfft.ifftn(coeffs, axes=grid.axes, workers=fft_workers()) * grid.npoints
    return out.real if real else out


def reflect(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Return ``c[-k]`` for every lattice ``k``."""
    out = np.flip(coeffs, axis=grid.axes)
    return np.roll(out, 1, axis=grid.axes)


def conjugate_symmetry_defect(grid: Grid, coeffs: np.ndarray) -> float:
    """``max |c[-k] - conj(c[k])|``; zero exactly when the field is real."""
    return float(np.max(np.abs(reflect(grid, coeffs) - np.conj(coeffs)), initial=0.0))


def pad(grid: Grid, coeffs: np.ndarray, m: int) -> np.ndarray:
    """Zero-pad coefficients onto an ``m``-point grid (``m >= n``).

    The Nyquist entry is split evenly between ``+n/2`` and ``-n/2`` so that
    real fields stay real.
    """
    n = grid.n
    if m < n:
        raise ValueError("pad target must be at least n")
    if m == n:
        return coeffs.copy()
    h = n // 2
    out = coeffs
    for ax in grid.axes:
        shape = list(out.shape)
        shape[ax] = m
        wide = np.zeros(shape, dtype=complex)
        lo = np.take(out, np.arange(h), axis=ax)
        hi = np.take(out, np.arange(h + 1, n), axis=ax)
        nyq = 0.5 * np.take(out, [h], axis=ax)
        _put(wide, np.arange(h), lo, ax)
        _put(wide, np.arange(m - h + 1, m), hi, ax)
        _put(wide, [m - h], nyq, ax)
        _put(wide, [h], nyq, ax)
        out = wide
    return out


def truncate(grid: Grid, coeffs: np.ndarray, m: int) -> np.ndarray:
    """Restrict ``m``-point coefficients to ``grid``, folding ``+n/2`` onto ``-n/2``.

    This is what sampling the fine field on the coarse grid would alias to
    for frequencies up to ``n/2``; higher frequencies are discarded.
    """
    n = grid.n
    if m == n:
        return coeffs.copy()
    h = n // 2
    out = coeffs
    for ax in grid.axes:
        keep = np.take(out, np.r_[0:h, m - h : m], axis=ax)
        plus = np.take(out, [h], axis=ax)
        idx = [slice(None)] * keep.ndim
        idx[ax] = slice(h, h + 1)
        keep[tuple(idx)] += plus
        out = keep
    return out


def _put(arr, index, values, axis):
    idx = [slice(None)] * arr.ndim
    idx[axis] = index
    arr[tuple(idx)] = values


def refine(grid: Grid, m: int) -> Grid:
    return Grid(grid.dim, m, grid.period)


def exact_product(grid: Grid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coefficients of ``a*b`` without aliasing, truncated back to ``grid``.

    Both factors are evaluated on a grid twice as fine, where the product of
    two trigonometric polynomials resolved on ``grid`` is represented exactly.
    """
    fine = refine(grid, 2 * grid.n)
    pa = inverse(fine, pad(grid, a, fine.n), real=False)
    pb = inverse(fine, pad(grid, b, fine.n), real=False)
    return truncate(grid, forward(fine, pa * pb), fine.n)


# --------------------------------------------------------------------------
# field containers


@dataclass
class SpectralField:
    """Fourier coefficients of one or more scalar fields on a grid.

    ``coeffs`` has shape ``(*lead, *grid.shape)``; leading axes index
    components.
    """

    grid: Grid
    coeffs: np.ndarray
    space: str = EULER
    real: bool = True

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape[self.coeffs.ndim - self.grid.dim :] != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not end in {self.grid.shape}"
            )
        if self.space not in SPACE_TAGS:
            raise ValueError(f"unknown space tag {self.space!r}")

    @property
    def lead(self) -> tuple[int, ...]:
        return self.coeffs.shape[: self.coeffs.ndim - self.grid.dim]

    @classmethod
    def from_values(cls, grid: Grid, values, space: str = EULER) -> "SpectralField":
        values = np.asarray(values)
        return cls(grid, forward(grid, values), space, real=not np.iscomplexobj(values))

    def values(self) -> np.ndarray:
        return inverse(self.grid, self.coeffs, real=self.real)

    def mean(self) -> np.ndarray:
        return self.coeffs[(...,) + (0,) * self.grid.dim]

    def with_coeffs(self, coeffs: np.ndarray, real: bool | None = None) -> "SpectralField":
        return type(self)(self.grid, coeffs, self.space, self.real if real is None else real)

    def __getitem__(self, item) -> "SpectralField":
        c = self.coeffs[item]
        return SpectralField(self.grid, c, self.space, self.real)

    def __add__(self, other):
        return self.with_coeffs(self.coeffs + _coeffs(other))

    def __sub__(self, other):
        return self.with_coeffs(self.coeffs - _coeffs(other))

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__


def _coeffs(obj):
    return obj.coeffs if isinstance(obj, SpectralField) else obj


class VectorField(SpectralField):
    """A ``dim``-component field, ``coeffs`` of shape ``(dim, *grid.shape)``."""

    def __post_init__(self):
        super().__post_init__()
        if self.lead != (self.grid.dim,):
            raise ValueError(f"vector field needs leading shape ({self.grid.dim},)")

    @property
    def components(self) -> list[SpectralField]:
        return [SpectralField(self.grid, c, self.space, self.real) for c in self.coeffs]


def to_physical(f: SpectralField) -> np.ndarray:
    return f.values()


def to_spectral(grid: Grid, values, space: str = EULER) -> SpectralField:
    return SpectralField.from_values(grid, values, space)
