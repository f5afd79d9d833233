"""Seeded random test fields.

The default amplitude spectrum is ``|f_hat(k)| ~ |k|^(-2.5)`` with uniformly
random phases, restricted to a band ``|k| <= kmax``. Fields are real and have
zero mean.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid, forward, inverse, reflect
from .operators import leray_coeffs

DEFAULT_SLOPE = 2.5


def _hermitian(grid: Grid, c: np.ndarray) -> np.ndarray:
    """Symmetrise so that the represented field is real."""
    c = 0.5 * (c + np.conj(reflect(grid, c)))
    c[(...,) + (0,) * grid.dim] = 0.0
    # Nyquist planes carry no information for odd operators; drop them
    nyq = np.any(grid.index == -grid.n // 2, axis=0)
    c[..., nyq] = 0.0
    return c


def random_coeffs(
    grid: Grid,
    rng: np.random.Generator,
    lead: tuple[int, ...] = (),
    slope: float = DEFAULT_SLOPE,
    kmax: float | None = None,
    kmin: float = 0.0,
) -> np.ndarray:
    """Coefficients of real mean-zero random fields with a power-law spectrum."""
    if kmax is None:
        kmax = grid.dealias_kmax
    k = grid.kmag
    band = (k > 0) & (k <= kmax) & (k >= kmin)
    amp = np.where(band, np.where(k > 0, k, 1.0) ** (-slope), 0.0)
    phase = rng.uniform(0, 2 * np.pi, size=tuple(lead) + grid.shape)
    return _hermitian(grid, amp * np.exp(1j * phase))


def random_solenoidal(grid: Grid, rng: np.random.Generator, lead: tuple[int, ...] = (),
                      **kw) -> np.ndarray:
    """Divergence-free random vector field(s), shape ``(*lead, dim, *shape)``."""
    c = random_coeffs(grid, rng, tuple(lead) + (grid.dim,), **kw)
    return leray_coeffs(grid, c)


def normalise_l2(grid: Grid, c: np.ndarray, target: float = 1.0) -> np.ndarray:
    """Rescale so that the L2 norm over all components equals ``target``."""
    norm = np.sqrt(grid.volume * np.sum(np.abs(c) ** 2))
    return c * (target / norm) if norm > 0 else c


def gaussian_window(grid: Grid, width: float, centre=None) -> np.ndarray:
    """Periodised-by-truncation Gaussian ``exp(-|x-c|^2 / (2 width^2))``."""
    if centre is None:
        centre = np.full(grid.dim, grid.period / 2)
    d = grid.x - np.reshape(centre, (-1,) + (1,) * grid.dim)
    d = (d + grid.period / 2) % grid.period - grid.period / 2
    return np.exp(-np.sum(d**2, axis=0) / (2 * width**2))


def localized_coeffs(grid: Grid, rng: np.random.Generator, width: float,
                     kmax: float, lead: tuple[int, ...] = (), slope: float = 0.0,
                     kmin: float = 0.0) -> np.ndarray:
    """Random band-limited field multiplied by a Gaussian window, re-band-limited.

    Used where the torus has to stand in for free space: the field is
    negligible near the boundary of the box.
    """
    base = random_coeffs(grid, rng, lead, slope=slope, kmax=kmax, kmin=kmin)
    vals = inverse(grid, base) * gaussian_window(grid, width)
    c = forward(grid, vals)
    c = np.where(grid.kmag <= kmax, c, 0.0)
    return _hermitian(grid, c)
