"""Fourier multipliers: derivatives, Riesz transforms, fractional powers,
Leray projection, sharp mollifier and two-thirds dealiasing.

Odd symbols (derivatives, Riesz, the off-diagonal part of Leray) use the
Nyquist-free wavenumbers ``grid.kd`` so that real fields stay real. Even
symbols (powers of ``|k|``, mollifier) use the full lattice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NegativePowerAtZeroMode
from .grid import Grid, SpectralField, VectorField

ZERO_MODE_TOL = 1e-12


@dataclass(frozen=True)
class MultiplierOp:
    """A Fourier multiplier.

    ``symbol(grid)`` returns the symbol on the lattice; the value at ``k = 0``
    is overwritten by ``zero_value``.
    """

    symbol: Callable[[Grid], np.ndarray]
    label: str
    zero_value: complex = 0.0

    def on(self, grid: Grid) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.asarray(self.symbol(grid), dtype=complex)
        s = np.broadcast_to(s, s.shape[: s.ndim - grid.dim] + grid.shape).copy()
        s[(...,) + (0,) * grid.dim] = self.zero_value
        if not np.all(np.isfinite(s)):
            raise ValueError(f"symbol {self.label} is not finite on the lattice")
        return s


def apply_multiplier(op: MultiplierOp, f: SpectralField) -> SpectralField:
    return f.with_coeffs(op.on(f.grid) * f.coeffs)


def _safe_div(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return out


# --------------------------------------------------------------------------
# coefficient-level kernels shared by the solver modules


def grad_coeffs(grid: Grid, c: np.ndarray) -> np.ndarray:
    """``d_k c`` stacked on a new axis placed just before the spatial axes."""
    return 1j * np.expand_dims(c, axis=c.ndim - grid.dim) * grid.kd


def div_coeffs(grid: Grid, c: np.ndarray) -> np.ndarray:
    """Divergence over the axis just before the spatial axes."""
    return np.sum(1j * grid.kd * c, axis=c.ndim - grid.dim - 1)


def leray_coeffs(grid: Grid, c: np.ndarray) -> np.ndarray:
    kd = grid.kd
    k2 = grid.kdmag**2
    ax = c.ndim - grid.dim - 1
    kc = np.sum(kd * c, axis=ax, keepdims=True)
    return c - kd * _safe_div(kc, k2)


def mollifier_mask(grid: Grid, eps: float | None) -> np.ndarray:
    if eps is None:
        return np.ones(grid.shape, dtype=bool)
    if eps <= 0:
        raise ValueError("mollification parameter must be positive")
    return grid.kmag <= 1.0 / eps


# --------------------------------------------------------------------------
# public operators


def derivative(j: int, f: SpectralField) -> SpectralField:
    """Partial derivative along axis ``j`` (0-based)."""
    return f.with_coeffs(1j * f.grid.kd[j] * f.coeffs)


def riesz_symbol(grid: Grid, j: int, convention: str = "plain") -> np.ndarray:
    """Symbol ``k_j/|k|`` (``plain``) or ``-i k_j/|k|`` (``standard``)."""
    s = _safe_div(grid.kd[j], grid.kdmag)
    if convention == "plain":
        return s
    if convention == "standard":
        return -1j * s
    raise ValueError(f"unknown Riesz convention {convention!r}")


def riesz_transform(j: int, f: SpectralField, convention: str = "plain") -> SpectralField:
    """Riesz transform along axis ``j``.

    The ``plain`` convention has real symbol ``k_j/|k|`` and maps a plane wave
    ``exp(i k.x)`` to ``(k_j/|k|) exp(i k.x)``; it turns real fields into
    purely imaginary ones. The ``standard`` convention multiplies by ``-i``,
    which is the real-to-real singular integral with kernel
    ``Gamma((d+1)/2) pi^{-(d+1)/2} x_j / |x|^{d+1}``.
    """
    out = f.with_coeffs(riesz_symbol(f.grid, j, convention) * f.coeffs,
                        real=f.real and convention == "standard")
    return out


def _check_zero_mode(f: SpectralField, what: str):
    m = np.max(np.abs(f.mean()), initial=0.0)
    scale = max(np.max(np.abs(f.coeffs), initial=0.0), 1.0)
    if m > ZERO_MODE_TOL * scale:
        raise NegativePowerAtZeroMode(f"{what} applied to a field with mean {m:.3e}")


def fractional_power(s: float, f: SpectralField, kind: str = "D") -> SpectralField:
    """Apply ``D^s`` (symbol ``|k|^s``) or ``J^s`` (symbol ``(1+|k|^2)^{s/2}``).

    ``D^s`` with ``s < 0`` needs a mean-zero input; the zero mode of the output
    is zero for ``s != 0``.
    """
    g = f.grid
    if kind == "D":
        if s < 0:
            _check_zero_mode(f, f"D^{s}")
        if s == 0:
            sym = np.ones(g.shape)
        else:
            k = np.where(g.kmag > 0, g.kmag, 1.0)
            sym = np.where(g.kmag > 0, k**s, 0.0)
    elif kind == "J":
        sym = (1.0 + g.kmag**2) ** (s / 2)
    else:
        raise ValueError(f"kind must be 'D' or 'J', got {kind!r}")
    return f.with_coeffs(sym * f.coeffs)


def leray_project(v: VectorField) -> VectorField:
    """Project onto divergence-free fields, ``delta_ij - k_i k_j / |k|^2``."""
    return v.with_coeffs(leray_coeffs(v.grid, v.coeffs))


def divergence(v: VectorField) -> SpectralField:
    return SpectralField(v.grid, div_coeffs(v.grid, v.coeffs), v.space, v.real)


def gradient(f: SpectralField) -> SpectralField:
    return f.with_coeffs(grad_coeffs(f.grid, f.coeffs))


def mollify(eps: float, f: SpectralField) -> SpectralField:
    """Sharp Fourier cutoff keeping ``|k| <= 1/eps``."""
    return f.with_coeffs(np.where(mollifier_mask(f.grid, eps), f.coeffs, 0.0))


def dealias(f: SpectralField) -> SpectralField:
    return f.with_coeffs(np.where(f.grid.dealias_mask, f.coeffs, 0.0))


def riesz_op(j: int, convention: str = "plain") -> MultiplierOp:
    return MultiplierOp(lambda g: riesz_symbol(g, j, convention), f"R_{j}[{convention}]")


def power_op(s: float, kind: str = "D") -> MultiplierOp:
    if kind == "D":
        return MultiplierOp(lambda g: g.kmag**s, f"D^{s}", 1.0 if s == 0 else 0.0)
    return MultiplierOp(lambda g: (1 + g.kmag**2) ** (s / 2), f"J^{s}", 1.0)
