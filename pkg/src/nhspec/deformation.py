"""Volume-preserving periodic deformations built from shears.

A shear moves one coordinate by a periodic function of the others,
``y[axis] += g(y_other)``. Its Jacobian is ``I + e_axis (x) grad g`` with
determinant exactly one, and its inverse is explicit. Composing shears gives
nontrivial incompressible deformations whose Eulerian deformation gradients
can be evaluated on a grid without any interpolation or root finding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DeterminantNotOne
from .grid import Grid

DET_TOL = 1e-6


@dataclass(frozen=True)
class Shear:
    """``y[axis] += sum_j amp_j * sin(k0 * m_j . y + phase_j)`` with ``m_j[axis] = 0``."""

    axis: int
    modes: tuple[tuple[int, ...], ...]
    amplitudes: tuple[float, ...]
    phases: tuple[float, ...]

    def _arg(self, y: np.ndarray, k0: float):
        m = np.asarray(self.modes, dtype=float)  # (J, d)
        return k0 * np.tensordot(m, y, axes=(1, 0)) + np.reshape(self.phases, (-1,) + (1,) * (y.ndim - 1))

    def offset(self, y: np.ndarray, k0: float) -> np.ndarray:
        amp = np.reshape(self.amplitudes, (-1,) + (1,) * (y.ndim - 1))
        return np.sum(amp * np.sin(self._arg(y, k0)), axis=0)

    def grad(self, y: np.ndarray, k0: float) -> np.ndarray:
        amp = np.reshape(self.amplitudes, (-1,) + (1,) * (y.ndim - 1))
        c = amp * np.cos(self._arg(y, k0))
        m = np.asarray(self.modes, dtype=float)
        return k0 * np.tensordot(m.T, c, axes=(1, 0))  # (d, ...)

    def apply(self, y: np.ndarray, k0: float, sign: float = 1.0) -> np.ndarray:
        out = y.copy()
        out[self.axis] = y[self.axis] + sign * self.offset(y, k0)
        return out

    def jacobian(self, y: np.ndarray, k0: float) -> np.ndarray:
        d = y.shape[0]
        J = np.broadcast_to(np.eye(d).reshape((d, d) + (1,) * (y.ndim - 1)), (d, d) + y.shape[1:]).copy()
        J[self.axis] += self.grad(y, k0)
        return J


@dataclass(frozen=True)
class ShearSequence:
    """Deformation ``x = S_K(...S_1(A xi))`` for an integer unimodular ``A``."""

    shears: tuple[Shear, ...]
    A: np.ndarray = field(default_factory=lambda: np.eye(2))

    def forward(self, xi: np.ndarray, k0: float) -> tuple[np.ndarray, np.ndarray]:
        """Positions ``x(xi)`` and Jacobian ``dx/dxi`` (shape (d, d, ...))."""
        d = xi.shape[0]
        y = np.tensordot(self.A, xi, axes=(1, 0))
        F = np.broadcast_to(self.A.reshape((d, d) + (1,) * (xi.ndim - 1)), (d, d) + xi.shape[1:]).copy()
        for s in self.shears:
            J = s.jacobian(y, k0)
            F = np.einsum("ij...,jk...->ik...", J, F)
            y = s.apply(y, k0)
        return y, F

    def inverse(self, x: np.ndarray, k0: float) -> np.ndarray:
        y = x.copy()
        for s in reversed(self.shears):
            y = s.apply(y, k0, sign=-1.0)
        return np.tensordot(np.linalg.inv(self.A), y, axes=(1, 0))

    def eulerian_gradient(self, grid: Grid) -> np.ndarray:
        """``dx/dxi`` evaluated at ``xi(x)`` on the Eulerian grid."""
        xi = self.inverse(grid.x, grid.k0)
        _, F = self.forward(xi, grid.k0)
        return F

    def displacement(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        """Periodic displacement ``x(xi) - A xi`` and ``dx/dxi`` on the grid of ``xi``."""
        x, F = self.forward(grid.x, grid.k0)
        disp = x - np.tensordot(self.A, grid.x, axes=(1, 0))
        return disp, F


def random_shears(grid: Grid, rng: np.random.Generator, amplitude: float = 0.1,
                  modes_per_shear: int = 2, max_mode: int = 2, A=None) -> ShearSequence:
    """One shear per axis with a few random low modes in the transverse directions."""
    d = grid.dim
    shears = []
    for axis in range(d):
        modes, amps, phases = [], [], []
        for _ in range(modes_per_shear):
            m = rng.integers(-max_mode, max_mode + 1, size=d)
            m[axis] = 0
            if not np.any(m):
                m[(axis + 1) % d] = 1
            modes.append(tuple(int(x) for x in m))
            amps.append(float(amplitude * rng.uniform(0.5, 1.0) / np.linalg.norm(m)))
            phases.append(float(rng.uniform(0, 2 * np.pi)))
        shears.append(Shear(axis, tuple(modes), tuple(amps), tuple(phases)))
    A = np.eye(d) if A is None else np.asarray(A, dtype=float)
    return ShearSequence(tuple(shears), A)


def check_unimodular(F: np.ndarray, tol: float = DET_TOL) -> float:
    """Raise :class:`DeterminantNotOne` unless ``det F = 1`` pointwise within ``tol``."""
    det = np.linalg.det(np.moveaxis(F, (0, 1), (-2, -1)))
    err = float(np.max(np.abs(det - 1.0)))
    if err > tol:
        raise DeterminantNotOne(f"max |det F - 1| = {err:.3e}")
    return err
