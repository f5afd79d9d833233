"""Littlewood-Paley blocks and the norm toolkit.

Conventions
-----------
* ``psi0`` equals 1 on ``[0, 1]``, 0 on ``[2, inf)`` and is glued smoothly in
  between with ``exp(-1/t)``. ``phi_n(s) = psi0(s/2^n) - psi0(s/2^(n-1))``.
* Blocks run over ``n_min <= n <= n_max`` where ``2^n_min`` is the largest
  power of two not above the smallest nonzero lattice ``|k|``. Lower blocks
  vanish on the lattice, so the low-pass remainder ``psi_{n_min-1}(D) f``
  holds only the mean.
* ``L^p`` norms use the uniform grid average times ``L^d``.
* For fields with leading component axes every norm returns the maximum over
  components.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridTooLarge, HomogeneousNormOnNonzeroMean
from .grid import Grid, SpectralField, inverse

MEAN_TOL = 1e-10
GAGLIARDO_MAX_POINTS = 64 * 64


def _glue(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)


def psi0(s) -> np.ndarray:
    """Smooth cutoff: 1 on [0,1], 0 on [2,inf), monotone in between."""
    s = np.asarray(s, dtype=float)
    a = _glue(2.0 - s)
    b = _glue(s - 1.0)
    return np.where(s <= 1, 1.0, np.where(s >= 2, 0.0, a / np.where(a + b > 0, a + b, 1.0)))


def psi(n: int, s) -> np.ndarray:
    return psi0(np.asarray(s, dtype=float) * 2.0 ** (-n))


def phi(n: int, s) -> np.ndarray:
    """Dyadic shell profile supported in ``[2^(n-1), 2^(n+1)]``."""
    t = np.asarray(s, dtype=float) * 2.0 ** (-n)
    return psi0(t) - psi0(2 * t)


@dataclass(frozen=True)
class DyadicPartition:
    grid: Grid
    n_min: int
    n_max: int

    @property
    def shells(self) -> range:
        return range(self.n_min, self.n_max + 1)

    def low(self) -> np.ndarray:
        """Low-pass multiplier ``psi_{n_min-1}(|k|)`` on the lattice."""
        return psi(self.n_min - 1, self.grid.kmag)

    def block(self, n: int) -> np.ndarray:
        return phi(n, self.grid.kmag)

    @cached_property
    def blocks(self) -> dict[int, np.ndarray]:
        return {n: self.block(n) for n in self.shells}


def build_partition(grid: Grid) -> DyadicPartition:
    kpos = grid.kmag[grid.kmag > 0]
    n_min = int(np.floor(np.log2(kpos.min()) + 1e-12))
    n_max = int(np.ceil(np.log2(kpos.max()) - 1e-12))
    return DyadicPartition(grid, n_min, n_max)


_PARTITIONS: dict[Grid, DyadicPartition] = {}


def partition_for(grid: Grid) -> DyadicPartition:
    if grid not in _PARTITIONS:
        _PARTITIONS[grid] = build_partition(grid)
    return _PARTITIONS[grid]


@dataclass
class DyadicDecomposition:
    low: SpectralField
    blocks: list[tuple[int, SpectralField]]

    def reconstruct(self) -> SpectralField:
        out = self.low.coeffs.copy()
        for _, b in self.blocks:
            out = out + b.coeffs
        return self.low.with_coeffs(out)


def decompose(f: SpectralField, partition: DyadicPartition | None = None) -> DyadicDecomposition:
    part = partition or partition_for(f.grid)
    low = f.with_coeffs(part.low() * f.coeffs)
    blocks = [(n, f.with_coeffs(m * f.coeffs)) for n, m in part.blocks.items()]
    return DyadicDecomposition(low, blocks)


# --------------------------------------------------------------------------
# norm requests


@dataclass(frozen=True)
class Lp:
    p: float = 2.0


@dataclass(frozen=True)
class SobolevH:
    s: float


@dataclass(frozen=True)
class HomSobolev:
    theta: float


@dataclass(frozen=True)
class Besov:
    r: float
    p: float = np.inf
    q: float = np.inf


@dataclass(frozen=True)
class HomBesov:
    r: float
    p: float = np.inf
    q: float = np.inf


@dataclass(frozen=True)
class HolderDot:
    r: float


@dataclass(frozen=True)
class GagliardoSeminorm:
    r: float
    p: float = 2.0


NormRequest = Lp | SobolevH | HomSobolev | Besov | HomBesov | HolderDot | GagliardoSeminorm


def _check_exponent(name: str, p: float):
    if not (p >= 1):
        raise ValueError(f"{name} must lie in [1, inf], got {p}")


def _lead_axes(grid: Grid, arr: np.ndarray) -> tuple[int, ...]:
    return tuple(range(arr.ndim - grid.dim, arr.ndim))


def lp_values(grid: Grid, values: np.ndarray, p: float) -> np.ndarray:
    """``L^p`` norms of physical arrays over the trailing spatial axes."""
    ax = _lead_axes(grid, values)
    a = np.abs(values)
    if np.isinf(p):
        return np.max(a, axis=ax)
    if p == 2:
        return np.sqrt(np.mean(a * a, axis=ax) * grid.volume)
    return (np.mean(a**p, axis=ax) * grid.volume) ** (1.0 / p)


def _sequence_norm(terms: np.ndarray, q: float) -> np.ndarray:
    if np.isinf(q):
        return np.max(terms, axis=0)
    return np.sum(terms**q, axis=0) ** (1.0 / q)


def _require_mean_zero(f: SpectralField):
    m = np.max(np.abs(f.mean()), initial=0.0)
    scale = np.sqrt(np.sum(np.abs(f.coeffs) ** 2))
    if m > MEAN_TOL * max(scale, 1e-300) and m > 1e-14:
        raise HomogeneousNormOnNonzeroMean(f"field mean {m:.3e} is not zero")


def block_lp_norms(f: SpectralField, p: float, shells=None) -> tuple[list[int], np.ndarray]:
    """``||phi_n(D) f||_p`` for every shell, shape ``(nshells, *lead)``."""
    part = partition_for(f.grid)
    shells = list(part.shells if shells is None else shells)
    real = f.real
    out = [lp_values(f.grid, inverse(f.grid, part.block(n) * f.coeffs, real=real), p)
           for n in shells]
    return shells, np.array(out)


def norm_components(f: SpectralField, req) -> np.ndarray:
    """Norm of every component separately (shape ``f.lead``)."""
    g = f.grid
    c = f.coeffs
    ax = _lead_axes(g, c)
    if isinstance(req, Lp):
        _check_exponent("p", req.p)
        return lp_values(g, f.values(), req.p)
    if isinstance(req, SobolevH):
        w = (1.0 + g.kmag**2) ** req.s
        return np.sqrt(g.volume * np.sum(w * np.abs(c) ** 2, axis=ax))
    if isinstance(req, HomSobolev):
        _require_mean_zero(f)
        k = np.where(g.kmag > 0, g.kmag, 1.0)
        w = np.where(g.kmag > 0, k ** (2 * req.theta), 0.0)
        return np.sqrt(g.volume * np.sum(w * np.abs(c) ** 2, axis=ax))
    if isinstance(req, HolderDot):
        return norm_components(f, HomBesov(req.r, np.inf, np.inf))
    if isinstance(req, HomBesov):
        _check_exponent("p", req.p)
        _check_exponent("q", req.q)
        _require_mean_zero(f)
        shells, b = block_lp_norms(f, req.p)
        weights = np.reshape(2.0 ** (req.r * np.array(shells)), (-1,) + (1,) * (b.ndim - 1))
        return _sequence_norm(weights * b, req.q)
    if isinstance(req, Besov):
        _check_exponent("p", req.p)
        _check_exponent("q", req.q)
        part = partition_for(g)
        low = lp_values(g, inverse(g, psi0(g.kmag) * c, real=f.real), req.p)
        shells = [n for n in part.shells if n >= 0] or [0]
        _, b = block_lp_norms(f, req.p, shells)
        weights = np.reshape(2.0 ** (req.r * np.array(shells)), (-1,) + (1,) * (b.ndim - 1))
        return low + _sequence_norm(weights * b, req.q)
    if isinstance(req, GagliardoSeminorm):
        vals = f.values()
        flat = vals.reshape((-1,) + g.shape)
        out = np.array([gagliardo_seminorm_values(g, v, req.r, req.p) for v in flat])
        return out.reshape(f.lead)
    raise TypeError(f"unknown norm request {req!r}")


def norm(f: SpectralField, req) -> float:
    """Norm of a field; for multi-component fields the maximum over components."""
    return float(np.max(norm_components(f, req)))


# --------------------------------------------------------------------------
# independent real-space oracles


def _periodised_kernel(grid: Grid, exponent: float, images: int = 3) -> np.ndarray:
    """``sum_m |h + L m|^(-exponent)`` for grid offsets ``h``, with a tail estimate."""
    L = grid.period
    h = grid.x.copy()
    h = (h + L / 2) % L - L / 2
    kern = np.zeros(grid.shape)
    rng = range(-images, images + 1)
    for m in np.array(np.meshgrid(*([list(rng)] * grid.dim), indexing="ij")).reshape(grid.dim, -1).T:
        shift = np.reshape(m * L, (-1,) + (1,) * grid.dim)
        r = np.sqrt(np.sum((h + shift) ** 2, axis=0))
        with np.errstate(divide="ignore"):
            kern += np.where(r > 0, r ** (-exponent), 0.0)
    # remaining images, approximated by the integral outside the summed box
    radius = (images + 0.5) * L
    sphere = 2 * np.pi if grid.dim == 2 else 4 * np.pi
    tail = sphere * radius ** (grid.dim - exponent) / (exponent - grid.dim) / L**grid.dim
    kern[(0,) * grid.dim] = 0.0
    return kern + tail * (kern > 0)


def gagliardo_seminorm_values(grid: Grid, values: np.ndarray, r: float, p: float,
                              max_points: int = GAGLIARDO_MAX_POINTS) -> float:
    """Periodic Gagliardo seminorm by direct double quadrature.

    Computes ``( int_T int_R^d |f(x+h)-f(x)|^p / |h|^(rp+d) dh dx )^(1/p)``
    with the outer integral over one period cell and the inner one folded onto
    grid offsets through a periodised kernel. The diagonal cell ``h = 0`` is
    omitted.
    """
    if not (0 < r < 1):
        raise ValueError("Gagliardo seminorm needs 0 < r < 1")
    if not (1 <= p < np.inf):
        raise ValueError("Gagliardo seminorm needs 1 <= p < inf")
    if grid.npoints > max_points:
        raise GridTooLarge(f"{grid.npoints} points exceeds cap {max_points}")
    kern = _periodised_kernel(grid, r * p + grid.dim)
    cell = grid.spacing**grid.dim
    total = 0.0
    for offset in np.ndindex(*grid.shape):
        w = kern[offset]
        if w == 0.0:
            continue
        shifted = np.roll(values, tuple(-o for o in offset), axis=tuple(range(grid.dim)))
        total += w * np.sum(np.abs(shifted - values) ** p)
    return float((total * cell * cell) ** (1.0 / p))


def gagliardo_seminorm(f: SpectralField, r: float, p: float = 2.0) -> float:
    return norm(f, GagliardoSeminorm(r, p))


def holder_two_point(f: SpectralField, r: float) -> float:
    """``max |f(x)-f(y)| / |x-y|^r`` over grid pairs, torus distance."""
    g = f.grid
    vals = np.asarray(f.values())
    L = g.period
    h = (g.x + L / 2) % L - L / 2
    dist = np.sqrt(np.sum(h**2, axis=0))
    best = 0.0
    for offset in np.ndindex(*g.shape):
        d = dist[offset]
        if d == 0:
            continue
        shifted = np.roll(vals, tuple(-o for o in offset), axis=tuple(range(g.dim)))
        best = max(best, float(np.max(np.abs(shifted - vals))) / d**r)
    return best


def sup_norms(V) -> tuple[float, float]:
    """``(||V||_inf, ||grad V||_inf)``, maxima over all components and points.

    Accepts any :class:`SpectralField` (vector or batched) or an object with a
    ``fields()`` method returning one (a solver state).
    """
    f = V.fields() if hasattr(V, "fields") else V
    g = f.grid
    vals = inverse(g, f.coeffs)
    grads = inverse(g, 1j * np.expand_dims(f.coeffs, f.coeffs.ndim - g.dim) * g.kd)
    return float(np.max(np.abs(vals), initial=0.0)), float(np.max(np.abs(grads), initial=0.0))
