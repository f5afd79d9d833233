"""Vorticities, their quadratic sources, the wave/transport splitting and the
half-wave propagator.

Components ``omega^{mn}`` are stored for ``m < n`` only, in the order given by
:func:`pairs`. A bundle holds ``omega`` with shape ``(P, *shape)`` and
``omega_a`` with shape ``(d, P, *shape)``, where ``P = d(d-1)/2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import InconsistentVorticity, SpaceMismatch
from .grid import EULER, LAGRANGE, Grid, SpectralField, forward, inverse

ADMISSIBILITY_TOL = 1e-8


def pairs(d: int) -> list[tuple[int, int]]:
    return [(m, n) for m in range(d) for n in range(m + 1, d)]


def curl_coeffs(grid: Grid, c: np.ndarray) -> np.ndarray:
    """``i (k_m c^n - k_n c^m)`` for ``m < n``; the vector axis sits just before space."""
    ax = c.ndim - grid.dim - 1
    kd = grid.kd
    out = []
    for m, n in pairs(grid.dim):
        cm = np.take(c, m, axis=ax)
        cn = np.take(c, n, axis=ax)
        out.append(1j * (kd[m] * cn - kd[n] * cm))
    return np.stack(out, axis=ax)


def antisymmetric(grid: Grid, om: np.ndarray) -> np.ndarray:
    """Expand stored ``m < n`` components to a full ``(d, d)`` antisymmetric array."""
    d = grid.dim
    ax = om.ndim - grid.dim - 1
    lead = om.shape[:ax]
    full = np.zeros(lead + (d, d) + om.shape[ax + 1 :], dtype=om.dtype)
    for p, (m, n) in enumerate(pairs(d)):
        comp = np.take(om, p, axis=ax)
        idx_mn = (Ellipsis, m, n) + (slice(None),) * grid.dim
        idx_nm = (Ellipsis, n, m) + (slice(None),) * grid.dim
        full[idx_mn] = comp
        full[idx_nm] = -comp
    return full


@dataclass
class VorticityBundle:
    grid: Grid
    omega: np.ndarray
    omega_a: np.ndarray
    space: str = EULER

    def __post_init__(self):
        d = self.grid.dim
        P = d * (d - 1) // 2
        self.omega = np.asarray(self.omega, dtype=complex)
        self.omega_a = np.asarray(self.omega_a, dtype=complex)
        if self.omega.shape != (P,) + self.grid.shape:
            raise ValueError("omega has the wrong shape")
        if self.omega_a.shape != (d, P) + self.grid.shape:
            raise ValueError("omega_a has the wrong shape")

    @property
    def ncomponents(self) -> int:
        return self.omega.shape[0] * (1 + self.grid.dim)

    def stacked(self) -> np.ndarray:
        """``(omega, omega_1, ..., omega_d)`` as a ``(1+d, P, *shape)`` array."""
        return np.concatenate([self.omega[None], self.omega_a])

    @classmethod
    def from_stacked(cls, grid: Grid, S: np.ndarray, space: str = EULER) -> "VorticityBundle":
        return cls(grid, S[0], S[1:], space)

    def field(self) -> SpectralField:
        S = self.stacked()
        return SpectralField(self.grid, S.reshape((-1,) + self.grid.shape), self.space)


@dataclass
class SourceBundle:
    grid: Grid
    f: np.ndarray
    f_b: np.ndarray
    space: str = EULER

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.f[None], self.f_b])


@dataclass
class PiBundle:
    grid: Grid
    pi_plus: np.ndarray   # (P, *shape)
    pi_minus: np.ndarray  # (P, *shape)
    pi_ab: np.ndarray     # (npairs_ab, P, *shape), ordered as pairs(d)
    space: str = LAGRANGE


# --------------------------------------------------------------------------
# curl and its inverse


def curl(state) -> VorticityBundle:
    """Vorticities of ``v`` and of every ``u_a``."""
    g = state.grid
    return VorticityBundle(g, curl_coeffs(g, state.v), curl_coeffs(g, state.u), EULER)


def admissibility_defect(grid: Grid, om: np.ndarray) -> float:
    """Relative size of ``k_l w^{mn} + k_m w^{nl} + k_n w^{lm}`` (zero for curls)."""
    d = grid.dim
    if d == 2:
        return 0.0
    full = antisymmetric(grid, om)
    kd = grid.kd
    worst = 0.0
    scale = max(float(np.max(np.abs(om) * grid.kdmag, initial=0.0)), 1e-300)
    for l in range(d):
        for m in range(l + 1, d):
            for n in range(m + 1, d):
                r = (kd[l] * full[..., m, n, :, :, :] + kd[m] * full[..., n, l, :, :, :]
                     + kd[n] * full[..., l, m, :, :, :])
                worst = max(worst, float(np.max(np.abs(r))) / scale)
    return worst


def velocity_from_vorticity(grid: Grid, om: np.ndarray) -> np.ndarray:
    """``v^n = -i k_m w^{mn} / |k|^2``; vector axis placed before the spatial axes."""
    full = antisymmetric(grid, om)  # (..., d, d, *shape)
    kd = grid.kd
    k2 = grid.kdmag**2
    inv = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
    mdim = full.ndim - grid.dim - 2
    return -1j * np.sum(kd.reshape((grid.dim, 1) + grid.shape) * full, axis=mdim) * inv


def biot_savart(Om: VorticityBundle):
    """Recover ``(v, u)`` coefficients from a vorticity bundle.

    Raises :class:`InconsistentVorticity` when the components are not the curl
    of a periodic vector field.
    """
    g = Om.grid
    for part in (Om.omega, Om.omega_a):
        defect = admissibility_defect(g, part)
        if defect > ADMISSIBILITY_TOL:
            raise InconsistentVorticity(f"closedness defect {defect:.3e}")
    S = Om.stacked()
    mean = float(np.max(np.abs(S[(...,) + (0,) * g.dim])))
    if mean > ADMISSIBILITY_TOL * max(float(np.max(np.abs(S))), 1e-300):
        raise InconsistentVorticity("vorticity has a nonzero mean")
    return velocity_from_vorticity(g, Om.omega), velocity_from_vorticity(g, Om.omega_a)


# --------------------------------------------------------------------------
# quadratic sources


def source_values(grid: Grid, v: np.ndarray, u: np.ndarray):
    """Physical values of the vorticity sources from state coefficients.

    Returns ``(f, f_b)`` with shapes ``(P, *shape)`` and ``(d, P, *shape)``.
    """
    d = grid.dim
    kd = grid.kd
    gv = inverse(grid, 1j * v[:, None] * kd)            # gv[i, j] = d_j v^i
    gu = inverse(grid, 1j * u[:, :, None] * kd)         # gu[a, i, j] = d_j u_a^i
    W = inverse(grid, antisymmetric(grid, curl_coeffs(grid, v)))       # W[m, j]
    Wa = inverse(grid, antisymmetric(grid, curl_coeffs(grid, u)))      # Wa[a, m, j]
    # T[m, n] = omega^{mj} d_j v^n ; Ta[m, n] = omega_a^{mj} d_j v_a^n
    T = np.einsum("mj...,nj...->mn...", W, gv)
    Ta = np.einsum("amj...,anj...->mn...", Wa, gu)
    # S_b[m, n] = d_m v^j d_j v_b^n ; R_b[m, n] = d_m v_b^j d_j v^n
    S = np.einsum("jm...,bnj...->bmn...", gv, gu)
    R = np.einsum("bjm...,nj...->bmn...", gu, gv)
    f, fb = [], []
    for m, n in pairs(d):
        f.append(-T[m, n] + T[n, m] + Ta[m, n] - Ta[n, m])
        fb.append(-(S[:, m, n] - S[:, n, m]) + (R[:, m, n] - R[:, n, m]))
    return np.array(f), np.stack(fb, axis=1)


def vorticity_sources(state, dealias: bool = True) -> SourceBundle:
    """Spectral coefficients of ``f^{mn}`` and ``f_b^{mn}``."""
    g = state.grid
    f, fb = source_values(g, state.v, state.u)
    fh, fbh = forward(g, f), forward(g, fb)
    if dealias:
        fh = np.where(g.dealias_mask, fh, 0.0)
        fbh = np.where(g.dealias_mask, fbh, 0.0)
    return SourceBundle(g, fh, fbh, EULER)


def transport_terms(state, dealias: bool = True) -> np.ndarray:
    """Coefficients of the advection terms of both vorticity equations.

    Entry 0 is ``v.grad omega - v_a.grad omega_a``; entry ``1+b`` is
    ``v.grad omega_b - v_b.grad omega``, with ``v_a = A_a + u_a``.
    """
    g = state.grid
    d = g.dim
    kd = g.kd
    om = curl_coeffs(g, state.v)
    oma = curl_coeffs(g, state.u)
    v = inverse(g, state.v)
    va = inverse(g, state.u) + np.reshape(state.A.T, (d, d) + (1,) * d)
    gom = inverse(g, 1j * om[:, None] * kd)          # (P, j)
    goma = inverse(g, 1j * oma[:, :, None] * kd)     # (a, P, j)
    t0 = np.einsum("j...,pj...->p...", v, gom) - np.einsum("aj...,apj...->p...", va, goma)
    tb = np.einsum("j...,bpj...->bp...", v, goma) - np.einsum("bj...,pj...->bp...", va, gom)
    out = forward(g, np.concatenate([t0[None], tb]))
    if dealias:
        out = np.where(g.dealias_mask, out, 0.0)
    return out


def vorticity_residual(prev, cur, nxt, dt: float, mask=None) -> float:
    """Relative L2 residual of the vorticity equations at ``cur``.

    The time derivative is the centred difference of ``prev`` and ``nxt``;
    every term is restricted to ``mask`` (the solver band) when given.
    """
    dom = (curl(nxt).stacked() - curl(prev).stacked()) / (2 * dt)
    src = vorticity_sources(cur).stacked()
    res = dom + transport_terms(cur) - src
    scale = dom
    if mask is not None:
        res = np.where(mask, res, 0.0)
        scale = np.where(mask, scale, 0.0)
    return float(np.sqrt(np.sum(np.abs(res) ** 2)) / max(np.sqrt(np.sum(np.abs(scale) ** 2)), 1e-300))


# --------------------------------------------------------------------------
# wave / transport splitting


def _khat(grid: Grid) -> np.ndarray:
    k = grid.k
    km = grid.kmag
    return np.where(km > 0, k / np.where(km > 0, km, 1.0), 0.0)


def pi_split(Om: VorticityBundle) -> PiBundle:
    """``pi_pm = omega +- khat.omega_a``, ``pi_ab = khat^a omega_b - khat^b omega_a``."""
    if Om.space != LAGRANGE:
        raise SpaceMismatch("pi splitting acts on Lagrangian vorticities")
    g = Om.grid
    kh = _khat(g)
    proj = np.einsum("a...,ap...->p...", kh, Om.omega_a)
    pab = np.array([kh[a] * Om.omega_a[b] - kh[b] * Om.omega_a[a] for a, b in pairs(g.dim)])
    return PiBundle(g, Om.omega + proj, Om.omega - proj, pab, LAGRANGE)


def pi_merge(Pi: PiBundle) -> VorticityBundle:
    g = Pi.grid
    d = g.dim
    kh = _khat(g)
    full = np.zeros((d, d) + Pi.pi_plus.shape, dtype=complex)
    for idx, (a, b) in enumerate(pairs(d)):
        full[a, b] = Pi.pi_ab[idx]
        full[b, a] = -Pi.pi_ab[idx]
    half = 0.5 * (Pi.pi_plus - Pi.pi_minus)
    oma = np.array([half * kh[a] - np.einsum("b...,bp...->p...", kh, full[a]) for a in range(d)])
    return VorticityBundle(g, 0.5 * (Pi.pi_plus + Pi.pi_minus), oma, Pi.space)


def split_sources(grid: Grid, f: np.ndarray, f_b: np.ndarray):
    """``F_pm = f +- khat^a f_a`` and ``F_ab = khat^a f_b - khat^b f_a``."""
    kh = _khat(grid)
    proj = np.einsum("a...,ap...->p...", kh, f_b)
    fab = np.array([kh[a] * f_b[b] - kh[b] * f_b[a] for a, b in pairs(grid.dim)])
    return f + proj, f - proj, fab


def wave_matrix(k: np.ndarray) -> np.ndarray:
    """Symmetric ``(d+1) x (d+1)`` matrix with first row ``[0, k]``."""
    d = k.size
    M = np.zeros((d + 1, d + 1))
    M[0, 1:] = k
    M[1:, 0] = k
    return M


def half_wave_evolve(grid: Grid, w0: np.ndarray, forcing: np.ndarray | None,
                     times: np.ndarray | None, sign: int, t: float) -> np.ndarray:
    """Solve ``dw/dt = sign * i|k| w + F`` from ``w(0) = w0`` up to time ``t``.

    ``forcing`` holds samples ``F(times[j])`` along its first axis; the
    Duhamel integral uses composite Simpson quadrature over the samples with
    ``times <= t``. ``sign = 0`` gives the pure time integral.
    """
    if sign not in (-1, 0, 1):
        raise ValueError("sign must be -1, 0 or +1")
    k = grid.kmag
    out = np.exp(sign * 1j * t * k) * w0
    if forcing is None:
        return out
    times = np.asarray(times, dtype=float)
    sel = times <= t + 1e-12 * max(1.0, abs(t))
    ts = times[sel]
    if ts.size < 2:
        return out
    if abs(ts[-1] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError("t must coincide with a forcing sample time")
    F = np.asarray(forcing)[sel]
    phase = np.exp(sign * 1j * np.multiply.outer(t - ts, k))
    phase = phase.reshape((ts.size,) + (1,) * (F.ndim - 1 - grid.dim) + grid.shape)
    return out + simpson(phase * F, x=ts, axis=0)


# --------------------------------------------------------------------------
# growth monitor


@dataclass
class GrowthReport:
    constant: float
    lhs: np.ndarray
    integral: np.ndarray


def vorticity_hs_monitor(times, omegas, sup_grad, sup_omega, theta: float) -> GrowthReport:
    """Empirical constant in ``log[Om(t)]_theta - log[Om(0)]_theta <= C int (|grad V| + |Om|)``.

    ``omegas`` are :class:`VorticityBundle` objects; ``[Om]_theta`` combines all
    components in the Euclidean sense.
    """
    t = np.asarray(times, dtype=float)
    vals = []
    for Om in omegas:
        S = Om.stacked()
        g = Om.grid
        kk = np.where(g.kmag > 0, g.kmag, 1.0)
        w = np.where(g.kmag > 0, kk ** (2 * theta), 0.0)
        vals.append(np.sqrt(g.volume * np.sum(w * np.abs(S) ** 2)))
    vals = np.array(vals)
    rate = np.asarray(sup_grad, dtype=float) + np.asarray(sup_omega, dtype=float)
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(t))])
    if vals[0] == 0:
        lhs = np.zeros_like(vals)
    else:
        lhs = np.log(np.where(vals > 0, vals, vals[0])) - np.log(vals[0])
    ok = integral > 0
    C = float(np.max(lhs[ok] / integral[ok], initial=0.0)) if np.any(ok) else 0.0
    return GrowthReport(max(C, 0.0), lhs, integral)
