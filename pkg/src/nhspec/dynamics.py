"""Eulerian incompressible neo-Hookean dynamics on the torus.

Unknowns are the velocity ``v`` and the deformation perturbations ``u_a``
(``a = 1..d``), with deformation columns ``v_a = A_a + u_a`` for a constant
unimodular matrix ``A``. The mollified system advanced here is

    dv/dt   = -P rho_eps [ v.grad v - u_b.grad u_b - A_b.grad u_b ]
    du_a/dt = -rho_eps  [ v.grad u_a - u_a.grad v - A_a.grad v ]

with quadratic terms formed in physical space and dealiased by the
two-thirds rule. Coefficients are stacked as ``W = (v, u_1, ..., u_d)``, a
``(d + d*d, *grid.shape)`` array; ``u[a, i]`` is component ``i`` of ``u_a``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .corpus import normalise_l2, random_solenoidal
from .deformation import ShearSequence, check_unimodular, random_shears
from .errors import CflViolation, NonFinite
from .grid import EULER, Grid, SpectralField, VectorField, debug_enabled, forward, inverse
from .grid import conjugate_symmetry_defect, exact_product
from .lp import HomBesov, SobolevH, norm_components
from .operators import div_coeffs, leray_coeffs, mollifier_mask
from .vorticity import curl_coeffs

BLOWUP_LIMIT = 1e6


@dataclass
class StateBundle:
    grid: Grid
    v: np.ndarray
    u: np.ndarray
    A: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        d = self.grid.dim
        self.v = np.asarray(self.v, dtype=complex)
        self.u = np.asarray(self.u, dtype=complex)
        self.A = np.asarray(self.A, dtype=float)
        if self.v.shape != (d,) + self.grid.shape or self.u.shape != (d, d) + self.grid.shape:
            raise ValueError("state arrays do not match the grid")
        if self.A.shape != (d, d):
            raise ValueError("A must be a d x d matrix")

    @classmethod
    def zero(cls, grid: Grid, A=None) -> "StateBundle":
        d = grid.dim
        return cls(grid, grid.zeros(d), grid.zeros(d, d), np.eye(d) if A is None else A)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def stacked(self) -> np.ndarray:
        d = self.dim
        return np.concatenate([self.v, self.u.reshape((d * d,) + self.grid.shape)])

    def with_stacked(self, W: np.ndarray, t: float | None = None) -> "StateBundle":
        d = self.dim
        return StateBundle(self.grid, W[:d], W[d:].reshape((d, d) + self.grid.shape),
                           self.A, self.t if t is None else t)

    def fields(self) -> SpectralField:
        return SpectralField(self.grid, self.stacked(), EULER)

    @property
    def velocity(self) -> VectorField:
        return VectorField(self.grid, self.v, EULER)

    def deformation(self, a: int) -> VectorField:
        return VectorField(self.grid, self.u[a], EULER)

    def copy(self) -> "StateBundle":
        return StateBundle(self.grid, self.v.copy(), self.u.copy(), self.A.copy(), self.t)


@dataclass
class EvolutionConfig:
    dt: float
    t_end: float
    eps: float | None = None
    dealias: bool = True
    diagnostics_every: int = 1
    c_cfl: float = 1.0
    hs: tuple[float, ...] = (1.0, 2.0)
    besov: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.diagnostics_every < 1:
            raise ValueError("diagnostics_every must be at least 1")

    @property
    def nsteps(self) -> int:
        return int(round(self.t_end / self.dt))


def band_mask(grid: Grid, eps: float | None, dealias: bool = True) -> np.ndarray:
    m = mollifier_mask(grid, eps)
    if dealias:
        m = m & grid.dealias_mask
    m = m.copy()
    m[(0,) * grid.dim] = False
    return m


# --------------------------------------------------------------------------
# right-hand side


def rhs_stacked(grid: Grid, W: np.ndarray, A: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Time derivative of the stacked coefficients."""
    d = grid.dim
    kd = grid.kd
    v_hat = W[:d]
    u_hat = W[d:].reshape((d, d) + grid.shape)

    vals = inverse(grid, W)
    grads = inverse(grid, 1j * W[:, None] * kd)  # grads[c, k] = d_k W_c
    v = vals[:d]
    u = vals[d:].reshape((d, d) + grid.shape)
    gv = grads[:d]  # gv[i, k] = d_k v^i
    gu = grads[d:].reshape((d, d, d) + grid.shape)  # gu[a, i, k] = d_k u_a^i

    nv = np.einsum("j...,ij...->i...", v, gv) - np.einsum("bk...,bik...->i...", u, gu)
    nu = np.einsum("k...,aik...->ai...", v, gu) - np.einsum("ak...,ik...->ai...", u, gv)
    N = forward(grid, np.concatenate([nv, nu.reshape((d * d,) + grid.shape)]))

    # constant-coefficient coupling through A
    ik = 1j * kd
    lv = -np.einsum("kb,k...,bi...->i...", A, ik, u_hat)
    lu = -np.einsum("ka,k...,i...->ai...", A, ik, v_hat)
    N[:d] += lv
    N[d:] += lu.reshape((d * d,) + grid.shape)

    N = -np.where(mask, N, 0.0)
    N[:d] = leray_coeffs(grid, N[:d])
    return N


def rhs(state: StateBundle, eps: float | None = None, dealias: bool = True) -> StateBundle:
    """Time-derivative bundle of the mollified system."""
    W = rhs_stacked(state.grid, state.stacked(), state.A, band_mask(state.grid, eps, dealias))
    return state.with_stacked(W)


# --------------------------------------------------------------------------
# time stepping


def _rk4(f: Callable[[np.ndarray], np.ndarray], W: np.ndarray, dt: float):
    k1 = f(W)
    k2 = f(W + 0.5 * dt * k1)
    k3 = f(W + 0.5 * dt * k2)
    k4 = f(W + dt * k3)
    return W + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), k1


def cfl_bound(state: StateBundle, config: EvolutionConfig) -> float:
    g = state.grid
    kmax = g.dealias_kmax if config.dealias else g.k0 * g.n / 2
    if config.eps is not None:
        kmax = min(kmax, 1.0 / config.eps)
    vmax = float(np.max(np.abs(inverse(g, state.v)), initial=0.0))
    umax = float(np.max(np.abs(inverse(g, state.u)), initial=0.0))
    speed = vmax + umax + float(np.linalg.norm(state.A, 2))
    return config.c_cfl / (kmax * speed) if speed > 0 else np.inf


def check_finite(state: StateBundle) -> None:
    W = state.stacked()
    if not np.all(np.isfinite(W)):
        raise NonFinite(f"non-finite coefficients at t = {state.t:.6g}", state)
    sup = float(np.max(np.abs(inverse(state.grid, W)), initial=0.0))
    if sup > BLOWUP_LIMIT:
        raise NonFinite(f"sup norm {sup:.3e} exceeds {BLOWUP_LIMIT:g} at t = {state.t:.6g}", state)


def _debug_checks(state: StateBundle):
    g = state.grid
    W = state.stacked()
    sym = conjugate_symmetry_defect(g, W)
    div = max_div_residual(state)
    scale = max(1.0, float(np.max(np.abs(W), initial=0.0)))
    assert sym < 1e-12 * scale, f"conjugate symmetry lost ({sym:.2e})"
    assert div < 1e-10 * scale, f"divergence residual {div:.2e}"


def step(state: StateBundle, config: EvolutionConfig) -> StateBundle:
    """One classical RK4 step of size ``config.dt``."""
    bound = cfl_bound(state, config)
    if config.dt > bound:
        warnings.warn(f"dt = {config.dt:g} exceeds CFL bound {bound:.3g}", CflViolation, stacklevel=2)
    mask = band_mask(state.grid, config.eps, config.dealias)
    W, _ = _rk4(lambda w: rhs_stacked(state.grid, w, state.A, mask), state.stacked(), config.dt)
    new = state.with_stacked(W, state.t + config.dt)
    check_finite(new)
    if debug_enabled():
        _debug_checks(new)
    return new


@dataclass
class Trajectory:
    final: StateBundle
    records: list["DiagnosticsRecord"]
    snapshots: list[StateBundle] = field(default_factory=list)


def integrate(state: StateBundle, config: EvolutionConfig,
              observer: Callable[[StateBundle], None] | None = None,
              keep_snapshots: bool = False, sink: list | None = None) -> Trajectory:
    """Advance to ``config.t_end`` recording diagnostics every few steps.

    ``observer`` is called on the initial state and after every step.
    Records are appended to ``sink`` when given, so a caller still holds
    the partial history if the run aborts.
    """
    if config.dt > cfl_bound(state, config):
        warnings.warn("initial dt exceeds the CFL bound", CflViolation, stacklevel=2)
    mask = band_mask(state.grid, config.eps, config.dealias)
    grid = state.grid
    records = sink if sink is not None else []
    records.append(monitor(state, config.hs, config.besov))
    snaps = [state] if keep_snapshots else []
    if observer:
        observer(state)
    W = state.stacked()
    t0 = state.t
    f = lambda w: rhs_stacked(grid, w, state.A, mask)  # noqa: E731
    cur = state
    with warnings.catch_warnings():
        warnings.simplefilter("once", CflViolation)
        for n in range(1, config.nsteps + 1):
            W, _ = _rk4(f, W, config.dt)
            cur = state.with_stacked(W, t0 + n * config.dt)
            check_finite(cur)
            if debug_enabled():
                _debug_checks(cur)
            if observer:
                observer(cur)
            if keep_snapshots:
                snaps.append(cur)
            if n % config.diagnostics_every == 0 or n == config.nsteps:
                records.append(monitor(cur, config.hs, config.besov))
    return Trajectory(cur, records, snaps)


# --------------------------------------------------------------------------
# monitoring


@dataclass
class CompatibilityReport:
    q_ab_norm: float
    div_residuals: float
    energy: float


@dataclass
class DiagnosticsRecord:
    t: float
    energy: float
    q_ab: float
    div_res: float
    sup_V: float
    sup_gradV: float
    sup_vorticity: float
    hs: dict[float, float] = field(default_factory=dict)
    besov: dict[tuple[float, float], float] = field(default_factory=dict)

    @property
    def e0(self) -> float:
        """Square root of the energy."""
        return float(np.sqrt(self.energy))


def energy(state: StateBundle) -> float:
    """``int (|v|^2 + sum_a |u_a|^2) / 2``."""
    return 0.5 * state.grid.volume * float(np.sum(np.abs(state.stacked()) ** 2))


def max_div_residual(state: StateBundle) -> float:
    g = state.grid
    dv = div_coeffs(g, state.v)
    du = div_coeffs(g, state.u)
    return float(max(np.max(np.abs(dv), initial=0.0), np.max(np.abs(du), initial=0.0)))


def compatibility_defect(state: StateBundle) -> np.ndarray:
    """Physical values of ``q^i_ab`` for ``a < b``, shape ``(npairs, d, *shape)``."""
    g = state.grid
    d = g.dim
    A = state.A
    va = inverse(g, state.u) + np.reshape(A.T, (d, d) + (1,) * d)  # va[a, i]
    gva = inverse(g, 1j * state.u[:, :, None] * g.kd)  # gva[a, i, k] = d_k v_a^i
    out = []
    for a in range(d):
        for b in range(a + 1, d):
            q = np.einsum("k...,ik...->i...", va[a], gva[b]) - np.einsum("k...,ik...->i...", va[b], gva[a])
            out.append(q)
    return np.array(out)


def compatibility(state: StateBundle) -> CompatibilityReport:
    g = state.grid
    q = compatibility_defect(state)
    qn = float(np.sqrt(g.volume * np.mean(np.sum(q**2, axis=(0, 1))))) if q.size else 0.0
    return CompatibilityReport(qn, max_div_residual(state), energy(state))


def vorticity_field(state: StateBundle) -> SpectralField:
    """All vorticity components ``(omega, omega_1, ..., omega_d)`` stacked."""
    om = curl_coeffs(state.grid, state.v)
    oma = curl_coeffs(state.grid, state.u)
    return SpectralField(state.grid, np.concatenate([om, oma.reshape((-1,) + state.grid.shape)]))


def monitor(state: StateBundle, hs: Iterable[float] = (1.0, 2.0),
            besov: Iterable[tuple[float, float]] = ()) -> DiagnosticsRecord:
    g = state.grid
    comp = compatibility(state)
    W = state.stacked()
    vals = inverse(g, W)
    grads = inverse(g, 1j * W[:, None] * g.kd)
    omega = vorticity_field(state)
    om_vals = inverse(g, omega.coeffs)
    fields = state.fields()
    hs_vals = {}
    for s in hs:
        per = norm_components(fields, SobolevH(s))
        hs_vals[float(s)] = float(np.sqrt(np.sum(per**2)))
    besov_vals = {}
    for r, p in besov:
        besov_vals[(float(r), float(p))] = float(np.max(norm_components(omega, HomBesov(r, p, p))))
    return DiagnosticsRecord(
        t=state.t,
        energy=comp.energy,
        q_ab=comp.q_ab_norm,
        div_res=comp.div_residuals,
        sup_V=float(np.max(np.abs(vals), initial=0.0)),
        sup_gradV=float(np.max(np.abs(grads), initial=0.0)),
        sup_vorticity=float(np.max(np.abs(om_vals), initial=0.0)),
        hs=hs_vals,
        besov=besov_vals,
    )


def gronwall_constant(records: list[DiagnosticsRecord], s: float) -> float:
    """Smallest ``C`` with ``log H^s(t)^2 - log H^s(0)^2 <= C int_0^t ||grad V||_inf``."""
    t = np.array([r.t for r in records])
    h = np.array([r.hs[s] for r in records])
    g = np.array([r.sup_gradV for r in records])
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(t))])
    if h[0] == 0:
        return 0.0
    growth = 2 * (np.log(h) - np.log(h[0]))
    ok = integral > 0
    return float(np.max(growth[ok] / integral[ok], initial=0.0))


# --------------------------------------------------------------------------
# pressure


def recover_pressure(state: StateBundle) -> SpectralField:
    """Pressure ``p`` with ``-Lap p = d_k v^i d_i v^k - d_k u_a^i d_i u_a^k``.

    Products are formed without aliasing; ``p`` has zero mean.
    """
    g = state.grid
    d = g.dim
    kd = g.kd
    k2 = g.kdmag**2
    src = g.zeros()
    for i in range(d):
        for k in range(d):
            tij = exact_product(g, state.v[i], state.v[k])
            for a in range(d):
                tij = tij - exact_product(g, state.u[a, i], state.u[a, k])
            src = src + kd[i] * kd[k] * tij
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(k2 > 0, -src / np.where(k2 > 0, k2, 1.0), 0.0)
    return SpectralField(g, p, EULER)


# --------------------------------------------------------------------------
# initial data


@dataclass
class InitialDataSpec:
    """Recipe for initial data.

    velocity : ``zero`` | ``random`` | ``taylor_green`` | ``mode``
    deformation : ``none`` | ``random`` | ``shears``
        ``random`` draws independent solenoidal ``u_a`` (generally not
        compatible); ``shears`` builds ``u_a`` from a random volume-preserving
        shear sequence, which is compatible by construction.
    """

    velocity: str = "zero"
    velocity_amplitude: float = 1.0
    deformation: str = "none"
    deformation_amplitude: float = 0.1
    seed: int = 0
    slope: float = 2.5
    kmax: float | None = None
    mode: tuple[int, ...] = (1, 0)
    direction: tuple[float, ...] | None = None
    eps: float | None = None
    A: tuple[tuple[float, ...], ...] | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "InitialDataSpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown initial-data keys: {sorted(extra)}")
        data = dict(data)
        for key in ("mode", "direction"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        if data.get("A") is not None:
            data["A"] = tuple(tuple(float(x) for x in row) for row in data["A"])
        return cls(**data)


def _velocity(grid: Grid, spec: InitialDataSpec, rng) -> np.ndarray:
    d = grid.dim
    x = grid.x
    k0 = grid.k0
    a = spec.velocity_amplitude
    if spec.velocity == "zero":
        return grid.zeros(d)
    if spec.velocity == "random":
        c = random_solenoidal(grid, rng, slope=spec.slope, kmax=spec.kmax)
        return normalise_l2(grid, c, a)
    if spec.velocity == "taylor_green":
        if d == 2:
            vals = a * np.array([np.sin(k0 * x[0]) * np.cos(k0 * x[1]),
                                 -np.cos(k0 * x[0]) * np.sin(k0 * x[1])])
        else:
            vals = a * np.array([np.sin(k0 * x[0]) * np.cos(k0 * x[1]) * np.cos(k0 * x[2]),
                                 -np.cos(k0 * x[0]) * np.sin(k0 * x[1]) * np.cos(k0 * x[2]),
                                 np.zeros(grid.shape)])
        return forward(grid, vals)
    if spec.velocity == "mode":
        m = np.asarray(spec.mode, dtype=float)
        if m.shape != (d,):
            raise ValueError(f"mode must have {d} entries")
        e = _transverse(m, spec.direction)
        phase = k0 * np.tensordot(m, x, axes=(0, 0))
        vals = a * e.reshape((d,) + (1,) * d) * np.sin(phase)
        return forward(grid, vals)
    raise ValueError(f"unknown velocity kind {spec.velocity!r}")


def _transverse(m: np.ndarray, direction) -> np.ndarray:
    d = m.size
    if direction is not None:
        e = np.asarray(direction, dtype=float)
    else:
        e = np.zeros(d)
        j = int(np.argmin(np.abs(m)))
        e[j] = 1.0
    e = e - m * (e @ m) / (m @ m)
    return e / np.linalg.norm(e)


def _deformation(grid: Grid, spec: InitialDataSpec, rng, A: np.ndarray) -> np.ndarray:
    d = grid.dim
    if spec.deformation == "none":
        return grid.zeros(d, d)
    if spec.deformation == "random":
        c = random_solenoidal(grid, rng, (d,), slope=spec.slope, kmax=spec.kmax)
        return normalise_l2(grid, c, spec.deformation_amplitude)
    if spec.deformation == "shears":
        seq = random_shears(grid, rng, spec.deformation_amplitude, A=A)
        return deformation_from_shears(grid, seq)
    raise ValueError(f"unknown deformation kind {spec.deformation!r}")


def deformation_from_shears(grid: Grid, seq: ShearSequence) -> np.ndarray:
    """Eulerian ``u_a = dx/dxi^a - A_a`` coefficients, shape ``(d, d, *shape)``."""
    F = seq.eulerian_gradient(grid)  # F[i, a]
    check_unimodular(F)
    d = grid.dim
    u = np.swapaxes(F, 0, 1) - np.reshape(seq.A.T, (d, d) + (1,) * d)
    return forward(grid, u)


def finalize(grid: Grid, v: np.ndarray, u: np.ndarray, A: np.ndarray,
             eps: float | None = None, dealias: bool = True) -> StateBundle:
    """Leray-project, band-limit and remove means."""
    mask = band_mask(grid, eps, dealias)
    v = leray_coeffs(grid, np.where(mask, v, 0.0))
    u = leray_coeffs(grid, np.where(mask, u, 0.0))
    return StateBundle(grid, v, u, A)


def make_initial_data(grid: Grid, spec: InitialDataSpec | dict | None = None) -> StateBundle:
    if spec is None:
        spec = InitialDataSpec()
    elif isinstance(spec, dict):
        spec = InitialDataSpec.from_dict(spec)
    d = grid.dim
    A = np.eye(d) if spec.A is None else np.asarray(spec.A, dtype=float)
    if A.shape != (d, d) or abs(np.linalg.det(A) - 1) > 1e-12:
        from .errors import InadmissibleParameters
        raise InadmissibleParameters("A must be a d x d matrix with determinant one")
    rng = np.random.default_rng(spec.seed)
    v = _velocity(grid, spec, rng)
    u = _deformation(grid, spec, rng, A)
    return finalize(grid, v, u, A, spec.eps)


def with_eps(state: StateBundle, eps: float | None) -> StateBundle:
    """Mollified copy of a state."""
    mask = band_mask(state.grid, eps, dealias=False)
    return state.with_stacked(np.where(mask, state.stacked(), 0.0), state.t)


__all__ = [
    "StateBundle", "EvolutionConfig", "CompatibilityReport", "DiagnosticsRecord",
    "InitialDataSpec", "Trajectory", "rhs", "rhs_stacked", "step", "integrate",
    "make_initial_data", "recover_pressure", "monitor", "energy", "compatibility",
    "gronwall_constant", "band_mask", "with_eps", "finalize", "deformation_from_shears",
]
