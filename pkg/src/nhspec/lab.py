"""Numerical checks of the functional inequalities behind the a priori estimates.

Every check evaluates both sides of an inequality on a seeded corpus and
reports ``lhs / rhs``. Constants hidden in ``<~`` are never asserted; the
reports are judged by finiteness and by stability under grid refinement,
time-window doubling or dilation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad, trapezoid

from .corpus import localized_coeffs, random_coeffs, random_solenoidal
from .errors import InadmissibleParameters
from .grid import Grid, SpectralField, exact_product, fft_workers, inverse, make_grid, truncate
from .lp import HomBesov, HomSobolev, norm
from .vorticity import curl_coeffs

INF = math.inf


# --------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class Params:
    d: int
    r: float
    p: float
    theta: float
    s: float
    time_exponent: float        # Strichartz exponent 4p/((d-1)(p-2))
    gamma1: float
    gamma2: float
    h: float | None             # r - 3/p when d = 3
    grad_exponent: float        # power of |grad V|_inf integrated in time
    besov_exponent: float       # power of the vorticity Besov norm integrated in time
    s0: float
    s1: float
    kappa: float

    def to_dict(self) -> dict:
        return {k: (None if v is None else (str(v) if isinstance(v, float) and math.isinf(v) else v))
                for k, v in asdict(self).items()}


def thresholds(d: int) -> tuple[float, float, float]:
    """``(s0, s1, kappa)``: existence threshold, continuity threshold, Holder index."""
    if d == 2:
        kappa = (math.sqrt(65.0) - 7.0) / 8.0
        return 7.0 / 4.0, 7.0 / 4.0 + kappa, kappa
    if d == 3:
        return 2.0, 1.0 + math.sqrt(1.5), math.sqrt(1.5) - 1.0
    raise InadmissibleParameters("d must be 2 or 3")


def gamma1(d: int, r: float, p: float) -> float:
    dp = 0.0 if math.isinf(p) else d / p
    spread = 0.5 * d if math.isinf(p) else d * (p - 2) / (2 * p)
    return (r - dp) / (r + 1 + spread)


def gamma2(d: int, r: float, p: float) -> float:
    dp = 0.0 if math.isinf(p) else d / p
    spread = 0.5 * d if math.isinf(p) else d * (p - 2) / (2 * p)
    return (r + 1 - dp) / (r + 1 + spread)


def strichartz_theta(d: int, r: float, p: float) -> float:
    frac = 1.0 if math.isinf(p) else (p - 2) / p
    return r + (d + 1) / 4 * frac


def param_check(d: int, r: float, p: float | None = None, theta: float | None = None,
                s: float | None = None, windows=("strichartz", "interpolation")) -> Params:
    """Derive the dependent exponents and validate the admissibility windows.

    ``windows`` selects which constraints are enforced: ``strichartz`` (the
    dispersive estimate) and/or ``interpolation`` (the multiplicative
    ``L^inf`` bounds and the a priori exponents).
    """
    s0, s1, kappa = thresholds(d)
    p = (INF if d == 2 else None) if p is None else float(p)
    if p is None:
        raise InadmissibleParameters("d=3 needs an explicit integrability p")
    if not p > 2:
        raise InadmissibleParameters(f"p must exceed 2 (got {p})")
    th = strichartz_theta(d, r, p)
    if theta is not None and abs(theta - th) > 1e-12:
        raise InadmissibleParameters(f"theta must equal r + (d+1)(p-2)/(4p) = {th}")
    if s is not None and abs(s - (1 + th)) > 1e-12:
        raise InadmissibleParameters(f"s must equal 1 + theta = {1 + th}")
    if "strichartz" in windows and d >= 3 and math.isinf(p):
        raise InadmissibleParameters("Strichartz window: d=3 needs p < 2(d-1)/(d-3) = inf")
    h = None
    if "interpolation" in windows:
        if not 0 < r < 1:
            raise InadmissibleParameters(f"interpolation window: 0 < r < 1 (got r={r})")
        if d == 2 and not 0 <= th <= 1:
            raise InadmissibleParameters(f"interpolation window: d=2 needs 0 <= theta <= 1 (theta={th})")
        if d == 3:
            h = r - 3 / p
            if not h > 0:
                raise InadmissibleParameters(f"interpolation window: d=3 needs r > 3/p (r={r}, p={p})")
            if not th > 0.5:
                raise InadmissibleParameters("interpolation window: d=3 needs theta > 1/2")
    elif d == 3:
        h = r - 3 / p
    q_time = 4 / (d - 1) if math.isinf(p) else 4 * p / ((d - 1) * (p - 2))
    g1 = gamma1(d, r, p)
    if d == 2:
        grad_exp, besov_exp = q_time, q_time * (1 - g1)
    else:
        grad_exp, besov_exp = q_time / (1 - g1), q_time
    return Params(d, float(r), p, th, 1 + th, q_time, g1, gamma2(d, r, p), h,
                  grad_exp, besov_exp, s0, s1, kappa)


# --------------------------------------------------------------------------
# reports


@dataclass
class RatioReport:
    id: str
    params: dict
    samples: list[dict]
    max_ratio: float
    refinement_slope: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"id": self.id, "params": self.params, "samples": self.samples,
               "max_ratio": self.max_ratio, "refinement_slope": self.refinement_slope}
        out.update(self.extra)
        return out

    @property
    def finite(self) -> bool:
        vals = [self.max_ratio] + [s["ratio"] for s in self.samples]
        return all(math.isfinite(v) for v in vals)


def ratio(lhs: float, rhs: float) -> float:
    """``lhs / rhs`` with ``0 / 0 = 0``."""
    if lhs == 0 and rhs == 0:
        return 0.0
    return lhs / rhs


def _parallel(fn, seeds):
    workers = fft_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(fn, seeds))
    else:
        out = [fn(s) for s in seeds]
    return sorted(out, key=lambda row: row["seed"])


def _band_restrict(coarse: Grid, fine: Grid, c: np.ndarray) -> np.ndarray:
    out = truncate(coarse, c, fine.n)
    return np.where(coarse.kmag <= coarse.dealias_kmax, out, 0.0)


def _refinement_slope(coarse: list[dict], fine: list[dict]) -> float:
    a = max(s["ratio"] for s in coarse)
    b = max(s["ratio"] for s in fine)
    if a == 0 and b == 0:
        return 0.0
    return abs(math.log(b / a))


# --------------------------------------------------------------------------
# multiplicative L^inf bounds


@dataclass(frozen=True)
class InterpolationCase:
    """``lhs <~ |v|_2^a * (vorticity norm)^b``."""

    id: str
    d: int
    lhs: str            # "grad" or "sup"
    vorticity: str      # "besov" or "sobolev"
    a: Fraction
    b: Fraction


def _frac(x: float) -> Fraction:
    return Fraction(str(x)) if not math.isinf(x) else Fraction(0)


def interpolation_case(case_id: str, r: float, p: float | None = None,
                       theta: float | None = None) -> tuple[InterpolationCase, Params]:
    """Exponents of one of ``x-1 .. x-3`` (d=2) or ``z-1 .. z-3`` (d=3), as exact fractions."""
    d = {"x": 2, "z": 3}.get(case_id[:1])
    if d is None or case_id[1:] not in ("-1", "-2", "-3"):
        raise ValueError(f"unknown interpolation case {case_id!r}")
    prm = param_check(d, r, p, windows=("interpolation",))
    R = _frac(r)
    inv_p = Fraction(0) if math.isinf(prm.p) else 1 / _frac(prm.p)
    den = R + 1 + Fraction(d, 2) - d * inv_p
    kind = case_id[-1]
    if kind == "1":
        a = (R - d * inv_p) / den
        return InterpolationCase(case_id, d, "grad", "besov", a, 1 - a), prm
    if kind == "2":
        a = (R + 1 - d * inv_p) / den
        return InterpolationCase(case_id, d, "sup", "besov", a, 1 - a), prm
    th = _frac(prm.theta if theta is None else theta)
    a = (th + 1 - Fraction(d, 2)) / (th + 1)
    return InterpolationCase(case_id, d, "sup", "sobolev", a, 1 - a), prm


def scaling_dimensions(case: InterpolationCase, r: float, p: float, theta: float) -> dict:
    """Dilation exponents ``f(x) -> f(lambda x)`` in free space, as fractions.

    Returns the exponent of each norm and whether ``lhs = a*l2 + b*vort``
    holds exactly; amplitude homogeneity is ``a + b = 1``.
    """
    d = case.d
    inv_p = Fraction(0) if math.isinf(p) else 1 / _frac(p)
    lhs = Fraction(1) if case.lhs == "grad" else Fraction(0)
    l2 = Fraction(-d, 2)
    if case.vorticity == "besov":
        vort = 1 + _frac(r) - d * inv_p
    else:
        vort = 1 + _frac(theta) - Fraction(d, 2)
    rhs = case.a * l2 + case.b * vort
    return {"lhs": lhs, "l2": l2, "vorticity": vort, "rhs": rhs,
            "dilation_exact": lhs == rhs, "amplitude_exact": case.a + case.b == 1}


def interpolation_terms(grid: Grid, v_hat: np.ndarray, case: InterpolationCase,
                        r: float, p: float, theta: float) -> tuple[float, float]:
    """``(lhs, rhs)`` for a solenoidal field given by coefficients ``(d, *shape)``."""
    if case.lhs == "grad":
        grads = inverse(grid, 1j * v_hat[:, None] * grid.kd)
        om = inverse(grid, curl_coeffs(grid, v_hat))
        lhs = float(max(np.max(np.abs(grads)), np.max(np.abs(om))))
    else:
        lhs = float(np.max(np.abs(inverse(grid, v_hat))))
    l2 = float(np.sqrt(grid.volume * np.sum(np.abs(v_hat) ** 2)))
    om = SpectralField(grid, curl_coeffs(grid, v_hat))
    if case.vorticity == "besov":
        vn = norm(om, HomBesov(r, p, p))
    else:
        vn = norm(om, HomSobolev(theta))
    rhs = l2 ** float(case.a) * vn ** float(case.b)
    return lhs, rhs


def check_riesz_interpolation(case_id: str, r: float, p: float | None = None, theta: float | None = None,
                              n: int = 128, samples: int = 50, seed: int = 0, slope: float = 2.5,
                              refine: bool = True) -> RatioReport:
    """Ratio ``lhs / rhs`` of a multiplicative ``L^inf`` bound on random solenoidal fields.

    With ``refine`` each field is drawn on the doubled grid (spectrum up to
    its dealiasing radius) and restricted to the base grid, so the refined
    sample carries genuinely new high modes.
    """
    case, prm = interpolation_case(case_id, r, p, theta)
    th = prm.theta if theta is None else theta
    coarse = make_grid(case.d, n)
    fine = make_grid(case.d, 2 * n)

    def one(sd):
        rng = np.random.default_rng(sd)
        c_f = random_solenoidal(fine, rng, slope=slope)
        c_c = _band_restrict(coarse, fine, c_f)
        lhs, rhs = interpolation_terms(coarse, c_c, case, r, prm.p, th)
        row = {"seed": sd, "lhs": lhs, "rhs": rhs, "ratio": ratio(lhs, rhs)}
        if refine:
            lf, rf = interpolation_terms(fine, c_f, case, r, prm.p, th)
            row["fine"] = {"lhs": lf, "rhs": rf, "ratio": ratio(lf, rf)}
        return row

    rows = _parallel(one, [seed + i for i in range(samples)])
    base = [{k: row[k] for k in ("seed", "lhs", "rhs", "ratio")} for row in rows]
    slope_ = None
    extra = {}
    if refine:
        fine_rows = [dict(seed=row["seed"], **row["fine"]) for row in rows]
        slope_ = _refinement_slope(base, fine_rows)
        extra["refined"] = {"n": 2 * n, "max_ratio": max(s["ratio"] for s in fine_rows)}
    dims = scaling_dimensions(case, r, prm.p, th)
    extra["exponents"] = {"l2": str(case.a), "vorticity": str(case.b)}
    extra["homogeneity"] = {"dilation_exact": dims["dilation_exact"],
                            "amplitude_exact": dims["amplitude_exact"]}
    params = prm.to_dict() | {"n": n, "slope": slope, "theta_used": th}
    return RatioReport(case_id, params, base, max(s["ratio"] for s in base), slope_, extra)


def dilation_probe(case_id: str, r: float, p: float | None = None, theta: float | None = None,
                   lambdas=(1, 2, 4), n: int | None = None, period: float | None = None,
                   width: float | None = None) -> dict:
    """Ratios for ``v(lambda x)`` of a localized solenoidal field on a large box.

    The box stands in for free space, so the ratio should not depend on
    ``lambda`` beyond discretisation effects.
    """
    case, prm = interpolation_case(case_id, r, p, theta)
    th = prm.theta if theta is None else theta
    d = case.d
    n = (256 if d == 2 else 64) if n is None else n
    period = (32.0 if d == 2 else 24.0) if period is None else period
    width = (3.0 if d == 2 else 2.5) if width is None else width
    g = make_grid(d, n, period)
    centre = np.full(d, period / 2)
    out = []
    for lam in lambdas:
        y = lam * (g.x - centre.reshape((d,) + (1,) * d)) / width
        rho2 = np.sum(y**2, axis=0)
        gauss = np.exp(-rho2 / 2)
        # solenoidal by construction: v = curl of a localized potential
        if d == 2:
            psi = gauss * (1 + 0.5 * y[0] + y[0] * y[1] / 3)
            pot = SpectralField.from_values(g, psi).coeffs
            v_hat = np.stack([1j * g.kd[1] * pot, -1j * g.kd[0] * pot])
        else:
            pots = np.stack([gauss * (1 + 0.5 * y[1]), gauss * y[0] * y[2] / 3, gauss * (0.3 + y[1] * y[2] / 4)])
            pot = SpectralField.from_values(g, pots).coeffs
            kd = g.kd
            v_hat = 1j * np.stack([kd[1] * pot[2] - kd[2] * pot[1],
                                   kd[2] * pot[0] - kd[0] * pot[2],
                                   kd[0] * pot[1] - kd[1] * pot[0]])
        v_hat[(slice(None),) + (0,) * d] = 0.0
        lhs, rhs = interpolation_terms(g, v_hat, case, r, prm.p, th)
        out.append({"lambda": lam, "lhs": lhs, "rhs": rhs, "ratio": ratio(lhs, rhs)})
    rs = [o["ratio"] for o in out]
    return {"id": case_id, "samples": out, "spread": max(rs) / min(rs) - 1.0}


# --------------------------------------------------------------------------
# commutator estimate


def _commutator_parts(grid: Grid, v_hat: np.ndarray, g_hat: np.ndarray, theta: float):
    d = grid.dim
    mean = (slice(None),) + (0,) * d
    v0 = v_hat.copy()
    v0[mean] = 0.0          # a constant drift commutes with D^theta exactly
    Dth = grid.kmag**theta
    dg = 1j * grid.kd * g_hat
    dDg = 1j * grid.kd * (Dth * g_hat)
    adv = sum(exact_product(grid, v0[k], dg[k]) for k in range(d))
    adv_D = sum(exact_product(grid, v0[k], dDg[k]) for k in range(d))
    return Dth * adv - adv_D


def kato_ponce_terms(grid: Grid, v_hat: np.ndarray, g_hat: np.ndarray, theta: float) -> tuple[float, float]:
    """``(|[D^theta, v.grad] g|_2, |grad v|_inf |D^theta g|_2 + |D^{theta+1} v|_2 |g|_inf)``."""
    vol = grid.volume
    comm = _commutator_parts(grid, v_hat, g_hat, theta)
    lhs = float(np.sqrt(vol * np.sum(np.abs(comm) ** 2)))
    grad_v = float(np.max(np.abs(inverse(grid, 1j * v_hat[:, None] * grid.kd))))
    Dg = float(np.sqrt(vol * np.sum(np.abs(grid.kmag**theta * g_hat) ** 2)))
    Dv = float(np.sqrt(vol * np.sum(np.abs(grid.kmag ** (theta + 1) * v_hat) ** 2)))
    g_sup = float(np.max(np.abs(inverse(grid, g_hat))))
    return lhs, grad_v * Dg + Dv * g_sup


def check_kato_ponce(d: int = 2, theta: float = 1.0, n: int = 128, samples: int = 50, seed: int = 0,
                     slope: float = 2.5, refine: bool = True, case_id: str = "kato-ponce") -> RatioReport:
    """Homogeneous commutator estimate on random ``(v, g)`` with ``div v = 0``.

    Fields are band-limited to a quarter of the grid so the products are
    resolved without truncation.
    """
    if theta <= 0:
        raise InadmissibleParameters("commutator estimate needs theta > 0")
    coarse = make_grid(d, n)
    fine = make_grid(d, 2 * n)

    def one(sd):
        rng = np.random.default_rng(sd)
        kq = fine.k0 * (fine.n // 4 - 1)
        v_f = random_solenoidal(fine, rng, slope=slope, kmax=kq)
        g_f = random_coeffs(fine, rng, slope=slope, kmax=kq)
        cut = coarse.k0 * (coarse.n // 4 - 1)
        v_c = np.where(coarse.kmag <= cut, truncate(coarse, v_f, fine.n), 0.0)
        g_c = np.where(coarse.kmag <= cut, truncate(coarse, g_f, fine.n), 0.0)
        lhs, rhs = kato_ponce_terms(coarse, v_c, g_c, theta)
        row = {"seed": sd, "lhs": lhs, "rhs": rhs, "ratio": ratio(lhs, rhs)}
        if refine:
            lf, rf = kato_ponce_terms(fine, v_f, g_f, theta)
            row["fine"] = {"lhs": lf, "rhs": rf, "ratio": ratio(lf, rf)}
        return row

    rows = _parallel(one, [seed + i for i in range(samples)])
    base = [{k: row[k] for k in ("seed", "lhs", "rhs", "ratio")} for row in rows]
    slope_ = None
    extra = {}
    if refine:
        fine_rows = [dict(seed=row["seed"], **row["fine"]) for row in rows]
        slope_ = _refinement_slope(base, fine_rows)
        extra["refined"] = {"n": 2 * n, "max_ratio": max(s["ratio"] for s in fine_rows)}
    params = {"d": d, "theta": theta, "n": n, "slope": slope}
    return RatioReport(case_id, params, base, max(s["ratio"] for s in base), slope_, extra)


# --------------------------------------------------------------------------
# dispersive estimate


def half_wave_series(grid: Grid, w0: np.ndarray, times: np.ndarray, forcing=None) -> np.ndarray:
    """Solutions of ``w_t + i D w = f`` at ``times`` (starting at 0).

    ``forcing`` is ``None`` or an array of coefficient samples at ``times``;
    the Duhamel integral is evaluated by trapezoidal quadrature.
    """
    k = grid.kmag
    out = np.empty((len(times),) + w0.shape, dtype=complex)
    for j, t in enumerate(times):
        w = np.exp(-1j * t * k) * w0
        if forcing is not None and j > 0:
            ts = times[: j + 1]
            phase = np.exp(-1j * np.multiply.outer(t - ts, k))
            w = w + trapezoid(phase * forcing[: j + 1], x=ts, axis=0)
        out[j] = w
    return out


def strichartz_terms(grid: Grid, w0: np.ndarray, T_values, prm: Params, nt_per_unit: int = 20,
                     forcing_profile=None) -> list[dict]:
    """Both sides of the dispersive estimate for every window length in ``T_values``.

    ``forcing_profile`` is ``None`` or a pair ``(g_hat, phi)`` giving
    ``f(t) = phi(t) g``.
    """
    T_max = max(T_values)
    times = np.linspace(0.0, T_max, int(round(nt_per_unit * T_max)) + 1)
    forcing = None
    f_theta = np.zeros_like(times)
    if forcing_profile is not None:
        g_hat, phi = forcing_profile
        prof = np.array([phi(t) for t in times])
        forcing = prof[:, None] * g_hat.reshape(1, -1)
        forcing = forcing.reshape((len(times),) + g_hat.shape)
        f_theta = np.abs(prof) * norm(SpectralField(grid, g_hat), HomSobolev(prm.theta))
    series = half_wave_series(grid, w0, times, forcing)
    req = HomBesov(prm.r, prm.p, prm.p)
    besov = np.array([norm(SpectralField(grid, w, real=False), req) for w in series])
    w0_theta = norm(SpectralField(grid, w0), HomSobolev(prm.theta))
    q = prm.time_exponent
    out = []
    for T in T_values:
        sel = times <= T + 1e-12
        lhs = float(trapezoid(besov[sel] ** q, times[sel]) ** (1 / q))
        rhs = float(w0_theta + trapezoid(f_theta[sel], times[sel]))
        out.append({"T": T, "lhs": lhs, "rhs": rhs, "ratio": ratio(lhs, rhs)})
    return out


STRICHARTZ_DEFAULTS = {
    2: {"n": 128, "period": 16.0, "width": 0.7, "kmax": 8.0},
    3: {"n": 32, "period": 10.0, "width": 0.5, "kmax": 6.0},
}


def check_strichartz(d: int, r: float, p: float | None = None, theta: float | None = None,
                     T_values=(1.0, 2.0, 4.0), samples: int = 8, seed: int = 0, n: int | None = None,
                     period: float | None = None, width: float | None = None, kmax: float | None = None,
                     forcing: bool = False, slope: float = 1.0, case_id: str | None = None) -> RatioReport:
    """Dispersive estimate for the half-wave equation on localized data.

    The torus is taken large compared with the data and the time window, so
    the solution does not wrap around before ``max(T_values)``.
    """
    prm = param_check(d, r, p, theta, windows=("strichartz",))
    cfg = dict(STRICHARTZ_DEFAULTS[d])
    for key, val in (("n", n), ("period", period), ("width", width), ("kmax", kmax)):
        if val is not None:
            cfg[key] = val
    g = make_grid(d, cfg["n"], cfg["period"])

    def one(sd):
        rng = np.random.default_rng(sd)
        w0 = localized_coeffs(g, rng, cfg["width"], cfg["kmax"], slope=slope)
        prof = None
        if forcing:
            gf = localized_coeffs(g, rng, cfg["width"], cfg["kmax"], slope=slope)
            prof = (gf, lambda t: math.exp(-t))
        rows = strichartz_terms(g, w0, T_values, prm, forcing_profile=prof)
        return {"seed": sd, "by_T": rows}

    rows = _parallel(one, [seed + i for i in range(samples)])
    T_max = max(T_values)
    samples_out = []
    for row in rows:
        last = [x for x in row["by_T"] if x["T"] == T_max][0]
        samples_out.append({"seed": row["seed"], "lhs": last["lhs"], "rhs": last["rhs"],
                            "ratio": last["ratio"], "by_T": row["by_T"]})
    by_T = {}
    for T in T_values:
        rs = [x["ratio"] for row in rows for x in row["by_T"] if x["T"] == T]
        by_T[T] = {"max": max(rs), "median": float(np.median(rs))}
    logT = np.log(np.asarray(T_values, dtype=float))
    slope_max = float(np.polyfit(logT, np.log([by_T[T]["max"] for T in T_values]), 1)[0]) \
        if all(by_T[T]["max"] > 0 for T in T_values) else 0.0
    slope_med = float(np.polyfit(logT, np.log([by_T[T]["median"] for T in T_values]), 1)[0]) \
        if all(by_T[T]["median"] > 0 for T in T_values) else 0.0
    extra = {"by_T": {str(T): v for T, v in by_T.items()},
             "T_slope_max": slope_max, "T_slope_median": slope_med, "domain": cfg}
    params = prm.to_dict() | {"forcing": forcing, "T": list(T_values)}
    return RatioReport(case_id or f"strichartz-{d}d", params, samples_out,
                       max(s["ratio"] for s in samples_out), None, extra)


# --------------------------------------------------------------------------
# a priori chain


def tropical(x: float) -> float:
    """``max(1, |x|)``."""
    return max(1.0, abs(x))


def check_apriori_chain(records, d: int, r: float, p: float | None = None) -> dict:
    """Time integrals controlled by the a priori estimates along a stored run.

    ``records`` are diagnostics records carrying the vorticity Besov norm at
    ``(r, p)``. Reports ``y(t)``, the integrated gradient and vorticity
    powers and the integrated Besov power.
    """
    prm = param_check(d, r, p, windows=())
    key = (float(r), float(prm.p))
    times = np.array([rec.t for rec in records])
    if any(key not in rec.besov for rec in records):
        raise ValueError(f"records lack the vorticity Besov norm at (r, p) = {key}")
    besov = np.array([rec.besov[key] for rec in records])
    grad = np.array([rec.sup_gradV for rec in records])
    vort = np.array([rec.sup_vorticity for rec in records])
    eb, eg = prm.besov_exponent, prm.grad_exponent
    trop = np.array([tropical(b) for b in besov])
    y = cumulative_trapezoid(trop**eb, times, initial=0.0) ** (1 / prm.time_exponent)
    out = {
        "params": prm.to_dict(),
        "T": float(times[-1] - times[0]),
        "grad_integral": float(trapezoid(grad**eg, times)),
        "vorticity_integral": float(trapezoid(vort**eg, times)),
        "besov_integral": float(trapezoid(besov**eb, times)),
        "y_final": float(y[-1]),
        "y": y.tolist(),
        "times": times.tolist(),
    }
    out["finite"] = all(math.isfinite(out[k]) for k in
                        ("grad_integral", "vorticity_integral", "besov_integral", "y_final"))
    return out


def linear_mode_grad_integral(amplitude: float, wavenumber: float, T: float) -> float:
    """Closed form of ``int_0^T |grad V|_inf^4`` for a single transverse mode.

    The velocity and deformation amplitudes are ``a cos(kt)`` and
    ``a sin(kt)``, so the integrand is ``(a k)^4 max(|cos|, |sin|)^4``.
    """
    w = wavenumber
    val, _ = quad(lambda t: max(abs(math.cos(w * t)), abs(math.sin(w * t))) ** 4, 0.0, T,
                  limit=200, points=[j * math.pi / (4 * w) for j in range(1, int(4 * w * T / math.pi) + 1)])
    return (amplitude * w) ** 4 * val


__all__ = [
    "Params", "param_check", "thresholds", "gamma1", "gamma2", "RatioReport",
    "InterpolationCase", "interpolation_case", "scaling_dimensions", "interpolation_terms",
    "check_riesz_interpolation", "dilation_probe", "kato_ponce_terms", "check_kato_ponce",
    "half_wave_series", "strichartz_terms", "check_strichartz", "tropical",
    "check_apriori_chain", "linear_mode_grad_integral",
]
