import numpy as np
import pytest

from nhspec.dynamics import (EvolutionConfig, StateBundle, band_mask, integrate,
                             make_initial_data)
from nhspec.errors import InconsistentVorticity, SpaceMismatch
from nhspec.grid import EULER, LAGRANGE, SpectralField, inverse, make_grid, pad
from nhspec.operators import riesz_transform
from nhspec.vorticity import (PiBundle, VorticityBundle, biot_savart, curl, half_wave_evolve,
                              pi_merge, pi_split, vorticity_hs_monitor, vorticity_residual,
                              vorticity_sources, wave_matrix)

from conftest import rand_scalar


def random_state(g, seed=0, **kw):
    spec = {"velocity": "random", "deformation": "random", "deformation_amplitude": 0.5, "seed": seed}
    spec.update(kw)
    return make_initial_data(g, spec)


def test_stream_function(g2):
    psi = rand_scalar(g2, 1)
    psi[0, 0] = 0
    v = np.array([-1j * g2.kd[1] * psi, 1j * g2.kd[0] * psi])
    st = StateBundle(g2, v, g2.zeros(2, 2), np.eye(2))
    assert np.max(np.abs(curl(st).omega[0] + g2.kdmag**2 * psi)) < 1e-13


def test_constant_deformation_has_no_vorticity(g3):
    A = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    Om = curl(StateBundle.zero(g3, A))
    assert np.all(Om.stacked() == 0)


def test_curl_against_finite_differences():
    g = make_grid(2, 32)
    st = random_state(g, 2, kmax=6)
    fine = make_grid(2, 128)
    vf = inverse(fine, pad(g, st.v, 128))
    h = fine.spacing

    def d(f, ax):  # fourth-order centred difference
        return (8 * (np.roll(f, -1, ax) - np.roll(f, 1, ax)) - (np.roll(f, -2, ax) - np.roll(f, 2, ax))) / (12 * h)

    fd = (d(vf[1], 0) - d(vf[0], 1))[::4, ::4]
    om = inverse(g, curl(st).omega[0])
    assert np.max(np.abs(fd - om)) / np.max(np.abs(om)) < 1e-3


@pytest.mark.parametrize("dim,n", [(2, 32), (3, 16)])
def test_biot_savart_round_trip(dim, n):
    g = make_grid(dim, n)
    st = random_state(g, 3)
    v, u = biot_savart(curl(st))
    assert np.max(np.abs(v - st.v)) < 1e-10 and np.max(np.abs(u - st.u)) < 1e-10
    again = curl(StateBundle(g, v, u, np.eye(dim)))
    assert np.max(np.abs(again.stacked() - curl(st).stacked())) < 1e-10


def test_biot_savart_zero(g3):
    v, u = biot_savart(curl(StateBundle.zero(g3)))
    assert np.all(v == 0) and np.all(u == 0)


def test_biot_savart_rejects_inconsistent(g3):
    rng = np.random.default_rng(0)
    om = rng.standard_normal((3,) + g3.shape)
    bad = VorticityBundle(g3, SpectralField.from_values(g3, om).coeffs, g3.zeros(3, 3))
    bad.omega[:, 0, 0, 0] = 0
    with pytest.raises(InconsistentVorticity):
        biot_savart(bad)
    Om = curl(random_state(make_grid(2, 16), 1))
    Om.omega[0, 0, 0] = 1.0
    with pytest.raises(InconsistentVorticity):
        biot_savart(Om)


def test_velocity_gradient_from_riesz(g3):
    # d_k v^n = R_k R_m omega^{mn} with R_j of symbol k_j/|k|
    st = random_state(g3, 4)
    om = curl(st).omega
    full = {}
    for p, (m, n) in enumerate([(0, 1), (0, 2), (1, 2)]):
        full[m, n] = om[p]
        full[n, m] = -om[p]
    for n in range(3):
        for k in range(3):
            tot = g3.zeros()
            for m in range(3):
                if m != n:
                    Rm = riesz_transform(m, SpectralField(g3, full[m, n]))
                    tot = tot + riesz_transform(k, Rm).coeffs
            assert np.max(np.abs(tot - 1j * g3.kd[k] * st.v[n])) < 1e-12


def test_two_dimensional_fluid_source_vanishes(g2):
    src = vorticity_sources(random_state(g2, 5))
    assert np.max(np.abs(src.f)) < 1e-13
    assert np.max(np.abs(src.f_b)) > 1e-3


def test_sources_of_zero_state(g3):
    src = vorticity_sources(StateBundle.zero(g3))
    assert np.all(src.stacked() == 0)


@pytest.mark.parametrize("dim,n", [(2, 32), (3, 16)])
def test_vorticity_equation_residual(dim, n):
    g = make_grid(dim, n)
    st = random_state(g, 6, kmax=n // 4, velocity_amplitude=0.5, deformation_amplitude=0.2)
    mask = band_mask(g, None)
    res = []
    for dt in (0.02, 0.01):
        snaps = integrate(st, EvolutionConfig(dt=dt, t_end=2 * dt), keep_snapshots=True).snapshots
        res.append(vorticity_residual(snaps[0], snaps[1], snaps[2], dt, mask))
    assert res[1] < 1e-3
    assert res[0] / res[1] == pytest.approx(4, rel=0.1)


def _random_bundle(g, seed, space=LAGRANGE):
    st = random_state(g, seed)
    Om = curl(st)
    return VorticityBundle(g, Om.omega, Om.omega_a, space)


@pytest.mark.parametrize("dim,n", [(2, 16), (3, 8)])
def test_split_merge_round_trip(dim, n):
    g = make_grid(dim, n)
    Om = _random_bundle(g, 7)
    back = pi_merge(pi_split(Om))
    assert np.max(np.abs(back.stacked() - Om.stacked())) < 1e-12
    assert back.space == LAGRANGE


def test_merge_split_round_trip_2d():
    g = make_grid(2, 16)
    parts = [rand_scalar(g, s, lead=(1,)) for s in (1, 2, 3)]
    for c in parts:
        c[(...,) + (0, 0)] = 0
    Pi = PiBundle(g, parts[0], parts[1], parts[2][None])
    again = pi_split(pi_merge(Pi))
    for a, b in ((again.pi_plus, Pi.pi_plus), (again.pi_minus, Pi.pi_minus), (again.pi_ab, Pi.pi_ab)):
        assert np.max(np.abs(a - b)) < 1e-12


def test_split_zero_and_space_tag(g2):
    zero = VorticityBundle(g2, g2.zeros(1), g2.zeros(2, 1), LAGRANGE)
    Pi = pi_split(zero)
    assert np.all(Pi.pi_plus == 0) and np.all(Pi.pi_minus == 0) and np.all(Pi.pi_ab == 0)
    with pytest.raises(SpaceMismatch):
        pi_split(VorticityBundle(g2, g2.zeros(1), g2.zeros(2, 1), EULER))


@pytest.mark.parametrize("k", [[3.0, 4.0], [1.0, -2.0, 2.0]])
def test_wave_matrix_eigenstructure(k):
    k = np.array(k)
    M = wave_matrix(k)
    km = np.linalg.norm(k)
    e1 = np.concatenate([[1.0], k / km])
    assert np.allclose(M @ e1, km * e1, atol=1e-14)
    ev = np.sort(np.linalg.eigvalsh(M))
    ref = np.sort(np.concatenate([[km, -km], np.zeros(k.size - 1)]))
    assert np.allclose(ev, ref, atol=1e-12)


def test_half_wave_free_rotation(g2):
    w0 = g2.zeros()
    w0[2, 1] = 1.0
    t = 0.7
    w = half_wave_evolve(g2, w0, None, None, +1, t)
    assert w[2, 1] == pytest.approx(np.exp(1j * t * np.sqrt(5)), abs=1e-14)
    assert np.sum(np.abs(w) ** 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("sign", [1, -1])
def test_half_wave_constant_forcing(g2, sign):
    t = 1.3
    times = np.linspace(0, t, 201)
    F = g2.zeros()
    F[3, 0] = 0.4 - 0.1j
    forcing = np.broadcast_to(F, (times.size,) + g2.shape)
    w = half_wave_evolve(g2, g2.zeros(), forcing, times, sign, t)
    k = 3.0
    ref = (np.exp(sign * 1j * t * k) - 1) / (sign * 1j * k) * F[3, 0]
    assert abs(w[3, 0] - ref) < 1e-8


def test_half_wave_zero_symbol(g2):
    times = np.linspace(0, 1, 51)
    F = np.array([np.full(g2.shape, np.cos(s)) for s in times])
    w0 = rand_scalar(g2, 9)
    w = half_wave_evolve(g2, w0, F, times, 0, 1.0)
    assert np.max(np.abs(w - w0 - np.sin(1.0))) < 1e-8
    with pytest.raises(ValueError):
        half_wave_evolve(g2, w0, F, times, 2, 1.0)


def _growth(st, dt, t_end, theta=1.0):
    snaps = []
    tr = integrate(st, EvolutionConfig(dt=dt, t_end=t_end), observer=lambda s: snaps.append(curl(s)))
    recs = tr.records
    return vorticity_hs_monitor([r.t for r in recs], snaps, [r.sup_gradV for r in recs],
                                [r.sup_vorticity for r in recs], theta)


def test_growth_monitor_zero(g2):
    rep = _growth(StateBundle.zero(g2), 0.1, 0.5)
    assert rep.constant == 0 and np.all(rep.lhs == 0) and np.all(rep.integral == 0)


def test_growth_monitor_linear_mode():
    g = make_grid(2, 16)
    st = make_initial_data(g, {"velocity": "mode", "mode": (1, 2), "velocity_amplitude": 1.0})
    rep = _growth(st, 0.01, 1.0)
    assert np.max(np.abs(rep.lhs)) < 1e-8


def test_growth_monitor_stable_under_dt_halving():
    g = make_grid(2, 64)
    st = random_state(g, 10, kmax=8, velocity_amplitude=1.0, deformation="shears",
                      deformation_amplitude=0.2)
    C1 = _growth(st, 0.02, 0.4).constant
    C2 = _growth(st, 0.01, 0.4).constant
    print(f"vorticity growth constant: {C1:.5f} (dt) {C2:.5f} (dt/2)")
    assert np.isfinite(C1) and abs(C1 - C2) / max(C2, 1e-12) < 1e-2
