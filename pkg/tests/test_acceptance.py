"""Acceptance criteria, one test each, at the stated tolerances.

Each check returns (passed, detail). Running under pytest prints one
PASS/FAIL line per criterion in the terminal summary; running this file
directly (``python tests/test_acceptance.py``) prints the same lines.
"""

import time
import warnings

import numpy as np
from numpy.polynomial.legendre import leggauss

import dmamodel as d
from dmamodel.admittance import (dipole_on_plane_gain, path_gain_variance, ray_sum_covariance,
                                 self_conductance_free, self_conductance_on_plane,
                                 surface_correlation)
from dmamodel.greens import greens_freespace_zz
from dmamodel.radiation import hemisphere_rule

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # standalone run
    ACCEPTANCE_LINES = {}

SEED = 20240611


def _report(number, title, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def _rel(a, b):
    return abs(a - b) / abs(b)


def _layout():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", d.GeometryWarning)
        return d.validation_scenario()


def _single_slot(scenario):
    g = scenario.waveguides[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", d.GeometryWarning)
        sc = d.Scenario(scenario.medium, (g,), [0], [[g.S / 2, g.b, g.a / 2]], np.zeros((0, 3)),
                        [2 - 15.7934j], [], Y_0=scenario.Y_0)
    return sc, d.solve(d.build_admittances(sc), d.Excitation.equal_power(1), Y_0=sc.Y_0)


# --------------------------------------------------------------------------


def check_1():
    t0 = time.perf_counter()
    sc = _layout()
    sol = d.solve(d.build_admittances(sc), d.Excitation.equal_power(2, 1.0), Y_0=sc.Y_0)
    elapsed = time.perf_counter() - t0
    ref_js = np.tile([0.1546, 0.0838, 0.0418, 0.0276, 0.0285], 2)
    errs = {
        "P_t": _rel(sol.P_t, 0.6077),
        "j": max(_rel(v, 0.1682) for v in sol.j),
        "j_t": max(_rel(v, 0.2266 + 0.0877j) for v in sol.j_t),
        "|j_s|": float(np.max(np.abs(np.abs(sol.j_s) - ref_js) / ref_js)),
    }
    ok = all(e <= 0.02 for e in errs.values()) and elapsed < 1.0
    detail = ", ".join(f"{k} rel err {v:.2e}" for k, v in errs.items()) + f", runtime {elapsed:.3f} s"
    return ok, detail


def check_2():
    err = _rel(d.connector_admittance_auto(_layout()), 35.3387)
    return err <= 1e-3, f"Y_0 = {d.connector_admittance_auto(_layout()):.4f} S, rel err {err:.2e}"


def _covariance_integral(sep, k, s2, order):
    x, w = leggauss(order)
    t = (x + 1) * np.pi / 2
    wt = w * np.pi / 2
    T, Ph = np.meshgrid(t, t, indexing="ij")
    rhat = np.stack([np.sin(T) * np.cos(Ph), np.sin(T) * np.sin(Ph), np.cos(T)], axis=-1)
    f = np.sin(T) ** 3 * np.exp(-1j * k * (rhat @ sep))
    return 2 * s2 / 3 * (wt @ f @ wt)


def check_3():
    sc = _layout()
    lam, k = sc.medium.wavelength, sc.medium.k
    R_user = 20.0
    s2 = float(path_gain_variance(sc.medium, R_user))
    grid = np.linspace(0.05, 3.0, 10) * lam
    worst = 0.0
    for dx in grid:
        for dz in grid:
            sep = np.array([dx, 0.0, dz])
            closed = 4 * np.pi / 3 * s2 * surface_correlation(sep, k)
            oracle = _covariance_integral(sep, k, s2, 200)
            worst = max(worst, _rel(closed, oracle))
    diag = d.rayleigh_covariance(sc, user_distance=R_user).sigmas[0].diagonal()
    diag_err = float(np.max(np.abs(diag - 8 * np.pi * s2 / 9)) / (8 * np.pi * s2 / 9))
    ok = worst <= 1e-6 and diag_err <= 1e-9
    return ok, f"worst off-diagonal rel err {worst:.2e} over 100 separations, diagonal rel err {diag_err:.1e}"


def check_4():
    t0 = time.perf_counter()
    sc = _layout()
    rng = np.random.default_rng(SEED)
    draws = [sc.Y_s] + [rng.uniform(0, 5, sc.L) + 1j * rng.uniform(-30, 30, sc.L) for _ in range(20)]
    worst = 0.0
    for Y_s in draws:
        s = sc.with_terminations(Y_s=Y_s)
        sol = d.solve(d.build_admittances(s), d.Excitation.equal_power(2, 1.0), Y_0=s.Y_0)
        P_rad = d.radiated_power(sol, s, quadrature_order=64)
        worst = max(worst, abs(P_rad + sol.P_d.sum() - sol.P_t) / sol.P_t)
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.01 and elapsed < 10.0
    return ok, f"worst closure error {worst:.2e} over 21 runs, runtime {elapsed:.2f} s"


def check_5():
    sc = _layout()
    med, kn = sc.medium, sc.wavenumbers()
    lam = med.wavelength
    g0 = self_conductance_on_plane(med)
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(10):
        r_n = np.array([rng.uniform(0, 4), 0, rng.uniform(0, 4)]) * lam
        r_m = np.array([rng.uniform(0, 4), 0, rng.uniform(0, 4)]) * lam
        closed = (2j * med.omega * med.permittivity * greens_freespace_zz(r_n, r_m, kn)).real / g0
        oracle = d.quadrature_admittance_oracle(dipole_on_plane_gain, r_n, r_m, kn)
        worst = max(worst, abs(oracle - closed))
    return worst <= 1e-6, f"worst |oracle - closed form| {worst:.2e} (normalized) over 10 pairs"


def _user_deviation(sc, distance):
    lam = sc.medium.wavelength
    centroid = sc.element_positions.mean(axis=0)
    user = centroid + np.array([0.0, distance * lam, 0.0])
    s = sc.with_users(user[None], [self_conductance_free(sc.medium)])
    adm = d.build_admittances(s)
    j_t = d.network.resolve_excitation(adm, d.Excitation.equal_power(2, 1.0), s.Y_0)
    uni = d.solve_unilateral(adm, j_t).j_r
    bi = d.solve_bilateral(adm, j_t).j_r
    return float(np.linalg.norm(bi - uni) / np.linalg.norm(uni))


def check_6():
    sc = _layout()
    distances = (10, 30, 100)
    dev = [_user_deviation(sc, r) for r in distances]
    monotone = dev[0] > dev[1] > dev[2]
    decade_drop = np.log10(dev[0] / dev[2])
    slopes = [np.log10(dev[i] / dev[i + 1]) / np.log10(distances[i + 1] / distances[i]) for i in range(2)]
    ok = monotone and decade_drop >= 2.0
    detail = (", ".join(f"{r} lambda: {v:.3e}" for r, v in zip(distances, dev))
              + f"; drop over the decade {decade_drop:.3f} orders (need >= 2),"
              + f" segment slopes {slopes[0]:.3f} and {slopes[1]:.3f}")
    return ok, detail


def check_7():
    re_yss = 1.0
    c = np.linspace(-100, 100, 1000)
    sweep = d.lorentzian_sweep(re_yss, c)
    radius = 1 / (2 * re_yss)
    worst = max(abs(abs(r.value - radius) - radius) for r in sweep)
    max_phase = max(abs(np.angle(r.value)) for r in sweep)
    ok = worst <= 1e-12 and max_phase < np.pi / 2
    return ok, f"worst circle residual {worst:.1e}, max |phase| {max_phase:.6f} rad"


def check_8():
    sc = _layout()
    users = sc.with_users([[0.06, 1.0, 0.03], [0.02, 2.5, -0.4], [-0.3, 1.7, 0.2]],
                          self_conductance_free(sc.medium))
    adm = d.build_admittances(users)
    med = users.medium
    results = {}
    results["symmetry"] = max(np.max(np.abs(Y - Y.T)) / np.max(np.abs(Y)) for Y in (adm.Y_ss, adm.Y_rr)) <= 1e-12
    ytt = np.diag(adm.Y_tt)
    results["Y_tt imaginary"] = bool(np.all(np.abs(ytt.real) < 1e-12 * np.abs(ytt.imag)))
    ratio = self_conductance_on_plane(med) / self_conductance_free(med)
    results["diag constants"] = (np.allclose(np.diag(adm.Y_ss).real, self_conductance_on_plane(med), rtol=1e-14)
                                 and np.allclose(np.diag(adm.Y_rr).real, self_conductance_free(med), rtol=1e-14)
                                 and ratio == 2.0)
    w = np.linalg.eigvalsh(adm.Y_ss.real)
    results["Re Y_ss PSD"] = w.min() >= -1e-9 * w.max()
    closed = d.rayleigh_covariance(users).sigmas
    mc = ray_sum_covariance(users, 10_000, seed=SEED)
    mc_err = float(np.max(np.abs(mc - closed)) / np.max(np.abs(closed)))
    results["ray-sum covariance"] = mc_err <= 0.05
    ok = all(results.values())
    detail = ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in results.items())
    return ok, detail + f" (Monte-Carlo max rel err {mc_err:.3f}, ratio {ratio})"


def check_9():
    sc = _layout()
    single, sol1 = _single_slot(sc)
    theta = np.linspace(0, np.pi, 181)
    g1 = d.gain(sol1, single, theta, np.pi / 2, reference="radiated")
    shape_err = float(np.max(np.abs(g1 / g1.max() - np.sin(theta) ** 2)))
    peak_dbi = 10 * np.log10(g1.max())
    peak_ok = abs(peak_dbi - 10 * np.log10(3)) <= 0.01 and shape_err <= 1e-3

    sol = d.solve(d.build_admittances(sc), d.Excitation.equal_power(2, 1.0), Y_0=sc.Y_0)
    phi, cut = d.gain_cut(sol, sc, "theta", np.pi / 2, samples=181)
    argmax = float(np.degrees(phi[np.argmax(cut)]))
    broadside_ok = abs(argmax - 90.0) <= 1.0

    T, Ph, W = hemisphere_rule(64)
    integral = float(np.sum(W * d.gain(sol, sc, T, Ph)) / (4 * np.pi))
    expected = d.radiated_power(sol, sc) / sol.P_s
    integral_err = _rel(integral, expected)
    ok = peak_ok and broadside_ok and integral_err <= 0.01
    detail = (f"single-slot peak {peak_dbi:.4f} dBi (shape err {shape_err:.1e}); "
              f"theta = pi/2 cut argmax at phi = {argmax:.1f} deg (broadside 90); "
              f"hemisphere integral rel err {integral_err:.1e}")
    return ok, detail


CRITERIA = [
    (1, "reference currents and powers", check_1),
    (2, "connector admittance", check_2),
    (3, "covariance closed form vs integral", check_3),
    (4, "energy conservation", check_4),
    (5, "gain-pattern oracle", check_5),
    (6, "unilateral convergence", check_6),
    (7, "Lorentzian locus", check_7),
    (8, "structural invariants", check_8),
    (9, "pattern properties", check_9),
]


def _run(number):
    _, title, fn = CRITERIA[number - 1]
    ok, detail = fn()
    return _report(number, title, ok, detail), detail


def test_criterion_1_reference_solution():
    ok, detail = _run(1)
    assert ok, detail


def test_criterion_2_connector_admittance():
    ok, detail = _run(2)
    assert ok, detail


def test_criterion_3_covariance_oracle():
    ok, detail = _run(3)
    assert ok, detail


def test_criterion_4_energy_conservation():
    ok, detail = _run(4)
    assert ok, detail


def test_criterion_5_pattern_oracle():
    ok, detail = _run(5)
    assert ok, detail


def test_criterion_6_unilateral_convergence():
    ok, detail = _run(6)
    assert ok, detail


def test_criterion_7_lorentzian_locus():
    ok, detail = _run(7)
    assert ok, detail


def test_criterion_8_structural_invariants():
    ok, detail = _run(8)
    assert ok, detail


def test_criterion_9_pattern_properties():
    ok, detail = _run(9)
    assert ok, detail


if __name__ == "__main__":
    outcomes = [_run(n)[0] for n, _, _ in CRITERIA]
    raise SystemExit(0 if all(outcomes) else 1)
