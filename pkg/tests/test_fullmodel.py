import warnings

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from ladderhop import fullmodel as fm
from ladderhop.dynamics import tau_to_time
from ladderhop.errors import DomainError
from ladderhop.heff import DriveParams
from ladderhop.ladder import LevelScheme

BENCH_DRIVES = DriveParams(0.05, -3.0, 0.05, 4.1)


@pytest.mark.parametrize("F,n", [(1.5, 1), (1.5, 2), (2.5, 1), (2.5, 2)])
def test_operator_identities(F, n):
    r1, r2 = fm.verify_operator_identities(LevelScheme(F), n)
    assert max(r1, r2) < 1e-10
    c1, c2 = fm.verify_operator_identities(LevelScheme(F), n, swapped=True)
    assert max(c1, c2) > 1e-3


def test_zeeman_defaults():
    z = fm.ZeemanParams.from_field(1.77)
    assert z.delta_e == pytest.approx(2 / 33 * 1.39962449 * 1.77)
    assert z.delta_e == pytest.approx(0.15, abs=0.001)
    assert fm.ZeemanParams.from_field(0.12).delta_e == pytest.approx(0.0102, abs=1e-4)
    assert z.delta_g / z.delta_e == pytest.approx(-1.3e-4 * 33 / 2)
    with pytest.raises(DomainError):
        fm.ZeemanParams.from_field(1.0, chi_n_mhz=0)


def test_charge_conserved_by_static_and_drive(f32):
    h = fm.build_full(f32, (1, 1), BENCH_DRIVES)
    # sigma^- excitation lowers m by one while adding one excitation
    coo = h.static.tocoo()
    assert np.all(h.charges[coo.row] == h.charges[coo.col])
    coo = h.drive.tocoo()
    assert np.all(h.charges[coo.row] == h.charges[coo.col])


def test_undriven_ground_state_is_static(f32):
    h = fm.build_full(f32, (1, 1), DriveParams(0, -3, 0, 4.1), zeeman=fm.ZeemanParams(0.1, 0.001))
    psi = fm.full_initial_state(h.basis, 1.5, -1.5)
    ts = fm.integrate(h, psi, np.linspace(0, 1, 5), omega=0.05)
    for name in ts.names():
        assert np.ptp(ts[name]) < 1e-12


def test_matches_reference_ode(f32):
    h = fm.build_full(f32, (1, 1), BENCH_DRIVES)
    psi = fm.full_initial_state(h.basis, 1.5, -1.5)
    tau = np.linspace(0, 0.3, 4)
    ts = fm.integrate(h, psi, tau, tol=1e-8)
    times = tau_to_time(tau, 0.05, 1.0)

    def rhs(t, y):
        return -1j * (h.at(t) @ y)

    sol = solve_ivp(rhs, (0, times[-1]), psi.astype(complex), t_eval=times, method="DOP853", rtol=1e-11, atol=1e-12)
    prob = np.abs(sol.y.T) ** 2
    modes, occ = h.basis.occupations()
    pops = prob @ occ
    for k, (kind, m) in enumerate(modes):
        assert np.max(np.abs(ts[f"n[{kind}{m:+g}]"] - pops[:, k])) < 1e-6


def test_conservation_and_metadata(f32):
    h = fm.build_full(f32, (2, 2), BENCH_DRIVES)
    psi = fm.full_initial_state(h.basis, 1.5, -1.5)
    ts = fm.integrate(h, psi, np.linspace(0, 5, 11))
    assert np.max(np.abs(ts["norm"] - 1)) < 1e-7
    assert np.max(np.abs(ts["N_total"] - 4)) < 1e-8
    assert np.ptp(ts["N_e+J_z"]) < 1e-7
    assert ts.metadata["richardson_error"] < 1e-5
    assert ts.metadata["max_excited_fraction"] < 0.05


def test_excitation_cutoff(f32):
    h = fm.build_full(f32, (2, 2), BENCH_DRIVES)
    psi = fm.full_initial_state(h.basis, 1.5, -1.5)
    tau = np.linspace(0, 3, 7)
    a = fm.integrate(h, psi, tau)
    b = fm.integrate(h, psi, tau, max_excitations=1)
    # double excitations are O(Omega^4 / Delta^4)
    assert np.max(np.abs(a["n[g+0.5]"] - b["n[g+0.5]"])) < 1e-4
    assert sum(b.metadata["sector_dims"]) < sum(a.metadata["sector_dims"])


def test_strong_drive_warns(f32):
    h = fm.build_full(f32, (1, 1), DriveParams(0.8, -1.0, 0, 0))
    psi = fm.full_initial_state(h.basis, 1.5, -1.5)
    with pytest.warns(RuntimeWarning, match="excited-state fraction"):
        fm.integrate(h, psi, np.linspace(0, 1, 11), omega=0.8)


def test_bad_initial_state(f32):
    h = fm.build_full(f32, (1, 1), BENCH_DRIVES)
    with pytest.raises(DomainError):
        fm.integrate(h, np.ones(h.dim), [0, 1])


def test_benchmark_zero_drive(f32):
    full, eff, summary = fm.benchmark_heff(f32, 2, DriveParams(0, -3, 0, 4.1), tau_grid=np.linspace(0, 1, 3))
    assert summary["max_deviation"] == 0


def test_benchmark_small(f32):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        full, eff, summary = fm.benchmark_heff(f32, 2, BENCH_DRIVES, tau_grid=np.linspace(0, 10, 21))
    assert summary["max_deviation"] < 0.05
    moved = fm.transferred_population(full, f32, 2)
    assert moved.max() > 0.01
