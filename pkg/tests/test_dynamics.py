import numpy as np
import pytest
import scipy.linalg as la
import scipy.sparse as sp

from ladderhop import dynamics as dy
from ladderhop.errors import CapabilityError, CollapseError, DomainError
from ladderhop.fock import enumerate_basis
from ladderhop.heff import DriveParams, build_heff_exact
from ladderhop.ladder import LevelScheme, leg_bases


def _random_hermitian(rng, n, density=0.05):
    a = sp.random(n, n, density=density, random_state=np.random.RandomState(3)) + 1j * sp.random(
        n, n, density=density, random_state=np.random.RandomState(4)
    )
    return ((a + a.getH()) / 2).tocsr()


def test_tau_roundtrip():
    t = dy.tau_to_time(12.5, 0.05, 1.0)
    assert dy.time_to_tau(t, 0.05, 1.0) == pytest.approx(12.5)
    assert t == pytest.approx(12.5 * 2 * np.pi / 0.05**2)


def test_initial_state_multinomial():
    b = enumerate_basis((-1.5, 2.5), 3)
    psi = dy.sector_state(b, {-1.5: 0.25, 2.5: 0.75})
    # (sqrt(.25)|a> + sqrt(.75)|b>)^3: amplitude of |1,2> is sqrt(3 * .25 * .75^2)
    assert psi[b.index[(1, 2)]] == pytest.approx(np.sqrt(3 * 0.25 * 0.75**2))
    assert np.linalg.norm(psi) == pytest.approx(1)
    with pytest.raises(DomainError):
        dy.sector_state(b, {-1.5: 0.5})


def test_fock_state_lookup(f32):
    b = leg_bases(f32, 2, 2)
    psi = dy.fock_state(b, ({1.5: 2}, {-1.5: 1, 0.5: 1}))
    assert psi.sum() == 1
    with pytest.raises(DomainError):
        dy.fock_state(b, ({1.5: 3}, {}))


def test_krylov_matches_expm(rng):
    h = _random_hermitian(rng, 120)
    v = rng.normal(size=120) + 1j * rng.normal(size=120)
    v /= np.linalg.norm(v)
    ref = la.expm(-1j * 7.3 * h.toarray()) @ v
    out = dy.krylov_expm(lambda x: h @ x, v, 7.3)
    assert np.linalg.norm(out - ref) < 1e-8


def test_spectral_vs_krylov_dim500(f32):
    s = LevelScheme(4.5)
    b = leg_bases(s, 3, 2)
    assert b.dim == 525
    psi = dy.initial_state(b, dy.InitialStateSpec({4.5: 0.6, 0.5: 0.4}, {-4.5: 0.3, -0.5: 0.7}))
    h = build_heff_exact(s, b, DriveParams(0.05, -3, 0.05, 4.1), 1.0)
    tau = np.linspace(0, 15, 16)
    a = dy.evolve(h, psi, tau, method="spectral")
    k = dy.evolve(h, psi, tau, method="krylov", krylov_tol=1e-11)
    for name in a.names():
        assert np.max(np.abs(a[name] - k[name])) < 1e-8, name


def test_zero_hamiltonian_is_static(f32):
    b = leg_bases(f32, 2, 2)
    psi = dy.initial_state(b, dy.InitialStateSpec({1.5: 0.5, -0.5: 0.5}, {-1.5: 1}))
    ts = dy.evolve(sp.csr_matrix((b.dim, b.dim)), psi, np.linspace(0, 5, 6), basis=b)
    for name in ts.names():
        assert np.ptp(ts[name]) < 1e-14


def test_evolve_conserves(f32):
    b = leg_bases(f32, 5, 5)
    psi = dy.initial_state(b, dy.InitialStateSpec.single(1.5, -1.5))
    h = build_heff_exact(f32, b, DriveParams(0.05, -3, 0.05, 4.1), 1.0, support=psi)
    ts = dy.evolve(h, psi, np.linspace(0, 10, 101))
    assert np.max(np.abs(ts["norm"] - 1)) < 1e-10
    assert np.ptp(ts["N_upper"]) < 1e-10 and np.ptp(ts["N_lower"]) < 1e-10
    assert np.ptp(ts["energy"]) < 1e-12
    # pairs appear in the middle sublevels within a few tau
    assert ts["n[+0.5]"].max() + ts["n[-0.5]"].max() > 1.0


def test_capability_error_outside_support(f32):
    b = leg_bases(f32, 2, 2)
    psi = dy.initial_state(b, dy.InitialStateSpec.single(1.5, -1.5))
    h = build_heff_exact(f32, b, DriveParams(0.05, -3, 0.05, 4.1), 1.0, support=psi)
    other = dy.fock_state(b, ({-0.5: 2}, {-1.5: 2}))
    with pytest.raises(CapabilityError):
        dy.evolve(h, other, [0, 1])


def test_long_time_average_trivial(rng):
    w = np.array([0.0, 1.0, 2.5, 4.0])
    h = sp.diags(w).tocsr()
    psi = rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    o = rng.normal(size=4)
    out = dy.long_time_average(h, psi, {"o": o})
    assert out["o"] == pytest.approx(np.sum(psi**2 * o))
    # an eigenstate keeps its value
    b = np.zeros(4)
    b[2] = 1
    assert dy.long_time_average(h, b, {"o": o})["o"] == pytest.approx(o[2])


def test_long_time_average_vs_trapezoid():
    scheme, b, psi = dy.four_level_setup(28)
    assert b.dim == 225
    h = build_heff_exact(scheme, b, DriveParams(0.05, -4, 0.05, 4.1), 1.0)
    diag = dy.long_time_average(h, psi, {"n": 0.5})
    ts = dy.evolve(h, psi, np.linspace(0, 2000, 40001))
    assert dy.finite_time_average(ts, "n[+0.5]") == pytest.approx(diag["n"], abs=1e-3)


def test_long_time_average_zero_drive():
    out = dy.pair_population_average(10, DriveParams(0, -4, 0, 5.3))
    assert out == 0


def test_correlation_pair_state():
    b = enumerate_basis((0, 1), 2)
    psi = np.zeros(b.dim)
    psi[b.index[(2, 0)]] = psi[b.index[(0, 2)]] = 1 / np.sqrt(2)
    _, c = dy.number_correlations(psi, b)
    assert c[0, 1] == pytest.approx(-1)
    assert np.allclose(c, c.T)


def test_correlation_matrix_product_state_zero():
    s = LevelScheme(4.5)
    b = leg_bases(s, 2, 2)
    psi = dy.initial_state(b, dy.InitialStateSpec.single(4.5, -4.5))
    labels, c = dy.correlation_matrix(psi, s, b)
    assert labels[:5] == ["-4", "-3", "-2", "-1", "0*"] and labels[5:] == ["0", "1", "2", "3", "4"]
    assert np.max(np.abs(c)) == 0


def test_thresholds():
    t = np.linspace(0, 10, 11)
    assert dy.light_cone_front(t, {1: np.zeros(11)}, threshold=-0.1) == {1: None}
    arr = dy.light_cone_front(t, {1: -0.05 * t}, threshold=-0.15)
    assert arr[1] == pytest.approx(3.0)
    assert dy.light_cone_threshold({1: -0.3 * t}, 10) == -0.15
    assert dy.light_cone_threshold({1: -0.3 * t}, 6) == pytest.approx(-0.3)
    assert dy.delay_time(t, np.full(11, 0.2)) == 0.0
    assert dy.delay_time(t, 0.01 * t) == pytest.approx(5.0)


def _planted(beta, nu, crit=4.8, sizes=(20, 40, 80, 160)):
    x = np.linspace(crit - 0.4, crit + 0.4, 41)
    curves = {}
    for n in sizes:
        s = (x - crit) * n ** (1 / nu)
        f = np.log1p(np.exp(3 * s)) / 3 + 0.1  # smooth scaling function
        curves[n] = (x, n ** (-beta / nu) * f)
    return curves


@pytest.mark.parametrize("beta,nu", [(1.15, 2.38), (0.5, 1.5), (2.0, 3.0)])
def test_collapse_recovers_planted(beta, nu):
    b, n, res = dy.finite_size_collapse(_planted(beta, nu), 4.8, beta0=1.0, nu0=2.0)
    assert b == pytest.approx(beta, abs=0.05)
    assert n == pytest.approx(nu, abs=0.05)
    assert res < 1e-4


def test_collapse_trivial_and_errors():
    x = np.linspace(0, 1, 11)
    same = {n: (x, np.sin(x) + 1) for n in (10, 20, 30)}
    assert dy.collapse_residual(same, 0.5, 0.0, 1e9) == pytest.approx(0, abs=1e-12)
    with pytest.raises(CollapseError):
        dy.collapse_residual({10: same[10], 20: same[20]}, 0.5, 1, 2)
    with pytest.raises(CollapseError):
        dy.collapse_residual(same, 0.5, 1, -1)


def test_pair_sweep_shape_and_workers():
    a = dy.pair_production_sweep([-4.0], [5.3, 6.9], n_atoms=10, workers=1)
    b = dy.pair_production_sweep([-4.0], [5.3, 6.9], n_atoms=10, workers=2)
    assert a.data["n_pm_half"].shape == (1, 2)
    assert np.array_equal(a.data["n_pm_half"], b.data["n_pm_half"])


def test_chiral_empty_upper_leg_is_balanced():
    # all atoms on the lower leg start in -1/2; only the symmetric pair process runs
    s = LevelScheme(2.5)
    b = leg_bases(s, 0, 6)
    psi = dy.initial_state(b, dy.InitialStateSpec({}, {-0.5: 1.0}))
    h = build_heff_exact(s, b, DriveParams(0.05, -3, 0.05, 4.0), 1.0, support=psi)
    ts = dy.evolve(h, psi, np.linspace(0, 10, 101))
    assert np.max(np.abs(ts["n[+1.5]"] - ts["n[-2.5]"])) < 1e-10
    assert ts["n[+1.5]"].max() > 1e-3


@pytest.mark.parametrize("p,sign", [(1.0, -1), (0.0, 1)])
def test_chiral_extremes(p, sign):
    ts = dy.chiral_series(p, 4.0, n_atoms=12, tau_grid=np.linspace(0, 3, 31))
    assert np.all(sign * ts["N_diff"][1:] > 0)
