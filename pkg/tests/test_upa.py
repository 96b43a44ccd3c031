import numpy as np
import pytest

from ladderhop import upa
from ladderhop.errors import DegeneracyError, DomainError, ResonanceError
from ladderhop.heff import DriveParams


def _random_drives(rng):
    om = rng.uniform(0.01, 0.1)
    return DriveParams(om, rng.uniform(-7, -2), om * rng.uniform(0.5, 1.5), rng.uniform(2, 8))


def test_zero_drive_k():
    K = upa.four_level_K(DriveParams(0, -4, 0, 5))
    assert (K.K1, K.K2, K.K3) == (0, 0, 0)


def test_population_branches():
    t = np.linspace(0, 50, 11)
    for K in (upa.FourLevelK(1.0, 1.0, 0.3), upa.FourLevelK(0.1, 0.1, 0.3)):
        assert upa.four_level_population(K, 0.0) == 0
        assert np.all(upa.four_level_population(K, t) >= 0)
    marginal = upa.FourLevelK(0.25, 0.25, 0.25)
    assert marginal.phase == "marginal"
    assert np.allclose(upa.four_level_population(marginal, t), 0.0625 * t**2)


def test_phase_boundary_roots():
    roots = upa.four_level_phase_boundary(-4.0, 1.0, 0.05)
    assert len(roots) == 2
    assert roots[0] == pytest.approx(4.80, abs=0.01)
    assert roots[1] == pytest.approx(6.53, abs=0.01)
    # the roots separate the phases
    for db, phase in ((4.5, "II"), (5.3, "I"), (6.9, "II")):
        assert upa.four_level_K(DriveParams(0.05, -4, 0.05, db)).phase == phase


@pytest.mark.parametrize("delta_a", [-7.0, -6.0, -5.0, -3.5, -3.0])
def test_boundary_matches_discriminant(delta_a):
    for r in upa.four_level_phase_boundary(delta_a, 1.0, 0.05, interval=(0.21, 15)):
        lo = upa.four_level_K(DriveParams(0.05, delta_a, 0.05, r - 1e-3)).discriminant
        hi = upa.four_level_K(DriveParams(0.05, delta_a, 0.05, r + 1e-3)).discriminant
        assert lo * hi < 0


def test_boundary_interval_errors():
    with pytest.raises(DomainError):
        upa.four_level_phase_boundary(-4, 1.0, 0.05, interval=(5, 4))
    assert upa.four_level_phase_boundary(-4, 1.0, 0.05, interval=(8, 10)) == []


def test_six_level_entries():
    d = DriveParams(0.05, -3, 0.05, 4.0)
    q0 = upa.six_level_quadratic(d, 1.0, 0.0)
    assert q0.L[0, 1] != 0
    assert q0.M[0, 0] == q0.M[1, 1] == q0.M[0, 1] == 0
    for p in (0.0, 0.3, 1.0):
        q = upa.six_level_quadratic(d, 1.0, p)
        assert q.M[0, 2] == q.M[2, 0] != 0
    z = upa.six_level_quadratic(DriveParams(0, -3, 0, 4), 1.0, 0.5)
    assert not np.any(z.L) and not np.any(z.M)
    with pytest.raises(DomainError):
        upa.six_level_quadratic(d, 1.0, 1.5)
    with pytest.raises(ResonanceError):
        upa.six_level_quadratic(DriveParams(0.05, -3, 0.05, 13 / 35), 1.0, 0.5)


def test_quadratic_form_validation():
    with pytest.raises(DomainError):
        upa.QuadraticForm(np.array([[0, 1], [0, 0]]), np.zeros((2, 2)), (0, 1))
    with pytest.raises(DomainError):
        upa.QuadraticForm(np.zeros((2, 2)), np.array([[0, 1], [0, 0]]), (0, 1))


def test_no_pairing_is_stable(rng):
    a = rng.normal(size=(3, 3))
    L = a + a.T
    res = upa.bdg_solve(upa.QuadraticForm(L, np.zeros((3, 3)), (0, 1, 2)))
    assert res.phase == "II"
    w = np.linalg.eigvalsh(L)
    assert np.allclose(np.sort(res.eigenvalues.real), np.sort(np.r_[w, -w]))


def test_vacuum_stays_vacuum():
    q = upa.QuadraticForm(np.zeros((2, 2)), np.zeros((2, 2)), (0, 1))
    out = upa.bdg_propagate_vacuum(q, [0.0, 1.0, 5.0])
    assert not np.any(out["populations"])


def test_defective_generator_raises():
    # L = M = [[k]] in one mode sits exactly at the stability edge (Jordan block)
    q = upa.QuadraticForm(np.array([[1.0]]), np.array([[1.0]]), (0,))
    with pytest.raises(DegeneracyError):
        upa.bdg_solve(q)


def test_chiral_signs():
    d = DriveParams(0.05, -3, 0.05, 4.0)
    tau = np.linspace(0, 2, 21)
    lo = upa.six_level_series(d, 1.0, 0.1, tau)["N_diff"]
    hi = upa.six_level_series(d, 1.0, 0.9, tau)["N_diff"]
    assert np.all(lo[1:] > 0) and np.all(hi[1:] < 0)


def test_bdg_property_suite(rng):
    """Quartets, symplectic invariance, nonnegative populations and the
    four-level closed form against the generic BdG propagation."""
    worst = 0.0
    for _ in range(200):
        d = _random_drives(rng)
        p = rng.uniform(0, 1)
        tau = np.linspace(0, 3, 7)
        times = upa._times(tau, d, 1.0)
        q6 = upa.six_level_quadratic(d, 1.0, p)
        res = upa.bdg_solve(q6)
        for pairs in res.quartets:
            for i, j in pairs:
                assert i == j or abs(res.eigenvalues[i]) > 0
        out = upa.bdg_propagate_vacuum(q6, times)
        worst = max(worst, upa.symplectic_drift(out["propagators"]))
        assert np.all(out["populations"] > -1e-12)
        K = upa.four_level_K(d)
        q4 = upa.four_level_quadratic(K)
        bdg = upa.bdg_propagate_vacuum(q4, times)["populations"]
        exact = upa.four_level_population(K, times)
        assert np.allclose(bdg[:, 0], exact, rtol=1e-7, atol=1e-12)
        assert np.allclose(bdg[:, 1], exact, rtol=1e-7, atol=1e-12)
        assert upa.bdg_solve(q4).unstable == (K.phase == "I")
    assert worst < 1e-9
