import numpy as np
import pytest

from ladderhop.dynamics import InitialStateSpec, initial_state
from ladderhop.errors import DomainError
from ladderhop.fock import enumerate_basis
from ladderhop.ladder import (
    LevelScheme,
    build_ladder_operators,
    ground_basis,
    leg_bases,
    leg_populations,
    mode_populations,
    site_coordinate,
    site_mode,
)


def test_scheme_validation():
    with pytest.raises(DomainError):
        LevelScheme(2.0)
    with pytest.raises(DomainError):
        LevelScheme(-1.5)
    s = LevelScheme(4.5)
    assert s.upper_leg == (-3.5, -1.5, 0.5, 2.5, 4.5)
    assert s.lower_leg == (-4.5, -2.5, -0.5, 1.5, 3.5)
    assert s.norm == pytest.approx(49.5)


def test_dl_on_end_sites(f32):
    # n_{-3/2} = n_{3/2} = N/2 on the full ground basis: <D_L> = N/5
    n = 10
    b = enumerate_basis(f32.modes, n)
    ops = build_ladder_operators(f32, b)
    k = b.index[(5, 0, 0, 5)]
    assert ops.D_L.diagonal()[k] == pytest.approx(n / 5)
    assert f32.dl_coeff(0.5) == pytest.approx(8 / 15)


def test_lowering_below_bottom_vanishes(f32):
    b = enumerate_basis(f32.lower_leg, 3)
    ops = build_ladder_operators(f32, b)
    psi = np.zeros(b.dim)
    psi[b.index[(3, 0)]] = 1
    assert np.linalg.norm(ops.T_minus.matrix @ psi) == 0


def test_hop_coefficients(f52):
    b = enumerate_basis(f52.modes, 1)
    ops = build_ladder_operators(f52, b)
    t = ops.T_plus.toarray()
    for m in f52.modes[:-2]:
        i, j = b.index[tuple(int(x == m + 2) for x in f52.modes)], b.index[tuple(int(x == m) for x in f52.modes)]
        assert t[i, j] == pytest.approx(f52.cg(m, 1) * f52.cg(m + 2, -1))
    assert np.allclose(ops.T_minus.toarray(), t.T)


def test_unknown_mode_rejected(f32):
    with pytest.raises(DomainError):
        build_ladder_operators(f32, enumerate_basis((-1.5, 0.25), 1))


def test_leg_operators_conserve_legs(f32):
    b = ground_basis(f32, 2, 1)
    ops = build_ladder_operators(f32, b)
    modes, occ = b.occupations()
    upper = occ[:, [k for k, m in enumerate(modes) if m in f32.upper_leg]].sum(axis=1)
    t = ops.T_plus.matrix.tocoo()
    assert np.all(upper[t.row] == upper[t.col])


def test_site_coordinates():
    s = LevelScheme(4.5)
    assert site_coordinate(s, -4.5) == 0
    assert site_coordinate(s, 1.5) == 3
    assert site_coordinate(s, 4.5) == 0
    assert site_coordinate(s, 0.5) == -2
    for r in range(-4, 5):
        assert site_coordinate(s, site_mode(s, r)) == r
    with pytest.raises(DomainError):
        site_mode(s, 5)


def test_leg_populations(f32):
    b = leg_bases(f32, 5, 5)
    psi = initial_state(b, InitialStateSpec.single(1.5, -1.5))
    assert leg_populations(psi, f32, b) == pytest.approx((5, 5))
    with pytest.raises(DomainError):
        leg_populations(2 * psi, f32, b)
    one = enumerate_basis(f32.modes, 1)
    psi = np.zeros(one.dim)
    for m in f32.upper_leg:
        psi[one.index[tuple(int(x == m) for x in f32.modes)]] = 1 / np.sqrt(2)
    assert leg_populations(psi, f32, one) == pytest.approx((1, 0))
    assert sum(mode_populations(psi, one).values()) == pytest.approx(1)
