import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ladderhop.angular import build_cg_table, clebsch_gordan, compute_cg, magnetic_numbers
from ladderhop.errors import DomainError


def _spin_matrices(j):
    m = magnetic_numbers(j)[::-1]  # descending: |j,j>, |j,j-1>, ...
    jp = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), 1)
    return m, jp, np.diag(m)


def _cg_oracle(j1, j2):
    """Coupled basis from lowering the stretched state and Gram-Schmidt.

    Returns {(m1, m2, j, m): <j1 m1; j2 m2 | j m>} with Condon-Shortley phases.
    """
    m1s, jp1, _ = _spin_matrices(j1)
    m2s, jp2, _ = _spin_matrices(j2)
    d1, d2 = len(m1s), len(m2s)
    jm = np.kron(jp1.T, np.eye(d2)) + np.kron(np.eye(d1), jp2.T)
    found = []
    out = {}
    for j in np.arange(j1 + j2, abs(j1 - j2) - 1e-9, -1):
        # highest-weight vector of total spin j: orthogonal to larger j, total m = j
        cands = [a * d2 + b for a in range(d1) for b in range(d2) if abs(m1s[a] + m2s[b] - j) < 1e-9]
        v = np.zeros(d1 * d2)
        sub = np.eye(d1 * d2)[:, cands]
        for w in found:
            if abs(w[1] - j) < 1e-9:
                sub = sub - np.outer(w[0], w[0] @ sub)
        u, s, _ = np.linalg.svd(sub, full_matrices=False)
        v = u[:, np.argmax(s)]
        # phase: <j1 j1; j2 (j-j1) | j j> > 0
        lead = [k for k in cands if abs(m1s[k // d2] - j1) < 1e-9 and abs(v[k]) > 1e-12]
        v = v * np.sign(v[lead[0]] if lead else v[np.argmax(np.abs(v))])
        m = j
        while m >= -j - 1e-9:
            found.append((v.copy(), m))
            for k in np.nonzero(np.abs(v) > 1e-14)[0]:
                out[(m1s[k // d2], m2s[k % d2], float(j), float(m))] = v[k]
            v = jm @ v
            nrm = np.linalg.norm(v)
            if nrm < 1e-12:
                break
            v /= nrm
            m -= 1
    return out


@pytest.mark.parametrize("j1", [0.5, 1.0, 1.5, 2.5, 4.5])
def test_racah_matches_ladder_oracle(j1):
    table = _cg_oracle(j1, 1.0)
    for (m1, m2, j, m), val in table.items():
        assert clebsch_gordan(j1, m1, 1.0, m2, j, m) == pytest.approx(val, abs=1e-12)
    # and the zero pattern: everything the oracle never produced vanishes
    for m1 in magnetic_numbers(j1):
        for m2 in (-1.0, 0.0, 1.0):
            for j in np.arange(j1 + 1, max(abs(j1 - 1), 0) - 1e-9, -1):
                if (m1, m2, float(j), m1 + m2) not in table:
                    assert abs(clebsch_gordan(j1, m1, 1.0, m2, j, m1 + m2)) < 1e-12


def test_stretched_sigma_minus():
    # (F+m)(F-m+1)/(2F(F+1)) at F=m=3/2
    assert compute_cg(1.5, 1.5, -1, 1.5) ** 2 == pytest.approx(0.4, abs=1e-14)


def test_spin_half_table():
    t = build_cg_table(0.5, 0.5)
    assert t(0.5, -1) ** 2 == pytest.approx(2 / 3, abs=1e-14)


def test_table_nonzero_pattern():
    t = build_cg_table(1.5, 1.5)
    assert sorted(m for m, _ in t.nonzero(-1)) == [-0.5, 0.5, 1.5]
    assert t(-1.5, -1) == 0.0
    assert t(7.5, 1) == 0.0  # outside the table


@pytest.mark.parametrize("F", [0.5, 1.5, 2.5, 4.5])
def test_equal_f_closed_forms(F):
    for m in magnetic_numbers(F):
        assert compute_cg(F, m, -1, F) ** 2 == pytest.approx((F + m) * (F - m + 1) / (2 * F * (F + 1)), abs=1e-12)
        assert compute_cg(F, m, +1, F) ** 2 == pytest.approx((F - m) * (F + m + 1) / (2 * F * (F + 1)), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(tf=st.integers(1, 11), data=st.data())
def test_orthonormal_columns(tf, data):
    F = tf / 2
    Fe = data.draw(st.sampled_from([x for x in (F - 1, F, F + 1) if x >= 0 and not (x == 0 and F == 0)]))
    # each coupled state |F_e m_e> is normalized in the uncoupled basis
    for me in magnetic_numbers(Fe):
        s = sum(compute_cg(F, me - p, p, Fe) ** 2 for p in (-1, 0, 1) if abs(me - p) <= F)
        assert s == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("args", [(1.25, 0.25, 1, 1.25), (1.5, 0.3, 1, 1.5), (-1.5, 0.5, 1, 1.5)])
def test_bad_quantum_numbers(args):
    with pytest.raises(DomainError):
        compute_cg(*args)


def test_bad_polarization():
    with pytest.raises(DomainError):
        compute_cg(1.5, 0.5, 2, 1.5)
