"""Effective ground-state Hamiltonian after eliminating the dressed excited manifold.

Exact form, per drive nu with G_R = (Delta_nu - chi D_R)^-1:

    H_eff = sum_nu |Omega_nu|^2 Delta_nu / chi * M_nu^-1,
    M_nu  = Delta_nu - chi D_L - chi^2 T+ G_R T-

Second-order perturbation theory gives this plus the c-number
-sum_nu |Omega_nu|^2 / chi, which is dropped (global phase).

Leading-order form:

    H_eff ~ sum_nu |Omega_nu|^2/Delta_nu D_L + |Omega_nu|^2 chi/Delta_nu^2 (D_L D_L + T+ T-)

Units: hbar = 1, energies in units of chi*N, so chi = chi_n / N.

Every term conserves J_z = sum_m m n_m, so M_nu is block diagonal in J_z
sectors and so is its inverse; blocks are inverted independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ladderhop.errors import CapabilityError, DiagnosticError, DomainError, ResonanceError
from ladderhop.fock import SparseOperator, sector_labels, split_sectors
from ladderhop.ladder import LevelScheme, build_ladder_operators, jz_weights

DENSE_CAP = 4000
EPS_RES = 1e-8
COND_MAX = 1e12


@dataclass(frozen=True)
class DriveParams:
    """Two sigma^- drives; Rabi frequencies and detunings in units of chi*N."""

    omega_a: float = 0.05
    delta_a: float = -3.0
    omega_b: float = 0.05
    delta_b: float = 4.1

    def __post_init__(self):
        for name, om, de in (("A", self.omega_a, self.delta_a), ("B", self.omega_b, self.delta_b)):
            if om != 0 and de == 0:
                raise DomainError(f"drive {name} is active but has zero detuning")

    def active(self) -> list[tuple[str, float, float]]:
        """(name, |Omega|^2, Delta) for every drive with nonzero amplitude."""
        out = []
        if self.omega_a != 0:
            out.append(("A", abs(self.omega_a) ** 2, self.delta_a))
        if self.omega_b != 0:
            out.append(("B", abs(self.omega_b) ** 2, self.delta_b))
        return out

    @property
    def reference_omega(self) -> float:
        """Rabi frequency that sets the time unit tau = Omega^2 t / (2 pi chi N)."""
        return max(abs(self.omega_a), abs(self.omega_b))


class _SolveBlock:
    """Linear map v -> sum_k c_k M_k^-1 v backed by sparse LU factors."""

    def __init__(self, terms):
        self.terms = terms  # list of (coef, SuperLU)
        self.shape = terms[0][1].shape if terms else (0, 0)

    def __matmul__(self, v):
        v = np.asarray(v)
        out = np.zeros(v.shape, dtype=np.result_type(v, float))
        for coef, lu in self.terms:
            if np.iscomplexobj(v):
                out += coef * (lu.solve(np.ascontiguousarray(v.real)) + 1j * lu.solve(np.ascontiguousarray(v.imag)))
            else:
                out += coef * lu.solve(np.ascontiguousarray(v))
        return out


@dataclass(eq=False)
class EffectiveHamiltonian:
    mode: str
    basis: object
    scheme: LevelScheme
    drives: DriveParams
    chi_n: float
    sectors: list
    sector_charges: np.ndarray
    blocks: list = field(repr=False)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def explicit(self) -> bool:
        return all(b is None or isinstance(b, np.ndarray) for b in self.blocks)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        out = np.zeros(v.shape, dtype=np.result_type(v, float))
        for idx, block in zip(self.sectors, self.blocks):
            if block is None:
                if np.any(v[idx]):
                    raise CapabilityError("vector has weight in a sector that was not built")
                continue
            out[idx] = block @ v[idx]
        return out

    __matmul__ = matvec

    def tosparse(self) -> sp.csr_matrix:
        if not self.explicit:
            raise CapabilityError("some sectors are only available as solve-based linear maps")
        rows, cols, vals = [], [], []
        for idx, block in zip(self.sectors, self.blocks):
            if block is None:
                continue
            r, c = np.nonzero(block)
            rows.append(idx[r])
            cols.append(idx[c])
            vals.append(block[r, c])
        if not rows:
            return sp.csr_matrix((self.dim, self.dim))
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(self.dim, self.dim)
        )

    def toarray(self) -> np.ndarray:
        return self.tosparse().toarray()

    def operator(self) -> SparseOperator:
        return SparseOperator(self.basis, self.tosparse(), True)

    def sector_of(self, k: int) -> int:
        for s, idx in enumerate(self.sectors):
            if k in idx:
                return s
        raise DomainError(f"basis index {k} out of range")

    def sector_block_dense(self, s: int) -> np.ndarray:
        block = self.blocks[s]
        if isinstance(block, np.ndarray):
            return block
        if block is None:
            raise CapabilityError(f"sector {s} was not built")
        raise CapabilityError(f"sector {s} (dim {len(self.sectors[s])}) exceeds the dense cap")

    @cached_property
    def _eig_cache(self) -> dict:
        return {}

    def sector_eigh(self, s: int):
        if s not in self._eig_cache:
            self._eig_cache[s] = la.eigh(self.sector_block_dense(s))
        return self._eig_cache[s]

    def expectation(self, psi: np.ndarray) -> float:
        return float(np.real(np.vdot(psi, self.matvec(psi))))

    def hermiticity_residual(self) -> float:
        res = 0.0
        for block in self.blocks:
            if isinstance(block, np.ndarray) and block.size:
                res = max(res, float(np.max(np.abs(block - block.conj().T))))
        return res


def _sectors(scheme, basis, label):
    charges = sector_labels(basis, jz_weights(scheme, label))
    sectors = split_sectors(charges)
    return sectors, np.array([charges[idx[0]] for idx in sectors])


def _wanted(sectors, support) -> list[bool]:
    if support is None:
        return [True] * len(sectors)
    support = np.asarray(support)
    return [bool(np.any(support[idx])) for idx in sectors]


def _fock_label(basis, k: int) -> str:
    modes, occ = basis.occupations()
    parts = [f"{m:+g}:{n}" if isinstance(m, float) else f"{m}:{n}" for m, n in zip(modes, occ[k]) if n]
    return "|" + ", ".join(parts) + ">"


def build_heff_exact(
    scheme: LevelScheme,
    basis,
    drives: DriveParams,
    chi_n: float = 1.0,
    *,
    dense_cap: int = DENSE_CAP,
    eps_res: float = EPS_RES,
    cond_max: float = COND_MAX,
    label=None,
    support: np.ndarray | None = None,
) -> EffectiveHamiltonian:
    """Exact H_eff. With ``support`` only the J_z sectors where that state
    has weight are built; the rest are left as ``None``."""
    n_atoms = basis.particles
    if n_atoms <= 0:
        raise DomainError("effective Hamiltonian needs at least one atom")
    chi = chi_n / n_atoms
    ops = build_ladder_operators(scheme, basis, label=label)
    d_l = ops.D_L.diagonal().real
    d_r = ops.D_R.diagonal().real
    t_plus = ops.T_plus.matrix.real.tocsr()
    t_minus = t_plus.T.tocsr()
    sectors, charges = _sectors(scheme, basis, label)
    wanted = _wanted(sectors, support)

    dense_blocks = [np.zeros((len(idx), len(idx))) if w else None for idx, w in zip(sectors, wanted)]
    solve_terms = [[] for _ in sectors]
    lam_min, lam_max = np.inf, 0.0
    for name, om2, delta in drives.active():
        denom = delta - chi * d_r
        bad = np.nonzero(np.abs(denom) < eps_res * chi_n)[0]
        if support is not None:
            # G_R acts on the T- image of the built sectors (J_z lowered by 2)
            live = np.zeros(basis.dim)
            for s, idx in enumerate(sectors):
                live[idx] = wanted[s]
            live = (abs(t_minus) @ live) > 0
            bad = bad[live[bad]]
            denom = np.where(live, denom, 1.0)
        if bad.size:
            raise ResonanceError(
                f"drive {name}: Delta - chi D_R vanishes on Fock state {_fock_label(basis, bad[0])}"
            )
        g_r = sp.diags(1.0 / denom)
        m_full = (sp.diags(delta - chi * d_l) - chi**2 * (t_plus @ g_r @ t_minus)).tocsr()
        coef = om2 * delta / chi
        for s, idx in enumerate(sectors):
            if not wanted[s]:
                continue
            block = m_full[idx][:, idx]
            if len(idx) <= dense_cap:
                lam, vec = la.eigh(block.toarray())
                amin = np.min(np.abs(lam))
                lam_min, lam_max = min(lam_min, amin), max(lam_max, np.max(np.abs(lam)))
                if amin < eps_res * chi_n:
                    raise ResonanceError(
                        f"drive {name}: M_nu is singular in the J_z={charges[s] / 2:g} sector (|lambda|={amin:.2e})"
                    )
                dense_blocks[s] += coef * (vec / lam) @ vec.T
            else:
                lu = spla.splu(block.tocsc())
                _check_sparse_conditioning(block, name, eps_res * chi_n, cond_max)
                solve_terms[s].append((coef, lu))
    if lam_min < np.inf and lam_max / lam_min > cond_max:
        raise ResonanceError(f"M_nu is ill-conditioned (cond={lam_max / lam_min:.2e})")

    blocks = []
    for s, idx in enumerate(sectors):
        if not wanted[s]:
            blocks.append(None)
        elif len(idx) <= dense_cap:
            b = dense_blocks[s]
            blocks.append(0.5 * (b + b.T))
        else:
            blocks.append(_SolveBlock(solve_terms[s]) if solve_terms[s] else sp.csr_matrix((len(idx), len(idx))))
    return EffectiveHamiltonian("exact", basis, scheme, drives, chi_n, sectors, charges, blocks)


def _check_sparse_conditioning(block, name, floor, cond_max):
    big = spla.eigsh(block, k=1, which="LM", return_eigenvectors=False)[0]
    small = spla.eigsh(block, k=1, sigma=0, which="LM", return_eigenvectors=False)[0]
    if abs(small) < floor or abs(big / small) > cond_max:
        raise ResonanceError(f"drive {name}: M_nu is ill-conditioned (smallest |lambda|={abs(small):.2e})")


def perturbative_matrix(scheme, basis, drives, chi_n=1.0, *, label=None) -> sp.csr_matrix:
    chi = chi_n / basis.particles
    ops = build_ladder_operators(scheme, basis, label=label)
    d_l = ops.D_L.matrix.real
    tt = (ops.T_plus.matrix @ ops.T_minus.matrix).real
    h = sp.csr_matrix(d_l.shape)
    for _, om2, delta in drives.active():
        h = h + (om2 / delta) * d_l + (om2 * chi / delta**2) * (d_l @ d_l + tt)
    return h.tocsr()


def build_heff_perturbative(
    scheme: LevelScheme,
    basis,
    drives: DriveParams,
    chi_n: float = 1.0,
    *,
    dense_cap: int = DENSE_CAP,
    label=None,
) -> EffectiveHamiltonian:
    h = perturbative_matrix(scheme, basis, drives, chi_n, label=label)
    sectors, charges = _sectors(scheme, basis, label)
    blocks = []
    for idx in sectors:
        block = h[idx][:, idx]
        blocks.append(block.toarray() if len(idx) <= dense_cap else block.tocsr())
    return EffectiveHamiltonian("perturbative", basis, scheme, drives, chi_n, sectors, charges, blocks)


def hop_matrix_element(scheme, basis, initial, final, *, label=None) -> float:
    ops = build_ladder_operators(scheme, basis, label=label)
    return float(np.real(np.vdot(final, ops.T_plus.matrix @ (ops.T_minus.matrix @ initial))))


def shift_suppression_diagnostic(
    scheme: LevelScheme,
    basis,
    drives: DriveParams,
    chi_n: float,
    initial: np.ndarray,
    final: np.ndarray,
    *,
    heff: EffectiveHamiltonian | None = None,
) -> tuple[float, float, float]:
    """(|<i|H|i> - <f|H|f>|, |sum_nu Omega^2 chi/Delta^2 <f|T+T-|i>|, ratio).

    Correlated hopping dominates the energy shifts when ratio << 1.
    """
    chi = chi_n / basis.particles
    element = hop_matrix_element(scheme, basis, initial, final)
    if abs(element) < 1e-14:
        raise DiagnosticError("<f|T+T-|i> vanishes: the states are not connected by correlated hopping")
    h = heff if heff is not None else build_heff_exact(scheme, basis, drives, chi_n)
    gap = abs(h.expectation(initial) - h.expectation(final))
    hop = abs(sum(om2 * chi / delta**2 for _, om2, delta in drives.active()) * element)
    if hop == 0.0:
        raise DiagnosticError("no active drive: hopping strength is zero")
    return gap, hop, gap / hop


def strongest_hop_target(scheme, basis, initial: np.ndarray, *, label=None) -> np.ndarray:
    """Basis vector f != support(initial) maximizing |<f|T+T-|i>|."""
    ops = build_ladder_operators(scheme, basis, label=label)
    amp = np.abs(ops.T_plus.matrix @ (ops.T_minus.matrix @ initial))
    amp[np.abs(initial) > 0] = 0.0
    k = int(np.argmax(amp))
    if amp[k] == 0.0:
        raise DiagnosticError("initial state has no correlated-hopping partner")
    out = np.zeros(basis.dim)
    out[k] = 1.0
    return out
