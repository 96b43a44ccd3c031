"""Synthetic two-leg ladder of ground sublevels and its collective operators.

For F_g = F_e = F the ground-manifold operators in Schwinger-boson form are

    D_L = sum_m (C_m^-)^2 n_m,   D_R = sum_m (C_m^+)^2 n_m,
    T+  = sum_m C_m^+ C_{m+2}^- a^dag_{m+2} a_m,    T- = (T+)^dag,

where C_m^p are Clebsch-Gordan coefficients of the F -> F transition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ladderhop.angular import CGTable, build_cg_table, magnetic_numbers
from ladderhop.errors import DomainError
from ladderhop.fock import (
    FockBasis,
    ProductBasis,
    SparseOperator,
    diagonal_operator,
    mode_bilinear,
    zero,
)


@dataclass(frozen=True)
class LevelScheme:
    F: float
    cg: CGTable = field(init=False, repr=False)

    def __post_init__(self):
        tf = round(2 * self.F)
        if abs(2 * self.F - tf) > 1e-9 or tf <= 0:
            raise DomainError(f"hyperfine spin F={self.F!r} must be a positive half-integer")
        if tf % 2 == 0:
            raise DomainError(f"integer F={self.F!r} is not supported; the two-leg ladder needs half-integer F")
        object.__setattr__(self, "F", tf / 2.0)
        object.__setattr__(self, "cg", build_cg_table(self.F, self.F))

    @property
    def modes(self) -> tuple:
        return tuple(float(m) for m in magnetic_numbers(self.F))

    @property
    def upper_leg(self) -> tuple:
        return self.modes[1::2]

    @property
    def lower_leg(self) -> tuple:
        return self.modes[0::2]

    @property
    def norm(self) -> float:
        """N_F = 2F(F+1)."""
        return 2 * self.F * (self.F + 1)

    def leg(self, m: float) -> str:
        m = float(m)
        if m in self.upper_leg:
            return "upper"
        if m in self.lower_leg:
            return "lower"
        raise DomainError(f"m={m!r} is not a ground sublevel of F={self.F}")

    def dl_coeff(self, m: float) -> float:
        return self.cg(m, -1) ** 2

    def dr_coeff(self, m: float) -> float:
        return self.cg(m, +1) ** 2

    def hop_coeff(self, m: float) -> float:
        """Amplitude of a^dag_{m+2} a_m in T+."""
        return self.cg(m, +1) * self.cg(m + 2, -1)


def site_coordinate(scheme: LevelScheme, m: float) -> int:
    """Synthetic site index: lower leg r = (m+F)/2, upper leg r = (m-F)/2.

    Both end sites g_{-F} (lower) and g_{F} (upper) sit at r = 0.
    """
    if scheme.leg(m) == "lower":
        return int(round((m + scheme.F) / 2))
    return int(round((m - scheme.F) / 2))


def site_mode(scheme: LevelScheme, r: int) -> float:
    """Mode read for correlator site r: r >= 0 on the lower leg, r < 0 on the upper leg."""
    m = 2 * r - scheme.F if r >= 0 else 2 * r + scheme.F
    if abs(m) > scheme.F + 1e-9:
        raise DomainError(f"site r={r} lies outside the ladder for F={scheme.F}")
    return float(m)


@dataclass(frozen=True)
class LadderOperators:
    D_L: SparseOperator
    D_R: SparseOperator
    T_plus: SparseOperator
    T_minus: SparseOperator
    basis: object


def _ground_modes(basis) -> tuple:
    return basis.modes


def build_ladder_operators(
    scheme: LevelScheme,
    basis,
    *,
    label: Callable[[float], object] | None = None,
) -> LadderOperators:
    """D_L, D_R, T+ and T- on a Fock or product basis.

    ``label`` maps a ground sublevel m to the basis mode label (identity by
    default); sublevels whose label is absent from the basis are skipped.
    """
    label = label or (lambda m: m)
    present = set(_ground_modes(basis))
    ground = [m for m in scheme.modes if label(m) in present]
    if not ground:
        raise DomainError("basis holds none of the scheme's ground sublevels")
    for mode in present:
        if not any(label(m) == mode for m in scheme.modes) and _is_plain_label(mode):
            raise DomainError(f"basis mode {mode!r} is not a ground sublevel of F={scheme.F}")

    if isinstance(basis, FockBasis | ProductBasis):
        modes, occ = basis.occupations()
    else:
        raise DomainError(f"unsupported basis type {type(basis).__name__}")
    col = {mode: k for k, mode in enumerate(modes)}
    dl = np.zeros(basis.dim)
    dr = np.zeros(basis.dim)
    for m in ground:
        dl += scheme.dl_coeff(m) * occ[:, col[label(m)]]
        dr += scheme.dr_coeff(m) * occ[:, col[label(m)]]
    D_L = diagonal_operator(basis, dl)
    D_R = diagonal_operator(basis, dr)

    T_plus = zero(basis)
    for m in ground:
        target = m + 2
        if label(target) not in present:
            continue
        w = scheme.hop_coeff(m)
        if w != 0.0:
            T_plus = T_plus + mode_bilinear(basis, label(target), label(m), w)
    T_plus = SparseOperator(basis, T_plus.matrix, False)
    return LadderOperators(D_L, D_R, T_plus, T_plus.adjoint(), basis)


def _is_plain_label(mode) -> bool:
    return isinstance(mode, (int, float, np.floating, np.integer))


def mode_populations(state: np.ndarray, basis) -> dict:
    """<n_m> for every basis mode label."""
    modes, occ = basis.occupations()
    prob = np.abs(state) ** 2
    return dict(zip(modes, prob @ occ))


def leg_populations(state: np.ndarray, scheme: LevelScheme, basis) -> tuple[float, float]:
    norm = np.linalg.norm(state)
    if abs(norm - 1) > 1e-8:
        raise DomainError(f"state is not normalized (norm={norm:.3e})")
    pops = mode_populations(state, basis)
    up = sum(v for m, v in pops.items() if m in scheme.upper_leg)
    lo = sum(v for m, v in pops.items() if m in scheme.lower_leg)
    return float(up), float(lo)


def leg_bases(scheme: LevelScheme, n_upper: int, n_lower: int, **kw) -> ProductBasis:
    """Product basis with n_upper atoms on the upper leg and n_lower on the lower leg."""
    from ladderhop.fock import enumerate_basis, product_basis

    return product_basis(
        enumerate_basis(scheme.upper_leg, n_upper, **kw),
        enumerate_basis(scheme.lower_leg, n_lower, **kw),
        **kw,
    )


def ground_basis(scheme: LevelScheme, n_first: int, n_second: int, **kw) -> ProductBasis:
    """Two permutation-symmetric groups, each free to occupy every ground sublevel."""
    from ladderhop.fock import enumerate_basis, product_basis

    return product_basis(
        enumerate_basis(scheme.modes, n_first, **kw),
        enumerate_basis(scheme.modes, n_second, **kw),
        **kw,
    )


def jz_weights(scheme: LevelScheme, label: Callable[[float], object] | None = None) -> dict:
    label = label or (lambda m: m)
    return {label(m): m for m in scheme.modes}
