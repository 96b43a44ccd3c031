"""Full driven model on the ground + excited Fock space.

In the frame rotating at drive A,

    H(t) = -Delta_A N_e + chi (L+ L- + R+ R-) + Omega_A (L+ + L-)
           + delta_e F_e^z + delta_g F_g^z
           + Omega_B (e^{-i delta t} L+ + e^{i delta t} L-),    delta = Delta_B - Delta_A

with L+ = sum_m C_m^- |e_{m-1}><g_m| and R+ = sum_m C_m^+ |e_{m+1}><g_m|
summed over atoms. Every term conserves N_e + J_z.

The drive-B term is periodic with T = 2 pi / delta, so the one-period
propagator is built once (Strang steps, Romberg-extrapolated over step
halvings) and powers of it come from its Schur form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from ladderhop.dynamics import evolve, initial_state, tau_to_time
from ladderhop.errors import DomainError, NumericalError
from ladderhop.fock import (
    DEFAULT_DIM_CAP,
    ProductBasis,
    enumerate_basis,
    mode_bilinear,
    product_basis,
    sector_labels,
    split_sectors,
)
from ladderhop.heff import DriveParams, build_heff_exact
from ladderhop.ladder import LevelScheme, build_ladder_operators, ground_basis, leg_bases
from ladderhop.results import TimeSeries

MU_B_MHZ_PER_G = 1.39962449
LANDE_E = 2 / 33
LANDE_G = -1.3e-4
EXCITED_WARN = 0.05


def g(m: float) -> tuple:
    return ("g", float(m))


def e(m: float) -> tuple:
    return ("e", float(m))


@dataclass(frozen=True)
class ZeemanParams:
    """Linear Zeeman shifts per unit m, in units of chi N."""

    delta_e: float = 0.0
    delta_g: float = 0.0

    @classmethod
    def from_field(cls, b_gauss: float, chi_n_mhz: float = 1.0, lande_e: float = LANDE_E, lande_g: float = LANDE_G):
        """Shifts for a field B (gauss); chi N is given as a frequency in MHz."""
        if chi_n_mhz <= 0:
            raise DomainError("chi N must be positive")
        unit = MU_B_MHZ_PER_G * b_gauss / chi_n_mhz
        return cls(lande_e * unit, lande_g * unit)

    @property
    def active(self) -> bool:
        return self.delta_e != 0.0 or self.delta_g != 0.0


def full_modes(scheme: LevelScheme) -> tuple:
    return tuple(sorted([e(m) for m in scheme.modes] + [g(m) for m in scheme.modes]))


def full_basis(scheme: LevelScheme, n_first: int, n_second: int, *, dim_cap: int = DEFAULT_DIM_CAP) -> ProductBasis:
    """Two permutation-symmetric groups over the 2(2F+1) ground and excited modes."""
    modes = full_modes(scheme)
    return product_basis(
        enumerate_basis(modes, n_first, dim_cap=dim_cap),
        enumerate_basis(modes, n_second, dim_cap=dim_cap),
        dim_cap=dim_cap,
    )


def charge_weights(scheme: LevelScheme) -> dict:
    """Weights of N_e + J_z."""
    w = {g(m): m for m in scheme.modes}
    w.update({e(m): 1.0 + m for m in scheme.modes})
    return w


@dataclass(frozen=True)
class CollectiveOps:
    L_plus: sp.csr_matrix
    R_plus: sp.csr_matrix
    n_e: np.ndarray  # diagonal
    jz_e: np.ndarray
    jz_g: np.ndarray
    ground: np.ndarray  # bool mask of zero-excitation states


def collective_operators(scheme: LevelScheme, basis: ProductBasis) -> CollectiveOps:
    lp = None
    rp = None
    for m in scheme.modes:
        c_minus = scheme.cg(m, -1)
        if c_minus != 0.0 and abs(m - 1) <= scheme.F:
            term = mode_bilinear(basis, e(m - 1), g(m), c_minus).matrix
            lp = term if lp is None else lp + term
        c_plus = scheme.cg(m, +1)
        if c_plus != 0.0 and abs(m + 1) <= scheme.F:
            term = mode_bilinear(basis, e(m + 1), g(m), c_plus).matrix
            rp = term if rp is None else rp + term
    modes, occ = basis.occupations()
    is_e = np.array([lab[0] == "e" for lab in modes])
    mval = np.array([lab[1] for lab in modes])
    n_e = occ[:, is_e].sum(axis=1).astype(float)
    return CollectiveOps(
        lp.tocsr(),
        rp.tocsr(),
        n_e,
        occ[:, is_e] @ mval[is_e],
        occ[:, ~is_e] @ mval[~is_e],
        n_e == 0,
    )


@dataclass(eq=False)
class FullHamiltonian:
    scheme: LevelScheme
    basis: ProductBasis
    drives: DriveParams
    chi_n: float
    zeeman: ZeemanParams
    static: sp.csr_matrix = field(repr=False)  # H_s
    drive: sp.csr_matrix = field(repr=False)  # X = L+ + L- (multiplied by Omega_B)
    ops: CollectiveOps = field(repr=False)
    charges: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def frequency(self) -> float:
        """Oscillation frequency of drive B in the rotating frame."""
        return self.drives.delta_b - self.drives.delta_a

    @property
    def periodic(self) -> bool:
        return self.drives.omega_b != 0 and self.frequency != 0

    def at(self, t: float) -> sp.csr_matrix:
        """H(t) as a sparse matrix."""
        lp = self.ops.L_plus
        ph = np.exp(-1j * self.frequency * t)
        return (self.static + self.drives.omega_b * (ph * lp + np.conj(ph) * lp.getH())).tocsr()


def build_full(
    scheme: LevelScheme,
    n_per_group: tuple[int, int],
    drives: DriveParams,
    chi_n: float = 1.0,
    zeeman: ZeemanParams | None = None,
    *,
    dim_cap: int = DEFAULT_DIM_CAP,
) -> FullHamiltonian:
    zeeman = zeeman or ZeemanParams()
    if not isinstance(zeeman, ZeemanParams) or not all(np.isfinite([zeeman.delta_e, zeeman.delta_g])):
        raise DomainError(f"invalid Zeeman specification {zeeman!r}")
    n1, n2 = n_per_group
    if n1 + n2 <= 0:
        raise DomainError("need at least one atom")
    basis = full_basis(scheme, n1, n2, dim_cap=dim_cap)
    ops = collective_operators(scheme, basis)
    chi = chi_n / basis.particles
    lp, rp = ops.L_plus, ops.R_plus
    h0 = (
        sp.diags(-drives.delta_a * ops.n_e + zeeman.delta_e * ops.jz_e + zeeman.delta_g * ops.jz_g)
        + chi * (lp @ lp.T + rp @ rp.T)
    )
    x = (lp + lp.T).tocsr()
    static = (h0 + drives.omega_a * x).tocsr()
    charges = sector_labels(basis, charge_weights(scheme))
    return FullHamiltonian(scheme, basis, drives, chi_n, zeeman, static, x, ops, charges)


# --------------------------------------------------------------------------
# operator identities and brute-force elimination


def _identity_terms(scheme: LevelScheme, n_atoms: int, delta_a: float, chi_n: float):
    basis = full_basis(scheme, (n_atoms + 1) // 2, n_atoms // 2)
    ops = collective_operators(scheme, basis)
    chi = chi_n / n_atoms
    lp, rp = ops.L_plus, ops.R_plus
    h0 = sp.diags(-delta_a * ops.n_e) + chi * (lp @ lp.T + rp @ rp.T)
    pg = sp.diags(ops.ground.astype(float))
    lad = build_ladder_operators(scheme, basis, label=g)
    d_l, d_r = lad.D_L.matrix, lad.D_R.matrix
    t_p, t_m = lad.T_plus.matrix, lad.T_minus.matrix
    eye = sp.identity(basis.dim)
    return h0, lp @ pg, rp @ pg, d_l, d_r, t_p, t_m, eye, chi


def verify_operator_identities(
    scheme: LevelScheme, n_atoms: int, *, delta_a: float = -3.0, chi_n: float = 1.0, swapped: bool = False
) -> tuple[float, float]:
    """Max-norm residuals of the two elimination identities

        H0 L+ P_g = (L+ P_g)(-Delta_A + chi D_L) + (R+ P_g)(chi T-)
        H0 R+ P_g = (R+ P_g)(-Delta_A + chi D_R) + (L+ P_g)(chi T+)

    With ``swapped`` the ground operators are applied on the left instead,
    which should leave an O(chi) residual.
    """
    if n_atoms > 4:
        raise DomainError("identity check builds dense full-space matrices; use N <= 4")
    h0, lpg, rpg, d_l, d_r, t_p, t_m, eye, chi = _identity_terms(scheme, n_atoms, delta_a, chi_n)
    if swapped:
        rhs1 = (-delta_a * eye + chi * d_l) @ lpg + chi * t_m @ rpg
        rhs2 = (-delta_a * eye + chi * d_r) @ rpg + chi * t_p @ lpg
    else:
        rhs1 = lpg @ (-delta_a * eye + chi * d_l) + rpg @ (chi * t_m)
        rhs2 = rpg @ (-delta_a * eye + chi * d_r) + lpg @ (chi * t_p)
    res1 = abs(h0 @ lpg - rhs1).max()
    res2 = abs(h0 @ rpg - rhs2).max()
    return float(res1), float(res2)


def brute_force_heff(
    scheme: LevelScheme, n_first: int, n_second: int, drives: DriveParams, chi_n: float = 1.0
) -> tuple[ProductBasis, np.ndarray]:
    """-sum_nu |Omega_nu|^2 P_g L- (H0_nu |_{N_e=1})^-1 L+ P_g, returned on the
    ground-only product basis (same index order as ``ground_basis``)."""
    basis = full_basis(scheme, n_first, n_second)
    ops = collective_operators(scheme, basis)
    chi = chi_n / basis.particles
    lp, rp = ops.L_plus, ops.R_plus
    inter = chi * (lp @ lp.T + rp @ rp.T)
    gidx = np.nonzero(ops.ground)[0]
    xidx = np.nonzero(ops.n_e == 1)[0]
    lp_block = lp[xidx][:, gidx].toarray()
    total = np.zeros((gidx.size, gidx.size))
    for _, om2, delta in drives.active():
        h0 = (sp.diags(-delta * ops.n_e) + inter)[xidx][:, xidx].toarray()
        total -= om2 * lp_block.T @ la.solve(h0, lp_block, assume_a="sym")
    gb = ground_basis(scheme, n_first, n_second)
    perm = _ground_index_map(basis, gb, gidx)
    out = np.zeros_like(total)
    out[np.ix_(perm, perm)] = total
    return gb, out


def _ground_index_map(basis: ProductBasis, gb: ProductBasis, gidx: np.ndarray) -> np.ndarray:
    """Position in ``gb`` of each zero-excitation state listed in ``gidx``."""
    cols = [basis.upper.modes.index(g(m)) for m in gb.upper.modes]
    iu, il = np.divmod(gidx, basis.lower.dim)
    up = gb.upper.lookup(basis.upper.states[iu][:, cols])
    lo = gb.lower.lookup(basis.lower.states[il][:, cols])
    if np.any(up < 0) or np.any(lo < 0):
        raise DomainError("ground states do not map onto the ground basis")
    return gb.composite(up, lo)


# --------------------------------------------------------------------------
# time integration


@dataclass
class _Sector:
    idx: np.ndarray
    hs: np.ndarray
    x: np.ndarray
    n_e: np.ndarray
    eig_s: tuple = field(init=False, repr=False)
    eig_x: tuple = field(init=False, repr=False)

    def __post_init__(self):
        self.eig_s = la.eigh(self.hs)
        self.eig_x = la.eigh(self.x)

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.eig_s[0])))

    def exp_static(self, s: float) -> np.ndarray:
        w, v = self.eig_s
        return (v * np.exp(-1j * s * w)) @ v.conj().T

    def exp_drive(self, s: float) -> np.ndarray:
        w, v = self.eig_x
        return (v * np.exp(-1j * s * w)) @ v.conj().T


def _strang_matrix(sec: _Sector, span: float, n: int, omega_b: float, freq: float) -> np.ndarray:
    """Product of n symmetric steps exp(-iH_s h/2) exp(-iV(t_mid) h) exp(-iH_s h/2);
    adjacent half steps are merged into one full static step."""
    h = span / n
    half, full, kick = sec.exp_static(h / 2), sec.exp_static(h), sec.exp_drive(h * omega_b)
    u = half
    for k in range(n):
        ph = np.exp(-1j * freq * (k + 0.5) * h * sec.n_e)
        u = ph[:, None] * (kick @ (np.conj(ph)[:, None] * u))
        u = (full if k < n - 1 else half) @ u
    return u


def _strang_vector(sec: _Sector, v: np.ndarray, span: float, n: int, omega_b: float, freq: float) -> np.ndarray:
    """Same splitting applied to a vector in the static/drive eigenbases."""
    h = span / n
    ws, vs = sec.eig_s
    wx, vx = sec.eig_x
    ps_half, ps_full = np.exp(-0.5j * h * ws), np.exp(-1j * h * ws)
    px = np.exp(-1j * h * omega_b * wx)
    # a = coefficients in the static eigenbasis
    a = ps_half * (vs.conj().T @ v)
    for k in range(n):
        ph = np.exp(-1j * freq * (k + 0.5) * h * sec.n_e)
        y = np.conj(ph) * (vs @ a)
        y = ph * (vx @ (px * (vx.conj().T @ y)))
        a = (ps_full if k < n - 1 else ps_half) * (vs.conj().T @ y)
    return vs @ a


def _romberg(run, n: int):
    """Two-level Richardson extrapolation for an even-order (h^2, h^4, ...) method."""
    a, b, c = run(n), run(2 * n), run(4 * n)
    r1 = (4 * b - a) / 3
    r1b = (4 * c - b) / 3
    r2 = (16 * r1b - r1) / 15
    return r2, float(np.max(np.abs(r2 - r1b)))


def _polar(u: np.ndarray) -> np.ndarray:
    w, _, vh = la.svd(u)
    return w @ vh


@dataclass
class IntegrationReport:
    steps_per_period: int
    period: float
    error_estimate: float
    max_excited_fraction: float
    sectors: list


def integrate(
    H: FullHamiltonian,
    psi0: np.ndarray,
    tau_grid,
    *,
    omega: float | None = None,
    tol: float = 1e-5,
    min_steps: int = 40,
    max_steps: int = 2**14,
    max_excitations: int | None = None,
) -> TimeSeries:
    """Time-ordered evolution of psi0 sampled on a tau grid.

    The step count per drive period starts at max(min_steps, T ||H_s||)
    and doubles until the Richardson estimate of the accumulated error over
    the run (per-period estimate times number of periods, a conservative
    bound) is below ``tol``. ``max_excitations`` truncates the space to
    states with at most that many excited atoms.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    omega = H.drives.reference_omega if omega is None else omega
    times = tau_to_time(tau_grid, omega, H.chi_n) if omega else tau_grid
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (H.dim,):
        raise DomainError(f"initial state has shape {psi0.shape}, expected ({H.dim},)")
    if abs(np.linalg.norm(psi0) - 1) > 1e-8:
        raise DomainError("initial state is not normalized")
    keep = np.ones(H.dim, dtype=bool)
    if max_excitations is not None:
        keep = H.ops.n_e <= max_excitations
        if np.any(psi0[~keep]):
            raise DomainError("initial state exceeds the excitation cutoff")
    out = np.zeros((times.size, H.dim), dtype=complex)
    period = 2 * np.pi / abs(H.frequency) if H.periodic else 0.0
    worst = 0.0
    n_used = 0
    sector_dims = []
    for idx in split_sectors(H.charges):
        idx = idx[keep[idx]]
        if idx.size == 0 or not np.any(psi0[idx]):
            continue
        sector_dims.append(int(idx.size))
        hs = H.static[idx][:, idx].toarray()
        sec = _Sector(idx, hs, H.drive[idx][:, idx].toarray(), H.ops.n_e[idx])
        if not H.periodic:
            full = hs + H.drives.omega_b * sec.x
            w, v = la.eigh(full)
            c = v.conj().T @ psi0[idx]
            out[:, idx] = (np.exp(-1j * np.outer(times, w)) * c) @ v.T
            continue
        states, err, n = _floquet_sector(sec, psi0[idx], times, period, H, tol, min_steps, max_steps)
        out[:, idx] = states
        worst = max(worst, err)
        n_used = max(n_used, n)
    return _series(H, out, tau_grid, omega, IntegrationReport(n_used, period, worst, 0.0, sector_dims))


def _floquet_sector(sec, phi, times, period, H, tol, min_steps, max_steps):
    omega_b, freq = H.drives.omega_b, H.frequency
    periods = float(np.max(times) / period) if times.size else 0.0
    n = max(min_steps, int(math.ceil(period * sec.norm)))
    runs = {}

    def run(k):
        if k not in runs:
            runs[k] = _strang_matrix(sec, period, k, omega_b, freq)
        return runs[k]

    prev = np.inf
    while True:
        u_t, err = _romberg(run, n)
        total = err * max(periods, 1.0)
        if total <= tol:
            break
        # stop once the estimate no longer shrinks: roundoff dominates
        if 2 * n > max_steps or err > 0.5 * prev:
            raise NumericalError(
                f"step floor reached: period error {err:.2e} x {periods:.0f} periods exceeds tol {tol:.1e} at {n} steps"
            )
        prev = err
        n *= 2
    u_t = _polar(u_t)
    schur, z = la.schur(u_t, output="complex")
    lam = np.diagonal(schur)
    lam = lam / np.abs(lam)
    coef = z.conj().T @ phi
    states = np.zeros((times.size, phi.size), dtype=complex)
    for k, t in enumerate(times):
        whole, rest = divmod(t, period)
        base = z @ (lam ** int(whole) * coef)
        if rest > 1e-14 * period:
            steps = max(2, int(math.ceil(n * rest / period)))
            base, verr = _romberg(lambda j: _strang_vector(sec, base, rest, j, omega_b, freq), steps)
            if verr > tol:
                raise NumericalError(f"partial-period error {verr:.2e} exceeds tol {tol:.1e}")
        states[k] = base
    return states, total, n


def _series(H: FullHamiltonian, states: np.ndarray, tau_grid, omega, report: IntegrationReport) -> TimeSeries:
    prob = np.abs(states) ** 2
    modes, occ = H.basis.occupations()
    pops = prob @ occ
    channels = {}
    for k, (kind, m) in enumerate(modes):
        channels[f"n[{kind}{m:+g}]"] = pops[:, k]
    n_e = prob @ H.ops.n_e
    jz = prob @ (H.ops.jz_e + H.ops.jz_g)
    channels["N_e"] = n_e
    channels["N_e+J_z"] = n_e + jz
    channels["N_total"] = pops.sum(axis=1)
    channels["norm"] = np.sqrt(prob.sum(axis=1))
    n_atoms = H.basis.particles
    frac = float(np.max(n_e) / n_atoms)
    report.max_excited_fraction = frac
    if frac > EXCITED_WARN:
        warnings.warn(
            f"excited-state fraction reached {frac:.3f} > {EXCITED_WARN}: outside the adiabatic-elimination regime",
            RuntimeWarning,
            stacklevel=3,
        )
    meta = {
        "model": "full",
        "F": H.scheme.F,
        "N": n_atoms,
        "drives": vars(H.drives).copy(),
        "chi_n": H.chi_n,
        "omega": omega,
        "zeeman": vars(H.zeeman).copy(),
        "steps_per_period": report.steps_per_period,
        "period": report.period,
        "richardson_error": report.error_estimate,
        "max_excited_fraction": frac,
        "sector_dims": report.sectors,
    }
    return TimeSeries(np.asarray(tau_grid, float), channels, meta)


def full_initial_state(basis: ProductBasis, first: float, second: float) -> np.ndarray:
    """All atoms of group 1 in g_first and of group 2 in g_second."""
    psi = np.zeros(basis.dim)
    iu = basis.upper.index[tuple(basis.upper.particles if lab == g(first) else 0 for lab in basis.upper.modes)]
    il = basis.lower.index[tuple(basis.lower.particles if lab == g(second) else 0 for lab in basis.lower.modes)]
    psi[basis.composite(iu, il)] = 1.0
    return psi


# --------------------------------------------------------------------------
# benchmark against the effective model


def benchmark_heff(
    scheme: LevelScheme,
    n_atoms: int,
    drives: DriveParams,
    chi_n: float = 1.0,
    tau_grid=None,
    *,
    zeeman: ZeemanParams | None = None,
    max_excitations: int | None = None,
    tol: float = 1e-5,
) -> tuple[TimeSeries, TimeSeries, dict]:
    """Full-model and H_eff trajectories from |g_{-F}>^{N/2} |g_{F}>^{N/2}.

    Returns (full, effective, deviations) where deviations maps each ground
    channel ``n[m]`` to {"max": ..., "rms": ...} of fractional populations.
    """
    if n_atoms % 2:
        raise DomainError("benchmark initial state splits the atoms into two equal halves")
    tau_grid = np.linspace(0, 20, 201) if tau_grid is None else np.asarray(tau_grid, float)
    half = n_atoms // 2
    F = scheme.F
    full = build_full(scheme, (half, half), drives, chi_n, zeeman)
    psi_full = full_initial_state(full.basis, F, -F)
    ts_full = integrate(full, psi_full, tau_grid, tol=tol, max_excitations=max_excitations)

    basis = leg_bases(scheme, half, half)
    psi = np.zeros(basis.dim)
    psi[basis.composite(basis.upper.index[_all_in(basis.upper, F)], basis.lower.index[_all_in(basis.lower, -F)])] = 1.0
    omega = drives.reference_omega
    if drives.active():
        heff = build_heff_exact(scheme, basis, drives, chi_n, support=psi)
        ts_eff = evolve(heff, psi, tau_grid)
    else:
        ts_eff = evolve(sp.csr_matrix((basis.dim, basis.dim)), psi, tau_grid, basis=basis, omega=omega or 1.0)
    deviations = {}
    for m in scheme.modes:
        a = ts_full[f"n[g{m:+g}]"] / n_atoms
        b = ts_eff[f"n[{m:+g}]"] / n_atoms
        d = np.abs(a - b)
        deviations[f"n[{m:+g}]"] = {"max": float(d.max()), "rms": float(np.sqrt(np.mean(d**2)))}
    summary = {
        "max_deviation": max(v["max"] for v in deviations.values()),
        "channels": deviations,
    }
    ts_full.metadata["benchmark"] = summary
    return ts_full, ts_eff, summary


def _all_in(fb, mode) -> tuple:
    return tuple(fb.particles if lab == mode else 0 for lab in fb.modes)


def transferred_population(ts: TimeSeries, scheme: LevelScheme, n_atoms: int, full: bool = True) -> np.ndarray:
    """Fraction of atoms in ground levels other than the two initial end states."""
    F = scheme.F
    fmt = (lambda m: f"n[g{m:+g}]") if full else (lambda m: f"n[{m:+g}]")
    others = [m for m in scheme.modes if abs(abs(m) - F) > 1e-9]
    return sum(ts[fmt(m)] for m in others) / n_atoms
