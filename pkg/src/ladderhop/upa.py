"""Undepleted-pump (UPA) approximations.

The macroscopically occupied modes are replaced by c-numbers, leaving a
quadratic bosonic Hamiltonian

    H = sum_ij L_ij a_i^dag a_j + 1/2 M_ij a_i^dag a_j^dag + 1/2 M_ij^* a_i a_j

whose Heisenberg dynamics is linear with generator G = [[L, M], [-M^*, -L^*]].
Complex BdG eigenvalues signal pair production (phase I).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.optimize import brentq

from ladderhop.errors import DegeneracyError, DomainError, ResonanceError
from ladderhop.heff import DriveParams
from ladderhop.results import TimeSeries

IMAG_TOL = 1e-9
PAIR_TOL = 1e-7
COND_MAX = 1e10
SCAN_STEP = 0.01
SIX_LEVEL_MODES = (-2.5, 0.5, 1.5)


def _drive_terms(drives: DriveParams):
    return [(om2, delta) for _, om2, delta in drives.active()]


# --------------------------------------------------------------------------
# four-level ladder


@dataclass(frozen=True)
class FourLevelK:
    K1: float
    K2: float
    K3: float

    @property
    def discriminant(self) -> float:
        """(K1+K2)^2 - 4 K3^2; negative in the pair-production phase."""
        return (self.K1 + self.K2) ** 2 - 4 * self.K3**2

    @property
    def phase(self) -> str:
        d = self.discriminant
        if d < 0:
            return "I"
        return "II" if d > 0 else "marginal"


def four_level_K(drives: DriveParams, chi_n: float = 1.0) -> FourLevelK:
    k13 = k2 = 0.0
    pole = chi_n / 5
    for om2, delta in _drive_terms(drives):
        if abs(delta - pole) < 1e-12 * chi_n:
            raise ResonanceError(f"Delta={delta:g} sits on the pump-shifted resonance chi N/5")
        cube = 8 / 75 * om2 * delta * chi_n / (delta - pole) ** 3
        k13 += cube
        k2 += 8 / 15 * om2 * delta / (delta - pole) ** 2 + cube
    return FourLevelK(k13, k2, k13)


def four_level_population(K: FourLevelK, t) -> np.ndarray:
    """N_{+-1/2}(t) from vacuum (same for both modes)."""
    t = np.asarray(t, dtype=float)
    s = K.K1 + K.K2
    d = s * s - 4 * K.K3**2
    if d > 0:
        w = np.sqrt(d)
        return 4 * K.K3**2 / d * np.sin(w * t / 2) ** 2
    if d < 0:
        g = np.sqrt(-d)
        return 4 * K.K3**2 / -d * np.sinh(g * t / 2) ** 2
    return K.K3**2 * t**2


def four_level_quadratic(K: FourLevelK) -> "QuadraticForm":
    """Two-mode squeezing form over (-1/2, +1/2)."""
    L = np.diag([K.K1, K.K2])
    M = np.array([[0.0, K.K3], [K.K3, 0.0]])
    return QuadraticForm(L, M, (-0.5, 0.5))


def _boundary_functions(delta_a, omega_a, omega_b, chi_n):
    pole = chi_n / 5

    def first(db):
        return sum(om**2 * d / (d - pole) ** 2 for om, d in ((omega_a, delta_a), (omega_b, db)))

    def second(db):
        return first(db) + sum(
            0.8 * om**2 * d * chi_n / (d - pole) ** 3 for om, d in ((omega_a, delta_a), (omega_b, db))
        )

    return first, second


def four_level_phase_boundary(
    delta_a: float,
    chi_n: float = 1.0,
    omega: float | tuple = 0.05,
    *,
    interval=(0.21, 10.0),
    step: float = SCAN_STEP,
) -> list[float]:
    """Delta_B roots of either boundary equation inside ``interval`` (units of chi N).

    Scans at ``step`` chi N, skips the cell holding the pole chi N/5 and
    refines each sign change by bisection to 1e-6 chi N. An empty list means
    no boundary in the interval.
    """
    omega_a, omega_b = (omega, omega) if np.isscalar(omega) else omega
    pole = chi_n / 5
    lo, hi = (x * chi_n for x in interval)
    if hi <= lo:
        raise DomainError(f"empty search interval {interval}")
    grid = np.arange(lo, hi + 0.5 * step * chi_n, step * chi_n)
    roots = []
    for f in _boundary_functions(delta_a, omega_a, omega_b, chi_n):
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.array([f(x) if x != pole else np.nan for x in grid])
        for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
            if a <= pole <= b or not np.isfinite(fa) or not np.isfinite(fb):
                continue
            if fa == 0.0:
                roots.append(float(a))
            elif fa * fb < 0:
                roots.append(float(brentq(f, a, b, xtol=1e-6 * chi_n)))
        if vals.size and vals[-1] == 0.0:
            roots.append(float(grid[-1]))
    roots.sort()
    out = []
    for r in roots:
        if not out or r - out[-1] > 1e-6 * chi_n:
            out.append(r)
    return out


# --------------------------------------------------------------------------
# quadratic forms and BdG


@dataclass(frozen=True)
class QuadraticForm:
    L: np.ndarray
    M: np.ndarray
    modes: tuple

    def __post_init__(self):
        L = np.atleast_2d(np.asarray(self.L))
        M = np.atleast_2d(np.asarray(self.M))
        n = len(self.modes)
        if L.shape != (n, n) or M.shape != (n, n):
            raise DomainError(f"L and M must be {n}x{n}")
        if not np.allclose(L, L.conj().T, atol=1e-12):
            raise DomainError("L is not Hermitian")
        if not np.allclose(M, M.T, atol=1e-12):
            raise DomainError("M is not symmetric")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "M", M)

    @property
    def generator(self) -> np.ndarray:
        return np.block([[self.L, self.M], [-self.M.conj(), -self.L.conj()]])


@dataclass(frozen=True)
class BdGResult:
    eigenvalues: np.ndarray
    vectors: np.ndarray
    phase: str  # "I" if any eigenvalue is complex, else "II"
    quartets: list

    @property
    def unstable(self) -> bool:
        return self.phase == "I"


def six_level_quadratic(drives: DriveParams, chi_n: float = 1.0, p_m32: float = 0.5) -> QuadraticForm:
    """L and M over modes (-5/2, 1/2, 3/2) for the 6-level chiral setup."""
    if not 0.0 <= p_m32 <= 1.0:
        raise DomainError(f"p_-3/2 must lie in [0, 1], got {p_m32!r}")
    p52 = 1.0 - p_m32
    pole1 = 13 * chi_n / 35
    pole2 = (9 + 8 * p_m32) * chi_n / 35
    c1 = c2 = 0.0
    for om2, delta in _drive_terms(drives):
        for pole in (pole1, pole2):
            if abs(delta - pole) < 1e-12 * chi_n:
                raise ResonanceError(f"Delta={delta:g} hits the pump-shifted resonance {pole:g}")
        c1 += om2 * delta / (delta - pole1) ** 2
        c2 += om2 * delta * chi_n / ((delta - pole1) ** 2 * (delta - pole2))
    k1 = -16 / 35 * c1 + 16 / 245 * c2
    k2 = 8 / 35 * c1 + (144 / 1225 * p_m32 + 16 / 245 * p52) * c2
    k3 = k5 = 144 / 1225 * c2
    k4 = 16 / 245 * c2
    k6 = 48 * np.sqrt(5) / 1225 * c2
    sm, sp_ = np.sqrt(p_m32), np.sqrt(p52)
    L = np.array([[k1, k4 * sp_, 0.0], [k4 * sp_, k2, k5 * sm], [0.0, k5 * sm, k3]])
    M = np.array([[0.0, k6 * sm, k6], [k6 * sm, 2 * k6 * sm * sp_, k6 * sp_], [k6, k6 * sp_, 0.0]])
    return QuadraticForm(L, M, SIX_LEVEL_MODES)


def _match_quartets(eig: np.ndarray, tol: float) -> list:
    """Greedy nearest pairing of each eigenvalue with -eps and eps^*."""
    groups = []
    scale = max(1.0, float(np.max(np.abs(eig)))) if eig.size else 1.0
    for target in (lambda e: -e, np.conj):
        free = list(range(len(eig)))
        pairs = []
        while free:
            i = free.pop(0)
            want = target(eig[i])
            dist = [abs(eig[j] - want) for j in free] + [abs(eig[i] - want)]
            k = int(np.argmin(dist))
            if dist[k] > tol * scale:
                raise DegeneracyError(f"eigenvalue {eig[i]:.6g} has no partner {want:.6g} in the spectrum")
            if k < len(free):
                pairs.append((i, free.pop(k)))
            else:
                pairs.append((i, i))
        groups.append(pairs)
    return groups


def bdg_solve(q: QuadraticForm, *, chi_n: float = 1.0, imag_tol: float = IMAG_TOL, pair_tol: float = PAIR_TOL) -> BdGResult:
    G = q.generator
    eig, vec = la.eig(G)
    if not np.all(np.isfinite(eig)):
        raise DegeneracyError("non-finite BdG eigenvalues")
    if np.linalg.cond(vec) > COND_MAX:
        raise DegeneracyError("BdG generator is not diagonalizable within tolerance")
    quartets = _match_quartets(eig, pair_tol)
    phase = "I" if np.any(np.abs(eig.imag) > imag_tol * chi_n) else "II"
    return BdGResult(eig, vec, phase, quartets)


def bdg_propagator(res: BdGResult, t: float) -> np.ndarray:
    T = res.vectors
    return (T * np.exp(-1j * res.eigenvalues * t)) @ la.inv(T)


def bdg_propagate_vacuum(q: QuadraticForm, times, *, chi_n: float = 1.0) -> dict:
    """Vacuum populations <a_i^dag a_i>(t) and anomalous <a_i a_j>(t).

    Returns {"populations": (T, n), "anomalous": (T, n, n), "propagators": (T, 2n, 2n)}.
    ``times`` are physical times (hbar = 1, energies in chi N).
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    n = len(q.modes)
    if not np.any(q.L) and not np.any(q.M):
        U = np.broadcast_to(np.eye(2 * n, dtype=complex), (times.size, 2 * n, 2 * n)).copy()
        return {"populations": np.zeros((times.size, n)), "anomalous": np.zeros((times.size, n, n), complex), "propagators": U}
    res = bdg_solve(q, chi_n=chi_n)
    T = res.vectors
    Tinv = la.inv(T)
    seed = np.zeros((2 * n, 2 * n))
    seed[:n, n:] = np.eye(n)
    pops = np.zeros((times.size, n))
    anom = np.zeros((times.size, n, n), dtype=complex)
    Us = np.zeros((times.size, 2 * n, 2 * n), dtype=complex)
    for k, t in enumerate(times):
        U = (T * np.exp(-1j * res.eigenvalues * t)) @ Tinv
        cov = U @ seed @ U.T
        pops[k] = np.real(np.diagonal(cov[n:, :n]))
        anom[k] = cov[:n, :n]
        Us[k] = U
    return {"populations": pops, "anomalous": anom, "propagators": Us}


def symplectic_drift(propagators: np.ndarray) -> float:
    """max_t ||U eta U^dag - eta|| with eta = diag(I, -I)."""
    n2 = propagators.shape[-1]
    eta = np.diag(np.r_[np.ones(n2 // 2), -np.ones(n2 // 2)])
    return float(max(np.max(np.abs(U @ eta @ U.conj().T - eta)) for U in propagators))


# --------------------------------------------------------------------------
# time series in tau units


def _times(tau_grid, drives: DriveParams, chi_n: float):
    return 2 * np.pi * chi_n * np.asarray(tau_grid, float) / drives.reference_omega**2


def four_level_series(drives: DriveParams, chi_n: float = 1.0, tau_grid=None, n_atoms: int | None = None) -> TimeSeries:
    tau_grid = np.linspace(0, 20, 401) if tau_grid is None else np.asarray(tau_grid, float)
    K = four_level_K(drives, chi_n)
    pop = four_level_population(K, _times(tau_grid, drives, chi_n))
    channels = {"N_pm_half": pop}
    if n_atoms:
        channels["n_pm_half"] = pop / n_atoms
    meta = {"model": "upa-4", "K": [K.K1, K.K2, K.K3], "phase": K.phase, "drives": vars(drives).copy(), "chi_n": chi_n}
    return TimeSeries(tau_grid, channels, meta)


def six_level_series(drives: DriveParams, chi_n: float = 1.0, p_m32: float = 0.5, tau_grid=None) -> TimeSeries:
    tau_grid = np.linspace(0, 10, 201) if tau_grid is None else np.asarray(tau_grid, float)
    q = six_level_quadratic(drives, chi_n, p_m32)
    out = bdg_propagate_vacuum(q, _times(tau_grid, drives, chi_n), chi_n=chi_n)
    pops = out["populations"]
    channels = {f"n[{m:+g}]": pops[:, k] for k, m in enumerate(q.modes)}
    channels["N_diff"] = channels["n[+1.5]"] - channels["n[-2.5]"]
    channels["N_sum"] = channels["n[+1.5]"] + channels["n[-2.5]"]
    phase = bdg_solve(q, chi_n=chi_n).phase if np.any(q.M) or np.any(q.L) else "II"
    meta = {"model": "upa-6", "p_m3_2": p_m32, "phase": phase, "drives": vars(drives).copy(), "chi_n": chi_n}
    return TimeSeries(tau_grid, channels, meta)


def six_level_phase_line(delta_a: float, p_grid, delta_b_grid, *, omega: float = 0.05, chi_n: float = 1.0) -> np.ndarray:
    """Boolean grid: True where the 6-level BdG spectrum is unstable (phase I)."""
    out = np.zeros((len(p_grid), len(delta_b_grid)), dtype=bool)
    for i, p in enumerate(p_grid):
        for j, db in enumerate(delta_b_grid):
            try:
                q = six_level_quadratic(DriveParams(omega, delta_a, omega, float(db)), chi_n, float(p))
                out[i, j] = bdg_solve(q, chi_n=chi_n).unstable
            except (ResonanceError, DegeneracyError):
                out[i, j] = False
    return out
