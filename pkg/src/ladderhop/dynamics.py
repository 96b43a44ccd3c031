"""Time evolution, observables and the higher-level analyses built on them.

Dimensionless time is tau = Omega^2 t / (2 pi chi N) with energies in units of
chi N, so a run at tau corresponds to t = 2 pi chi_n tau / Omega^2.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.linalg as la
import scipy.optimize as opt
import scipy.sparse as sp

from ladderhop.errors import CapabilityError, CollapseError, DomainError, NumericalError, ResonanceError
from ladderhop.fock import FockBasis, ProductBasis
from ladderhop.heff import DENSE_CAP, DriveParams, EffectiveHamiltonian, build_heff_exact
from ladderhop.ladder import LevelScheme, leg_bases, site_coordinate, site_mode
from ladderhop.results import SweepResult, TimeSeries

EPS_DEG = 1e-10
KRYLOV_TOL = 1e-9
KRYLOV_DIM = 30
DEFAULT_TAU = np.linspace(0.0, 50.0, 500)


def tau_to_time(tau, omega: float, chi_n: float = 1.0):
    if omega == 0:
        raise DomainError("time unit is undefined for a vanishing drive")
    return 2 * np.pi * chi_n * np.asarray(tau, dtype=float) / omega**2


def time_to_tau(t, omega: float, chi_n: float = 1.0):
    return omega**2 * np.asarray(t, dtype=float) / (2 * np.pi * chi_n)


# --------------------------------------------------------------------------
# initial states


@dataclass(frozen=True)
class InitialStateSpec:
    """Per-sector single-atom probabilities, e.g. ``{-1.5: 0.3, 2.5: 0.7}``.

    Each sector's atoms share the same single-atom state
    (sum_k sqrt(p_k) |g_{m_k}>)^{(x) n}, expanded into Fock components.
    """

    upper: dict = field(default_factory=dict)
    lower: dict = field(default_factory=dict)

    @classmethod
    def single(cls, upper_mode: float | None, lower_mode: float | None):
        return cls({upper_mode: 1.0} if upper_mode is not None else {}, {lower_mode: 1.0} if lower_mode is not None else {})


def sector_state(basis: FockBasis, probs: dict) -> np.ndarray:
    """Multinomial expansion of a symmetric product state on one Fock sector."""
    if basis.particles == 0:
        return np.ones(1)
    probs = {float(m): float(p) for m, p in probs.items() if p != 0}
    total = sum(probs.values())
    if not probs or abs(total - 1) > 1e-12:
        raise DomainError(f"single-atom probabilities must sum to 1, got {total!r}")
    cols = [basis.mode_index(m) for m in probs]
    others = [k for k in range(len(basis.modes)) if k not in cols]
    occ = basis.states
    keep = np.all(occ[:, others] == 0, axis=1) if others else np.ones(basis.dim, dtype=bool)
    n = basis.particles
    log_amp = np.full(basis.dim, -np.inf)
    sub = occ[keep][:, cols]
    logp = np.array([math.log(p) for p in probs.values()])
    lg = np.vectorize(math.lgamma)
    log_amp[keep] = 0.5 * (math.lgamma(n + 1) - lg(sub + 1).sum(axis=1) + sub @ logp)
    psi = np.exp(log_amp)
    return psi / np.linalg.norm(psi)


def initial_state(basis, spec: InitialStateSpec | dict) -> np.ndarray:
    if isinstance(basis, FockBasis):
        return sector_state(basis, spec)
    up = sector_state(basis.upper, spec.upper)
    lo = sector_state(basis.lower, spec.lower)
    return np.kron(up, lo)


def fock_state(basis, occupation: dict) -> np.ndarray:
    """Basis vector with the given {mode: n} occupation (product bases: summed over sectors
    is ambiguous, so pass a pair of dicts as (upper, lower))."""
    psi = np.zeros(basis.dim)
    if isinstance(basis, FockBasis):
        occ = [occupation.get(m, 0) for m in basis.modes]
        k = basis.index.get(tuple(occ))
    else:
        up, lo = occupation
        iu = basis.upper.index.get(tuple(up.get(m, 0) for m in basis.upper.modes))
        il = basis.lower.index.get(tuple(lo.get(m, 0) for m in basis.lower.modes))
        k = None if iu is None or il is None else int(basis.composite(iu, il))
    if k is None:
        raise DomainError(f"occupation {occupation!r} is not a basis state")
    psi[k] = 1.0
    return psi


# --------------------------------------------------------------------------
# propagation


def _expm_small(T: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i T dt) e_1 for a small real symmetric tridiagonal T."""
    w, v = la.eigh(T)
    return v @ (np.exp(-1j * w * dt) * v[0].conj())


def krylov_expm(matvec, v: np.ndarray, t: float, *, m: int = KRYLOV_DIM, tol: float = KRYLOV_TOL, min_dt=1e-12):
    """exp(-i H t) v by restarted Lanczos with adaptive substeps.

    Each substep is accepted once the a-posteriori error
    ||v|| beta_m |e_m^T exp(-i T dt) e_1| falls below ``tol``.
    """
    w = np.asarray(v, dtype=complex).copy()
    done, dt = 0.0, t
    n = w.size
    steps, rejected = 0, 0
    while t - done > 1e-15 * max(1.0, abs(t)):
        beta = np.linalg.norm(w)
        if beta == 0:
            return w
        kdim = min(m, n)
        V = np.zeros((n, kdim + 1), dtype=complex)
        alpha = np.zeros(kdim)
        betas = np.zeros(kdim)
        V[:, 0] = w / beta
        happy = False
        j_used = kdim
        for j in range(kdim):
            u = matvec(V[:, j])
            if j > 0:
                u = u - betas[j - 1] * V[:, j - 1]
            alpha[j] = np.real(np.vdot(V[:, j], u))
            u = u - alpha[j] * V[:, j]
            # full reorthogonalization keeps the small basis orthonormal
            u = u - V[:, : j + 1] @ (V[:, : j + 1].conj().T @ u)
            betas[j] = np.linalg.norm(u)
            if betas[j] < 1e-12 * max(1.0, abs(alpha[j])):
                happy = True
                j_used = j + 1
                break
            V[:, j + 1] = u / betas[j]
        T = np.diag(alpha[:j_used]) + np.diag(betas[: j_used - 1], 1) + np.diag(betas[: j_used - 1], -1)
        dt = min(dt, t - done)
        while True:
            y = _expm_small(T, dt)
            err = 0.0 if happy else beta * betas[j_used - 1] * abs(y[-1]) * dt
            if err <= tol or happy:
                break
            rejected += 1
            dt *= 0.5
            if dt < min_dt:
                raise NumericalError(
                    f"Krylov step underflow at t={done:.6g} (dt={dt:.2e}, error {err:.2e} > {tol:.1e}, "
                    f"{steps} accepted / {rejected} rejected steps)"
                )
        w = beta * (V[:, :j_used] @ y)
        done += dt
        steps += 1
        dt = t - done if happy else 2 * dt
    return w


def _as_blocks(H):
    """(sectors, blocks) view of any supported Hamiltonian."""
    if isinstance(H, EffectiveHamiltonian):
        return H.sectors, H.blocks
    if isinstance(H, np.ndarray) or sp.issparse(H):
        n = H.shape[0]
        return [np.arange(n)], [H]
    if hasattr(H, "matrix"):
        return _as_blocks(H.matrix)
    raise DomainError(f"unsupported Hamiltonian type {type(H).__name__}")


def propagate(
    H,
    psi0: np.ndarray,
    times,
    *,
    method: str = "auto",
    dense_cap: int = DENSE_CAP,
    krylov_tol: float = KRYLOV_TOL,
    krylov_dim: int = KRYLOV_DIM,
) -> np.ndarray:
    """States exp(-i H t) psi0 at each physical time t (rows of the result)."""
    times = np.asarray(times, dtype=float)
    norm = np.linalg.norm(psi0)
    if abs(norm - 1) > 1e-8:
        raise DomainError(f"initial state is not normalized (norm={norm:.3e})")
    out = np.zeros((times.size, psi0.size), dtype=complex)
    sectors, blocks = _as_blocks(H)
    covered = np.zeros(psi0.size, dtype=bool)
    for s, (idx, block) in enumerate(zip(sectors, blocks)):
        covered[idx] = True
        phi = psi0[idx]
        if not np.any(phi):
            continue
        if block is None:
            raise CapabilityError("initial state has weight in a sector that was not built")
        use_dense = method == "spectral" or (method == "auto" and len(idx) <= dense_cap and not _is_map(block))
        if use_dense:
            if isinstance(H, EffectiveHamiltonian):
                w, v = H.sector_eigh(s)
            else:
                dense = block.toarray() if sp.issparse(block) else np.asarray(block)
                w, v = la.eigh(dense)
            c = v.conj().T @ phi
            out[:, idx] = (np.exp(-1j * np.outer(times, w)) * c) @ v.T
        else:
            matvec = (lambda x, b=block: b @ x)
            cur, t_prev = phi.astype(complex), 0.0
            for k, t in enumerate(times):
                if t != t_prev:
                    cur = krylov_expm(matvec, cur, t - t_prev, m=krylov_dim, tol=krylov_tol)
                    t_prev = t
                out[k, idx] = cur
    if np.any(psi0[~covered]):
        raise CapabilityError("initial state has weight outside the Hamiltonian's sectors")
    return out


def _is_map(block) -> bool:
    return not (isinstance(block, np.ndarray) or sp.issparse(block))


def mode_channel(m) -> str:
    return f"n[{m:+g}]" if isinstance(m, (float, int)) else f"n[{m[0]}{m[1]:+g}]"


def evolve(
    H,
    psi0: np.ndarray,
    tau_grid=DEFAULT_TAU,
    *,
    omega: float | None = None,
    chi_n: float | None = None,
    basis=None,
    correlator_sites=None,
    keep_states: bool = False,
    **kw,
) -> TimeSeries:
    """Trajectory on a tau grid with per-mode populations and conservation channels.

    Channels: ``n[m]`` per mode, ``N_total``, ``norm``, ``energy``, and for an
    effective Hamiltonian also ``N_upper``/``N_lower`` and ``C(0,r)`` for each
    requested correlator site r.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    if isinstance(H, EffectiveHamiltonian):
        omega = H.drives.reference_omega if omega is None else omega
        chi_n = H.chi_n if chi_n is None else chi_n
        basis = H.basis
    omega = 1.0 if omega is None else omega
    chi_n = 1.0 if chi_n is None else chi_n
    times = tau_to_time(tau_grid, omega, chi_n) if omega else tau_grid
    states = propagate(H, psi0, times, **kw)
    prob = np.abs(states) ** 2
    channels = {}
    if basis is not None:
        modes, occ = basis.occupations()
        pops = prob @ occ
        for k, m in enumerate(modes):
            channels[mode_channel(m)] = pops[:, k]
        channels["N_total"] = pops.sum(axis=1)
    channels["norm"] = np.sqrt(prob.sum(axis=1))
    matvec = H.matvec if isinstance(H, EffectiveHamiltonian) else (lambda x: _as_blocks(H)[1][0] @ x)
    channels["energy"] = np.array([np.real(np.vdot(s, matvec(s))) for s in states])
    meta = {"omega": omega, "chi_n": chi_n}
    if isinstance(H, EffectiveHamiltonian):
        scheme = H.scheme
        channels["N_upper"] = sum(channels[mode_channel(m)] for m in modes if m in scheme.upper_leg)
        channels["N_lower"] = sum(channels[mode_channel(m)] for m in modes if m in scheme.lower_leg)
        meta.update(
            F=scheme.F,
            N=basis.particles,
            mode=H.mode,
            drives=vars(H.drives).copy(),
        )
        if correlator_sites is not None:
            corr = correlator_series(states, scheme, basis, correlator_sites)
            for r, series in corr.items():
                channels[f"C(0,{r})"] = series
    ts = TimeSeries(tau_grid, channels, meta)
    if keep_states:
        ts.states = states
    return ts


# --------------------------------------------------------------------------
# long-time averages


def _diag_observables(basis, observables) -> dict:
    """Normalize observables to {name: diagonal vector}."""
    out = {}
    modes, occ = basis.occupations() if basis is not None else ((), None)
    for name, obs in observables.items():
        if isinstance(obs, np.ndarray) and obs.ndim == 1:
            out[name] = obs.astype(float)
        elif sp.issparse(obs) or (isinstance(obs, np.ndarray) and obs.ndim == 2):
            out[name] = obs
        else:
            out[name] = occ[:, modes.index(obs)].astype(float)
    return out


def long_time_average(H, psi0: np.ndarray, observables: dict, *, eps_deg: float = EPS_DEG, basis=None) -> dict:
    """Infinite-time average via the diagonal ensemble with degenerate clusters.

    ``observables`` maps names to a diagonal vector, a (sector-preserving)
    matrix, or a mode label of ``basis``.
    """
    if isinstance(H, EffectiveHamiltonian):
        basis = H.basis
        chi_n = H.chi_n
    else:
        chi_n = 1.0
    obs = _diag_observables(basis, observables)
    sectors, blocks = _as_blocks(H)
    result = {name: 0.0 for name in obs}
    for s, (idx, block) in enumerate(zip(sectors, blocks)):
        phi = psi0[idx]
        if not np.any(phi):
            continue
        if isinstance(H, EffectiveHamiltonian):
            if not isinstance(block, np.ndarray):
                raise CapabilityError(f"sector of dim {len(idx)} exceeds the dense cap; use a finite-time average")
            w, v = H.sector_eigh(s)
        else:
            dense = block.toarray() if sp.issparse(block) else np.asarray(block)
            if dense.shape[0] > DENSE_CAP:
                raise CapabilityError(f"dimension {dense.shape[0]} exceeds the dense cap")
            w, v = la.eigh(dense)
        c = v.conj().T @ phi
        # clusters of (near-)degenerate eigenvalues
        cuts = np.nonzero(np.diff(w) > eps_deg * chi_n)[0] + 1
        for a, b in zip(np.r_[0, cuts], np.r_[cuts, len(w)]):
            proj = v[:, a:b] @ c[a:b]
            for name, o in obs.items():
                if isinstance(o, np.ndarray) and o.ndim == 1:
                    result[name] += float(np.sum(o[idx] * np.abs(proj) ** 2))
                else:
                    sub = o[idx][:, idx]
                    result[name] += float(np.real(np.vdot(proj, sub @ proj)))
    return result


def finite_time_average(series: TimeSeries, name: str) -> float:
    t = series.times
    return float(scipy.integrate.trapezoid(series[name], t) / (t[-1] - t[0]))


# --------------------------------------------------------------------------
# correlations


def number_correlations(state: np.ndarray, basis) -> tuple[tuple, np.ndarray]:
    """C_ij = <n_i n_j> - <n_i><n_j> over the basis modes."""
    modes, occ = basis.occupations()
    prob = np.abs(state) ** 2
    mean = prob @ occ
    second = occ.T @ (prob[:, None] * occ)
    return modes, second - np.outer(mean, mean)


def site_labels(scheme: LevelScheme) -> list[tuple[str, float]]:
    """(label, mode) for synthetic sites, upper leg left (..., -1, 0*) then lower leg (0, 1, ...)."""
    out = []
    for m in sorted(scheme.upper_leg):
        r = site_coordinate(scheme, m)
        out.append(("0*" if r == 0 else str(r), m))
    for m in sorted(scheme.lower_leg):
        out.append((str(site_coordinate(scheme, m)), m))
    return out


def correlation_matrix(state: np.ndarray, scheme: LevelScheme, basis) -> tuple[list, np.ndarray]:
    norm = np.linalg.norm(state)
    if abs(norm - 1) > 1e-8:
        raise DomainError(f"state is not normalized (norm={norm:.3e})")
    modes, c = number_correlations(state, basis)
    labels = site_labels(scheme)
    pos = [modes.index(m) for _, m in labels]
    return [lab for lab, _ in labels], c[np.ix_(pos, pos)]


def correlator_series(states: np.ndarray, scheme: LevelScheme, basis, sites) -> dict:
    """C(0,r)(t) with site 0 = lower-leg end and r<0 read from the upper leg."""
    modes, occ = basis.occupations()
    prob = np.abs(states) ** 2
    k0 = modes.index(site_mode(scheme, 0))
    out = {}
    for r in sites:
        kr = modes.index(site_mode(scheme, r))
        mean0 = prob @ occ[:, k0]
        meanr = prob @ occ[:, kr]
        out[r] = prob @ (occ[:, k0] * occ[:, kr]) - mean0 * meanr
    return out


# --------------------------------------------------------------------------
# threshold timing


def _first_crossing(times, values, level, below: bool):
    times = np.asarray(times, float)
    values = np.asarray(values, float)
    hit = values <= level if below else values >= level
    if not np.any(hit):
        return None
    k = int(np.argmax(hit))
    if k == 0:
        return float(times[0])
    v0, v1 = values[k - 1], values[k]
    frac = (level - v0) / (v1 - v0)
    return float(times[k - 1] + frac * (times[k] - times[k - 1]))


def light_cone_threshold(correlators: dict, n_atoms: int | None) -> float:
    if n_atoms == 10:
        return -0.15
    peak = max(float(np.max(np.abs(v))) for v in correlators.values())
    return -0.1 * peak


def light_cone_front(times, correlators: dict, *, threshold: float | None = None, n_atoms: int | None = None) -> dict:
    """Arrival time per site r (first tau with C(0,r) <= threshold), None if never crossed."""
    if threshold is None:
        threshold = light_cone_threshold(correlators, n_atoms)
    return {r: _first_crossing(times, c, threshold, below=True) for r, c in correlators.items()}


def delay_time(times, n_series, level: float = 0.05):
    """First time the fractional population reaches ``level`` (None if never)."""
    return _first_crossing(times, n_series, level, below=False)


# --------------------------------------------------------------------------
# finite-size scaling


def _rescale(curves: dict, critical: float, beta: float, nu: float, chi_n: float = 1.0):
    out = {}
    for n, (x, y) in curves.items():
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        xs = (x - critical) / chi_n * n ** (1.0 / nu)
        ys = y * n ** (beta / nu)
        order = np.argsort(xs)
        out[n] = (xs[order], ys[order])
    return out


def collapse_residual(curves: dict, critical: float, beta: float, nu: float, *, points: int = 60, chi_n=1.0) -> float:
    """Scale-free spread of rescaled curves y N^{beta/nu} vs (x - x_c) N^{1/nu}.

    Sum over a common abscissa of the variance across sizes, divided by the
    sum of squared means.
    """
    if len(curves) < 3:
        raise CollapseError("need at least three system sizes")
    if nu <= 0:
        raise CollapseError("nu must be positive")
    scaled = _rescale(curves, critical, beta, nu, chi_n)
    lo = max(xs[0] for xs, _ in scaled.values())
    hi = min(xs[-1] for xs, _ in scaled.values())
    if not hi > lo:
        raise CollapseError(f"rescaled ranges do not overlap (beta={beta:.3g}, nu={nu:.3g})")
    grid = np.linspace(lo, hi, points)
    ys = np.array([np.interp(grid, xs, y) for xs, y in scaled.values()])
    mean = ys.mean(axis=0)
    denom = np.sum(mean**2)
    if denom == 0:
        return 0.0
    return float(np.sum(ys.var(axis=0)) / denom)


def finite_size_collapse(
    curves: dict, critical: float, beta0: float = 1.0, nu0: float = 2.0, *, sweeps: int = 30, tol: float = 1e-6,
    beta_bounds=(0.0, 4.0), nu_bounds=(0.3, 10.0),
) -> tuple[float, float, float]:
    """Coordinate descent over (beta, nu) minimizing the collapse residual,
    then a Nelder-Mead polish along the (usually correlated) valley.

    Returns (beta, nu, residual).
    """

    def f(b, n):
        try:
            return collapse_residual(curves, critical, b, n)
        except CollapseError:
            return np.inf

    beta, nu = beta0, nu0
    best = f(beta, nu)
    for _ in range(sweeps):
        prev = best
        r = opt.minimize_scalar(lambda b: f(b, nu), bounds=beta_bounds, method="bounded", options={"xatol": 1e-6})
        if r.fun <= best:
            beta, best = float(r.x), float(r.fun)
        r = opt.minimize_scalar(lambda n: f(beta, n), bounds=nu_bounds, method="bounded", options={"xatol": 1e-6})
        if r.fun <= best:
            nu, best = float(r.x), float(r.fun)
        if prev - best <= tol * max(prev, 1e-300):
            break
    r = opt.minimize(
        lambda x: f(*x),
        [beta, nu],
        method="Nelder-Mead",
        bounds=[beta_bounds, nu_bounds],
        options={"xatol": 1e-7, "fatol": 1e-16, "maxiter": 4000},
    )
    if r.fun <= best:
        beta, nu, best = float(r.x[0]), float(r.x[1]), float(r.fun)
    return beta, nu, best


# --------------------------------------------------------------------------
# sweeps


def _pool_map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))


def four_level_setup(n_atoms: int):
    scheme = LevelScheme(1.5)
    basis = leg_bases(scheme, n_atoms // 2, n_atoms // 2)
    psi0 = initial_state(basis, InitialStateSpec.single(1.5, -1.5))
    return scheme, basis, psi0


def pair_population_average(n_atoms: int, drives: DriveParams, chi_n: float = 1.0) -> float:
    """Long-time average N_{+-1/2}/N for the 4-level pair-production quench."""
    scheme, basis, psi0 = four_level_setup(n_atoms)
    h = build_heff_exact(scheme, basis, drives, chi_n, support=psi0)
    avg = long_time_average(h, psi0, {"n_m": -0.5, "n_p": 0.5})
    return 0.5 * (avg["n_m"] + avg["n_p"]) / n_atoms


def _pair_cell(args):
    n_atoms, drives, chi_n = args
    try:
        return pair_population_average(n_atoms, drives, chi_n), ""
    except ResonanceError as exc:
        return np.nan, f"resonance: {exc}"


def pair_production_sweep(
    delta_a_grid, delta_b_grid, *, n_atoms: int = 100, omega: float = 0.05, chi_n: float = 1.0, workers: int = 1
) -> SweepResult:
    from ladderhop.upa import four_level_phase_boundary

    delta_a_grid = np.atleast_1d(np.asarray(delta_a_grid, float))
    delta_b_grid = np.atleast_1d(np.asarray(delta_b_grid, float))
    tasks = [
        (n_atoms, DriveParams(omega, float(da), omega, float(db)), chi_n) for da in delta_a_grid for db in delta_b_grid
    ]
    results = _pool_map(_pair_cell, tasks, workers)
    data = np.full((delta_a_grid.size, delta_b_grid.size), np.nan)
    errors = {}
    for k, (val, err) in enumerate(results):
        i, j = divmod(k, delta_b_grid.size)
        data[i, j] = val
        if err:
            errors[(i, j)] = err
    b_lo, b_hi = float(delta_b_grid.min()), float(delta_b_grid.max())
    boundary = {
        float(da): four_level_phase_boundary(float(da), chi_n, omega, interval=(min(b_lo, 0.3), max(b_hi, 8.0)))
        for da in delta_a_grid
    }
    meta = {
        "experiment": "phase-diagram",
        "N": n_atoms,
        "omega": omega,
        "chi_n": chi_n,
        "order_parameter": "long-time average N_{+-1/2}/N (diagonal ensemble)",
        "upa_boundary": {str(k): v for k, v in boundary.items()},
    }
    return SweepResult({"delta_a": delta_a_grid, "delta_b": delta_b_grid}, {"n_pm_half": data}, errors, meta)


def six_level_setup(n_atoms: int, p_m32: float):
    scheme = LevelScheme(2.5)
    basis = leg_bases(scheme, n_atoms // 2, n_atoms - n_atoms // 2)
    upper = {-1.5: p_m32, 2.5: 1.0 - p_m32}
    psi0 = initial_state(basis, InitialStateSpec(upper, {-0.5: 1.0}))
    return scheme, basis, psi0


def _chiral_cell(args):
    n_atoms, p, drives, chi_n = args
    try:
        scheme, basis, psi0 = six_level_setup(n_atoms, p)
        h = build_heff_exact(scheme, basis, drives, chi_n, support=psi0)
        avg = long_time_average(h, psi0, {"right": 1.5, "left": -2.5})
    except ResonanceError as exc:
        return np.nan, np.nan, f"resonance: {exc}"
    diff = avg["right"] - avg["left"]
    total = avg["right"] + avg["left"]
    return diff, total, ""


def chiral_transport(
    p_grid,
    delta_b_grid,
    *,
    n_atoms: int = 20,
    delta_a: float = -3.0,
    omega: float = 0.05,
    chi_n: float = 1.0,
    workers: int = 1,
    series_cells=(),
    tau_grid=None,
) -> tuple[SweepResult, dict]:
    """Grid of long-time N_diff/N_sum plus short-time N_diff(tau) for selected (p, Delta_B)."""
    p_grid = np.atleast_1d(np.asarray(p_grid, float))
    delta_b_grid = np.atleast_1d(np.asarray(delta_b_grid, float))
    tasks = [
        (n_atoms, float(p), DriveParams(omega, delta_a, omega, float(db)), chi_n) for p in p_grid for db in delta_b_grid
    ]
    results = _pool_map(_chiral_cell, tasks, workers)
    shape = (p_grid.size, delta_b_grid.size)
    ratio, ndiff, nsum = np.full(shape, np.nan), np.full(shape, np.nan), np.full(shape, np.nan)
    errors = {}
    for k, (d, s, err) in enumerate(results):
        ij = divmod(k, delta_b_grid.size)
        if err:
            errors[ij] = err
            continue
        ndiff[ij], nsum[ij] = d / n_atoms, s / n_atoms
        if s < 1e-6:
            errors[ij] = "undefined balance: N_sum below 1e-6"
        else:
            ratio[ij] = d / s
    meta = {"experiment": "chiral", "N": n_atoms, "delta_a": delta_a, "omega": omega, "chi_n": chi_n}
    sweep = SweepResult(
        {"p_m3_2": p_grid, "delta_b": delta_b_grid},
        {"ndiff_over_nsum": ratio, "ndiff_over_n": ndiff, "nsum_over_n": nsum},
        errors,
        meta,
    )
    series = {}
    tau_grid = np.linspace(0, 10, 201) if tau_grid is None else tau_grid
    for p, db in series_cells:
        series[(p, db)] = chiral_series(p, db, n_atoms=n_atoms, delta_a=delta_a, omega=omega, chi_n=chi_n, tau_grid=tau_grid)
    return sweep, series


def chiral_series(p, delta_b, *, n_atoms=20, delta_a=-3.0, omega=0.05, chi_n=1.0, tau_grid=None) -> TimeSeries:
    scheme, basis, psi0 = six_level_setup(n_atoms, p)
    h = build_heff_exact(scheme, basis, DriveParams(omega, delta_a, omega, delta_b), chi_n, support=psi0)
    ts = evolve(h, psi0, np.linspace(0, 10, 201) if tau_grid is None else tau_grid)
    ts.channels["N_diff"] = ts["n[+1.5]"] - ts["n[-2.5]"]
    ts.channels["N_sum"] = ts["n[+1.5]"] + ts["n[-2.5]"]
    ts.metadata["p_m3_2"] = p
    return ts


def lightcone_run(
    delta_b: float, *, n_atoms: int = 10, delta_a: float = -3.0, omega: float = 0.05, chi_n: float = 1.0, tau_grid=None
) -> tuple[TimeSeries, dict, float]:
    """10-level correlation spreading: C(0,r) series, arrival times and the threshold used."""
    scheme = LevelScheme(4.5)
    basis = leg_bases(scheme, n_atoms // 2, n_atoms - n_atoms // 2)
    psi0 = initial_state(basis, InitialStateSpec.single(4.5, -4.5))
    h = build_heff_exact(scheme, basis, DriveParams(omega, delta_a, omega, delta_b), chi_n, support=psi0)
    sites = [r for r in range(-4, 5) if r != 0]
    tau_grid = np.linspace(0, 150, 1501) if tau_grid is None else tau_grid
    ts = evolve(h, psi0, tau_grid, correlator_sites=sites)
    corr = {r: ts[f"C(0,{r})"] for r in sites}
    threshold = light_cone_threshold(corr, n_atoms)
    return ts, light_cone_front(tau_grid, corr, threshold=threshold), threshold


def pair_series(n_atoms: int, drives: DriveParams, chi_n: float = 1.0, tau_grid=None) -> TimeSeries:
    scheme, basis, psi0 = four_level_setup(n_atoms)
    h = build_heff_exact(scheme, basis, drives, chi_n, support=psi0)
    ts = evolve(h, psi0, np.linspace(0, 20, 401) if tau_grid is None else tau_grid)
    ts.channels["n_pm_half"] = 0.5 * (ts["n[+0.5]"] + ts["n[-0.5]"]) / n_atoms
    return ts
