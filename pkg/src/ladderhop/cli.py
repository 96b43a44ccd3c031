"""Command-line front end: ``ladderhop <subcommand> --config run.yaml``.

Config files are YAML (or JSON); every energy is in units of chi N.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ladderhop import dynamics, fullmodel, upa
from ladderhop.errors import DomainError, LadderError
from ladderhop.heff import DriveParams, build_heff_exact, shift_suppression_diagnostic, strongest_hop_target
from ladderhop.ladder import LevelScheme, leg_bases
from ladderhop.results import SweepResult, TimeSeries, _fmt, _jsonable, param_hash

log = logging.getLogger("ladderhop")

SUBCOMMANDS = ("evolve", "phase-diagram", "chiral", "lightcone", "upa", "benchmark", "fss", "identities", "validate")


class ConfigError(DomainError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# --------------------------------------------------------------------------
# configuration


def _grid(spec, path: str) -> list[float]:
    """A list of numbers, a scalar, or {start, stop, num}."""
    if spec is None:
        return []
    if isinstance(spec, dict):
        try:
            return [float(x) for x in np.linspace(spec["start"], spec["stop"], int(spec["num"]))]
        except KeyError as exc:
            raise ConfigError(path, f"range needs start/stop/num (missing {exc.args[0]})") from None
    if isinstance(spec, (int, float)):
        return [float(spec)]
    try:
        return [float(x) for x in spec]
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected a number list, got {spec!r}") from None


@dataclass
class SimConfig:
    F: float = 1.5
    N: int = 20
    chi_n: float = 1.0
    drives: dict = field(default_factory=lambda: asdict(DriveParams()))
    initial: dict = field(default_factory=dict)  # {"upper": {m: p}, "lower": {m: p}}
    time: dict = field(default_factory=lambda: {"tau_max": 50.0, "samples": 500})
    sweep: dict = field(default_factory=dict)
    zeeman: dict = field(default_factory=dict)
    numerics: dict = field(
        default_factory=lambda: {
            "dense_cap": 4000,
            "krylov_tol": 1e-9,
            "eps_deg": 1e-10,
            "integrator_tol": 1e-5,
            "max_excitations": None,
            "workers": None,
        }
    )
    output: str = "out"

    @classmethod
    def from_dict(cls, raw: dict) -> "SimConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a mapping")
        known = set(cls.__dataclass_fields__)
        extra = set(raw) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown field")
        cfg = cls()
        for key, value in raw.items():
            default = getattr(cfg, key)
            if isinstance(default, dict) and isinstance(value, dict):
                merged = dict(default)
                merged.update(value)
                value = merged
            setattr(cfg, key, value)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "SimConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
        try:
            raw = yaml.safe_load(text) if str(path).endswith((".yaml", ".yml")) else json.loads(text)
        except (yaml.YAMLError, json.JSONDecodeError) as exc:
            raise ConfigError(str(path), f"unparseable config: {exc}") from None
        return cls.from_dict(raw or {})

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def snapshot(self) -> dict:
        """Config as recorded in sidecars: everything that affects results
        (output location and worker count do not)."""
        d = self.to_dict()
        d.pop("output")
        d["numerics"].pop("workers", None)
        return d

    def validate(self) -> None:
        try:
            self.F = float(self.F)
            LevelScheme(self.F)
        except (TypeError, ValueError, DomainError) as exc:
            raise ConfigError("F", str(exc)) from None
        if not isinstance(self.N, int) or self.N <= 0:
            raise ConfigError("N", f"atom number must be a positive integer, got {self.N!r}")
        if not self.chi_n > 0:
            raise ConfigError("chi_n", "must be positive")
        for key in ("omega_a", "delta_a", "omega_b", "delta_b"):
            if not isinstance(self.drives.get(key), (int, float)):
                raise ConfigError(f"drives.{key}", "must be a number")
        extra = set(self.drives) - {"omega_a", "delta_a", "omega_b", "delta_b"}
        if extra:
            raise ConfigError(f"drives.{sorted(extra)[0]}", "unknown field")
        try:
            d = self.drive_params()
        except DomainError as exc:
            raise ConfigError("drives", str(exc)) from None
        if d.omega_a and d.omega_b and d.delta_a * d.delta_b >= 0:
            log.warning("drives: Delta_A Delta_B >= 0; the two-drive cancellation assumes opposite signs")
        for key in ("tau_max", "samples"):
            if not self.time.get(key, 0) > 0:
                raise ConfigError(f"time.{key}", "must be positive")
        for key in ("dense_cap", "krylov_tol", "eps_deg", "integrator_tol"):
            if not self.numerics.get(key, 0) > 0:
                raise ConfigError(f"numerics.{key}", "tolerances and caps must be positive")
        for side in ("upper", "lower"):
            probs = self.initial.get(side)
            if probs is None:
                continue
            if not isinstance(probs, dict) or abs(sum(probs.values()) - 1) > 1e-12:
                raise ConfigError(f"initial.{side}", "must map sublevels to probabilities summing to 1")
        if self.initial and self.N % 2:
            raise ConfigError("N", "must be even when the initial state splits into two halves")
        for key, spec in self.sweep.items():
            if key not in ("series", "sites"):
                _grid(spec, f"sweep.{key}")
        if self.zeeman and not ({"b_gauss"} <= set(self.zeeman) or {"delta_e"} <= set(self.zeeman)):
            raise ConfigError("zeeman", "give b_gauss or delta_e (and optionally delta_g)")

    # helpers ---------------------------------------------------------------

    def drive_params(self, **override) -> DriveParams:
        vals = {k: float(v) for k, v in self.drives.items()}
        vals.update(override)
        return DriveParams(**vals)

    @property
    def scheme(self) -> LevelScheme:
        return LevelScheme(self.F)

    def tau_grid(self) -> np.ndarray:
        return np.linspace(0.0, float(self.time["tau_max"]), int(self.time["samples"]))

    def axis(self, name: str, default=None) -> list[float]:
        vals = _grid(self.sweep.get(name), f"sweep.{name}")
        return vals if vals else ([] if default is None else list(default))

    def workers(self) -> int:
        w = self.numerics.get("workers")
        return int(w) if w else (os.cpu_count() or 1)

    def zeeman_params(self, b_gauss: float | None = None) -> fullmodel.ZeemanParams:
        z = self.zeeman
        if b_gauss is not None:
            return fullmodel.ZeemanParams.from_field(b_gauss, z.get("chi_n_mhz", 1.0))
        if not z:
            return fullmodel.ZeemanParams()
        if "b_gauss" in z:
            return fullmodel.ZeemanParams.from_field(float(z["b_gauss"]), z.get("chi_n_mhz", 1.0))
        return fullmodel.ZeemanParams(float(z["delta_e"]), float(z.get("delta_g", 0.0)))

    def initial_spec(self) -> dynamics.InitialStateSpec:
        scheme = self.scheme
        up = self.initial.get("upper", {scheme.F: 1.0})
        lo = self.initial.get("lower", {-scheme.F: 1.0})
        return dynamics.InitialStateSpec({float(k): v for k, v in up.items()}, {float(k): v for k, v in lo.items()})


# --------------------------------------------------------------------------
# emission


class Emitter:
    """Single writer for every artifact of a run."""

    def __init__(self, out: Path, plot: bool):
        self.out = Path(out)
        self.plot = plot
        self.written: list[Path] = []

    def series(self, ts: TimeSeries, stem: str):
        self.written += ts.write(self.out, stem)

    def sweep(self, sw: SweepResult, stem: str):
        self.written += sw.write(self.out, stem)

    def table(self, rows: list[dict], stem: str, meta: dict):
        self.out.mkdir(parents=True, exist_ok=True)
        base = self.out / f"{stem}_{param_hash(meta)}"
        cols = list(rows[0]) if rows else []
        lines = [",".join(cols)] + [",".join(_fmt(r[c]) for c in cols) for r in rows]
        csv_path, json_path = base.parent / (base.name + ".csv"), base.parent / (base.name + ".json")
        csv_path.write_text("\n".join(lines) + "\n")
        json_path.write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")
        self.written += [csv_path, json_path]

    def figure(self, fig, stem: str):
        if not self.plot:
            return
        import matplotlib.pyplot as plt

        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / (stem + ".svg")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        self.written.append(path)


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "ladderhop"
    return plt


def _line_plot(em: Emitter, ts: TimeSeries, names, stem: str, ylabel: str):
    if not em.plot:
        return
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in names:
        ax.plot(ts.times, ts[name], label=name)
    ax.set_xlabel(r"$\tau = \Omega^2 t / 2\pi\chi N$")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize="small")
    em.figure(fig, stem)


def _heatmap(em: Emitter, x, y, z, stem: str, xlabel: str, ylabel: str, overlay=None):
    if not em.plot:
        return
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    mesh = ax.pcolormesh(x, y, np.ma.masked_invalid(z), shading="nearest")
    fig.colorbar(mesh, ax=ax)
    if overlay:
        for xs, ys in overlay:
            ax.plot(xs, ys, "k.", ms=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    em.figure(fig, stem)


# --------------------------------------------------------------------------
# subcommands; each returns a list of (check name, passed)


def cmd_evolve(cfg: SimConfig, em: Emitter):
    scheme = cfg.scheme
    n_up = cfg.N // 2
    basis = leg_bases(scheme, n_up, cfg.N - n_up)
    psi0 = dynamics.initial_state(basis, cfg.initial_spec())
    h = build_heff_exact(scheme, basis, cfg.drive_params(), cfg.chi_n, dense_cap=cfg.numerics["dense_cap"], support=psi0)
    ts = dynamics.evolve(h, psi0, cfg.tau_grid(), krylov_tol=cfg.numerics["krylov_tol"], dense_cap=cfg.numerics["dense_cap"])
    ts.metadata["config"] = cfg.snapshot()
    em.series(ts, "evolve")
    pops = [n for n in ts.names() if n.startswith("n[")]
    _line_plot(em, ts, pops, "evolve", "population")
    return conservation_checks(ts, cfg.N)


def conservation_checks(ts: TimeSeries, n_atoms: int, *, full: bool = False):
    checks = [
        ("norm drift < 1e-7", float(np.max(np.abs(ts["norm"] - 1))) < 1e-7),
        ("total number to 1e-8", float(np.max(np.abs(ts["N_total"] - n_atoms))) < 1e-8),
    ]
    if full:
        k = ts["N_e+J_z"]
        checks.append(("N_e + J_z constant to 1e-7", float(np.ptp(k)) < 1e-7))
    else:
        checks.append(("leg populations constant to 1e-8", float(max(np.ptp(ts["N_upper"]), np.ptp(ts["N_lower"]))) < 1e-8))
    return checks


def cmd_phase_diagram(cfg: SimConfig, em: Emitter):
    da = cfg.axis("delta_a", [cfg.drives["delta_a"]])
    db = cfg.axis("delta_b", [cfg.drives["delta_b"]])
    omega = float(cfg.drives["omega_a"])
    sw = dynamics.pair_production_sweep(da, db, n_atoms=cfg.N, omega=omega, chi_n=cfg.chi_n, workers=cfg.workers())
    sw.metadata["config"] = cfg.snapshot()
    em.sweep(sw, "phase_diagram")
    rows = [
        {"delta_a": float(a), "root": r}
        for a in da
        for r in upa.four_level_phase_boundary(a, cfg.chi_n, omega, interval=(0.21, max(10.0, max(db))))
    ]
    em.table(rows, "phase_boundary", {"experiment": "upa-boundary", "omega": omega, "chi_n": cfg.chi_n})
    overlay = [([r["root"] for r in rows], [r["delta_a"] for r in rows])]
    _heatmap(em, db, da, sw.data["n_pm_half"], "phase_diagram", r"$\Delta_B/\chi N$", r"$\Delta_A/\chi N$", overlay)
    return [("grid complete", not np.all(np.isnan(sw.data["n_pm_half"])))]


def cmd_chiral(cfg: SimConfig, em: Emitter):
    ps = cfg.axis("p_m3_2", [0.1, 0.9])
    db = cfg.axis("delta_b", [cfg.drives["delta_b"]])
    cells = [tuple(map(float, c)) for c in cfg.sweep.get("series", [])]
    sw, series = dynamics.chiral_transport(
        ps,
        db,
        n_atoms=cfg.N,
        delta_a=float(cfg.drives["delta_a"]),
        omega=float(cfg.drives["omega_a"]),
        chi_n=cfg.chi_n,
        workers=cfg.workers(),
        series_cells=cells,
        tau_grid=cfg.tau_grid(),
    )
    sw.metadata["config"] = cfg.snapshot()
    em.sweep(sw, "chiral")
    _heatmap(em, db, ps, sw.data["ndiff_over_nsum"], "chiral", r"$\Delta_B/\chi N$", r"$p_{-3/2}$")
    checks = []
    for (p, b), ts in series.items():
        u = upa.six_level_series(cfg.drive_params(delta_b=b), cfg.chi_n, p, ts.times)
        ts.channels["N_diff_upa"] = u["N_diff"]
        em.series(ts, f"chiral_series_p{p:g}_db{b:g}")
        _line_plot(em, ts, ["N_diff", "N_diff_upa"], f"chiral_series_p{p:g}_db{b:g}", r"$N_{\rm diff}$")
        checks += conservation_checks(ts, cfg.N)
    return checks


def cmd_lightcone(cfg: SimConfig, em: Emitter):
    checks = []
    for db in cfg.axis("delta_b", [cfg.drives["delta_b"]]):
        ts, front, thr = dynamics.lightcone_run(
            db,
            n_atoms=cfg.N,
            delta_a=float(cfg.drives["delta_a"]),
            omega=float(cfg.drives["omega_a"]),
            chi_n=cfg.chi_n,
            tau_grid=cfg.tau_grid(),
        )
        ts.metadata["config"] = cfg.snapshot()
        em.series(ts, f"lightcone_db{db:g}")
        corr = {r: ts[f"C(0,{r})"] for r in front}
        alt = dynamics.light_cone_front(ts.times, corr, threshold=-0.1 * max(float(np.max(np.abs(c))) for c in corr.values()))
        rows = [
            {"r": r, "arrival_tau": np.nan if front[r] is None else front[r], "arrival_tau_10pct": np.nan if alt[r] is None else alt[r]}
            for r in sorted(front)
        ]
        em.table(rows, f"lightcone_front_db{db:g}", {"delta_b": db, "threshold": thr, "N": cfg.N})
        if em.plot:
            sites = sorted(front)
            z = np.array([ts[f"C(0,{r})"] for r in sites])
            _heatmap(em, ts.times, sites, z, f"lightcone_db{db:g}", r"$\tau$", "r")
        checks += conservation_checks(ts, cfg.N)
    return checks


def cmd_upa(cfg: SimConfig, em: Emitter):
    d = cfg.drive_params()
    K = upa.four_level_K(d, cfg.chi_n)
    roots = upa.four_level_phase_boundary(d.delta_a, cfg.chi_n, (d.omega_a, d.omega_b))
    ts4 = upa.four_level_series(d, cfg.chi_n, cfg.tau_grid(), cfg.N)
    em.series(ts4, "upa4")
    meta = {"K": [K.K1, K.K2, K.K3], "phase": K.phase, "roots": roots, "drives": asdict(d)}
    rows = []
    for p in cfg.axis("p_m3_2", [0.1, 0.9]):
        q = upa.six_level_quadratic(d, cfg.chi_n, p)
        res = upa.bdg_solve(q, chi_n=cfg.chi_n)
        for k, eps in enumerate(np.sort_complex(res.eigenvalues)):
            rows.append({"p_m3_2": p, "k": k, "re": eps.real, "im": eps.imag, "phase": res.phase})
        em.series(upa.six_level_series(d, cfg.chi_n, p, cfg.tau_grid()), f"upa6_p{p:g}")
    em.table(rows, "bdg_spectrum", meta)
    _line_plot(em, ts4, ["N_pm_half"], "upa4", r"$N_{\pm1/2}$")
    return [("boundary roots found", bool(roots))]


def cmd_benchmark(cfg: SimConfig, em: Emitter):
    scheme = cfg.scheme
    d = cfg.drive_params()
    tol = cfg.numerics["integrator_tol"]
    cutoff = cfg.numerics.get("max_excitations")
    full, eff, summary = fullmodel.benchmark_heff(
        scheme, cfg.N, d, cfg.chi_n, cfg.tau_grid(), zeeman=cfg.zeeman_params(), max_excitations=cutoff, tol=tol
    )
    full.metadata["config"] = cfg.snapshot()
    em.series(full, "benchmark_full")
    em.series(eff, "benchmark_heff")
    em.table(
        [{"channel": k, "max": v["max"], "rms": v["rms"]} for k, v in summary["channels"].items()],
        "benchmark_deviation",
        {"benchmark": summary, "config": cfg.snapshot()},
    )
    checks = [("max fractional deviation < 0.05", summary["max_deviation"] < 0.05)]
    checks += conservation_checks(full, cfg.N, full=True)
    fields = cfg.zeeman.get("scan_gauss")
    if fields:
        rows = []
        for b in [0.0] + [float(x) for x in fields]:
            h = fullmodel.build_full(scheme, (cfg.N // 2, cfg.N // 2), d, cfg.chi_n, cfg.zeeman_params(b))
            psi = fullmodel.full_initial_state(h.basis, scheme.F, -scheme.F)
            ts = fullmodel.integrate(h, psi, cfg.tau_grid(), tol=tol, max_excitations=cutoff)
            moved = fullmodel.transferred_population(ts, scheme, cfg.N)
            rows.append({"b_gauss": b, "delta_e": h.zeeman.delta_e, "peak_transfer": float(moved.max())})
            ts.channels["transferred"] = moved
            em.series(ts, f"zeeman_B{b:g}")
        em.table(rows, "zeeman_scan", {"config": cfg.snapshot()})
    return checks


def cmd_fss(cfg: SimConfig, em: Emitter):
    sizes = [int(n) for n in cfg.axis("sizes", [20, 40, 60, 80, 100])]
    omega = float(cfg.drives["omega_a"])
    da = float(cfg.drives["delta_a"])
    roots = upa.four_level_phase_boundary(da, cfg.chi_n, omega)
    checks = []
    for label, crit, axis in zip(("1", "2"), roots[:2], ("delta_b_1", "delta_b_2")):
        grid = cfg.axis(axis, np.linspace(crit - 0.3, crit + 0.3, 21))
        curves = fss_curves(sizes, grid, da, omega, cfg.chi_n, cfg.workers())
        beta, nu, res = dynamics.finite_size_collapse(curves, crit)
        rows = [{"N": n, "delta_b": x, "n_bar": y} for n, (xs, ys) in curves.items() for x, y in zip(xs, ys)]
        em.table(rows, f"fss_{label}", {"critical": crit, "beta": beta, "nu": nu, "residual": res, "sizes": sizes})
        checks.append((f"collapse {label} converged", np.isfinite(res)))
    return checks


def _fss_cell(args):
    n, db, da, omega, chi_n = args
    return dynamics.pair_population_average(n, DriveParams(omega, da, omega, db), chi_n)


def fss_curves(sizes, grid, delta_a, omega, chi_n, workers=1) -> dict:
    tasks = [(n, float(x), delta_a, omega, chi_n) for n in sizes for x in grid]
    vals = dynamics._pool_map(_fss_cell, tasks, workers)
    out = {}
    for k, n in enumerate(sizes):
        out[n] = (np.asarray(grid, float), np.asarray(vals[k * len(grid) : (k + 1) * len(grid)]))
    return out


def cmd_identities(cfg: SimConfig, em: Emitter):
    rows = []
    for F in (1.5, 2.5):
        for n in (1, 2):
            r1, r2 = fullmodel.verify_operator_identities(LevelScheme(F), n, delta_a=float(cfg.drives["delta_a"]), chi_n=cfg.chi_n)
            c1, c2 = fullmodel.verify_operator_identities(
                LevelScheme(F), n, delta_a=float(cfg.drives["delta_a"]), chi_n=cfg.chi_n, swapped=True
            )
            rows.append({"F": F, "N": n, "residual_L": r1, "residual_R": r2, "swapped_L": c1, "swapped_R": c2})
    em.table(rows, "identities", {"experiment": "identities", "delta_a": cfg.drives["delta_a"]})
    return [(f"F={r['F']:g} N={r['N']} residual < 1e-10", max(r["residual_L"], r["residual_R"]) < 1e-10) for r in rows]


def validation_rows(cfg: SimConfig, margin: float = 10.0) -> list[dict]:
    """Regime checks for the approximations behind the effective model."""
    d = cfg.drive_params()
    rows = []
    omegas = [abs(d.omega_a), abs(d.omega_b)]
    om = max(omegas)
    if om > 0:
        scales = [abs(x) for x, o in ((d.delta_a, d.omega_a), (d.delta_b, d.omega_b)) if o] + [cfg.chi_n]
        ratio = min(scales) / om
        rows.append({"row": "adiabatic elimination of excited states", "value": ratio, "status": "pass" if ratio >= margin else "warn"})
    z = cfg.zeeman_params()
    zs = abs(z.delta_e) * cfg.F
    ratio = np.inf if zs == 0 else cfg.chi_n / zs
    rows.append({"row": "weak magnetic field (chi N vs delta_e F_e)", "value": ratio, "status": "pass" if ratio >= margin else "warn"})
    if d.omega_a and d.omega_b:
        ok = d.delta_a * d.delta_b < 0
        rows.append({"row": "opposite-sign detunings", "value": d.delta_a * d.delta_b, "status": "pass" if ok else "warn"})
    try:
        scheme = cfg.scheme
        n_up = cfg.N // 2
        basis = leg_bases(scheme, n_up, cfg.N - n_up)
        psi0 = dynamics.initial_state(basis, cfg.initial_spec())
        h = build_heff_exact(scheme, basis, d, cfg.chi_n, support=psi0)
        target = strongest_hop_target(scheme, basis, psi0)
        gap, hop, ratio = shift_suppression_diagnostic(scheme, basis, d, cfg.chi_n, psi0, target, heff=h)
        rows.append({"row": "shift suppression (gap / hop)", "value": ratio, "status": "pass" if ratio < 1 else "warn"})
    except LadderError as exc:
        rows.append({"row": "shift suppression (gap / hop)", "value": np.nan, "status": f"warn: {exc}"})
    return rows


def cmd_validate(cfg: SimConfig, em: Emitter):
    rows = validation_rows(cfg)
    em.table(rows, "validate", {"config": cfg.snapshot()})
    for r in rows:
        print(f"{r['status']:>5}  {r['row']}: {r['value']:.4g}")
    return [(r["row"], r["status"] == "pass") for r in rows]


COMMANDS = {
    "evolve": cmd_evolve,
    "phase-diagram": cmd_phase_diagram,
    "chiral": cmd_chiral,
    "lightcone": cmd_lightcone,
    "upa": cmd_upa,
    "benchmark": cmd_benchmark,
    "fss": cmd_fss,
    "identities": cmd_identities,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ladderhop", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="YAML or JSON config file (defaults used when omitted)")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--workers", type=int, help="parallel workers for sweeps")
    p.add_argument("--check", action="store_true", help="exit nonzero if any check fails")
    p.add_argument("--plot", dest="plot", action="store_true", default=True, help="write SVG plots (default)")
    p.add_argument("--no-plot", dest="plot", action="store_false")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = SimConfig.load(args.config) if args.config else SimConfig.from_dict({})
        if args.workers:
            cfg.numerics["workers"] = args.workers
        if args.out:
            cfg.output = args.out
        em = Emitter(Path(cfg.output), args.plot)
        checks = COMMANDS[args.subcommand](cfg, em)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LadderError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    failed = [name for name, ok in checks if not ok]
    for name, ok in checks:
        log.info("%s %s", "PASS" if ok else "FAIL", name)
    for path in em.written:
        print(path)
    if args.check and failed:
        for name in failed:
            print(f"check failed: {name}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
