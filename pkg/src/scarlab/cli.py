"""Config-driven experiment runner.

Subcommands: ``evolve`` (trajectories and observables), ``spectrum``
(diagonalization, gap-ratio statistics, overlap and fractional-energy
data), ``sweep`` (parameter grid with lifetime fits), ``geometry``
(zig-zag solver tables), ``fit`` (lifetime fit of an existing CSV) and
``validate`` (dry-run dimension/memory report).

Exit codes: 0 success, 2 config error, 3 infeasible model (empty sector,
no geometry solution, dimension over cap, incompatible symmetry),
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import FitError, fit_lifetime, perturbation_exponent, regress_tau_sigma, shot_average
from .basis import (EmptySectorError, IncompatibleSymmetryError, SectorConstraint,
                    SymmetrySector, enumerate_basis, symmetry_reduce)
from .config import (ConfigError, config_hash, lattice_from_config, load_config,
                     sector_from_config, write_csv, write_manifest, write_schema)
from .dynamics import (FloquetSchedule, KrylovError, ObservableSpec, evolve,
                       floquet_evolve, four_rung_floquet_schedule, measure)
from .lattices import LatticeSpec
from .models import (DisorderModel, FermiHubbardParams, HHBHParams, LadderParams,
                     NoSolutionError, build_coupling_graph, build_fermi_hubbard,
                     build_hhbh, build_jw_partner_ladder, build_pi_flux_ladder,
                     build_spin_exchange, initial_state, sample_disorder,
                     solve_zigzag_geometry)
from .operators import compile_reduced_operator
from .spectral import (DimensionCapError, full_diagonalize, fractional_energy_width,
                       level_spacing_stats, measured_tower_spacing, overlap_spectrum)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


# ---------------------------------------------------------------------------
# model construction from a resolved config
# ---------------------------------------------------------------------------

def build_model(cfg: dict, basis, seed: int | None = None, shot: int | None = None):
    """Build the configured Hamiltonian; returns (operator, metadata)."""
    m = cfg["model"]
    fam = m["family"]
    meta: dict = {"family": fam}
    dis = cfg.get("disorder", {})
    model_disorder = None
    if dis.get("kind") and shot is not None:
        model_disorder = DisorderModel(
            kind=dis["kind"],
            sigma_mu=float(dis.get("sigma_mu", 0.0)),
            sigma_r=float(dis.get("sigma_r", 0.0)),
            sigma_z=float(dis.get("sigma_z", 0.0)),
            delta_phi=float(dis.get("delta_phi", 0.0)),
            seed=int(dis.get("base_seed", seed or 0)),
        )

    if fam in ("pi_flux_ladder", "jw_partner_ladder"):
        params = LadderParams(L=int(m["L"]), t_perp=float(m.get("t_perp", 1.0)),
                              t_par=float(m.get("t_par", 0.0)),
                              t_nn=float(m.get("t_nn", 0.0)),
                              t_nnn=float(m.get("t_nnn", 0.0)),
                              boundary=m.get("boundary", "open"))
        meta["scar_period"] = math.pi / abs(params.t_perp)
        if fam == "pi_flux_ladder":
            return build_pi_flux_ladder(basis, params), meta
        return build_jw_partner_ladder(basis, params), meta

    if fam == "hhbh":
        params = HHBHParams(L=int(m["L"]), J=float(m.get("J", 1.0)),
                            J_prime=float(m.get("J_prime", 1.0)),
                            plaquette_flux=float(m.get("flux", math.pi)),
                            U=float(m.get("U", 0.0)), n_max=int(m.get("n_max", 1)),
                            chemical_potentials=tuple(m.get("chemical_potentials", ())),
                            boundary=m.get("boundary", "open"),
                            gauge=m.get("gauge", "rung"))
        if model_disorder is not None:
            params = sample_disorder(model_disorder, params, shot)
        meta["scar_period"] = math.pi / abs(params.J_prime)
        return build_hhbh(basis, params), meta

    if fam == "dipolar_chain":
        geom = solve_zigzag_geometry(float(m["ratio"]), math.radians(float(m.get("tilt_deg", 30.0))),
                                     n_rungs=int(m["L"]), seed=int(m.get("geometry_seed", 0)))
        if model_disorder is not None:
            geom = sample_disorder(model_disorder, geom, shot)
        cutoff = m.get("cutoff")
        graph = build_coupling_graph(geom, cutoff)
        meta["alpha_deg"] = math.degrees(geom.alpha)
        meta["beta_deg"] = math.degrees(geom.beta)
        j01 = abs(graph.J[0, 1])
        meta["scar_period"] = 2 * math.pi / j01
        meta["geometry"] = geom
        meta["graph"] = graph
        return build_spin_exchange(basis, graph), meta

    params = FermiHubbardParams(geometry=basis.lattice, t=float(m.get("t", 1.0)),
                                U=float(m.get("U", 0.0)), W=float(m.get("W", 0.0)),
                                h_x=float(m.get("h_x", 0.0)), h_z=float(m.get("h_z", 0.0)))
    meta["scar_period"] = 2 * math.pi / abs(params.h_x) if params.h_x else math.pi
    return build_fermi_hubbard(basis, params), meta


def time_grid(cfg: dict, meta: dict) -> np.ndarray:
    ev = cfg["evolution"]
    t_max = float(ev.get("t_max", 10.0))
    if "dt" in ev:
        dt = float(ev["dt"])
    else:
        period = meta.get("scar_period", math.pi)
        dt = period / int(ev.get("samples_per_period", 200))
    n = int(round(t_max / dt))
    return np.linspace(0.0, n * dt, n + 1)


def observable_specs(cfg: dict) -> list[ObservableSpec]:
    obs = cfg["observables"]
    specs = []
    for kind in obs.get("kinds", ["generalized_imbalance"]):
        specs.append(ObservableSpec(kind, site=obs.get("site")))
    return specs


def _initial_state(cfg, basis):
    init = cfg["initial_state"]
    if "occupations" in init:
        from .operators import QuantumState
        occ = init["occupations"]
        if basis.lattice.particle_kind == "spinful_fermion":
            occ = [tuple(p) for p in occ]
        return QuantumState.from_config(basis, tuple(occ))
    return initial_state(basis, init.get("name", "scar"))


def _floquet_schedule(cfg, meta):
    fl = cfg["evolution"].get("floquet")
    if not fl or not fl.get("enabled", True):
        return None
    period = float(fl.get("period", meta.get("scar_period", math.pi) / 2.0))
    return four_rung_floquet_schedule(int(cfg["model"]["L"]), period,
                                      pulse_duration=float(fl.get("pulse_duration", 0.0))), \
        int(fl.get("samples_per_period", 1))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _run_single_evolution(cfg, seed, shot):
    lattice = lattice_from_config(cfg)
    basis = enumerate_basis(lattice, sector_from_config(cfg, lattice))
    H, meta = build_model(cfg, basis, seed=seed, shot=shot)
    psi0 = _initial_state(cfg, basis)
    fl = _floquet_schedule(cfg, meta)
    if fl is not None:
        schedule, spp = fl
        n_periods = int(math.ceil(float(cfg["evolution"].get("t_max", 10.0)) / schedule.period))
        traj = floquet_evolve(H, schedule, psi0, n_periods, samples_per_period=spp)
    else:
        traj = evolve(H, psi0, time_grid(cfg, meta), method=cfg["evolution"].get("method", "auto"))
    series = {}
    for spec in observable_specs(cfg):
        series[spec.kind] = measure(traj, spec, reference=psi0)
    return traj.times, series, meta


def cmd_evolve(cfg, outdir: Path, seed: int, workers: int) -> int:
    run_id = config_hash(cfg, seed)
    rundir = outdir / run_id
    rundir.mkdir(parents=True, exist_ok=True)
    dis = cfg.get("disorder", {})
    shots = int(dis.get("shots", 0)) if dis.get("kind") else 0
    outputs = []
    schema = {}
    if shots == 0:
        times, series, meta = _run_single_evolution(cfg, seed, None)
        header = ["time"] + list(series)
        write_csv(rundir / "evolve.csv", header, [times] + [series[k] for k in series])
        outputs.append("evolve.csv")
        schema["evolve.csv"] = header
    else:
        args = [(cfg, seed, s) for s in range(shots)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_evolve_worker, args))
        else:
            results = [_evolve_worker(a) for a in args]
        times = results[0][0]
        kinds = list(results[0][1])
        for kind in kinds:
            stack = [r[1][kind] for r in results]
            mean, spread = shot_average(stack)
            header = ["time", "mean", "std"] + [f"shot{k}" for k in range(shots)]
            write_csv(rundir / f"shots_{kind}.csv", header, [times, mean, spread] + stack)
            outputs.append(f"shots_{kind}.csv")
            schema[f"shots_{kind}.csv"] = header
    write_schema(rundir, schema)
    write_manifest(rundir, run_id, cfg, seed, outputs)
    print(f"run {run_id}: wrote {', '.join(outputs)} in {rundir}")
    return EXIT_OK


def _evolve_worker(args):
    cfg, seed, shot = args
    times, series, _ = _run_single_evolution(cfg, seed, shot)
    return times, series


def _symmetry_sector(cfg) -> SymmetrySector | None:
    sym = cfg["spectrum"].get("symmetry")
    if not sym:
        return None
    return SymmetrySector(momentum_kx=sym.get("momentum_kx"),
                          reversal_py=sym.get("reversal_py"),
                          legswap_pxp=sym.get("legswap_pxp"),
                          spinflip_f=sym.get("spinflip_f"))


def cmd_spectrum(cfg, outdir: Path, seed: int, dense_cap: int) -> int:
    run_id = config_hash(cfg, seed)
    rundir = outdir / run_id
    rundir.mkdir(parents=True, exist_ok=True)
    lattice = lattice_from_config(cfg)
    basis = enumerate_basis(lattice, sector_from_config(cfg, lattice))
    H, meta = build_model(cfg, basis, seed=seed)
    sector = _symmetry_sector(cfg)
    if sector is not None:
        red = symmetry_reduce(basis, sector, H.symmetry_tags)
        Hred = compile_reduced_operator(red, H.hops, H.diagonal)
        target = Hred
    else:
        target = H
    cap = int(cfg["spectrum"].get("dense_cap", dense_cap))
    eig = full_diagonalize(target, dense_cap=cap)
    outputs, schema = [], {}
    write_csv(rundir / "eigenvalues.csv", ["energy"], [eig.eigenvalues])
    outputs.append("eigenvalues.csv")
    schema["eigenvalues.csv"] = ["energy"]

    stats = None
    if len(eig.eigenvalues) >= 200:
        stats = level_spacing_stats(eig.eigenvalues, window=float(cfg["spectrum"].get("window", 0.5)))
        (rundir / "rstats.json").write_text(json.dumps({
            "r_mean": stats.r_mean,
            "window": stats.window,
            "n_levels": stats.n_levels,
            "n_degenerate_merged": stats.n_degenerate_merged,
        }, indent=2, sort_keys=True))
        outputs.append("rstats.json")

    if sector is None and cfg["initial_state"]:
        psi0 = _initial_state(cfg, basis)
        dec = overlap_spectrum(psi0, eig, source=cfg["initial_state"].get("name", "state"))
        write_csv(rundir / "overlap.csv", ["energy", "weight"], [dec.energies, dec.weights])
        outputs.append("overlap.csv")
        schema["overlap.csv"] = ["energy", "weight"]
        sp = cfg["spectrum"]
        if "delta_e" in sp or sp.get("anchor") == "measured":
            if sp.get("anchor") == "measured" or sp.get("delta_e") == "measured":
                delta_e, anchor = measured_tower_spacing(dec)
                mode = "measured"
            else:
                delta_e = float(sp["delta_e"])
                anchor = float(sp.get("anchor", 0.0))
                mode = "nominal"
            st = fractional_energy_width(dec, delta_e, anchor, anchor_mode=mode)
            write_csv(rundir / "fractional.csv", ["signed_distance", "weight"],
                      [st.signed, st.weights])
            outputs.append("fractional.csv")
            schema["fractional.csv"] = ["signed_distance", "weight"]
            (rundir / "sigma.json").write_text(json.dumps({
                "sigma": st.sigma, "delta_e": st.delta_e, "anchor": st.anchor,
                "anchor_mode": st.anchor_mode}, indent=2, sort_keys=True))
            outputs.append("sigma.json")
    write_schema(rundir, schema)
    extra = {"dimension": target.dim}
    if stats is not None:
        extra["r_mean"] = stats.r_mean
    write_manifest(rundir, run_id, cfg, seed, outputs, extra=extra)
    print(f"run {run_id}: dimension {target.dim}" + (f", r_mean {stats.r_mean:.4f}" if stats else ""))
    return EXIT_OK


def _sweep_point(args):
    cfg, seed, param, value = args
    import copy

    local = copy.deepcopy(cfg)
    local["model"][param] = value
    times, series, meta = _run_single_evolution(local, seed, None)
    kind = local["observables"]["kinds"][0]
    fit = fit_lifetime(times, series[kind],
                       cutoff_rule=local["fit"].get("cutoff_rule", "first_envelope_minimum"),
                       t_max=local["fit"].get("t_max"))
    return value, fit.tau, fit.omega, fit.residual_rms, meta


def cmd_sweep(cfg, outdir: Path, seed: int, workers: int) -> int:
    sw = cfg["sweep"]
    param = sw.get("parameter")
    values = sw.get("values")
    if not param or not values:
        raise ConfigError("[sweep] needs 'parameter' and 'values'")
    run_id = config_hash(cfg, seed)
    rundir = outdir / run_id
    rundir.mkdir(parents=True, exist_ok=True)
    args = [(cfg, seed, param, v) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, args))
    else:
        rows = [_sweep_point(a) for a in args]
    vals = np.array([r[0] for r in rows], dtype=float)
    taus = np.array([r[1] for r in rows])
    omegas = np.array([r[2] for r in rows])
    rms = np.array([r[3] for r in rows])
    header = [param, "tau", "omega", "fit_rms"]
    write_csv(rundir / "scan.csv", header, [vals, taus, omegas, rms])
    summary = {"parameter": param, "n_points": len(vals), "seed": seed}
    if np.all(np.isfinite(taus)) and len(vals) >= 4 and np.all(vals > 0) and np.all(taus > 0):
        exp, err = perturbation_exponent(np.column_stack([vals, taus]))
        summary["exponent_vs_parameter"] = {"value": exp, "stderr": err}
    (rundir / "scan_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    write_schema(rundir, {"scan.csv": header})
    write_manifest(rundir, run_id, cfg, seed, ["scan.csv", "scan_summary.json"])
    print(f"run {run_id}: {len(vals)} sweep points")
    return EXIT_OK


def cmd_geometry(cfg, outdir: Path, seed: int) -> int:
    sw = cfg["sweep"]
    param = sw.get("parameter", "tilt_deg")
    values = sw.get("values")
    if param not in ("tilt_deg", "ratio") or not values:
        raise ConfigError("[sweep] for geometry needs parameter 'tilt_deg' or 'ratio' and values")
    m = cfg["model"]
    run_id = config_hash(cfg, seed)
    rundir = outdir / run_id
    rundir.mkdir(parents=True, exist_ok=True)
    cols = {k: [] for k in ("ratio", "tilt_deg", "alpha_deg", "beta_deg", "j01", "j02",
                            "j13", "j03", "j12", "j04", "j05", "j14", "long_range_ratio")}
    for v in values:
        ratio = float(v) if param == "ratio" else float(m.get("ratio", 0.3))
        tilt = float(v) if param == "tilt_deg" else float(m.get("tilt_deg", 30.0))
        geom = solve_zigzag_geometry(ratio, math.radians(tilt), n_rungs=max(4, int(m.get("L", 4))),
                                     seed=int(m.get("geometry_seed", 0)))
        J = build_coupling_graph(geom).J
        delta_v = (abs(J[1, 4]) + abs(J[0, 5])) / abs(J[0, 2])
        for key, val in (("ratio", ratio), ("tilt_deg", tilt),
                         ("alpha_deg", math.degrees(geom.alpha)),
                         ("beta_deg", math.degrees(geom.beta)),
                         ("j01", J[0, 1]), ("j02", J[0, 2]), ("j13", J[1, 3]),
                         ("j03", J[0, 3]), ("j12", J[1, 2]), ("j04", J[0, 4]),
                         ("j05", J[0, 5]), ("j14", J[1, 4]),
                         ("long_range_ratio", delta_v)):
            cols[key].append(val)
    header = list(cols)
    write_csv(rundir / "geometry.csv", header, [np.array(cols[k]) for k in header])
    write_schema(rundir, {"geometry.csv": header})
    write_manifest(rundir, run_id, cfg, seed, ["geometry.csv"])
    print(f"run {run_id}: {len(values)} geometry points")
    return EXIT_OK


def cmd_fit(cfg, outdir: Path, seed: int, csv_path: str) -> int:
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    names = data.dtype.names
    times = data[names[0]]
    values = data[names[1]]
    fit = fit_lifetime(times, values, cutoff_rule=cfg["fit"].get("cutoff_rule", "first_envelope_minimum"),
                       t_max=cfg["fit"].get("t_max"))
    run_id = config_hash(cfg, seed)
    rundir = outdir / run_id
    rundir.mkdir(parents=True, exist_ok=True)
    (rundir / "fit.json").write_text(json.dumps({
        "amplitude": fit.amplitude, "omega": fit.omega, "phase": fit.phase,
        "tau": fit.tau if math.isfinite(fit.tau) else "inf",
        "tau_err": fit.tau_err, "window": list(fit.window),
        "residual_rms": fit.residual_rms, "n_periods": fit.n_periods,
        "tau_window_spread": fit.tau_window_spread,
    }, indent=2, sort_keys=True))
    write_manifest(rundir, run_id, cfg, seed, ["fit.json"])
    print(f"run {run_id}: tau = {fit.tau}")
    return EXIT_OK


def cmd_validate(cfg, dense_cap: int) -> int:
    report = {"ok": True, "notes": []}
    try:
        lattice = lattice_from_config(cfg)
        constraint = sector_from_config(cfg, lattice)
        basis = enumerate_basis(lattice, constraint)
        report["n_sites"] = lattice.n_sites
        report["sector_dimension"] = basis.dim
        dtype_bytes = 16 if cfg["model"]["family"] in ("hhbh",) else 8
        report["dense_matrix_gib"] = round(basis.dim**2 * dtype_bytes / 2**30, 3)
        cap = int(cfg["spectrum"].get("dense_cap", dense_cap))
        sector = _symmetry_sector(cfg)
        if sector is not None:
            H, _ = build_model(cfg, basis)
            red = symmetry_reduce(basis, sector, H.symmetry_tags)
            report["reduced_dimension"] = red.dim
            effective = red.dim
        else:
            effective = basis.dim
        if effective <= 4000:
            report["runtime_class"] = "dense-evolvable"
        elif effective <= cap:
            report["runtime_class"] = "dense-diagonalizable"
        else:
            report["runtime_class"] = "krylov-only"
            report["notes"].append(
                f"dimension {effective} over dense cap {cap}: full diagonalization refused")
    except (EmptySectorError, IncompatibleSymmetryError, NoSolutionError) as exc:
        report["ok"] = False
        report["notes"].append(str(exc))
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="scarlab",
                                     description="frustrated-scar experiment runner")
    parser.add_argument("command", choices=["evolve", "spectrum", "sweep", "geometry",
                                            "fit", "validate"])
    parser.add_argument("--config", required=True)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--outdir", default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--dense-cap", type=int, default=16000)
    parser.add_argument("--csv", default=None, help="input series for the fit command")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    outdir = Path(args.outdir) if args.outdir else Path(cfg["output"].get("directory", "runs"))
    try:
        if args.command == "evolve":
            return cmd_evolve(cfg, outdir, args.seed, args.workers)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, outdir, args.seed, args.dense_cap)
        if args.command == "sweep":
            return cmd_sweep(cfg, outdir, args.seed, args.workers)
        if args.command == "geometry":
            return cmd_geometry(cfg, outdir, args.seed)
        if args.command == "fit":
            if not args.csv:
                print("fit requires --csv", file=sys.stderr)
                return EXIT_CONFIG
            return cmd_fit(cfg, outdir, args.seed, args.csv)
        return cmd_validate(cfg, args.dense_cap)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EmptySectorError, NoSolutionError, DimensionCapError, IncompatibleSymmetryError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (KrylovError, FitError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
