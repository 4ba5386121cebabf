"""TOML experiment configurations and reproducible run manifests."""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from .basis import SectorConstraint
from .lattices import LatticeSpec


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


MODEL_FAMILIES = ("pi_flux_ladder", "jw_partner_ladder", "hhbh", "dipolar_chain", "fermi_hubbard")

_DEFAULTS = {
    "model": {"family": "pi_flux_ladder", "L": 4, "boundary": "open"},
    "sector": {},
    "initial_state": {"name": "scar"},
    "evolution": {"t_max": 10.0, "samples_per_period": 200, "method": "auto"},
    "observables": {"kinds": ["generalized_imbalance"]},
    "disorder": {},
    "sweep": {},
    "spectrum": {"window": 0.5, "dense_cap": 16000},
    "fit": {"cutoff_rule": "first_envelope_minimum"},
    "output": {"directory": "runs", "formats": ["csv"]},
}


def load_config(path) -> dict:
    """Parse and resolve a TOML config, applying section defaults."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return resolve_config(raw)


def resolve_config(raw: dict) -> dict:
    cfg = {}
    for section, defaults in _DEFAULTS.items():
        block = dict(defaults)
        block.update(raw.get(section, {}))
        cfg[section] = block
    for section in raw:
        if section not in _DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
    fam = cfg["model"].get("family")
    if fam not in MODEL_FAMILIES:
        raise ConfigError(f"[model].family must be one of {MODEL_FAMILIES}, got {fam!r}")
    return cfg


def config_hash(cfg: dict, seed: int | None = None) -> str:
    """Content hash of a resolved config (plus the run seed)."""
    payload = json.dumps({"config": cfg, "seed": seed}, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def lattice_from_config(cfg: dict) -> LatticeSpec:
    m = cfg["model"]
    fam = m["family"]
    if fam in ("pi_flux_ladder", "jw_partner_ladder", "hhbh"):
        kind = {"pi_flux_ladder": "hardcore_boson",
                "jw_partner_ladder": "spinless_fermion",
                "hhbh": "softcore_boson" if m.get("n_max", 1) > 1 else "hardcore_boson"}[fam]
        return LatticeSpec("ladder", int(m["L"]), boundary=m.get("boundary", "open"),
                           particle_kind=kind, n_max=int(m.get("n_max", 1)))
    if fam == "dipolar_chain":
        return LatticeSpec("chain", 2 * int(m["L"]), boundary="open", particle_kind="spin_half")
    geometry = m.get("geometry", "chain")
    if geometry == "rectangle":
        return LatticeSpec("rectangle", boundary=m.get("boundary", "open"),
                           particle_kind="spinful_fermion",
                           lx=int(m["lx"]), ly=int(m["ly"]))
    return LatticeSpec("chain", int(m["L"]), boundary=m.get("boundary", "open"),
                       particle_kind="spinful_fermion")


def sector_from_config(cfg: dict, lattice: LatticeSpec) -> SectorConstraint:
    s = cfg["sector"]
    n = s.get("total_particles")
    sz = s.get("total_sz")
    if n is None and sz is None:
        # family default: the scar sector (one particle per rung / per site)
        fam = cfg["model"]["family"]
        if fam in ("pi_flux_ladder", "jw_partner_ladder", "hhbh"):
            n = int(cfg["model"]["L"])
        elif fam == "dipolar_chain":
            n = int(cfg["model"]["L"])
        else:
            n = lattice.n_sites
    return SectorConstraint(total_particles=None if n is None else int(n),
                            total_sz=sz)


def write_manifest(outdir: Path, run_id: str, cfg: dict, seed, outputs: list[str],
                   extra: dict | None = None):
    from . import __version__

    manifest = {
        "run_id": run_id,
        "package_version": __version__,
        "seed": seed,
        "config": cfg,
        "outputs": sorted(outputs),
    }
    if extra:
        manifest.update(extra)
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str))


def write_csv(path: Path, header: list[str], columns: list[np.ndarray]):
    """Deterministic full-precision CSV (17 significant digits)."""
    rows = len(columns[0])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(rows):
            fh.write(",".join(f"{float(col[k]):.17g}" for col in columns) + "\n")


def write_schema(outdir: Path, tables: dict):
    """Per-run description of every CSV's columns."""
    (outdir / "schema.json").write_text(json.dumps(tables, indent=2, sort_keys=True))
