"""Config files, CSV serialization, and run manifests.

Configs are strict JSON: one top-level block selects the config kind
(``chain``, ``full``, or ``physical``; ``disorder`` may accompany ``chain``),
a versioned ``schema`` field guards the format, and unknown keys anywhere are
errors. All floats in CSV output carry 17 significant digits so parsing them
back reproduces the exact binary values; files are written to a temporary
name and renamed into place.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .chain import ChainConfig
from .experiments import DisorderSpec, PhysicalParams
from .fullmodel import FullModelConfig

SCHEMA_VERSION = 1
DEFAULT_HORIZON = 300.0


class ConfigError(ValueError):
    """Malformed or invalid configuration file."""


@dataclass
class LoadedConfig:
    kind: str                      # "chain" | "full" | "physical"
    horizon: float
    chain: ChainConfig | None = None
    full: FullModelConfig | None = None
    disorder: DisorderSpec | None = None
    physical: PhysicalParams | None = None
    raw: dict | None = None
    path: str | None = None


def _require(block: dict, keys: set[str], optional: set[str], where: str):
    unknown = set(block) - keys - optional
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")
    missing = keys - set(block)
    if missing:
        raise ConfigError(f"missing key(s) {sorted(missing)} in {where}")


def _chain_from_dict(block: dict) -> ChainConfig:
    _require(
        block,
        {"n_sites", "omega", "g", "hopping", "sink_rate"},
        {"nu", "q0", "beta0", "gamma", "nbar"},
        "chain block",
    )
    try:
        return ChainConfig(**block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid chain block: {exc}") from exc


def _disorder_from_dict(block: dict, chain: ChainConfig) -> DisorderSpec:
    _require(block, {"target", "means", "std", "realizations", "seed"}, set(),
             "disorder block")
    try:
        spec = DisorderSpec(
            target=block["target"],
            means=block["means"],
            std=block["std"],
            n_realizations=block["realizations"],
            master_seed=block["seed"],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid disorder block: {exc}") from exc
    if spec.means.size != chain.n_sites:
        raise ConfigError(
            f"disorder means must have length {chain.n_sites}, got {spec.means.size}")
    return spec


def _full_from_dict(block: dict) -> FullModelConfig:
    _require(block, {"chain", "epsilon", "n_fock"}, set(), "full block")
    chain = _chain_from_dict(block["chain"])
    try:
        return FullModelConfig(chain=chain, epsilon=block["epsilon"],
                               n_fock=block["n_fock"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid full block: {exc}") from exc


def _physical_from_dict(block: dict) -> PhysicalParams:
    _require(
        block,
        {"eta", "mass_kg", "frequency", "quality_factor"},
        {"length_m", "width_m", "depth_m", "site_energy_ev", "hopping_ratio"},
        "physical block",
    )
    try:
        return PhysicalParams(**block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid physical block: {exc}") from exc


def parse_config(path: str | Path) -> LoadedConfig:
    """Load and validate a config file; raises ConfigError with the offender."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path} is not valid JSON (line {exc.lineno}, col {exc.colno}): "
            f"{exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    _require(data, {"schema"}, {"horizon", "chain", "disorder", "full", "physical"},
             f"config {path}")
    if data["schema"] != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema {data['schema']!r}; this build reads schema "
            f"{SCHEMA_VERSION}")
    kinds = [k for k in ("chain", "full", "physical") if k in data]
    if len(kinds) != 1:
        raise ConfigError(
            "config must contain exactly one of 'chain', 'full', or 'physical'")
    horizon = float(data.get("horizon", DEFAULT_HORIZON))
    if horizon <= 0:
        raise ConfigError("horizon must be positive")

    loaded = LoadedConfig(kind=kinds[0], horizon=horizon, raw=data, path=str(path))
    if kinds[0] == "chain":
        loaded.chain = _chain_from_dict(data["chain"])
        if "disorder" in data:
            loaded.disorder = _disorder_from_dict(data["disorder"], loaded.chain)
    elif "disorder" in data:
        raise ConfigError("'disorder' requires a 'chain' block")
    if kinds[0] == "full":
        loaded.full = _full_from_dict(data["full"])
        loaded.chain = loaded.full.chain
    if kinds[0] == "physical":
        loaded.physical = _physical_from_dict(data["physical"])
    return loaded


def bundled_config_path(name: str) -> Path:
    """Path of a config shipped with the package (e.g. 'fig1')."""
    fname = name if name.endswith(".json") else f"{name}.json"
    ref = resources.files("vibrochain").joinpath("configs").joinpath(fname)
    with resources.as_file(ref) as p:
        return Path(p)


def resolve_config(name_or_path: str) -> Path:
    """Existing path as-is, otherwise fall back to the bundled configs."""
    p = Path(name_or_path)
    if p.exists():
        return p
    bundled = bundled_config_path(name_or_path)
    if bundled.exists():
        return bundled
    raise ConfigError(f"config {name_or_path!r} is neither a file nor a bundled name")


def list_bundled_configs() -> list[str]:
    folder = resources.files("vibrochain").joinpath("configs")
    return sorted(f.name[:-5] for f in folder.iterdir() if f.name.endswith(".json"))


# ---------------------------------------------------------------------------
# output files


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str | Path, header: list[str], rows) -> Path:
    """Locale-independent CSV: '.' decimals, LF line endings, 17-digit floats."""
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def trajectory_rows(traj) -> tuple[list[str], list[tuple]]:
    n_pop = traj.populations.shape[1]
    header = ["t"] + [f"p{j}" for j in range(n_pop)] + [
        "re_s0N", "im_s0N", "trace", "efficiency"]
    rows = []
    for k in range(traj.times.size):
        rows.append((
            traj.times[k],
            *traj.populations[k],
            traj.coherence_0n[k].real,
            traj.coherence_0n[k].imag,
            traj.trace[k],
            traj.efficiency[k],
        ))
    return header, rows


def sweep_rows(result) -> tuple[list[str], list[tuple]]:
    if result.stderr is None:
        header = ["beta0", "efficiency", "baseline"]
        rows = [(b, e, result.baseline)
                for b, e in zip(result.beta0, result.efficiency)]
    else:
        header = ["beta0", "efficiency", "stderr", "baseline"]
        rows = [(b, e, s, result.baseline)
                for b, e, s in zip(result.beta0, result.efficiency, result.stderr)]
    return header, rows


def resonance_rows(report) -> tuple[list[str], list[tuple]]:
    header = ["bond", "delta_omega", "delta_g", "order", "zero_index", "beta0_suppression"]
    rows = []
    for bond in report.bonds:
        if bond.order is None or not bond.suppression_beta0:
            rows.append((bond.bond, bond.delta_omega, bond.delta_g, "", "", ""))
            continue
        for k, b0 in enumerate(bond.suppression_beta0, start=1):
            rows.append((bond.bond, bond.delta_omega, bond.delta_g, bond.order, k, b0))
    return header, rows


def coherence_rows(times, with_vib, without_vib) -> tuple[list[str], list[tuple]]:
    header = ["t", "with_vibration", "without_vibration"]
    rows = list(zip(times, with_vib, without_vib))
    return header, rows


def adiabatic_rows(report) -> tuple[list[str], list[tuple]]:
    n_pop = report.populations_full.shape[1]
    header = (["t"]
              + [f"full_p{j}" for j in range(n_pop)]
              + [f"reduced_p{j}" for j in range(n_pop)]
              + ["full_coh", "reduced_coh"])
    rows = []
    for k in range(report.times.size):
        rows.append((
            report.times[k],
            *report.populations_full[k],
            *report.populations_reduced[k],
            report.coherence_full[k],
            report.coherence_reduced[k],
        ))
    return header, rows


def write_manifest(path: str | Path, subcommand: str, config: dict | None,
                   flags: dict, outputs: list[str], duration_s: float) -> Path:
    from . import __version__

    manifest = {
        "tool": "vibrochain",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "flags": flags,
        "outputs": outputs,
        "duration_s": duration_s,
    }
    path = Path(path)
    _atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
