"""Scenario files.

A scenario is a TOML document that names a defaults file with the
``defaults`` key; the two are merged table by table and the result must
contain every setting. Nothing is filled in silently by the code.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .dynamics import EvolutionConfig, InitialDataSpec
from .errors import InadmissibleParameters, NhspecError
from .grid import Grid, make_grid
from .lab import param_check

BUNDLED = Path(__file__).with_name("scenarios")

_SECTIONS = {
    "grid": {"dim", "n", "period"},
    "initial": set(InitialDataSpec.__dataclass_fields__),
    "evolution": {"dt", "t_end", "eps", "dealias", "diagnostics_every", "c_cfl"},
    "diagnostics": {"hs", "besov"},
    "params": {"r", "p", "theta", "s"},
    "eps_family": {"eps", "s"},
    "lagrangian": {"track"},
    "output": {"dir", "checkpoint"},
}
_REQUIRED = {
    "grid": {"dim", "n", "period"},
    "initial": {"velocity", "velocity_amplitude", "deformation", "deformation_amplitude", "seed", "slope"},
    "evolution": {"dt", "t_end", "dealias", "diagnostics_every", "c_cfl"},
    "diagnostics": {"hs", "besov"},
    "output": {"dir", "checkpoint"},
}


class ConfigError(NhspecError, ValueError):
    """Unreadable or incomplete scenario."""


@dataclass
class Scenario:
    name: str
    grid: Grid
    initial: InitialDataSpec
    evolution: EvolutionConfig
    output_dir: Path
    checkpoint: bool
    track_map: bool = False
    params: dict = field(default_factory=dict)
    eps_family: dict = field(default_factory=dict)
    lab: list[dict] = field(default_factory=list)
    source: Path | None = None
    raw: dict = field(default_factory=dict)


def resolve(name_or_path: str | Path, prefix: str = "") -> Path:
    """A path on disk, or the name of a bundled file."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    for cand in (BUNDLED / f"{prefix}{p.name}", BUNDLED / f"{prefix}{p.name}.toml"):
        if cand.is_file():
            return cand
    raise ConfigError(f"no such scenario or file: {name_or_path}")


def read_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], val)
        else:
            out[key] = val
    return out


def load_raw(path: Path) -> dict:
    data = read_toml(path)
    ref = data.pop("defaults", None)
    if ref is None:
        return data
    local = path.parent / ref
    base_path = local if local.is_file() else resolve(ref)
    if base_path.resolve() == path.resolve():
        raise ConfigError("a scenario cannot use itself as defaults")
    return merge(load_raw(base_path), data)


def _check_keys(data: dict):
    for sec, allowed in _SECTIONS.items():
        tbl = data.get(sec, {})
        if not isinstance(tbl, dict):
            raise ConfigError(f"[{sec}] must be a table")
        extra = set(tbl) - allowed
        if extra:
            raise ConfigError(f"unknown keys in [{sec}]: {sorted(extra)}")
    for sec, req in _REQUIRED.items():
        missing = req - set(data.get(sec, {}))
        if missing:
            raise ConfigError(f"missing keys in [{sec}]: {sorted(missing)}")
    extra = set(data) - set(_SECTIONS) - {"name", "lab"}
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")


def parse(data: dict, source: Path | None = None) -> Scenario:
    _check_keys(data)
    name = data.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigError("scenario needs a non-empty name")
    try:
        gcfg = data["grid"]
        grid = make_grid(int(gcfg["dim"]), int(gcfg["n"]), float(gcfg["period"]))
        initial = InitialDataSpec.from_dict(dict(data["initial"]))
        ev = data["evolution"]
        diag = data["diagnostics"]
        besov = tuple((float(r), float(p)) for r, p in diag["besov"])
        evolution = EvolutionConfig(
            dt=float(ev["dt"]), t_end=float(ev["t_end"]), eps=ev.get("eps"),
            dealias=bool(ev["dealias"]), diagnostics_every=int(ev["diagnostics_every"]),
            c_cfl=float(ev["c_cfl"]), hs=tuple(float(s) for s in diag["hs"]), besov=besov)
    except NhspecError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario {name!r}: {exc}") from exc
    for r, p in besov:
        if not (p >= 1 or math.isinf(p)):
            raise ConfigError(f"Besov integrability must be >= 1 (got {p})")
    out = data["output"]
    lab = data.get("lab", [])
    if not isinstance(lab, list):
        raise ConfigError("[[lab]] must be an array of tables")
    return Scenario(
        name=name, grid=grid, initial=initial, evolution=evolution,
        output_dir=Path(str(out["dir"]).format(name=name)), checkpoint=bool(out["checkpoint"]),
        track_map=bool(data.get("lagrangian", {}).get("track", False)),
        params=dict(data.get("params", {})), eps_family=dict(data.get("eps_family", {})),
        lab=[dict(c) for c in lab], source=source, raw=data)


def load_scenario(name_or_path) -> Scenario:
    path = resolve(name_or_path)
    return parse(load_raw(path), path)


def validate(sc: Scenario) -> None:
    """Admissibility checks that must pass before any computation."""
    if sc.params:
        param_check(sc.grid.dim, **sc.params)
    for case in sc.lab:
        validate_case(case)


def validate_case(case: dict) -> None:
    try:
        _validate_case(case)
    except KeyError as exc:
        raise ConfigError(f"lab case {case.get('id')!r} lacks {exc}") from exc


def _validate_case(case: dict) -> None:
    if "id" not in case:
        raise ConfigError("every lab case needs an id")
    kind = case.get("kind")
    if kind in ("interpolation", "dilation"):
        cid = str(case.get("case", case["id"]))
        d = 3 if cid.startswith("z") else 2
        param_check(d, case["r"], case.get("p"), windows=("interpolation",))
    elif kind == "strichartz":
        param_check(case["d"], case["r"], case.get("p"), case.get("theta"), windows=("strichartz",))
    elif kind == "apriori":
        param_check(case.get("d", 2), case["r"], case.get("p"), windows=())
    elif kind == "kato_ponce":
        if not case.get("theta", 1.0) > 0:
            raise InadmissibleParameters("commutator estimate needs theta > 0")
    else:
        raise ConfigError(f"unknown lab case kind {kind!r}")


def load_case_set(name_or_path) -> tuple[str, list[dict]]:
    path = resolve(name_or_path, prefix="lab-")
    data = read_toml(path)
    cases = data.get("case", [])
    if not isinstance(cases, list) or not cases:
        raise ConfigError(f"{path}: a case set needs [[case]] entries")
    return str(data.get("name", path.stem)), [dict(c) for c in cases]
