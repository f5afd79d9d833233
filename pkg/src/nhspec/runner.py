"""Batch execution of scenarios, epsilon families and lab case sets."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import checkpoint
from .config import Scenario, load_scenario, validate, validate_case
from .dynamics import DiagnosticsRecord, EvolutionConfig, StateBundle, integrate, make_initial_data
from .errors import NonFinite
from .families import EpsTable, eps_family
from .lab import (RatioReport, check_apriori_chain, check_kato_ponce, check_riesz_interpolation,
                  check_strichartz, dilation_probe)
from .lagrangian import FlowMap, evolve_with_map

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# diagnostics tables


def _num(x: float) -> str:
    return repr(float(x))


def diagnostics_columns(config: EvolutionConfig) -> list[tuple[str, str, str]]:
    """``(name, unit, definition)`` for every diagnostics column."""
    cols = [
        ("t", "time", "simulation time"),
        ("energy", "L2^2", "(1/2) sum of squared L2 norms of v and u_a over the periodic box"),
        ("energy_rel_drift", "1", "(energy - energy at t0) / energy at t0; 0 when the initial energy is 0"),
        ("q_ab_l2", "L2", "L2 norm of the compatibility defect v_a . grad v_b - v_b . grad v_a over a < b"),
        ("div_max", "1/length", "largest Fourier coefficient modulus of div v and div u_a"),
        ("sup_V", "sup", "max over the grid of |v^i| and |u_a^i|"),
        ("sup_gradV", "1/length", "max over the grid of |d_k v^i| and |d_k u_a^i|"),
        ("sup_vorticity", "1/length", "max over the grid of all vorticity components of v and u_a"),
    ]
    for s in config.hs:
        cols.append((f"H{s:g}", "H^s", f"inhomogeneous Sobolev norm of order {s:g} of (v, u), components combined in l2"))
    for r, p in config.besov:
        cols.append((f"besov_r{r:g}_p{p:g}", "B^r_pp",
                     f"homogeneous Besov norm B^{r:g}_{{{p:g},{p:g}}} of the vorticities, max over components"))
    return cols


def record_row(rec: DiagnosticsRecord, e0: float, config: EvolutionConfig) -> list[str]:
    drift = (rec.energy - e0) / e0 if e0 > 0 else 0.0
    row = [rec.t, rec.energy, drift, rec.q_ab, rec.div_res, rec.sup_V, rec.sup_gradV, rec.sup_vorticity]
    row += [rec.hs[float(s)] for s in config.hs]
    row += [rec.besov[(float(r), float(p))] for r, p in config.besov]
    return [_num(x) for x in row]


def write_table(path: Path, columns: list[tuple[str, str, str]], rows: list[list[str]], title: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([c[0] for c in columns])
        w.writerows(rows)
    schema = {"table": path.name, "title": title, "format": "csv, header row, floats in shortest round-trip form",
              "columns": [{"name": n, "unit": u, "definition": d} for n, u, d in columns]}
    path.with_suffix(".schema.json").write_text(json.dumps(schema, indent=2) + "\n")


def write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# --------------------------------------------------------------------------
# checkpoints


def state_checkpoint(state: StateBundle, name: str, fmap: FlowMap | None = None) -> checkpoint.Checkpoint:
    meta = {"scenario": name, "t": state.t, "A": state.A.tolist(),
            "layout": "v[i] for i < d, then u[a][i] row-major"}
    sections = {b"META": json.dumps(meta, sort_keys=True).encode()}
    if fmap is not None:
        sections[b"LMAP"] = checkpoint.encode(fmap.to_checkpoint())
    return checkpoint.Checkpoint(state.grid, "euler", state.stacked(), sections)


def state_from_checkpoint(ck: checkpoint.Checkpoint) -> StateBundle:
    d = ck.grid.dim
    meta = ck.meta
    W = ck.components
    return StateBundle(ck.grid, W[:d], W[d:].reshape((d, d) + ck.grid.shape), np.asarray(meta["A"]), meta["t"])


# --------------------------------------------------------------------------
# scenario runs


@dataclass
class RunResult:
    status: str              # "ok" or "aborted"
    out_dir: Path
    records: list[DiagnosticsRecord]
    final: StateBundle
    message: str = ""


def run_scenario(sc: Scenario, out_dir: Path | None = None) -> RunResult:
    """Run a scenario and write its artifacts; aborts leave partial artifacts."""
    validate(sc)
    out = Path(out_dir) if out_dir is not None else sc.output_dir
    out.mkdir(parents=True, exist_ok=True)
    state = make_initial_data(sc.grid, sc.initial)
    records: list[DiagnosticsRecord] = []
    last = {"state": state, "map": None}
    status, message = "ok", ""

    def keep(s, m=None):
        last["state"] = s
        if m is not None:
            last["map"] = m

    try:
        if sc.track_map:
            from .dynamics import monitor
            cfg = sc.evolution
            records.append(monitor(state, cfg.hs, cfg.besov))
            count = {"n": 0}

            def obs(s, m):
                keep(s, m)
                count["n"] += 1
                if count["n"] % cfg.diagnostics_every == 0 or count["n"] == cfg.nsteps:
                    records.append(monitor(s, cfg.hs, cfg.besov))

            final, fmap, _ = evolve_with_map(state, cfg, observer=obs)
            last["map"] = fmap
        else:
            final = integrate(state, sc.evolution, observer=keep, sink=records).final
    except NonFinite as exc:
        status, message = "aborted", str(exc)
        final = last["state"]
        log.error("numerical abort: %s", exc)

    e0 = records[0].energy if records else 0.0
    write_table(out / "diagnostics.csv", diagnostics_columns(sc.evolution),
                [record_row(r, e0, sc.evolution) for r in records], f"diagnostics of scenario {sc.name}")
    if sc.checkpoint or status != "ok":
        fname = "final.nhsp" if status == "ok" else "last_finite.nhsp"
        checkpoint.save(out / fname, state_checkpoint(final, sc.name, last["map"]))
    lab_reports = {}
    if status == "ok":
        for case in sc.lab:
            rep = run_lab_case(case)
            write_json(out / "lab" / f"{case['id']}.json", rep)
            lab_reports[case["id"]] = rep
    summary = {"scenario": sc.name, "status": status, "message": message, "t_final": final.t,
               "steps": sc.evolution.nsteps, "records": len(records), "lab_cases": sorted(lab_reports)}
    write_json(out / "run.json", summary)
    return RunResult(status, out, records, final, message)


# --------------------------------------------------------------------------
# epsilon families


def eps_columns(s_list) -> list[tuple[str, str, str]]:
    cols = [("eps", "length", "mollification scale of the coarser member"),
            ("eps_next", "length", "mollification scale of the finer member")]
    for s in s_list:
        cols.append((f"sup_diff_H{s:g}", "H^s",
                     f"max over diagnostic times of the H^{s:g} norm of the difference of consecutive members"))
    return cols


def run_eps_family(sc: Scenario, eps_list=None, s_list=None, out_dir: Path | None = None) -> EpsTable:
    validate(sc)
    eps_list = list(eps_list if eps_list is not None else sc.eps_family.get("eps", []))
    s_list = list(s_list if s_list is not None else sc.eps_family.get("s", [2.0]))
    out = Path(out_dir) if out_dir is not None else sc.output_dir
    state = make_initial_data(sc.grid, replace(sc.initial, eps=None))
    table = eps_family(state, sc.evolution, eps_list, s_list)
    rows = [[_num(v) for v in row.values()] for row in table.rows()]
    write_table(out / "eps_family.csv", eps_columns(table.s), rows, f"epsilon family of scenario {sc.name}")
    write_json(out / "eps_family.json", {"scenario": sc.name, "eps": table.eps, "s": table.s,
                                         "decreasing": {str(s): table.decreasing(s) for s in table.s}})
    return table


# --------------------------------------------------------------------------
# lab cases


_RATIO_KEYS = {
    "interpolation": ("r", "p", "theta", "n", "samples", "seed", "slope", "refine"),
    "kato_ponce": ("d", "theta", "n", "samples", "seed", "slope", "refine"),
    "strichartz": ("d", "r", "p", "theta", "samples", "seed", "n", "period", "width", "kmax",
                   "forcing", "slope"),
}


def run_lab_case(case: dict) -> dict:
    """Evaluate one lab case and return its JSON-ready report."""
    validate_case(case)
    case = dict(case)
    kind = case.pop("kind")
    cid = str(case.pop("id"))
    if kind == "interpolation":
        kw = {k: case[k] for k in _RATIO_KEYS[kind] if k in case}
        return check_riesz_interpolation(cid, **kw).to_dict()
    if kind == "kato_ponce":
        kw = {k: case[k] for k in _RATIO_KEYS[kind] if k in case}
        return check_kato_ponce(case_id=cid, **kw).to_dict()
    if kind == "strichartz":
        kw = {k: case[k] for k in _RATIO_KEYS[kind] if k in case}
        if "T" in case:
            kw["T_values"] = tuple(float(t) for t in case["T"])
        return check_strichartz(case_id=cid, **kw).to_dict()
    if kind == "dilation":
        case_id = str(case.get("case", cid))
        probe = dilation_probe(case_id, case["r"], case.get("p"), case.get("theta"),
                               tuple(case.get("lambdas", (1, 2, 4))), case.get("n"), case.get("period"),
                               case.get("width"))
        samples = [{"seed": 0, **s} for s in probe["samples"]]
        rep = RatioReport(cid, {"case": case_id, "r": case["r"], "p": case.get("p")}, samples,
                          max(s["ratio"] for s in samples), None, {"spread": probe["spread"]})
        return rep.to_dict()
    if kind == "apriori":
        return _apriori_case(cid, case)
    raise ValueError(f"unknown lab case kind {kind!r}")


def _apriori_case(cid: str, case: dict) -> dict:
    sc = load_scenario(case["scenario"])
    r = float(case["r"])
    p = float(case.get("p", math.inf))
    cfg = replace(sc.evolution, besov=((r, p),))
    amps = case.get("amplitudes", [sc.initial.velocity_amplitude])
    samples = []
    for a in amps:
        spec = replace(sc.initial, velocity_amplitude=float(a))
        traj = integrate(make_initial_data(sc.grid, spec), cfg)
        rep = check_apriori_chain(traj.records, sc.grid.dim, r, p)
        samples.append({"seed": spec.seed, "amplitude": float(a),
                        **{k: rep[k] for k in ("grad_integral", "vorticity_integral", "besov_integral",
                                               "y_final", "finite")}})
    keys = ("grad_integral", "vorticity_integral", "besov_integral")
    monotone = all(all(b[k] >= a[k] for k in keys) for a, b in zip(samples, samples[1:]))
    return {"id": cid, "params": {"scenario": sc.name, "r": r, "p": p, "amplitudes": amps},
            "samples": samples, "finite": all(s["finite"] for s in samples),
            "monotone_in_amplitude": monotone}


def run_case_set(cases: list[dict], out_dir: Path) -> dict[str, dict]:
    for case in cases:
        validate_case(case)
    out = {}
    for case in cases:
        rep = run_lab_case(case)
        write_json(Path(out_dir) / f"{case['id']}.json", rep)
        out[case["id"]] = rep
    return out
