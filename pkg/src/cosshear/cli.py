"""Command-line batch runner for the figure experiments and parameter sweeps.

    python -m cosshear run --preset fig8 --n 500 --out results/
    python -m cosshear sweep --preset fig10 --out results/ --jobs 4
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import presets as P
from .analysis import alpha_level, microstructure_report, u_scale
from .analytic import candidates
from .discretize import BoundarySpec
from .residual import stress_field
from .solve import SolveOptions, minimize_bfgs, solve_newton_gmres
from .state import Params, make_grid

log = logging.getLogger("cosshear")

BC_NAMES = {"dirichlet": "dirichlet_alpha", "consistent": "consistent",
            "consistent-red": "consistent_reduced"}
SWEEP_COLUMNS = ["run_id", "n", "mu", "mu_c", "lc", "gamma", "bc", "solver", "energy",
                 "theta", "alpha_level", "grad_norm", "iterations", "converged"]
RUN_COLUMNS = ["x", "u", "alpha", "u_scale", "tau"]
LIST_FIELDS = ("n", "mu", "mu_c", "lc", "gamma", "theta", "seed")

DEFAULTS = {
    "task": "solve", "mu": 1.0, "mu_c": 0.0, "lc": 0.0, "gamma": 0.8, "alpha_d": 0.0,
    "n": 101, "bc": "consistent", "symmetry": False, "slope": None, "energy": "full",
    "form": None, "solver": "bfgs", "init": "near-zero", "theta": None, "seed": 0,
    "grad_tol": 1e-9, "max_iters": 20000, "h0": "hessian",
}


@dataclass
class ExperimentConfig:
    """Fully resolved configuration; list-valued fields are swept."""

    values: dict
    preset: str | None = None
    out: str = "results"
    allow_partial: bool = False
    jobs: int = 1

    def runs(self) -> list[dict]:
        keys = [k for k in LIST_FIELDS if isinstance(self.values.get(k), (list, tuple))]
        grids = [list(self.values[k]) for k in keys]
        out = []
        for combo in itertools.product(*grids):
            v = dict(self.values)
            v.update(zip(keys, combo))
            v["run_id"] = run_id(self.preset, v)
            out.append(v)
        return sorted(out, key=_sort_key)


def _sort_key(v):
    return tuple((v.get(k) is None, v.get(k) if v.get(k) is not None else 0) for k in LIST_FIELDS)


def run_id(preset: str | None, v: dict) -> str:
    parts = [preset or "run", f"n{v['n']}", f"mu{v['mu']:g}", f"muc{v['mu_c']:g}",
             f"lc{v['lc']:g}", f"g{v['gamma']:g}"]
    if v.get("theta") is not None:
        parts.append(f"th{v['theta']:g}")
    parts.append(f"s{v['seed']}")
    if v.get("init") not in (None, "near-zero"):
        parts.append(v["init"])
    return "-".join(parts)


def _parse_list(text: str, conv):
    items = [conv(t) for t in text.split(",") if t.strip()]
    return items[0] if len(items) == 1 else items


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cosshear", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        sp = sub.add_parser(name, help="single/batch run" if name == "run" else "aggregated sweep")
        sp.add_argument("--preset", choices=sorted(P.PRESETS))
        sp.add_argument("--gamma", type=lambda s: _parse_list(s, float))
        sp.add_argument("--mu", type=lambda s: _parse_list(s, float))
        sp.add_argument("--mu-c", dest="mu_c", type=lambda s: _parse_list(s, float))
        sp.add_argument("--lc", type=lambda s: _parse_list(s, float))
        sp.add_argument("--alpha-d", dest="alpha_d", type=float)
        sp.add_argument("--n", type=lambda s: _parse_list(s, int))
        sp.add_argument("--bc", choices=sorted(BC_NAMES))
        sp.add_argument("--symmetry", action=argparse.BooleanOptionalAction, default=None)
        sp.add_argument("--slope", type=float, help="prescribed common end slope")
        sp.add_argument("--energy", choices=["full", "reduced"])
        sp.add_argument("--form", choices=["quadratic", "direct", "wred3", "wred2", "wred"])
        sp.add_argument("--solver", choices=["bfgs", "newton-gmres"])
        sp.add_argument("--theta", type=lambda s: _parse_list(s, float))
        sp.add_argument("--seed", type=lambda s: _parse_list(s, int))
        sp.add_argument("--init", choices=list(P.INIT_KINDS))
        sp.add_argument("--h0", choices=["hessian", "scaled_identity"],
                        help="initial inverse Hessian of BFGS")
        sp.add_argument("--grad-tol", dest="grad_tol", type=float)
        sp.add_argument("--max-iters", dest="max_iters", type=int)
        sp.add_argument("--out", default="results")
        sp.add_argument("--allow-partial", action="store_true")
        sp.add_argument("--jobs", type=int, default=1)
    return ap


def resolve(args) -> ExperimentConfig:
    values = dict(DEFAULTS)
    if args.preset:
        values.update(P.preset(args.preset))
    for key in ("gamma", "mu", "mu_c", "lc", "alpha_d", "n", "bc", "symmetry", "slope",
                "energy", "form", "solver", "theta", "seed", "init", "h0", "grad_tol",
                "max_iters"):
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    return ExperimentConfig(values=values, preset=args.preset, out=args.out,
                            allow_partial=args.allow_partial, jobs=args.jobs)


def _header(v: dict) -> str:
    lines = []
    for k in sorted(v):
        val = v[k]
        if isinstance(val, float):
            val = repr(val)
        lines.append(f"# {k}: {val}")
    return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def execute(v: dict) -> dict:
    """Run one resolved configuration; returns summary and nodal data."""
    p = Params(mu=v["mu"], mu_c=v["mu_c"], l_c=v["lc"], gamma=v["gamma"], alpha_d=v["alpha_d"])
    grid = make_grid(v["n"])
    bc = BoundarySpec(BC_NAMES[v["bc"]], symmetry=bool(v["symmetry"]), alpha_d=p.alpha_d,
                      gamma=p.gamma, slope=v.get("slope"))
    kind = v["energy"]
    end_alpha = p.alpha_d if bc.kind == "dirichlet_alpha" else None
    init = P.initial_state(v["init"], grid, p, v["seed"], v.get("theta"), end_alpha)
    opts = SolveOptions(max_iters=v["max_iters"], grad_tol=v["grad_tol"], seed=v["seed"],
                        h0=v.get("h0", "hessian"))
    if v["solver"] == "bfgs":
        rep = minimize_bfgs(init, p, bc, kind, opts, form=v.get("form"))
    else:
        if kind != "reduced" or bc.kind != "dirichlet_alpha":
            raise ValueError("newton-gmres solves the reduced limit system with Dirichlet angles")
        rep = solve_newton_gmres(init, p, v.get("theta"), opts)
    st = rep.state
    ms = microstructure_report(st, p, kind, bc, v.get("form"))
    cand = candidates(p)
    level = alpha_level(st)
    cmp = {name: getattr(cand, name) for name in ("alpha1", "alpha2", "alpha3", "alpha4")}
    summary = {
        "run_id": v["run_id"],
        "energy": rep.energy,
        "theta": rep.theta,
        "grad_norm": rep.norm,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "message": rep.message,
        "n_free": rep.n_free,
        "alpha_level": level,
        "candidates": cmp,
        "level_minus_candidates": {k: (None if a is None else level - a) for k, a in cmp.items()},
        "concentration": ms.concentration,
        "slope_levels": list(ms.slope_levels),
        "sign_changes": ms.sign_changes,
        "stress_spread": ms.stress_spread,
        "energy_gap": ms.energy_gap,
        "max_deviation": ms.max_deviation,
    }
    data = {
        "x": grid.nodes,
        "u": st.u,
        "alpha": st.alpha,
        "u_scale": u_scale(st, p.gamma),
        "tau": stress_field(st, p, kind, v.get("form")),
    }
    return {"summary": summary, "data": data, "config": v}


def _safe_execute(v: dict) -> dict:
    try:
        return execute(v)
    except Exception as exc:  # one failing row must not stop a sweep
        log.error("run %s failed: %s", v["run_id"], exc)
        return {"summary": {"run_id": v["run_id"], "error": str(exc), "converged": False},
                "data": None, "config": v}


def write_run_csv(path: str, result: dict):
    buf = io.StringIO()
    buf.write(_header(result["config"]))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_COLUMNS)
    d = result["data"]
    for row in zip(*(d[c] for c in RUN_COLUMNS)):
        w.writerow([_fmt(x) for x in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def write_curves(path: str, header: dict, cols: dict):
    buf = io.StringIO()
    buf.write(_header(header))
    w = csv.writer(buf, lineterminator="\n")
    names = list(cols)
    w.writerow(names)
    for row in zip(*(cols[c] for c in names)):
        w.writerow([_fmt(x) for x in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def _run_curves(cfg: ExperimentConfig) -> int:
    v = cfg.values
    os.makedirs(cfg.out, exist_ok=True)
    name = cfg.preset or v["task"]
    if v["task"] == "potentials":
        mcs = v["mu_c"] if isinstance(v["mu_c"], list) else [v["mu_c"]]
        cols, info = P.curve_fig3(v["mu"], mcs, v["u_prime"], v["alpha_min"], v["alpha_max"], v["step"])
        summary = {"local_minima": info, "count": {k: len(x) for k, x in info.items()}}
    else:
        cols, summary = P.curve_remark5(v["mu"], v["mu_c"], v["half_width"], v["step"])
    write_curves(os.path.join(cfg.out, f"{name}.csv"), v, cols)
    with open(os.path.join(cfg.out, f"{name}.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
    print(json.dumps(summary, sort_keys=True, default=_json_default))
    return 0


def _execute_all(cfg: ExperimentConfig, runs: list[dict]) -> list[dict]:
    if cfg.jobs > 1 and len(runs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            return list(ex.map(_safe_execute, runs))
    return [_safe_execute(v) for v in runs]


def cmd_run(cfg: ExperimentConfig) -> int:
    if cfg.values["task"] != "solve":
        return _run_curves(cfg)
    os.makedirs(cfg.out, exist_ok=True)
    results = _execute_all(cfg, cfg.runs())
    status = 0
    for res in results:
        s = res["summary"]
        rid = s["run_id"]
        if res["data"] is not None:
            write_run_csv(os.path.join(cfg.out, f"{rid}.csv"), res)
        with open(os.path.join(cfg.out, f"{rid}.json"), "w") as fh:
            json.dump(s, fh, indent=2, sort_keys=True, default=_json_default)
        print(json.dumps({k: s.get(k) for k in ("run_id", "energy", "alpha_level", "theta",
                                                  "grad_norm", "iterations", "converged")},
                         default=_json_default))
        if not s.get("converged") and not cfg.allow_partial:
            status = 2
    return status


def sweep_rows(results: list[dict]) -> list[list[str]]:
    rows = []
    for res in results:
        v, s = res["config"], res["summary"]
        rows.append([
            s["run_id"], v["n"], v["mu"], v["mu_c"], v["lc"], v["gamma"], v["bc"], v["solver"],
            s.get("energy", math.nan), s.get("theta", math.nan), s.get("alpha_level", math.nan),
            s.get("grad_norm", math.nan), s.get("iterations", 0), bool(s.get("converged", False)),
        ])
    return rows


def cmd_sweep(cfg: ExperimentConfig) -> int:
    if cfg.values["task"] != "solve":
        return _run_curves(cfg)
    runs = cfg.runs()
    results = _execute_all(cfg, runs)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, f"{cfg.preset or 'sweep'}_sweep.csv")
    buf = io.StringIO()
    header = dict(cfg.values)
    buf.write(_header(header))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in sweep_rows(results):
        w.writerow([_fmt(x) for x in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    bad = [r for r in results if not r["summary"].get("converged")]
    return 0 if (not bad or cfg.allow_partial) else 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = resolve(args)
    if args.command == "run":
        return cmd_run(cfg)
    return cmd_sweep(cfg)


if __name__ == "__main__":
    sys.exit(main())
