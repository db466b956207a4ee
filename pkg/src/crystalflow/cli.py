"""Command line entry point.  Exit status: 0 success, 1 bad input,
2 a checked property failed."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import config as cfgmod
from . import flow_eff, flow_eps, harness
from .calibrate import CalibrationError, check_edge
from .forcing import ForcingError, ForcingField
from .geometry import GeometryError, Polyrectangle, edges, horizontal_edge
from .oracle import is_calibrable_oracle
from .render import render_svg
from .trajectory import FlowTrajectory, _plain

log = logging.getLogger("crystalflow")

OK, INPUT_ERROR, CHECK_FAILED = 0, 1, 2
INPUT_ERRORS = (cfgmod.ConfigError, flow_eps.FlowInputError, GeometryError, ForcingError,
                CalibrationError, ValueError, FileNotFoundError)


# ------------------------------------------------------------------ helpers

def _initial(cfg: dict) -> Polyrectangle:
    ini = cfg["initial"]
    if "rectangle" in ini:
        return Polyrectangle.rectangle(*ini["rectangle"])
    if "vertices" in ini:
        return Polyrectangle(ini["vertices"])
    raise cfgmod.ConfigError("initial: a polyrectangle (rectangle or vertices) is required")


def _field(cfg: dict) -> ForcingField:
    f = cfg["field"]
    return ForcingField(f["alpha"], f["beta"], f["epsilon"])


def _times(cfg: dict, T: float) -> np.ndarray:
    return np.linspace(0.0, T, cfg.get("samples", 101))


def _prefix(args, cfg: dict | None = None) -> Path:
    p = args.out or (cfg or {}).get("output") or "crystalflow_out"
    p = Path(p)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _with_suffix(prefix: Path, suffix: str) -> Path:
    return prefix.with_name(prefix.name + suffix)


def write_lengths_csv(traj: FlowTrajectory, path: Path) -> None:
    rows = []
    for s in traj.samples:
        rows.append([s.t] + [e.length for e in edges(s.polyrectangle)])
    width = max((len(r) for r in rows), default=1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"edge_{i}" for i in range(width - 1)])
        for r in rows:
            w.writerow([repr(float(x)) for x in r] + [""] * (width - len(r)))


def write_trajectory(traj: FlowTrajectory, prefix: Path) -> list[Path]:
    paths = [_with_suffix(prefix, ".traj.jsonl"), _with_suffix(prefix, ".events.json"),
             _with_suffix(prefix, ".lengths.csv")]
    paths[0].write_text(traj.jsonl())
    paths[1].write_text(traj.events_json() + "\n")
    write_lengths_csv(traj, paths[2])
    return paths


def _dump(obj, path: Path | None = None) -> None:
    text = json.dumps(_plain(obj), indent=1, sort_keys=True, default=str)
    if path is not None:
        path.write_text(text + "\n")
    print(text if path is None else f"wrote {path}")


# ------------------------------------------------------------------ commands

def cmd_simulate_eps(args) -> int:
    cfg = cfgmod.load(args.config)
    F, P = _field(cfg), _initial(cfg)
    T = cfg.get("T", 1.0)
    traj = flow_eps.run(P, F, T, _times(cfg, T), branch_policy=cfg.get("branch_policy", "cross"),
                        auto_snap=cfg.get("auto_snap", False))
    prefix = _prefix(args, cfg)
    for p in write_trajectory(traj, prefix):
        print(f"wrote {p}")
    if args.svg:
        for p in render_svg(traj.samples, traj.times, _with_suffix(prefix, "_svg"), F):
            print(f"wrote {p}")
    print(json.dumps({"final_time": traj.final_time, "events": len(traj.events),
                      "extinct": traj.extinct}))
    return OK


def cmd_simulate_eff(args) -> int:
    cfg = cfgmod.load(args.config)
    f = cfg["field"]
    law = flow_eff.EffectiveLaw(f["alpha"], f["beta"])
    T = cfg.get("T", 1.0)
    ts = _times(cfg, T)
    prefix = _prefix(args, cfg)
    if "circle" in cfg.get("initial", {}):
        fronts = flow_eff.convex_flow(law, flow_eff.circle(cfg["initial"]["circle"]), T, ts)
        path = _with_suffix(prefix, ".fronts.jsonl")
        with open(path, "w") as fh:
            for fr in fronts:
                fh.write(json.dumps(_plain({"t": fr.t, "top": fr.top, "bottom": fr.bottom,
                                            "left": fr.left, "right": fr.right,
                                            "facets": fr.facet_lengths}), sort_keys=True) + "\n")
        print(f"wrote {path}")
        frames = fronts
    else:
        traj = flow_eff.poly_flow(law, _initial(cfg), T, ts)
        for p in write_trajectory(traj, prefix):
            print(f"wrote {p}")
        frames = traj.samples
    if args.svg:
        for p in render_svg(frames, [fr.t for fr in frames], _with_suffix(prefix, "_svg")):
            print(f"wrote {p}")
    return OK


def cmd_calibrate(args) -> int:
    F = ForcingField(args.alpha, args.beta, args.epsilon)
    rep = check_edge(F, args.chi, args.p, args.q, args.n0)
    out = rep.to_dict()
    if args.oracle:
        out["oracle"] = is_calibrable_oracle(horizontal_edge(args.p, args.q, args.chi, args.n0), F, args.M)
    _dump(out)
    return OK


def cmd_oracle(args) -> int:
    rep = harness.oracle_corpus(args.n, args.seed, args.M)
    if args.out:
        _dump(rep, Path(args.out))
    print(json.dumps({k: rep[k] for k in ("edges", "scored", "disagreements", "agreement", "passed")}))
    return OK if rep["passed"] else CHECK_FAILED


def cmd_converge(args) -> int:
    cfg = cfgmod.load(args.config)
    f = cfg["field"]
    rep = harness.converge_experiment(f["alpha"], f["beta"], cfg["eps_list"], _initial(cfg),
                                      T=cfg.get("T"), fraction=cfg.get("fraction_of_extinction", 0.9),
                                      samples=cfg.get("samples", 200), bound=cfg.get("bound", 3.0))
    prefix = _prefix(args, cfg)
    path = _with_suffix(prefix, ".converge.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon", "sup_error", "ratio", "argmax_t"])
        for e, err, r, row in zip(rep["eps"], rep["sup_error"], rep["ratio"], rep["rows"]):
            w.writerow([repr(e), repr(err), repr(r), repr(row["argmax_t"])])
    print(f"wrote {path}")
    summary = {k: v for k, v in rep.items() if k != "rows"}
    _dump(summary, _with_suffix(prefix, ".converge.json"))
    print(json.dumps(_plain(summary)))
    return OK if rep["passed"] else CHECK_FAILED


def cmd_compare(args) -> int:
    cfg = cfgmod.load(args.config)
    f = cfg["field"]
    rep = harness.compare_experiment(f["alpha"], f["beta"], f["epsilon"], cfg.get("pairs", 10),
                                     cfg.get("seed", 0), cfg.get("T", 1.0), cfg.get("samples", 41))
    prefix = _prefix(args, cfg)
    path = _with_suffix(prefix, ".compare.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pair", "t", "gap"])
        for i, row in enumerate(rep["rows"]):
            for t, g in row["gaps"]:
                w.writerow([i, repr(t), repr(g)])
    print(f"wrote {path}")
    summary = {k: v for k, v in rep.items() if k != "rows"}
    _dump(summary, _with_suffix(prefix, ".compare.json"))
    print(json.dumps(_plain({k: summary[k] for k in ("pairs", "failed_pairs", "passed")})))
    return OK if rep["passed"] else CHECK_FAILED


def cmd_portrait(args) -> int:
    cfg = cfgmod.load(args.config)
    f = cfg["field"]
    grid = cfg.get("grid", {"l1": [1, 2, 3, 4, 5, 6], "l2": [0.5, 1, 2, 3, 5]})
    table, traj = harness.portrait_experiment(f["alpha"], f["beta"], grid["l1"], grid["l2"],
                                              cfg.get("T", 20.0), cfg.get("samples", 51))
    prefix = _prefix(args, cfg)
    for name, rows in ((".portrait.csv", table), (".portrait_traj.csv", traj)):
        path = _with_suffix(prefix, name)
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        print(f"wrote {path}")
    counts = {}
    for r in table:
        counts[r["class"]] = counts.get(r["class"], 0) + 1
    print(json.dumps(counts, sort_keys=True))
    return OK


def _read_frames(path: Path) -> list:
    frames = []
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        if "vertices" not in d:
            raise ValueError(f"{path}: not a trajectory file")
        frames.append(SimpleNamespace(t=d["t"], vertices=np.array(d["vertices"], float)))
    return frames


def cmd_render(args) -> int:
    frames = _read_frames(Path(args.traj))
    times = args.times if args.times is not None else [f.t for f in frames]
    F = ForcingField(args.alpha, args.beta, args.epsilon) if args.epsilon else None
    for p in render_svg(frames, times, _prefix(args), F):
        print(f"wrote {p}")
    return OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crystalflow",
                                 description="Crystalline curvature flow in layered media.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(name, fn, help_, svg=False):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        if svg:
            p.add_argument("--svg", action="store_true", help="write one SVG per sample")
        p.set_defaults(func=fn)
        return p

    with_config("simulate-eps", cmd_simulate_eps, "run the eps-scale flow", svg=True)
    with_config("simulate-eff", cmd_simulate_eff, "run the effective flow", svg=True)
    with_config("converge", cmd_converge, "eps-sweep against the effective flow")
    with_config("compare", cmd_compare, "comparison check on nested pairs")
    with_config("portrait", cmd_portrait, "phase portrait of the effective rectangle system")

    p = sub.add_parser("calibrate", help="calibrability report for one horizontal edge")
    for a in ("alpha", "beta", "epsilon", "p", "q"):
        p.add_argument(f"--{a}", type=float, required=True)
    p.add_argument("--chi", type=int, choices=(-1, 0, 1), required=True)
    p.add_argument("--n0", type=int, choices=(-1, 1))
    p.add_argument("--oracle", action="store_true", help="also run the variational oracle")
    p.add_argument("--M", type=int, default=400)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("oracle", help="randomized analytic-vs-oracle agreement report")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--M", type=int, default=400)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("render", help="SVG snapshots of a .traj.jsonl file")
    p.add_argument("--traj", required=True)
    p.add_argument("--times", type=float, nargs="*")
    p.add_argument("--out")
    p.add_argument("--alpha", type=float, default=-1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, help="shade the beta phase of this medium")
    p.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
