"""
Command line interface.

    islandkit coherency --waveforms w.csv
    islandkit island --topology t.json --flows f.csv --waveforms w.csv --case 4 --seed 7
    islandkit evaluate --topology t.json --flows f.csv --assignment a.json
    islandkit oracle --topology t.json --flows f.csv --objective disruption --k 2
    islandkit synth --out-dir scenario/ --seed 3
    islandkit export --solution s.json --topology t.json --format dot

JSON goes to stdout unless ``--out`` is given. Exit status: 0 success,
1 domain error (JSON ``{"error": code, "message": ...}`` on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import SEED_ENV, coerce, read_config_file, resolve
from .errors import ConfigurationError, IslandkitError
from .export import FORMATS, export_graph
from .grid_model import load_topology
from .oracle import exact_max_modularity, exact_min_disruption
from .reference import ieee39_topology
from .synth import SynthSpec, ieee39_scenario, synth_scenario
from .workflow import build_layer, load_inputs, read_assignment, run_coherency, run_evaluate, run_island

RUN_KEYS = (
    "case", "layers", "stage_one", "layer_mode", "band", "window", "clamp",
    "normalize", "alpha", "seed", "restarts", "k", "repair",
)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _add_inputs(p, topology=False, flows=False, waveforms=False) -> None:
    p.add_argument("--topology", required=topology, help="topology JSON")
    p.add_argument("--flows", required=flows, help="branch flow CSV")
    p.add_argument("--buses", help="bus table CSV (default: <flows stem>_buses.csv)")
    p.add_argument("--waveforms", required=waveforms, help="bus angle CSV: t,<bus1>,<bus2>,...")


def _add_run_flags(p) -> None:
    p.add_argument("--config", help="key = value file; explicit flags take precedence")
    p.add_argument("--case", help="1 frequency, 2 reactive, 3 active, 4 all layers")
    p.add_argument("--layers", help="comma list of freq,p,q (overrides --case)")
    p.add_argument("--stage-one", dest="stage_one", help="layer used by stage I: freq, p or q")
    p.add_argument("--layer-mode", dest="layer_mode", choices=["measured", "formula"])
    p.add_argument("--band", help="inter-area band lo:hi in Hz")
    p.add_argument("--window", choices=["none", "hann"])
    p.add_argument("--clamp", choices=["zero", "shift"])
    p.add_argument("--normalize-layers", dest="normalize", action="store_const", const="true")
    p.add_argument("--alpha")
    p.add_argument("--seed", help=f"unsigned 64-bit seed (fallback: ${SEED_ENV})")
    p.add_argument("--restarts")
    p.add_argument("--k", help="auto or an island count")
    p.add_argument("--no-repair", dest="repair", action="store_const", const="false")
    p.add_argument("--out", help="write JSON here instead of stdout")


def _run_config(args):
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    flags = {}
    for key in RUN_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            flags[key] = coerce(key, val)
    return resolve(file_values, flags)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="islandkit", description="Multi-layer spectral controlled islanding")
    parser.add_argument("--version", action="version", version=f"islandkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coherency", help="stage I coherent groups")
    _add_inputs(p)
    _add_run_flags(p)

    p = sub.add_parser("island", help="full two-stage islanding")
    _add_inputs(p, topology=True, flows=True)
    _add_run_flags(p)
    p.add_argument("--dot", help="also write a DOT rendering")
    p.add_argument("--graphml", help="also write GraphML")
    p.add_argument("--cut-csv", dest="cut_csv", help="also write the cut branches as CSV")

    p = sub.add_parser("evaluate", help="cut-set, disruption and balance of a given assignment")
    _add_inputs(p, topology=True, flows=True)
    p.add_argument("--assignment", required=True, help="JSON with 'assignment' or 'islands'")
    p.add_argument("--out")

    p = sub.add_parser("oracle", help="exhaustive optimum on a small grid")
    _add_inputs(p, topology=True)
    _add_run_flags(p)
    p.add_argument("--objective", choices=["disruption", "modularity"], required=True)
    p.add_argument("--layer", default="p", help="layer to optimise: freq, p or q")
    p.add_argument("--max-nodes", dest="max_nodes", type=int)
    p.add_argument("--unconstrained", action="store_true", help="allow disconnected clusters")

    p = sub.add_parser("synth", help="write a planted-group scenario")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--preset", choices=["groups", "ieee39"], default="groups")
    p.add_argument("--group-sizes", dest="group_sizes", default="4,4,4")
    p.add_argument("--freqs", default="0.3,0.5,0.8")
    p.add_argument("--noise", type=float, default=0.002)
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("export", help="render a solution JSON")
    p.add_argument("--solution", required=True)
    p.add_argument("--topology", help="topology JSON (default: bundled 39-bus)")
    p.add_argument("--format", dest="fmt", choices=list(FORMATS), required=True)
    p.add_argument("--out")
    return parser


def _cmd_coherency(args) -> str:
    run = _run_config(args)
    topo, snap, waves = load_inputs(args.topology, args.flows, args.buses, args.waveforms)
    if topo is None and waves is None:
        raise ConfigurationError("coherency needs --waveforms, or --topology with --flows")
    return _dump(run_coherency(run, topo, snap, waves))


def _cmd_island(args) -> str:
    run = _run_config(args)
    topo, snap, waves = load_inputs(args.topology, args.flows, args.buses, args.waveforms)
    sol = run_island(run, topo, snap, waves)
    for fmt, path in (("dot", args.dot), ("graphml", args.graphml), ("csv", args.cut_csv)):
        if path:
            Path(path).write_text(export_graph(sol, topo, fmt), encoding="utf-8")
    return _dump(sol)


def _cmd_evaluate(args) -> str:
    topo, snap, _ = load_inputs(args.topology, args.flows, args.buses)
    return _dump(run_evaluate(topo, snap, read_assignment(args.assignment, topo)))


def _cmd_oracle(args) -> str:
    run = _run_config(args)
    topo, snap, waves = load_inputs(args.topology, args.flows, args.buses, args.waveforms)
    layer = build_layer(coerce("stage_one", args.layer), run, topo, snap, waves)
    if args.objective == "disruption":
        if run.k is None:
            raise ConfigurationError("the disruption oracle needs --k")
        res = exact_min_disruption(
            layer, topo, run.k, max_nodes=args.max_nodes or 12, connected=not args.unconstrained
        )
    else:
        res = exact_max_modularity(layer, max_nodes=args.max_nodes or 10)
    out = res.to_dict(topo.labels)
    out["objective_kind"] = args.objective
    out["layer"] = layer.kind
    return _dump(out)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ConfigurationError(f"expected a comma list of numbers, got {text!r}") from None


def _cmd_synth(args) -> str:
    if args.preset == "ieee39":
        scenario = ieee39_scenario(seed=args.seed, noise=args.noise)
    else:
        sizes = tuple(int(x) for x in _floats(args.group_sizes))
        spec = SynthSpec(
            group_sizes=sizes, freqs=_floats(args.freqs), noise=args.noise,
            duration=args.duration, dt=args.dt, seed=args.seed,
        )
        scenario = synth_scenario(spec)
    paths = scenario.write(args.out_dir)
    return _dump({k: str(v) for k, v in paths.items()})


def _cmd_export(args) -> str:
    topo = load_topology(args.topology) if args.topology else ieee39_topology()
    sol = json.loads(Path(args.solution).read_text(encoding="utf-8"))
    return export_graph(sol, topo, args.fmt)


COMMANDS = {
    "coherency": _cmd_coherency,
    "island": _cmd_island,
    "evaluate": _cmd_evaluate,
    "oracle": _cmd_oracle,
    "synth": _cmd_synth,
    "export": _cmd_export,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = COMMANDS[args.command](args)
    except IslandkitError as exc:
        sys.stderr.write(_dump({"error": exc.code, "message": str(exc)}))
        return 1
    except FileNotFoundError as exc:
        sys.stderr.write(_dump({"error": "E_FILE_NOT_FOUND", "message": str(exc)}))
        return 1
    _emit(text, getattr(args, "out", None))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
