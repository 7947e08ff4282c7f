"""Command-line entry point: ``sfoverlay {generate,analyze,search,experiment,spec-check}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from ._jit import backend
from .analysis import (
    FitError,
    default_fit_range,
    degree_histogram,
    fit_powerlaw_exponent,
    log_bins,
)
from .generators import (
    GenerationError,
    GeneratorConfig,
    Model,
    SubstrateConfig,
    build_substrate,
    generate,
    write_coords,
    write_peer_map,
)
from .graph import GraphError, read_edgelist, write_edgelist
from .harness import SpecError, emit_outputs, parse_spec, prepare_output_dir, run_experiment
from .search import Algorithm, measure_search_curve

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_GENERATION = 3
EXIT_IO = 4


class _IOFailure(Exception):
    pass


def _cutoff(text: str) -> int | None:
    return None if text.lower() == "none" else int(text)


def _ttl_range(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _check_dest(path: str | None, overwrite: bool) -> None:
    if path is None or path == "-":
        return
    p = Path(path)
    if p.exists() and not overwrite:
        raise FileExistsError(f"{p} exists; pass --overwrite to replace it")
    if not p.parent.exists():
        raise FileNotFoundError(f"directory {p.parent} does not exist")


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _read_graph(path: str):
    try:
        return read_edgelist(path)
    except OSError:
        raise
    except GraphError as exc:
        raise _IOFailure(f"cannot parse edge list {path}: {exc}") from None


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(args) -> int:
    kind = args.model.upper()
    try:
        if kind in ("GRN", "MESH"):
            n = args.n_substrate or args.n
            if kind == "MESH":
                sub = SubstrateConfig(n_substrate=n, kind="mesh")
            elif args.radius is not None:
                sub = SubstrateConfig(n_substrate=n, radius=args.radius, dimensions=args.dimensions)
            else:
                sub = SubstrateConfig.for_mean_degree(n, args.mean_degree)
            cfg = None
        else:
            substrate = None
            if kind == "DAPA":
                n_s = args.n_substrate or 2 * args.n
                if args.substrate == "mesh":
                    substrate = SubstrateConfig(n_substrate=n_s, kind="mesh")
                elif args.radius is not None:
                    substrate = SubstrateConfig(n_substrate=n_s, radius=args.radius, dimensions=args.dimensions)
                else:
                    substrate = SubstrateConfig.for_mean_degree(n_s, args.mean_degree)
            cfg = GeneratorConfig(
                model=Model(kind), n_nodes=args.n, stubs=args.m, hard_cutoff=args.cutoff,
                gamma_target=args.gamma, tau_sub=args.tau_sub, substrate=substrate,
            )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    for dest in (args.out, args.map_out, args.coords_out):
        _check_dest(dest, args.overwrite)

    if cfg is None:
        g, coords = build_substrate(sub, args.seed)
        comment = f"{kind} n={sub.n_substrate} radius={sub.radius!r} seed={args.seed}"
        if args.coords_out:
            write_coords(coords, args.coords_out)
        write_edgelist(g, sys.stdout if args.out in (None, "-") else args.out, comment)
        return EXIT_OK
    topo = generate(cfg, args.seed)
    comment = f"{kind} n={cfg.n_nodes} m={cfg.stubs} k_c={cfg.hard_cutoff} seed={args.seed}"
    if topo.removed_self_loops or topo.removed_multi_edges:
        print(
            f"removed {topo.removed_self_loops} self-loops, {topo.removed_multi_edges} multi-edges",
            file=sys.stderr,
        )
    if args.map_out:
        if topo.substrate_node_of is None:
            print("error: --map-out only applies to DAPA", file=sys.stderr)
            return EXIT_SPEC
        write_peer_map(topo.substrate_node_of, args.map_out)
    write_edgelist(topo.graph, sys.stdout if args.out in (None, "-") else args.out, comment)
    return EXIT_OK


def cmd_analyze(args) -> int:
    g = _read_graph(args.edgelist)
    h = degree_histogram(g)
    lo, hi = default_fit_range(h, args.m, args.cutoff)
    lo = args.k_lo if args.k_lo is not None else lo
    hi = args.k_hi if args.k_hi is not None else hi
    try:
        fit = fit_powerlaw_exponent(h, lo, hi, method=args.method, bins_per_decade=args.bins_per_decade)
        report = fit.to_dict()
    except FitError as exc:
        report = {"error": str(exc), "fit_range": [lo, hi]}
    report["n_nodes"] = g.node_count
    report["n_edges"] = g.n_edges
    report["k_max"] = max(h.counts) if h.counts else 0
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        out = Path(args.out)
        if out.exists() and any(out.iterdir()) and not args.overwrite:
            raise FileExistsError(f"{out} is not empty; pass --overwrite")
        out.mkdir(parents=True, exist_ok=True)
        h.to_csv(out / "histogram.csv")
        log_bins(h, args.bins_per_decade).to_csv(out / "logbin.csv")
        (out / "fit.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_search(args) -> int:
    g = _read_graph(args.edgelist)
    if g.node_count == 0:
        print("error: empty graph", file=sys.stderr)
        return EXIT_SPEC
    try:
        alg = Algorithm(args.algorithm.upper())
        ttls = _ttl_range(args.ttl)
        k_min = args.k_min if args.k_min is not None else max(1, int(g.degrees.min()))
        _check_dest(args.out, args.overwrite)
        curve = measure_search_curve(
            g, alg, ttls, args.sources, k_min=k_min, rng_seed=args.seed, fair=not args.raw_rw
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    _write_text(args.out, curve.to_csv())
    return EXIT_OK


def _load_spec(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _IOFailure(f"cannot read spec {path}: {exc}") from None
    return parse_spec(text)


def cmd_spec_check(args) -> int:
    spec = _load_spec(args.spec)
    points = spec.sweep_points()
    print(f"ok: {len(points)} sweep point(s) x {spec.realizations} realization(s)")
    for p in points:
        print(f"  {p.name}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    spec = _load_spec(args.spec)
    if args.seed is not None:
        spec.master_seed = args.seed
    out = args.out or spec.output_dir
    if not out:
        print("error: no output directory (use --out or output_dir=)", file=sys.stderr)
        return EXIT_SPEC
    # fail on an unusable destination before spending time on the ensemble
    dest = Path(out)
    prepare_output_dir(dest, args.overwrite)
    result = run_experiment(spec, workers=args.workers)
    files = emit_outputs(result, dest, overwrite=args.overwrite, per_realization=args.per_realization)
    print(f"wrote {len(files) + 1} files to {dest}")
    if result.failures:
        for f in result.failures:
            print(f"failed: {f.point.name}: {f.failure}", file=sys.stderr)
        return EXIT_GENERATION
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sfoverlay", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({backend()})")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        if seed:
            sp.add_argument("--seed", type=int, default=None, help="RNG seed")
        sp.add_argument("--out", default=None, help="output path ('-' or omitted for stdout where applicable)")
        sp.add_argument("--overwrite", action="store_true", help="replace existing output")

    g = sub.add_parser("generate", help="build one topology and write its edge list")
    g.add_argument("--model", required=True, choices=["PA", "CM", "HAPA", "DAPA", "GRN", "MESH", "pa", "cm", "hapa", "dapa", "grn", "mesh"])
    g.add_argument("--n", type=int, required=True, help="node count")
    g.add_argument("--m", type=int, default=1, help="stubs per joining node / minimum degree")
    g.add_argument("--cutoff", type=_cutoff, default=None, help="hard cutoff k_c or 'none'")
    g.add_argument("--gamma", type=float, default=None, help="target exponent (CM)")
    g.add_argument("--tau-sub", type=int, default=None, help="substrate horizon (DAPA)")
    g.add_argument("--substrate", choices=["grn", "mesh"], default="grn")
    g.add_argument("--n-substrate", type=int, default=None)
    g.add_argument("--radius", type=float, default=None)
    g.add_argument("--mean-degree", type=float, default=10.0, help="GRN calibration when --radius is absent")
    g.add_argument("--dimensions", type=int, default=2)
    g.add_argument("--map-out", default=None, help="DAPA overlay->substrate map file")
    g.add_argument("--coords-out", default=None, help="GRN/MESH coordinate file")
    common(g)
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", help="degree histogram and exponent fit of an edge list")
    a.add_argument("edgelist")
    a.add_argument("--m", type=int, default=1)
    a.add_argument("--cutoff", type=_cutoff, default=None)
    a.add_argument("--k-lo", type=int, default=None)
    a.add_argument("--k-hi", type=int, default=None)
    a.add_argument("--method", choices=["log_binned_ls", "truncated_mle"], default="log_binned_ls")
    a.add_argument("--bins-per-decade", type=int, default=10)
    common(a, seed=False)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("search", help="search curve (hits/messages per TTL) on an edge list")
    s.add_argument("edgelist")
    s.add_argument("--algorithm", required=True, choices=["FL", "NF", "RW", "fl", "nf", "rw"])
    s.add_argument("--ttl", default="1-10", help="e.g. 1-10 or 1,2,4")
    s.add_argument("--sources", type=int, default=100)
    s.add_argument("--k-min", type=int, default=None, help="NF fan-out (default: minimum degree)")
    s.add_argument("--raw-rw", action="store_true", help="RW walks TTL steps instead of the NF budget")
    common(s)
    s.set_defaults(func=cmd_search)

    e = sub.add_parser("experiment", help="run a spec file and write the ensemble outputs")
    e.add_argument("spec")
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--per-realization", action="store_true", help="also write realizations.csv per sweep point")
    common(e)
    e.set_defaults(func=cmd_experiment)

    c = sub.add_parser("spec-check", help="validate a spec file")
    c.add_argument("spec")
    c.set_defaults(func=cmd_spec_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except GenerationError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except (OSError, _IOFailure) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
