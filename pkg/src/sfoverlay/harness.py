"""Experiment specs, ensemble execution and CSV/JSON emission.

A spec is a flat ``key=value`` document (whitespace or newline separated,
``#`` comments).  List-valued keys (``n_nodes``, ``m``, ``cutoffs``,
``gamma_target``, ``tau_sub``) span a sweep; every combination is one
sweep point, run for ``realizations`` independently seeded topologies.
"""
from __future__ import annotations

import itertools
import json
import math
import shlex
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import (
    DegreeHistogram,
    FitError,
    default_fit_range,
    degree_histogram,
    fit_powerlaw_exponent,
    log_bins,
    measure_natural_cutoff,
)
from .generators import GenerationError, GeneratorConfig, Model, SubstrateConfig, generate
from .graph import GraphError, approx_avg_shortest_path, giant_component
from .search import Algorithm, curve_csv, measure_search_curve, sample_sources


class SpecError(ValueError):
    """Malformed or inconsistent experiment spec."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


# ---------------------------------------------------------------------------
# spec

_KEYS = {
    "model", "n_nodes", "m", "cutoffs", "gamma_target", "tau_sub",
    "substrate", "n_substrate", "radius", "mean_degree", "dimensions",
    "realizations", "n_sources", "bins_per_decade", "algorithms", "ttl",
    "rw_mode", "master_seed", "output_dir", "path_sources",
}


@dataclass
class ExperimentSpec:
    model: Model
    n_nodes: list[int]
    m: list[int]
    cutoffs: list[int | None] = field(default_factory=lambda: [None])
    gamma_target: list[float | None] = field(default_factory=lambda: [None])
    tau_sub: list[int | None] = field(default_factory=lambda: [None])
    substrate: SubstrateConfig | None = None
    realizations: int = 10
    n_sources: int = 100
    bins_per_decade: int = 10
    algorithms: list[Algorithm] = field(default_factory=list)
    ttl: list[int] = field(default_factory=lambda: list(range(1, 11)))
    rw_mode: str = "fair"
    master_seed: int = 0
    output_dir: str | None = None
    path_sources: int = 0
    text: str = ""

    def sweep_points(self) -> list["SweepPoint"]:
        points = []
        for n, m, kc, gamma, tau in itertools.product(self.n_nodes, self.m, self.cutoffs, self.gamma_target, self.tau_sub):
            cfg = GeneratorConfig(
                model=self.model, n_nodes=n, stubs=m, hard_cutoff=kc, gamma_target=gamma,
                tau_sub=tau, substrate=self.substrate,
            )
            points.append(SweepPoint(len(points), cfg))
        return points


@dataclass(frozen=True)
class SweepPoint:
    index: int
    config: GeneratorConfig

    @property
    def name(self) -> str:
        c = self.config
        kc = "none" if c.hard_cutoff is None else str(c.hard_cutoff)
        name = f"{c.model.value.lower()}_n{c.n_nodes}_m{c.stubs}_kc{kc}"
        if c.model is Model.CM:
            name += f"_g{c.gamma_target:g}"
        if c.model is Model.DAPA:
            name += f"_tau{c.tau_sub}"
        return name

    def params(self) -> dict:
        c = self.config
        return {
            "model": c.model.value, "n_nodes": c.n_nodes, "m": c.stubs, "hard_cutoff": c.hard_cutoff,
            "gamma_target": c.gamma_target, "tau_sub": c.tau_sub,
        }


def _tokens(text: str) -> list[str]:
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        out.extend(shlex.split(line))
    return out


def _int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise SpecError(f"{key}: expected an integer, got {raw!r}", key) from None


def _float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise SpecError(f"{key}: expected a number, got {raw!r}", key) from None


def _list(raw: str) -> list[str]:
    items = [s.strip() for s in raw.split(",")]
    if not items or any(not s for s in items):
        raise SpecError(f"empty item in list {raw!r}")
    return items


def _ttls(raw: str) -> list[int]:
    out = []
    for item in _list(raw):
        if "-" in item:
            a, b = item.split("-", 1)
            out.extend(range(_int("ttl", a), _int("ttl", b) + 1))
        else:
            out.append(_int("ttl", item))
    if not out or min(out) < 0:
        raise SpecError("ttl values must be non-negative", "ttl")
    return sorted(set(out))


def parse_spec(text: str) -> ExperimentSpec:
    raw: dict[str, str] = {}
    for tok in _tokens(text):
        if "=" not in tok:
            raise SpecError(f"expected key=value, got {tok!r}")
        key, value = tok.split("=", 1)
        key = key.strip()
        if key not in _KEYS:
            raise SpecError(f"unknown key {key!r}", key)
        if key in raw:
            raise SpecError(f"duplicate key {key!r}", key)
        raw[key] = value.strip()
    for key in ("model", "n_nodes", "m"):
        if key not in raw:
            raise SpecError(f"missing required key {key!r}", key)
    try:
        model = Model(raw["model"].upper())
    except ValueError:
        raise SpecError(f"model: unknown model {raw['model']!r}", "model") from None

    spec = ExperimentSpec(
        model=model,
        n_nodes=[_int("n_nodes", v) for v in _list(raw["n_nodes"])],
        m=[_int("m", v) for v in _list(raw["m"])],
        text=text,
    )
    if "cutoffs" in raw:
        spec.cutoffs = [None if v.lower() == "none" else _int("cutoffs", v) for v in _list(raw["cutoffs"])]
    if model is Model.CM:
        if "gamma_target" not in raw:
            raise SpecError("CM requires gamma_target", "gamma_target")
        spec.gamma_target = [_float("gamma_target", v) for v in _list(raw["gamma_target"])]
    elif "gamma_target" in raw:
        raise SpecError("gamma_target only applies to CM", "gamma_target")
    if model is Model.DAPA:
        if "tau_sub" not in raw:
            raise SpecError("DAPA requires tau_sub", "tau_sub")
        spec.tau_sub = [_int("tau_sub", v) for v in _list(raw["tau_sub"])]
        spec.substrate = _substrate(raw)
    else:
        for key in ("tau_sub", "substrate", "n_substrate", "radius", "mean_degree", "dimensions"):
            if key in raw:
                raise SpecError(f"{key} only applies to DAPA", key)

    for key, lo in (("realizations", 1), ("n_sources", 1), ("bins_per_decade", 1), ("path_sources", 0)):
        if key in raw:
            val = _int(key, raw[key])
            if val < lo:
                raise SpecError(f"{key} must be >= {lo}", key)
            setattr(spec, key, val)
    if "master_seed" in raw:
        spec.master_seed = _int("master_seed", raw["master_seed"])
    if "output_dir" in raw:
        spec.output_dir = raw["output_dir"]
    if "algorithms" in raw:
        try:
            spec.algorithms = [Algorithm(v.upper()) for v in _list(raw["algorithms"])]
        except ValueError:
            raise SpecError(f"algorithms: expected FL/NF/RW, got {raw['algorithms']!r}", "algorithms") from None
    if "ttl" in raw:
        spec.ttl = _ttls(raw["ttl"])
    if "rw_mode" in raw:
        if raw["rw_mode"] not in ("fair", "raw"):
            raise SpecError("rw_mode must be 'fair' or 'raw'", "rw_mode")
        spec.rw_mode = raw["rw_mode"]

    for n in spec.n_nodes:
        if n < 1:
            raise SpecError("n_nodes must be >= 1", "n_nodes")
    for m in spec.m:
        if m < 1:
            raise SpecError("m must be >= 1", "m")
        for kc in spec.cutoffs:
            if kc is not None and kc <= m:
                raise SpecError(f"cutoff {kc} must exceed m={m}", "cutoffs")
    for g in spec.gamma_target:
        if g is not None and g <= 1:
            raise SpecError("gamma_target must exceed 1", "gamma_target")
    for t in spec.tau_sub:
        if t is not None and t < 1:
            raise SpecError("tau_sub must be >= 1", "tau_sub")
    try:
        spec.sweep_points()
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    return spec


def _substrate(raw: dict) -> SubstrateConfig:
    kind = raw.get("substrate", "grn").lower()
    n_s = _int("n_substrate", raw.get("n_substrate", "20000"))
    try:
        if kind == "mesh":
            return SubstrateConfig(n_substrate=n_s, kind="mesh")
        dims = _int("dimensions", raw.get("dimensions", "2"))
        if "radius" in raw and "mean_degree" in raw:
            raise SpecError("give radius or mean_degree, not both", "radius")
        if "radius" in raw:
            radius = _float("radius", raw["radius"])
        else:
            kbar = _float("mean_degree", raw.get("mean_degree", "10"))
            if dims != 2:
                raise SpecError("mean_degree calibration is 2-D only; give radius", "mean_degree")
            radius = SubstrateConfig.for_mean_degree(n_s, kbar).radius
        return SubstrateConfig(n_substrate=n_s, radius=radius, dimensions=dims, kind=kind)
    except ValueError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"substrate: {exc}", "substrate") from None


# ---------------------------------------------------------------------------
# execution

def derive_seed(master_seed: int, sweep_index: int, realization: int) -> int:
    """Child seed as a pure function of (master seed, sweep index, realization index)."""
    ss = np.random.SeedSequence([int(master_seed) % 2**32, int(sweep_index), int(realization)])
    return int(ss.generate_state(1)[0])


@dataclass
class RealizationResult:
    realization: int
    seed: int
    histogram: DegreeHistogram | None = None
    k_max: int = 0
    n_edges: int = 0
    gc_fraction: float = 0.0
    removed_self_loops: int = 0
    removed_multi_edges: int = 0
    avg_path: float | None = None
    curves: dict = field(default_factory=dict)  # algorithm -> (hits, messages) arrays
    error: str | None = None


@dataclass
class PointResult:
    point: SweepPoint
    realizations: list[RealizationResult]
    histogram: DegreeHistogram | None = None
    fit: dict | None = None
    fit_error: str | None = None
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None


@dataclass
class EnsembleResult:
    spec: ExperimentSpec
    points: list[PointResult]

    @property
    def failures(self) -> list[PointResult]:
        return [p for p in self.points if not p.ok]


def run_realization(spec: ExperimentSpec, point: SweepPoint, realization: int) -> RealizationResult:
    seed = derive_seed(spec.master_seed, point.index, realization)
    res = RealizationResult(realization, seed)
    try:
        topo = generate(point.config, seed)
    except GenerationError as exc:
        res.error = str(exc)
        return res
    g = topo.graph
    res.histogram = degree_histogram(g)
    res.k_max = measure_natural_cutoff(res.histogram) if g.node_count else 0
    res.n_edges = g.n_edges
    res.gc_fraction = giant_component(g)[0] / max(g.node_count, 1)
    res.removed_self_loops = topo.removed_self_loops
    res.removed_multi_edges = topo.removed_multi_edges
    search_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    if spec.path_sources > 0 and g.n_edges > 0:
        try:
            res.avg_path = approx_avg_shortest_path(g, spec.path_sources, search_rng.integers(2**32))
        except GraphError:
            res.avg_path = None
    if spec.algorithms:
        sources = sample_sources(g, spec.n_sources, search_rng)
        # one seed for every algorithm: a fair RW walks exactly the budget of the reported NF run
        curve_seed = int(search_rng.integers(2**32))
        for alg in spec.algorithms:
            curve = measure_search_curve(
                g, alg, spec.ttl, len(sources), k_min=point.config.stubs,
                rng_seed=curve_seed, fair=spec.rw_mode == "fair", sources=sources,
            )
            res.curves[alg.value] = (curve.hits, curve.messages)
    return res


def _task(args):
    spec, point, r = args
    return run_realization(spec, point, r)


def _aggregate(spec: ExperimentSpec, point: SweepPoint, reals: list[RealizationResult]) -> PointResult:
    out = PointResult(point, reals)
    bad = [r for r in reals if r.error]
    if bad:
        out.failure = f"realization {bad[0].realization}: {bad[0].error}"
        return out
    out.histogram = DegreeHistogram.pooled(r.histogram for r in reals)
    cfg = point.config
    try:
        lo, hi = default_fit_range(out.histogram, cfg.stubs, cfg.hard_cutoff)
        fit = fit_powerlaw_exponent(out.histogram, lo, hi, bins_per_decade=spec.bins_per_decade)
        out.fit = fit.to_dict()
    except FitError as exc:
        out.fit_error = str(exc)
    return out


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> EnsembleResult:
    """Generate, measure and search every (sweep point, realization) pair.

    Output order and content do not depend on ``workers``.
    """
    points = spec.sweep_points()
    tasks = [(spec, p, r) for p in points for r in range(spec.realizations)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_task, tasks))
    else:
        done = [_task(t) for t in tasks]
    results = []
    for i, p in enumerate(points):
        reals = done[i * spec.realizations:(i + 1) * spec.realizations]
        results.append(_aggregate(spec, p, reals))
    return EnsembleResult(spec, results)


# ---------------------------------------------------------------------------
# output

def _mean_stderr(values) -> tuple[float, float]:
    a = np.asarray(values, dtype=float)
    if len(a) == 0:
        return math.nan, math.nan
    se = float(a.std(ddof=1) / np.sqrt(len(a))) if len(a) > 1 else 0.0
    return float(a.mean()), se


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def prepare_output_dir(dest, overwrite: bool = False) -> None:
    """Create ``dest`` and verify it is writable; refuse non-empty dirs unless ``overwrite``."""
    dest = Path(dest)
    if dest.exists():
        if not dest.is_dir():
            raise FileExistsError(f"{dest} exists and is not a directory")
        if any(dest.iterdir()) and not overwrite:
            raise FileExistsError(f"{dest} is not empty; pass overwrite to replace its contents")
    dest.mkdir(parents=True, exist_ok=True)
    probe = dest / ".write-test"
    probe.write_text("")
    probe.unlink()


def point_summary(pr: PointResult) -> dict:
    reals = pr.realizations
    k_mean, k_se = _mean_stderr([r.k_max for r in reals])
    gc_mean, gc_se = _mean_stderr([r.gc_fraction for r in reals])
    paths = [r.avg_path for r in reals if r.avg_path is not None]
    summary = {
        "sweep_point": pr.point.name,
        "params": pr.point.params(),
        "realizations": len(reals),
        "seeds": [r.seed for r in reals],
        "fit": pr.fit,
        "fit_error": pr.fit_error,
        "k_max_mean": k_mean,
        "k_max_stderr": k_se,
        "giant_component_fraction_mean": gc_mean,
        "giant_component_fraction_stderr": gc_se,
        "zero_degree_nodes": pr.histogram.zero_degree if pr.histogram else 0,
        "n_nodes_total": pr.histogram.n_nodes if pr.histogram else 0,
    }
    if pr.point.config.model is Model.CM:
        summary["removed_self_loops_total"] = sum(r.removed_self_loops for r in reals)
        summary["removed_multi_edges_total"] = sum(r.removed_multi_edges for r in reals)
    if paths:
        summary["avg_path_mean"], summary["avg_path_stderr"] = _mean_stderr(paths)
    return summary


def pooled_curve_rows(pr: PointResult, alg: str, ttls) -> list[tuple]:
    hits = np.concatenate([r.curves[alg][0] for r in pr.realizations], axis=1)
    msgs = np.concatenate([r.curves[alg][1] for r in pr.realizations], axis=1)
    rows = []
    for i, t in enumerate(ttls):
        mh, sh = _mean_stderr(hits[i])
        mm, sm = _mean_stderr(msgs[i])
        rows.append((int(t), mh, sh, mm, sm))
    return rows


def emit_outputs(result: EnsembleResult, dest, overwrite: bool = False, per_realization: bool = False) -> list[str]:
    """Write every sweep point's files plus ``manifest.json``; return the data files written.

    Refuses a non-empty ``dest`` unless ``overwrite``.  Write access is
    checked before any file is produced.
    """
    dest = Path(dest)
    prepare_output_dir(dest, overwrite)
    spec = result.spec
    files: list[str] = []
    entries = []

    def put(rel: str, text: str) -> None:
        path = dest / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        files.append(rel)

    for pr in result.points:
        name = pr.point.name
        entry = {"name": name, "params": pr.point.params(), "status": "ok" if pr.ok else "failed"}
        if not pr.ok:
            entry["error"] = pr.failure
            entries.append(entry)
            continue
        before = len(files)
        put(f"{name}/histogram.csv", pr.histogram.to_csv())
        put(f"{name}/logbin.csv", log_bins(pr.histogram, spec.bins_per_decade).to_csv())
        put(f"{name}/fit.json", _dump(point_summary(pr)))
        for alg in spec.algorithms:
            put(f"{name}/search_{alg.value.lower()}.csv", curve_csv(pooled_curve_rows(pr, alg.value, spec.ttl)))
        if per_realization:
            lines = ["realization,seed,k_max,n_edges,gc_fraction,removed_self_loops,removed_multi_edges"]
            lines += [
                f"{r.realization},{r.seed},{r.k_max},{r.n_edges},{r.gc_fraction!r},{r.removed_self_loops},{r.removed_multi_edges}"
                for r in pr.realizations
            ]
            put(f"{name}/realizations.csv", "\n".join(lines) + "\n")
        entry["files"] = files[before:]
        entries.append(entry)

    manifest = {
        "spec": spec.text,
        "master_seed": spec.master_seed,
        "sweep_points": entries,
        "files": list(files),
    }
    (dest / "manifest.json").write_text(_dump(manifest))
    return files
