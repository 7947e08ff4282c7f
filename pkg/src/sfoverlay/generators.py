"""Overlay construction models: PA, CM, HAPA, DAPA, plus substrates.

All generators are deterministic given their seed.  ``rng`` arguments
accept ``None`` (use the config's seed), an int seed, or a
``numpy.random.Generator`` from which a kernel seed is drawn.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .graph import Graph, GraphError, giant_component

SEED_SPACE = 2**32


class Model(str, enum.Enum):
    PA = "PA"
    CM = "CM"
    HAPA = "HAPA"
    DAPA = "DAPA"


class GenerationError(RuntimeError):
    """A generator could not complete (stalled joiner or exhausted candidates)."""

    def __init__(self, message: str, node: int | None = None, achieved: int | None = None):
        super().__init__(message)
        self.node = node
        self.achieved = achieved


@dataclass(frozen=True)
class SubstrateConfig:
    n_substrate: int
    radius: float = 0.0
    dimensions: int = 2
    kind: str = "grn"  # "grn" or "mesh"
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("grn", "mesh"):
            raise ValueError(f"unknown substrate kind {self.kind!r}")
        if self.n_substrate < 1:
            raise ValueError("n_substrate must be >= 1")
        if self.kind == "grn":
            if self.dimensions < 1:
                raise ValueError("dimensions must be >= 1")
            if self.radius <= 0:
                raise ValueError("radius must be positive")
        elif int(round(np.sqrt(self.n_substrate))) ** 2 != self.n_substrate:
            raise ValueError("mesh substrate needs a square node count")

    @classmethod
    def for_mean_degree(cls, n_substrate: int, mean_degree: float, seed: int | None = None) -> "SubstrateConfig":
        """2-D GRN whose bulk mean degree N*pi*R^2 equals ``mean_degree``."""
        radius = float(np.sqrt(mean_degree / (n_substrate * np.pi)))
        return cls(n_substrate=n_substrate, radius=radius, dimensions=2, seed=seed)


@dataclass(frozen=True)
class GeneratorConfig:
    model: Model
    n_nodes: int
    stubs: int = 1
    hard_cutoff: int | None = None
    gamma_target: float | None = None
    tau_sub: int | None = None
    substrate: SubstrateConfig | None = None
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        m = self.stubs
        if m < 1:
            raise ValueError("stubs (m) must be >= 1")
        if self.n_nodes < 0:
            raise ValueError("n_nodes must be >= 0")
        if self.hard_cutoff is not None and self.hard_cutoff <= m:
            raise ValueError(f"hard cutoff k_c={self.hard_cutoff} must exceed m={m}")
        if self.model is Model.CM:
            if self.gamma_target is None or self.gamma_target <= 1:
                raise ValueError("CM needs gamma_target > 1")
        if self.model is Model.DAPA:
            if self.tau_sub is None or self.tau_sub < 1:
                raise ValueError("DAPA needs tau_sub >= 1")
            if self.substrate is None:
                raise ValueError("DAPA needs a substrate config")
            if self.n_nodes > self.substrate.n_substrate:
                raise ValueError("overlay size exceeds substrate size")
            if self.n_nodes < 2:
                raise ValueError("DAPA overlay needs at least 2 peers")
        elif self.model in (Model.PA, Model.HAPA) and self.n_nodes < m + 2:
            raise ValueError(f"{self.model.value} needs n_nodes >= m + 2")

    @property
    def cutoff_code(self) -> int:
        return _kernels.NO_CUTOFF if self.hard_cutoff is None else int(self.hard_cutoff)


@dataclass
class DegreeSequence:
    degrees: np.ndarray
    m: int = 1
    k_c: int | None = None

    def __post_init__(self):
        self.degrees = np.asarray(self.degrees, dtype=np.int64)
        if self.degrees.sum() % 2:
            raise ValueError("degree sum must be even")
        if len(self.degrees):
            if self.degrees.min() < self.m:
                raise ValueError("degree below minimum m")
            if self.k_c is not None and self.degrees.max() > self.k_c:
                raise ValueError("degree above cutoff")

    def __len__(self):
        return len(self.degrees)


class CMResult(NamedTuple):
    graph: Graph
    removed_self_loops: int
    removed_multi_edges: int


class DAPAResult(NamedTuple):
    graph: Graph
    substrate_node_of: np.ndarray
    substrate: Graph


def kernel_seed(rng=None, fallback: int | None = None) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(SEED_SPACE))
    if rng is not None:
        return int(rng) % SEED_SPACE
    if fallback is not None:
        return int(fallback) % SEED_SPACE
    return int(np.random.SeedSequence().generate_state(1)[0])


def _graph_from_arrays(n: int, src: np.ndarray, dst: np.ndarray) -> Graph:
    g = Graph(n)
    adj = g.adjacency
    for u, v in zip(src.tolist(), dst.tolist()):
        adj[u].add(v)
        adj[v].add(u)
    g.total_degree = sum(len(a) for a in adj)
    return g


# ---------------------------------------------------------------------------
# preferential attachment

def preferential_pick(g: Graph, candidates, joiner: int, k_c: int | None, rng) -> int | None:
    """Degree-proportional draw among eligible candidates.

    Runs the rejection loop literally: a uniform candidate is accepted with
    probability k / k_total (k_total summed over the candidate set) if it is
    not yet adjacent to ``joiner`` and below the cutoff.  After 50 * |C|
    consecutive rejections it falls back to an exact roulette wheel.
    """
    rng = np.random.default_rng(rng)
    cand = np.array(sorted(candidates), dtype=np.int64)
    if len(cand) == 0:
        return None
    if joiner in set(cand.tolist()):
        raise ValueError("joiner must not be among the candidates")
    deg = g.degrees[cand]
    joined = g.adjacency[joiner]
    eligible = np.array([c not in joined for c in cand.tolist()], dtype=bool)
    if k_c is not None:
        eligible &= deg < k_c
    weights = np.where(eligible, deg, 0)
    if weights.sum() == 0:
        return None
    k_total = deg.sum()
    for _ in range(50 * len(cand)):
        idx = rng.integers(len(cand))
        if eligible[idx] and rng.random() * k_total < deg[idx]:
            return int(cand[idx])
    return int(rng.choice(cand, p=weights / weights.sum()))


def generate_pa(cfg: GeneratorConfig, rng=None) -> Graph:
    """Preferential attachment grown from an (m+1)-clique, honoring the hard cutoff."""
    m, n = cfg.stubs, cfg.n_nodes
    if n < m + 2:
        raise ValueError("PA needs n_nodes >= m + 2")
    src, dst, failed = _kernels.pa_kernel(n, m, cfg.cutoff_code, kernel_seed(rng, cfg.seed))
    if failed >= 0:
        raise GenerationError(f"PA stalled: node {failed} cannot place its stubs", node=int(failed))
    return _graph_from_arrays(n, src, dst)


def generate_hapa(cfg: GeneratorConfig, rng=None) -> Graph:
    """Hop-and-attempt PA: one random attempt, then attempts along a walk over existing links.

    The walk is not reset between stubs of the same joiner.
    """
    m, n = cfg.stubs, cfg.n_nodes
    if n < m + 2:
        raise ValueError("HAPA needs n_nodes >= m + 2")
    src, dst, failed = _kernels.hapa_kernel(n, m, cfg.cutoff_code, kernel_seed(rng, cfg.seed))
    if failed >= 0:
        raise GenerationError(f"HAPA stalled: node {failed} cannot place its stubs", node=int(failed))
    return _graph_from_arrays(n, src, dst)


# ---------------------------------------------------------------------------
# configuration model

def sample_powerlaw_degree_sequence(n: int, m: int, gamma: float, k_c: int, rng=None) -> DegreeSequence:
    """Draw n degrees from the continuous law (gamma-1) m^(gamma-1) / k^gamma on [m, k_c].

    Each draw is the inverse-transform sample rounded to the nearest
    integer; values above ``k_c`` are redrawn.  The sum is made even by
    incrementing one random entry below ``k_c``.
    """
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")
    if m < 1:
        raise ValueError("m must be >= 1")
    if k_c <= m:
        raise ValueError(f"k_c={k_c} must exceed m={m}")
    rng = np.random.default_rng(rng)
    out = np.empty(n, dtype=np.int64)
    todo = np.arange(n)
    while len(todo):
        u = rng.random(len(todo))
        k = np.floor(m * (1.0 - u) ** (-1.0 / (gamma - 1.0)) + 0.5)
        ok = k <= k_c
        out[todo[ok]] = k[ok]
        todo = todo[~ok]
    if out.sum() % 2:
        room = np.flatnonzero(out < k_c)
        if len(room):
            out[rng.choice(room)] += 1
        else:
            out[rng.integers(n)] -= 1
    return DegreeSequence(out, m=min(m, int(out.min())) if n else m, k_c=k_c)


def generate_cm(cfg: GeneratorConfig, rng=None, sequence: DegreeSequence | None = None) -> CMResult:
    """Configuration model: stub pairing, then self-loop and multi-edge removal."""
    seed = kernel_seed(rng, cfg.seed)
    ss = np.random.SeedSequence(seed)
    seq_rng, pair_seed = np.random.default_rng(ss.spawn(1)[0]), int(ss.generate_state(1)[0])
    if sequence is None:
        k_c = cfg.hard_cutoff if cfg.hard_cutoff is not None else max(cfg.n_nodes - 1, cfg.stubs + 1)
        sequence = sample_powerlaw_degree_sequence(cfg.n_nodes, cfg.stubs, cfg.gamma_target, k_c, seq_rng)
    return configuration_model(sequence, pair_seed)


def configuration_model(sequence: DegreeSequence, rng=None) -> CMResult:
    degrees = np.asarray(sequence.degrees, dtype=np.int64)
    n = len(degrees)
    if n == 0:
        return CMResult(Graph(0), 0, 0)
    a, b = _kernels.stub_pairing_kernel(degrees, kernel_seed(rng, 0))
    loops = a == b
    lo = np.minimum(a, b)[~loops]
    hi = np.maximum(a, b)[~loops]
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0) if len(lo) else np.empty((0, 2), np.int64)
    g = _graph_from_arrays(n, pairs[:, 0], pairs[:, 1])
    return CMResult(g, int(loops.sum()), int(len(lo) - len(pairs)))


# ---------------------------------------------------------------------------
# substrates

def generate_grn(cfg: SubstrateConfig, rng=None) -> tuple[Graph, np.ndarray]:
    """Geometric random network in the unit box (open boundary): edge iff distance < R."""
    gen = np.random.default_rng(kernel_seed(rng, cfg.seed))
    coords = gen.random((cfg.n_substrate, cfg.dimensions))
    tree = cKDTree(coords)
    pairs = tree.query_pairs(cfg.radius, output_type="ndarray")
    if len(pairs):
        d = np.linalg.norm(coords[pairs[:, 0]] - coords[pairs[:, 1]], axis=1)
        pairs = pairs[d < cfg.radius]
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    return _graph_from_arrays(cfg.n_substrate, pairs[:, 0], pairs[:, 1]), coords


def generate_mesh(n_substrate: int) -> tuple[Graph, np.ndarray]:
    """Square 2-D lattice with four-neighbor links; coordinates on the unit grid."""
    side = int(round(np.sqrt(n_substrate)))
    if side * side != n_substrate:
        raise ValueError("mesh substrate needs a square node count")
    ids = np.arange(n_substrate).reshape(side, side)
    right = np.stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()], axis=1)
    down = np.stack([ids[:-1, :].ravel(), ids[1:, :].ravel()], axis=1)
    edges = np.concatenate([right, down])
    rows, cols = np.divmod(np.arange(n_substrate), side)
    coords = np.stack([cols, rows], axis=1) / max(side - 1, 1)
    return _graph_from_arrays(n_substrate, edges[:, 0], edges[:, 1]), coords


def build_substrate(cfg: SubstrateConfig, rng=None) -> tuple[Graph, np.ndarray]:
    if cfg.kind == "mesh":
        return generate_mesh(cfg.n_substrate)
    return generate_grn(cfg, rng)


# ---------------------------------------------------------------------------
# discover-and-attempt PA

def generate_dapa(cfg: GeneratorConfig, rng=None, substrate: Graph | None = None) -> DAPAResult:
    """Overlay built by joiners that attach preferentially within their tau_sub-hop horizon.

    Candidates with an empty horizon are skipped and may be drawn again.
    The two seed peers are drawn from the substrate's giant component.
    """
    seed = kernel_seed(rng, cfg.seed)
    sub_seed, overlay_seed = np.random.SeedSequence(seed).generate_state(2)
    if substrate is None:
        s_seed = cfg.substrate.seed if cfg.substrate.seed is not None else int(sub_seed)
        substrate, _ = build_substrate(cfg.substrate, s_seed)
    if cfg.n_nodes > substrate.node_count:
        raise ValueError("overlay size exceeds substrate size")
    size, members = giant_component(substrate)
    if size < 2:
        raise GenerationError("substrate has no component with two nodes", achieved=0)
    pool = np.flatnonzero(members).astype(np.int64)
    indptr, indices = substrate.csr()
    src, dst, substrate_of, n_peers = _kernels.dapa_kernel(
        indptr, indices, cfg.n_nodes, cfg.stubs, cfg.cutoff_code, int(cfg.tau_sub), pool, int(overlay_seed)
    )
    if n_peers < cfg.n_nodes:
        raise GenerationError(
            f"DAPA candidate pool exhausted after {n_peers} of {cfg.n_nodes} peers", achieved=int(n_peers)
        )
    return DAPAResult(_graph_from_arrays(cfg.n_nodes, src, dst), substrate_of, substrate)


# ---------------------------------------------------------------------------

@dataclass
class Topology:
    graph: Graph
    removed_self_loops: int = 0
    removed_multi_edges: int = 0
    substrate_node_of: np.ndarray | None = None
    extras: dict = field(default_factory=dict)


def generate(cfg: GeneratorConfig, rng=None) -> Topology:
    """Dispatch on ``cfg.model``."""
    if cfg.model is Model.PA:
        return Topology(generate_pa(cfg, rng))
    if cfg.model is Model.HAPA:
        return Topology(generate_hapa(cfg, rng))
    if cfg.model is Model.CM:
        res = generate_cm(cfg, rng)
        return Topology(res.graph, res.removed_self_loops, res.removed_multi_edges)
    res = generate_dapa(cfg, rng)
    return Topology(res.graph, substrate_node_of=res.substrate_node_of)


def write_peer_map(substrate_node_of, dest: str | Path) -> None:
    lines = ["# overlay_id substrate_id"]
    lines += [f"{i} {s}" for i, s in enumerate(np.asarray(substrate_node_of).tolist())]
    Path(dest).write_text("\n".join(lines) + "\n")


def write_coords(coords: np.ndarray, dest: str | Path) -> None:
    lines = ["# id " + " ".join("xyzw"[i] if i < 4 else f"x{i}" for i in range(coords.shape[1]))]
    lines += [f"{i} " + " ".join(repr(float(c)) for c in row) for i, row in enumerate(coords)]
    Path(dest).write_text("\n".join(lines) + "\n")


__all__ = [
    "CMResult", "DAPAResult", "DegreeSequence", "GenerationError", "GeneratorConfig", "GraphError",
    "Model", "SubstrateConfig", "Topology", "build_substrate", "configuration_model", "generate",
    "generate_cm", "generate_dapa", "generate_grn", "generate_hapa", "generate_mesh", "generate_pa",
    "kernel_seed", "preferential_pick", "sample_powerlaw_degree_sequence", "write_coords", "write_peer_map",
]
