"""Flooding (FL), normalized flooding (NF) and random-walk (RW) search.

Conventions:

* ``hits`` counts distinct nodes reached, never the source.
* FL/NF ``messages`` counts every send, including duplicates that arrive
  at an already-reached node (those are not forwarded again).
* Floods advance in synchronous hop levels; a node that first receives a
  copy at hop h forwards it at hop h if h < ttl.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .generators import kernel_seed
from .graph import Graph, GraphError


class Algorithm(str, enum.Enum):
    FL = "FL"
    NF = "NF"
    RW = "RW"


@dataclass(frozen=True)
class SearchConfig:
    algorithm: Algorithm
    ttl: int
    source: int = 0
    k_min: int | None = None
    rng_seed: int | None = None
    target: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.ttl < 0:
            raise ValueError("ttl must be >= 0")
        if self.algorithm is Algorithm.NF and (self.k_min is None or self.k_min < 1):
            raise ValueError("NF needs k_min >= 1")


@dataclass(frozen=True)
class SearchOutcome:
    hits: int
    messages: int
    ttl_used: int
    source: int
    delivery_hops: int | None = None


def _scratch(n: int) -> np.ndarray:
    return np.full(n, -1, dtype=np.int64)


def _target_code(g: Graph, target) -> int:
    if target is None:
        return -1
    g._check(target)
    return int(target)


def _flood(g: Graph, cfg: SearchConfig, k_min: int) -> SearchOutcome:
    g._check(cfg.source)
    indptr, indices = g.csr()
    new_hits, sent, delivered = _kernels.flood_kernel(
        indptr, indices, cfg.source, cfg.ttl, k_min, _target_code(g, cfg.target),
        _scratch(g.node_count), kernel_seed(cfg.rng_seed, 0),
    )
    return SearchOutcome(
        hits=int(new_hits.sum()),
        messages=int(sent.sum()),
        ttl_used=cfg.ttl,
        source=cfg.source,
        delivery_hops=None if delivered < 0 else int(delivered),
    )


def flood_search(g: Graph, cfg: SearchConfig) -> SearchOutcome:
    """Every node forwards its first copy to all neighbors but the sender, up to ``ttl`` hops."""
    return _flood(g, cfg, 0)


def normalized_flood_search(g: Graph, cfg: SearchConfig) -> SearchOutcome:
    """Flooding with fan-out capped at ``k_min`` randomly chosen neighbors.

    The source sends to min(degree, k_min) neighbors.  A node of degree
    at most k_min forwards to all neighbors except the sender; a larger
    node picks k_min of its other neighbors uniformly.
    """
    if cfg.k_min is None or cfg.k_min < 1:
        raise ValueError("normalized flooding needs k_min >= 1")
    return _flood(g, cfg, int(cfg.k_min))


def random_walk_search(g: Graph, cfg: SearchConfig) -> SearchOutcome:
    """Single walker taking ``ttl`` steps without immediate backtracking.

    At a dead end the walker steps back.  The walk stops early only when
    it reaches ``target``.
    """
    g._check(cfg.source)
    if g.degree(cfg.source) == 0:
        raise GraphError(f"random walk from isolated node {cfg.source}")
    indptr, indices = g.csr()
    distinct, taken, delivered = _kernels.walk_kernel(
        indptr, indices, cfg.source, cfg.ttl, _target_code(g, cfg.target),
        _scratch(g.node_count), kernel_seed(cfg.rng_seed, 0),
    )
    return SearchOutcome(
        hits=int(distinct[taken]),
        messages=int(taken),
        ttl_used=cfg.ttl,
        source=cfg.source,
        delivery_hops=None if delivered < 0 else int(delivered),
    )


def run_search(g: Graph, cfg: SearchConfig) -> SearchOutcome:
    if cfg.algorithm is Algorithm.FL:
        return flood_search(g, cfg)
    if cfg.algorithm is Algorithm.NF:
        return normalized_flood_search(g, cfg)
    return random_walk_search(g, cfg)


def normalized_rw_budget(nf_outcome: SearchOutcome) -> int:
    """Walk length that matches the messages spent by an NF search."""
    return int(nf_outcome.messages)


# ---------------------------------------------------------------------------
# curves

@dataclass
class SearchCurve:
    """Per-source samples for a list of TTLs.

    ``hits`` and ``messages`` have shape (len(ttls), n_sources).
    """

    algorithm: str
    ttls: np.ndarray
    sources: np.ndarray
    hits: np.ndarray
    messages: np.ndarray

    @property
    def mean_hits(self) -> np.ndarray:
        return self.hits.mean(axis=1)

    @property
    def mean_messages(self) -> np.ndarray:
        return self.messages.mean(axis=1)

    @property
    def stderr_hits(self) -> np.ndarray:
        return _stderr(self.hits)

    @property
    def stderr_messages(self) -> np.ndarray:
        return _stderr(self.messages)

    def rows(self) -> list[tuple[int, float, float, float, float]]:
        return [
            (int(t), float(a), float(b), float(c), float(d))
            for t, a, b, c, d in zip(
                self.ttls, self.mean_hits, self.stderr_hits, self.mean_messages, self.stderr_messages
            )
        ]

    def to_csv(self, dest: str | Path | None = None) -> str:
        text = curve_csv(self.rows())
        if dest is not None:
            Path(dest).write_text(text)
        return text


CURVE_HEADER = "tau,mean_hits,stderr_hits,mean_messages,stderr_messages"


def curve_csv(rows) -> str:
    lines = [CURVE_HEADER]
    lines += [f"{t},{a!r},{b!r},{c!r},{d!r}" for t, a, b, c, d in rows]
    return "\n".join(lines) + "\n"


def _stderr(samples: np.ndarray) -> np.ndarray:
    n = samples.shape[1]
    if n < 2:
        return np.zeros(samples.shape[0])
    return samples.std(axis=1, ddof=1) / np.sqrt(n)


def sample_sources(g: Graph, n_sources: int, rng) -> np.ndarray:
    """Uniform sources without replacement (with replacement once n_sources > N)."""
    n = g.node_count
    if n_sources <= n:
        return rng.choice(n, size=n_sources, replace=False).astype(np.int64)
    return rng.integers(n, size=n_sources).astype(np.int64)


def measure_search_curve(
    g: Graph,
    algorithm,
    ttl_range,
    n_sources: int,
    k_min: int | None = None,
    rng_seed=None,
    fair: bool = True,
    sources=None,
) -> SearchCurve:
    """Hits and messages per TTL, averaged over sampled sources.

    Each source gets one run at the largest TTL; smaller TTLs read off its
    prefix, which has the same law as an independent run and makes every
    per-source curve non-decreasing.  For RW with ``fair=True`` (the
    default) the walk length at TTL t is the message count of the same
    source's NF search at TTL t; otherwise it is t itself.
    """
    algorithm = Algorithm(algorithm)
    if n_sources < 1:
        raise ValueError("n_sources must be >= 1")
    ttls = np.array(sorted(set(int(t) for t in ttl_range)), dtype=np.int64)
    if len(ttls) == 0 or ttls[0] < 0:
        raise ValueError("ttl_range must be non-empty and non-negative")
    if algorithm is Algorithm.NF or (algorithm is Algorithm.RW and fair):
        if k_min is None or k_min < 1:
            raise ValueError("NF (and budget-normalized RW) need k_min >= 1")
    rng = np.random.default_rng(rng_seed)
    if sources is None:
        sources = sample_sources(g, n_sources, rng)
    sources = np.asarray(sources, dtype=np.int64)
    run_seeds = rng.integers(2**32, size=(len(sources), 2))
    indptr, indices = g.csr()
    scratch = _scratch(g.node_count)
    t_max = int(ttls[-1])
    hits = np.zeros((len(ttls), len(sources)), dtype=np.int64)
    msgs = np.zeros_like(hits)
    for j, s in enumerate(sources.tolist()):
        if algorithm is Algorithm.RW:
            if fair:
                new_hits, sent, _ = _kernels.flood_kernel(
                    indptr, indices, s, t_max, int(k_min), -1, scratch, int(run_seeds[j, 0])
                )
                budgets = np.concatenate([[0], np.cumsum(sent)])[ttls]
            else:
                budgets = ttls
            if indptr[s + 1] == indptr[s]:
                continue  # isolated source: no walk, zero hits
            distinct, taken, _ = _kernels.walk_kernel(
                indptr, indices, s, int(budgets[-1]), -1, scratch, int(run_seeds[j, 1])
            )
            hits[:, j] = distinct[budgets]
            msgs[:, j] = np.minimum(budgets, taken)
        else:
            kmin = 0 if algorithm is Algorithm.FL else int(k_min)
            new_hits, sent, _ = _kernels.flood_kernel(indptr, indices, s, t_max, kmin, -1, scratch, int(run_seeds[j, 0]))
            hits[:, j] = np.cumsum(new_hits)[ttls]
            msgs[:, j] = np.concatenate([[0], np.cumsum(sent)])[ttls]
    return SearchCurve(algorithm.value, ttls, sources, hits, msgs)
