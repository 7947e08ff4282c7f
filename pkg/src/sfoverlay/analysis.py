"""Degree statistics: histograms, log binning, exponent fits, cutoff diagnostics."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import optimize, stats

from .graph import Graph


class FitError(ValueError):
    """Too little support in the requested degree range."""


@dataclass
class DegreeHistogram:
    counts: dict[int, int]
    n_nodes: int

    @classmethod
    def from_degrees(cls, degrees) -> "DegreeHistogram":
        degrees = np.asarray(degrees, dtype=np.int64)
        ks, cs = np.unique(degrees, return_counts=True)
        return cls({int(k): int(c) for k, c in zip(ks, cs)}, int(len(degrees)))

    @classmethod
    def pooled(cls, hists: Iterable["DegreeHistogram"]) -> "DegreeHistogram":
        counts: dict[int, int] = {}
        n = 0
        for h in hists:
            n += h.n_nodes
            for k, c in h.counts.items():
                counts[k] = counts.get(k, 0) + c
        return cls(dict(sorted(counts.items())), n)

    @property
    def normalized(self) -> dict[int, float]:
        return {k: c / self.n_nodes for k, c in sorted(self.counts.items())}

    @property
    def degrees(self) -> np.ndarray:
        return np.array(sorted(self.counts), dtype=np.int64)

    def count(self, k: int) -> int:
        return self.counts.get(k, 0)

    @property
    def zero_degree(self) -> int:
        return self.counts.get(0, 0)

    def to_csv(self, dest: str | Path | None = None) -> str:
        lines = ["k,count,pk"]
        lines += [f"{k},{c},{c / self.n_nodes!r}" for k, c in sorted(self.counts.items())]
        text = "\n".join(lines) + "\n"
        if dest is not None:
            Path(dest).write_text(text)
        return text


def degree_histogram(g: Graph) -> DegreeHistogram:
    return DegreeHistogram.from_degrees(g.degrees)


# ---------------------------------------------------------------------------
# log binning

@dataclass
class LogBins:
    """Multiplicative bins over integer degrees.

    ``width`` is the number of integers a bin spans, so a flat P(k) gives
    flat densities and sum(density * width) is the probability mass.
    """

    center: np.ndarray
    density: np.ndarray
    width: np.ndarray
    count: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.center.tolist(), self.density.tolist()))

    def to_csv(self, dest: str | Path | None = None) -> str:
        lines = ["k_center,density"]
        lines += [f"{c!r},{d!r}" for c, d in zip(self.center.tolist(), self.density.tolist())]
        text = "\n".join(lines) + "\n"
        if dest is not None:
            Path(dest).write_text(text)
        return text


def _bin_index(k: np.ndarray, b: int) -> np.ndarray:
    return np.floor(b * np.log10(k) + 1e-9).astype(np.int64)


def _bin_edge_int(j: np.ndarray, b: int) -> np.ndarray:
    # smallest integer in bin j
    return np.ceil(10.0 ** (j / b) * (1 - 1e-12)).astype(np.int64)


def log_bins(h: DegreeHistogram, bins_per_decade: int = 10, k_lo: int = 1, k_hi: int | None = None) -> LogBins:
    """Log-bin degrees in [max(k_lo, 1), k_hi]; empty bins are dropped.

    ``k_hi`` defaults to the largest observed degree, so the top bin's
    width never counts integers past the data.
    """
    if bins_per_decade < 1:
        raise ValueError("bins_per_decade must be >= 1")
    k_lo = max(int(k_lo), 1)
    if k_hi is None and h.counts:
        k_hi = max(k for k, c in h.counts.items() if c > 0)
    ks = np.array([k for k in sorted(h.counts) if k >= k_lo and (k_hi is None or k <= k_hi)], dtype=np.int64)
    if len(ks) == 0:
        empty = np.zeros(0)
        return LogBins(empty, empty, empty, empty, empty, empty)
    cs = np.array([h.counts[k] for k in ks], dtype=np.int64)
    idx = _bin_index(ks.astype(float), bins_per_decade)
    bins, inv = np.unique(idx, return_inverse=True)
    count = np.bincount(inv, weights=cs).astype(np.int64)
    lo = _bin_edge_int(bins, bins_per_decade)
    hi = _bin_edge_int(bins + 1, bins_per_decade) - 1
    lo = np.maximum(lo, k_lo)
    if k_hi is not None:
        hi = np.minimum(hi, k_hi)
    width = (hi - lo + 1).astype(float)
    center = np.sqrt(lo * hi.astype(float))
    density = count / (h.n_nodes * width)
    return LogBins(center, density, width, count, lo, hi)


def log_bin_histogram(h: DegreeHistogram, bins_per_decade: int = 10) -> list[tuple[float, float]]:
    """(bin center, density) pairs; degree 0 is excluded (see ``DegreeHistogram.zero_degree``)."""
    return log_bins(h, bins_per_decade).pairs()


# ---------------------------------------------------------------------------
# exponent fits

@dataclass
class ExponentFit:
    gamma_hat: float
    stderr: float
    fit_range: tuple[int, int]
    r_squared: float
    method: str
    log10_amplitude: float  # P(k) ~ 10**log10_amplitude * k**-gamma_hat

    def predict(self, k) -> np.ndarray:
        return 10.0 ** self.log10_amplitude * np.asarray(k, dtype=float) ** (-self.gamma_hat)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fit_range"] = list(self.fit_range)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _r_squared(y: np.ndarray, yhat: np.ndarray) -> float:
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0:
        return 1.0 if float(((y - yhat) ** 2).sum()) == 0 else 0.0
    return 1.0 - float(((y - yhat) ** 2).sum()) / ss_tot


def _support(h: DegreeHistogram, k_lo: int, k_hi: int) -> np.ndarray:
    ks = np.array([k for k in h.counts if k_lo <= k <= k_hi and k > 0 and h.counts[k] > 0], dtype=np.int64)
    if len(ks) < 3:
        raise FitError(f"need >= 3 distinct degrees in [{k_lo}, {k_hi}], found {len(ks)}")
    return np.sort(ks)


def fit_powerlaw_exponent(
    h: DegreeHistogram,
    k_lo: int,
    k_hi: int,
    method: str = "log_binned_ls",
    bins_per_decade: int = 10,
) -> ExponentFit:
    """Estimate gamma in P(k) ~ k^-gamma over degrees k_lo..k_hi (inclusive).

    ``log_binned_ls`` regresses log density on log k over log bins;
    ``truncated_mle`` maximizes the likelihood of the discrete power law
    restricted to the range, with stderr from the observed information.
    """
    if k_lo >= k_hi:
        raise FitError("k_lo must be < k_hi")
    _support(h, k_lo, k_hi)
    bins = log_bins(h, bins_per_decade, k_lo, k_hi)
    x = np.log10(bins.center)
    y = np.log10(bins.density)
    if method == "log_binned_ls":
        if len(x) < 2:
            raise FitError("fewer than two nonempty bins in range")
        res = stats.linregress(x, y)
        stderr = float(res.stderr) if len(x) > 2 else math.inf
        return ExponentFit(
            gamma_hat=float(-res.slope),
            stderr=stderr,
            fit_range=(int(k_lo), int(k_hi)),
            r_squared=float(res.rvalue**2),
            method=method,
            log10_amplitude=float(res.intercept),
        )
    if method == "truncated_mle":
        return _truncated_mle(h, k_lo, k_hi, x, y)
    raise ValueError(f"unknown fit method {method!r}")


def _truncated_mle(h, k_lo, k_hi, bx, by) -> ExponentFit:
    kk = np.arange(k_lo, k_hi + 1, dtype=float)
    logk = np.log(kk)
    ks = np.array([k for k in h.counts if k_lo <= k <= k_hi], dtype=np.int64)
    cs = np.array([h.counts[k] for k in ks], dtype=float)
    n = cs.sum()
    mean_log = float((cs * np.log(ks)).sum() / n)

    def moments(g):
        w = -g * logk
        w = np.exp(w - w.max())
        p = w / w.sum()
        m1 = float((p * logk).sum())
        return m1, float((p * logk**2).sum()) - m1 * m1

    def score(g):
        return moments(g)[0] - mean_log

    lo, hi = -20.0, 20.0
    if score(lo) < 0 or score(hi) > 0:
        raise FitError("MLE exponent outside [-20, 20]")
    g = optimize.brentq(score, lo, hi, xtol=1e-12)
    var = moments(g)[1]
    stderr = 1.0 / math.sqrt(n * var) if var > 0 else math.inf
    z = float(np.exp(-g * logk).sum())
    mass = n / h.n_nodes
    amp = math.log10(mass / z)
    r2 = _r_squared(by, amp - g * bx) if len(bx) else 0.0
    return ExponentFit(float(g), stderr, (int(k_lo), int(k_hi)), r2, "truncated_mle", amp)


def default_fit_range(h: DegreeHistogram, m: int = 1, k_c: int | None = None) -> tuple[int, int]:
    """[max(m, 2), k_c - 1] with a cutoff, else [max(m, 2), ceil(k_max / 3) - 1]."""
    lo = max(int(m), 2)
    if k_c is not None:
        return lo, int(k_c) - 1
    return lo, max(int(math.ceil(measure_natural_cutoff(h) / 3)) - 1, lo + 1)


# ---------------------------------------------------------------------------
# cutoffs

def measure_natural_cutoff(h: DegreeHistogram) -> int:
    if h.n_nodes < 1:
        raise ValueError("empty histogram")
    return max(k for k, c in h.counts.items() if c > 0)


def natural_cutoff_scaling(n: float, m: float, gamma: float) -> float:
    """m * N^(1/(gamma-1)): degree above which at most one node is expected."""
    return m * n ** (1.0 / (gamma - 1.0))


def single_point_cutoff_scaling(n: float, gamma: float) -> float:
    """N^(1/gamma): from N * P(k_nc) ~ 1 with P(k) ~ k^-gamma (prefactor-free)."""
    return n ** (1.0 / gamma)


@dataclass
class SpikeReport:
    observed: float
    extrapolated: float
    excess_ratio: float


def cutoff_spike_fraction(h: DegreeHistogram, k_c: int, fit: ExponentFit) -> SpikeReport:
    """Compare P(k_c) with the power law fitted below the cutoff."""
    extrapolated = float(fit.predict(k_c))
    observed = h.count(k_c) / h.n_nodes if h.n_nodes else 0.0
    if observed == 0.0:
        return SpikeReport(0.0, extrapolated, 0.0)
    return SpikeReport(observed, extrapolated, observed / extrapolated)


# ---------------------------------------------------------------------------
# shape

@dataclass
class Classification:
    kind: str  # "power_law" | "exponential" | "ambiguous"
    r2_power: float
    r2_exponential: float


def classify_distribution(
    h: DegreeHistogram, k_lo: int, k_hi: int, bins_per_decade: int = 10, margin: float = 0.05
) -> Classification:
    """Pick power law vs exponential by r^2 of straight-line fits to log-binned data."""
    ks = [k for k in h.counts if k_lo <= k <= k_hi and k > 0 and h.counts[k] > 0]
    if len(ks) < 5:
        raise FitError(f"need >= 5 distinct degrees in [{k_lo}, {k_hi}], found {len(ks)}")
    bins = log_bins(h, bins_per_decade, k_lo, k_hi)
    y = np.log10(bins.density)
    r2 = []
    for x in (np.log10(bins.center), bins.center):
        slope, intercept = np.polyfit(x, y, 1)
        r2.append(_r_squared(y, intercept + slope * x))
    r2_pow, r2_exp = r2
    if r2_pow >= r2_exp + margin:
        kind = "power_law"
    elif r2_exp >= r2_pow + margin:
        kind = "exponential"
    else:
        kind = "ambiguous"
    return Classification(kind, float(r2_pow), float(r2_exp))
