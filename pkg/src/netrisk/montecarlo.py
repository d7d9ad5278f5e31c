"""Monte Carlo oracle: sample graphs and Pareto claims, estimate tails empirically.

Replicates are generated in fixed-size blocks.  Block ``b`` draws from its own
generator seeded by ``(seed, b)``, so every estimate is a deterministic
function of ``(scenario, seed, replicates)`` regardless of how many worker
threads process the blocks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .laws import poisson_binomial_pmf
from .model import Dependence, MarketScenario, require_valid

BLOCK = 1 << 16


# ---------------------------------------------------------------------------
# configuration and targets
# ---------------------------------------------------------------------------


def default_thresholds(s: MarketScenario, points: int = 5) -> tuple:
    """Geometric grid over ``[10 c, 1000 c]`` with ``c = max_j K_j^(1/alpha)``."""
    c = float(np.max(s.claims.root_scales))
    return tuple(float(x) for x in np.geomspace(10.0 * c, 1000.0 * c, points))


@dataclass(frozen=True)
class SimConfig:
    replicates: int = 1_000_000
    seed: int = 0
    thresholds: tuple | None = None   # None: default_thresholds(scenario)
    confidence: float = 0.99
    block: int = BLOCK
    workers: int | None = None        # None: RISK_ENGINE_THREADS or 1

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        if self.block < 1:
            raise ValueError("block size must be positive")
        if self.thresholds is not None:
            t = np.asarray(self.thresholds, dtype=float)
            if t.ndim != 1 or t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
                raise ValueError("thresholds must be positive and strictly increasing")

    def thresholds_for(self, s: MarketScenario) -> np.ndarray:
        return np.asarray(self.thresholds if self.thresholds is not None else default_thresholds(s))

    @property
    def z(self) -> float:
        return float(stats.norm.ppf(0.5 + self.confidence / 2.0))


@dataclass(frozen=True)
class Agent:
    i: int


@dataclass(frozen=True)
class Aggregate:
    r: float | None = None   # None: the scenario's own norm


@dataclass(frozen=True)
class Uninsured:
    pass


@dataclass(frozen=True)
class Sample:
    """One block of replicates: exposures ``F (n, q)``, claims ``V (n, d)``, weights ``A (n, q, d)``."""

    F: np.ndarray
    V: np.ndarray
    A: np.ndarray


def _workers(cfg: SimConfig) -> int:
    if cfg.workers is not None:
        return max(1, int(cfg.workers))
    env = os.environ.get("RISK_ENGINE_THREADS")
    return max(1, int(env)) if env else 1


def _block_sizes(cfg: SimConfig):
    full, rest = divmod(cfg.replicates, cfg.block)
    return [cfg.block] * full + ([rest] if rest else [])


def _block_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


def _draw(s: MarketScenario, n: int, rng: np.random.Generator) -> Sample:
    ind = (rng.random((n, s.q, s.d)) < s.P).astype(float)
    A = s.weight_matrix(ind)
    # 1 - U lies in (0, 1], so Z = (1 - U)^(-1/alpha) is standard Pareto on [1, inf).
    if s.dependence is Dependence.DEPENDENT:
        z = (1.0 - rng.random((n, 1))) ** (-1.0 / s.alpha)
    else:
        z = (1.0 - rng.random((n, s.d))) ** (-1.0 / s.alpha)
    V = s.claims.root_scales * z
    F = np.einsum("nij,nj->ni", A, V)
    return Sample(F, V, A)


def sample_exposures(s: MarketScenario, cfg: SimConfig):
    """Stream of sample blocks in block order."""
    require_valid(s)
    for b, n in enumerate(_block_sizes(cfg)):
        yield _draw(s, n, _block_rng(cfg.seed, b))


def _map_blocks(s: MarketScenario, cfg: SimConfig, fn):
    """``[fn(block_sample) for each block]`` in block order, possibly threaded."""
    require_valid(s)
    sizes = _block_sizes(cfg)

    def work(b):
        return fn(_draw(s, sizes[b], _block_rng(cfg.seed, b)))

    w = _workers(cfg)
    if w == 1:
        return [work(b) for b in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(work, range(len(sizes))))


def target_values(target, s: MarketScenario, sample: Sample) -> np.ndarray:
    if isinstance(target, Agent):
        if not 0 <= target.i < s.q:
            raise IndexError(f"agent index {target.i} out of range")
        return sample.F[:, target.i]
    if isinstance(target, Aggregate):
        norm = s.norm if target.r is None else s.with_norm(target.r).norm
        return norm(sample.F)
    if isinstance(target, Uninsured):
        share = np.clip(1.0 - sample.A.sum(axis=1), 0.0, None)
        return (share * sample.V).sum(axis=1)
    raise TypeError(f"unknown target {target!r}")


# ---------------------------------------------------------------------------
# tail constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailEstimate:
    threshold: float
    point: float           # t^alpha * empirical P(X > t)
    half_width: float      # normal-approximation CI half-width on the same scale
    n_exceed: int
    zero_count: bool = False   # half_width is then a one-sided Clopper-Pearson bound
    authoritative: bool = True  # False below the Pareto exactness region

    def covers(self, value: float) -> bool:
        if self.zero_count:
            return 0.0 <= value <= self.half_width
        return abs(self.point - value) <= self.half_width


@dataclass(frozen=True)
class TailCurve:
    estimates: tuple
    replicates: int

    def __iter__(self):
        return iter(self.estimates)

    def __len__(self):
        return len(self.estimates)

    def __getitem__(self, k):
        return self.estimates[k]

    @property
    def plateau(self) -> TailEstimate:
        return self.estimates[-1]

    @property
    def converged(self) -> bool:
        """Do the two largest thresholds agree within their combined half-widths?"""
        if len(self.estimates) < 2:
            return True
        a, b = self.estimates[-2], self.estimates[-1]
        return abs(a.point - b.point) <= a.half_width + b.half_width


def _estimate(t, count, n, alpha, cfg, floor):
    scale = t ** alpha
    if count == 0:
        upper = 1.0 - (1.0 - cfg.confidence) ** (1.0 / n)
        return TailEstimate(t, 0.0, scale * upper, 0, True, t >= floor)
    p = count / n
    half = cfg.z * math.sqrt(p * (1.0 - p) / n) + 0.5 / n
    return TailEstimate(t, scale * p, scale * half, count, False, t >= floor)


def empirical_tail_constants(targets, s: MarketScenario, cfg: SimConfig) -> list[TailCurve]:
    """One pass over the replicates, one :class:`TailCurve` per target."""
    targets = list(targets)
    t = cfg.thresholds_for(s)

    def fn(sample):
        return np.array([[np.count_nonzero(target_values(g, s, sample) > x) for x in t]
                         for g in targets], dtype=np.int64)

    counts = np.sum(_map_blocks(s, cfg, fn), axis=0)
    floor = float(np.max(s.claims.root_scales))
    n = cfg.replicates
    return [TailCurve(tuple(_estimate(float(x), int(c), n, s.alpha, cfg, floor) for x, c in zip(t, row)), n)
            for row in counts]


def empirical_tail_constant(target, s: MarketScenario, cfg: SimConfig) -> TailCurve:
    return empirical_tail_constants([target], s, cfg)[0]


# ---------------------------------------------------------------------------
# VaR / CoTE
# ---------------------------------------------------------------------------


class InsufficientTailError(ValueError):
    pass


def _top_values(target, s, cfg, m):
    def fn(sample):
        x = target_values(target, s, sample)
        if x.size <= m:
            return x.copy()
        return np.partition(x, x.size - m)[x.size - m:]

    top = np.concatenate(_map_blocks(s, cfg, fn))
    return np.sort(top)[-m:]


def empirical_var_cote(target, s: MarketScenario, cfg: SimConfig, gamma: float):
    """``(VaR, CoTE)`` at level ``1 - gamma`` from one pass; CoTE is ``nan`` when ``alpha <= 1``."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    n = cfg.replicates
    if n * gamma < 20:
        raise InsufficientTailError(f"N*gamma = {n * gamma:g} < 20 samples beyond the quantile")
    rank = math.ceil(n * (1.0 - gamma))   # 1-based order statistic
    m = n - rank + 1
    top = _top_values(target, s, cfg, m)
    var = float(top[0])
    above = top[top > var]
    cote = float(np.mean(above)) if s.alpha > 1 and above.size else math.nan
    return var, cote


def empirical_var(target, s: MarketScenario, cfg: SimConfig, gamma: float) -> float:
    return empirical_var_cote(target, s, cfg, gamma)[0]


def empirical_cote(target, s: MarketScenario, cfg: SimConfig, gamma: float) -> float:
    if not s.alpha > 1:
        raise ValueError(f"CoTE needs alpha > 1, got {s.alpha}")
    if cfg.replicates * gamma < 50:
        raise InsufficientTailError("CoTE needs N*gamma >= 50")
    var, cote = empirical_var_cote(target, s, cfg, gamma)
    return var if math.isnan(cote) else cote


# ---------------------------------------------------------------------------
# uninsured-object counts and spectral directions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class UninsuredCount:
    pmf: np.ndarray          # empirical pmf over 0..d
    lam: float
    tv_to_poisson: float     # empirical pmf vs Pois(lam)
    tv_bound: float          # min(1, 1/lam) sum pi_j^2
    noise_radius: float      # rough one-sigma MC noise on the TV distance


def count_uninsured(s: MarketScenario, cfg: SimConfig) -> UninsuredCount:
    """Empirical law of the number of objects without an insurer."""
    require_valid(s)
    d = s.d
    sizes = _block_sizes(cfg)

    def work(b):
        # Same first draw as ``_draw``, so the graphs match the exposure stream.
        ind = _block_rng(cfg.seed, b).random((sizes[b], s.q, d)) < s.P
        return np.bincount((~ind.any(axis=1)).sum(axis=1), minlength=d + 1)

    counts = np.sum([work(b) for b in range(len(sizes))], axis=0)
    pmf = counts / cfg.replicates
    pi = np.prod(1.0 - s.P, axis=0)
    lam = math.fsum(pi)
    k = np.arange(d + 1)
    pois = stats.poisson.pmf(k, lam) if lam > 0 else (k == 0).astype(float)
    tv = 0.5 * (math.fsum(np.abs(pmf - pois)) + max(0.0, 1.0 - math.fsum(pois)))
    bound = min(1.0, 1.0 / lam) * math.fsum(pi ** 2) if lam > 0 else 0.0
    exact_pmf = poisson_binomial_pmf(pi)
    noise = 0.5 * math.fsum(np.sqrt(exact_pmf * (1.0 - exact_pmf) / cfg.replicates))
    return UninsuredCount(pmf, lam, tv, bound, noise)


@dataclass(frozen=True, eq=False)
class AngularHistogram:
    atoms: np.ndarray        # (m, q) reference directions
    counts: np.ndarray       # samples closest to each atom
    n_exceed: int
    threshold: float

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / max(self.n_exceed, 1)

    def sigma(self, masses) -> np.ndarray:
        m = np.asarray(masses, dtype=float)
        return np.sqrt(m * (1.0 - m) / max(self.n_exceed, 1))


def angular_histogram(s: MarketScenario, cfg: SimConfig, atoms, threshold: float | None = None) -> AngularHistogram:
    """Assign ``F/||F||`` given ``||F|| > t`` to the nearest reference atom."""
    atoms = np.asarray(atoms, dtype=float)
    t = float(cfg.thresholds_for(s)[-1] if threshold is None else threshold)

    def fn(sample):
        nrm = s.norm(sample.F)
        hit = nrm > t
        if not np.any(hit):
            return np.zeros(len(atoms), dtype=np.int64)
        dirs = sample.F[hit] / nrm[hit, None]
        dist = ((dirs[:, None, :] - atoms[None, :, :]) ** 2).sum(axis=2)
        return np.bincount(dist.argmin(axis=1), minlength=len(atoms))

    counts = np.sum(_map_blocks(s, cfg, fn), axis=0)
    return AngularHistogram(atoms, counts, int(counts.sum()), t)
