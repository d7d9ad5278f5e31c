"""Exact risk constants, joint-exceedance constants and spectral measures.

Edges are independent across objects, so anything that is a sum over
objects reduces to per-object degree laws, and anything that is a moment of
a sum over objects reduces to a convolution of per-object laws.  Quantities
that couple objects through a nonlinear norm fall back to enumerating every
graph realization, and past that cap to sampling graphs (flagged in
``Constant.method``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .laws import (
    DegreeLaw,
    DiscreteLaw,
    SupportCapExceeded,
    poisson_binomial_pmf,
    sum_moment,
    two_point,
)
from .model import (
    Dependence,
    ExplicitWeights,
    MarketScenario,
    Proportional,
    ScenarioError,
    degree_based,
    require_valid,
)


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    ENUMERATION = "enumeration"
    CONVOLUTION = "convolution"
    MONTE_CARLO = "monte_carlo"


class CapExceeded(RuntimeError):
    """An exact computation would exceed its enumeration or support cap."""


class Constant(float):
    """A float that remembers how it was computed and how far it can be off."""

    def __new__(cls, value, method=Method.CLOSED_FORM, error_radius=0.0):
        obj = super().__new__(cls, value)
        obj.method = Method(method)
        obj.error_radius = float(error_radius)
        return obj

    def __repr__(self):
        tail = f" +- {self.error_radius:.3g}" if self.error_radius else ""
        return f"Constant({float(self)!r}, {self.method.value}{tail})"


@dataclass(frozen=True)
class EngineConfig:
    sphere_cap: int = 20          # max q for 2^q sphere / pattern enumeration
    graph_cap: int = 25           # max random edges for full-graph enumeration
    support_cap: int = 2_000_000  # max convolution support
    allow_monte_carlo: bool = False
    mc_graphs: int = 200_000
    mc_seed: int = 0
    mc_z: float = 2.5758293035489004  # two-sided 99%


DEFAULT = EngineConfig()


# ---------------------------------------------------------------------------
# graph enumeration / sampling
# ---------------------------------------------------------------------------

_CHUNK = 1 << 15


def iter_graphs(s: MarketScenario, cap: int = DEFAULT.graph_cap):
    """Yield ``(prob, indicator)`` chunks covering every graph realization.

    Only edges with ``0 < p < 1`` are enumerated; certain edges are fixed.
    """
    P = s.P
    q, d = P.shape
    flat = P.ravel()
    rand = np.flatnonzero((flat > 0) & (flat < 1))
    m = rand.size
    if m > cap:
        raise CapExceeded(f"{m} random edges exceed the full-graph enumeration cap of {cap}")
    fixed = (flat == 1.0).astype(float)
    pr = flat[rand]
    shifts = np.arange(m, dtype=np.int64)
    total = 1 << m
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        bits = ((codes[:, None] >> shifts) & 1).astype(bool)
        ind = np.repeat(fixed[None, :], codes.size, axis=0)
        ind[:, rand] = bits
        prob = np.where(bits, pr, 1.0 - pr).prod(axis=1)
        yield prob, ind.reshape(-1, q, d)


def sample_graphs(s: MarketScenario, n: int, rng) -> np.ndarray:
    """``n`` independent edge-indicator matrices, shape ``(n, q, d)``."""
    return (rng.random((n,) + s.P.shape) < s.P).astype(float)


def graph_expectation(s: MarketScenario, stat, config: EngineConfig = DEFAULT) -> Constant:
    """``E stat(A)`` over the random graph; ``stat`` maps ``(n, q, d)`` weighted matrices to ``(n,)``."""
    try:
        parts = [math.fsum(prob * stat(s.weight_matrix(ind)))
                 for prob, ind in iter_graphs(s, config.graph_cap)]
        return Constant(math.fsum(parts), Method.ENUMERATION)
    except CapExceeded:
        if not config.allow_monte_carlo:
            raise
    return _graph_monte_carlo(s, stat, config)


def _graph_monte_carlo(s, stat, config):
    rng = np.random.default_rng(config.mc_seed)
    vals = []
    left = config.mc_graphs
    while left > 0:
        n = min(left, _CHUNK)
        vals.append(stat(s.weight_matrix(sample_graphs(s, n, rng))))
        left -= n
    v = np.concatenate(vals)
    half = config.mc_z * v.std(ddof=1) / math.sqrt(v.size) if v.size > 1 else math.inf
    return Constant(v.mean(), Method.MONTE_CARLO, half)


def _pow(x, a):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, np.abs(x) ** a, 0.0)


# ---------------------------------------------------------------------------
# per-object laws
# ---------------------------------------------------------------------------


def _check_agent(s, i):
    if not 0 <= i < s.q:
        raise IndexError(f"agent index {i} out of range for {s.q} agents")


def _column_patterns(s, j, cap):
    """All ``(prob, b)`` agent patterns of object ``j`` with positive probability."""
    p = s.P[:, j]
    rand = np.flatnonzero((p > 0) & (p < 1))
    if rand.size > cap:
        raise CapExceeded(f"object {j} has {rand.size} uncertain insurers; "
                          f"pattern enumeration cap is {cap}, use Monte Carlo")
    base = (p == 1.0).astype(float)
    codes = np.arange(1 << rand.size, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(rand.size)) & 1).astype(bool)
    b = np.repeat(base[None, :], codes.size, axis=0)
    b[:, rand] = bits
    prob = np.where(bits, p[rand], 1.0 - p[rand]).prod(axis=1)
    return prob, b


def insured_fraction_law(s: MarketScenario, j: int, config: EngineConfig = DEFAULT) -> DiscreteLaw:
    """Law of ``sum_i A_ij``, the share of claim ``j`` carried by the market."""
    if degree_based(s.weights):
        pmf = DegreeLaw.of(s.P[:, j]).pmf
        deg = np.arange(pmf.size)
        return DiscreteLaw.from_atoms(deg * s.weights.factor(deg), pmf)
    prob, b = _column_patterns(s, j, config.sphere_cap)
    return DiscreteLaw.from_atoms(b @ s.weights.W[:, j], prob)


def _uninsured_fraction_law(s, j, config):
    law = insured_fraction_law(s, j, config)
    if law.values[-1] > 1.0 + 1e-12:
        raise ScenarioError(f"weights insure more than the full claim of object {j} "
                            f"(insured share up to {law.values[-1]:.6g})")
    return DiscreteLaw.from_atoms(np.clip(1.0 - law.values, 0.0, None), law.probs)


def _agent_term_law(s, i, j):
    """Law of ``A_ij`` for a degree-based weight scheme."""
    p = s.P[i, j]
    if isinstance(s.weights, ExplicitWeights):
        return two_point(s.weights.W[i, j], p)
    pmf = DegreeLaw.of(s.P[:, j]).excluding([i])
    w = s.weights.factor(np.arange(1, pmf.size + 1))
    return DiscreteLaw.from_atoms(np.concatenate([[0.0], w]),
                                  np.concatenate([[1.0 - p], p * pmf]))


# ---------------------------------------------------------------------------
# individual constants
# ---------------------------------------------------------------------------


def individual_constant_ind(s: MarketScenario, i: int) -> Constant:
    """``sum_j K_j E A_ij^alpha``."""
    require_valid(s)
    _check_agent(s, i)
    a, K, P = s.alpha, s.K, s.P
    if isinstance(s.weights, ExplicitWeights):
        terms = K * _pow(s.weights.W[i], a) * P[i]
        return Constant(math.fsum(terms))
    terms = []
    for j in range(s.d):
        if P[i, j] == 0:
            continue
        pmf = DegreeLaw.of(P[:, j]).excluding([i])
        w = s.weights.factor(np.arange(1, pmf.size + 1))
        terms.append(K[j] * P[i, j] * math.fsum(pmf * _pow(w, a)))
    return Constant(math.fsum(terms))


def individual_constant_dep(s: MarketScenario, i: int, config: EngineConfig = DEFAULT) -> Constant:
    """``E (A K^(1/alpha) 1)_i^alpha`` by convolving the independent per-object terms."""
    require_valid(s)
    _check_agent(s, i)
    c = s.claims.root_scales
    laws = [_agent_term_law(s, i, j).scaled(c[j]) for j in range(s.d) if s.P[i, j] > 0]
    try:
        value = sum_moment(laws, s.alpha, config.support_cap)
    except SupportCapExceeded:
        if not config.allow_monte_carlo:
            raise CapExceeded(f"convolution support for agent {i} exceeds {config.support_cap}")
        return _graph_monte_carlo(s, lambda A: _pow(A[:, i, :] @ c, s.alpha), config)
    return Constant(value, Method.CONVOLUTION)


# ---------------------------------------------------------------------------
# systemic constants
# ---------------------------------------------------------------------------


def systemic_constant_ind(s: MarketScenario, config: EngineConfig = DEFAULT) -> Constant:
    """``sum_j K_j E ||A e_j||^alpha``."""
    require_valid(s)
    a, K, P = s.alpha, s.K, s.P
    if isinstance(s.weights, Proportional) and s.norm.r == 1.0:
        return Constant(math.fsum(K[j] * DegreeLaw.of(P[:, j]).prob_insured() for j in range(s.d)))
    terms = []
    if degree_based(s.weights):
        for j in range(s.d):
            pmf = DegreeLaw.of(P[:, j]).pmf
            deg = np.arange(pmf.size)
            col_norm = s.weights.factor(deg) * s.norm.ones_norm(deg)
            terms.append(K[j] * math.fsum(pmf * _pow(col_norm, a)))
        return Constant(math.fsum(terms))
    W = s.weights.W
    for j in range(s.d):
        prob, b = _column_patterns(s, j, config.sphere_cap)
        terms.append(K[j] * math.fsum(prob * _pow(s.norm(b * W[:, j]), a)))
    return Constant(math.fsum(terms), Method.ENUMERATION)


def systemic_constant_dep(s: MarketScenario, config: EngineConfig = DEFAULT) -> Constant:
    """``E ||A K^(1/alpha) 1||^alpha``."""
    require_valid(s)
    a = s.alpha
    c = s.claims.root_scales
    if s.norm.r == 1.0:
        if isinstance(s.weights, Proportional) and np.all(c == c[0]):
            ins = [DegreeLaw.of(s.P[:, j]).prob_insured() for j in range(s.d)]
            pmf = poisson_binomial_pmf(ins)
            return Constant(c[0] ** a * math.fsum(pmf * _pow(np.arange(pmf.size), a)))
        laws = [insured_fraction_law(s, j, config).scaled(c[j]) for j in range(s.d)]
        try:
            return Constant(sum_moment(laws, a, config.support_cap), Method.CONVOLUTION)
        except SupportCapExceeded:
            pass
    return graph_expectation(s, lambda A: _pow(s.norm(A @ c), a), config)


def uninsured_constant_ind(s: MarketScenario, config: EngineConfig = DEFAULT) -> Constant:
    """``sum_j K_j E (1 - sum_i A_ij)^alpha``."""
    require_valid(s)
    K = s.K
    if isinstance(s.weights, Proportional):
        return Constant(math.fsum(K[j] * DegreeLaw.of(s.P[:, j]).prob_uninsured() for j in range(s.d)))
    return Constant(math.fsum(K[j] * _uninsured_fraction_law(s, j, config).moment(s.alpha)
                              for j in range(s.d)))


def uninsured_constant_dep(s: MarketScenario, config: EngineConfig = DEFAULT) -> Constant:
    """``E (sum_j K_j^(1/alpha) (1 - sum_i A_ij))^alpha``."""
    require_valid(s)
    c = s.claims.root_scales
    laws = [_uninsured_fraction_law(s, j, config).scaled(c[j]) for j in range(s.d)]
    try:
        return Constant(sum_moment(laws, s.alpha, config.support_cap), Method.CONVOLUTION)
    except SupportCapExceeded:
        def stat(A):
            return _pow((1.0 - A.sum(axis=1)) @ c, s.alpha)
        return graph_expectation(s, stat, config)


# ---------------------------------------------------------------------------
# regime dispatch
# ---------------------------------------------------------------------------


def individual_constant(s, i, config=DEFAULT):
    if s.dependence is Dependence.DEPENDENT:
        return individual_constant_dep(s, i, config)
    return individual_constant_ind(s, i)


def systemic_constant(s, config=DEFAULT):
    if s.dependence is Dependence.DEPENDENT:
        return systemic_constant_dep(s, config)
    return systemic_constant_ind(s, config)


def uninsured_constant(s, config=DEFAULT):
    if s.dependence is Dependence.DEPENDENT:
        return uninsured_constant_dep(s, config)
    return uninsured_constant_ind(s, config)


@dataclass(frozen=True)
class RiskConstants:
    per_agent: tuple
    systemic: float
    uninsured: float | None
    regime: Dependence
    method: Method
    error_radius: float = 0.0
    notes: tuple = field(default=())

    @property
    def total(self) -> float:
        """``C^S + B``."""
        return self.systemic + (self.uninsured or 0.0)


_METHOD_RANK = [Method.CLOSED_FORM, Method.CONVOLUTION, Method.ENUMERATION, Method.MONTE_CARLO]


def risk_constants(s: MarketScenario, regime=None, config: EngineConfig = DEFAULT) -> RiskConstants:
    """Every constant of one dependence regime in a single bundle.

    The uninsured constant is ``None`` when the weight scheme can allocate
    more than a full claim (e.g. compensated weights with ``r > 1``).
    """
    if regime is not None:
        s = s.with_dependence(regime)
    per_agent = [individual_constant(s, i, config) for i in range(s.q)]
    systemic = systemic_constant(s, config)
    notes = []
    try:
        unins = uninsured_constant(s, config)
    except ScenarioError as exc:
        unins = None
        notes.append(str(exc))
    parts = per_agent + [systemic] + ([unins] if unins is not None else [])
    method = max((getattr(x, "method", Method.CLOSED_FORM) for x in parts), key=_METHOD_RANK.index)
    radius = max(getattr(x, "error_radius", 0.0) for x in parts)
    return RiskConstants(tuple(float(x) for x in per_agent), float(systemic),
                         None if unins is None else float(unins), s.dependence, method, radius,
                         tuple(notes))


# ---------------------------------------------------------------------------
# joint exceedances
# ---------------------------------------------------------------------------


def joint_tail_constant(s: MarketScenario, agents, thresholds=None, config: EngineConfig = DEFAULT) -> Constant:
    """Constant ``c`` in ``P(F_i1 > u_1 t, ..., F_ik > u_k t) ~ c t^-alpha``."""
    require_valid(s)
    agents = [int(i) for i in agents]
    if not agents:
        raise ValueError("agent set must not be empty")
    if len(set(agents)) != len(agents):
        raise ValueError("agent indices must be distinct")
    for i in agents:
        _check_agent(s, i)
    u = np.ones(len(agents)) if thresholds is None else np.asarray(thresholds, dtype=float)
    if u.shape != (len(agents),) or np.any(u <= 0):
        raise ValueError("need one positive threshold per agent")
    a = s.alpha
    if s.dependence is Dependence.DEPENDENT:
        c = s.claims.root_scales

        def stat(A):
            x = (A[:, agents, :] @ c) / u
            return _pow(x.min(axis=1), a)
        return graph_expectation(s, stat, config)

    K, P = s.K, s.P
    terms = []
    for j in range(s.d):
        p_all = math.prod(P[agents, j])
        if p_all == 0:
            continue
        if isinstance(s.weights, ExplicitWeights):
            terms.append(K[j] * p_all * _pow(np.min(s.weights.W[agents, j] / u), a))
            continue
        pmf = DegreeLaw.of(P[:, j]).excluding(agents)
        w = s.weights.factor(np.arange(len(agents), len(agents) + pmf.size))
        terms.append(K[j] * p_all * math.fsum(pmf * _pow(w / u.max(), a)))
    return Constant(math.fsum(terms))


# ---------------------------------------------------------------------------
# spectral measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    points: np.ndarray   # (n, q), each on the unit sphere of the scenario norm
    masses: np.ndarray   # (n,)

    @property
    def atoms(self):
        return [(tuple(p), float(m)) for p, m in zip(self.points, self.masses)]

    def total_mass(self) -> float:
        return math.fsum(self.masses)

    def __len__(self):
        return self.masses.size


def spectral_measure_ind(s: MarketScenario, config: EngineConfig = DEFAULT) -> SpectralMeasure:
    """Atoms at normalized 0/1 agent patterns for independent claims.

    A pattern ``b`` gets mass proportional to ``sum_j K_j P(insurers of j = b)``
    times ``||A e_j||^alpha`` on that pattern.
    """
    require_valid(s)
    if not degree_based(s.weights):
        raise ScenarioError("spectral atoms at 0/1 patterns need degree-based weights")
    q = s.q
    if q > config.sphere_cap:
        raise CapExceeded(f"{q} agents exceed the sphere enumeration cap of {config.sphere_cap}")
    cs = systemic_constant_ind(s, config)
    if cs <= 0:
        raise ValueError("no object is ever insured; the spectral measure is undefined")
    codes = np.arange(1, 1 << q, dtype=np.int64)
    b = ((codes[:, None] >> np.arange(q)) & 1).astype(float)
    size = b.sum(axis=1)
    P = s.P
    weight = np.zeros(codes.size)
    for j in range(s.d):
        pj = np.where(b > 0, P[:, j], 1.0 - P[:, j]).prod(axis=1)
        weight += s.K[j] * pj
    col_norm = s.weights.factor(size) * s.norm.ones_norm(size)
    mass = _pow(col_norm, s.alpha) * weight / cs
    keep = mass > 0
    points = b[keep] / s.norm.ones_norm(size[keep])[:, None]
    return SpectralMeasure(points, mass[keep])


def spectral_support_dep(s: MarketScenario, config: EngineConfig = DEFAULT) -> SpectralMeasure:
    """Atoms ``M K^(1/alpha) 1 / ||.||`` over graph realizations ``M``, fully dependent claims."""
    require_valid(s)
    a = s.alpha
    c = s.claims.root_scales
    acc: dict = {}
    rep: dict = {}   # grouping key -> first unrounded point seen
    for prob, ind in iter_graphs(s, config.graph_cap):
        x = s.weight_matrix(ind) @ c
        nrm = s.norm(x)
        keep = (nrm > 0) & (prob > 0)
        if not np.any(keep):
            continue
        pts = x[keep] / nrm[keep, None]
        w = prob[keep] * nrm[keep] ** a
        keys, first, inv = np.unique(np.round(pts, 10), axis=0, return_index=True, return_inverse=True)
        sums = np.zeros(len(keys))
        np.add.at(sums, inv.ravel(), w)
        for k, f, v in zip(map(tuple, keys), first, sums):
            rep.setdefault(k, pts[f])
            acc.setdefault(k, []).append(v)
    if not acc:
        raise ValueError("no graph realization insures any object")
    cs = systemic_constant_dep(s, config)
    keys = sorted(acc)
    points = np.array([rep[k] for k in keys], dtype=float)
    masses = np.array([math.fsum(acc[k]) for k in keys]) / cs
    return SpectralMeasure(points, masses)
