"""Market scenarios: edge-probability families, claims, weights and norms.

Every computation downstream takes a :class:`MarketScenario`.  Constructors
only coerce their inputs; invariants are checked by :func:`validate_scenario`
so that an invalid scenario can still be built and reported on.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Union

import numpy as np


class ScenarioError(ValueError):
    """Raised when a scenario violates an invariant required by an operation."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [Violation("scenario", violations)]
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"

    def to_dict(self):
        return {"path": self.path, "message": self.message}


class Dependence(str, enum.Enum):
    INDEPENDENT = "independent"
    DEPENDENT = "dependent"


# ---------------------------------------------------------------------------
# claims
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClaimSpec:
    """Pareto-tailed claims ``P(V_j > t) ~ K_j t^-alpha``."""

    alpha: float
    scales: tuple
    dependence: Dependence = Dependence.INDEPENDENT

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "scales", tuple(float(k) for k in np.atleast_1d(self.scales)))
        object.__setattr__(self, "dependence", Dependence(self.dependence))

    @property
    def d(self) -> int:
        return len(self.scales)

    @property
    def K(self) -> np.ndarray:
        return np.asarray(self.scales, dtype=float)

    @property
    def root_scales(self) -> np.ndarray:
        """``K_j^(1/alpha)``, the scale of ``V_j`` in claim units."""
        return self.K ** (1.0 / self.alpha)


# ---------------------------------------------------------------------------
# edge models
# ---------------------------------------------------------------------------


def _matrix(x) -> np.ndarray:
    a = np.array(x, dtype=float)
    if a.ndim != 2:
        a = np.atleast_2d(a)
    return a


@dataclass(frozen=True, eq=False)
class ExplicitEdges:
    P: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "P", _matrix(self.P))

    @property
    def shape(self):
        return self.P.shape

    def _raw(self):
        return self.P.copy()


@dataclass(frozen=True, eq=False)
class DeterministicEdges:
    M: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "M", _matrix(self.M))

    @property
    def shape(self):
        return self.M.shape

    def _raw(self):
        return self.M.copy()


@dataclass(frozen=True)
class ToyEdges:
    """Three agents, three objects; ``p_ii = 1`` and off-diagonals ``b``, ``b^2``."""

    b: float

    @property
    def shape(self):
        return (3, 3)

    def _raw(self):
        b = float(self.b)
        return np.array([[1.0, b, b * b], [b * b, 1.0, b], [b, b * b, 1.0]])


@dataclass(frozen=True)
class HomogeneousEdges:
    q: int
    d: int
    p: float

    @property
    def shape(self):
        return (int(self.q), int(self.d))

    def _raw(self):
        return np.full(self.shape, float(self.p))


@dataclass(frozen=True, eq=False)
class RaschEdges:
    """Product form ``p_ij = beta_i * delta_j`` (agent proneness times object appeal)."""

    beta: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "beta", np.atleast_1d(np.array(self.beta, dtype=float)))
        object.__setattr__(self, "delta", np.atleast_1d(np.array(self.delta, dtype=float)))

    @property
    def shape(self):
        return (len(self.beta), len(self.delta))

    def _raw(self):
        return np.outer(self.beta, self.delta)


EdgeModel = Union[ExplicitEdges, DeterministicEdges, ToyEdges, HomogeneousEdges, RaschEdges]


def _edge_violations(model) -> list[Violation]:
    out = []
    q, d = model.shape
    if q < 1 or d < 1:
        out.append(Violation("edges", f"need at least one agent and one object, got {q}x{d}"))
        return out
    if isinstance(model, ToyEdges) and not 0.0 <= model.b <= 1.0:
        out.append(Violation("edges.b", f"b must lie in [0, 1], got {model.b}"))
    if isinstance(model, RaschEdges):
        if np.any(model.beta <= 0) or np.any(model.delta <= 0):
            out.append(Violation("edges", "Rasch beta and delta must be positive"))
        prod = np.outer(model.beta, model.delta)
        for i, j in zip(*np.nonzero(prod > 1.0)):
            out.append(Violation(f"edges[{i}][{j}]",
                                 f"beta_{i}*delta_{j} = {prod[i, j]:.6g} exceeds 1"))
        return out
    raw = model._raw()
    if not np.all(np.isfinite(raw)):
        out.append(Violation("edges", "probabilities must be finite"))
    elif isinstance(model, DeterministicEdges):
        if not np.all((raw == 0.0) | (raw == 1.0)):
            out.append(Violation("edges", "deterministic adjacency must be 0/1"))
    else:
        for i, j in zip(*np.nonzero((raw < 0.0) | (raw > 1.0))):
            out.append(Violation(f"edges[{i}][{j}]", f"p = {raw[i, j]} outside [0, 1]"))
    return out


def materialize_probabilities(model) -> np.ndarray:
    """Full ``q x d`` matrix of edge probabilities for any edge model."""
    bad = _edge_violations(model)
    if bad:
        raise ScenarioError(bad)
    P = model._raw()
    P.setflags(write=False)
    return P


# ---------------------------------------------------------------------------
# weights and norms
# ---------------------------------------------------------------------------


def _r_value(r) -> float:
    if isinstance(r, str):
        r = r.strip().lower()
        if r in ("inf", "infinity", "max"):
            return math.inf
    return float(r)


@dataclass(frozen=True)
class Proportional:
    """``W_ij = 1/deg(j)``: each claim split evenly among its insurers (0/0 := 0)."""

    def factor(self, deg):
        deg = np.asarray(deg, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(deg > 0, 1.0 / np.maximum(deg, 1.0), 0.0)


@dataclass(frozen=True)
class Compensated:
    """``W_ij = deg(j)^(1 - 1/r)``."""

    r: float

    def __post_init__(self):
        object.__setattr__(self, "r", _r_value(self.r))

    def factor(self, deg):
        deg = np.asarray(deg, dtype=float)
        expo = 1.0 if math.isinf(self.r) else 1.0 - 1.0 / self.r
        return np.where(deg > 0, np.maximum(deg, 1.0) ** expo, 0.0)


@dataclass(frozen=True, eq=False)
class ExplicitWeights:
    """A deterministic nonnegative ``q x d`` matrix composed with the edge indicator."""

    W: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "W", _matrix(self.W))


WeightScheme = Union[Proportional, Compensated, ExplicitWeights]


def degree_based(weights) -> bool:
    """True when ``A_ij`` depends on the graph only through ``1(i~j)`` and ``deg(j)``."""
    return isinstance(weights, (Proportional, Compensated))


@dataclass(frozen=True)
class AggregationNorm:
    """The ``r``-(quasi)norm used to aggregate exposures; ``r = inf`` is the max-norm."""

    r: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "r", _r_value(self.r))

    @property
    def is_max(self) -> bool:
        return math.isinf(self.r)

    def __call__(self, x, axis=-1):
        x = np.abs(np.asarray(x, dtype=float))
        if self.is_max:
            return x.max(axis=axis)
        if self.r == 1.0:
            return x.sum(axis=axis)
        return (x ** self.r).sum(axis=axis) ** (1.0 / self.r)

    def ones_norm(self, n):
        """Norm of a vector with ``n`` unit entries: ``n^(1/r)``."""
        n = np.asarray(n, dtype=float)
        if self.is_max:
            return np.where(n > 0, 1.0, 0.0)
        return n ** (1.0 / self.r)


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MarketScenario:
    edges: object
    claims: ClaimSpec
    weights: object = field(default_factory=Proportional)
    norm: AggregationNorm = field(default_factory=AggregationNorm)

    @cached_property
    def P(self) -> np.ndarray:
        return materialize_probabilities(self.edges)

    @property
    def q(self) -> int:
        return self.edges.shape[0]

    @property
    def d(self) -> int:
        return self.edges.shape[1]

    @property
    def alpha(self) -> float:
        return self.claims.alpha

    @property
    def K(self) -> np.ndarray:
        return self.claims.K

    @property
    def dependence(self) -> Dependence:
        return self.claims.dependence

    def with_dependence(self, dependence) -> "MarketScenario":
        return replace(self, claims=replace(self.claims, dependence=Dependence(dependence)))

    def with_alpha(self, alpha) -> "MarketScenario":
        return replace(self, claims=replace(self.claims, alpha=alpha))

    def with_norm(self, r) -> "MarketScenario":
        return replace(self, norm=AggregationNorm(r))

    def weight_matrix(self, indicator) -> np.ndarray:
        """``A = 1(i~j) W_ij`` for one or a stack of 0/1 indicator matrices ``(..., q, d)``."""
        ind = np.asarray(indicator, dtype=float)
        if isinstance(self.weights, ExplicitWeights):
            return ind * self.weights.W
        deg = ind.sum(axis=-2, keepdims=True)
        return ind * self.weights.factor(deg)


def _scenario(edges, alpha, K, dependence, weights, norm):
    d = edges.shape[1]
    claims = ClaimSpec(alpha, np.broadcast_to(np.asarray(K, dtype=float), (d,)), dependence)
    return MarketScenario(edges, claims, weights or Proportional(), norm or AggregationNorm())


def homogeneous(q, d, p, alpha, K=1.0, dependence=Dependence.INDEPENDENT,
                weights=None, norm=None) -> MarketScenario:
    return _scenario(HomogeneousEdges(q, d, p), alpha, K, dependence, weights, norm)


def toy(b, alpha, K=1.0, dependence=Dependence.INDEPENDENT, weights=None, norm=None) -> MarketScenario:
    return _scenario(ToyEdges(b), alpha, K, dependence, weights, norm)


def explicit(P, alpha, K=1.0, dependence=Dependence.INDEPENDENT, weights=None, norm=None) -> MarketScenario:
    return _scenario(ExplicitEdges(P), alpha, K, dependence, weights, norm)


def deterministic(M, alpha, K=1.0, dependence=Dependence.INDEPENDENT, weights=None, norm=None) -> MarketScenario:
    return _scenario(DeterministicEdges(M), alpha, K, dependence, weights, norm)


def rasch(beta, delta, alpha, K=1.0, dependence=Dependence.INDEPENDENT, weights=None, norm=None) -> MarketScenario:
    return _scenario(RaschEdges(beta, delta), alpha, K, dependence, weights, norm)


def validate_scenario(s: MarketScenario) -> list[Violation]:
    """All invariant violations of ``s``; an empty list means the scenario is valid."""
    out: list[Violation] = []
    c = s.claims
    if not (math.isfinite(c.alpha) and c.alpha > 0):
        out.append(Violation("claims.alpha", "alpha must be positive"))
    if c.d < 1:
        out.append(Violation("claims.scales", "need at least one claim scale"))
    for j, k in enumerate(c.scales):
        if not (math.isfinite(k) and k > 0):
            out.append(Violation(f"claims.scales[{j}]", f"K_{j} must be positive, got {k}"))
    try:
        shape = s.edges.shape
    except Exception as exc:  # malformed edge model
        return out + [Violation("edges", f"unreadable edge model: {exc}")]
    out += _edge_violations(s.edges)
    q, d = shape
    if c.d != d:
        out.append(Violation("claims.scales", f"{c.d} claim scales for {d} objects"))
    if not (s.norm.r > 0):
        out.append(Violation("norm.r", "r must be positive"))
    w = s.weights
    if isinstance(w, Compensated) and not (w.r > 0):
        out.append(Violation("weights.r", "r must be positive"))
    if isinstance(w, ExplicitWeights):
        if w.W.shape != (q, d):
            out.append(Violation("weights.W", f"shape {w.W.shape} does not match {q}x{d}"))
        elif np.any(w.W < 0) or not np.all(np.isfinite(w.W)):
            out.append(Violation("weights.W", "weights must be finite and nonnegative"))
        elif not out:
            support = s.edges._raw() > 0
            colsum = (w.W * support).sum(axis=0)
            for j in np.nonzero(colsum > 1.0 + 1e-12)[0]:
                out.append(Violation(f"weights.W[:, {j}]",
                                     f"object {j} can be insured beyond its value (column sum {colsum[j]:.6g} > 1)"))
    return out


def require_valid(s: MarketScenario) -> MarketScenario:
    bad = validate_scenario(s)
    if bad:
        raise ScenarioError(bad)
    return s
