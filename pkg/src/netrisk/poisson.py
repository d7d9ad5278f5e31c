"""Poisson approximations of the risk constants for large sparse markets."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .laws import DegreeLaw, DiscreteLaw, coarsen, convolve, poisson_binomial_pmf
from .model import MarketScenario, Proportional, ScenarioError, require_valid

DEFAULT_TOL = 1e-12
MAX_TERMS = 1_000_000
CELLS = 1 << 15   # value bins kept between convolutions of Poisson surrogates


class Shift(str, enum.Enum):
    NONE = "none"        # E X^k
    PLUS_ONE = "plus_one"  # E (1 + X)^k


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class PoissonApprox:
    value: float
    bound: float
    lam: object

    def covers(self, exact: float) -> bool:
        return abs(self.value - exact) <= self.bound


def _log_pmf(lam, n):
    if lam == 0:
        return np.where(n == 0, 0.0, -np.inf)
    return -lam + n * math.log(lam) - gammaln(n + 1.0)


def _tail_bound(lam, n, log_term, kappa, s):
    """Bound on ``sum_{m > n} term_m`` via a geometric majorant of the term ratios."""
    ratio = lam / (n + 1.0)
    if kappa > 0:
        ratio *= ((n + 1.0 + s) / (n + s)) ** kappa
    if ratio >= 1.0:
        return math.inf
    return math.exp(log_term) * ratio / (1.0 - ratio)


def poisson_terms(lam: float, exponent: float, shift=Shift.PLUS_ONE, tol: float = DEFAULT_TOL):
    """Terms ``P(X = n) f(n)`` for ``n = 0..N`` with the remaining tail below ``tol``."""
    shift = Shift(shift)
    if not lam >= 0 or not math.isfinite(lam):
        raise ValueError(f"lambda must be a finite nonnegative number, got {lam}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    s = 1.0 if shift is Shift.PLUS_ONE else 0.0
    if shift is Shift.NONE and exponent < 0:
        raise ConvergenceError("E X^k with k < 0 diverges because P(X = 0) > 0")
    n_hi = int(lam + 12.0 * math.sqrt(lam) + 30.0)
    while True:
        n = np.arange(n_hi + 1, dtype=float)
        with np.errstate(divide="ignore"):
            log_f = exponent * np.log(n + s)
        if shift is Shift.NONE:
            log_f[0] = 0.0 if exponent == 0 else -np.inf
        log_terms = _log_pmf(lam, n) + log_f
        terms = np.exp(log_terms)
        if lam == 0 or _tail_bound(lam, n_hi, log_terms[-1], exponent, s) < tol:
            return terms
        if n_hi >= MAX_TERMS:
            raise ConvergenceError(f"Poisson series did not reach tol={tol} within {MAX_TERMS} terms")
        n_hi = min(2 * n_hi, MAX_TERMS)


def poisson_moment(lam: float, exponent: float, shift=Shift.PLUS_ONE, tol: float = DEFAULT_TOL) -> float:
    """``E f(X)`` for ``X ~ Pois(lam)``, ``f(n) = (n + shift)^exponent``."""
    return math.fsum(poisson_terms(lam, exponent, shift, tol))


def poisson_law(lam: float, scale: float = 1.0, weight=None, tol: float = DEFAULT_TOL,
                tail_power: float = 1.0) -> DiscreteLaw:
    """Truncated law of ``scale * g(X)``, ``g(n) = n`` or ``weight(n)``; leftover mass sits on the last atom."""
    terms = poisson_terms(lam, tail_power, Shift.PLUS_ONE, tol)
    n = np.arange(terms.size, dtype=float)
    pmf = np.exp(_log_pmf(lam, n))
    pmf[-1] += max(0.0, 1.0 - math.fsum(pmf))
    vals = n if weight is None else weight(n)
    return DiscreteLaw.from_atoms(scale * vals, pmf)


def _require_proportional(s, need_r1=True):
    require_valid(s)
    if not isinstance(s.weights, Proportional):
        raise ScenarioError("Poisson approximations assume proportional weights 1/deg(j)")
    if need_r1 and s.norm.r != 1.0:
        raise ScenarioError("Poisson error bounds are only available for the 1-norm")


def _min1_inv(lam):
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(lam > 1.0, 1.0 / np.maximum(lam, 1.0), 1.0)


def approx_individual_constant(s: MarketScenario, i: int, tol: float = DEFAULT_TOL) -> PoissonApprox:
    """Replace the other insurers of each object by a Poisson count."""
    _require_proportional(s, need_r1=False)
    P, K, a = s.P, s.K, s.alpha
    if not 0 <= i < s.q:
        raise IndexError(f"agent index {i} out of range")
    others = np.delete(P, i, axis=0)
    lam = others.sum(axis=0)
    sq = (others ** 2).sum(axis=0)
    vals, bnds = [], []
    for j in range(s.d):
        vals.append(K[j] * P[i, j] * poisson_moment(lam[j], -a, Shift.PLUS_ONE, tol))
        bnds.append(K[j] * P[i, j] * _min1_inv(lam[j]) * sq[j])
    return PoissonApprox(math.fsum(vals), math.fsum(bnds), lam)


def approx_systemic_constant(s: MarketScenario) -> PoissonApprox:
    _require_proportional(s)
    P, K = s.P, s.K
    lam = P.sum(axis=0)
    sq = (P ** 2).sum(axis=0)
    value = math.fsum(K * -np.expm1(-lam))
    bound = math.fsum(K * _min1_inv(lam) * sq)
    return PoissonApprox(value, bound, lam)


def approx_dep_constants(s: MarketScenario, tol: float = DEFAULT_TOL):
    """Poisson surrogates for the fully dependent constants: ``([per agent], systemic)``.

    The individual bound sums the per-object factors
    ``min(1, 1/lam_j^i) sum_{k != i} p_kj^2`` over objects, as the systemic bound does.
    """
    _require_proportional(s)
    P, a = s.P, s.alpha
    c = s.claims.root_scales
    scale = c.sum() ** a
    d = s.d

    lam = P.sum(axis=0)
    sq = (P ** 2).sum(axis=0)
    law = DiscreteLaw.point(0.0)
    for j in range(d):
        law = convolve(law, DiscreteLaw.from_atoms([0.0, c[j]], [math.exp(-lam[j]), -math.expm1(-lam[j])]))
    systemic = PoissonApprox(law.moment(a), d * scale * math.fsum(_min1_inv(lam) * sq), lam)

    individual = []
    for i in range(s.q):
        others = np.delete(P, i, axis=0)
        lam_i = others.sum(axis=0)
        sq_i = (others ** 2).sum(axis=0)
        law = DiscreteLaw.point(0.0)
        dropped = shift = 0.0
        for j in range(d):
            if P[i, j] == 0:
                continue
            surrogate = poisson_law(lam_i[j], c[j], weight=lambda n: 1.0 / (1.0 + n), tol=tol)
            term = DiscreteLaw.from_atoms(np.concatenate([[0.0], surrogate.values]),
                                          np.concatenate([[1.0 - P[i, j]], P[i, j] * surrogate.probs]))
            law, lost = _prune(convolve(law, term), tol)
            law, width = coarsen(law, CELLS)
            dropped += lost
            shift += width
        # Values stay in [0, sum(c)]: pruning moves the moment by at most dropped * scale and
        # binning moves every value by at most ``shift``.
        bound = (d * scale * math.fsum(_min1_inv(lam_i) * sq_i) + dropped * scale
                 + _power_modulus(shift, c.sum(), a))
        individual.append(PoissonApprox(law.moment(a), bound, lam_i))
    return individual, systemic


def _prune(law: DiscreteLaw, tol: float):
    """Drop atoms lighter than ``tol * 1e-3``; returns the law and the mass removed."""
    keep = law.probs >= tol * 1e-3
    if keep.all():
        return law, 0.0
    return DiscreteLaw(law.values[keep], law.probs[keep]), math.fsum(law.probs[~keep])


def _power_modulus(h, top, a):
    """Largest change of ``x^a`` on ``[0, top]`` when ``x`` moves by at most ``h``."""
    if h == 0:
        return 0.0
    return a * top ** (a - 1.0) * h if a >= 1 else h ** a


def _poisson_sum_law(pi, c, tol):
    """Law of ``sum_j c_j X_j`` with ``X_j ~ Pois(pi_j)``.

    Atoms lighter than ``tol * 1e-3`` are dropped and the support is binned to
    ``CELLS`` mean-preserving atoms, so the result is an approximation of the
    surrogate at relative resolution ``1/CELLS``.
    """
    law = DiscreteLaw.point(0.0)
    for pj, cj in zip(pi, c):
        if pj == 0:
            continue
        law, _ = _prune(convolve(law, poisson_law(pj, cj, tol=tol)), tol)
        law, _ = coarsen(law, CELLS)
    return law


def uninsured_poisson(s: MarketScenario, tol: float = DEFAULT_TOL):
    """Poisson tail constants of the uninsured loss: ``(independent, dependent)``.

    ``bound`` carries ``sum_j pi_j^2``, the total-variation radius between the
    uninsured loss and its Poisson surrogate (uniform over thresholds).
    """
    _require_proportional(s, need_r1=False)
    P, K, a = s.P, s.K, s.alpha
    c = s.claims.root_scales
    pi = np.prod(1.0 - P, axis=0)
    tv = math.fsum(pi ** 2)
    ind = math.fsum(K[j] * poisson_moment(pi[j], a, Shift.NONE, tol) for j in range(s.d))
    if np.all(K == K[0]):
        dep = K[0] * poisson_moment(math.fsum(pi), a, Shift.NONE, tol)
    else:
        dep = _poisson_sum_law(pi, c, tol).moment(a)
    return PoissonApprox(ind, tv, pi), PoissonApprox(dep, tv, pi)


def noninsured_count_approx(s: MarketScenario):
    """``(lambda, tv_bound)`` for the Poisson approximation of the number of uninsured objects."""
    require_valid(s)
    pi = np.prod(1.0 - s.P, axis=0)
    lam = math.fsum(pi)
    return lam, float(_min1_inv(lam) * math.fsum(pi ** 2))


# ---------------------------------------------------------------------------
# exact total-variation distances (small instances)
# ---------------------------------------------------------------------------


def noninsured_count_tv(s: MarketScenario) -> float:
    """Exact TV distance between the uninsured-object count and ``Pois(sum pi_j)``."""
    pi = np.prod(1.0 - s.P, axis=0)
    pmf = poisson_binomial_pmf(pi)
    lam = math.fsum(pi)
    n = np.arange(pmf.size, dtype=float)
    pois = np.exp(_log_pmf(lam, n))
    # P(W > d) = 0, so the Poisson mass beyond d counts in full.
    return 0.5 * (math.fsum(np.abs(pmf - pois)) + max(0.0, 1.0 - math.fsum(pois)))


def indicator_vector_tv(s: MarketScenario, cap: int = 20) -> float:
    """Exact TV distance between ``(1(deg j = 0))_j`` and independent ``Pois(pi_j)``."""
    pi = np.prod(1.0 - s.P, axis=0)
    d = pi.size
    if d > cap:
        raise ValueError(f"{d} objects exceed the enumeration cap {cap}")
    codes = np.arange(1 << d, dtype=np.int64)
    x = ((codes[:, None] >> np.arange(d)) & 1).astype(bool)
    bern = np.where(x, pi, 1.0 - pi).prod(axis=1)
    pois = np.where(x, pi * np.exp(-pi), np.exp(-pi)).prod(axis=1)
    return math.fsum(np.maximum(bern - pois, 0.0))


def degree_tv(p_column) -> float:
    """Exact TV distance between a Poisson-binomial degree and its Poisson surrogate."""
    law = DegreeLaw.of(p_column)
    lam = math.fsum(law.p)
    n = np.arange(law.pmf.size, dtype=float)
    pois = np.exp(_log_pmf(lam, n))
    return 0.5 * (math.fsum(np.abs(law.pmf - pois)) + max(0.0, 1.0 - math.fsum(pois)))
