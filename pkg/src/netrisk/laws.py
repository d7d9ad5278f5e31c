"""Finite discrete laws on the nonnegative reals and their convolution."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MERGE_TOL = 1e-12
SUPPORT_CAP = 2_000_000
PAIR_CAP = 400_000_000


class SupportCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DiscreteLaw:
    """Atoms ``values`` (sorted, distinct up to ``MERGE_TOL``) with masses ``probs``."""

    values: np.ndarray
    probs: np.ndarray

    @classmethod
    def from_atoms(cls, values, probs, tol=MERGE_TOL) -> "DiscreteLaw":
        values = np.asarray(values, dtype=float).ravel()
        probs = np.asarray(probs, dtype=float).ravel()
        keep = probs > 0
        return cls(*_merge(values[keep], probs[keep], tol))

    @classmethod
    def point(cls, x=0.0) -> "DiscreteLaw":
        return cls(np.array([float(x)]), np.array([1.0]))

    @property
    def size(self) -> int:
        return self.values.size

    def total(self) -> float:
        return math.fsum(self.probs)

    def expect(self, f) -> float:
        """``E f(X)`` accumulated with compensated summation in atom order."""
        return math.fsum(self.probs * f(self.values))

    def moment(self, power: float) -> float:
        """``E X^power`` for ``X >= 0`` with ``0^power := 0`` (``power > 0``)."""
        v = self.values
        with np.errstate(divide="ignore"):
            terms = np.where(v > 0, np.abs(v) ** power, 0.0)
        return math.fsum(self.probs * terms)

    def scaled(self, c: float) -> "DiscreteLaw":
        return DiscreteLaw.from_atoms(self.values * c, self.probs)


def _merge(values, probs, tol):
    if values.size == 0:
        return np.zeros(0), np.zeros(0)
    order = np.argsort(values, kind="stable")
    v, p = values[order], probs[order]
    scale = np.maximum(1.0, np.abs(v[:-1]))
    new_group = np.empty(v.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(v) > tol * scale
    starts = np.flatnonzero(new_group)
    merged_p = np.add.reduceat(p, starts)
    return v[starts].copy(), merged_p


def convolve(a: DiscreteLaw, b: DiscreteLaw, cap: int = SUPPORT_CAP) -> DiscreteLaw:
    """Law of ``X + Y`` for independent ``X ~ a``, ``Y ~ b``."""
    if a.size * b.size > cap:
        raise SupportCapExceeded(f"convolution support {a.size}*{b.size} exceeds cap {cap}")
    vals = (a.values[:, None] + b.values[None, :]).ravel()
    probs = (a.probs[:, None] * b.probs[None, :]).ravel()
    return DiscreteLaw(*_merge(vals, probs, MERGE_TOL))


def convolve_all(laws, cap: int = SUPPORT_CAP) -> DiscreteLaw:
    out = DiscreteLaw.point(0.0)
    for law in laws:
        out = convolve(out, law, cap)
    return out


def _balanced_split(laws) -> int:
    logs = np.log([max(law.size, 1) for law in laws])
    left = np.cumsum(logs)
    return int(np.argmin(np.abs(2.0 * left - left[-1]))) + 1


def sum_moment(laws, power: float, cap: int = SUPPORT_CAP, pair_cap: int = PAIR_CAP) -> float:
    """``E (X_1 + ... + X_n)^power`` for independent ``X_k ~ laws[k]``.

    Convolves everything when the support fits under ``cap``.  Otherwise the
    laws are split into two halves whose sum laws fit, and the moment is taken
    over all pairs of atoms in chunks, which is still exact.
    """
    laws = list(laws)
    try:
        return convolve_all(laws, cap).moment(power)
    except SupportCapExceeded:
        if len(laws) < 2:
            raise
    k = _balanced_split(laws)
    left, right = convolve_all(laws[:k], cap), convolve_all(laws[k:], cap)
    if left.size * right.size > pair_cap:
        raise SupportCapExceeded(f"pairwise support {left.size}*{right.size} exceeds cap {pair_cap}")
    rows = max(1, cap // right.size)
    terms = []
    for start in range(0, left.size, rows):
        v = left.values[start:start + rows, None] + right.values[None, :]
        with np.errstate(divide="ignore"):
            f = np.where(v > 0, v ** power, 0.0)
        # numpy's pairwise summation inside a chunk, compensated summation across chunks
        terms.append(float(left.probs[start:start + rows] @ (f @ right.probs)))
    return math.fsum(terms)


def coarsen(law: DiscreteLaw, cells: int):
    """Merge atoms into at most ``cells`` equal-width bins (zero kept apart).

    Each bin keeps its total mass at the mass-weighted mean value, so the
    mean is preserved.  Returns ``(law, width)``; ``width = 0`` when nothing merged.
    """
    if law.size <= cells:
        return law, 0.0
    v, p = law.values, law.probs
    width = float(v.max()) / cells
    idx = np.where(v > 0, np.floor(v / width) + 1, 0).astype(np.int64)
    keys, inv = np.unique(idx, return_inverse=True)
    mass = np.bincount(inv, weights=p, minlength=keys.size)
    mean = np.bincount(inv, weights=p * v, minlength=keys.size) / mass
    mean[keys == 0] = 0.0
    return DiscreteLaw(mean, mass), width


def two_point(value: float, prob: float) -> DiscreteLaw:
    """``value`` with probability ``prob``, else 0."""
    return DiscreteLaw.from_atoms([0.0, value], [1.0 - prob, prob])


# ---------------------------------------------------------------------------
# Poisson-binomial
# ---------------------------------------------------------------------------


def poisson_binomial_pmf(p) -> np.ndarray:
    """pmf of a sum of independent Bernoulli(p_k), length ``len(p) + 1``."""
    p = np.asarray(p, dtype=float).ravel()
    pmf = np.zeros(p.size + 1)
    pmf[0] = 1.0
    for k, pk in enumerate(p):
        # pmf[1:k+2] uses the previous row only; update from the top down.
        pmf[1:k + 2] = pmf[1:k + 2] * (1.0 - pk) + pmf[0:k + 1] * pk
        pmf[0] *= 1.0 - pk
    return pmf


@dataclass(frozen=True, eq=False)
class DegreeLaw:
    """Exact law of an object's degree given its column of edge probabilities."""

    p: np.ndarray
    pmf: np.ndarray

    @classmethod
    def of(cls, p_column) -> "DegreeLaw":
        p = np.asarray(p_column, dtype=float).ravel()
        if np.any((p < 0) | (p > 1)):
            raise ValueError("edge probabilities must lie in [0, 1]")
        return cls(p, poisson_binomial_pmf(p))

    @property
    def q(self) -> int:
        return self.p.size

    def excluding(self, agents) -> np.ndarray:
        """pmf of the degree counted over all agents except ``agents``."""
        drop = np.zeros(self.q, dtype=bool)
        drop[np.atleast_1d(agents)] = True
        return poisson_binomial_pmf(self.p[~drop])

    def conditional_pmf_excluding(self, i: int) -> np.ndarray:
        return self.excluding([i])

    def prob_insured(self) -> float:
        """``P(deg > 0) = 1 - prod(1 - p)`` computed without cancellation."""
        return -math.expm1(math.fsum(np.log1p(-self.p))) if np.all(self.p < 1) else 1.0

    def prob_uninsured(self) -> float:
        return float(np.prod(1.0 - self.p))


def degree_law(p_column) -> DegreeLaw:
    return DegreeLaw.of(p_column)
