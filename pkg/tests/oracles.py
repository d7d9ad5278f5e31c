"""Brute-force reference values by enumerating every edge configuration.

Deliberately naive: plain Python loops over ``itertools.product``, weights and
norms recomputed from their definitions, no use of the package's laws,
convolutions or enumeration helpers.  Only small scenarios (q*d <= 16).
"""

from __future__ import annotations

import itertools
import math


def _norm(x, r):
    if math.isinf(r):
        return max(abs(v) for v in x)
    return sum(abs(v) ** r for v in x) ** (1.0 / r)


def _pw(x, a):
    return x ** a if x > 0 else 0.0


def _weight(kind, param, i, j, deg):
    if kind == "proportional":
        return 1.0 / deg if deg else 0.0
    if kind == "compensated":
        expo = 1.0 if math.isinf(param) else 1.0 - 1.0 / param
        return deg ** expo if deg else 0.0
    return param[i][j]


def graphs(P):
    """Yield ``(probability, A)`` with ``A`` a list of 0/1 rows for every configuration."""
    q, d = len(P), len(P[0])
    for bits in itertools.product((0, 1), repeat=q * d):
        prob = 1.0
        for k, b in enumerate(bits):
            p = P[k // d][k % d]
            prob *= p if b else 1.0 - p
        if prob == 0.0:
            continue
        yield prob, [list(bits[i * d:(i + 1) * d]) for i in range(q)]


class Oracle:
    """All constants of one small scenario by direct enumeration."""

    def __init__(self, P, alpha, K, r=1.0, weights=("proportional", None)):
        self.P = [[float(x) for x in row] for row in P]
        self.q, self.d = len(P), len(P[0])
        self.alpha = float(alpha)
        self.K = [float(k) for k in K]
        self.c = [k ** (1.0 / self.alpha) for k in self.K]
        self.r = float(r)
        self.kind, self.param = weights
        self._graphs = []
        for prob, M in graphs(self.P):
            A = [[0.0] * self.d for _ in range(self.q)]
            for j in range(self.d):
                deg = sum(M[i][j] for i in range(self.q))
                for i in range(self.q):
                    if M[i][j]:
                        A[i][j] = _weight(self.kind, self.param, i, j, deg)
            self._graphs.append((prob, A))

    @classmethod
    def of(cls, s):
        """Build from a ``MarketScenario`` (only reads its raw parameters)."""
        from netrisk.model import Compensated, ExplicitWeights

        w = s.weights
        if isinstance(w, Compensated):
            weights = ("compensated", w.r)
        elif isinstance(w, ExplicitWeights):
            weights = ("explicit", w.W.tolist())
        else:
            weights = ("proportional", None)
        return cls(s.P.tolist(), s.alpha, list(s.claims.scales), s.norm.r, weights)

    def _E(self, f):
        return math.fsum(prob * f(A) for prob, A in self._graphs)

    # exposures F = A V; independent claims contribute object by object

    def individual_ind(self, i):
        return self._E(lambda A: sum(self.K[j] * _pw(A[i][j], self.alpha) for j in range(self.d)))

    def individual_dep(self, i):
        return self._E(lambda A: _pw(sum(A[i][j] * self.c[j] for j in range(self.d)), self.alpha))

    def systemic_ind(self):
        def f(A):
            return sum(self.K[j] * _pw(_norm([A[i][j] for i in range(self.q)], self.r), self.alpha)
                       for j in range(self.d))
        return self._E(f)

    def systemic_dep(self):
        def f(A):
            x = [sum(A[i][j] * self.c[j] for j in range(self.d)) for i in range(self.q)]
            return _pw(_norm(x, self.r), self.alpha)
        return self._E(f)

    def uninsured_ind(self):
        def f(A):
            return sum(self.K[j] * _pw(1.0 - sum(A[i][j] for i in range(self.q)), self.alpha)
                       for j in range(self.d))
        return self._E(f)

    def uninsured_dep(self):
        def f(A):
            return _pw(sum(self.c[j] * (1.0 - sum(A[i][j] for i in range(self.q))) for j in range(self.d)),
                       self.alpha)
        return self._E(f)

    def joint_ind(self, agents, u):
        def f(A):
            return sum(self.K[j] * _pw(min(A[i][j] / um for i, um in zip(agents, u)), self.alpha)
                       for j in range(self.d))
        return self._E(f)

    def joint_dep(self, agents, u):
        def f(A):
            x = [sum(A[i][j] * self.c[j] for j in range(self.d)) / um for i, um in zip(agents, u)]
            return _pw(min(x), self.alpha)
        return self._E(f)

    def spectral_ind(self, digits=9):
        """Direction ``A e_j / ||A e_j||`` gets weight ``K_j ||A e_j||^alpha``."""
        acc = {}
        for prob, A in self._graphs:
            for j in range(self.d):
                col = [A[i][j] for i in range(self.q)]
                n = _norm(col, self.r)
                if n > 0:
                    key = tuple(round(v / n, digits) for v in col)
                    acc[key] = acc.get(key, 0.0) + prob * self.K[j] * n ** self.alpha
        total = self.systemic_ind()
        return {k: v / total for k, v in acc.items()}

    def spectral_dep(self, digits=9):
        acc = {}
        for prob, A in self._graphs:
            x = [sum(A[i][j] * self.c[j] for j in range(self.d)) for i in range(self.q)]
            n = _norm(x, self.r)
            if n > 0:
                key = tuple(round(v / n, digits) for v in x)
                acc[key] = acc.get(key, 0.0) + prob * n ** self.alpha
        total = self.systemic_dep()
        return {k: v / total for k, v in acc.items()}


def degree_pmf(p):
    """Degree law by enumerating the ``2^q`` insurer patterns."""
    q = len(p)
    pmf = [0.0] * (q + 1)
    for bits in itertools.product((0, 1), repeat=q):
        prob = 1.0
        for b, pk in zip(bits, p):
            prob *= pk if b else 1.0 - pk
        pmf[sum(bits)] += prob
    return pmf


def spectral_match(measure, reference, digits=9):
    """Max abs difference between a SpectralMeasure and an oracle dict (atoms matched by rounding)."""
    got = {}
    for pt, m in measure.atoms:
        key = tuple(round(v, digits) for v in pt)
        got[key] = got.get(key, 0.0) + m
    keys = set(got) | set(reference)
    return max(abs(got.get(k, 0.0) - reference.get(k, 0.0)) for k in keys)
