"""Asymptotic risk measures, diversification benefit and ordering checks.

All risk values here are the leading-order asymptotics evaluated at a finite
level ``gamma``; finite-level quantiles come from :mod:`netrisk.montecarlo`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import exact
from .model import Dependence, MarketScenario


class RiskKind(str, enum.Enum):
    VAR = "VaR"
    COTE = "CoTE"


class InfiniteMeanError(ValueError):
    """CoTE is undefined when the tail index does not exceed 1."""


def _check_gamma(gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(~((g > 0) & (g < 1))):
        raise ValueError("gamma must lie strictly between 0 and 1")
    return g


def var_asymptotic(constant: float, alpha: float, gamma):
    """``VaR_{1-gamma} ~ C^(1/alpha) gamma^(-1/alpha)``."""
    if constant < 0:
        raise ValueError("constant must be nonnegative")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    g = _check_gamma(gamma)
    out = constant ** (1.0 / alpha) * g ** (-1.0 / alpha)
    return float(out) if out.ndim == 0 else out


def cote_asymptotic(constant: float, alpha: float, gamma):
    """``CoTE_{1-gamma} ~ alpha/(alpha-1) VaR_{1-gamma}``; needs ``alpha > 1``."""
    if not alpha > 1:
        raise InfiniteMeanError(f"CoTE needs a finite mean (alpha > 1), got alpha = {alpha}")
    return alpha / (alpha - 1.0) * var_asymptotic(constant, alpha, gamma)


@dataclass(frozen=True, eq=False)
class RiskMeasureCurve:
    kind: RiskKind
    level_grid: np.ndarray
    values: np.ndarray
    constant: float
    alpha: float
    label: str = "asymptotic approximation"

    @classmethod
    def build(cls, kind, constant, alpha, gammas) -> "RiskMeasureCurve":
        kind = RiskKind(kind)
        g = _check_gamma(np.atleast_1d(gammas))
        f = var_asymptotic if kind is RiskKind.VAR else cote_asymptotic
        return cls(kind, g, np.atleast_1d(f(constant, alpha, g)), float(constant), float(alpha))


def diversification_benefit(s: MarketScenario) -> float:
    """``D = 1 - (C^S_ind)^(1/alpha) / sum_i (C^i_ind)^(1/alpha)``.

    Positive ``D`` means the market's asymptotic VaR is subadditive.
    """
    if s.norm.r != 1.0:
        raise ValueError("the diversification benefit is defined for the 1-norm")
    s = s.with_dependence(Dependence.INDEPENDENT)
    a = s.alpha
    union = math.fsum(exact.individual_constant_ind(s, i) ** (1.0 / a) for i in range(s.q))
    if union <= 0:
        raise ValueError("every individual constant is zero; D is undefined")
    return 1.0 - exact.systemic_constant_ind(s) ** (1.0 / a) / union


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    NO_BOUND = "no bound asserted"


@dataclass(frozen=True)
class OrderingCheck:
    name: str
    independent: float
    dependent: float
    expected: str          # "ind<=dep", "dep<=ind" or "none"
    verdict: Verdict


@dataclass(frozen=True)
class OrderingReport:
    alpha: float
    r: float
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.verdict is not Verdict.VIOLATED for c in self.checks)

    def violations(self):
        return [c for c in self.checks if c.verdict is Verdict.VIOLATED]


def _classify(name, ind, dep, expected, tol):
    if expected == "none":
        verdict = Verdict.NO_BOUND
    elif expected == "ind<=dep":
        verdict = Verdict.HOLDS if ind <= dep + tol * max(1.0, abs(dep)) else Verdict.VIOLATED
    else:
        verdict = Verdict.HOLDS if dep <= ind + tol * max(1.0, abs(ind)) else Verdict.VIOLATED
    return OrderingCheck(name, float(ind), float(dep), expected, verdict)


def ordering_report(s: MarketScenario, tol: float = 1e-10, config=exact.DEFAULT) -> OrderingReport:
    """Compare independent and fully dependent constants against the known orderings.

    Individual constants: ``ind <= dep`` for ``alpha >= 1`` and the reverse for
    ``alpha <= 1``.  Systemic constants: ``ind <= dep`` for ``alpha >= r`` and
    ``dep <= ind`` for ``alpha < 1`` (with ``r >= 1``); elsewhere nothing is asserted.
    """
    a, r = s.alpha, s.norm.r
    ind = s.with_dependence(Dependence.INDEPENDENT)
    dep = s.with_dependence(Dependence.DEPENDENT)
    if a > 1:
        ind_expect = "ind<=dep"
    elif a < 1:
        ind_expect = "dep<=ind"
    else:
        ind_expect = "ind<=dep"  # equality; either direction holds
    checks = []
    for i in range(s.q):
        checks.append(_classify(f"C^{i}", exact.individual_constant_ind(ind, i),
                                exact.individual_constant_dep(dep, i, config), ind_expect, tol))
        if a == 1:
            checks.append(_classify(f"C^{i} (reverse)", checks[-1].independent,
                                    checks[-1].dependent, "dep<=ind", tol))
    if r >= 1 and a >= r:
        sys_expect = "ind<=dep"
    elif r >= 1 and a < 1:
        sys_expect = "dep<=ind"
    else:
        sys_expect = "none"
    checks.append(_classify("C^S", exact.systemic_constant_ind(ind, config),
                            exact.systemic_constant_dep(dep, config), sys_expect, tol))
    return OrderingReport(a, r, tuple(checks))
