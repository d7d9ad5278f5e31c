"""Parameter sweeps, figure datasets and the CSV output format."""

from __future__ import annotations

import csv
import enum
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from decimal import Decimal

import numpy as np

from . import exact, poisson, risk
from . import montecarlo as mc
from .config import scenario_hash
from .model import (
    AggregationNorm,
    Dependence,
    HomogeneousEdges,
    MarketScenario,
    RaschEdges,
    ScenarioError,
    ToyEdges,
    homogeneous,
    rasch,
    toy,
)

COLUMNS = ("param", "value", "quantity", "regime", "method", "point", "error_radius", "alpha", "scenario_hash",
           "series")


class Parameter(str, enum.Enum):
    TOY_B = "toy_b"
    HOMOGENEOUS_P = "homogeneous_p"
    RASCH_BETA_COMMON = "rasch_beta_common"
    RASCH_DELTA_COMMON = "rasch_delta_common"
    ALPHA = "alpha"
    NORM_R = "norm_r"


class Output(str, enum.Enum):
    C_I_IND = "C_i_ind"
    C_I_DEP = "C_i_dep"
    C_S_IND = "C_S_ind"
    C_S_DEP = "C_S_dep"
    B_IND = "B_ind"
    B_DEP = "B_dep"
    D = "D"
    SPECTRAL = "spectral"
    POISSON_APPROX = "poisson_approx"
    MC_CHECK = "mc_check"


@dataclass(frozen=True)
class Row:
    param: str
    value: float | str
    quantity: str
    regime: str
    method: str
    point: float
    error_radius: float
    alpha: float
    scenario_hash: str
    series: str = ""


@dataclass(frozen=True)
class SweepSpec:
    parameter: Parameter
    grid: tuple
    outputs: frozenset
    root: bool = False        # report C^(1/alpha) instead of C
    agents: tuple | None = None  # restrict per-agent outputs (0-based); None = all

    def __post_init__(self):
        object.__setattr__(self, "parameter", Parameter(self.parameter))
        object.__setattr__(self, "outputs", frozenset(Output(o) for o in self.outputs))
        g = tuple(float(x) for x in self.grid)
        if not g:
            raise ValueError("sweep grid must not be empty")
        if any(b <= a for a, b in zip(g, g[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        object.__setattr__(self, "grid", g)


def decimal_grid(start, stop, step) -> tuple:
    """``start, start+step, ... <= stop`` computed in decimal arithmetic, then rounded once."""
    a, b, h = Decimal(str(start)), Decimal(str(stop)), Decimal(str(step))
    if h <= 0:
        raise ValueError("grid step must be positive")
    n = int((b - a) / h)
    return tuple(float(a + k * h) for k in range(n + 1))


def substitute(s: MarketScenario, parameter: Parameter, value: float) -> MarketScenario:
    """Scenario ``s`` with one parameter replaced; raises if the base does not have it."""
    parameter = Parameter(parameter)
    e = s.edges
    if parameter is Parameter.TOY_B:
        if not isinstance(e, ToyEdges):
            raise ScenarioError("toy_b sweeps need a toy scenario")
        return replace(s, edges=ToyEdges(value))
    if parameter is Parameter.HOMOGENEOUS_P:
        if not isinstance(e, HomogeneousEdges):
            raise ScenarioError("homogeneous_p sweeps need a homogeneous scenario")
        return replace(s, edges=HomogeneousEdges(e.q, e.d, value))
    if parameter is Parameter.RASCH_BETA_COMMON:
        if not isinstance(e, RaschEdges):
            raise ScenarioError("rasch sweeps need a Rasch scenario")
        return replace(s, edges=RaschEdges(np.full(len(e.beta), value), e.delta))
    if parameter is Parameter.RASCH_DELTA_COMMON:
        if not isinstance(e, RaschEdges):
            raise ScenarioError("rasch sweeps need a Rasch scenario")
        return replace(s, edges=RaschEdges(e.beta, np.full(len(e.delta), value)))
    if parameter is Parameter.ALPHA:
        return s.with_alpha(value)
    return replace(s, norm=AggregationNorm(value))


# ---------------------------------------------------------------------------
# per-point evaluation
# ---------------------------------------------------------------------------


def _method(x):
    return getattr(x, "method", exact.Method.CLOSED_FORM).value


def _radius(x):
    return getattr(x, "error_radius", 0.0)


def evaluate_point(s: MarketScenario, outputs, *, root=False, agents=None, param="none", value="",
                   config: exact.EngineConfig = exact.DEFAULT, tol=poisson.DEFAULT_TOL, mc_cfg=None) -> list[Row]:
    """Rows for every requested output at one scenario."""
    outputs = {Output(o) for o in outputs}
    a = s.alpha
    h = scenario_hash(s)
    agent_ids = range(s.q) if agents is None else agents
    ind = s.with_dependence(Dependence.INDEPENDENT)
    dep = s.with_dependence(Dependence.DEPENDENT)
    rows = []

    def emit(quantity, regime, x, method=None, radius=None, transform=True):
        point = float(x)
        rad = _radius(x) if radius is None else radius
        if root and transform:
            quantity = f"{quantity}^(1/alpha)"
            point = point ** (1.0 / a)
        rows.append(Row(param, value, quantity, regime, method or _method(x), point, rad, a, h))

    if Output.C_I_IND in outputs:
        for i in agent_ids:
            emit(f"C_i_ind[{i + 1}]", "independent", exact.individual_constant_ind(ind, i))
    if Output.C_I_DEP in outputs:
        for i in agent_ids:
            emit(f"C_i_dep[{i + 1}]", "dependent", exact.individual_constant_dep(dep, i, config))
    if Output.C_S_IND in outputs:
        emit("C_S_ind", "independent", exact.systemic_constant_ind(ind, config))
    if Output.C_S_DEP in outputs:
        emit("C_S_dep", "dependent", exact.systemic_constant_dep(dep, config))
    for out, regime, sc in ((Output.B_IND, "independent", ind), (Output.B_DEP, "dependent", dep)):
        if out in outputs:
            try:
                emit(out.value, regime, exact.uninsured_constant(sc, config))
            except ScenarioError:
                rows.append(Row(param, value, out.value, regime, "undefined", math.nan, math.nan, a, h))
    if Output.D in outputs:
        try:
            emit("D", "independent", risk.diversification_benefit(ind), transform=False)
        except ValueError:
            rows.append(Row(param, value, "D", "independent", "undefined", math.nan, math.nan, a, h))
    if Output.SPECTRAL in outputs:
        for regime, sc, fn in (("independent", ind, exact.spectral_measure_ind),
                               ("dependent", dep, exact.spectral_support_dep)):
            try:
                sm = fn(sc, config)
            except (ValueError, exact.CapExceeded):
                continue
            for pt, m in sm.atoms:
                coords = ";".join(repr(float(x)) for x in pt)
                emit(f"spectral[{coords}]", regime, m, method="enumeration", radius=0.0, transform=False)
    if Output.POISSON_APPROX in outputs:
        rows.extend(_poisson_rows(s, root, agent_ids, param, value, tol, h))
    if Output.MC_CHECK in outputs:
        rows.extend(mc_rows(s, mc_cfg or mc.SimConfig(), param, value, config)[0])
    return rows


def _poisson_rows(s, root, agent_ids, param, value, tol, h):
    a = s.alpha
    rows = []

    def emit(quantity, regime, approx, transform=True):
        point = approx.value
        if root and transform:
            quantity, point = f"{quantity}^(1/alpha)", point ** (1.0 / a)
        rows.append(Row(param, value, quantity, regime, "poisson", point, approx.bound, a, h))

    def attempt(fn):
        try:
            fn()
        except ScenarioError as exc:
            rows.append(Row(param, value, "poisson_approx", "-", f"rejected: {exc}", math.nan, math.nan, a, h))

    def individual():
        for i in agent_ids:
            emit(f"C_i_ind[{i + 1}]", "independent", poisson.approx_individual_constant(s, i, tol))

    def dependent():
        indiv, systemic = poisson.approx_dep_constants(s, tol)
        for i in agent_ids:
            emit(f"C_i_dep[{i + 1}]", "dependent", indiv[i])
        emit("C_S_dep", "dependent", systemic)

    def uninsured():
        b_ind, b_dep = poisson.uninsured_poisson(s, tol)
        emit("B_ind", "independent", b_ind)
        emit("B_dep", "dependent", b_dep)
        lam, bound = poisson.noninsured_count_approx(s)
        emit("noninsured_count_mean", "-", poisson.PoissonApprox(lam, bound, lam), transform=False)

    attempt(individual)
    attempt(lambda: emit("C_S_ind", "independent", poisson.approx_systemic_constant(s)))
    attempt(dependent)
    attempt(uninsured)
    return rows


def mc_rows(s: MarketScenario, cfg, param="none", value="", config=exact.DEFAULT):
    """Monte Carlo tail estimates plus pass/fail rows against the analytic constants.

    Returns ``(rows, all_passed)``; a check passes when the estimate at the
    largest threshold covers the analytic constant.
    """
    a = s.alpha
    h = scenario_hash(s)
    regime = s.dependence.value
    targets = [mc.Agent(i) for i in range(s.q)] + [mc.Aggregate(), mc.Uninsured()]
    names = [f"C_i_{regime[:3]}[{i + 1}]" for i in range(s.q)] + [f"C_S_{regime[:3]}", f"B_{regime[:3]}"]
    refs = [exact.individual_constant(s, i, config) for i in range(s.q)] + [exact.systemic_constant(s, config)]
    try:
        refs.append(exact.uninsured_constant(s, config))
    except ScenarioError:
        refs.append(None)
    curves = mc.empirical_tail_constants(targets, s, cfg)
    rows, ok = [], True
    for name, ref, curve in zip(names, refs, curves):
        for est in curve:
            rows.append(Row("threshold", est.threshold, name, regime, "monte_carlo", est.point,
                            est.half_width, a, h))
        if ref is None:
            continue
        rows.append(Row(param, value, name, regime, _method(ref), float(ref), _radius(ref), a, h))
        passed = curve.plateau.covers(float(ref))
        ok &= passed
        rows.append(Row(param, value, f"mc_check[{name}]", regime, "monte_carlo",
                        1.0 if passed else 0.0, curve.plateau.half_width, a, h))
    return rows, ok


def _workers() -> int:
    env = os.environ.get("RISK_ENGINE_THREADS")
    return max(1, int(env)) if env else 1


def run_sweep(base: MarketScenario, spec: SweepSpec, **kw) -> list[Row]:
    """Evaluate every grid point (possibly concurrently) and return rows in grid order."""
    def one(v):
        s = substitute(base, spec.parameter, v)
        return evaluate_point(s, spec.outputs, root=spec.root, agents=spec.agents,
                              param=spec.parameter.value, value=v, **kw)

    w = _workers()
    if w == 1:
        chunks = [one(v) for v in spec.grid]
    else:
        with ThreadPoolExecutor(max_workers=w) as pool:
            chunks = list(pool.map(one, spec.grid))
    return [r for chunk in chunks for r in chunk]


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _cell(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)   # shortest string that parses back to the same double
    if isinstance(x, (np.floating,)):
        return repr(float(x))
    return str(x)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_cell(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def write_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# figure datasets
# ---------------------------------------------------------------------------

FIGURE_ALPHAS = (0.8, 1.0, 1.5, 3.0, 5.0)
DIVERSIFICATION_ALPHAS = (0.7, 0.8, 1.0, 3.0, 5.0)
NORM_RS = (1.0, 2.0, 5.0, 10.0, math.inf)


@dataclass(frozen=True)
class FigureJob:
    name: str
    base: MarketScenario
    spec: SweepSpec
    label: str = ""


@dataclass(frozen=True)
class FigureSettings:
    step: float = 0.01
    q: int = 5
    d: int = 5
    alphas: tuple = FIGURE_ALPHAS
    extra: dict = field(default_factory=dict)


def _grid(lo, hi, step, include_lo=True):
    g = decimal_grid(lo, hi, step)
    return g if include_lo else g[1:]


def figure_jobs(settings: FigureSettings = FigureSettings()) -> dict[str, list[FigureJob]]:
    """Every figure dataset as a list of sweep jobs, keyed by figure name."""
    st, q, d = settings.step, settings.q, settings.d
    unit = _grid(0, 1, st)
    positive = _grid(0, 1, st, include_lo=False)
    jobs: dict[str, list[FigureJob]] = {}
    root_agent1 = dict(root=True, agents=(0,))

    jobs["fig2"] = [FigureJob("fig2", toy(0.0, a), SweepSpec("toy_b", unit, {"C_i_ind"}, **root_agent1),
                              f"toy, alpha={a}") for a in settings.alphas]
    jobs["fig3"] = [FigureJob("fig3", homogeneous(q, d, 0.0, a),
                              SweepSpec("homogeneous_p", unit, {"C_i_ind"}, **root_agent1),
                              f"homogeneous, alpha={a}") for a in settings.alphas]
    jobs["fig4"] = [FigureJob("fig4", homogeneous(q, d, 0.0, a),
                              SweepSpec("homogeneous_p", unit, {"C_i_ind", "C_i_dep", "C_S_ind", "C_S_dep"},
                                        **root_agent1),
                              f"homogeneous, alpha={a}") for a in (0.8, 3.0, 5.0)]
    jobs["fig5"] = [FigureJob("fig5", rasch(np.full(q, 1.0), delta, a),
                              SweepSpec("rasch_beta_common", positive, {"C_i_ind"}, **root_agent1),
                              f"rasch delta={delta}, alpha={a}")
                    for delta in ((1.0, 0.1, 0.1, 0.1, 0.1), (0.1, 1.0, 1.0, 1.0, 1.0))
                    for a in settings.alphas]
    jobs["fig6"] = [FigureJob("fig6", rasch(beta, np.full(d, 1.0), a),
                              SweepSpec("rasch_delta_common", positive, {"C_i_ind"}, root=True, agents=(0, 1)),
                              f"rasch beta={beta}, alpha={a}")
                    for beta in ((1.0, 0.1, 0.1, 0.1, 0.1), (0.1, 1.0, 1.0, 1.0, 1.0))
                    for a in settings.alphas]
    jobs["fig7"] = ([FigureJob("fig7", homogeneous(q, d, 0.0, a), SweepSpec("homogeneous_p", positive, {"D"}),
                               f"homogeneous, alpha={a}") for a in DIVERSIFICATION_ALPHAS]
                    + [FigureJob("fig7", toy(0.0, a), SweepSpec("toy_b", unit, {"D"}), f"toy, alpha={a}")
                       for a in DIVERSIFICATION_ALPHAS])
    jobs["fig8"] = [FigureJob("fig8", homogeneous(q, d, 0.0, a, norm=AggregationNorm(r)),
                              SweepSpec("homogeneous_p", unit, {"C_S_ind"}, root=True),
                              f"homogeneous, r={r}, alpha={a}")
                    for a in (0.8, 3.0) for r in NORM_RS]
    fixed = (0.1, 0.3, 0.5, 0.7, 0.9)
    jobs["fig9"] = ([FigureJob("fig9", rasch(fixed, np.full(d, 1.0), a), SweepSpec("rasch_delta_common", positive, {"D"}),
                               f"rasch beta={fixed}, alpha={a}") for a in DIVERSIFICATION_ALPHAS]
                    + [FigureJob("fig9", rasch(np.full(q, 1.0), fixed, a), SweepSpec("rasch_beta_common", positive, {"D"}),
                                 f"rasch delta={fixed}, alpha={a}") for a in DIVERSIFICATION_ALPHAS])
    return jobs


def figure_rows(jobs: list[FigureJob], **kw) -> list[Row]:
    rows = []
    for job in jobs:
        rows.extend(replace(r, series=job.label) for r in run_sweep(job.base, job.spec, **kw))
    return rows


def curve(rows, quantity, series=None):
    """``(values, points)`` of one quantity from a list of rows or CSV dicts, in row order."""
    def get(r, k):
        return r[k] if isinstance(r, dict) else getattr(r, k)

    sel = [r for r in rows if get(r, "quantity") == quantity and (series is None or get(r, "series") == series)]
    return (np.array([float(get(r, "value")) for r in sel]),
            np.array([float(get(r, "point")) for r in sel]))
