"""JSON scenario documents: parsing, canonical form and hashing.

Numbers may be given as JSON numbers or as decimal strings ("0.1", "inf");
either way they are converted to binary floating point exactly once, here.
"""

from __future__ import annotations

import hashlib
import json
from decimal import Decimal, InvalidOperation

import numpy as np

from .model import (
    AggregationNorm,
    ClaimSpec,
    Compensated,
    Dependence,
    DeterministicEdges,
    ExplicitEdges,
    ExplicitWeights,
    HomogeneousEdges,
    MarketScenario,
    Proportional,
    RaschEdges,
    ToyEdges,
)

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def number(x, path="") -> float:
    if isinstance(x, bool) or x is None:
        raise ConfigError(f"expected a number, got {x!r}", path)
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "infinity", "+inf"):
            return float("inf")
        try:
            return float(Decimal(s))
        except InvalidOperation:
            raise ConfigError(f"not a decimal number: {x!r}", path) from None
    raise ConfigError(f"expected a number, got {type(x).__name__}", path)


def numbers(xs, path="") -> list:
    if not isinstance(xs, (list, tuple)):
        raise ConfigError("expected a list of numbers", path)
    return [number(x, f"{path}[{k}]") for k, x in enumerate(xs)]


def matrix(xs, path="") -> np.ndarray:
    if not isinstance(xs, (list, tuple)) or not xs:
        raise ConfigError("expected a non-empty list of rows", path)
    rows = [numbers(r, f"{path}[{k}]") for k, r in enumerate(xs)]
    if len({len(r) for r in rows}) != 1:
        raise ConfigError("rows have different lengths", path)
    return np.array(rows, dtype=float)


def _integer(x, path):
    v = number(x, path)
    if v != int(v) or v < 1:
        raise ConfigError(f"expected a positive integer, got {x!r}", path)
    return int(v)


def parse_edges(doc, path="scenario.edges"):
    if not isinstance(doc, dict) or "type" not in doc:
        raise ConfigError("edge model needs a 'type'", path)
    kind = doc["type"]
    if kind == "toy":
        return ToyEdges(number(doc.get("b"), f"{path}.b"))
    if kind == "homogeneous":
        return HomogeneousEdges(_integer(doc.get("q"), f"{path}.q"), _integer(doc.get("d"), f"{path}.d"),
                                number(doc.get("p"), f"{path}.p"))
    if kind == "explicit":
        return ExplicitEdges(matrix(doc.get("P"), f"{path}.P"))
    if kind == "deterministic":
        return DeterministicEdges(matrix(doc.get("M"), f"{path}.M"))
    if kind == "rasch":
        return RaschEdges(tuple(numbers(doc.get("beta"), f"{path}.beta")),
                          tuple(numbers(doc.get("delta"), f"{path}.delta")))
    raise ConfigError(f"unknown edge model {kind!r}", path)


def parse_weights(doc, path="scenario.weights"):
    if doc is None:
        return Proportional()
    kind = doc.get("type") if isinstance(doc, dict) else doc
    if kind == "proportional":
        return Proportional()
    if kind == "compensated":
        return Compensated(number(doc.get("r"), f"{path}.r"))
    if kind == "explicit":
        return ExplicitWeights(matrix(doc.get("W"), f"{path}.W"))
    raise ConfigError(f"unknown weight scheme {kind!r}", path)


def parse_scenario(doc, path="scenario") -> MarketScenario:
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be an object", path)
    edges = parse_edges(doc.get("edges"), f"{path}.edges")
    d = edges.shape[1]
    K = doc.get("K", 1)
    scales = numbers(K, f"{path}.K") if isinstance(K, list) else [number(K, f"{path}.K")] * d
    try:
        dep = Dependence(doc.get("dependence", "independent"))
    except ValueError:
        raise ConfigError(f"unknown dependence {doc.get('dependence')!r}", f"{path}.dependence") from None
    claims = ClaimSpec(number(doc.get("alpha"), f"{path}.alpha"), tuple(scales), dep)
    norm_doc = doc.get("norm", {})
    r = number(norm_doc.get("r", 1) if isinstance(norm_doc, dict) else norm_doc, f"{path}.norm.r")
    return MarketScenario(edges, claims, parse_weights(doc.get("weights"), f"{path}.weights"),
                          AggregationNorm(r))


def check_version(doc):
    v = doc.get("schema_version")
    if v != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {v!r}; expected {SCHEMA_VERSION}", "schema_version")


def load(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")
    check_version(doc)
    return doc


# ---------------------------------------------------------------------------
# canonical description and hash
# ---------------------------------------------------------------------------


def _f(x):
    return repr(float(x))


def describe(s: MarketScenario) -> dict:
    """Canonical, JSON-serializable description of a scenario."""
    e = s.edges
    if isinstance(e, ToyEdges):
        edges = {"type": "toy", "b": _f(e.b)}
    elif isinstance(e, HomogeneousEdges):
        edges = {"type": "homogeneous", "q": e.q, "d": e.d, "p": _f(e.p)}
    elif isinstance(e, RaschEdges):
        edges = {"type": "rasch", "beta": [_f(x) for x in e.beta], "delta": [_f(x) for x in e.delta]}
    else:
        key = "M" if isinstance(e, DeterministicEdges) else "P"
        edges = {"type": "deterministic" if key == "M" else "explicit",
                 key: [[_f(x) for x in row] for row in s.P]}
    w = s.weights
    if isinstance(w, Compensated):
        weights = {"type": "compensated", "r": _f(w.r)}
    elif isinstance(w, ExplicitWeights):
        weights = {"type": "explicit", "W": [[_f(x) for x in row] for row in w.W]}
    else:
        weights = {"type": "proportional"}
    return {"edges": edges, "alpha": _f(s.alpha), "K": [_f(k) for k in s.K],
            "dependence": s.dependence.value, "weights": weights, "norm": {"r": _f(s.norm.r)}}


def scenario_hash(s: MarketScenario) -> str:
    blob = json.dumps(describe(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
