"""Analytic CFT predictions for code correctability.

A jump operator expands into scaling operators. Fusing that set with itself
r times generates new operators; the most relevant direction sets the
exponent ``nu = max_r (1 - 2 Delta^(r)) / r`` with ``Delta^(r)`` the smallest
nonzero dimension first appearing at order r. The noise is correctable at a
finite rate iff the smallest nonzero dimension in the closure exceeds 1/2.

Operator content is read from YAML::

    schema: 1
    primaries: {I: 0.0, sigma: 0.125}
    fusion: [[a, b, [c, ...]], ...]        # unordered pairs
    jumps:
      name:
        components: {label: Delta, ...}    # labels may be non-primaries
        fusion: [[a, b, [c, ...]], ...]    # optional, overrides the global table
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

import numpy as np
import yaml
from scipy.special import gammaln, logsumexp

from .errors import ConfigError, ContentError, DomainError, PredictionError

IDENTITY = "I"
ZERO_TOL = 1e-12
CONTENT_KEYS = {"schema", "name", "primaries", "fusion", "jumps"}
JUMP_KEYS = {"components", "fusion"}


def _pair(a: str, b: str) -> frozenset:
    return frozenset((a, b))


@dataclass(frozen=True)
class Jump:
    components: dict
    fusion: Optional[dict] = None


@dataclass(frozen=True)
class OperatorContent:
    primaries: dict
    fusion: dict
    jumps: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.primaries.get(IDENTITY, None) != 0:
            raise ContentError("the identity 'I' must be declared with dimension 0")
        for lab, d in self.primaries.items():
            if not (math.isfinite(d) and d >= 0):
                raise ContentError(f"dimension of {lab!r} must be finite and >= 0, got {d}")
        for name, jump in self.jumps.items():
            for lab, d in jump.components.items():
                if not (math.isfinite(d) and d >= 0):
                    raise ContentError(f"jump {name!r}: dimension of {lab!r} must be finite and >= 0")
        _check_table(self.fusion, set(self.primaries), "fusion")
        for name, jump in self.jumps.items():
            if jump.fusion is not None:
                _check_table(jump.fusion, set(self.dimensions(name)), f"jump {name}")

    def dimensions(self, jump: str) -> dict:
        dims = dict(self.primaries)
        dims.update(self.jumps[jump].components)
        return dims

    def table(self, jump: str) -> dict:
        j = self.jumps[jump]
        if j.fusion is None:
            return self.fusion
        merged = dict(self.fusion)
        merged.update(j.fusion)
        return merged


def _check_table(table: dict, known: set, where: str):
    for key, out in table.items():
        bad = sorted((set(key) | set(out)) - known)
        if bad:
            raise ContentError(f"{where}: fusion table references undeclared labels {bad}")


def _parse_fusion(rows, where: str) -> dict:
    table = {}
    if not isinstance(rows, list):
        raise ConfigError(f"{where}: fusion must be a list of [a, b, [products]]")
    for row in rows:
        if not (isinstance(row, list) and len(row) == 3 and isinstance(row[2], list)):
            raise ConfigError(f"{where}: malformed fusion row {row!r}")
        a, b, out = str(row[0]), str(row[1]), [str(x) for x in row[2]]
        table[_pair(a, b)] = frozenset(out)
    return table


def parse_content(data: Mapping) -> OperatorContent:
    if not isinstance(data, Mapping):
        raise ConfigError("operator content must be a mapping")
    unknown = set(data) - CONTENT_KEYS
    if unknown:
        raise ConfigError(f"unknown keys in operator content: {sorted(unknown)}")
    if data.get("schema", 1) != 1:
        raise ConfigError(f"unsupported content schema {data.get('schema')!r}")
    prim = {str(k): float(v) for k, v in (data.get("primaries") or {}).items()}
    fusion = _parse_fusion(data.get("fusion") or [], "fusion")
    jumps = {}
    for name, spec in (data.get("jumps") or {}).items():
        if not isinstance(spec, Mapping) or set(spec) - JUMP_KEYS or "components" not in spec:
            raise ConfigError(f"jump {name!r} needs 'components' and optionally 'fusion'")
        comps = {str(k): float(v) for k, v in spec["components"].items()}
        jf = _parse_fusion(spec["fusion"], f"jump {name}") if "fusion" in spec else None
        jumps[str(name)] = Jump(comps, jf)
    return OperatorContent(prim, fusion, jumps, str(data.get("name", "")))


def load_content(path) -> OperatorContent:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    return parse_content(data)


def ising_content() -> OperatorContent:
    text = resources.files("cftqec").joinpath("data/ising.yaml").read_text()
    return parse_content(yaml.safe_load(text))


def _fuse(a: str, b: str, table: dict, known: set) -> frozenset:
    if a == IDENTITY:
        return frozenset([b])
    if b == IDENTITY:
        return frozenset([a])
    key = _pair(a, b)
    if key not in table:
        raise ContentError(f"fusion table has no entry for {a} x {b}")
    out = table[key]
    bad = [x for x in out if x not in known]
    if bad:
        raise ContentError(f"fusion {a} x {b} produces undeclared labels {bad}")
    return out


def fusion_closure(content: OperatorContent, jump: str) -> list[tuple[int, tuple[str, ...]]]:
    """Orders r >= 1 with the labels first appearing there.

    ``S_1`` is the jump's component set and ``S_r = S_{r-1} x S_1``; the
    iteration stops once a product set repeats, which must happen because the
    label set is finite.
    """
    if jump not in content.jumps:
        raise ContentError(f"jump {jump!r} is not declared")
    dims = content.dimensions(jump)
    table = content.table(jump)
    known = set(dims)
    S1 = frozenset(content.jumps[jump].components)
    trace = [(1, tuple(sorted(S1)))]
    seen_labels = set(S1)
    seen_sets = {S1}
    S = S1
    r = 1
    while True:
        r += 1
        S = frozenset(x for a in S for b in S1 for x in _fuse(a, b, table, known))
        new = S - seen_labels
        if new:
            trace.append((r, tuple(sorted(new))))
            seen_labels |= new
        if S in seen_sets:
            return trace
        seen_sets.add(S)


@dataclass(frozen=True)
class NuPrediction:
    delta_min: float
    fusion_order_r: int
    nu: float
    correctable: bool
    closure_trace: tuple


def predict_nu(content: OperatorContent, jump: str) -> NuPrediction:
    trace = fusion_closure(content, jump)
    dims = content.dimensions(jump)
    best = None
    for r, labels in trace:
        nonzero = [dims[x] for x in labels if dims[x] > ZERO_TOL]
        if not nonzero:
            continue
        d = min(nonzero)
        nu = (1 - 2 * d) / r
        if best is None or nu > best[2] + ZERO_TOL:
            best = (d, r, nu)
    if best is None:
        raise PredictionError(f"fusion algebra of {jump!r} contains only dimension-0 operators; nu undefined")
    d, r, nu = best
    return NuPrediction(d, r, nu, d > 0.5, tuple(trace))


def ope_matrix_element_scale(n: float, delta: float) -> float:
    """``(2 pi / n)^Delta``."""
    if n < 2 or delta < 0:
        raise DomainError(f"need n >= 2 and Delta >= 0, got n={n}, Delta={delta}")
    return float((2 * np.pi / n) ** delta)


def _check_weights(h: float, h0: float):
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    if not 0 < h0 < 2 * h:
        raise DomainError(f"need 0 < h0 < 2h to avoid Gamma poles, got h={h}, h0={h0}")


def _check_level(p, name):
    if int(p) != p or p < 0:
        raise DomainError(f"{name} must be a nonnegative integer, got {p}")
    return int(p)


def log_descendant_norm(p: int, h: float) -> float:
    p = _check_level(p, "p")
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    return float(gammaln(p + 1) + gammaln(p + 2 * h) - gammaln(2 * h))


def descendant_norm(p: int, h: float) -> float:
    """Holomorphic factor ``p! Gamma(p + 2h) / Gamma(2h)`` of the level-p norm."""
    return float(np.exp(log_descendant_norm(p, h)))


def log_descendant_overlap_f(p: int, q: int, h: float, h0: float) -> float:
    p, q = _check_level(p, "p"), _check_level(q, "q")
    _check_weights(h, h0)
    if p == q == 0:
        return 0.0  # single k=0 term cancels the normalisation exactly
    k = np.arange(min(p, q) + 1)
    terms = (gammaln(q + 1) - gammaln(q - k + 1) + gammaln(h0 + q - k) + gammaln(2 * h - h0 + k)
             + gammaln(h0 + p - k) - 2 * gammaln(h0) - gammaln(2 * h - h0))
    pref = gammaln(2 * h) - 0.5 * (gammaln(p + 1) + gammaln(q + 1) + gammaln(p + 2 * h) + gammaln(q + 2 * h))
    return float(pref + logsumexp(terms))


def descendant_overlap_f(p: int, q: int, h: float, h0: float) -> float:
    """Descendant matrix-element factor f(p, q); all summands are positive under 0 < h0 < 2h."""
    return float(np.exp(log_descendant_overlap_f(p, q, h, h0)))


@dataclass(frozen=True)
class BudgetReport:
    n: float
    M: int
    sum: float
    bound: float
    ratio: float


def descendant_code_budget(n: float, M: int, delta0: float, h: float, h0: float) -> BudgetReport:
    """``sum_{p,q < M} f(p,q)^2`` against ``n^(2 Delta0 - 1)``."""
    if not delta0 > 0.5:
        raise DomainError(f"the budget needs Delta0 > 1/2, got {delta0}")
    if int(M) != M or M < 1:
        raise DomainError(f"cutoff M must be a positive integer, got {M}")
    M = int(M)
    logs = np.array([[2 * log_descendant_overlap_f(p, q, h, h0) for q in range(M)] for p in range(M)])
    log_sum = float(logsumexp(logs))
    log_bound = (2 * delta0 - 1) * math.log(n)
    return BudgetReport(float(n), M, float(np.exp(log_sum)), float(np.exp(log_bound)), float(np.exp(log_sum - log_bound)))
