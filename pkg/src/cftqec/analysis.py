"""Finite-size scaling collapse and threshold-crossing analysis of CI data."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import ArgumentError, FitError

CSV_COLUMNS = ("n", "p", "ic", "stderr", "method")
MIN_OVERLAP = 2


@dataclass(frozen=True)
class CIRow:
    n: int
    p: float
    ic: float
    stderr: float = 0.0
    method: str = "dense"


@dataclass(frozen=True)
class CIDataset:
    rows: tuple
    provenance: str = ""

    def __post_init__(self):
        rows = tuple(r if isinstance(r, CIRow) else CIRow(*r) for r in self.rows)
        seen = set()
        for r in rows:
            key = (r.n, r.p, r.method)
            if key in seen:
                raise ArgumentError(f"duplicate row for (n, p, method) = {key}")
            seen.add(key)
            if not r.stderr >= 0:
                raise ArgumentError(f"negative stderr in row {r}")
        object.__setattr__(self, "rows", rows)

    @property
    def sizes(self) -> list[int]:
        return sorted({r.n for r in self.rows})

    def series(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(p, ic, stderr) arrays for one size, sorted by p."""
        rs = sorted((r for r in self.rows if r.n == n), key=lambda r: r.p)
        return (np.array([r.p for r in rs]), np.array([r.ic for r in rs]), np.array([r.stderr for r in rs]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.n, f"{r.p:.17g}", f"{r.ic:.17g}", f"{r.stderr:.17g}", r.method])
        return buf.getvalue()

    def save_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, path_or_text, provenance: str = "") -> "CIDataset":
        text = path_or_text
        if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
            text = Path(path_or_text).read_text()
        reader = csv.DictReader(io.StringIO(text))
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ArgumentError(f"CSV lacks columns {sorted(missing)}")
        rows = [CIRow(int(d["n"]), float(d["p"]), float(d["ic"]), float(d["stderr"]), d["method"]) for d in reader]
        return cls(tuple(rows), provenance)


class CollapseResult(NamedTuple):
    nu_best: float
    cost_curve: np.ndarray  # columns (nu, cost)


class NearOneResult(NamedTuple):
    nu_prime: float
    cost_curve: np.ndarray
    sigma: float
    positive: bool


def _collapse_cost(series, nu: float) -> float:
    """Mean weighted squared deviation of smaller sizes from the largest-n curve."""
    n_max = max(series)
    xm_p, ym, sm = series[n_max]
    xm = xm_p * n_max**nu
    total, count = 0.0, 0
    for n, (p, y, s) in series.items():
        if n == n_max:
            continue
        x = p * n**nu
        inside = (x >= xm[0]) & (x <= xm[-1])
        if inside.sum() < MIN_OVERLAP:
            return np.inf
        ref = np.interp(x[inside], xm, ym)
        var = s[inside] ** 2 + np.interp(x[inside], xm, sm) ** 2
        w = np.where(var > 0, 1.0 / np.where(var > 0, var, 1.0), 1.0)
        total += float(np.sum(w * (y[inside] - ref) ** 2))
        count += int(inside.sum())
    return total / count


def _prepare(data: CIDataset, transform) -> dict:
    sizes = data.sizes
    if len(sizes) < 2:
        raise FitError("a collapse needs at least two sizes")
    series = {}
    for n in sizes:
        p, y, s = data.series(n)
        x = transform(p)
        keep = x > 0  # x = 0 collapses trivially for every nu
        order = np.argsort(x[keep])
        series[n] = (x[keep][order], y[keep][order], s[keep][order])
        if len(order) < 2:
            raise FitError(f"size {n} has fewer than two usable points")
    return series


def _scan(series, nu_range, grid) -> np.ndarray:
    nus = np.linspace(nu_range[0], nu_range[1], int(grid))
    costs = np.array([_collapse_cost(series, nu) for nu in nus])
    if not np.any(np.isfinite(costs)):
        raise FitError("no trial exponent gives overlapping rescaled series")
    return np.column_stack([nus, costs])


def collapse_fit(data: CIDataset, nu_range=(-2.0, 2.0), grid: int = 161) -> CollapseResult:
    """Grid search for nu in ``I_c(p, n) = f(p n^nu)``."""
    curve = _scan(_prepare(data, lambda p: p), nu_range, grid)
    return CollapseResult(float(curve[np.argmin(curve[:, 1]), 0]), curve)


def _curvature_sigma(curve: np.ndarray, n_points: int) -> float:
    """Width where the total weighted cost rises by one unit (scaled by reduced cost if > 1)."""
    i = int(np.argmin(curve[:, 1]))
    lo, hi = max(0, i - 2), min(len(curve), i + 3)
    seg = curve[lo:hi]
    seg = seg[np.isfinite(seg[:, 1])]
    if len(seg) < 3:
        return np.inf
    a = np.polyfit(seg[:, 0] - curve[i, 0], seg[:, 1], 2)[0]
    if a <= 0:
        return np.inf
    c_min = curve[i, 1]
    return float(np.sqrt(max(1.0, c_min) / (a * n_points)))


def near_one_collapse(data: CIDataset, nu_range=(-2.0, 2.0), grid: int = 161) -> NearOneResult:
    """Collapse in ``x = (1 - p) n^nu'`` and a 2-sigma positivity verdict."""
    series = _prepare(data, lambda p: 1.0 - p)
    curve = _scan(series, nu_range, grid)
    nu = float(curve[np.argmin(curve[:, 1]), 0])
    n_points = sum(len(v[0]) for k, v in series.items() if k != max(series))
    sigma = _curvature_sigma(curve, n_points)
    return NearOneResult(nu, curve, sigma, bool(nu - 2 * sigma > 0))


@dataclass(frozen=True)
class PairCrossing:
    n_small: int
    n_large: int
    crossings: tuple  # (p, uncertainty) pairs
    coincide: bool

    @property
    def interior(self) -> tuple:
        return tuple(c for c in self.crossings if 0 < c[0] < 1)


def threshold_crossing(data: CIDataset, tol: float = 1e-12, nsigma: float = 3.0) -> list[PairCrossing]:
    """Sign changes of ``I_c(n_large) - I_c(n_small)`` for consecutive sizes.

    Differences within ``nsigma`` combined standard errors (plus ``tol``) count
    as zero and cannot carry a sign change.
    """
    sizes = data.sizes
    if len(sizes) < 2:
        raise ArgumentError("threshold analysis needs at least two sizes")
    out = []
    for na, nb in zip(sizes[:-1], sizes[1:]):
        pa, ya, sa = data.series(na)
        pb, yb, sb = data.series(nb)
        common, ia, ib = np.intersect1d(pa, pb, return_indices=True)
        if len(common) < 2:
            raise ArgumentError(f"sizes {na} and {nb} share fewer than two p values")
        d = yb[ib] - ya[ia]
        band = nsigma * np.sqrt(sa[ia] ** 2 + sb[ib] ** 2) + tol
        sig = np.abs(d) > band
        if not sig.any():
            out.append(PairCrossing(na, nb, (), True))
            continue
        idx = np.flatnonzero(sig)
        crossings = []
        for i, j in zip(idx[:-1], idx[1:]):
            if np.sign(d[i]) != np.sign(d[j]):
                p0 = common[i] - d[i] * (common[j] - common[i]) / (d[j] - d[i])
                crossings.append((float(p0), float((common[j] - common[i]) / 2)))
        out.append(PairCrossing(na, nb, tuple(crossings), False))
    return out
