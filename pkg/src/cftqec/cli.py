"""Command-line experiment runner.

Every run resolves a YAML config (schema 1), executes it and writes
``<out>.json`` (versioned record with config hash, rows and summary) and
``<out>.csv`` (flat rows, 17 significant digits). Exit codes: 0 success,
2 usage/config error, 3 resource ceiling, 4 numerical failure.

Spectra are cached in ``$CFTQEC_CACHE`` (default: ``.cftqec-cache`` beside the
output) keyed by (n, g, k, tol).
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import yaml

from . import __version__
from .analysis import CIDataset, collapse_fit, near_one_collapse, threshold_crossing
from .cftanalytics import descendant_code_budget, ising_content, load_content, predict_nu
from .channels import dephasing, depolarizing, flagged_dephasing
from .codespace import make_codespace
from .coherentinfo import ci_flagged_exact, ci_flagged_mc, ci_renyi2, ci_unflagged_exact
from .densealg import PureState
from .errors import CFTQECError, ConfigError, NumericalError
from .gaussian import gaussian_ci
from .models import build_tfim, identify_scaling_states, low_energy_spectrum, SpectrumRecord
from .pauli import check_axis
from .perturbation import b2_coefficients, b_coefficient, dephasing_jumps, exponent_fit

SCHEMA = 1
KINDS = (
    "spectrum", "ci-exact", "ci-flagged-exact", "ci-flagged-mc", "ci-renyi", "b-coeff", "b2-coeff",
    "gaussian-ci", "predict-nu", "descendant-budget", "collapse", "threshold",
)
FIGURES = ("fig2x", "fig2y", "fig2z", "fig3", "freefermion", "renyi")
TOP_KEYS = {"schema", "kind", "model", "code", "noise", "p", "sampler", "output", "options", "analysis"}
SECTION_KEYS = {
    "model": {"n", "g", "k", "tol"},
    "code": {"labels"},
    "noise": {"kind", "axis", "axes", "order"},
    "sampler": {"samples", "seed", "threads"},
    "options": {"content", "jumps", "delta0", "h", "h0", "M", "input", "nu_range", "grid", "near_one_min_p"},
}
ANALYSES = {"collapse", "threshold", "near_one", "spread", "exponent", "monotone"}
CI_KINDS = {"ci-exact", "ci-flagged-exact", "ci-flagged-mc", "ci-renyi", "gaussian-ci"}
HASH_EXCLUDE = {"output"}


# ---------------------------------------------------------------- config


def _default_config() -> dict:
    return {
        "schema": SCHEMA,
        "model": {"g": 1.0, "k": 3, "tol": 1e-12},
        "code": {"labels": ["I", "epsilon"]},
        "noise": {},
        "sampler": {"threads": 1},
        "options": {},
    }


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _p_grid(spec) -> list[float]:
    if isinstance(spec, dict):
        if set(spec) - {"start", "stop", "num"}:
            raise ConfigError("p range takes start, stop, num")
        vals = np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
        return [float(round(v, 12)) for v in vals]
    vals = [float(x) for x in _as_list(spec)]
    for v in vals:
        if not 0 <= v <= 1:
            raise ConfigError(f"p values must lie in [0, 1], got {v}")
    return vals


def validate_config(cfg: dict) -> dict:
    """Check schema and key names, normalize lists; raises ConfigError."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if cfg.get("schema") != SCHEMA:
        raise ConfigError(f"config schema must be {SCHEMA}, got {cfg.get('schema')!r}")
    kind = cfg.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; choose from {', '.join(KINDS)}")
    for sec, allowed in SECTION_KEYS.items():
        val = cfg.get(sec, {})
        if not isinstance(val, dict):
            raise ConfigError(f"section {sec!r} must be a mapping")
        bad = set(val) - allowed
        if bad:
            raise ConfigError(f"unknown keys in {sec}: {sorted(bad)}")
    noise = cfg.get("noise", {})
    for a in _as_list(noise.get("axes", [])) + ([noise["axis"]] if "axis" in noise else []):
        try:
            check_axis(a)
        except CFTQECError as exc:
            raise ConfigError(str(exc)) from None
    if "p" in cfg:
        cfg["p"] = _p_grid(cfg["p"])
    if kind == "ci-flagged-mc" and cfg.get("sampler", {}).get("seed") is None:
        raise ConfigError("Monte-Carlo runs require sampler.seed")
    for a in _as_list(cfg.get("analysis", [])):
        if a not in ANALYSES:
            raise ConfigError(f"unknown analysis {a!r}")
    needs_n = kind not in ("predict-nu", "collapse", "threshold")
    if needs_n and "n" not in cfg.get("model", {}):
        raise ConfigError("model.n is required")
    if kind in CI_KINDS and "p" not in cfg:
        raise ConfigError("a p grid is required")
    return cfg


def config_hash(cfg: dict) -> str:
    body = {k: v for k, v in cfg.items() if k not in HASH_EXCLUDE}
    body["sampler"] = {k: v for k, v in body.get("sampler", {}).items() if k != "threads"}
    text = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def load_config(path) -> dict:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    return data


def figure_config(name: str) -> dict:
    if name not in FIGURES:
        raise ConfigError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    text = resources.files("cftqec").joinpath(f"data/figures/{name}.yaml").read_text()
    return yaml.safe_load(text)


# ---------------------------------------------------------------- spectra


def _cache_dir(out: Optional[Path]) -> Optional[Path]:
    env = os.environ.get("CFTQEC_CACHE")
    if env:
        return Path(env)
    return (out.parent / ".cftqec-cache") if out is not None else None


def labelled_spectrum(n: int, g: float, k: int, tol: float, cache: Optional[Path] = None) -> SpectrumRecord:
    """Labelled low-energy spectrum, read from or written to the cache directory."""
    key = hashlib.sha256(json.dumps([n, float(g), k, float(tol)]).encode()).hexdigest()[:16]
    path = cache / f"spectrum-n{n}-{key}.npz" if cache is not None else None
    if path is not None and path.exists():
        d = np.load(path)
        energies = d["energies"]
        energies.setflags(write=False)
        states = tuple(PureState.qubits(v) for v in d["states"])
        rec = SpectrumRecord(energies, states, tuple(int(x) for x in d["parities"]),
                             tuple(bool(x) for x in d["degenerate"]), n, float(g))
    else:
        rec = low_energy_spectrum(build_tfim(n, g), k, tol)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp.npz")
            np.savez(tmp, energies=rec.energies, states=np.array([s.amplitudes for s in rec.states]),
                     parities=np.array(rec.parities), degenerate=np.array(rec.degenerate))
            os.replace(tmp, path)
    return identify_scaling_states(rec)


# ---------------------------------------------------------------- experiments


class Context:
    def __init__(self, cfg: dict, out: Optional[Path], threads: int):
        self.cfg = cfg
        self.out = out
        self.threads = max(1, int(threads))
        self.cache = _cache_dir(out)
        self._codes: dict = {}

    def code(self, n: int):
        m = self.cfg["model"]
        labels = tuple(self.cfg["code"]["labels"])
        if n not in self._codes:
            rec = labelled_spectrum(n, m["g"], m["k"], m["tol"], self.cache)
            self._codes[n] = make_codespace([rec.state(lab) for lab in labels], labels)
        return self._codes[n]

    def cells(self, fn: Callable, items: list) -> list:
        """Evaluate independent cells, in parallel if requested, in input order."""
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                return list(pool.map(lambda it: fn(*it), items))
        return [fn(*it) for it in items]


def _noise(cfg: dict, p: float, flagged: bool = False):
    noise = cfg.get("noise", {})
    kind = noise.get("kind", "flagged_dephasing" if flagged else "dephasing")
    if kind == "dephasing":
        return dephasing(noise.get("axis", "z"), p)
    if kind == "flagged_dephasing":
        return flagged_dephasing(noise.get("axis", "z"), p)
    if kind == "depolarizing":
        return depolarizing(p)
    raise ConfigError(f"noise kind {kind!r} is not supported for this experiment")


def _ci_rows(ctx: Context, evaluate) -> list[dict]:
    cfg = ctx.cfg
    sizes = [int(n) for n in _as_list(cfg["model"]["n"])]
    for n in sizes:
        ctx.code(n)
    items = [(n, p) for n in sizes for p in cfg["p"]]
    ests = ctx.cells(lambda n, p: evaluate(ctx.code(n), p), items)
    return [{"n": n, "p": p, "ic": e.value, "stderr": e.stderr, "method": e.method} for (n, p), e in zip(items, ests)]


def run_spectrum(ctx: Context) -> list[dict]:
    m = ctx.cfg["model"]
    rows = []
    for n in _as_list(m["n"]):
        rec = labelled_spectrum(int(n), m["g"], m["k"], m["tol"], ctx.cache)
        for i, e in enumerate(rec.energies):
            rows.append({"n": int(n), "g": m["g"], "index": i, "energy": float(e), "parity": rec.parities[i],
                         "label": rec.labels[i] or "", "dimension": float(rec.assigned_dimensions[i])})
    return rows


def run_ci_exact(ctx: Context) -> list[dict]:
    order = float(ctx.cfg.get("noise", {}).get("order", 1))
    return _ci_rows(ctx, lambda code, p: ci_unflagged_exact(code, _noise(ctx.cfg, p), order=order))


def run_ci_flagged_exact(ctx: Context) -> list[dict]:
    return _ci_rows(ctx, lambda code, p: ci_flagged_exact(code, _noise(ctx.cfg, p, flagged=True)))


def run_ci_flagged_mc(ctx: Context) -> list[dict]:
    s = ctx.cfg["sampler"]
    samples, seed = int(s.get("samples", 2000)), int(s["seed"])
    return _ci_rows(ctx, lambda code, p: ci_flagged_mc(code, _noise(ctx.cfg, p, flagged=True), samples, seed))


def run_ci_renyi(ctx: Context) -> list[dict]:
    order = float(ctx.cfg.get("noise", {}).get("order", 2))
    if order == 2:
        return _ci_rows(ctx, lambda code, p: ci_renyi2(code, _noise(ctx.cfg, p)))
    return _ci_rows(ctx, lambda code, p: ci_unflagged_exact(code, _noise(ctx.cfg, p), "dense", order))


def run_gaussian(ctx: Context) -> list[dict]:
    items = [(int(m), p) for m in _as_list(ctx.cfg["model"]["n"]) for p in ctx.cfg["p"]]
    ests = ctx.cells(gaussian_ci, items)
    return [{"n": m, "p": p, "ic": e.value, "stderr": 0.0, "method": "gaussian"} for (m, p), e in zip(items, ests)]


def _axes(cfg) -> list[str]:
    noise = cfg.get("noise", {})
    return [check_axis(a) for a in _as_list(noise.get("axes", noise.get("axis", ["x", "y", "z"])))]


def run_b(ctx: Context, second: bool) -> list[dict]:
    rows = []
    for n in [int(x) for x in _as_list(ctx.cfg["model"]["n"])]:
        code = ctx.code(n)
        for ax in _axes(ctx.cfg):
            J = dephasing_jumps(ax, n)
            row = {"n": n, "axis": ax, "b": b_coefficient(code, J)}
            if second:
                row.update(zip(("b2_1", "b2_2", "b2_3"), b2_coefficients(code, J)))
            rows.append(row)
    return rows


def run_predict(ctx: Context) -> list[dict]:
    opts = ctx.cfg.get("options", {})
    content = load_content(opts["content"]) if "content" in opts else ising_content()
    jumps = _as_list(opts.get("jumps", sorted(content.jumps)))
    rows = []
    for j in jumps:
        pred = predict_nu(content, j)
        rows.append({"jump": j, "delta_min": pred.delta_min, "r": pred.fusion_order_r, "nu": pred.nu,
                     "correctable": pred.correctable})
    return rows


def run_budget(ctx: Context) -> list[dict]:
    opts = ctx.cfg.get("options", {})
    rows = []
    for n in _as_list(ctx.cfg["model"]["n"]):
        n = float(n)
        M = opts.get("M", "auto")
        M = math.ceil(math.log(n) ** 2) if M == "auto" else int(M)
        rep = descendant_code_budget(n, M, float(opts.get("delta0", 1.0)), float(opts.get("h", 1.0)),
                                     float(opts.get("h0", 0.5)))
        rows.append({"n": n, "M": rep.M, "sum": rep.sum, "bound": rep.bound, "ratio": rep.ratio})
    return rows


def _input_dataset(ctx: Context) -> CIDataset:
    path = ctx.cfg.get("options", {}).get("input")
    if path is None:
        raise ConfigError("options.input (a CI table) is required")
    return CIDataset.from_csv(Path(path))


def run_collapse(ctx: Context) -> list[dict]:
    opts = ctx.cfg.get("options", {})
    res = collapse_fit(_input_dataset(ctx), tuple(opts.get("nu_range", (-2.0, 2.0))), int(opts.get("grid", 161)))
    return [{"nu": float(nu), "cost": float(c)} for nu, c in res.cost_curve if np.isfinite(c)]


def run_threshold(ctx: Context) -> list[dict]:
    rows = []
    for pair in threshold_crossing(_input_dataset(ctx)):
        for p, err in pair.crossings:
            rows.append({"n_small": pair.n_small, "n_large": pair.n_large, "p_cross": p, "uncertainty": err})
    return rows


RUNNERS = {
    "spectrum": run_spectrum,
    "ci-exact": run_ci_exact,
    "ci-flagged-exact": run_ci_flagged_exact,
    "ci-flagged-mc": run_ci_flagged_mc,
    "ci-renyi": run_ci_renyi,
    "gaussian-ci": run_gaussian,
    "b-coeff": lambda ctx: run_b(ctx, False),
    "b2-coeff": lambda ctx: run_b(ctx, True),
    "predict-nu": run_predict,
    "descendant-budget": run_budget,
    "collapse": run_collapse,
    "threshold": run_threshold,
}

DEFAULT_ANALYSES = {
    "b-coeff": ["exponent"],
    "b2-coeff": ["exponent"],
    "descendant-budget": ["monotone"],
    "collapse": ["collapse"],
    "threshold": ["threshold"],
}


def _fmt(v) -> Any:
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _summarize(kind: str, cfg: dict, rows: list[dict], ctx: Context) -> dict:
    wanted = _as_list(cfg.get("analysis", DEFAULT_ANALYSES.get(kind, [])))
    opts = cfg.get("options", {})
    nu_range = tuple(opts.get("nu_range", (-2.0, 2.0)))
    grid = int(opts.get("grid", 161))
    summary: dict = {}
    ds = None
    if kind in CI_KINDS:
        ds = CIDataset(tuple((r["n"], r["p"], r["ic"], r["stderr"], r["method"]) for r in rows))
    elif kind in ("collapse", "threshold"):
        ds = _input_dataset(ctx)
    for a in wanted:
        try:
            if a == "collapse":
                res = collapse_fit(ds, nu_range, grid)
                summary["nu_best"] = res.nu_best
            elif a == "near_one":
                pmin = float(opts.get("near_one_min_p", 0.85))
                sub = CIDataset(tuple(r for r in ds.rows if r.p >= pmin))
                res = near_one_collapse(sub, nu_range, grid)
                summary["near_one"] = {"nu_prime": res.nu_prime, "sigma": res.sigma, "positive": res.positive}
            elif a == "threshold":
                pairs = threshold_crossing(ds)
                summary["threshold"] = [
                    {"n_small": c.n_small, "n_large": c.n_large, "coincide": c.coincide,
                     "interior_crossings": [list(x) for x in c.interior]} for c in pairs]
            elif a == "spread":
                spreads = []
                for p in sorted({r.p for r in ds.rows}):
                    vals = [r.ic for r in ds.rows if r.p == p]
                    spreads.append(max(vals) - min(vals))
                summary["max_spread"] = max(spreads)
            elif a == "exponent":
                fits = {}
                cols = ["b"] + (["b2_1", "b2_2", "b2_3"] if kind == "b2-coeff" else [])
                for ax in sorted({r["axis"] for r in rows}):
                    for col in cols:
                        pts = [(r["n"], r[col]) for r in rows if r["axis"] == ax]
                        try:
                            fits[f"{ax}:{col}"] = exponent_fit(pts)[0]
                        except CFTQECError as exc:
                            fits[f"{ax}:{col}"] = f"unavailable: {exc}"
                summary["slopes"] = fits
            elif a == "monotone":
                ratios = [r["ratio"] for r in rows]
                summary["strictly_decreasing"] = bool(all(b < a for a, b in zip(ratios[:-1], ratios[1:])))
        except CFTQECError as exc:
            summary[a] = f"unavailable: {exc}"
    return summary


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.writer(buf, lineterminator="\n")
    cols = list(rows[0])
    w.writerow(cols)
    for r in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in (r[c] for c in cols)])
    return buf.getvalue()


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def run(cfg: dict, out: Optional[str] = None, threads: Optional[int] = None) -> dict:
    """Validate, execute and persist one experiment; returns the result record."""
    cfg = validate_config(_merge(_default_config(), cfg))
    out = out or cfg.get("output")
    out_path = Path(out) if out else None
    if out_path is not None:
        cfg["output"] = str(out_path)
    threads = threads or cfg.get("sampler", {}).get("threads", 1)
    ctx = Context(cfg, out_path, threads)
    t0 = time.perf_counter()
    rows = [{k: _fmt(v) for k, v in r.items()} for r in RUNNERS[cfg["kind"]](ctx)]
    summary = _summarize(cfg["kind"], cfg, rows, ctx)
    record = {
        "schema": SCHEMA,
        "tool_version": __version__,
        "kind": cfg["kind"],
        "config_hash": config_hash(cfg),
        "config": {k: v for k, v in cfg.items() if k not in HASH_EXCLUDE},
        "rows": rows,
        "summary": summary,
        "wall_time": time.perf_counter() - t0,
    }
    if out_path is not None:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(out_path.with_suffix(".csv"), _csv_text(rows))
        _atomic_write(out_path.with_suffix(".json"), json.dumps(record, sort_keys=True, indent=1) + "\n")
    return record


# ---------------------------------------------------------------- argparse


def _add_common(sp: argparse.ArgumentParser):
    sp.add_argument("--config", help="YAML config; flags below override its fields")
    sp.add_argument("--n", type=int, nargs="+", help="system sizes (modes for gaussian-ci)")
    sp.add_argument("--g", type=float, help="transverse field")
    sp.add_argument("--k", type=int, help="number of low-energy states")
    sp.add_argument("--labels", nargs="+", help="codeword labels, e.g. I epsilon")
    sp.add_argument("--axis", help="noise axis x, y or z")
    sp.add_argument("--p", type=float, nargs="+", help="noise strengths")
    sp.add_argument("--order", type=float, help="Renyi order")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--input", help="CI table for collapse/threshold")
    sp.add_argument("--content", help="operator-content YAML for predict-nu")
    sp.add_argument("--out", help="output path stem (.json and .csv are written)")
    sp.add_argument("--threads", type=int, help="parallel cells")


def _overrides(args) -> dict:
    o: dict = {}
    put = lambda sec, key, val: o.setdefault(sec, {}).__setitem__(key, val)  # noqa: E731
    if args.n is not None:
        put("model", "n", args.n)
    if args.g is not None:
        put("model", "g", args.g)
    if args.k is not None:
        put("model", "k", args.k)
    if args.labels is not None:
        put("code", "labels", args.labels)
    if args.axis is not None:
        put("noise", "axis", args.axis)
    if args.order is not None:
        put("noise", "order", args.order)
    if args.p is not None:
        o["p"] = args.p
    if args.seed is not None:
        put("sampler", "seed", args.seed)
    if args.samples is not None:
        put("sampler", "samples", args.samples)
    if args.input is not None:
        put("options", "input", args.input)
    if args.content is not None:
        put("options", "content", args.content)
    return o


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cftqec", description="Error-correction experiments on critical-chain codes.")
    ap.add_argument("--version", action="version", version=f"cftqec {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        _add_common(sub.add_parser(kind, help=f"run a {kind} experiment"))
    sp = sub.add_parser("run", help="run a YAML config")
    sp.add_argument("config")
    sp.add_argument("--out")
    sp.add_argument("--threads", type=int)
    sp = sub.add_parser("reproduce", help="run a bundled figure config")
    sp.add_argument("figure", choices=FIGURES)
    sp.add_argument("--out")
    sp.add_argument("--threads", type=int)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
        elif args.command == "reproduce":
            cfg = figure_config(args.figure)
            args.out = args.out or cfg.get("output") or args.figure
        else:
            base = load_config(args.config) if args.config else {"schema": SCHEMA}
            if base.get("kind", args.command) != args.command:
                raise ConfigError(f"config kind {base.get('kind')!r} does not match subcommand {args.command!r}")
            cfg = _merge(base, {"kind": args.command, **_overrides(args)})
        record = run(cfg, args.out, args.threads)
    except CFTQECError as exc:
        print(f"cftqec: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"cftqec: numerical failure: {exc}", file=sys.stderr)
        return NumericalError.exit_code
    except MemoryError:
        print("cftqec: out of memory; reduce the system size", file=sys.stderr)
        return 3
    print(json.dumps({"config_hash": record["config_hash"], "rows": len(record["rows"]),
                      "summary": record["summary"]}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
