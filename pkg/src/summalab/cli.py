"""Job-file driven command line front end.

    summalab --job job.json --out results/ [--format csv|json] [--suite ID]
             [--trace] [--full-scan] [--seed N]

Exit codes: 0 every report passed, 1 at least one failed, 2 configuration
error, 3 no failures but some reports inconclusive.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import convfunc as cf
from . import holder as hd
from . import mellin as ml
from .kernel import kernel_library
from .report import FunctionalEstimate, SummabilityVerdict, TheoremReport
from .signal import (ContinuousSignal, DiscreteSignal, GridSpec, MultiplicativeSignal,
                     signal_library)
from .verify import SUITES, DiscreteGrid, run_suite, summarize

__all__ = ["main", "load_job", "ConfigError", "FUNCTIONALS"]

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid job file; the message names the offending key."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SignalSpec(_Strict):
    name: str
    params: dict[str, Any] = Field(default_factory=dict)
    label: Optional[str] = None
    domain: Optional[Literal["continuous", "discrete", "multiplicative"]] = None
    wrap_log: bool = False


class KernelSpec(_Strict):
    name: str
    params: dict[str, Any] = Field(default_factory=dict)
    label: Optional[str] = None


class GridModel(_Strict):
    x_max: float = 5000.0
    step: float = 0.01
    x_cut: Optional[float] = None
    theta_grid: Optional[list[float]] = None


class DiscreteModel(_Strict):
    n_max: int = hd.N_MAX
    theta_grid: Optional[list[float]] = None
    n_cut: Optional[int] = None
    holder_k: int = 4
    bridge_theta: Optional[list[float]] = None
    bridge_cut: int = 64
    bridge_step: float = 1e-3


class TaskModel(_Strict):
    kind: Literal["suite", "functional"] = "suite"
    suite: Optional[str] = None
    functionals: list[str] = Field(default_factory=list)
    k: int = 3
    hardy_r: float = 1.0


class OutputModel(_Strict):
    path: str = "."
    format: Literal["csv", "json"] = "csv"


class JobConfig(_Strict):
    signals: list[SignalSpec] = Field(default_factory=list)
    kernels: list[KernelSpec] = Field(default_factory=list)
    grid: GridModel = Field(default_factory=GridModel)
    log_grid: Optional[GridModel] = None
    discrete_grid: DiscreteModel = Field(default_factory=DiscreteModel)
    task: TaskModel = Field(default_factory=TaskModel)
    tolerances: dict[str, float] = Field(default_factory=dict)
    output: OutputModel = Field(default_factory=OutputModel)


FUNCTIONALS = (
    "upper_F", "lower_F", "upper_F_k", "F_infinity", "upper_P", "lower_P",
    "almost_convergence", "upper_Q", "lower_Q", "q_summability", "holder_upper",
    "holder_lower", "c_infinity_upper", "c_infinity_lower", "c_infinity_test",
    "logarithmic", "banach_upper",
)


def _grid(model: GridModel, where: str) -> GridSpec:
    x_cut = model.x_max / 5 if model.x_cut is None else model.x_cut
    theta = tuple(model.theta_grid) if model.theta_grid is not None else GridSpec().theta_grid
    try:
        return GridSpec(model.x_max, model.step, x_cut, theta)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _discrete(model: DiscreteModel) -> DiscreteGrid:
    base = DiscreteGrid()
    dg = DiscreteGrid(
        model.n_max,
        tuple(model.theta_grid) if model.theta_grid is not None else base.theta_grid,
        model.n_cut, model.holder_k,
        tuple(model.bridge_theta) if model.bridge_theta is not None else base.bridge_theta,
        model.bridge_cut, model.bridge_step)
    try:
        hd._check_theta(dg.n_max, dg.theta_grid,
                        dg.n_cut or hd._default_theta_cut(dg.n_max, dg.theta_grid))
        dg.bridge_grid()
    except ValueError as exc:
        raise ConfigError(f"discrete_grid: {exc}") from None
    return dg


def load_job(path: Path):
    """Parse and validate a job file; every problem raises :class:`ConfigError`."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read job file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"job file is not valid JSON: {exc}") from None
    try:
        cfg = JobConfig.model_validate(raw)
    except ValidationError as exc:
        err = exc.errors()[0]
        key = ".".join(str(p) for p in err["loc"])
        raise ConfigError(f"{key}: {err['msg']}") from None
    base = Path(path).resolve().parent
    signals = []
    for i, spec in enumerate(cfg.signals):
        params = dict(spec.params)
        if spec.domain is not None:
            params["domain"] = spec.domain
        if spec.label is not None:
            params["label"] = spec.label
        try:
            sig = signal_library(spec.name, params)
            if spec.wrap_log:
                if not isinstance(sig, MultiplicativeSignal):
                    raise ValueError("wrap_log needs domain 'multiplicative'")
                sig = ml.wrap_log(sig)
                if spec.label is not None:
                    sig = ContinuousSignal(sig.generator, sig.bound, spec.label)
        except ValueError as exc:
            raise ConfigError(f"signals.{i}: {exc}") from None
        signals.append(sig)
    kernels = []
    for i, spec in enumerate(cfg.kernels):
        params = dict(spec.params)
        if "csv" in params:
            params["csv"] = str((base / params["csv"]).resolve())
        if spec.label is not None:
            params["label"] = spec.label
        try:
            kernels.append(kernel_library(spec.name, params))
        except (ValueError, KeyError, OSError) as exc:
            raise ConfigError(f"kernels.{i}: {exc}") from None
    grid = _grid(cfg.grid, "grid")
    log_grid = _grid(cfg.log_grid, "log_grid") if cfg.log_grid is not None else ml.LOG_GRID
    dg = _discrete(cfg.discrete_grid)
    if cfg.task.kind == "suite" and cfg.task.suite is not None and cfg.task.suite not in SUITES:
        raise ConfigError(f"task.suite: unknown suite {cfg.task.suite!r}")
    for name in cfg.task.functionals:
        if name not in FUNCTIONALS:
            raise ConfigError(f"task.functionals: unknown functional {name!r}")
    from .verify import DEFAULT_TOLERANCES
    for k in cfg.tolerances:
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"tolerances.{k}: unknown tolerance")
    return cfg, signals, kernels, grid, log_grid, dg


# --------------------------------------------------------------------------
# functional evaluation

def _eval_functionals(cfg, signals, kernels, grid, log_grid, dg):
    """Rows ``(functional, signal, kernel, estimate-or-verdict)`` in job order."""
    rows = []
    eps = cfg.tolerances.get("limit", cf.EPS_LIMIT)
    k = cfg.task.k
    for name in cfg.task.functionals:
        for s in signals:
            cont = isinstance(s, ContinuousSignal) and not isinstance(s, MultiplicativeSignal)
            mult = isinstance(s, MultiplicativeSignal)
            disc = isinstance(s, DiscreteSignal)
            if name in ("upper_F", "lower_F", "upper_F_k", "F_infinity") and cont:
                for kern in kernels:
                    if name == "upper_F":
                        est = cf.upper_F(kern, s, grid, eps)
                    elif name == "lower_F":
                        est = cf.lower_F(kern, s, grid, eps)
                    elif name == "upper_F_k":
                        est = cf.upper_F_k(kern, k, s, grid, eps)
                    else:
                        est = cf.F_infinity(kern, s, grid, tol=eps)
                    rows.append((name, s.label, kern.label, est))
            elif name in ("upper_P", "lower_P", "almost_convergence") and cont:
                fn = {"upper_P": lambda: cf.upper_P(s, grid, eps),
                      "lower_P": lambda: cf.lower_P(s, grid, eps),
                      "almost_convergence": lambda: cf.almost_convergence_test(s, grid, eps)}
                rows.append((name, s.label, "", fn[name]()))
            elif name in ("upper_Q", "lower_Q", "q_summability") and mult:
                fn = {"upper_Q": lambda: ml.upper_Q(s, log_grid, eps),
                      "lower_Q": lambda: ml.lower_Q(s, log_grid, eps),
                      "q_summability": lambda: ml.q_summability_test(s, log_grid, eps)}
                rows.append((name, s.label, "", fn[name]()))
            elif disc and name in ("holder_upper", "holder_lower", "c_infinity_upper",
                                   "c_infinity_lower", "c_infinity_test", "logarithmic",
                                   "banach_upper"):
                fn = {
                    "holder_upper": lambda: hd.holder_upper(s, k, dg.n_max, tol=eps),
                    "holder_lower": lambda: hd.holder_lower(s, k, dg.n_max, tol=eps),
                    "c_infinity_upper": lambda: hd.c_infinity_upper(
                        s, dg.n_max, dg.theta_grid, dg.n_cut, eps),
                    "c_infinity_lower": lambda: hd.c_infinity_lower(
                        s, dg.n_max, dg.theta_grid, dg.n_cut, eps),
                    "c_infinity_test": lambda: hd.c_infinity_test(
                        s, eps, dg.n_max, dg.theta_grid, dg.n_cut),
                    "logarithmic": lambda: hd.logarithmic_method(s, dg.n_max, tol=eps),
                    "banach_upper": lambda: hd.banach_upper(s, n_max=dg.n_max, tol=eps),
                }
                rows.append((name, s.label, "", fn[name]()))
    return rows


# --------------------------------------------------------------------------
# output

def _num(v: float) -> str:
    return f"{float(v):.17g}"


def _report_table(reports: list[TheoremReport]):
    disc_cols, meas_cols = [], []
    for r in reports:
        disc_cols += [k for k in r.discrepancies if k not in disc_cols]
        meas_cols += [k for k in r.measurements if k not in meas_cols]
    header = ["theorem_id", "signal", "kernel", "status", "premise_met"]
    header += [c for d in disc_cols for c in (d, f"tol:{d}")]
    header += [f"meas:{m}" for m in meas_cols] + ["notes"]
    rows = []
    for r in reports:
        row = [r.theorem_id, r.inputs.get("signal", ""), r.inputs.get("kernel", ""), r.status,
               str(r.premise_met).lower()]
        for d in disc_cols:
            if d in r.discrepancies:
                row += [_num(r.discrepancies[d]), _num(r.tolerances[d])]
            else:
                row += ["", ""]
        row += [_num(r.measurements[m]) if m in r.measurements else "" for m in meas_cols]
        row.append("; ".join(r.notes))
        rows.append(row)
    return header, rows


def _functional_table(rows):
    header = ["functional", "signal", "kernel", "kind", "value", "companion_lower",
              "stability_residual", "status", "flags"]
    out = []
    for name, sig, kern, res in rows:
        if isinstance(res, SummabilityVerdict):
            out.append([name, sig, kern, "verdict", _num(res.alpha), _num(res.lower),
                        _num(res.gap), res.status, res.reason])
        else:
            out.append([name, sig, kern, "estimate", _num(res.value), _num(res.companion_lower),
                        _num(res.stability_residual), "", " ".join(res.flags)])
    return header, out


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(header, rows) -> str:
    recs = []
    for row in rows:
        rec = {}
        for h, v in zip(header, row):
            if v == "":
                continue
            try:
                rec[h] = float(v) if h not in ("signal", "kernel", "notes", "flags") else v
            except ValueError:
                rec[h] = v
        recs.append(rec)
    return json.dumps(recs, indent=2) + "\n"


def _traces(items):
    """``(file stem, trace)`` pairs for every sweep trace, in order."""
    out = []
    for i, (tag, obj) in enumerate(items):
        if isinstance(obj, TheoremReport):
            for name, tr in obj.traces.items():
                out.append((f"{i:03d}_{tag}_{name}", tr))
        elif isinstance(obj, FunctionalEstimate):
            out.append((f"{i:03d}_{tag}_sweep", obj.trace))
        elif isinstance(obj, SummabilityVerdict):
            out.append((f"{i:03d}_{tag}_modulus", obj.uniformity_modulus))
    return out


def _safe(tag: str) -> str:
    return "".join(c if c.isalnum() or c in "-._" else "_" for c in tag)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="summalab", description=__doc__.splitlines()[0])
    ap.add_argument("--job", required=True, help="JSON job file")
    ap.add_argument("--out", help="output directory (overrides output.path)")
    ap.add_argument("--format", choices=("csv", "json"), help="report format")
    ap.add_argument("--suite", help="suite id, overrides the job task")
    ap.add_argument("--seed", type=int, default=0, help="reserved; runs are deterministic")
    ap.add_argument("--trace", action="store_true", help="write sweep traces")
    ap.add_argument("--full-scan", action="store_true",
                    help="C_inf uniformity over every n instead of powers of two")
    args = ap.parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        print("config error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg, signals, kernels, grid, log_grid, dg = load_job(Path(args.job))
        if args.suite is not None and args.suite not in SUITES:
            raise ConfigError(f"--suite: unknown suite {args.suite!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    fmt = args.format or cfg.output.format
    out_dir = Path(args.out if args.out is not None else cfg.output.path)
    suite = args.suite or (cfg.task.suite if cfg.task.kind == "suite" else None)
    if cfg.task.kind == "suite" or args.suite is not None:
        if suite is None:
            print("config error: task.suite: missing suite id", file=sys.stderr)
            return EXIT_CONFIG
        try:
            reports = run_suite(suite, signals or None, kernels or None, grid, cfg.tolerances,
                                log_grid=log_grid, discrete=dg, hardy_r=cfg.task.hardy_r,
                                full_scan=args.full_scan)
        except ValueError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        header, rows = _report_table(reports)
        items = [(_safe(r.theorem_id), r) for r in reports]
        stem = "reports"
        statuses = [r.status for r in reports]
        print(f"{suite}: {summarize(reports)}")
    else:
        results = _eval_functionals(cfg, signals, kernels, grid, log_grid, dg)
        header, rows = _functional_table(results)
        items = [(_safe(name), res) for name, _, _, res in results]
        stem = "functionals"
        statuses = []
        print(f"evaluated {len(results)} functional(s)")

    out_dir.mkdir(parents=True, exist_ok=True)
    text = _csv_text(header, rows) if fmt == "csv" else _json_text(header, rows)
    (out_dir / f"{stem}.{fmt}").write_text(text)
    if args.trace:
        tdir = out_dir / "traces"
        tdir.mkdir(exist_ok=True)
        for name, tr in _traces(items):
            (tdir / f"{name}.csv").write_text(
                _csv_text(["parameter", "value"], [[_num(p), _num(v)] for p, v in tr]))

    if "fail" in statuses:
        return EXIT_FAIL
    if "inconclusive" in statuses:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
