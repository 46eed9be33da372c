"""Theorem harness: named suites of checks producing :class:`TheoremReport` lists.

Signals are routed by domain: additive continuous signals feed the
convolution checks, multiplicative ones the Mellin checks and sequences the
discrete checks.  Reports come out in a fixed order (theorem, then signal,
then kernel), so identical inputs give identical report lists.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import convfunc as cf
from . import holder as hd
from . import mellin as ml
from .kernel import Kernel, classify, exponential, gaussian, hardy_kernel
from .report import TheoremReport
from .signal import (ContinuousSignal, DiscreteSignal, GridSpec, MultiplicativeSignal,
                     signal_library)

__all__ = [
    "SUITES",
    "DEFAULT_TOLERANCES",
    "DiscreteGrid",
    "library_signals",
    "library_kernels",
    "run_suite",
    "summarize",
]

DEFAULT_TOLERANCES = {
    "limit": cf.EPS_LIMIT,
    "quadrature": cf.EPS_QUADRATURE,
    "monotone": cf.MONOTONE_SLACK,
    "route": ml.ROUTE_TOL,
    "hardy": 1e-4,
}

_CHECKS = {
    "smoke": ("L3.1",),
    "continuous": ("L3.1", "T4.2", "T5.5-chain", "T5.1"),
    "tauberian": ("T5.6",),
    "kernels": ("T2.6",),
    "mellin": ("L6.1", "T6.5", "T6.7", "T6.9"),
    "discrete": ("S7-chain", "T7.1", "S7-bridge", "T7.2"),
}
_CHECKS["full"] = ("T2.6",) + _CHECKS["continuous"] + _CHECKS["tauberian"] \
    + _CHECKS["mellin"] + _CHECKS["discrete"]
SUITES = tuple(_CHECKS)

MAX_CASES = 200
STRICT_MARGIN = 1e-9


@dataclass(frozen=True)
class DiscreteGrid:
    """Parameters of the discrete estimators.

    ``theta_grid``/``n_cut`` drive ``C_inf``; the bridge check uses its own
    windows ``bridge_theta`` whose logarithms must be geometric, since the
    matching ``Q`` estimate runs on a :class:`GridSpec` in log units.
    """

    n_max: int = hd.N_MAX
    theta_grid: tuple[float, ...] = hd.THETA_GRID
    n_cut: int | None = None
    holder_k: int = 4
    bridge_theta: tuple[float, ...] = (2.0, 4.0, 16.0, 256.0)
    bridge_cut: int = 64
    bridge_step: float = 1e-3

    def bridge_grid(self) -> GridSpec:
        return GridSpec(math.log(self.n_max), self.bridge_step, math.log(self.bridge_cut),
                        tuple(math.log(t) for t in self.bridge_theta))


def library_signals() -> dict[str, list]:
    """The default signal suite of each domain."""
    mult = [signal_library("constant", {"c": 0.7, "domain": "multiplicative"}),
            signal_library("log_cosine", {"domain": "multiplicative"}),
            signal_library("log_block", {"base": 2, "domain": "multiplicative"})]
    cont = [signal_library("constant", {"c": 0.7}),
            signal_library("sinusoid", {"omega": 1.0}),
            ml.wrap_log(mult[1]),
            ml.wrap_log(mult[2]),
            signal_library("convergent_plus_decay", {"alpha": 0.3})]
    disc = [signal_library("constant", {"c": 0.7, "domain": "discrete"}),
            signal_library("log_cosine", {"domain": "discrete"}),
            signal_library("log_block", {"base": 2, "domain": "discrete"}),
            signal_library("alternating", {})]
    return {"continuous": cont, "multiplicative": mult, "discrete": disc}


def library_kernels() -> list[Kernel]:
    return [exponential(1.0), gaussian(1.0)]


# --------------------------------------------------------------------------
# individual checks

def _inputs(signal, kernel=None):
    out = {"signal": signal.label}
    if kernel is not None:
        out["kernel"] = kernel.label
    return out


def _flat_kernels(kernels):
    return [k for k in kernels if classify(k).flat]


def _check_T42(signal, kernel, grid, tol):
    p_up = cf.upper_P(signal, grid, tol["limit"])
    try:
        fi = cf.F_infinity(kernel, signal, grid, slack=tol["monotone"], tol=tol["limit"])
    except cf.NonMonotoneError as exc:
        return TheoremReport("T4.2", "fail", {}, {}, _inputs(signal, kernel),
                             {"upper_P": p_up.value}, (f"non-monotone sweep: {exc}",))
    vals = [v for _, v in fi.trace]
    rise = max([b - a for a, b in zip(vals, vals[1:])], default=0.0)
    disc = {"F_inf_minus_P": fi.value - p_up.value, "max_k_increase": max(rise, 0.0)}
    tols = {"F_inf_minus_P": tol["limit"], "max_k_increase": tol["monotone"]}
    meas = {"F_inf": fi.value, "upper_P": p_up.value, "k_final": fi.trace[-1][0],
            "k_residual": fi.stability_residual}
    rep = TheoremReport("T4.2", "pass", disc, tols, _inputs(signal, kernel), meas)
    status, notes = "pass", list(fi.flags)
    if not rep.within_tolerance:
        status = "fail" if (fi.stable and p_up.stable) else "inconclusive"
    return TheoremReport("T4.2", status, disc, tols, _inputs(signal, kernel), meas,
                         tuple(notes), traces={"k_sweep": fi.trace, "theta_sweep": p_up.trace})


def _check_chain(signal, kernel, grid, tol):
    f_up, f_lo = cf._tail_pair(kernel, signal, grid, tol["limit"])
    p_up, p_lo = cf.p_envelope(signal, grid, tol["limit"])
    disc = {"F_lower_minus_P_lower": max(f_lo.value - p_lo.value, 0.0),
            "P_lower_minus_P_upper": max(p_lo.value - p_up.value, 0.0),
            "P_upper_minus_F_upper": max(p_up.value - f_up.value, 0.0)}
    tols = {k: tol["limit"] for k in disc}
    meas = {"F_lower": f_lo.value, "P_lower": p_lo.value, "P_upper": p_up.value,
            "F_upper": f_up.value}
    ok = all(v <= tols[k] for k, v in disc.items())
    stable = all(e.stable for e in (f_up, f_lo, p_up, p_lo))
    status = "pass" if ok else ("fail" if stable else "inconclusive")
    return TheoremReport("T5.5-chain", status, disc, tols, _inputs(signal, kernel), meas)


def _check_T26(kernel, tol):
    cls = classify(kernel, normalize_tol=tol["quadrature"])
    meas = {"nonnegative": float(cls.nonnegative), "normalized": float(cls.normalized),
            "flat": float(cls.flat), "strict_modulus": float(cls.strict_modulus),
            "wiener": float(cls.wiener), "max_modulus": cls.max_modulus,
            "min_modulus": cls.min_modulus, "zero_candidates": float(len(cls.zero_candidates))}
    notes = list(cls.inconclusive)
    if cls.zero_candidates:
        shown = ", ".join(f"{z:.6g}" for z in cls.zero_candidates[:6])
        notes.append(f"zero candidates: {shown}")
    if not cls.flat:
        return TheoremReport("T2.6", "pass", {}, {}, {"kernel": kernel.label}, meas,
                             tuple(["premise not satisfied"] + notes), premise_met=False)
    # strict modulus means max |fhat| off 0 stays below 1 - margin
    disc = {"modulus_excess": max(cls.max_modulus - (1.0 - STRICT_MARGIN), 0.0)}
    tols = {"modulus_excess": 0.0}
    status = "pass" if cls.strict_modulus else "fail"
    return TheoremReport("T2.6", status, disc, tols, {"kernel": kernel.label}, meas,
                         tuple(notes))


def _check_L61(phi, grid, tol):
    up, lo = ml.q_envelope(phi, grid, tol["limit"], tol["route"])
    du, au = ml.route_values(up)
    dl, al = ml.route_values(lo)
    if math.isnan(au):
        return TheoremReport("L6.1", "pass", {}, {}, _inputs(phi), {"upper_Q": du},
                             ("single route: exact step integration",), premise_met=False)
    disc = {"upper_route_gap": du - au, "lower_route_gap": dl - al}
    tols = {k: tol["route"] for k in disc}
    meas = {"upper_Q": du, "upper_P_W": au, "lower_Q": dl, "lower_P_W": al}
    rep = TheoremReport("L6.1", "pass", disc, tols, _inputs(phi), meas)
    return TheoremReport("L6.1", "pass" if rep.within_tolerance else "fail", disc, tols,
                         _inputs(phi), meas, traces={"theta_sweep": up.trace})


def _check_T65(phi, r, grid, tol):
    f = exponential(r)
    wphi = ml.wrap_log(phi)
    up = ml.upper_Q(phi, grid, tol["limit"])
    try:
        fi = cf.F_infinity(f, wphi, grid, slack=tol["monotone"], tol=tol["limit"])
    except cf.NonMonotoneError as exc:
        return TheoremReport("T6.5", "fail", {}, {}, _inputs(phi, f), {"upper_Q": up.value},
                             (f"non-monotone sweep: {exc}",))
    disc = {"G_inf_minus_Q": fi.value - up.value}
    tols = {"G_inf_minus_Q": tol["limit"]}
    meas = {"G_inf": fi.value, "upper_Q": up.value, "k_final": fi.trace[-1][0]}
    ok = abs(disc["G_inf_minus_Q"]) <= tols["G_inf_minus_Q"]
    status = "pass" if ok else ("fail" if fi.stable and up.stable else "inconclusive")
    return TheoremReport("T6.5", status, disc, tols, _inputs(phi, f), meas, fi.flags,
                         traces={"k_sweep": fi.trace})


def _check_T67(phi, grid, tol):
    eps = tol["limit"]
    v = ml.q_summability_test(phi, grid, eps)
    meas = {"upper_Q": v.upper, "lower_Q": v.lower, "alpha": v.alpha,
            "modulus": v.uniformity_modulus[-1][1]}
    disc = {"gap": v.gap} if v.status == "summable" else {}
    tols = {"gap": eps} if disc else {}
    if v.status == "inconclusive":
        return TheoremReport("T6.7", "inconclusive", disc, tols, _inputs(phi), meas,
                             (v.reason,), traces={"modulus": v.uniformity_modulus})
    note = str(v)
    return TheoremReport("T6.7", "pass", disc, tols, _inputs(phi), meas, (note,),
                         traces={"modulus": v.uniformity_modulus})


def _check_T69(phi, r, grid, tol):
    eps = tol["limit"]
    f = exponential(r)
    g_up, g_lo = cf._tail_pair(f, ml.wrap_log(phi), grid, eps)
    q_up, q_lo = ml.q_envelope(phi, grid, eps, tol["route"])
    inputs = {"signal": phi.label, "kernel": hardy_kernel(r).label}
    meas = {"G_upper": g_up.value, "G_lower": g_lo.value, "Q_upper": q_up.value,
            "Q_lower": q_lo.value}
    if g_up.value - g_lo.value > eps:
        return TheoremReport("T6.9", "pass", {}, {}, inputs, meas,
                             ("premise not satisfied",), premise_met=False)
    alpha = 0.5 * (g_up.value + g_lo.value)
    disc = {"Q_upper_minus_alpha": q_up.value - alpha, "Q_lower_minus_alpha": q_lo.value - alpha}
    tols = {k: eps for k in disc}
    ok = all(abs(v) <= eps for v in disc.values())
    return TheoremReport("T6.9", "pass" if ok else "fail", disc, tols, inputs, meas)


def _check_holder_chain(phi, dg, tol):
    ups, los = hd.holder_chain(phi, dg.holder_k, dg.n_max)
    uv = [e.value for e in ups]
    lv = [e.value for e in los]
    rise_up = max([b - a for a, b in zip(uv, uv[1:])], default=0.0)
    drop_lo = max([a - b for a, b in zip(lv, lv[1:])], default=0.0)
    cross = lv[-1] - uv[-1]
    disc = {"upper_increase": max(rise_up, 0.0), "lower_decrease": max(drop_lo, 0.0),
            "lower_above_upper": max(cross, 0.0)}
    tols = {k: tol["monotone"] for k in disc}
    meas = {f"C_{k + 1}_upper": v for k, v in enumerate(uv)}
    meas.update({f"C_{k + 1}_lower": v for k, v in enumerate(lv)})
    # spread of the nested-tail sups: early-n transients of C^k still decaying
    spread = max(max(v for _, v in e.trace) - min(v for _, v in e.trace) for e in ups + los)
    meas["nested_tail_spread"] = spread
    rep = TheoremReport("S7-chain", "pass", disc, tols, _inputs(phi), meas)
    status, notes = "pass", ()
    if not rep.within_tolerance:
        if spread > tol["monotone"]:
            status, notes = "inconclusive", ("nested tails not settled within slack",)
        else:
            status = "fail"
    return TheoremReport("S7-chain", status, disc, tols, _inputs(phi), meas, notes,
                         traces={"k_sweep_upper": tuple((float(k + 1), v) for k, v in enumerate(uv)),
                                 "k_sweep_lower": tuple((float(k + 1), v) for k, v in enumerate(lv))})


def _c_verdict(phi, dg, tol, full_scan):
    return hd.c_infinity_test(phi, tol["limit"], dg.n_max, dg.theta_grid, dg.n_cut, full_scan)


def _check_T71(phi, verdict, tol):
    eps = tol["limit"]
    meas = {"upper_C_inf": verdict.upper, "lower_C_inf": verdict.lower,
            "alpha": verdict.alpha, "modulus": verdict.uniformity_modulus[-1][1]}
    traces = {"modulus": verdict.uniformity_modulus}
    if verdict.status == "inconclusive":
        return TheoremReport("T7.1", "inconclusive", {}, {}, _inputs(phi), meas,
                             (verdict.reason,), traces=traces)
    disc = {"gap": verdict.gap} if verdict.summable else {}
    tols = {"gap": eps} if disc else {}
    return TheoremReport("T7.1", "pass", disc, tols, _inputs(phi), meas, (str(verdict),),
                         traces=traces)


def _check_bridge(phi, dg, tol):
    eps = tol["limit"]
    c_up, c_lo = hd.c_infinity_envelope(phi, dg.n_max, dg.bridge_theta, dg.bridge_cut, eps)
    q_up, q_lo = ml.q_envelope(hd.bridge_V(phi), dg.bridge_grid(), eps, tol["route"])
    # canonical sum uses phi(i)/i; the shifted form phi(i+1)/i should differ by O(1/n)
    shifted = hd.c_infinity_upper(_shift(phi), dg.n_max - 1, dg.bridge_theta, dg.bridge_cut, eps)
    disc = {"upper_C_inf_minus_upper_Q_V": c_up.value - q_up.value,
            "lower_C_inf_minus_lower_Q_V": c_lo.value - q_lo.value}
    tols = {k: eps for k in disc}
    meas = {"upper_C_inf": c_up.value, "upper_Q_V": q_up.value, "lower_C_inf": c_lo.value,
            "lower_Q_V": q_lo.value, "shift_residual": shifted.value - c_up.value}
    rep = TheoremReport("S7-bridge", "pass", disc, tols, _inputs(phi), meas)
    return TheoremReport("S7-bridge", "pass" if rep.within_tolerance else "fail", disc, tols,
                         _inputs(phi), meas)


def _shift(phi: DiscreteSignal) -> DiscreteSignal:
    gen = phi.generator
    return DiscreteSignal(lambda n: gen(np.asarray(n) + 1), phi.bound, f"{phi.label}(n+1)")


def _check_T72(phi, verdict, dg, tol):
    eps = tol["limit"]
    lg = hd.logarithmic_method(phi, dg.n_max, tol=eps)
    meas = {"log_upper": lg.value, "log_lower": lg.companion_lower,
            "C_inf_alpha": verdict.alpha}
    if not verdict.summable:
        return TheoremReport("T7.2", "pass", {}, {}, _inputs(phi), meas,
                             ("premise not satisfied",), premise_met=False)
    disc = {"log_upper_minus_alpha": lg.value - verdict.alpha,
            "log_lower_minus_alpha": lg.companion_lower - verdict.alpha}
    tols = {k: eps for k in disc}
    ok = all(abs(v) <= eps for v in disc.values())
    status, notes = "pass", ()
    if not ok:
        status = "fail" if lg.stable else "inconclusive"
        if not lg.stable:
            notes = ("logarithmic means still drifting over nested tails",)
    return TheoremReport("T7.2", status, disc, tols, _inputs(phi), meas, notes,
                         traces={"nested_tails": lg.trace})


# --------------------------------------------------------------------------
# suites

def run_suite(suite: str, signals=None, kernels=None, grid: GridSpec | None = None,
              tolerances: dict | None = None, *, log_grid: GridSpec | None = None,
              discrete: DiscreteGrid | None = None, hardy_r: float = 1.0,
              full_scan: bool = False) -> list[TheoremReport]:
    """Run a named suite and return its reports in deterministic order.

    ``signals`` may mix domains; each check takes the ones it applies to.
    ``None`` selects the library suites.  Tolerance keys are ``limit``,
    ``quadrature``, ``monotone``, ``route`` and ``hardy``.
    """
    if suite not in _CHECKS:
        raise ValueError(f"unknown suite {suite!r}; known: {', '.join(SUITES)}")
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in (tolerances or {}).items():
        if k not in tol:
            raise ValueError(f"unknown tolerance {k!r}; known: {', '.join(tol)}")
        tol[k] = float(v)
    if signals is None:
        lib = library_signals()
        signals = lib["continuous"] + lib["multiplicative"] + lib["discrete"]
    kernels = library_kernels() if kernels is None else list(kernels)
    grid = grid or GridSpec()
    log_grid = log_grid or ml.LOG_GRID
    dg = discrete or DiscreteGrid()

    cont = [s for s in signals
            if isinstance(s, ContinuousSignal) and not isinstance(s, MultiplicativeSignal)]
    mult = [s for s in signals if isinstance(s, MultiplicativeSignal)]
    disc = [s for s in signals if isinstance(s, DiscreteSignal)]
    checks = _CHECKS[suite]
    n_cases = len(cont) * max(1, len(kernels)) + len(mult) + len(disc) + len(kernels)
    if n_cases > MAX_CASES:
        raise ValueError(f"{n_cases} cases exceed the limit of {MAX_CASES}")

    flat = _flat_kernels(kernels)
    normalized = [k for k in kernels if abs(k.mass() - 1) <= tol["quadrature"]]
    wiener_flat = [k for k in flat if classify(k).wiener]
    verdicts = {}
    out: list[TheoremReport] = []
    for check in checks:
        if check == "L3.1":
            out += [cf.residual_check(k, s, grid, tol["limit"]) for s in cont for k in normalized]
        elif check == "T4.2":
            out += [_check_T42(s, k, grid, tol) for s in cont for k in flat]
        elif check == "T5.5-chain":
            out += [_check_chain(s, k, grid, tol) for s in cont for k in flat]
        elif check == "T5.6":
            out += [cf.tauberian_check(k, s, grid, tol["limit"]) for s in cont for k in wiener_flat]
        elif check == "T5.1":
            if wiener_flat:
                order = wiener_flat[:1] + [k for k in normalized if k is not wiener_flat[0]]
                out += [cf.wiener_cross_check(s, order, grid, tol["limit"]) for s in cont]
        elif check == "T2.6":
            out += [_check_T26(k, tol) for k in kernels]
        elif check == "L6.1":
            out += [_check_L61(s, log_grid, tol) for s in mult]
        elif check == "T6.5":
            out += [_check_T65(s, hardy_r, log_grid, tol) for s in mult]
        elif check == "T6.7":
            out += [_check_T67(s, log_grid, tol) for s in mult]
        elif check == "T6.9":
            out += [_check_T69(s, hardy_r, log_grid, tol) for s in mult]
        elif check == "S7-chain":
            out += [_check_holder_chain(s, dg, tol) for s in disc]
        elif check in ("T7.1", "T7.2"):
            for i, s in enumerate(disc):
                if i not in verdicts:
                    verdicts[i] = _c_verdict(s, dg, tol, full_scan)
                out.append(_check_T71(s, verdicts[i], tol) if check == "T7.1"
                           else _check_T72(s, verdicts[i], dg, tol))
        elif check == "S7-bridge":
            out += [_check_bridge(s, dg, tol) for s in disc]
    return out


@dataclass(frozen=True)
class SuiteSummary:
    counts: dict = field(default_factory=dict)
    vacuous: int = 0

    def __str__(self):
        parts = [f"{k}={self.counts.get(k, 0)}" for k in ("pass", "fail", "inconclusive")]
        return " ".join(parts) + f" (vacuous passes: {self.vacuous})"


def summarize(reports) -> SuiteSummary:
    """Status counts; passes whose premise was unmet are counted separately."""
    c = Counter(r.status for r in reports)
    vac = sum(1 for r in reports if r.status == "pass" and not r.premise_met)
    return SuiteSummary({k: c.get(k, 0) for k in ("pass", "fail", "inconclusive")}, vac)
