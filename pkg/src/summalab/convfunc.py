"""Additive-side sublinear functionals and summability checks.

``limsup_{x -> inf}`` is estimated by a sup over the tail ``[x_cut, x_max]``
of the grid; the outer ``theta -> inf`` limit of the window functional by
its value at the largest window of the geometric ``theta_grid``.  Every
estimate keeps its sweep so a non-stabilised limit is visible in the trace.
"""
from __future__ import annotations

import numpy as np

from .kernel import (Kernel, classify, convolution_power, convolve,
                     kernel_difference)
from .report import FunctionalEstimate, SummabilityVerdict, TheoremReport
from .signal import ContinuousSignal, GridSpec, build_prefix, window_mean

__all__ = [
    "NonMonotoneError",
    "EPS_LIMIT",
    "EPS_QUADRATURE",
    "upper_F",
    "lower_F",
    "upper_F_k",
    "lower_F_k",
    "F_infinity",
    "p_envelope",
    "upper_P",
    "lower_P",
    "almost_convergence_test",
    "residual_check",
    "tauberian_check",
    "wiener_cross_check",
]

EPS_LIMIT = 2e-2
EPS_QUADRATURE = 1e-6
MONOTONE_SLACK = 1e-3
NESTED_CUTS = 3


class NonMonotoneError(RuntimeError):
    """An iterated sweep increased beyond slack, i.e. quadrature broke down."""


def _nested_extremes(values: np.ndarray, x0: float, step: float):
    """Sup and inf over three nested tails ``[x0 + q L, end]``, q = 0, 1/3, 2/3."""
    n = values.size
    sups, infs = [], []
    for q in range(NESTED_CUTS):
        i = (q * n) // NESTED_CUTS
        tail = values[i:]
        start = x0 + i * step
        sups.append((start, float(np.max(tail))))
        infs.append((start, float(np.min(tail))))
    return sups, infs


def _tail_pair(kernel: Kernel, signal: ContinuousSignal, grid: GridSpec, tol: float):
    conv = convolve(kernel, signal, grid)
    sups, infs = _nested_extremes(conv.values, conv.x0, conv.step)
    name = f"F[{kernel.label}]"

    def build(pairs, upper):
        vals = [v for _, v in pairs]
        resid = abs(vals[-1] - vals[-2])
        spread = max(vals) - min(vals)
        flags = ("unstable",) if spread > tol else ()
        value = vals[0]
        lower = infs[0][1] if upper else value
        return FunctionalEstimate(value, lower, tuple(pairs), resid, grid, flags,
                                  ("upper " if upper else "lower ") + name)

    return build(sups, True), build(infs, False)


def upper_F(kernel: Kernel, signal: ContinuousSignal, grid: GridSpec,
            tol: float = EPS_LIMIT) -> FunctionalEstimate:
    """``limsup (f * phi)(x)`` as a sup over the tail.

    The trace lists sups over three nested tails; if they spread by more
    than ``tol`` the estimate is flagged ``unstable``.  ``companion_lower``
    is the matching liminf estimate.
    """
    return _tail_pair(kernel, signal, grid, tol)[0]


def lower_F(kernel: Kernel, signal: ContinuousSignal, grid: GridSpec,
            tol: float = EPS_LIMIT) -> FunctionalEstimate:
    return _tail_pair(kernel, signal, grid, tol)[1]


def upper_F_k(kernel: Kernel, k: int, signal: ContinuousSignal, grid: GridSpec,
              tol: float = EPS_LIMIT) -> FunctionalEstimate:
    """``limsup (f^{*k} * phi)(x)``: one convolution with the k-th power."""
    return upper_F(convolution_power(kernel, k), signal, grid, tol)


def lower_F_k(kernel: Kernel, k: int, signal: ContinuousSignal, grid: GridSpec,
              tol: float = EPS_LIMIT) -> FunctionalEstimate:
    return lower_F(convolution_power(kernel, k), signal, grid, tol)


def F_infinity(kernel: Kernel, signal: ContinuousSignal, grid: GridSpec,
               k_max: int = 10, eps: float = 1e-3, slack: float = MONOTONE_SLACK,
               tol: float = EPS_LIMIT) -> FunctionalEstimate:
    """Sweep ``k = 1, 2, ...`` until successive upper values differ by ``<= eps``.

    The value is the last upper value of the sweep and ``companion_lower``
    the liminf-side value at the same ``k``.  A sweep that increases by more
    than ``slack`` raises :class:`NonMonotoneError`; reaching ``k_max``
    without convergence is flagged ``not_converged``.
    """
    if k_max < 4:
        raise ValueError(f"k_max must be >= 4, got {k_max!r}")
    trace = []
    upper = lower = None
    resid = float("inf")
    flags = []
    for k in range(1, k_max + 1):
        up, lo = _tail_pair(convolution_power(kernel, k), signal, grid, tol)
        if upper is not None:
            if up.value > upper + slack:
                raise NonMonotoneError(
                    f"F_{k} = {up.value!r} exceeds F_{k - 1} = {upper!r} by more than {slack!r}"
                )
            resid = abs(upper - up.value)
        trace.append((float(k), up.value))
        upper, lower = up.value, lo.value
        if "unstable" in up.flags or "unstable" in lo.flags:
            if "unstable" not in flags:
                flags.append("unstable")
        if resid <= eps:
            break
    else:
        flags.append("not_converged")
    return FunctionalEstimate(upper, lower, tuple(trace), resid, grid, tuple(flags),
                              f"F_inf[{kernel.label}]")


# --------------------------------------------------------------------------
# window functional

def _window_sweep(table, grid: GridSpec, start: float):
    ups, los = [], []
    for theta in grid.theta_grid:
        xs = grid.tail_nodes(start)
        xs = xs[xs + theta <= grid.x_max + 1e-9 * grid.step]
        means = window_mean(table, xs, theta)
        ups.append((theta, float(np.max(means))))
        los.append((theta, float(np.min(means))))
    return ups, los


def _window_estimates(ups, los, grid, tol, slack, name):
    def build(pairs, sign):
        vals = [v for _, v in pairs]
        flags = []
        resid = abs(vals[-1] - vals[-2]) if len(vals) > 1 else 0.0
        steps = sign * np.diff(vals)
        if steps.size and steps[-1] > tol:
            flags.append("unstable")
        if steps.size and np.max(steps) > slack:
            flags.append("non_monotone")
        return vals[-1], resid, tuple(flags)

    uv, ur, uf = build(ups, 1.0)
    lv, lr, lf = build(los, -1.0)
    upper = FunctionalEstimate(uv, lv, tuple(ups), ur, grid, uf, "upper " + name)
    lower = FunctionalEstimate(lv, lv, tuple(los), lr, grid, lf, "lower " + name)
    return upper, lower


def p_envelope(signal: ContinuousSignal, grid: GridSpec, tol: float = EPS_LIMIT,
               slack: float = MONOTONE_SLACK, table=None):
    """Upper and lower window functionals ``(P-bar, P-under)`` in one sweep.

    For each window ``theta_j`` the sup/inf of ``(1/theta) int_x^{x+theta}``
    over grid points ``x`` in ``[x_cut, x_max - theta]``; the estimate is the
    entry at the largest window.  Growth of the sup over the last step by
    more than ``tol`` is flagged ``unstable``, any growth beyond ``slack``
    ``non_monotone`` (diagnostic only).
    """
    if table is None:
        table = build_prefix(signal, grid, start=grid.x_cut)
    ups, los = _window_sweep(table, grid, grid.x_cut)
    return _window_estimates(ups, los, grid, tol, slack, "P")


def upper_P(signal: ContinuousSignal, grid: GridSpec, tol: float = EPS_LIMIT) -> FunctionalEstimate:
    return p_envelope(signal, grid, tol)[0]


def lower_P(signal: ContinuousSignal, grid: GridSpec, tol: float = EPS_LIMIT) -> FunctionalEstimate:
    return p_envelope(signal, grid, tol)[1]


def _uniformity_modulus(table, grid: GridSpec, start: float, alpha: float):
    out = []
    for theta in grid.theta_grid:
        xs = grid.tail_nodes(start)
        xs = xs[xs + theta <= grid.x_max + 1e-9 * grid.step]
        dev = np.abs(window_mean(table, xs, theta) - alpha)
        out.append((theta, float(np.max(dev))))
    return tuple(out)


def _verdict(method, upper, lower, modulus, eps, unstable=False):
    alpha = 0.5 * (upper.value + lower.value)
    gap = upper.value - lower.value
    if gap > eps:
        return SummabilityVerdict(method, "not_summable", alpha, gap, upper.value,
                                  lower.value, eps, "", modulus)
    if modulus and modulus[-1][1] > eps:
        return SummabilityVerdict(
            method, "inconclusive", alpha, gap, upper.value, lower.value, eps,
            f"gap {gap:.3g} <= eps but uniformity modulus {modulus[-1][1]:.3g} > eps "
            "at the largest window (grid too short)", modulus)
    if unstable:
        return SummabilityVerdict(method, "inconclusive", alpha, gap, upper.value,
                                  lower.value, eps, "unstable sub-estimate", modulus)
    return SummabilityVerdict(method, "summable", alpha, gap, upper.value, lower.value,
                              eps, "", modulus)


def almost_convergence_test(signal: ContinuousSignal, grid: GridSpec,
                            eps: float = EPS_LIMIT, origin: float = 0.0) -> SummabilityVerdict:
    """Almost convergence: window means converge to ``alpha`` uniformly in ``x >= origin``.

    ``alpha`` is the midpoint of the tail envelope.  Summable needs both the
    envelope gap and the uniformity modulus at the largest window within
    ``eps``; a small gap with a large modulus is inconclusive.
    """
    table = build_prefix(signal, grid, start=origin)
    up, lo = p_envelope(signal, grid, eps, table=table)
    alpha = 0.5 * (up.value + lo.value)
    modulus = _uniformity_modulus(table, grid, origin, alpha)
    return _verdict("P", up, lo, modulus, eps)


# --------------------------------------------------------------------------
# theorem checks

def _labels(signal, kernel=None):
    out = {"signal": signal.label}
    if kernel is not None:
        out["kernel"] = kernel.label
    return out


def residual_check(kernel: Kernel, signal: ContinuousSignal, grid: GridSpec,
                   eps: float = EPS_LIMIT) -> TheoremReport:
    """Window functional of ``f * phi - phi`` vanishes; ``P(f * phi) = P(phi)``."""
    if abs(kernel.mass() - 1) > 1e-6:
        raise ValueError(f"kernel {kernel.label!r} is not normalised")
    conv = convolve(kernel, signal, grid)
    resid = conv - signal
    r_up, r_lo = p_envelope(resid, grid, eps)
    c_up, _ = p_envelope(conv, grid, eps)
    s_up, _ = p_envelope(signal, grid, eps)
    disc = {
        "upper_P_residual": r_up.value,
        "lower_P_residual": r_lo.value,
        "P_conv_minus_P": c_up.value - s_up.value,
    }
    tols = {k: eps for k in disc}
    ok = all(abs(v) <= eps for v in disc.values())
    status = "pass" if ok else "fail"
    notes = ()
    if not ok and not (r_up.stable and r_lo.stable and c_up.stable and s_up.stable):
        status, notes = "inconclusive", ("unstable window sweep",)
    return TheoremReport(
        "L3.1", status, disc, tols, _labels(signal, kernel),
        {"upper_P": s_up.value, "upper_P_conv": c_up.value}, notes,
        traces={"residual_theta_sweep": r_up.trace},
    )


def _summable(up: FunctionalEstimate, lo: FunctionalEstimate, eps: float):
    return up.value - lo.value <= eps, 0.5 * (up.value + lo.value)


def _translate_sweep(kernel: Kernel, signal: ContinuousSignal, grid: GridSpec, shifts):
    """Tail sup of ``|((f_s - f) * phi)(x)|`` for each shift ``s``.

    ``f_s * phi`` is ``f * phi`` moved by ``s``, so one convolution serves the
    whole sweep.  Shifts are rounded to the grid step.
    """
    conv = convolve(kernel, signal, grid)
    v = conv.values
    out = []
    for s in shifts:
        m = int(round(abs(float(s)) / conv.step))
        if m == 0 or m >= v.size:
            raise ValueError(f"shift {s!r} must be nonzero and shorter than the tail")
        out.append((m * conv.step, float(np.max(np.abs(v[m:] - v[:-m])))))
    return out


def tauberian_check(kernel: Kernel, signal: ContinuousSignal, grid: GridSpec,
                    eps: float = EPS_LIMIT, shifts=None) -> TheoremReport:
    """Tauberian condition through the witness ``g = f - f^{*2}``.

    The condition holds when ``g * phi`` tends to 0 on the tail.  The report
    passes when ``[P summable and condition]`` and ``[F summable to the same
    value]`` agree on this signal.

    With ``shifts`` the translate family ``g_s = f_s - f`` is swept as well,
    an estimator-level view of the shift-invariance condition.  Its outcome is
    reported next to the main one (measurement ``translate_holds``) and a note
    flags any disagreement; it does not change the status.
    """
    cls = classify(kernel)
    if not (cls.flat and cls.wiener):
        raise ValueError(f"kernel {kernel.label!r} must be flat and Wiener")
    witness = kernel_difference(kernel, convolution_power(kernel, 2),
                                f"{kernel.label}-{kernel.label}^*2")
    t_up, t_lo = _tail_pair(witness, signal, grid, eps)
    f_up, f_lo = _tail_pair(kernel, signal, grid, eps)
    p_up, p_lo = p_envelope(signal, grid, eps)
    condition = abs(t_up.value) <= eps and abs(t_lo.value) <= eps
    p_ok, p_alpha = _summable(p_up, p_lo, eps)
    f_ok, f_alpha = _summable(f_up, f_lo, eps)
    left = p_ok and condition
    right = f_ok and abs(f_alpha - p_alpha) <= eps
    meas = {
        "condition_upper": t_up.value, "condition_lower": t_lo.value,
        "F_upper": f_up.value, "F_lower": f_lo.value,
        "P_upper": p_up.value, "P_lower": p_lo.value,
        "P_summable": float(p_ok), "F_summable": float(f_ok),
        "condition_holds": float(condition),
    }
    disc, tols = {}, {}
    if p_ok and f_ok:
        disc["alpha_mismatch"] = f_alpha - p_alpha
        tols["alpha_mismatch"] = eps
    notes = [f"condition {'holds' if condition else 'fails'}",
             f"P {'summable' if p_ok else 'not summable'}",
             f"F {'summable' if f_ok else 'not summable'}"]
    traces = {"P_theta_sweep": p_up.trace}
    if shifts is not None:
        sweep = _translate_sweep(kernel, signal, grid, shifts)
        worst = max(v for _, v in sweep)
        holds = worst <= eps
        meas["translate_max"] = worst
        meas["translate_holds"] = float(holds)
        traces["translate_sweep"] = tuple(sweep)
        if holds != condition:
            notes.append("translate sweep disagrees with the f - f^*2 witness")
    status = "pass" if left == right else "fail"
    if not all(e.stable for e in (t_up, t_lo, f_up, f_lo, p_up, p_lo)):
        status = "inconclusive" if status == "fail" else status
        notes.append("unstable sub-estimate")
    return TheoremReport("T5.6", status, disc, tols, _labels(signal, kernel), meas,
                         tuple(notes), traces=traces)


def wiener_cross_check(signal: ContinuousSignal, kernels: list[Kernel], grid: GridSpec,
                       eps: float = EPS_LIMIT) -> TheoremReport:
    """If the first (Wiener) kernel sums ``phi`` to ``alpha``, so does every other one."""
    if not kernels:
        raise ValueError("need at least one kernel")
    head = kernels[0]
    if not classify(head).wiener:
        raise ValueError(f"first kernel {head.label!r} must be a Wiener kernel")
    up, lo = _tail_pair(head, signal, grid, eps)
    ok, alpha = _summable(up, lo, eps)
    inputs = {"signal": signal.label, "kernel": ",".join(k.label for k in kernels)}
    meas = {f"F_upper[{head.label}]": up.value, f"F_lower[{head.label}]": lo.value}
    if not ok:
        return TheoremReport("T5.1", "pass", {}, {}, inputs, meas,
                             ("premise not satisfied",), premise_met=False)
    disc = {}
    for k in kernels[1:]:
        ku, kl = _tail_pair(k, signal, grid, eps)
        meas[f"F_upper[{k.label}]"] = ku.value
        meas[f"F_lower[{k.label}]"] = kl.value
        disc[f"deviation[{k.label}]"] = max(abs(ku.value - alpha), abs(kl.value - alpha))
    tols = {k: eps for k in disc}
    meas["alpha"] = alpha
    status = "pass" if all(v <= eps for v in disc.values()) else "fail"
    return TheoremReport("T5.1", status, disc, tols, inputs, meas)
