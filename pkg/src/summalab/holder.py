"""Discrete side: Cesaro/Holder means, C_inf, logarithmic and Banach-limit bounds.

All sums run through compensated (Neumaier) prefix tables stored as
double-double pairs, so window sums are differences of nearly exact
partial sums even at ``n_max = 2**22``.  Harmonic-weighted means are
normalised by the exact weight ``sum 1/i`` of their window; that weight is
``log theta + O(1/n)`` and makes constants come out exact.
"""
from __future__ import annotations

import math

import numpy as np

from ._accum import neumaier_prefix as _neumaier
from ._accum import row_sums as _row_sums
from .convfunc import EPS_LIMIT, NESTED_CUTS, _verdict
from .report import FunctionalEstimate, SummabilityVerdict
from .signal import DiscreteSignal, MultiplicativeSignal, SequenceSignal

__all__ = [
    "N_MAX",
    "THETA_GRID",
    "DiscreteEstimate",
    "compensated_prefix",
    "cesaro",
    "cesaro_power",
    "holder_upper",
    "holder_lower",
    "holder_chain",
    "c_infinity_upper",
    "c_infinity_lower",
    "c_infinity_envelope",
    "c_infinity_test",
    "logarithmic_method",
    "banach_upper",
    "StepSignal",
    "bridge_V",
    "bridge_V1",
]

N_MAX = 2**22
# theta = 4^j keeps base-2 log blocks whole; log(4^9) is within 0.7% of 4 pi
THETA_GRID = tuple(float(4**j) for j in range(1, 10))
V1_STEP = 2.0**-10


class DiscreteEstimate(FunctionalEstimate):
    """A :class:`FunctionalEstimate` whose sweep parameters are integers (or ``theta``)."""


class _Prefix:
    """Double-double prefix sums; ``diff(a, b)`` is ``sum x[a:b]`` (0-based)."""

    def __init__(self, x: np.ndarray):
        self.hi, self.lo = _neumaier(np.ascontiguousarray(x, dtype=float))

    def total(self, m):
        return self.hi[m] + self.lo[m]

    def diff(self, a, b):
        return (self.hi[b] - self.hi[a]) + (self.lo[b] - self.lo[a])


def compensated_prefix(x) -> np.ndarray:
    """``S[0] = 0, S[m] = x[0] + ... + x[m-1]`` with Neumaier compensation."""
    p = _Prefix(np.asarray(x, dtype=float))
    return p.hi + p.lo


def _values(phi, n_max: int) -> np.ndarray:
    if isinstance(phi, np.ndarray):
        if phi.size < n_max:
            raise ValueError(f"need {n_max} values, got {phi.size}")
        return phi[:n_max].astype(float)
    return phi.values(n_max)


def _cesaro_values(x: np.ndarray) -> np.ndarray:
    p = _Prefix(x)
    n = np.arange(1, x.size + 1, dtype=float)
    return p.diff(0, np.arange(1, x.size + 1)) / n


def cesaro(phi: DiscreteSignal, n_max: int) -> SequenceSignal:
    """``(C phi)(n) = (1/n) sum_{i<=n} phi(i)`` for ``n <= n_max``."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max!r}")
    x = _values(phi, n_max)
    return SequenceSignal(_cesaro_values(x), f"C[{phi.label}]", phi.bound)


def cesaro_power(phi, k: int, n_max: int) -> np.ndarray:
    """``C^k phi`` on ``1..n_max`` by ``k`` literal Cesaro passes."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k!r}")
    x = _values(phi, n_max)
    for _ in range(k):
        x = _cesaro_values(x)
    return x


def _geometric_cuts(n_cut: int, n_max: int) -> list[int]:
    ratio = n_max / n_cut
    return [max(n_cut, int(round(n_cut * ratio ** (q / NESTED_CUTS)))) for q in range(NESTED_CUTS)]


def _tail_extremes(values: np.ndarray, n_cut: int, tol: float, name: str, grid):
    """Nested-tail sup/inf of ``values[n-1]`` over ``n in [c, n_max]``."""
    n_max = values.size
    cuts = _geometric_cuts(n_cut, n_max)
    sups = [(float(c), float(np.max(values[c - 1:]))) for c in cuts]
    infs = [(float(c), float(np.min(values[c - 1:]))) for c in cuts]

    def build(pairs, is_upper):
        vals = [v for _, v in pairs]
        flags = ("unstable",) if max(vals) - min(vals) > tol else ()
        lower = infs[0][1]
        return DiscreteEstimate(vals[0], lower if is_upper else vals[0], tuple(pairs),
                                abs(vals[-1] - vals[-2]), grid, flags,
                                ("upper " if is_upper else "lower ") + name)

    return build(sups, True), build(infs, False)


def _default_cut(n_max: int) -> int:
    return max(1, n_max // 1024)


def holder_upper(phi, k: int, n_max: int = N_MAX, n_cut: int | None = None,
                 tol: float = EPS_LIMIT) -> DiscreteEstimate:
    """``limsup C^k phi`` over the tail ``[n_cut, n_max]`` (default cut ``n_max/1024``).

    The trace holds sups over three geometrically nested tails;
    ``companion_lower`` is the matching liminf.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k!r}")
    n_cut = _default_cut(n_max) if n_cut is None else int(n_cut)
    vals = cesaro_power(phi, k, n_max)
    return _tail_extremes(vals, n_cut, tol, f"C_{k}", {"n_max": n_max, "n_cut": n_cut})[0]


def holder_lower(phi, k: int, n_max: int = N_MAX, n_cut: int | None = None,
                 tol: float = EPS_LIMIT) -> DiscreteEstimate:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k!r}")
    n_cut = _default_cut(n_max) if n_cut is None else int(n_cut)
    vals = cesaro_power(phi, k, n_max)
    return _tail_extremes(vals, n_cut, tol, f"C_{k}", {"n_max": n_max, "n_cut": n_cut})[1]


def holder_chain(phi, k_max: int = 6, n_max: int = N_MAX, n_cut: int | None = None,
                 tol: float = EPS_LIMIT):
    """Upper and lower Holder estimates for ``k = 1..k_max`` from one pass chain."""
    n_cut = _default_cut(n_max) if n_cut is None else int(n_cut)
    x = _values(phi, n_max)
    uppers, lowers = [], []
    for k in range(1, k_max + 1):
        x = _cesaro_values(x)
        up, lo = _tail_extremes(x, n_cut, tol, f"C_{k}", {"n_max": n_max, "n_cut": n_cut})
        uppers.append(up)
        lowers.append(lo)
    return uppers, lowers


# --------------------------------------------------------------------------
# C_inf

def _harmonic_tables(x: np.ndarray):
    i = np.arange(1, x.size + 1, dtype=float)
    return _Prefix(x / i), _Prefix(1.0 / i)


def _c_window(num: _Prefix, den: _Prefix, n: np.ndarray, theta: float) -> np.ndarray:
    # i in [n, floor(theta n)], prefix indices n-1 .. floor(theta n)
    top = np.floor(theta * n * (1 + 1e-15)).astype(np.int64)
    return num.diff(n - 1, top) / den.diff(n - 1, top)


def _default_theta_cut(n_max: int, theta_grid) -> int:
    return max(1, int(n_max // (2 * theta_grid[-1])))


def _check_theta(n_max: int, theta_grid, n_cut: int) -> tuple[float, ...]:
    th = tuple(float(t) for t in theta_grid)
    if not th or th[0] <= 1 or any(b <= a for a, b in zip(th, th[1:])):
        raise ValueError("theta_grid must be increasing with theta_0 > 1")
    if th[-1] * n_cut > n_max:
        raise ValueError(
            f"theta_grid: theta_J * n_cut = {th[-1] * n_cut!r} exceeds n_max = {n_max!r}"
        )
    return th


def c_infinity_envelope(phi, n_max: int = N_MAX, theta_grid=THETA_GRID,
                        n_cut: int | None = None, tol: float = EPS_LIMIT):
    """Upper and lower ``C_inf`` functionals.

    For each ``theta`` the sup/inf over integers ``n`` in
    ``[n_cut, n_max / theta]`` of the harmonic mean of ``phi`` over
    ``[n, theta n]``; the estimate is the entry at the largest ``theta``.
    Default ``n_cut = n_max / (2 theta_J)``, one octave of inner ``n``.
    """
    n_cut = _default_theta_cut(n_max, theta_grid) if n_cut is None else int(n_cut)
    th = _check_theta(n_max, theta_grid, n_cut)
    num, den = _harmonic_tables(_values(phi, n_max))
    ups, los = [], []
    for t in th:
        n = np.arange(n_cut, int(n_max // t) + 1, dtype=np.int64)
        m = _c_window(num, den, n, t)
        ups.append((t, float(np.max(m))))
        los.append((t, float(np.min(m))))
    grid = {"n_max": n_max, "n_cut": n_cut, "theta_grid": th}
    return _sweep_estimates(ups, los, grid, tol, "C_inf")


def _sweep_estimates(ups, los, grid, tol, name):
    def build(pairs, sign, lower):
        vals = [v for _, v in pairs]
        steps = sign * np.diff(vals)
        flags = []
        if steps.size and steps[-1] > tol:
            flags.append("unstable")
        if steps.size and np.max(steps) > 1e-3:
            flags.append("non_monotone")
        resid = abs(vals[-1] - vals[-2]) if len(vals) > 1 else 0.0
        return vals[-1], resid, tuple(flags)

    uv, ur, uf = build(ups, 1.0, False)
    lv, lr, lf = build(los, -1.0, True)
    return (DiscreteEstimate(uv, lv, tuple(ups), ur, grid, uf, "upper " + name),
            DiscreteEstimate(lv, lv, tuple(los), lr, grid, lf, "lower " + name))


def c_infinity_upper(phi, n_max: int = N_MAX, theta_grid=THETA_GRID,
                     n_cut: int | None = None, tol: float = EPS_LIMIT) -> DiscreteEstimate:
    return c_infinity_envelope(phi, n_max, theta_grid, n_cut, tol)[0]


def c_infinity_lower(phi, n_max: int = N_MAX, theta_grid=THETA_GRID,
                     n_cut: int | None = None, tol: float = EPS_LIMIT) -> DiscreteEstimate:
    return c_infinity_envelope(phi, n_max, theta_grid, n_cut, tol)[1]


def c_infinity_test(phi, eps: float = EPS_LIMIT, n_max: int = N_MAX,
                    theta_grid=THETA_GRID, n_cut: int | None = None,
                    full_scan: bool = False) -> SummabilityVerdict:
    """``C_inf`` summability with uniformity over every ``n >= 1``.

    ``alpha`` is the midpoint of the envelope.  The uniformity modulus at
    each ``theta`` is the sup of ``|mean - alpha|`` over ``n`` in
    ``{1, 2, 4, ...}`` up to ``n_max / theta``, or over all such ``n`` with
    ``full_scan``.
    """
    up, lo = c_infinity_envelope(phi, n_max, theta_grid, n_cut, eps)
    num, den = _harmonic_tables(_values(phi, n_max))
    alpha = 0.5 * (up.value + lo.value)
    modulus = []
    for t in up.grid["theta_grid"]:
        top = int(n_max // t)
        if full_scan:
            n = np.arange(1, top + 1, dtype=np.int64)
        else:
            n = 2 ** np.arange(int(math.floor(math.log2(top))) + 1, dtype=np.int64)
        modulus.append((t, float(np.max(np.abs(_c_window(num, den, n, t) - alpha)))))
    return _verdict("C_inf", up, lo, tuple(modulus), eps)


def logarithmic_method(phi, n_max: int = N_MAX, n_cut: int | None = None,
                       tol: float = EPS_LIMIT) -> DiscreteEstimate:
    """Tail limsup (``value``) and liminf (``companion_lower``) of the logarithmic means.

    The mean at ``n`` is ``sum_{i<=n} phi(i)/i`` divided by ``sum_{i<=n} 1/i``.
    """
    if n_max < 2:
        raise ValueError(f"n_max must be >= 2, got {n_max!r}")
    n_cut = _default_cut(n_max) if n_cut is None else int(n_cut)
    num, den = _harmonic_tables(_values(phi, n_max))
    m = np.arange(1, n_max + 1)
    means = num.diff(0, m) / den.diff(0, m)
    return _tail_extremes(means, n_cut, tol, "log", {"n_max": n_max, "n_cut": n_cut})[0]


def banach_upper(phi, k_grid=tuple(2**j for j in range(10)), n_max: int = N_MAX,
                 n_cut: int | None = None, tol: float = EPS_LIMIT) -> DiscreteEstimate:
    """Discrete window functional: ``sup_n (1/k) sum_{i=n}^{n+k-1} phi(i)`` at the largest ``k``.

    ``n`` runs over ``[n_cut, n_max - k + 1]``; the trace is the ``k``-sweep.
    """
    n_cut = _default_cut(n_max) if n_cut is None else int(n_cut)
    ks = [int(k) for k in k_grid]
    if ks[-1] + n_cut > n_max:
        raise ValueError(f"k_grid: k_J + n_cut = {ks[-1] + n_cut} exceeds n_max = {n_max}")
    p = _Prefix(_values(phi, n_max))
    ups, los = [], []
    for k in ks:
        n = np.arange(n_cut, n_max - k + 2, dtype=np.int64)
        w = p.diff(n - 1, n - 1 + k) / k
        ups.append((float(k), float(np.max(w))))
        los.append((float(k), float(np.min(w))))
    grid = {"n_max": n_max, "n_cut": n_cut, "k_grid": tuple(ks)}
    return _sweep_estimates(ups, los, grid, tol, "B")[0]


# --------------------------------------------------------------------------
# bridges

class StepSignal(MultiplicativeSignal):
    """``(V phi)(x) = phi(floor(x) + 1)`` for ``x >= 0``.

    Keeps the underlying sequence so that ``dt/t`` integrals over whole
    cells can be taken exactly (:meth:`log_prefix`).
    """

    def __init__(self, seq: DiscreteSignal):
        object.__setattr__(self, "sequence", seq)

        def gen(x):
            x = np.asarray(x, dtype=float)
            if x.size and np.min(x) < 0:
                raise ValueError("V phi is defined for x >= 0")
            return seq(np.floor(x).astype(np.int64) + 1)

        super().__init__(gen, seq.bound, f"V[{seq.label}]",
                         lambda u: gen(np.exp(np.asarray(u, dtype=float))))

    def log_prefix(self, u: np.ndarray) -> np.ndarray:
        """``int_1^{e^u} V phi(t) dt/t`` at increasing nodes ``u >= 0``, exactly per cell."""
        u = np.asarray(u, dtype=float)
        t = np.exp(u)
        top = int(math.floor(t[-1])) + 1
        m = np.arange(1, top + 1, dtype=float)
        # cell [m, m+1) carries phi(m+1) with weight log(1 + 1/m)
        cells = _Prefix(self.sequence.values(top + 1)[1:] * np.log1p(1.0 / m))
        k = np.floor(t * (1 + 1e-15)).astype(np.int64)
        k = np.maximum(k, 1)
        partial = self.sequence(k + 1) * (u - np.log(k))
        return cells.total(k - 1) + partial


def bridge_V(phi: DiscreteSignal) -> StepSignal:
    """Step extension ``x -> phi(floor(x) + 1)``."""
    return StepSignal(phi)


def bridge_V1(phi: MultiplicativeSignal, step: float = V1_STEP) -> DiscreteSignal:
    """``(V1 phi)(n) = int_{n-1}^n phi(x) dx`` by a compensated midpoint rule.

    The default dyadic step makes cell sums of constants exact, hence
    ``V1(V(phi)) == phi`` bit for bit.
    """
    per = int(round(1.0 / step))
    if abs(per * step - 1.0) > 1e-15:
        raise ValueError("step must divide 1")
    offs = (np.arange(per) + 0.5) * step

    def gen(n):
        n = np.asarray(n, dtype=np.int64)
        flat = n.reshape(-1)
        out = np.empty(flat.size)
        for lo in range(0, flat.size, 4096):
            block = flat[lo:lo + 4096]
            mids = (block[:, None] - 1).astype(float) + offs[None, :]
            out[lo:lo + 4096] = _row_sums(np.asarray(phi(mids), dtype=float)) * step
        return out.reshape(n.shape)

    return DiscreteSignal(gen, phi.bound, f"V1[{phi.label}]")
