"""Bounded test signals and prefix-sum window means.

Signals are pure, vectorised generators together with a declared sup-norm
bound.  Every evaluation is checked against that bound, so a generator that
escapes its envelope fails loudly instead of corrupting a limit estimate.

Continuous signals live on the real line (or on ``(0, inf)`` for the
multiplicative side), discrete signals on the positive integers.  The shared
numerical primitive is :class:`PrefixTable`: a midpoint-rule cumulative
integral from which any window mean costs O(1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from ._accum import neumaier_prefix

__all__ = [
    "BoundViolation",
    "WindowRangeError",
    "DegenerateWindowError",
    "ContinuousSignal",
    "MultiplicativeSignal",
    "GridSignal",
    "DiscreteSignal",
    "SequenceSignal",
    "GridSpec",
    "PrefixTable",
    "build_prefix",
    "window_mean",
    "signal_library",
    "SIGNAL_NAMES",
]

# relative slack on the declared bound; sampled outputs carry rounding noise
_BOUND_SLACK = 1e-9
# fractional grid indices closer than this to an integer are snapped
_SNAP = 1e-9


class BoundViolation(ValueError):
    """A generator returned a value outside its declared bound."""


class WindowRangeError(ValueError):
    """A window leaves the range covered by a prefix table."""


class DegenerateWindowError(ValueError):
    """A window is shorter than the quadrature step."""


def _check_bound(values: np.ndarray, bound: float, label: str) -> None:
    if values.size == 0:
        return
    peak = float(np.max(np.abs(values)))
    if not peak <= bound * (1.0 + _BOUND_SLACK) + _BOUND_SLACK:
        raise BoundViolation(
            f"signal {label!r} reached |value| = {peak!r} above its bound {bound!r}"
        )


class _Arithmetic:
    """Pointwise linear combinations that keep the concrete signal family."""

    generator: Callable
    bound: float
    label: str

    def _combine(self, other, op, sym, bound):
        cls = _result_class(self)
        if isinstance(other, _Arithmetic):
            f, g = self.generator, other.generator
            out = cls(lambda x: op(f(x), g(x)), bound(other.bound),
                      f"({self.label} {sym} {other.label})")
            return _with_log(out, self, lambda lf: _log_pair(lf, other, op))
        c = float(other)
        f = self.generator
        out = cls(lambda x: op(f(x), c), bound(abs(c)), f"({self.label} {sym} {c!r})")
        return _with_log(out, self, lambda lf: (lambda u: op(lf(u), c)))

    def __add__(self, other):
        return self._combine(other, np.add, "+", lambda b: self.bound + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract, "-", lambda b: self.bound + b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        c = float(c)
        f = self.generator
        cls = _result_class(self)
        out = cls(lambda x: c * np.asarray(f(x), dtype=float), abs(c) * self.bound,
                  f"{c!r}*{self.label}")
        return _with_log(out, self, lambda lf: (lambda u: c * np.asarray(lf(u), dtype=float)))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def _log_pair(lf, other, op):
    lg = getattr(other, "log_generator", None)
    if lg is None:
        return None
    return lambda u: op(lf(u), lg(u))


def _with_log(out, src, make):
    # carry the log-coordinate form through arithmetic when both sides have one
    lf = getattr(src, "log_generator", None)
    if not isinstance(out, MultiplicativeSignal) or lf is None:
        return out
    lg = make(lf)
    if lg is None:
        return out
    return MultiplicativeSignal(out.generator, out.bound, out.label, lg)


def _result_class(sig):
    # sampled signals lose their grid under arithmetic
    if isinstance(sig, GridSignal):
        return ContinuousSignal
    if isinstance(sig, SequenceSignal):
        return DiscreteSignal
    return type(sig)


@dataclass(frozen=True, eq=False)
class ContinuousSignal(_Arithmetic):
    """A bounded function on the real line.

    ``generator`` must accept a float ndarray and return values of the same
    shape (a scalar is broadcast).  It is called only through
    :meth:`__call__`, which enforces ``|value| <= bound``.
    """

    generator: Callable[[np.ndarray], np.ndarray]
    bound: float
    label: str = "signal"

    def __post_init__(self):
        if not (self.bound >= 0 and math.isfinite(self.bound)):
            raise ValueError(f"bound must be finite and >= 0, got {self.bound!r}")

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        vals = np.broadcast_to(np.asarray(self.generator(arr), dtype=float), arr.shape)
        _check_bound(vals, self.bound, self.label)
        if np.ndim(x) == 0:
            return float(vals)
        return np.array(vals, dtype=float)


@dataclass(frozen=True, eq=False)
class MultiplicativeSignal(ContinuousSignal):
    """A bounded function on ``(0, inf)``; same contract as the additive kind.

    ``log_generator`` optionally gives ``u -> phi(e^u)`` directly, so the
    log-coordinate image can be evaluated far past ``exp`` overflow.
    """

    log_generator: Callable[[np.ndarray], np.ndarray] | None = None


class GridSignal(ContinuousSignal):
    """Samples on a uniform grid, linearly interpolated in between.

    Produced by convolutions.  ``values[i]`` is the signal at
    ``x0 + i * step``; evaluation outside ``[x0, x_end]`` raises.
    """

    def __init__(self, x0: float, step: float, values: np.ndarray, label: str,
                 bound: float | None = None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("a grid signal needs at least two samples")
        object.__setattr__(self, "x0", float(x0))
        object.__setattr__(self, "step", float(step))
        object.__setattr__(self, "values", values)
        if bound is None:
            bound = float(np.max(np.abs(values)))
        super().__init__(self._interp, float(bound), label)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.step * np.arange(self.values.size)

    @property
    def x_end(self) -> float:
        return self.x0 + self.step * (self.values.size - 1)

    def _interp(self, x: np.ndarray) -> np.ndarray:
        s = (np.asarray(x, dtype=float) - self.x0) / self.step
        last = self.values.size - 1
        if np.any(s < -_SNAP) or np.any(s > last + _SNAP):
            raise WindowRangeError(
                f"{self.label!r} sampled on [{self.x0}, {self.x_end}] evaluated outside it"
            )
        s = np.clip(s, 0.0, last)
        i = np.minimum(np.floor(s).astype(np.int64), last - 1)
        frac = s - i
        return self.values[i] + frac * (self.values[i + 1] - self.values[i])


@dataclass(frozen=True, eq=False)
class DiscreteSignal(_Arithmetic):
    """A bounded function on the positive integers."""

    generator: Callable[[np.ndarray], np.ndarray]
    bound: float
    label: str = "sequence"

    def __post_init__(self):
        if not (self.bound >= 0 and math.isfinite(self.bound)):
            raise ValueError(f"bound must be finite and >= 0, got {self.bound!r}")

    def __call__(self, n):
        arr = np.asarray(n, dtype=np.int64)
        if arr.size and np.min(arr) < 1:
            raise ValueError("discrete signals are indexed from n = 1")
        vals = np.broadcast_to(np.asarray(self.generator(arr), dtype=float), arr.shape)
        _check_bound(vals, self.bound, self.label)
        if np.ndim(n) == 0:
            return float(vals)
        return np.array(vals, dtype=float)

    def values(self, n_max: int) -> np.ndarray:
        """``phi(1), ..., phi(n_max)`` as an array."""
        return self(np.arange(1, n_max + 1, dtype=np.int64))


class SequenceSignal(DiscreteSignal):
    """A finite table ``phi(1..N)``; indices past ``N`` raise."""

    def __init__(self, table: np.ndarray, label: str, bound: float | None = None):
        table = np.asarray(table, dtype=float)
        object.__setattr__(self, "table", table)
        if bound is None:
            bound = float(np.max(np.abs(table))) if table.size else 0.0
        super().__init__(self._lookup, float(bound), label)

    @property
    def n_max(self) -> int:
        return self.table.size

    def _lookup(self, n: np.ndarray) -> np.ndarray:
        if n.size and np.max(n) > self.table.size:
            raise WindowRangeError(f"{self.label!r} known only up to n = {self.table.size}")
        return self.table[n - 1]

    def values(self, n_max: int) -> np.ndarray:
        if n_max > self.table.size:
            raise WindowRangeError(f"{self.label!r} known only up to n = {self.table.size}")
        return self.table[:n_max].copy()


@dataclass(frozen=True)
class GridSpec:
    """Discretisation and tail window shared by every limit estimator.

    ``limsup_{x -> inf}`` is approximated by a sup over ``[x_cut, x_max]``;
    the outer ``theta -> inf`` limit by the last entry of ``theta_grid``.
    For multiplicative functionals the same fields are read in log units.
    """

    x_max: float = 5000.0
    step: float = 0.01
    x_cut: float = 1000.0
    theta_grid: tuple[float, ...] = tuple(float(2**j) for j in range(10))

    def __post_init__(self):
        object.__setattr__(self, "theta_grid", tuple(float(t) for t in self.theta_grid))
        if not self.step > 0:
            raise ValueError(f"step must be > 0, got {self.step!r}")
        if not 0 <= self.x_cut < self.x_max:
            raise ValueError(
                f"x_cut must satisfy 0 <= x_cut < x_max, got x_cut={self.x_cut!r}, "
                f"x_max={self.x_max!r}"
            )
        th = np.asarray(self.theta_grid)
        if th.size == 0:
            raise ValueError("theta_grid must not be empty")
        if th[0] < self.step:
            raise ValueError(f"theta_grid starts below the step: {float(th[0])!r} < {self.step!r}")
        if th.size > 1:
            if np.any(np.diff(th) <= 0):
                raise ValueError("theta_grid must be strictly increasing")
            ratios = th[1:] / th[:-1]
            if np.max(np.abs(ratios - ratios[0])) > 1e-9 * ratios[0]:
                raise ValueError("theta_grid must be geometric (constant ratio)")
        if th[-1] > (self.x_max - self.x_cut) / 2 * (1 + 1e-12):
            raise ValueError(
                f"theta_grid: largest window {float(th[-1])!r} does not fit the tail window "
                f"(x_max - x_cut)/2 = {(self.x_max - self.x_cut) / 2!r}"
            )

    @classmethod
    def geometric(cls, x_max: float, step: float, x_cut: float | None = None,
                  theta0: float = 1.0, ratio: float = 2.0, count: int = 10) -> "GridSpec":
        if x_cut is None:
            x_cut = x_max / 5
        return cls(x_max, step, x_cut, tuple(theta0 * ratio**j for j in range(count)))

    @property
    def theta_max(self) -> float:
        return self.theta_grid[-1]

    def tail_nodes(self, start: float | None = None) -> np.ndarray:
        """Grid abscissae ``start, start + h, ...`` up to ``x_max``."""
        start = self.x_cut if start is None else start
        n = int(math.floor((self.x_max - start) / self.step + _SNAP))
        return start + self.step * np.arange(n + 1)


@dataclass(frozen=True, eq=False)
class PrefixTable:
    """``cumulative[j]`` approximates the integral from ``origin`` to ``origin + j*step``.

    ``compensation`` optionally holds the low words of a double-double
    cumulative sum; window integrals then cancel the large leading parts
    exactly instead of losing ``eps * |cumulative|``.
    """

    origin: float
    step: float
    cumulative: np.ndarray
    bound: float = math.inf
    compensation: np.ndarray | None = None

    def __post_init__(self):
        if self.cumulative.ndim != 1 or self.cumulative.size < 2 or self.cumulative[0] != 0:
            raise ValueError("cumulative table must start at 0 and hold at least one cell")

    @property
    def end(self) -> float:
        return self.origin + self.step * (self.cumulative.size - 1)

    def _locate(self, x):
        s = (np.asarray(x, dtype=float) - self.origin) / self.step
        last = self.cumulative.size - 1
        if np.any(s < -_SNAP) or np.any(s > last + _SNAP):
            raise WindowRangeError(
                f"abscissa outside the prefix table [{self.origin}, {self.end}]"
            )
        r = np.rint(s)
        s = np.where(np.abs(s - r) < _SNAP, r, s)
        s = np.clip(s, 0.0, last)
        i = np.minimum(np.floor(s).astype(np.int64), last - 1)
        return i, s - i

    def at(self, x) -> np.ndarray:
        """Cumulative integral at arbitrary abscissae (linear interpolation)."""
        i, frac = self._locate(x)
        c = self.cumulative
        out = c[i] + frac * (c[i + 1] - c[i])
        if self.compensation is not None:
            lo = self.compensation
            out = out + (lo[i] + frac * (lo[i + 1] - lo[i]))
        return out

    def integral(self, a, b) -> np.ndarray:
        """``int_a^b`` from the table; leading words cancel before low words are added."""
        ia, fa = self._locate(a)
        ib, fb = self._locate(b)
        c = self.cumulative
        out = (c[ib] - c[ia]) + (fb * (c[ib + 1] - c[ib]) - fa * (c[ia + 1] - c[ia]))
        if self.compensation is not None:
            lo = self.compensation
            out = out + ((lo[ib] - lo[ia])
                         + (fb * (lo[ib + 1] - lo[ib]) - fa * (lo[ia + 1] - lo[ia])))
        return out


def build_prefix(signal: ContinuousSignal, grid: GridSpec, weight: str = "unit",
                 start: float | None = None, stop: float | None = None) -> PrefixTable:
    """Midpoint-rule cumulative integral of ``signal * weight``.

    The table spans ``[start, stop]`` (defaults ``[0, grid.x_max]``) with
    ``grid.step`` cells; ``stop`` is rounded up to a whole cell.  ``weight``
    is ``"unit"`` or ``"one-over-t"``; the latter needs ``start > 0``.
    """
    start = 0.0 if start is None else float(start)
    stop = grid.x_max if stop is None else float(stop)
    h = grid.step
    if stop <= start:
        raise ValueError(f"empty prefix range [{start}, {stop}]")
    n = int(math.ceil((stop - start) / h - _SNAP))
    mid = start + h * (np.arange(n) + 0.5)
    vals = signal(mid)
    if weight == "unit":
        cell = h * vals
        wmax = 1.0
    elif weight == "one-over-t":
        if not start > 0:
            raise ValueError("one-over-t weight requires a positive origin")
        cell = h * vals / mid
        wmax = 1.0 / start
    else:
        raise ValueError(f"unknown weight {weight!r}; use 'unit' or 'one-over-t'")
    hi, lo = neumaier_prefix(np.ascontiguousarray(cell, dtype=float))
    return PrefixTable(start, h, hi, signal.bound * wmax, lo)


def window_mean(table: PrefixTable, x, theta: float):
    """Mean of the tabulated function over ``[x, x + theta]``.

    Vectorised in ``x``.  Raises :class:`WindowRangeError` if a window leaves
    the table and :class:`DegenerateWindowError` if ``theta < step``.
    """
    if theta < table.step * (1 - _SNAP):
        raise DegenerateWindowError(f"window {theta!r} shorter than step {table.step!r}")
    x = np.asarray(x, dtype=float)
    out = table.integral(x, x + theta) / theta
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# signal library

SIGNAL_NAMES = (
    "constant", "sinusoid", "log_cosine", "log_block", "alternating",
    "convergent_plus_decay", "sampled", "chirp_block",
)

_DOMAINS = ("continuous", "discrete", "multiplicative")


def _log_block_indicator(x: np.ndarray, base: float) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    # small relative nudge so exact powers of the base land in their own block
    k = np.floor(np.log(x[pos]) / math.log(base) + 1e-12)
    out[pos] = (np.mod(k, 2) == 0).astype(float)
    return out


def signal_library(name: str, params: Mapping | None = None):
    """Build a named library signal.

    ``params`` may carry ``domain`` (``continuous``, ``discrete`` or
    ``multiplicative``) and ``label`` next to the family parameters.
    """
    p = dict(params or {})
    log_gen = None
    domain = p.pop("domain", "discrete" if name == "alternating" else "continuous")
    label = p.pop("label", None)
    if domain not in _DOMAINS:
        raise ValueError(f"unknown domain {domain!r}")
    discrete = domain == "discrete"

    def take(key, default=None, required=False):
        if key in p:
            return p.pop(key)
        if required:
            raise ValueError(f"signal {name!r} needs parameter {key!r}")
        return default

    if name == "constant":
        c = float(take("c", required=True))
        gen = lambda x: np.full(np.shape(x), c)
        log_gen = gen
        bound, lab = abs(c), f"constant({c!r})"
    elif name == "sinusoid":
        if discrete:
            raise ValueError("sinusoid is continuous only")
        w = float(take("omega", 1.0))
        gen = lambda x: np.sin(w * x)
        bound, lab = 1.0, ("sin" if w == 1.0 else f"sin({w!r}x)")
    elif name == "log_cosine":
        w = float(take("omega", 1.0))
        phase = float(take("phase", 0.0))
        shift = float(take("shift", 0.0))
        if discrete:
            gen = lambda n: np.cos(w * np.log(n + shift) + phase)
            lab = "cos(log n)"
        else:
            gen = lambda x: np.cos(w * np.log(np.maximum(x + shift, 1.0)) + phase)
            # log(e^u + shift) = u + log1p(shift e^{-u}) stays finite for large u
            log_gen = lambda u: np.cos(
                w * np.maximum(u + np.log1p(shift * np.exp(-u)), 0.0) + phase)
            lab = "cos(log x)"
        if (w, phase, shift) != (1.0, 0.0, 0.0):
            lab = f"log_cosine(omega={w!r}, phase={phase!r}, shift={shift!r})"
        bound = 1.0
    elif name == "log_block":
        b = float(take("base", 2.0))
        if not b > 1:
            raise ValueError(f"log_block needs base > 1, got {b!r}")
        gen = lambda x: _log_block_indicator(np.asarray(x, dtype=float), b)
        log_gen = lambda u: (np.mod(np.floor(np.asarray(u, dtype=float) / math.log(b) + 1e-12),
                                    2) == 0).astype(float)
        bound, lab = 1.0, f"log_block({b!r})"
    elif name == "alternating":
        if not discrete:
            raise ValueError("alternating is discrete only")
        gen = lambda n: np.where(np.asarray(n) % 2 == 0, 1.0, -1.0)
        bound, lab = 1.0, "alternating"
    elif name == "convergent_plus_decay":
        if discrete:
            raise ValueError("convergent_plus_decay is continuous only")
        a = float(take("alpha", required=True))
        # mirrored decay keeps the signal bounded on the negative half-line
        gen = lambda x: a + np.exp(-np.abs(x)) * np.sin(x)
        bound, lab = abs(a) + 0.33, f"{a!r}+exp(-x)sin(x)"
    elif name == "sampled":
        table = np.asarray(take("values", required=True), dtype=float)
        if table.ndim != 1 or table.size == 0:
            raise ValueError("sampled needs a non-empty 1-d value table")
        if discrete:
            out = SequenceSignal(table, label or "sampled")
            _reject_leftovers(name, p)
            return out
        h = float(take("step", 1.0))
        x0 = float(take("origin", 0.0))
        if not h > 0:
            raise ValueError("sampled step must be > 0")

        def gen(x):
            i = np.floor((np.asarray(x, dtype=float) - x0) / h).astype(np.int64)
            inside = (i >= 0) & (i < table.size)
            return np.where(inside, table[np.clip(i, 0, table.size - 1)], 0.0)

        bound, lab = float(np.max(np.abs(table))), "sampled"
    elif name == "chirp_block":
        if discrete:
            raise ValueError("chirp_block is continuous only")
        rate = float(take("rate", 2.5))
        if not rate > 0:
            raise ValueError("chirp_block needs rate > 0")

        def gen(x):
            x = np.asarray(x, dtype=float)
            phase = rate * np.abs(x) * np.log1p(np.abs(x))
            return (np.mod(np.floor(phase), 2) == 0).astype(float)

        bound, lab = 1.0, f"chirp_block({rate!r})"
    else:
        raise ValueError(f"unknown signal {name!r}; known: {', '.join(SIGNAL_NAMES)}")

    _reject_leftovers(name, p)
    lab = label or lab
    if discrete:
        return DiscreteSignal(gen, bound, lab)
    if domain == "multiplicative":
        return MultiplicativeSignal(gen, bound, lab, log_gen)
    return ContinuousSignal(gen, bound, lab)


def _reject_leftovers(name: str, p: dict) -> None:
    if p:
        raise ValueError(f"signal {name!r}: unknown parameter(s) {sorted(p)}")
