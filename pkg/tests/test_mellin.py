import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from summalab.convfunc import upper_F
from summalab.kernel import exponential, hardy_kernel
from summalab.mellin import (LOG_GRID, ROUTE_TOL, hardy_operator, lower_Q, mellin_convolve,
                             mellin_direct, q_envelope, q_summability_test, route_values,
                             unwrap_log, upper_Q, wrap_log)
from summalab.signal import ContinuousSignal, MultiplicativeSignal, signal_library

COS_LOG = signal_library("log_cosine", {"domain": "multiplicative"})
BLOCK = signal_library("log_block", {"base": 2, "domain": "multiplicative"})
CONST = signal_library("constant", {"c": 0.7, "domain": "multiplicative"})
LOG_THETA_J = LOG_GRID.theta_grid[-1]


def indicator_unit():
    return MultiplicativeSignal(lambda x: (np.asarray(x) <= 1.0).astype(float), 1.0, "1[0,1]")


def test_hardy_indicator_examples():
    phi = indicator_unit()
    assert hardy_operator(phi, 1.0, 2.0) == pytest.approx(0.5, abs=1e-4)
    assert hardy_operator(phi, 2.0, 2.0) == pytest.approx(0.25, abs=1e-4)


def test_hardy_matches_quadrature_definition():
    # (r / x^r) int_0^x phi(t) t^{r-1} dt by adaptive quadrature
    phi = MultiplicativeSignal(lambda x: np.cos(3 * np.sqrt(np.asarray(x))), 1.0, "cos3sqrt")
    for r in (0.5, 1.0, 2.0):
        for x in (0.7, 3.0, 40.0):
            ref, _ = integrate.quad(lambda t: math.cos(3 * math.sqrt(t)), 0, x, weight="alg",
                                    wvar=(r - 1, 0.0), limit=400, epsabs=1e-12)
            assert hardy_operator(phi, r, x) == pytest.approx(r * ref / x**r, abs=1e-4)


def test_hardy_cos_log_closed_form():
    x = np.exp(np.linspace(0.0, 60.0, 41))
    out = hardy_operator(COS_LOG, 1.0, x)
    lx = np.log(x)
    # the library signal is 1 on (0, 1]; that piece contributes 1/(2x) for x >= 1
    np.testing.assert_allclose(out, (np.cos(lx) + np.sin(lx)) / 2 + 1 / (2 * x), atol=1e-4)
    # amplitude |g_1hat(1)| = 1/sqrt(2)
    assert abs(mellin_direct(hardy_kernel(1.0), COS_LOG, math.exp(math.pi / 4 + 20 * math.pi))) \
        == pytest.approx(1 / math.sqrt(2), abs=1e-4)


def test_hardy_reproduces_constants():
    out = hardy_operator(CONST, 1.5, np.array([1e-3, 1.0, 1e6]))
    np.testing.assert_allclose(out, 0.7, atol=1e-12)


def test_hardy_rejects_bad_input():
    with pytest.raises(ValueError):
        hardy_operator(CONST, 0.0, 1.0)
    with pytest.raises(ValueError):
        hardy_operator(CONST, 1.0, np.array([0.0, 1.0]))


def test_pullback_diagram_and_quadrature():
    x = np.exp(np.array([50.0, 77.7, 140.0]))
    for g in (hardy_kernel(1.0), hardy_kernel(2.5)):
        conv = mellin_convolve(g, COS_LOG)
        for xi in x:
            assert float(conv(xi)) == pytest.approx(mellin_direct(g, COS_LOG, xi), abs=1e-4)
    # the Hardy operator is the r = 1 Mellin convolution
    conv = mellin_convolve(hardy_kernel(1.0), COS_LOG)
    np.testing.assert_allclose(conv(x), hardy_operator(COS_LOG, 1.0, x), atol=1e-4)


def test_pullback_amplitude_matches_additive_side():
    # W(g_1 *M cos log) = Exp(1) * cos: sup over the tail = |1/(1+i)|
    f = upper_F(exponential(1.0), wrap_log(COS_LOG), LOG_GRID)
    assert f.value == pytest.approx(1 / math.sqrt(2), abs=0.01)


def test_wrap_unwrap():
    w = wrap_log(COS_LOG)
    assert float(w(1000.0)) == pytest.approx(math.cos(1000.0))
    plain = MultiplicativeSignal(lambda x: np.cos(np.log(x)), 1.0, "no log form")
    with pytest.raises(OverflowError):
        wrap_log(plain)(np.array([800.0]))
    back = unwrap_log(ContinuousSignal(np.sin, 1.0, "sin"))
    assert float(back(math.e ** 2)) == pytest.approx(math.sin(2.0))
    assert float(wrap_log(back)(5000.0)) == pytest.approx(math.sin(5000.0))


def test_Q_constants_and_blocks():
    up, lo = q_envelope(CONST)
    assert up.value == pytest.approx(0.7, abs=1e-6) and lo.value == pytest.approx(0.7, abs=1e-6)
    assert upper_Q(BLOCK).value == pytest.approx(0.5, abs=0.01)
    assert lower_Q(BLOCK).value == pytest.approx(0.5, abs=0.01)


def test_Q_cos_log_bounded_antiderivative():
    up, lo = q_envelope(COS_LOG)
    bound = 2 / LOG_THETA_J + 0.02
    assert abs(up.value) <= bound and abs(lo.value) <= bound
    direct, additive = route_values(up)
    assert abs(direct - additive) <= ROUTE_TOL
    assert "route_mismatch" not in up.flags


def test_Q_summability_verdicts():
    eps = 2 / LOG_THETA_J + 0.02
    v = q_summability_test(COS_LOG, eps=eps)
    assert v.summable and v.alpha == pytest.approx(0.0, abs=eps)
    assert v.uniformity_modulus[-1][1] <= 2 / LOG_THETA_J
    v = q_summability_test(BLOCK)
    assert v.summable and v.alpha == pytest.approx(0.5, abs=0.01)


def test_Q_signed_log_square_wave():
    # +1 on [e^{2k}, e^{2k+1}), -1 on [e^{2k+1}, e^{2k+2})
    def lg(u):
        return np.where(np.mod(np.floor(np.asarray(u, dtype=float)), 2) == 0, 1.0, -1.0)

    phi = MultiplicativeSignal(lambda x: lg(np.log(x)), 1.0, "log_square", lg)
    v = q_summability_test(phi)
    assert v.summable and v.alpha == pytest.approx(0.0, abs=1e-3)
    # a partial period contributes at most 1 to the log-window integral
    assert v.uniformity_modulus[-1][1] <= 1 / LOG_THETA_J + 1e-6


@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.2, 4), lx=st.floats(-5, 40))
def test_hardy_constant_property(r, lx):
    assert hardy_operator(CONST, r, math.exp(lx)) == pytest.approx(0.7, abs=1e-12)
