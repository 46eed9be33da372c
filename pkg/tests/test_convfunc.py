import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from summalab.convfunc import (F_infinity, NonMonotoneError, almost_convergence_test,
                               lower_F, lower_P, p_envelope, residual_check, tauberian_check,
                               upper_F, upper_F_k, upper_P, wiener_cross_check)
from summalab.kernel import (box, erlang, exponential, fourier_transform, gaussian,
                             histogram_kernel)
from summalab.mellin import wrap_log
from summalab.signal import ContinuousSignal, GridSpec, signal_library

GRID = GridSpec()
# smaller grid for property tests
QUICK = GridSpec(x_max=800.0, step=0.02, x_cut=100.0, theta_grid=tuple(2.0**j for j in range(8)))

SIN = signal_library("sinusoid", {})
CONST = signal_library("constant", {"c": 0.7})
SQUARE = wrap_log(signal_library("log_block", {"base": 2, "domain": "multiplicative"}))


def exact_window_extremes(antiderivative, grid, theta):
    # closed-form window means at the same tail nodes the estimator visits
    x = grid.tail_nodes()
    x = x[x + theta <= grid.x_max + 1e-9]
    m = (antiderivative(x + theta) - antiderivative(x)) / theta
    return float(np.max(m)), float(np.min(m))


def test_constants():
    for est in (upper_F(exponential(1.0), CONST, GRID), lower_F(gaussian(1.0), CONST, GRID),
                upper_F_k(exponential(1.0), 4, CONST, GRID), upper_P(CONST, GRID),
                lower_P(CONST, GRID), F_infinity(exponential(1.0), CONST, GRID)):
        assert est.value == pytest.approx(0.7, abs=1e-6), est.name


def test_sine_amplitudes():
    up = upper_F(exponential(1.0), SIN, GRID)
    lo = lower_F(exponential(1.0), SIN, GRID)
    assert up.value == pytest.approx(1 / math.sqrt(2), abs=0.01)
    assert lo.value == pytest.approx(-1 / math.sqrt(2), abs=0.01)
    assert up.companion_lower == pytest.approx(lo.value)
    assert up.stable and len(up.trace) == 3
    k3 = upper_F_k(exponential(1.0), 3, SIN, GRID)
    assert k3.value == pytest.approx(2**-1.5, abs=0.01)


def test_sine_window_functional_matches_closed_form():
    up, lo = p_envelope(SIN, GRID)
    ref_up, ref_lo = exact_window_extremes(lambda t: -np.cos(t), GRID, 512.0)
    assert up.value == pytest.approx(ref_up, abs=1e-6)
    assert lo.value == pytest.approx(ref_lo, abs=1e-6)
    assert -0.01 <= up.value <= 0.011
    assert abs(up.value) <= 2 / 512
    assert [th for th, _ in up.trace] == list(GRID.theta_grid)


def test_log_square_wave_mean_half():
    up, lo = p_envelope(SQUARE, GRID)
    assert up.value == pytest.approx(0.5, abs=0.01)
    assert lo.value == pytest.approx(0.5, abs=0.01)


def test_slowly_varying_not_summable():
    sig = signal_library("log_cosine", {"shift": 1.0, "phase": -math.pi / 2})
    v = almost_convergence_test(sig, GRID)

    def anti(t):
        lg = np.log1p(t)
        return (1 + t) * (np.sin(lg) - np.cos(lg)) / 2

    ref_up, ref_lo = exact_window_extremes(anti, GRID, 512.0)
    assert v.status == "not_summable" and not v.summable
    assert v.gap == pytest.approx(ref_up - ref_lo, abs=1e-4)
    assert v.gap > v.eps


def test_almost_convergence_verdicts():
    v = almost_convergence_test(SIN, GRID)
    assert v.summable and v.alpha == pytest.approx(0.0, abs=0.01)
    assert str(v).startswith("Summable(")
    v = almost_convergence_test(CONST, GRID)
    assert v.summable and v.alpha == pytest.approx(0.7, abs=1e-9)


def test_F_infinity_sine_geometric_decay():
    est = F_infinity(exponential(1.0), SIN, GRID)
    ks = [int(k) for k, _ in est.trace]
    assert ks == list(range(1, 11))
    for k, v in est.trace:
        assert v == pytest.approx(2 ** (-k / 2), abs=0.01)
    # geometric decay is too slow for the 1e-3 break inside k <= 10
    assert "not_converged" in est.flags


def test_F_infinity_stops_when_converged():
    est = F_infinity(exponential(1.0), SQUARE, GRID)
    assert est.value == pytest.approx(0.5, abs=0.02)
    assert est.stability_residual <= 1e-3 or "not_converged" in est.flags


def test_F_infinity_rejects_short_sweep():
    with pytest.raises(ValueError):
        F_infinity(exponential(1.0), SIN, GRID, k_max=3)


def test_F_infinity_non_monotone_raises():
    # signed histogram with |fhat(1)| = 3 sinc(1/2) > 1: sine amplitudes grow with k
    f = histogram_kernel(0.0, math.pi, [2.0, -1.0], "signed")
    assert abs(fourier_transform(f, 1.0)) > 1.5
    with pytest.raises(NonMonotoneError):
        F_infinity(f, SIN, QUICK)


def test_residual_examples():
    r = residual_check(exponential(1.0), SIN, GRID)
    assert r.theorem_id == "L3.1" and r.status == "pass"
    assert abs(r.discrepancies["upper_P_residual"]) <= 0.01
    r = residual_check(exponential(1.0), SQUARE, GRID)
    assert r.status == "pass"
    assert max(abs(v) for v in r.discrepancies.values()) <= 0.02


def test_residual_needs_normalised_kernel():
    with pytest.raises(ValueError):
        residual_check(histogram_kernel(0.0, 1.0, [0.5]), SIN, GRID)


def test_tauberian_sine():
    r = tauberian_check(exponential(1.0), SIN, GRID)
    assert r.theorem_id == "T5.6" and r.status == "pass"
    m = r.measurements
    # |fhat(1) - fhat(1)^2| = |(1-i)/2 + i/2| = 1/2
    witness_amp = abs(1 / (1 + 1j) - 1 / (1 + 1j) ** 2)
    assert witness_amp == pytest.approx(0.5)
    assert m["condition_upper"] == pytest.approx(witness_amp, abs=0.01)
    assert m["condition_holds"] == 0.0 and m["F_summable"] == 0.0 and m["P_summable"] == 1.0
    assert m["F_upper"] - m["F_lower"] == pytest.approx(2 / math.sqrt(2), abs=0.02)


def test_tauberian_constant_consistent():
    r = tauberian_check(exponential(1.0), CONST, GRID)
    assert r.status == "pass"
    assert r.discrepancies["alpha_mismatch"] == pytest.approx(0.0, abs=1e-6)


def test_tauberian_translate_sweep():
    shifts = (0.5, math.pi, 2 * math.pi)
    r = tauberian_check(exponential(1.0), SIN, QUICK, shifts=shifts)
    sweep = dict(r.traces["translate_sweep"])
    # f*sin has amplitude |fhat(1)| = 1/sqrt2, so the shifted difference has 2|sin(s/2)|/sqrt2
    for s, v in sweep.items():
        assert v == pytest.approx(2 * abs(math.sin(s / 2)) / math.sqrt(2), abs=2e-3)
    assert r.measurements["translate_holds"] == 0.0
    assert "disagrees" not in r.notes
    conv = signal_library("convergent_plus_decay", {"alpha": 0.3})
    r = tauberian_check(exponential(1.0), conv, QUICK, shifts=shifts)
    assert r.measurements["translate_max"] <= 1e-9 and r.measurements["translate_holds"] == 1.0
    with pytest.raises(ValueError, match="shift"):
        tauberian_check(exponential(1.0), SIN, QUICK, shifts=(0.0,))


def test_tauberian_needs_wiener():
    with pytest.raises(ValueError):
        tauberian_check(box(1.0), SIN, GRID)


def test_wiener_cross_kernel():
    sig = signal_library("convergent_plus_decay", {"alpha": 0.3})
    r = wiener_cross_check(sig, [exponential(1.0), erlang(1.0, 2), gaussian(1.0)], GRID)
    assert r.status == "pass" and r.premise_met
    assert r.measurements["alpha"] == pytest.approx(0.3, abs=1e-3)
    for key, v in r.measurements.items():
        if key.startswith("F_"):
            assert v == pytest.approx(0.3, abs=1e-3), key


def test_wiener_premise_not_met_is_explicit():
    r = wiener_cross_check(SIN, [exponential(1.0), gaussian(1.0)], GRID)
    assert r.status == "pass" and not r.premise_met
    assert "premise not satisfied" in r.notes


def test_chain_ordering_on_library():
    for sig in (SIN, SQUARE, CONST):
        fu = upper_F(exponential(1.0), sig, GRID)
        pu, pl = p_envelope(sig, GRID)
        assert fu.companion_lower - 1e-3 <= pl.value <= pu.value <= fu.value + 1e-3


@pytest.mark.parametrize("sig", [SIN, SQUARE], ids=["sin", "square"])
def test_F_k_nonincreasing(sig):
    vals = [upper_F_k(exponential(1.0), k, sig, GRID).value for k in (1, 2, 3)]
    assert vals[0] >= vals[1] - 1e-3 and vals[1] >= vals[2] - 1e-3


signals = st.sampled_from([SIN, SQUARE, signal_library("sinusoid", {"omega": 0.37})])


@settings(max_examples=15, deadline=None)
@given(phi=signals, c=st.floats(0, 3))
def test_positive_homogeneity(phi, c):
    a = upper_P(c * phi, QUICK).value
    b = c * upper_P(phi, QUICK).value
    assert a == pytest.approx(b, abs=1e-9)
    a = upper_F(exponential(1.0), c * phi, QUICK).value
    assert a == pytest.approx(c * upper_F(exponential(1.0), phi, QUICK).value, abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(phi=signals, psi=signals)
def test_subadditivity(phi, psi):
    assert upper_P(phi + psi, QUICK).value <= (upper_P(phi, QUICK).value
                                               + upper_P(psi, QUICK).value + 1e-9)
    f = exponential(1.0)
    assert upper_F(f, phi + psi, QUICK).value <= (upper_F(f, phi, QUICK).value
                                                  + upper_F(f, psi, QUICK).value + 1e-9)


@settings(max_examples=15, deadline=None)
@given(phi=signals, c=st.floats(0.1, 1))
def test_monotone_in_signal(phi, c):
    # phi <= phi + c pointwise
    shifted = phi + signal_library("constant", {"c": c})
    assert upper_P(phi, QUICK).value <= upper_P(shifted, QUICK).value + 1e-12
    assert lower_P(phi, QUICK).value <= upper_P(phi, QUICK).value
