"""Numerical laboratory for summability methods on bounded signals."""
from .convfunc import (F_infinity, almost_convergence_test, lower_F, lower_P, residual_check,
                       tauberian_check, upper_F, upper_F_k, upper_P, wiener_cross_check)
from .holder import (banach_upper, bridge_V, bridge_V1, c_infinity_test, c_infinity_upper,
                     cesaro, holder_upper, logarithmic_method)
from .kernel import (Kernel, classify, convolution_power, convolve, fourier_transform,
                     kernel_library, mellin_pullback)
from .mellin import hardy_operator, mellin_convolve, q_summability_test, upper_Q, wrap_log
from .report import FunctionalEstimate, SummabilityVerdict, TheoremReport
from .signal import (ContinuousSignal, DiscreteSignal, GridSpec, MultiplicativeSignal,
                     build_prefix, signal_library, window_mean)
from .verify import run_suite

__version__ = "0.1.0"
