"""Compensated (Neumaier) running sums stored as double-double pairs."""
import numpy as np
from numba import njit


@njit(cache=True)
def neumaier_prefix(x):
    """``hi[m] + lo[m]`` is ``x[0] + ... + x[m-1]`` to about twice working precision."""
    n = x.size
    hi = np.zeros(n + 1)
    lo = np.zeros(n + 1)
    s = 0.0
    c = 0.0
    for i in range(n):
        v = x[i]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        # renormalise so that |lo| <= ulp(hi)/2
        h = s + c
        hi[i + 1] = h
        lo[i + 1] = c - (h - s)
    return hi, lo


@njit(cache=True)
def row_sums(mat):
    """One compensated sum per row."""
    out = np.empty(mat.shape[0])
    for r in range(mat.shape[0]):
        s = 0.0
        c = 0.0
        for j in range(mat.shape[1]):
            v = mat[r, j]
            t = s + v
            if abs(s) >= abs(v):
                c += (s - t) + v
            else:
                c += (v - t) + s
            s = t
        out[r] = s + c
    return out
