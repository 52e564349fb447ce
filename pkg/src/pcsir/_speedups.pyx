# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernel: windowed Gaussian-spot residual sums.

Must stay numerically interchangeable with the fallback in
``pcsir.kernels`` (same window convention, same per-pixel arithmetic);
only the summation order may differ at the ulp level.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, floor

cnp.import_array()


def spot_window_ssd(double[:, ::1] pixels,
                    double[::1] xs, double[::1] ys, double[::1] i0s,
                    double sigma_psf, double i_bg, Py_ssize_t halfwidth):
    """Sum of squared residuals between ``pixels`` and a predicted Gaussian
    spot, over a square pixel window centred at each state's rounded
    position and clamped to the frame.

    Returns a float64 array of length ``len(xs)``.
    """
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t height = pixels.shape[0]
    cdef Py_ssize_t width = pixels.shape[1]
    cdef Py_ssize_t span = 2 * halfwidth + 1

    out_arr = np.empty(n, dtype=np.float64)
    gx_arr = np.empty(span, dtype=np.float64)
    gy_arr = np.empty(span, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] gx = gx_arr
    cdef double[::1] gy = gy_arr

    cdef double inv_two_sigma_sq = 1.0 / (2.0 * sigma_psf * sigma_psf)
    cdef Py_ssize_t i, cx, cy, x_lo, x_hi, y_lo, y_hi, xi, yi
    cdef double x0, y0, amp, d, gyv, resid, ssd

    for i in range(n):
        x0 = xs[i]
        y0 = ys[i]
        amp = i0s[i]

        cx = <Py_ssize_t>floor(x0 + 0.5)
        cy = <Py_ssize_t>floor(y0 + 0.5)
        x_lo = cx - halfwidth
        x_hi = cx + halfwidth
        y_lo = cy - halfwidth
        y_hi = cy + halfwidth
        if x_lo < 0:
            x_lo = 0
        elif x_lo > width - 1:
            x_lo = width - 1
        if x_hi < 0:
            x_hi = 0
        elif x_hi > width - 1:
            x_hi = width - 1
        if y_lo < 0:
            y_lo = 0
        elif y_lo > height - 1:
            y_lo = height - 1
        if y_hi < 0:
            y_hi = 0
        elif y_hi > height - 1:
            y_hi = height - 1

        for xi in range(x_lo, x_hi + 1):
            d = xi - x0
            gx[xi - x_lo] = exp(-d * d * inv_two_sigma_sq)
        for yi in range(y_lo, y_hi + 1):
            d = yi - y0
            gy[yi - y_lo] = exp(-d * d * inv_two_sigma_sq)

        ssd = 0.0
        for yi in range(y_lo, y_hi + 1):
            gyv = gy[yi - y_lo]
            for xi in range(x_lo, x_hi + 1):
                resid = pixels[yi, xi] - (amp * gx[xi - x_lo] * gyv + i_bg)
                ssd += resid * resid
        out[i] = ssd

    return out_arr
