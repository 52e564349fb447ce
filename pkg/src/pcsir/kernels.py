"""Hot numeric kernels, with a compiled core and a numpy fallback.

The compiled extension (``pcsir._speedups``) is preferred when it imported
cleanly; otherwise the numpy implementation below is used. Selection happens
once at import and can be overridden with the ``PCSIR_KERNELS`` environment
variable (``compiled`` / ``python`` / ``auto``) or at runtime via
:func:`set_backend`. Both implementations share the window convention
(centre pixel = floor(pos + 0.5), window clamped to the frame) and agree to
within summation-order rounding.
"""

import os

import numpy as np

try:
    from . import _speedups
except ImportError:  # pure-Python install
    _speedups = None

COMPILED_AVAILABLE = _speedups is not None


def _spot_window_ssd_python(pixels, xs, ys, i0s, sigma_psf, i_bg, halfwidth):
    height, width = pixels.shape
    n = xs.shape[0]
    out = np.empty(n)
    inv_two_sigma_sq = 1.0 / (2.0 * sigma_psf * sigma_psf)
    for i in range(n):
        cx = int(np.floor(xs[i] + 0.5))
        cy = int(np.floor(ys[i] + 0.5))
        x_lo = min(max(cx - halfwidth, 0), width - 1)
        x_hi = min(max(cx + halfwidth, 0), width - 1)
        y_lo = min(max(cy - halfwidth, 0), height - 1)
        y_hi = min(max(cy + halfwidth, 0), height - 1)
        gx = np.exp(-((np.arange(x_lo, x_hi + 1) - xs[i]) ** 2) * inv_two_sigma_sq)
        gy = np.exp(-((np.arange(y_lo, y_hi + 1) - ys[i]) ** 2) * inv_two_sigma_sq)
        resid = pixels[y_lo:y_hi + 1, x_lo:x_hi + 1] - (i0s[i] * np.outer(gy, gx) + i_bg)
        out[i] = np.sum(resid * resid)
    return out


_IMPLS = {"python": _spot_window_ssd_python}
if COMPILED_AVAILABLE:
    _IMPLS["compiled"] = _speedups.spot_window_ssd


def _default_backend():
    requested = os.environ.get("PCSIR_KERNELS", "auto").strip().lower() or "auto"
    if requested == "auto":
        return "compiled" if COMPILED_AVAILABLE else "python"
    if requested not in _IMPLS:
        raise ImportError(
            f"PCSIR_KERNELS={requested!r} but that backend is not available "
            f"(have: {sorted(_IMPLS)})"
        )
    return requested


_active = _default_backend()


def available_backends():
    """Names of the kernel backends importable in this process."""
    return sorted(_IMPLS)


def active_backend():
    return _active


def set_backend(name):
    """Switch the kernel backend; ``auto`` restores the default preference."""
    global _active
    if name in (None, "auto"):
        _active = "compiled" if COMPILED_AVAILABLE else "python"
        return _active
    if name not in _IMPLS:
        raise ValueError(f"unknown kernel backend {name!r} (have: {sorted(_IMPLS)})")
    _active = name
    return _active


def spot_window_ssd(pixels, xs, ys, i0s, sigma_psf, i_bg, halfwidth, backend=None):
    """Batched sum of squared residuals between a frame and predicted
    Gaussian spots, one window per state.

    ``pixels`` is a C-contiguous float64 (H, W) array; ``xs``/``ys``/``i0s``
    are float64 state columns. The window spans ``2*halfwidth + 1`` pixels per
    axis around the rounded position and is clamped inside the frame, so far
    out-of-frame states degrade to a border window rather than erroring.
    """
    impl = _IMPLS[backend if backend is not None else _active]
    return impl(pixels, xs, ys, i0s, float(sigma_psf), float(i_bg), int(halfwidth))
