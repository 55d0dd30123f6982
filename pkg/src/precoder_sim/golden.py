"""Exact reference model the datapath is verified against.

Deliberately independent of the pipeline: the complex product here is the
plain four-multiply schoolbook form and the requantization is a floor
division, sharing no code with the Karatsuba route. A float64 cross-check
bounds the end result against the ideal product in Q1.15 units.
"""

from __future__ import annotations

import numpy as np

_SCALE = 1 << 15
_MIN = -32768
_MAX = 32767


def exact_matvec(matrix: np.ndarray, x_block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Wide-integer H @ X, schoolbook form: (ac - bd) + j(ad + bc).

    ``matrix`` is (rows, cols, 2) int16; ``x_block`` is (n, cols, 2) int16.
    Returns int64 (n, rows) re/im arrays, exact.
    """
    a = matrix[:, :, 0].astype(np.int64)
    b = matrix[:, :, 1].astype(np.int64)
    c = x_block[:, :, 0].astype(np.int64).T
    d = x_block[:, :, 1].astype(np.int64).T
    re = a @ c - b @ d
    im = a @ d + b @ c
    return re.T, im.T


def quantized_matvec(matrix: np.ndarray, x_block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reference output samples: exact product, floor /2^15, saturate."""
    re, im = exact_matvec(matrix, x_block)
    re = np.clip(re // _SCALE, _MIN, _MAX).astype(np.int16)
    im = np.clip(im // _SCALE, _MIN, _MAX).astype(np.int16)
    return re, im


def float_matvec_error(
    matrix: np.ndarray, x_block: np.ndarray, out_re: np.ndarray, out_im: np.ndarray
) -> float:
    """Max |datapath - ideal| in Q1.15 units via an independent float64 route.

    Every intermediate fits float64 exactly (products < 2^31, sums < 2^35),
    so the only deviation is the datapath's own floor quantization, bounded
    by 2^-15 per component, plus matching saturation at the rails.
    """
    h = (matrix[:, :, 0] + 1j * matrix[:, :, 1]).astype(np.complex128) / _SCALE
    x = (x_block[:, :, 0] + 1j * x_block[:, :, 1]).astype(np.complex128) / _SCALE
    ideal = x @ h.T  # (n, rows)
    lo, hi = _MIN / _SCALE, _MAX / _SCALE
    ideal_re = np.clip(ideal.real, lo, hi)
    ideal_im = np.clip(ideal.imag, lo, hi)
    err_re = np.abs(out_re.astype(np.float64) / _SCALE - ideal_re)
    err_im = np.abs(out_im.astype(np.float64) / _SCALE - ideal_im)
    if err_re.size == 0:
        return 0.0
    return float(max(err_re.max(), err_im.max()))
