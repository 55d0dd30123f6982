"""Q1.15 complex arithmetic on raw integers.

Every datapath sample is a 32-bit I/Q pair: 16-bit real, 16-bit imaginary,
each interpreted as Q1.15. Complex products are computed exactly with the
three-multiply Karatsuba decomposition and accumulated in a 40-bit-wide
integer type; requantization back to 16 bits happens once, at the datapath
output (floor shift by 15, then saturate).

A four-multiply schoolbook product is kept alongside as the verification
oracle for the Karatsuba route.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Q15_SHIFT = 15
SAMPLE_MIN = -(1 << 15)
SAMPLE_MAX = (1 << 15) - 1

# Accumulator is 40-bit signed: an 8-term dot product of 16x17-bit partials
# peaks below 2^38, leaving two bits of headroom.
WIDE_MIN = -(1 << 39)
WIDE_MAX = (1 << 39) - 1


class AccumulatorOverflowError(OverflowError):
    """A wide value left the 40-bit accumulator range (contract violation)."""


@dataclass(frozen=True, slots=True)
class FixedComplex:
    """One I/Q sample; ``re``/``im`` are the raw Q1.15 integers."""

    re: int
    im: int

    def __post_init__(self) -> None:
        if not (SAMPLE_MIN <= self.re <= SAMPLE_MAX):
            raise ValueError(f"re={self.re} outside signed 16-bit range")
        if not (SAMPLE_MIN <= self.im <= SAMPLE_MAX):
            raise ValueError(f"im={self.im} outside signed 16-bit range")

    def to_complex(self) -> complex:
        """Value under the Q1.15 interpretation (scale 2^-15)."""
        return complex(self.re, self.im) / (1 << Q15_SHIFT)


@dataclass(frozen=True, slots=True)
class WideComplex:
    """40-bit accumulator holding exact complex products and their sums."""

    re: int
    im: int

    def __post_init__(self) -> None:
        if not (WIDE_MIN <= self.re <= WIDE_MAX and WIDE_MIN <= self.im <= WIDE_MAX):
            raise AccumulatorOverflowError(
                f"({self.re}, {self.im}) exceeds the 40-bit accumulator"
            )


WIDE_ZERO = WideComplex(0, 0)


def karatsuba_mul(h: FixedComplex, x: FixedComplex) -> WideComplex:
    """Exact complex product of the raw integers via three real multiplies.

    With a = Re(h), b = Im(h), c = Re(x), d = Im(x):

        t1 = c * (a + b)
        t2 = a * (d - c)
        t3 = b * (c + d)
        Re = t1 - t3,  Im = t1 + t2

    The pre-adder sums (a+b), (d-c), (c+d) stay within 17 signed bits, so
    each multiply maps onto a single 16x17 hardware multiplier with no
    intermediate overflow.
    """
    a, b = h.re, h.im
    c, d = x.re, x.im
    t1 = c * (a + b)
    t2 = a * (d - c)
    t3 = b * (c + d)
    return WideComplex(t1 - t3, t1 + t2)


def schoolbook_mul(h: FixedComplex, x: FixedComplex) -> WideComplex:
    """Four-multiply reference product: (ac - bd) + j(ad + bc)."""
    a, b = h.re, h.im
    c, d = x.re, x.im
    return WideComplex(a * c - b * d, a * d + b * c)


def wide_add(p: WideComplex, q: WideComplex) -> WideComplex:
    """Component-wise exact sum; raises AccumulatorOverflowError past 40 bits."""
    return WideComplex(p.re + q.re, p.im + q.im)


def _saturate(v: int) -> int:
    if v > SAMPLE_MAX:
        return SAMPLE_MAX
    if v < SAMPLE_MIN:
        return SAMPLE_MIN
    return v


def quantize(p: WideComplex) -> FixedComplex:
    """Requantize a wide value to Q1.15: floor shift by 15, then saturate.

    Saturation is silent here; use :func:`quantize_saturations` to count
    clipped components for the datapath statistic.
    """
    return FixedComplex(_saturate(p.re >> Q15_SHIFT), _saturate(p.im >> Q15_SHIFT))


def quantize_saturations(p: WideComplex) -> int:
    """Number of components (0..2) that :func:`quantize` would clip."""
    n = 0
    for v in (p.re >> Q15_SHIFT, p.im >> Q15_SHIFT):
        if v > SAMPLE_MAX or v < SAMPLE_MIN:
            n += 1
    return n


def quantize_array(wide_re: np.ndarray, wide_im: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Vectorized :func:`quantize` over int64 accumulator arrays.

    Returns int16 re/im arrays plus the number of clipped components.
    numpy's ``>>`` on signed integers is an arithmetic shift, matching the
    scalar floor semantics bit for bit.
    """
    re = wide_re >> Q15_SHIFT
    im = wide_im >> Q15_SHIFT
    sat = int(np.count_nonzero((re > SAMPLE_MAX) | (re < SAMPLE_MIN)))
    sat += int(np.count_nonzero((im > SAMPLE_MAX) | (im < SAMPLE_MIN)))
    re = np.clip(re, SAMPLE_MIN, SAMPLE_MAX).astype(np.int16)
    im = np.clip(im, SAMPLE_MIN, SAMPLE_MAX).astype(np.int16)
    return re, im, sat
