"""Per-resource-element beamforming product Y = H * X.

The datapath broadcasts the 8-layer user vector to 2x8 dot-product units
(one per memory output port), keeps the 2x1 partials exact in the wide
accumulator, and quantizes once when the combiner assembles the N_T-element
antenna vector. A vectorized whole-block route (same three-multiply
structure, expressed as three integer matmuls) serves bulk simulation and
is bit-identical to the per-element composition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fixedpoint import (
    FixedComplex,
    WideComplex,
    WIDE_ZERO,
    karatsuba_mul,
    quantize,
    quantize_array,
    quantize_saturations,
    wide_add,
)

NUM_LAYERS = 8
SUPPORTED_N_T = (16, 32, 64)
ROWS_PER_PORT = 2
SUB_MULTIPLIER_ROWS = 16


class DimensionError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class OutputVector:
    """One precoded antenna vector plus the quantizer clip count."""

    y: tuple[FixedComplex, ...]
    saturation_count: int


def broadcast(x: list[FixedComplex], fanout: int) -> list[list[FixedComplex]]:
    """Fan the user vector out to the 16x8 sub-multipliers.

    fanout 1 covers the single-copy 16x8 arrangement; 2 and 4 are the 1:2
    and 1:4 broadcast increments of the 32x8 and 64x8 arrangements.
    """
    if fanout not in (1, 2, 4):
        raise DimensionError(f"unsupported fanout {fanout}")
    if len(x) != NUM_LAYERS:
        raise DimensionError(f"user vector has {len(x)} layers, expected {NUM_LAYERS}")
    return [list(x) for _ in range(fanout)]


def dot_product_2x8(h_block: list[list[FixedComplex]], x: list[FixedComplex]) -> tuple[WideComplex, WideComplex]:
    """One port's work: (2x8 matrix block) . (8x1 vector), exact in wide."""
    if len(h_block) != ROWS_PER_PORT or any(len(r) != NUM_LAYERS for r in h_block):
        raise DimensionError("h_block must be 2x8")
    if len(x) != NUM_LAYERS:
        raise DimensionError(f"user vector has {len(x)} layers, expected {NUM_LAYERS}")
    out = []
    for row in h_block:
        acc = WIDE_ZERO
        for h, xv in zip(row, x):
            acc = wide_add(acc, karatsuba_mul(h, xv))
        out.append(acc)
    return out[0], out[1]


def combine(partials: list[tuple[WideComplex, WideComplex]], n_t: int) -> OutputVector:
    """Assemble port partials into the output vector, quantizing each row.

    Port p supplies rows 2p and 2p+1; a wrong partial count is rejected
    rather than padded so sequencing bugs surface immediately.
    """
    if len(partials) != n_t // ROWS_PER_PORT:
        raise DimensionError(
            f"{len(partials)} partials for n_t={n_t}, expected {n_t // ROWS_PER_PORT}"
        )
    rows: list[FixedComplex] = []
    sat = 0
    for hi, lo in partials:
        for wide in (hi, lo):
            sat += quantize_saturations(wide)
            rows.append(quantize(wide))
    return OutputVector(tuple(rows), sat)


def precode_re(matrix: np.ndarray, x: list[FixedComplex]) -> OutputVector:
    """Full per-RE product via broadcast -> 2x8 dot products -> combine.

    ``matrix`` is the logical (n_t, 8, 2) int16 coefficient array. Numerically
    equal to quantizing the exact wide-integer H*x product.
    """
    n_t = matrix.shape[0]
    if matrix.shape != (n_t, NUM_LAYERS, 2):
        raise DimensionError(f"matrix shape {matrix.shape} != (n_t, 8, 2)")
    if n_t % SUB_MULTIPLIER_ROWS:
        raise DimensionError(f"n_t={n_t} is not a multiple of {SUB_MULTIPLIER_ROWS}")
    copies = broadcast(x, n_t // SUB_MULTIPLIER_ROWS)
    partials: list[tuple[WideComplex, WideComplex]] = []
    for sub, x_copy in enumerate(copies):
        base = sub * SUB_MULTIPLIER_ROWS
        for p in range(SUB_MULTIPLIER_ROWS // ROWS_PER_PORT):
            block = [
                [FixedComplex(int(matrix[r, k, 0]), int(matrix[r, k, 1])) for k in range(NUM_LAYERS)]
                for r in (base + 2 * p, base + 2 * p + 1)
            ]
            partials.append(dot_product_2x8(block, x_copy))
    return combine(partials, n_t)


def karatsuba_matmul_wide(matrix: np.ndarray, x_block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact wide H @ X over a block of user vectors, three-multiply form.

    ``matrix`` is (n_t, 8, 2) int16, ``x_block`` is (n_re, 8, 2) int16.
    Per element pair the three Karatsuba products sum over the layer axis to

        Re = (a+b)@c - b@(c+d),  Im = (a+b)@c + a@(d-c)

    which is the dot-product unit's arithmetic in matmul form. Results are
    int64 wide values of shape (n_re, n_t).
    """
    a = matrix[:, :, 0].astype(np.int64)
    b = matrix[:, :, 1].astype(np.int64)
    c = x_block[:, :, 0].astype(np.int64).T  # (8, n_re)
    d = x_block[:, :, 1].astype(np.int64).T
    t1 = (a + b) @ c
    t2 = a @ (d - c)
    t3 = b @ (c + d)
    return (t1 - t3).T, (t1 + t2).T  # (n_re, n_t)


def precode_block(matrix: np.ndarray, x_block: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Vectorized precode over many REs sharing one matrix.

    Returns (re, im) int16 arrays of shape (n_re, n_t) plus the quantizer
    clip count; bit-identical to calling :func:`precode_re` per column.
    """
    wide_re, wide_im = karatsuba_matmul_wide(matrix, x_block)
    return quantize_array(wide_re, wide_im)
