"""TX-to-RX coefficient reordering for uplink combining.

The receive side multiplies with the transpose of the stored matrix, but
the dot-product units only take 2x8 blocks. The converter buffers one
matrix in TX port order, then emits the transpose partitioned into 2x8
blocks: row pairs of H^T top to bottom, and within a row pair the 8-column
chunks left to right. A write FSM (Read_input/Hold_output) and a read FSM
(wait_for_in_read_complete/write_output) hand the buffered matrix across
with backpressure, never dropping elements.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .fixedpoint import FixedComplex, WIDE_ZERO, wide_add
from .memory import NUM_LAYERS, reassemble_ports
from .multiplier import OutputVector, combine, dot_product_2x8

BLOCK_ROWS = 2
BLOCK_COLS = 8


class ConverterProtocolError(RuntimeError):
    """An event arrived that the FSM pair cannot legally consume."""


class WriteState(enum.Enum):
    READ_INPUT = "read_input"
    HOLD_OUTPUT = "hold_output"


class ReadState(enum.Enum):
    WAIT_FOR_IN_READ_COMPLETE = "wait_for_in_read_complete"
    WRITE_OUTPUT = "write_output"


class ConverterEvent(enum.Enum):
    TX_ELEMENT_IN = "tx_element_in"
    INPUT_DONE = "input_done"
    COPY_TAKEN = "copy_taken"
    OUTPUT_DRAINED = "output_drained"


@dataclass
class StepResult:
    accepted: bool  # False = backpressure stall, caller must retry
    output_blocks: list[np.ndarray] | None = None


def tx_to_rx_reorder(matrix: np.ndarray) -> list[np.ndarray]:
    """Partition H^T into the RX-sequence 2x8 blocks.

    ``matrix`` is the logical (n_t, 8, 2) array. Row pair (2r, 2r+1) of H^T
    is split into n_t/8 column chunks; blocks come out pair by pair, left
    chunk first. The flat element order inside a block follows the memory
    ports' two-row column-major interleave (see :func:`rx_stream_elements`).
    """
    n_t = matrix.shape[0]
    if matrix.shape != (n_t, NUM_LAYERS, 2) or n_t % BLOCK_COLS:
        raise ValueError(f"matrix shape {matrix.shape} is not (8k, 8, 2)")
    ht = matrix.transpose(1, 0, 2)  # (8, n_t, 2)
    blocks = []
    for pair in range(NUM_LAYERS // BLOCK_ROWS):
        for chunk in range(n_t // BLOCK_COLS):
            rows = slice(BLOCK_ROWS * pair, BLOCK_ROWS * pair + BLOCK_ROWS)
            cols = slice(BLOCK_COLS * chunk, BLOCK_COLS * chunk + BLOCK_COLS)
            blocks.append(np.ascontiguousarray(ht[rows, cols]))
    return blocks


def rx_stream_elements(blocks: list[np.ndarray]) -> np.ndarray:
    """Flatten RX blocks to the element stream: two rows interleaved per column."""
    streams = [b.transpose(1, 0, 2).reshape(BLOCK_ROWS * BLOCK_COLS, 2) for b in blocks]
    return np.concatenate(streams, axis=0)


def reassemble_transpose(blocks: list[np.ndarray], n_t: int) -> np.ndarray:
    """Rebuild H^T (8, n_t, 2) from the RX block stream."""
    ht = np.empty((NUM_LAYERS, n_t, 2), dtype=np.int16)
    chunks = n_t // BLOCK_COLS
    for i, block in enumerate(blocks):
        pair, chunk = divmod(i, chunks)
        ht[BLOCK_ROWS * pair : BLOCK_ROWS * (pair + 1),
           BLOCK_COLS * chunk : BLOCK_COLS * (chunk + 1)] = block
    return ht


def rx_precode_re(matrix: np.ndarray, x: list[FixedComplex]) -> OutputVector:
    """Uplink combine H^T * x through the unchanged 2x8 dot-product units.

    ``x`` carries n_t antenna samples; each H^T row pair accumulates one
    partial per 8-column chunk, then the combiner quantizes the 8 rows.
    """
    n_t = matrix.shape[0]
    if len(x) != n_t:
        raise ValueError(f"uplink vector has {len(x)} samples, expected {n_t}")
    blocks = tx_to_rx_reorder(matrix)
    chunks = n_t // BLOCK_COLS
    partials = []
    for pair in range(NUM_LAYERS // BLOCK_ROWS):
        hi, lo = WIDE_ZERO, WIDE_ZERO
        for chunk in range(chunks):
            block = blocks[pair * chunks + chunk]
            block_fc = [
                [FixedComplex(int(block[r, k, 0]), int(block[r, k, 1])) for k in range(BLOCK_COLS)]
                for r in range(BLOCK_ROWS)
            ]
            ph, pl = dot_product_2x8(block_fc, x[BLOCK_COLS * chunk : BLOCK_COLS * (chunk + 1)])
            hi = wide_add(hi, ph)
            lo = wide_add(lo, pl)
        partials.append((hi, lo))
    return combine(partials, NUM_LAYERS)


class ConverterFsm:
    """Producer/consumer FSM pair moving one matrix at a time.

    Input elements arrive in TX port order (the concatenated port streams
    of the coefficient memory). ``input_done`` parks the write FSM in
    Hold_output; the read FSM, on observing that, copies the staging
    buffer, emits the RX-sequence blocks and enters write_output. The
    producer may only reuse the staging buffer after ``copy_taken``;
    until then new elements stall (returned unaccepted, never dropped).
    """

    def __init__(self, n_t: int) -> None:
        if n_t % BLOCK_COLS:
            raise ValueError(f"n_t={n_t} must be a multiple of {BLOCK_COLS}")
        self.n_t = n_t
        self.write_state = WriteState.READ_INPUT
        self.read_state = ReadState.WAIT_FOR_IN_READ_COMPLETE
        self.staging: list[tuple[int, int]] = []
        self.output_copy: np.ndarray | None = None
        self._copy_fresh = False  # read FSM copied, producer not yet acked

    def step(self, event: ConverterEvent, element: tuple[int, int] | None = None) -> StepResult:
        if event is ConverterEvent.TX_ELEMENT_IN:
            if element is None:
                raise ValueError("tx_element_in needs an element")
            if self.write_state is WriteState.HOLD_OUTPUT:
                return StepResult(accepted=False)  # stall until copy_taken
            if len(self.staging) >= self.n_t * NUM_LAYERS:
                raise ConverterProtocolError("staging already holds a full matrix")
            self.staging.append(element)
            return StepResult(accepted=True)

        if event is ConverterEvent.INPUT_DONE:
            if self.write_state is not WriteState.READ_INPUT:
                raise ConverterProtocolError("input_done outside Read_input")
            if len(self.staging) != self.n_t * NUM_LAYERS:
                raise ConverterProtocolError(
                    f"input_done after {len(self.staging)} of {self.n_t * NUM_LAYERS} elements"
                )
            self.write_state = WriteState.HOLD_OUTPUT
            return self._observe()

        if event is ConverterEvent.COPY_TAKEN:
            if self.write_state is not WriteState.HOLD_OUTPUT or not self._copy_fresh:
                raise ConverterProtocolError("copy_taken before the read side copied")
            self.write_state = WriteState.READ_INPUT
            self.staging = []
            self._copy_fresh = False
            return StepResult(accepted=True)

        if event is ConverterEvent.OUTPUT_DRAINED:
            if self.read_state is not ReadState.WRITE_OUTPUT:
                raise ConverterProtocolError("output_drained outside write_output")
            self.read_state = ReadState.WAIT_FOR_IN_READ_COMPLETE
            self.output_copy = None
            return self._observe()

        raise ConverterProtocolError(f"unknown event {event}")

    def _observe(self) -> StepResult:
        """wait_for_in_read_complete -> write_output once the input is held."""
        if (
            self.read_state is ReadState.WAIT_FOR_IN_READ_COMPLETE
            and self.write_state is WriteState.HOLD_OUTPUT
            and not self._copy_fresh
        ):
            flat = np.array(self.staging, dtype=np.int16)
            ports = [flat[16 * p : 16 * (p + 1)] for p in range(self.n_t // 2)]
            self.output_copy = reassemble_ports(ports)
            self.read_state = ReadState.WRITE_OUTPUT
            self._copy_fresh = True
            return StepResult(accepted=True, output_blocks=tx_to_rx_reorder(self.output_copy))
        return StepResult(accepted=True)


def convert_matrix(fsm: ConverterFsm, tx_stream: np.ndarray) -> list[np.ndarray]:
    """Drive one matrix through the handshake; returns its RX blocks.

    ``tx_stream`` is the (n_t*8, 2) element sequence in TX port order.
    """
    for el in tx_stream:
        result = fsm.step(ConverterEvent.TX_ELEMENT_IN, (int(el[0]), int(el[1])))
        if not result.accepted:
            raise ConverterProtocolError("stalled mid-matrix: previous copy not taken")
    result = fsm.step(ConverterEvent.INPUT_DONE)
    if result.output_blocks is None:
        raise ConverterProtocolError("read FSM failed to observe Hold_output")
    blocks = result.output_blocks
    fsm.step(ConverterEvent.COPY_TAKEN)
    fsm.step(ConverterEvent.OUTPUT_DRAINED)
    return blocks
