"""End-to-end slot datapath: arbitrated packets in, precoded IQ out.

One simulated slot runs in two phases against the four-bank grid rotation.
The write phase of period p fills bank p%4 from that slot's control
packets (roster allocation, grid rectangles, coefficient columns, user
IQ staging); the read phase of period p+1 walks the bank symbol by
symbol, turns grid runs into matrix-reuse configs, streams matrices out
of the coefficient memory (through the TX-to-RX converter on the uplink)
and multiplies every allocated resource element. A final flush period
drains the last slot.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .fixedpoint import quantize_array
from .fronthaul import (
    PipelineEvent,
    Packet,
    RE_PER_PRB,
    SYMBOLS_PER_SLOT,
    TOTAL_PRB,
    arbitrate,
)
from .memory import (
    AllocationOverlapError,
    BeamRoster,
    CoefficientMemory,
    IncompleteMatrixError,
    ResourceGrid,
    RgmBankSet,
    RosterCapacityError,
    UnknownIanError,
    iter_symbol_layout,
    reassemble_ports,
    rgm_sequence_lookup,
    rgm_write,
)
from .multiplier import NUM_LAYERS, karatsuba_matmul_wide
from .rx_converter import ConverterFsm, convert_matrix, reassemble_transpose
from .timing import (
    LatencyReport,
    Run,
    SymbolAllocation,
    TimingParams,
    estimate_dsp,
    slot_latency,
)

TOTAL_RE = TOTAL_PRB * RE_PER_PRB  # 3276


class Direction(enum.Enum):
    TX = "tx"  # downlink: y = H x, x over 8 layers
    RX = "rx"  # uplink combine: y = H^T x, x over n_t antennas


class PipelineError(RuntimeError):
    """A packet could not be applied; message carries its sequence number."""


@dataclass(frozen=True)
class SlotJob:
    """All arbitrated events of one slot, per kind, in arrival order."""

    slot_id: int
    control: tuple[PipelineEvent, ...]
    data: tuple[PipelineEvent, ...]
    coefficients: tuple[PipelineEvent, ...]


@dataclass
class SlotResult:
    slot_id: int
    output: np.ndarray  # (14, 3276, n_t or 8, 2) int16
    saturation_count: int
    roster_size: int
    allocated_re: int
    n_mult: int
    write_cycles: int
    latency: LatencyReport


@dataclass
class _SlotState:
    slot_id: int
    roster: BeamRoster
    pcm: CoefficientMemory
    mask: np.ndarray  # (273, 14) uint16 of per-PRB RE masks
    x: np.ndarray  # (14, 3276, vec, 2) int16 staged user IQ
    write_cycles: int  # memory-clock cycles spent filling the grid bank


def group_slots(
    control: list[PipelineEvent],
    data: list[PipelineEvent],
    coefficients: list[PipelineEvent],
) -> list[SlotJob]:
    """Partition the three arbitrated streams by slot, first-seen order."""
    order: list[int] = []
    buckets: dict[int, tuple[list, list, list]] = {}
    merged = sorted(control + data + coefficients, key=lambda ev: ev.sequence_no)
    for ev in merged:
        sid = ev.payload.slot_id
        if sid not in buckets:
            buckets[sid] = ([], [], [])
            order.append(sid)
    for idx, stream in ((0, control), (1, data), (2, coefficients)):
        for ev in stream:
            buckets[ev.payload.slot_id][idx].append(ev)
    return [
        SlotJob(sid, tuple(buckets[sid][0]), tuple(buckets[sid][1]), tuple(buckets[sid][2]))
        for sid in order
    ]


class Pipeline:
    """Drives packets for any number of slots through the datapath."""

    def __init__(
        self,
        n_t: int,
        direction: Direction = Direction.TX,
        timing: TimingParams | None = None,
    ) -> None:
        if n_t < 2 or n_t % 2:
            raise ValueError(f"n_t={n_t} must be an even antenna count")
        if direction is Direction.RX and n_t % 8:
            raise ValueError("uplink conversion needs n_t to be a multiple of 8")
        self.n_t = n_t
        self.direction = direction
        self.timing = timing if timing is not None else TimingParams()

    @property
    def x_width(self) -> int:
        return NUM_LAYERS if self.direction is Direction.TX else self.n_t

    @property
    def y_width(self) -> int:
        return self.n_t if self.direction is Direction.TX else NUM_LAYERS

    def run_iter(self, packets: list[Packet]):
        """Yield one SlotResult per slot, keeping at most two slots in flight."""
        control, data, coefficients = arbitrate(packets)
        jobs = group_slots(control, data, coefficients)
        banks = RgmBankSet()
        states: list[_SlotState | None] = []
        for period in range(len(jobs) + (1 if jobs else 0)):
            sched = banks.begin_slot(period)
            if period < len(jobs):
                states.append(self._write_phase(jobs[period], banks.write_grid(sched)))
            if sched.read_bank is not None and period - 1 < len(jobs):
                state = states[period - 1]
                assert state is not None
                states[period - 1] = None  # free the staging buffers
                yield self._read_phase(state, banks.read_grid(sched))
            banks.end_slot()

    def run(self, packets: list[Packet]) -> list[SlotResult]:
        return list(self.run_iter(packets))

    def _write_phase(self, job: SlotJob, grid: ResourceGrid) -> _SlotState:
        roster = BeamRoster(slot_id=job.slot_id)
        pcm = CoefficientMemory(self.n_t)
        mask = np.zeros((TOTAL_PRB, SYMBOLS_PER_SLOT), dtype=np.uint16)
        write_cycles = 0

        for ev in job.control:
            c = ev.payload
            try:
                ian, _ = roster.lookup_or_allocate(c.beam_id, c.slot_id)
                write_cycles += rgm_write(grid, c, ian)
            except (RosterCapacityError, AllocationOverlapError) as exc:
                raise PipelineError(f"packet seq {ev.sequence_no}: {exc}") from exc
            prbs = slice(c.start_prb, c.start_prb + c.num_prb)
            syms = slice(c.start_symbol, c.start_symbol + c.num_symbol)
            mask[prbs, syms] = c.re_mask

        for ev in job.coefficients:
            p = ev.payload
            if p.coefficients.shape[0] != self.n_t:
                raise PipelineError(
                    f"packet seq {ev.sequence_no}: matrix column has "
                    f"{p.coefficients.shape[0]} rows, datapath is n_t={self.n_t}"
                )
            try:
                ian = roster.lookup(p.beam_id)
                pcm.write_column(ian, p.layer_index, p.coefficients)
            except (UnknownIanError, ValueError) as exc:
                raise PipelineError(f"packet seq {ev.sequence_no}: {exc}") from exc

        x = np.zeros((SYMBOLS_PER_SLOT, TOTAL_RE, self.x_width, 2), dtype=np.int16)
        for ev in job.data:
            u = ev.payload
            if u.vector_len != self.x_width:
                raise PipelineError(
                    f"packet seq {ev.sequence_no}: {u.vector_len}-sample vectors, "
                    f"{self.direction.value} datapath takes {self.x_width}"
                )
            start = u.start_prb * RE_PER_PRB
            x[u.symbol, start : start + u.num_prb * RE_PER_PRB] = u.samples
        return _SlotState(job.slot_id, roster, pcm, mask, x, write_cycles)

    def _read_phase(self, state: _SlotState, grid: ResourceGrid) -> SlotResult:
        output = np.zeros((SYMBOLS_PER_SLOT, TOTAL_RE, self.y_width, 2), dtype=np.int16)
        fsm = ConverterFsm(self.n_t) if self.direction is Direction.RX else None
        saturations = 0
        allocated_cells = 0
        allocs: list[SymbolAllocation] = []
        op_matrix: np.ndarray | None = None

        for sym in range(SYMBOLS_PER_SLOT):
            configs, gaps = rgm_sequence_lookup(grid, sym)
            allocs.append(SymbolAllocation(tuple(Run(c.ian, c.reuse_count) for c in configs)))
            for start, length, cfg in iter_symbol_layout(configs, gaps):
                if cfg is None:
                    continue  # zero fill: output buffer starts zeroed
                allocated_cells += length
                if cfg.load_new:
                    try:
                        ports, _cycles = state.pcm.read(cfg.ian)
                    except (UnknownIanError, IncompleteMatrixError) as exc:
                        raise PipelineError(f"slot {state.slot_id}: {exc}") from exc
                    matrix = reassemble_ports(ports)
                    if fsm is not None:
                        blocks = convert_matrix(fsm, np.concatenate(ports, axis=0))
                        op_matrix = reassemble_transpose(blocks, self.n_t)
                    else:
                        op_matrix = matrix
                assert op_matrix is not None  # first run of a symbol always loads
                res = slice(start * RE_PER_PRB, (start + length) * RE_PER_PRB)
                wide_re, wide_im = karatsuba_matmul_wide(op_matrix, state.x[sym, res])
                re, im, sat = quantize_array(wide_re, wide_im)
                saturations += sat
                output[sym, res, :, 0] = re
                output[sym, res, :, 1] = im
            # the RE mask gates what leaves the datapath, after the multiply
            bits = (state.mask[:, sym, None] >> np.arange(RE_PER_PRB)[None, :]) & 1
            output[sym, ~bits.reshape(TOTAL_RE).astype(bool)] = 0

        n_mult = max(len(state.roster), allocated_cells * RE_PER_PRB)
        latency = slot_latency(
            allocs,
            self.timing,
            n_mult_total=n_mult,
            dsp_estimate=estimate_dsp(self.n_t, NUM_LAYERS),
        )
        return SlotResult(
            slot_id=state.slot_id,
            output=output,
            saturation_count=saturations,
            roster_size=len(state.roster),
            allocated_re=allocated_cells * RE_PER_PRB,
            n_mult=n_mult,
            write_cycles=state.write_cycles,
            latency=latency,
        )
