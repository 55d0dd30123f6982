"""RRH precoder memory subsystem model.

Covers the beam-ID roster (beam -> IAN ledger), the 273x14 resource-grid
mapping buffer with its four-bank wipe/read/write rotation, the precoder
coefficient memory with the hardware even/odd column storage order and the
two-rows-per-port read streams, and the sequence lookup that turns one
symbol's grid row into matrix-reuse configs for the multiplier.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .fronthaul import CPlanePacket, RE_PER_PRB, SYMBOLS_PER_SLOT, TOTAL_PRB

MAX_USERS_PER_SLOT = 64  # roster capacity
IAN_BITS = 7
GRID_ENTRY_BITS = 8  # 7-bit IAN + 1 valid bit
RGM_BITS = TOTAL_PRB * SYMBOLS_PER_SLOT * GRID_ENTRY_BITS  # 30576
RGM_WIPE_CYCLES = 1024  # memory-clock cycles to clear one bank
RGM_IANS_PER_CYCLE = 4  # 32-bit write port, 8 bits per entry
PCM_READ_CYCLES = 16  # two rows per port, one element per cycle
NUM_LAYERS = 8
NUM_RGM_BANKS = 4


class RosterCapacityError(RuntimeError):
    """More than 64 distinct beams requested an IAN within one slot."""


class AllocationOverlapError(RuntimeError):
    """A grid cell already owned by another IAN was written again."""


class BankStateError(RuntimeError):
    """A bank was driven outside the wipe/write/read rotation."""


class UnknownIanError(KeyError):
    pass


class IncompleteMatrixError(RuntimeError):
    """A matrix was read before all of its layer columns arrived."""


@dataclass
class BeamRoster:
    """Slot-local ledger mapping 16-bit beam IDs to ascending IANs."""

    slot_id: int
    _ians: dict[int, int] = field(default_factory=dict)

    def lookup_or_allocate(self, beam_id: int, slot_id: int) -> tuple[int, bool]:
        """Return (ian, is_new); a new slot_id resets the ledger."""
        if slot_id != self.slot_id:
            self.slot_id = slot_id
            self._ians = {}
        ian = self._ians.get(beam_id)
        if ian is not None:
            return ian, False
        if len(self._ians) >= MAX_USERS_PER_SLOT:
            raise RosterCapacityError(
                f"slot {slot_id}: beam 0x{beam_id:04X} is the "
                f"{MAX_USERS_PER_SLOT + 1}th distinct beam"
            )
        ian = len(self._ians)
        self._ians[beam_id] = ian
        return ian, True

    def lookup(self, beam_id: int) -> int:
        try:
            return self._ians[beam_id]
        except KeyError:
            raise UnknownIanError(f"beam 0x{beam_id:04X} has no IAN in slot {self.slot_id}")

    def __len__(self) -> int:
        return len(self._ians)


def roster_lookup_or_allocate(roster: BeamRoster, beam_id: int, slot_id: int) -> tuple[int, bool]:
    return roster.lookup_or_allocate(beam_id, slot_id)


class ResourceGrid:
    """273x14 array of {7-bit IAN, valid} entries; 30576 bits total."""

    def __init__(self) -> None:
        self.ian = np.zeros((TOTAL_PRB, SYMBOLS_PER_SLOT), dtype=np.uint8)
        self.valid = np.zeros((TOTAL_PRB, SYMBOLS_PER_SLOT), dtype=bool)

    @staticmethod
    def bit_size() -> int:
        return RGM_BITS

    def wipe(self) -> int:
        """Clear all entries; costs RGM_WIPE_CYCLES on the memory clock."""
        self.ian.fill(0)
        self.valid.fill(False)
        return RGM_WIPE_CYCLES

    def dump(self) -> str:
        """Deterministic text image: one line per symbol, IAN runs in PRB order."""
        lines = []
        for sym in range(SYMBOLS_PER_SLOT):
            parts = []
            for ian, start, length, valid in _runs(self.ian[:, sym], self.valid[:, sym]):
                tag = f"ian{ian}" if valid else "--"
                parts.append(f"[{start}:{start + length})={tag}")
            lines.append(f"sym{sym:02d} " + " ".join(parts))
        return "\n".join(lines)


def rgm_write(grid: ResourceGrid, c: CPlanePacket, ian: int) -> int:
    """Fill the packet's PRB x symbol rectangle with {ian, valid}.

    Returns the memory-clock cycle count, four entries per cycle. Writing a
    cell that another IAN already owns is a double allocation and raises.
    """
    if not (0 <= ian < (1 << IAN_BITS)):
        raise ValueError(f"ian={ian} outside 7-bit range")
    prbs = slice(c.start_prb, c.start_prb + c.num_prb)
    syms = slice(c.start_symbol, c.start_symbol + c.num_symbol)
    window_valid = grid.valid[prbs, syms]
    window_ian = grid.ian[prbs, syms]
    clash = window_valid & (window_ian != ian)
    if clash.any():
        prb_off, sym_off = np.argwhere(clash)[0]
        raise AllocationOverlapError(
            f"PRB {c.start_prb + int(prb_off)} symbol {c.start_symbol + int(sym_off)} "
            f"already belongs to IAN {int(window_ian[prb_off, sym_off])}, "
            f"refusing IAN {ian}"
        )
    grid.ian[prbs, syms] = ian
    grid.valid[prbs, syms] = True
    cells = c.num_prb * c.num_symbol
    return -(-cells // RGM_IANS_PER_CYCLE)  # ceil


class BankState(enum.Enum):
    WIPED = "wiped"
    WRITING = "writing"
    READY_TO_READ = "ready_to_read"
    READING = "reading"
    DIRTY = "dirty"


@dataclass(frozen=True)
class BankSchedule:
    write_bank: int
    read_bank: int | None
    wipe_bank: int | None


def rgm_bank_schedule(slot_index: int) -> BankSchedule:
    """Closed form of the four-bank rotation.

    write = s mod 4, read = (s-1) mod 4, wipe = (s+2) mod 4; slot 0 has no
    read and no wipe because reset already wiped banks 0, 1 and 2.
    """
    if slot_index < 0:
        raise ValueError("slot_index must be >= 0")
    return BankSchedule(
        write_bank=slot_index % NUM_RGM_BANKS,
        read_bank=(slot_index - 1) % NUM_RGM_BANKS if slot_index >= 1 else None,
        wipe_bank=(slot_index + 2) % NUM_RGM_BANKS if slot_index >= 1 else None,
    )


class RgmBankSet:
    """Four resource-grid banks rotating through wipe -> write -> read.

    Written data is read one slot later and wiped the slot after that
    (two-slot look-ahead). Reset leaves banks 0-2 wiped and bank 3 dirty;
    bank 3 is wiped during slot 1, just before its first write in slot 3.
    """

    def __init__(self) -> None:
        self.banks = [ResourceGrid() for _ in range(NUM_RGM_BANKS)]
        self.states = [BankState.WIPED] * 3 + [BankState.DIRTY]
        self._slot: int | None = None
        self.wipe_cycles_total = 0

    def begin_slot(self, slot_index: int) -> BankSchedule:
        if self._slot is not None and slot_index != self._slot + 1:
            raise BankStateError(f"slots must advance by 1, got {self._slot} -> {slot_index}")
        self._slot = slot_index
        sched = rgm_bank_schedule(slot_index)

        if sched.wipe_bank is not None:
            self._expect(sched.wipe_bank, BankState.DIRTY, "wipe")
            self.wipe_cycles_total += self.banks[sched.wipe_bank].wipe()
            self.states[sched.wipe_bank] = BankState.WIPED
        self._expect(sched.write_bank, BankState.WIPED, "write")
        self.states[sched.write_bank] = BankState.WRITING
        if sched.read_bank is not None:
            self._expect(sched.read_bank, BankState.READY_TO_READ, "read")
            self.states[sched.read_bank] = BankState.READING
        return sched

    def end_slot(self) -> None:
        for i, st in enumerate(self.states):
            if st is BankState.WRITING:
                self.states[i] = BankState.READY_TO_READ
            elif st is BankState.READING:
                self.states[i] = BankState.DIRTY

    def write_grid(self, sched: BankSchedule) -> ResourceGrid:
        return self.banks[sched.write_bank]

    def read_grid(self, sched: BankSchedule) -> ResourceGrid:
        if sched.read_bank is None:
            raise BankStateError("no bank is readable in slot 0")
        return self.banks[sched.read_bank]

    def _expect(self, bank: int, state: BankState, op: str) -> None:
        if self.states[bank] is not state:
            raise BankStateError(
                f"cannot {op} bank {bank}: state is {self.states[bank].value}, "
                f"needs {state.value}"
            )


def coefficient_store_order(n_t: int) -> np.ndarray:
    """Row permutation applied before a column enters the coefficient memory.

    Even rows first, then odd rows: [0, 2, ..., n_t-2, 1, 3, ..., n_t-1].
    """
    return np.concatenate([np.arange(0, n_t, 2), np.arange(1, n_t, 2)])


class CoefficientMemory:
    """Precoder coefficient memory: matrices stored in multiplier port order.

    A matrix arrives one column (layer) at a time; each column is stored
    even-rows-first. Reads stream the matrix over n_t/2 ports, each port
    owning rows 2p and 2p+1 and emitting them interleaved column-major, so
    the full matrix always takes 16 cycles regardless of n_t.
    """

    def __init__(self, n_t: int) -> None:
        if n_t < 2 or n_t % 2:
            raise ValueError(f"n_t={n_t} must be a positive even row count")
        self.n_t = n_t
        self._store_order = coefficient_store_order(n_t)
        # ian -> (n_t, NUM_LAYERS, 2) int16 in storage (even/odd) row order
        self._columns: dict[int, np.ndarray] = {}
        self._have: dict[int, set[int]] = {}

    def write_column(self, ian: int, layer_index: int, column: np.ndarray) -> None:
        """Store one matrix column for ``ian`` in hardware order."""
        col = np.asarray(column, dtype=np.int16)
        if col.shape != (self.n_t, 2):
            raise ValueError(f"column shape {col.shape} != ({self.n_t}, 2)")
        if not (0 <= layer_index < NUM_LAYERS):
            raise ValueError(f"layer_index={layer_index} outside 0..{NUM_LAYERS - 1}")
        if ian not in self._columns:
            self._columns[ian] = np.zeros((self.n_t, NUM_LAYERS, 2), dtype=np.int16)
            self._have[ian] = set()
        self._columns[ian][:, layer_index, :] = col[self._store_order]
        self._have[ian].add(layer_index)

    def stored_image(self, ian: int) -> np.ndarray:
        """Raw storage-order image (even/odd interleave NOT undone)."""
        self._require_complete(ian)
        return self._columns[ian].copy()

    def reconstruct(self, ian: int) -> np.ndarray:
        """Logical (n_t, 8, 2) matrix; exact inverse of the storage order."""
        self._require_complete(ian)
        logical = np.empty_like(self._columns[ian])
        logical[self._store_order] = self._columns[ian]
        return logical

    def read(self, ian: int) -> tuple[list[np.ndarray], int]:
        """Stream the matrix over n_t/2 ports.

        Port p returns a (16, 2) int16 stream: rows 2p and 2p+1 interleaved
        column-major (r_even c0, r_odd c0, r_even c1, ...). Returns the port
        list and the cycle count, which is always PCM_READ_CYCLES.
        """
        logical = self.reconstruct(ian)
        ports = []
        for p in range(self.n_t // 2):
            pair = logical[2 * p : 2 * p + 2]  # (2, NUM_LAYERS, 2)
            stream = pair.transpose(1, 0, 2).reshape(2 * NUM_LAYERS, 2)
            ports.append(stream)
        return ports, PCM_READ_CYCLES

    def ians(self) -> list[int]:
        return sorted(self._columns)

    def dump(self) -> str:
        lines = []
        for ian in self.ians():
            img = self._columns[ian]
            lines.append(f"ian{ian:03d} layers={sorted(self._have[ian])} "
                         f"first_row=({int(img[0, 0, 0])},{int(img[0, 0, 1])})")
        return "\n".join(lines)

    def _require_complete(self, ian: int) -> None:
        if ian not in self._columns:
            raise UnknownIanError(f"no matrix stored for IAN {ian}")
        missing = set(range(NUM_LAYERS)) - self._have[ian]
        if missing:
            raise IncompleteMatrixError(
                f"IAN {ian} is missing layer columns {sorted(missing)}"
            )


def reassemble_ports(ports: list[np.ndarray]) -> np.ndarray:
    """Invert :meth:`CoefficientMemory.read`: port streams -> (n_t, 8, 2)."""
    n_t = 2 * len(ports)
    matrix = np.empty((n_t, NUM_LAYERS, 2), dtype=np.int16)
    for p, stream in enumerate(ports):
        pair = np.asarray(stream).reshape(NUM_LAYERS, 2, 2).transpose(1, 0, 2)
        matrix[2 * p : 2 * p + 2] = pair
    return matrix


@dataclass(frozen=True, slots=True)
class MultConfig:
    """One matrix-reuse run handed to the multiplier over mult_cfg."""

    ian: int
    reuse_count: int  # consecutive PRBs using this matrix
    load_new: bool  # False only when the previous run used the same IAN

    def __post_init__(self) -> None:
        if self.reuse_count < 1:
            raise ValueError("reuse_count must be >= 1")


@dataclass(frozen=True, slots=True)
class ZeroFillRange:
    """Unallocated PRB span: the output stage sends zeros, no matrix load."""

    start_prb: int
    length: int


def _runs(ians: np.ndarray, valid: np.ndarray):
    """Maximal runs of equal (ian, valid) along one symbol column."""
    start = 0
    n = len(ians)
    while start < n:
        end = start + 1
        while end < n and valid[end] == valid[start] and (
            not valid[start] or ians[end] == ians[start]
        ):
            end += 1
        yield int(ians[start]), start, end - start, bool(valid[start])
        start = end


def rgm_sequence_lookup(
    grid: ResourceGrid, symbol: int
) -> tuple[list[MultConfig], list[ZeroFillRange]]:
    """Run-length encode one symbol's 273 PRB entries in PRB order.

    Valid runs become MultConfigs; load_new clears only when the previous
    valid run used the same IAN (reuse across a zero gap needs no reload).
    Invalid cells become zero-fill ranges. Run lengths plus zero-fill
    lengths always sum to 273.
    """
    configs: list[MultConfig] = []
    gaps: list[ZeroFillRange] = []
    prev_ian: int | None = None
    for ian, start, length, valid in _runs(grid.ian[:, symbol], grid.valid[:, symbol]):
        if not valid:
            gaps.append(ZeroFillRange(start, length))
            continue
        configs.append(MultConfig(ian, length, load_new=ian != prev_ian))
        prev_ian = ian
    return configs, gaps


def iter_symbol_layout(
    configs: list[MultConfig], gaps: list[ZeroFillRange]
) -> list[tuple[int, int, MultConfig | None]]:
    """Re-interleave a symbol's configs and gaps into PRB order.

    Yields (start_prb, length, config-or-None) spans covering all 273 PRBs;
    gap starts are explicit, config starts follow from the running cursor.
    """
    spans: list[tuple[int, int, MultConfig | None]] = []
    gi = 0
    cursor = 0
    for cfg in configs:
        while gi < len(gaps) and gaps[gi].start_prb == cursor:
            spans.append((cursor, gaps[gi].length, None))
            cursor += gaps[gi].length
            gi += 1
        spans.append((cursor, cfg.reuse_count, cfg))
        cursor += cfg.reuse_count
    while gi < len(gaps):
        spans.append((gaps[gi].start_prb, gaps[gi].length, None))
        cursor += gaps[gi].length
        gi += 1
    if cursor != TOTAL_PRB:
        raise ValueError(f"symbol layout covers {cursor} PRBs, expected {TOTAL_PRB}")
    return spans
