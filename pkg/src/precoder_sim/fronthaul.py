"""Simplified fronthaul C-plane/U-plane packet formats and input arbitration.

Wire format (little-endian, self-describing):

    magic 0xA55A (2B) | kind (1B) | version=1 (1B) | slot_id (2B) | body

    kind 0 (control):     start_symbol(1) num_symbol(1) start_prb(2)
                          num_prb(2) beam_id(2) bundle_prb(1) re_mask(2) pad(1)
    kind 1 (user data):   symbol(1) pad(1) start_prb(2) num_prb(2)
                          then num_prb*12*V samples, 4B each: re(2)||im(2)
    kind 2 (coefficient): beam_id(2) layer_index(1) pad(1)
                          then N_T samples, 4B each

The per-resource-element vector length V and the antenna count N_T are not
carried on the wire; they are recovered from the payload length, which must
divide evenly.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = 0xA55A
VERSION = 1

TOTAL_PRB = 273
SYMBOLS_PER_SLOT = 14
RE_PER_PRB = 12

_HEADER = struct.Struct("<HBBH")
_C_BODY = struct.Struct("<BBHHHBHB")
_U_BODY = struct.Struct("<BBHH")
_COEF_BODY = struct.Struct("<HBB")


class FrameError(ValueError):
    """Base class for frame encode/decode failures."""


class TruncatedFrameError(FrameError):
    pass


class BadMagicError(FrameError):
    pass


class FrameFieldError(FrameError):
    """A decoded or to-be-encoded field violates a packet invariant."""


class OrphanCoefficientError(ValueError):
    """Coefficient packet arrived before any control packet named its beam."""


class PacketKind(enum.IntEnum):
    CONTROL = 0
    DATA = 1
    COEFFICIENT = 2


@dataclass(frozen=True, slots=True)
class CPlanePacket:
    """Scheduling metadata for one beam allocation rectangle."""

    slot_id: int
    start_symbol: int
    num_symbol: int
    start_prb: int
    num_prb: int
    beam_id: int
    bundle_prb: int = 0  # PRBs sharing one matrix application; 0 = whole allocation
    re_mask: int = 0xFFF  # bit k set -> RE k of each PRB is active

    def __post_init__(self) -> None:
        _check_range("slot_id", self.slot_id, 0, 0xFFFF)
        _check_range("start_symbol", self.start_symbol, 0, SYMBOLS_PER_SLOT - 1)
        _check_range("num_symbol", self.num_symbol, 1, SYMBOLS_PER_SLOT)
        _check_range("start_prb", self.start_prb, 0, TOTAL_PRB - 1)
        _check_range("num_prb", self.num_prb, 1, TOTAL_PRB)
        _check_range("beam_id", self.beam_id, 0, 0xFFFF)
        _check_range("bundle_prb", self.bundle_prb, 0, 0xFF)
        _check_range("re_mask", self.re_mask, 1, 0xFFF)
        if self.start_symbol + self.num_symbol > SYMBOLS_PER_SLOT:
            raise FrameFieldError("allocation exceeds the 14-symbol slot")
        if self.start_prb + self.num_prb > TOTAL_PRB:
            raise FrameFieldError("allocation exceeds the 273-PRB grid")


@dataclass(frozen=True, slots=True)
class UPlanePacket:
    """Per-symbol IQ payload: one length-V sample vector per resource element.

    ``samples`` has shape (num_prb*12, V, 2) int16 with the raw re/im pairs;
    V is the layer count on the downlink and the antenna count on the uplink.
    """

    slot_id: int
    symbol: int
    start_prb: int
    num_prb: int
    samples: np.ndarray

    def __post_init__(self) -> None:
        _check_range("slot_id", self.slot_id, 0, 0xFFFF)
        _check_range("symbol", self.symbol, 0, SYMBOLS_PER_SLOT - 1)
        _check_range("start_prb", self.start_prb, 0, TOTAL_PRB - 1)
        _check_range("num_prb", self.num_prb, 1, TOTAL_PRB)
        if self.start_prb + self.num_prb > TOTAL_PRB:
            raise FrameFieldError("allocation exceeds the 273-PRB grid")
        s = np.asarray(self.samples, dtype=np.int16)
        if s.ndim != 3 or s.shape[0] != self.num_prb * RE_PER_PRB or s.shape[2] != 2:
            raise FrameFieldError(
                f"samples shape {s.shape} != ({self.num_prb * RE_PER_PRB}, V, 2)"
            )
        object.__setattr__(self, "samples", s)

    @property
    def vector_len(self) -> int:
        return int(self.samples.shape[1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UPlanePacket):
            return NotImplemented
        return (
            (self.slot_id, self.symbol, self.start_prb, self.num_prb)
            == (other.slot_id, other.symbol, other.start_prb, other.num_prb)
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True, slots=True)
class BeamCoefficientPacket:
    """One column (layer) of a beam's precoding matrix, N_T samples."""

    slot_id: int
    beam_id: int
    layer_index: int
    coefficients: np.ndarray  # shape (N_T, 2) int16

    def __post_init__(self) -> None:
        _check_range("slot_id", self.slot_id, 0, 0xFFFF)
        _check_range("beam_id", self.beam_id, 0, 0xFFFF)
        _check_range("layer_index", self.layer_index, 0, 0xFF)
        c = np.asarray(self.coefficients, dtype=np.int16)
        if c.ndim != 2 or c.shape[1] != 2 or c.shape[0] < 1:
            raise FrameFieldError(f"coefficients shape {c.shape} != (N_T, 2)")
        object.__setattr__(self, "coefficients", c)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BeamCoefficientPacket):
            return NotImplemented
        return (
            (self.slot_id, self.beam_id, self.layer_index)
            == (other.slot_id, other.beam_id, other.layer_index)
            and np.array_equal(self.coefficients, other.coefficients)
        )


Packet = CPlanePacket | UPlanePacket | BeamCoefficientPacket


@dataclass(frozen=True, slots=True)
class PipelineEvent:
    kind: PacketKind
    payload: Packet
    sequence_no: int


def _check_range(name: str, value: int, lo: int, hi: int) -> None:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise FrameFieldError(f"{name} must be an integer, got {value!r}")
    if not (lo <= value <= hi):
        raise FrameFieldError(f"{name}={value} outside [{lo}, {hi}]")


def _iq_to_bytes(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<i2").tobytes()


def _iq_from_bytes(buf: bytes, n_vectors: int, vec_len: int) -> np.ndarray:
    flat = np.frombuffer(buf, dtype="<i2")
    return flat.reshape(n_vectors, vec_len, 2).astype(np.int16)


def encode_packet(p: Packet) -> bytes:
    """Serialize a packet to its frame image. Deterministic; round-trippable."""
    if isinstance(p, CPlanePacket):
        head = _HEADER.pack(MAGIC, PacketKind.CONTROL, VERSION, p.slot_id)
        body = _C_BODY.pack(
            p.start_symbol, p.num_symbol, p.start_prb, p.num_prb,
            p.beam_id, p.bundle_prb, p.re_mask, 0,
        )
        return head + body
    if isinstance(p, UPlanePacket):
        head = _HEADER.pack(MAGIC, PacketKind.DATA, VERSION, p.slot_id)
        body = _U_BODY.pack(p.symbol, 0, p.start_prb, p.num_prb)
        return head + body + _iq_to_bytes(p.samples)
    if isinstance(p, BeamCoefficientPacket):
        head = _HEADER.pack(MAGIC, PacketKind.COEFFICIENT, VERSION, p.slot_id)
        body = _COEF_BODY.pack(p.beam_id, p.layer_index, 0)
        return head + body + _iq_to_bytes(p.coefficients)
    raise TypeError(f"not a packet: {type(p).__name__}")


def decode_packet(buf: bytes) -> Packet:
    """Parse one frame; exact inverse of :func:`encode_packet` on valid input."""
    if len(buf) < _HEADER.size:
        raise TruncatedFrameError(f"frame of {len(buf)} bytes is shorter than the header")
    magic, kind, version, slot_id = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise BadMagicError(f"magic 0x{magic:04X} != 0x{MAGIC:04X}")
    if version != VERSION:
        raise FrameFieldError(f"unsupported frame version {version}")
    off = _HEADER.size

    if kind == PacketKind.CONTROL:
        if len(buf) < off + _C_BODY.size:
            raise TruncatedFrameError("control frame body truncated")
        (start_symbol, num_symbol, start_prb, num_prb,
         beam_id, bundle_prb, re_mask, _pad) = _C_BODY.unpack_from(buf, off)
        if len(buf) != off + _C_BODY.size:
            raise FrameFieldError("trailing bytes after control frame")
        return CPlanePacket(slot_id, start_symbol, num_symbol, start_prb,
                            num_prb, beam_id, bundle_prb, re_mask)

    if kind == PacketKind.DATA:
        if len(buf) < off + _U_BODY.size:
            raise TruncatedFrameError("user-data frame body truncated")
        symbol, _pad, start_prb, num_prb = _U_BODY.unpack_from(buf, off)
        off += _U_BODY.size
        payload = buf[off:]
        n_re = num_prb * RE_PER_PRB
        if n_re == 0 or len(payload) % (n_re * 4) != 0:
            raise TruncatedFrameError(
                f"user-data payload of {len(payload)} bytes does not cover "
                f"{n_re} resource elements evenly"
            )
        vec = len(payload) // (n_re * 4)
        if vec < 1:
            raise TruncatedFrameError("user-data frame carries no samples")
        samples = _iq_from_bytes(payload, n_re, vec)
        return UPlanePacket(slot_id, symbol, start_prb, num_prb, samples)

    if kind == PacketKind.COEFFICIENT:
        if len(buf) < off + _COEF_BODY.size:
            raise TruncatedFrameError("coefficient frame body truncated")
        beam_id, layer_index, _pad = _COEF_BODY.unpack_from(buf, off)
        off += _COEF_BODY.size
        payload = buf[off:]
        if len(payload) == 0 or len(payload) % 4 != 0:
            raise TruncatedFrameError(
                f"coefficient payload of {len(payload)} bytes is not a whole "
                "number of samples"
            )
        coeffs = _iq_from_bytes(payload, len(payload) // 4, 1)[:, 0, :]
        return BeamCoefficientPacket(slot_id, beam_id, layer_index, coeffs)

    raise FrameFieldError(f"unknown frame kind {kind}")


_KIND_OF = {
    CPlanePacket: PacketKind.CONTROL,
    UPlanePacket: PacketKind.DATA,
    BeamCoefficientPacket: PacketKind.COEFFICIENT,
}


@dataclass
class InputArbiter:
    """Splits the arrival-ordered packet stream into per-kind pipelines.

    Relative order within each kind is preserved and nothing is dropped or
    duplicated. A coefficient packet whose beam has not been named by a
    control packet of the same slot is rejected (fail fast rather than
    buffer: an orphan points at a scheduling bug upstream).
    """

    control: list[PipelineEvent] = field(default_factory=list)
    data: list[PipelineEvent] = field(default_factory=list)
    coefficients: list[PipelineEvent] = field(default_factory=list)
    _next_seq: int = 0
    _beams_by_slot: dict[int, set[int]] = field(default_factory=dict)

    def push(self, packet: Packet) -> PipelineEvent:
        kind = _KIND_OF[type(packet)]
        if kind is PacketKind.CONTROL:
            self._beams_by_slot.setdefault(packet.slot_id, set()).add(packet.beam_id)
        elif kind is PacketKind.COEFFICIENT:
            seen = self._beams_by_slot.get(packet.slot_id, set())
            if packet.beam_id not in seen:
                raise OrphanCoefficientError(
                    f"coefficients for beam 0x{packet.beam_id:04X} in slot "
                    f"{packet.slot_id} precede any control reference"
                )
        event = PipelineEvent(kind, packet, self._next_seq)
        self._next_seq += 1
        {
            PacketKind.CONTROL: self.control,
            PacketKind.DATA: self.data,
            PacketKind.COEFFICIENT: self.coefficients,
        }[kind].append(event)
        return event


def arbitrate(
    packets: list[Packet],
) -> tuple[list[PipelineEvent], list[PipelineEvent], list[PipelineEvent]]:
    """Run a fresh arbiter over ``packets``; returns (control, data, coefficient)."""
    arb = InputArbiter()
    for p in packets:
        arb.push(p)
    return arb.control, arb.data, arb.coefficients
