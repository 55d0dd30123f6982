from fractions import Fraction

import numpy as np
import pytest

from precoder_sim import golden
from precoder_sim.fronthaul import (
    BeamCoefficientPacket,
    CPlanePacket,
    UPlanePacket,
    arbitrate,
)
from precoder_sim.pipeline import (
    Direction,
    Pipeline,
    PipelineError,
    TOTAL_RE,
    group_slots,
)

RNG = np.random.default_rng(77)


def _coef_packets(slot_id, beam_id, matrix):
    return [
        BeamCoefficientPacket(slot_id, beam_id, layer, matrix[:, layer, :])
        for layer in range(8)
    ]


def _u_packet(slot_id, symbol, start_prb, num_prb, vec, rng=RNG):
    samples = rng.integers(-32768, 32768, size=(num_prb * 12, vec, 2)).astype(np.int16)
    return UPlanePacket(slot_id, symbol, start_prb, num_prb, samples)


def _matrix(n_t, rng=RNG):
    return rng.integers(-32768, 32768, size=(n_t, 8, 2)).astype(np.int16)


def test_group_slots_first_seen_order():
    c5 = CPlanePacket(5, 0, 1, 0, 1, beam_id=1)
    c2 = CPlanePacket(2, 0, 1, 0, 1, beam_id=1)
    jobs = group_slots(*arbitrate([c5, c2, c5]))
    assert [j.slot_id for j in jobs] == [5, 2]
    assert len(jobs[0].control) == 2


def test_empty_run():
    assert Pipeline(16).run([]) == []


def test_single_slot_matches_oracle():
    n_t = 16
    h_a, h_b = _matrix(n_t), _matrix(n_t)
    packets = [
        CPlanePacket(0, 0, 14, 0, 100, beam_id=0xA),
        CPlanePacket(0, 0, 14, 150, 123, beam_id=0xB),
        *_coef_packets(0, 0xA, h_a),
        *_coef_packets(0, 0xB, h_b),
        *[_u_packet(0, sym, 0, 273, 8) for sym in range(14)],
    ]
    pipe = Pipeline(n_t)
    (result,) = pipe.run(packets)

    x = np.zeros((14, TOTAL_RE, 8, 2), dtype=np.int16)
    for p in packets:
        if isinstance(p, UPlanePacket):
            x[p.symbol] = p.samples
    for sym in range(14):
        for beam, lo, hi in ((h_a, 0, 1200), (h_b, 1800, 3276)):
            re, im = golden.quantized_matvec(beam, x[sym, lo:hi])
            assert np.array_equal(result.output[sym, lo:hi, :, 0], re)
            assert np.array_equal(result.output[sym, lo:hi, :, 1], im)
        # the 50-PRB hole and nothing else is zero
        assert not result.output[sym, 1200:1800].any()
    assert result.roster_size == 2
    assert result.allocated_re == 223 * 14 * 12
    assert result.n_mult == result.allocated_re


def test_unallocated_symbols_stay_zero():
    n_t = 16
    packets = [
        CPlanePacket(0, 3, 2, 0, 273, beam_id=1),  # symbols 3-4 only
        *_coef_packets(0, 1, _matrix(n_t)),
        *[_u_packet(0, sym, 0, 273, 8) for sym in range(14)],
    ]
    (result,) = Pipeline(n_t).run(packets)
    for sym in range(14):
        if sym in (3, 4):
            assert result.output[sym].any()
        else:
            assert not result.output[sym].any()


def test_re_mask_gates_output_after_multiply():
    n_t = 16
    mask = 0b000000001111  # only REs 0-3 of each PRB leave the datapath
    h = _matrix(n_t)
    packets = [
        CPlanePacket(0, 0, 14, 0, 273, beam_id=1, re_mask=mask),
        *_coef_packets(0, 1, h),
        *[_u_packet(0, sym, 0, 273, 8) for sym in range(14)],
    ]
    (masked,) = Pipeline(n_t).run(packets)
    full_packets = [
        CPlanePacket(0, 0, 14, 0, 273, beam_id=1),
        *packets[1:],
    ]
    (full,) = Pipeline(n_t).run(full_packets)
    kept = np.zeros(TOTAL_RE, dtype=bool)
    for prb in range(273):
        kept[prb * 12 : prb * 12 + 4] = True
    assert np.array_equal(masked.output[:, kept], full.output[:, kept])
    assert not masked.output[:, ~kept].any()
    # mask does not change what the multiplier array processes
    assert masked.n_mult == full.n_mult
    assert masked.saturation_count == full.saturation_count


def test_rx_direction_uses_transpose():
    n_t = 32
    h = _matrix(n_t)
    packets = [
        CPlanePacket(0, 0, 14, 0, 273, beam_id=2),
        *_coef_packets(0, 2, h),
        *[_u_packet(0, sym, 0, 273, n_t) for sym in range(14)],
    ]
    (result,) = Pipeline(n_t, Direction.RX).run(packets)
    assert result.output.shape == (14, TOTAL_RE, 8, 2)
    x = np.zeros((14, TOTAL_RE, n_t, 2), dtype=np.int16)
    for p in packets:
        if isinstance(p, UPlanePacket):
            x[p.symbol] = p.samples
    ht = np.ascontiguousarray(h.transpose(1, 0, 2))
    for sym in (0, 7, 13):
        re, im = golden.quantized_matvec(ht, x[sym])
        assert np.array_equal(result.output[sym, :, :, 0], re)
        assert np.array_equal(result.output[sym, :, :, 1], im)


def test_rx_needs_antenna_wide_vectors():
    packets = [
        CPlanePacket(0, 0, 1, 0, 1, beam_id=1),
        *_coef_packets(0, 1, _matrix(16)),
        _u_packet(0, 0, 0, 1, 8),  # layer-wide, wrong for RX
    ]
    with pytest.raises(PipelineError, match="8-sample"):
        Pipeline(16, Direction.RX).run(packets)


def test_coefficient_row_count_checked():
    packets = [
        CPlanePacket(0, 0, 1, 0, 1, beam_id=1),
        *_coef_packets(0, 1, _matrix(32)),
    ]
    with pytest.raises(PipelineError, match="seq 1"):
        Pipeline(16).run(packets)


def test_missing_layers_surface():
    packets = [
        CPlanePacket(0, 0, 1, 0, 1, beam_id=1),
        *_coef_packets(0, 1, _matrix(16))[:5],  # layers 5-7 never arrive
    ]
    with pytest.raises(PipelineError, match="missing layer"):
        Pipeline(16).run(packets)


def test_roster_overflow_carries_sequence():
    packets = [
        CPlanePacket(0, 0, 1, prb, 1, beam_id=prb) for prb in range(65)
    ]
    with pytest.raises(PipelineError, match="seq 64"):
        Pipeline(16).run(packets)


def test_overlap_carries_sequence():
    packets = [
        CPlanePacket(0, 0, 1, 0, 10, beam_id=1),
        CPlanePacket(0, 0, 1, 5, 10, beam_id=2),
    ]
    with pytest.raises(PipelineError, match="seq 1"):
        Pipeline(16).run(packets)


@pytest.mark.parametrize("n_slots", [1, 2, 5])
def test_multi_slot_bank_rotation(n_slots):
    n_t = 16
    h = _matrix(n_t)
    packets = []
    for slot in range(n_slots):
        packets.append(CPlanePacket(slot, 0, 14, 0, 50, beam_id=3))
        packets.extend(_coef_packets(slot, 3, h))
        packets.extend(_u_packet(slot, sym, 0, 50, 8) for sym in range(14))
    results = Pipeline(n_t).run(packets)
    assert [r.slot_id for r in results] == list(range(n_slots))
    # identical allocation + identical coefficients, inputs differ per slot
    assert all(r.allocated_re == 50 * 14 * 12 for r in results)


def test_write_cycles_full_grid():
    n_t = 16
    packets = [
        CPlanePacket(0, 0, 14, 0, 273, beam_id=1),
        *_coef_packets(0, 1, _matrix(n_t)),
    ]
    (result,) = Pipeline(n_t).run(packets)
    assert result.write_cycles == 956  # ceil(273*14 / 4)


def test_latency_report_per_symbol():
    n_t = 16
    packets = [
        CPlanePacket(0, 0, 1, 0, 10, beam_id=1),  # 10 PRBs, symbol 0 only
        *_coef_packets(0, 1, _matrix(n_t)),
        _u_packet(0, 0, 0, 10, 8),
    ]
    (result,) = Pipeline(n_t).run(packets)
    cycles = result.latency.per_symbol_cycles
    assert cycles[0] == Fraction("4488.25")
    assert all(c == Fraction("4368.25") for c in cycles[1:])
    assert result.latency.deadline_met


def test_pipeline_rejects_bad_n_t():
    with pytest.raises(ValueError):
        Pipeline(15)
    with pytest.raises(ValueError):
        Pipeline(10, Direction.RX)  # even, but not block-alignable
