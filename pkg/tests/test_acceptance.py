"""Release gate: ten go/no-go checks over the whole datapath.

Each test prints one machine-greppable verdict line; run this module with
``pytest tests/test_acceptance.py -v -s`` to see them inline.
"""

import time
from fractions import Fraction

import numpy as np

from precoder_sim.fixedpoint import FixedComplex, karatsuba_mul, schoolbook_mul
from precoder_sim.memory import (
    BankSchedule,
    BankState,
    CoefficientMemory,
    ResourceGrid,
    RgmBankSet,
    reassemble_ports,
    rgm_bank_schedule,
)
from precoder_sim import golden
from precoder_sim.rx_converter import rx_precode_re, tx_to_rx_reorder
from precoder_sim.scenario import (
    GeneratorSpec,
    ScenarioError,
    SystemConfig,
    build_manifest,
    run_scenario,
)
from precoder_sim.timing import (
    estimate_dsp,
    full_allocation,
    slot_latency,
    symbol_latency,
    worst_case_nmult,
)

CONFIGS = (16, 32, 64)


def _report(n, label, ok):
    print(f"\n[acceptance] criterion {n} {label}: {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {n} ({label}) failed"


def test_criterion_1_karatsuba_equivalence():
    started = time.monotonic()
    mismatches = 0

    def agree(a, b, c, d):
        x, y = FixedComplex(a, b), FixedComplex(c, d)
        k, s = karatsuba_mul(x, y), schoolbook_mul(x, y)
        return k.re == s.re and k.im == s.im

    # exhaustive 16-point lattice per component = 2^16 operand pairs,
    # endpoints pinned to the rails
    lattice = [k * 4369 - 32768 for k in range(16)]
    assert lattice[0] == -32768 and lattice[-1] == 32767
    for a in lattice:
        for b in lattice:
            for c in lattice:
                for d in lattice:
                    if not agree(a, b, c, d):
                        mismatches += 1

    rng = np.random.default_rng(1)
    samples = rng.integers(-32768, 32768, size=(1_000_000, 4)).tolist()
    for a, b, c, d in samples:
        if not agree(a, b, c, d):
            mismatches += 1

    elapsed = time.monotonic() - started
    _report(1, "karatsuba equivalence", mismatches == 0 and elapsed < 60.0)


def test_criterion_2_timing_reproduction():
    per_symbol = symbol_latency(full_allocation())
    report = slot_latency([full_allocation()] * 14)
    ok = (
        per_symbol == Fraction(30577, 4)  # 7644.25
        and report.slot_cycles == Fraction("107019.5")
        and report.slot_us == Fraction("428.078")
        and round(float(report.slot_us), 2) == 428.08
        and report.slot_us < 500
    )
    _report(2, "symbol and slot latency", ok)


def test_criterion_3_worst_case_nmult():
    manifest = build_manifest(
        {"n_t": "16", "seed": "2", "num_users": "64", "pattern": "alternating"}, []
    )
    run = run_scenario(manifest)
    (slot,) = run.slots
    _report(
        3,
        "worst-case multiplication count",
        slot.n_mult == 45864 == worst_case_nmult() and run.passed,
    )


def test_criterion_4_dsp_estimates():
    ok = tuple(estimate_dsp(n_t, 8) for n_t in CONFIGS) == (192, 384, 768)
    _report(4, "dsp usage model", ok)


def test_criterion_5_bank_schedule():
    expect = [
        BankSchedule(0, None, None),
        BankSchedule(1, 0, 3),
        BankSchedule(2, 1, 0),
        BankSchedule(3, 2, 1),
    ]
    ok = [rgm_bank_schedule(s) for s in range(4)] == expect
    reset = RgmBankSet().states
    ok = ok and reset == [BankState.WIPED] * 3 + [BankState.DIRTY]
    _report(5, "bank rotation table", ok)


def test_criterion_6_pcm_round_trips():
    ok = True
    for n_t in CONFIGS:
        rng = np.random.default_rng(n_t)
        for _ in range(1000):
            matrix = rng.integers(-32768, 32768, size=(n_t, 8, 2)).astype(np.int16)
            pcm = CoefficientMemory(n_t)
            for layer in range(8):
                pcm.write_column(0, layer, matrix[:, layer, :])
            ports, cycles = pcm.read(0)
            ok = (
                ok
                and cycles == 16
                and np.array_equal(pcm.reconstruct(0), matrix)
                and np.array_equal(reassemble_ports(ports), matrix)
            )
    _report(6, "coefficient memory round-trips", ok)


def test_criterion_7_end_to_end_oracle():
    started = time.monotonic()
    ok = True
    for n_t in CONFIGS:
        manifest = build_manifest(
            {
                "n_t": str(n_t),
                "seed": str(700 + n_t),
                "num_users": "8",
                "pattern": "random",
                "slots": "100",
            },
            [],
        )
        run = run_scenario(manifest)
        ok = ok and run.passed and all(s.max_error == 0 for s in run.slots)
    elapsed = time.monotonic() - started
    _report(7, "end-to-end oracle equivalence", ok and elapsed < 300.0)


def test_criterion_8_rx_path():
    rng = np.random.default_rng(8)
    ok = True
    for _ in range(100):
        h = rng.integers(-32768, 32768, size=(16, 8, 2)).astype(np.int16)
        x = rng.integers(-32768, 32768, size=(16, 2)).astype(np.int16)
        got = rx_precode_re(h, [FixedComplex(*s) for s in x.tolist()])
        ht = np.ascontiguousarray(h.transpose(1, 0, 2))
        re, im = golden.quantized_matvec(ht, x[None, :, :])
        want = list(zip(re[0].tolist(), im[0].tolist()))
        ok = ok and [(g.re, g.im) for g in got.y] == want
    for n_t in CONFIGS:
        h = np.arange(n_t * 8 * 2, dtype=np.int16).reshape(n_t, 8, 2)
        blocks = tx_to_rx_reorder(h)
        seen = np.concatenate([b.reshape(-1) for b in blocks])
        ok = ok and sorted(seen.tolist()) == sorted(h.reshape(-1).tolist())
    _report(8, "rx reorder through shared dot units", ok)


def test_criterion_9_stress_scenario():
    report = run_scenario(
        build_manifest({"seed": "9", "num_users": "48", "pattern": "contiguous"}, [])
    )
    ok = report.passed and report.slots[0].latency.deadline_met
    report = run_scenario(
        build_manifest({"seed": "9", "num_users": "64", "pattern": "contiguous"}, [])
    )
    ok = ok and report.passed
    try:
        GeneratorSpec(num_users=65)
        ok = False
    except ScenarioError:
        pass
    _report(9, "48-user stress scenario", ok)


def test_criterion_10_grid_bit_size():
    _report(10, "resource grid bit accounting", ResourceGrid().bit_size() == 30576)
