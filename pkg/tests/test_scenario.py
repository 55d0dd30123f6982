import re
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from precoder_sim.fronthaul import encode_packet
from precoder_sim.scenario import (
    FLOAT_ERROR_BOUND,
    GeneratorSpec,
    ScenarioError,
    ScenarioManifest,
    SystemConfig,
    _user_chunks,
    build_manifest,
    format_manifest,
    format_report,
    generate_packets,
    generate_scenario,
    load_manifest,
    load_packets,
    parse_config,
    parse_manifest,
    run_scenario,
    verify_scenario,
)

GEN_TEXT = """\
# comment lines and blanks are skipped

n_t = 16
seed = 7   # trailing comments too
num_users = 3
pattern = random
slots = 2
"""


def test_parse_round_trip():
    m = parse_manifest(GEN_TEXT)
    assert m.config.n_t == 16
    assert m.config.seed == 7
    assert m.generator == GeneratorSpec(num_users=3, pattern="random", slots=2)
    again = parse_manifest(format_manifest(m))
    assert again == m


def test_round_trip_keeps_nondefault_timing():
    m = parse_manifest(GEN_TEXT + "t_clk_ns = 3.2\ntotal_prb = 100\n")
    assert m.config.timing.t_clk_ns == Fraction("3.2")
    assert m.config.timing.total_prb == 100
    assert parse_manifest(format_manifest(m)) == m


def test_duplicate_key_rejected():
    with pytest.raises(ScenarioError, match="line 3.*duplicate"):
        parse_manifest("n_t = 16\nnum_users = 1\nn_t = 32\n")


def test_line_without_equals_rejected():
    with pytest.raises(ScenarioError, match="line 1"):
        parse_manifest("n_t 16\n")


def test_unknown_key_rejected():
    with pytest.raises(ScenarioError, match="unknown manifest keys.*n_tx"):
        parse_manifest("n_tx = 16\nnum_users = 1\n")


def test_manifest_needs_generator_or_frames():
    with pytest.raises(ScenarioError, match="frame files or a generator"):
        parse_manifest("n_t = 16\n")
    with pytest.raises(ScenarioError, match="frame files or a generator"):
        parse_manifest("num_users = 1\nframe = a.bin\n")


def test_overrides_win():
    m = parse_manifest(GEN_TEXT, overrides=("n_t=32", "slots = 1"))
    assert m.config.n_t == 32
    assert m.generator.slots == 1


def test_override_validation():
    with pytest.raises(ScenarioError, match="not key=value"):
        parse_manifest(GEN_TEXT, overrides=("n_t32",))
    with pytest.raises(ScenarioError, match="cannot be overridden"):
        parse_manifest(GEN_TEXT, overrides=("frame=a.bin",))


def test_parse_config_is_config_only():
    cfg = parse_config("n_t = 32\ndirection = rx\n")
    assert cfg.n_t == 32
    assert cfg.direction.value == "rx"
    with pytest.raises(ScenarioError, match="must not reference frame"):
        parse_config("frame = a.bin\n")
    with pytest.raises(ScenarioError, match="unknown config keys"):
        parse_config("num_users = 3\n")


def test_nonstandard_config_gate():
    with pytest.raises(ScenarioError, match="not a standard configuration"):
        SystemConfig(n_t=48)
    cfg = SystemConfig(n_t=48, allow_nonstandard=True)
    assert cfg.n_t == 48
    with pytest.raises(ScenarioError, match="even antenna count"):
        SystemConfig(n_t=21, allow_nonstandard=True)


def test_config_bounds():
    with pytest.raises(ScenarioError, match="64-bit"):
        SystemConfig(seed=-1)
    with pytest.raises(ScenarioError, match="64-bit"):
        SystemConfig(seed=1 << 64)
    with pytest.raises(ScenarioError, match="fixed at 8"):
        SystemConfig(n_l=4)


def test_generator_spec_bounds():
    with pytest.raises(ScenarioError):
        GeneratorSpec(num_users=0)
    with pytest.raises(ScenarioError):
        GeneratorSpec(num_users=65)
    with pytest.raises(ScenarioError):
        GeneratorSpec(num_users=1, pattern="striped")
    with pytest.raises(ScenarioError):
        GeneratorSpec(num_users=1, slots=0)


def test_generation_is_deterministic():
    cfg = SystemConfig(n_t=16, seed=11)
    spec = GeneratorSpec(num_users=5, pattern="random", slots=2)
    a = [encode_packet(p) for p in generate_packets(cfg, spec)]
    b = [encode_packet(p) for p in generate_packets(cfg, spec)]
    assert a == b
    c = [encode_packet(p) for p in generate_packets(SystemConfig(n_t=16, seed=12), spec)]
    assert a != c


@settings(max_examples=60, deadline=None)
@given(
    num_users=st.integers(min_value=1, max_value=64),
    pattern=st.sampled_from(["contiguous", "alternating", "random"]),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_user_chunk_invariants(num_users, pattern, seed):
    chunks = _user_chunks(num_users, pattern, np.random.default_rng(seed))
    owned = np.full(273, -1)
    for user, start, size in chunks:
        assert 0 <= user < num_users
        assert size >= 1 and 0 <= start and start + size <= 273
        assert (owned[start : start + size] == -1).all(), "overlap"
        owned[start : start + size] = user
    assert set(range(num_users)) <= set(owned.tolist())
    if pattern in ("contiguous", "alternating"):
        assert (owned >= 0).all()  # no holes outside the random pattern


def test_alternating_defeats_reuse():
    chunks = _user_chunks(3, "alternating", np.random.default_rng(0))
    assert len(chunks) == 273
    assert all(size == 1 for _, _, size in chunks)
    assert [user for user, _, _ in chunks[:4]] == [0, 1, 2, 0]


def _gen_manifest(**kw):
    scalars = {"n_t": "16", "seed": "5", "num_users": "3", "pattern": "random"}
    scalars.update({k: str(v) for k, v in kw.items()})
    return build_manifest(scalars, [])


def test_replay_from_files_matches_inline_generator(tmp_path):
    inline = _gen_manifest(slots=2)
    path = generate_scenario(inline.config, inline.generator, tmp_path)
    assert path == tmp_path / "manifest.txt"
    replay = load_manifest(path)
    assert replay.generator is None
    assert len(replay.frames) > 0
    got = run_scenario(replay)
    want = run_scenario(inline)
    assert [s.checksum for s in got.slots] == [s.checksum for s in want.slots]
    assert got.passed and want.passed


def test_corrupt_frame_names_the_file(tmp_path):
    m = _gen_manifest()
    path = generate_scenario(m.config, m.generator, tmp_path)
    replay = load_manifest(path)
    victim = tmp_path / replay.frames[0]
    victim.write_bytes(victim.read_bytes()[:-3])
    with pytest.raises(ScenarioError, match=re.escape(victim.name)):
        load_packets(replay)


def test_missing_frame_names_the_file(tmp_path):
    m = ScenarioManifest(
        config=SystemConfig(n_t=16), frames=("frames/ghost.bin",), base_dir=tmp_path
    )
    with pytest.raises(ScenarioError, match="ghost.bin"):
        load_packets(m)


def test_missing_manifest_path(tmp_path):
    with pytest.raises(ScenarioError, match="cannot read manifest"):
        load_manifest(tmp_path / "nope.txt")


LINE_RE = re.compile(
    r"^slot=\d+ cycles=\d+(\.\d+)? us=\d+\.\d{6} deadline=(True|False)"
    r" nmult=\d+ err=\d+ sat=\d+$"
)


def test_report_format_and_full_grid_numbers():
    report = run_scenario(_gen_manifest(num_users=1, pattern="contiguous"))
    text = format_report(report)
    lines = text.splitlines()
    assert LINE_RE.match(lines[0]), lines[0]
    assert lines[-1] == "result=PASS"
    (slot,) = report.slots
    # one user owning all 273 PRBs loads a fresh matrix per PRB
    assert slot.latency.slot_cycles == Fraction("107019.5")
    assert "us=428.078000" in lines[0]
    assert slot.n_mult == 273 * 14 * 12
    assert slot.max_error == 0


def test_verify_holds_float_bound():
    v = verify_scenario(_gen_manifest(slots=1))
    assert v.passed
    assert v.max_int_error == 0
    assert 0.0 < v.max_float_error <= FLOAT_ERROR_BOUND
    assert v.bound == FLOAT_ERROR_BOUND


def test_rx_scenario_runs_clean():
    m = parse_manifest("n_t = 16\ndirection = rx\nnum_users = 4\npattern = alternating\n")
    report = run_scenario(m)
    assert report.passed
    assert report.slots[0].max_error == 0
