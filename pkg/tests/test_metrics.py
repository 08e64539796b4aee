import math
import random

import pytest
from hypothesis import given, strategies as st

from qoesim.metrics import (MosCurve, SessionRecord, cdf, decodable_frames, jitter_from_log,
                            mos_from_bitrate, packet_metrics, session_mos, successful,
                            utilization)
from qoesim.net import VIDEO, Packet
from qoesim.video import FrameSpec

MS = 1_000_000


def test_mos_anchors():
    assert mos_from_bitrate(100_000) == 5.0
    assert mos_from_bitrate(200_000) == 5.0
    assert mos_from_bitrate(30_000) == 1.0
    assert mos_from_bitrate(0) == 1.0


def test_mos_log_midpoint():
    assert mos_from_bitrate(math.sqrt(30_000 * 100_000)) == pytest.approx(3.0, abs=1e-12)
    assert mos_from_bitrate(54_772) == pytest.approx(3.0, abs=1e-4)


def test_mos_custom_anchor():
    c = MosCurve(r1_bps=50_000)
    assert mos_from_bitrate(50_000, c) == 1.0
    with pytest.raises(ValueError):
        MosCurve(r1_bps=200_000)


@given(st.floats(0, 1e7), st.floats(0, 1e7))
def test_mos_monotone_and_clamped(a, b):
    lo, hi = sorted((a, b))
    assert 1.0 <= mos_from_bitrate(lo) <= mos_from_bitrate(hi) <= 5.0


def closure_oracle(types, delivered):
    """Frame i is decodable iff some I-frame j <= i starts a fully delivered run j..i with no I in between."""
    out = set()
    for i in range(len(types)):
        j = i
        while j >= 0 and types[j] != "I":
            j -= 1
        if j >= 0 and all(k in delivered for k in range(j, i + 1)):
            out.add(i)
    return out


def gop(n=30):
    return ["I"] + ["P"] * (n - 1)


def test_all_delivered_all_decodable():
    assert decodable_frames(gop(), range(30)) == set(range(30))


def test_lost_i_frame_kills_gop():
    types = gop() * 2
    assert decodable_frames(types, set(range(60)) - {30}) == set(range(30))


def test_lost_p_truncates_chain():
    assert decodable_frames(gop(), set(range(30)) - {10}) == set(range(10))


def test_decodable_matches_brute_force_on_random_patterns():
    rng = random.Random(7)
    for _ in range(1000):
        n = rng.randint(1, 64)
        g = rng.choice([1, 4, 8, 30])
        types = ["I" if i % g == 0 else "P" for i in range(n)]
        if rng.random() < 0.3:
            types = [rng.choice("IP") for _ in range(n)]
        delivered = {i for i in range(n) if rng.random() < rng.random()}
        assert decodable_frames(types, delivered) == closure_oracle(types, delivered)


@given(st.lists(st.sampled_from("IP"), max_size=64), st.data())
def test_decodable_set_is_dependency_closed(types, data):
    delivered = data.draw(st.sets(st.integers(0, max(len(types) - 1, 0))))
    dec = decodable_frames(types, delivered)
    for i in dec:
        assert i in delivered
        if types[i] == "P":
            assert i - 1 in dec


def test_cdf_examples():
    assert cdf([3]) == [(3, 1.0)]
    assert cdf([1, 2, 2, 4]) == [(1, 0.25), (2, 0.75), (4, 1.0)]
    assert cdf([]) == []


@given(st.lists(st.floats(-1e6, 1e6), min_size=1))
def test_cdf_monotone_to_one(vals):
    pts = cdf(vals)
    assert pts[-1][1] == 1.0
    assert all(a[0] < b[0] and a[1] < b[1] for a, b in zip(pts, pts[1:]))


def test_utilization_examples():
    assert utilization(0, 7e6, 500 * 10**9) == 0.0
    assert utilization(1.75e9 / 8, 7e6, 500 * 10**9) == pytest.approx(0.5)
    assert utilization([1052] * 4, 8 * 1052 * 4, 10**9) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        utilization(10, 7e6, 0)


# -- session records built by hand ---------------------------------------

def make_record(frames, fate, delays_ms=None):
    """frames: list of (type, size); fate[i] True if frame i's single packet arrives."""
    rec = SessionRecord(0, 0)
    for n, (t, size) in enumerate(frames):
        rec.on_frame(n, FrameSpec(n, t, size, 0), 0)
        p = Packet(n, 0, VIDEO, 1052, 1024, n + 1, n, t, n, t_sent=n * 33 * MS)
        rec.on_send(p)
        if fate[n]:
            d = (delays_ms[n] if delays_ms else 10) * MS
            rec.on_receive(p, p.t_sent + d)
        else:
            rec.on_drop(p, p.t_sent)
    return rec


def test_session_mos_constant_420k():
    frames = [("I", 9000)] + [("P", 1500)] * 29
    rec = make_record(frames * 4, [True] * 120)
    assert rec.mos_series(MosCurve()) == [5.0] * 4
    assert session_mos(rec) == 5.0


def test_session_mos_nothing_decodable():
    frames = [("I", 9000)] + [("P", 1500)] * 29
    assert session_mos(make_record(frames * 2, [False] * 60)) == 1.0


def test_session_mos_half_good_half_bad():
    frames = [("I", 9000)] + [("P", 1500)] * 29
    fate = [True] * 30 + [False] * 30
    assert session_mos(make_record(frames * 2, fate)) == 3.0


def test_successful_thresholds():
    types = [("I", 100)] * 100
    assert successful(make_record(types, [True] * 100))
    assert not successful(make_record(types, [False] * 100))
    rec = make_record(types, [True] * 74 + [False] * 26)
    assert rec.decodable_ratio() == 0.74
    assert not successful(rec, 0.75)
    assert successful(make_record(types, [True] * 75 + [False] * 25), 0.75)


def test_packet_metrics_examples():
    frames = [("I", 100)] * 3
    d, j, r = packet_metrics(make_record(frames, [True] * 3, [10, 10, 10]))
    assert (d, j, r) == (10 * MS, 0.0, 0.0)
    d, j, _ = packet_metrics(make_record(frames, [True] * 3, [10, 14, 12]))
    assert j == 3 * MS
    rec = make_record([("I", 100)] * 100, [True] * 95 + [False] * 5)
    assert packet_metrics(rec)[2] == 0.05


def test_jitter_single_packet_is_zero():
    rec = make_record([("I", 100)], [True])
    assert packet_metrics(rec)[1] == 0.0
    assert jitter_from_log(rec.recv_log) == 0.0


@given(st.lists(st.integers(1, 3000), min_size=2, max_size=200))
def test_streaming_jitter_equals_log_recompute(delays):
    rec = make_record([("I", 100)] * len(delays), [True] * len(delays), delays)
    assert packet_metrics(rec)[1] == jitter_from_log(rec.recv_log)
