import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from aqmark.metrics import (FlowStats, fairness_index, flow_throughput, session_throughput,
                            summarize, throughput)


@pytest.mark.parametrize("x,expected", [
    ([1, 1, 1, 1], 1.0),
    ([1, 0, 0, 0], 0.25),
    ([1, 2, 3], 36 / 42),
])
def test_fairness_index_values(x, expected):
    assert fairness_index(x) == pytest.approx(expected, abs=1e-12)


def test_fairness_index_one_two_three_six_decimals():
    assert round(fairness_index([1, 2, 3]), 6) == 0.857143


def test_fairness_index_marking_tables():
    # IN-packet counts of the three-CBR-flow marking experiment
    assert fairness_index([497, 413, 456]) == pytest.approx(0.9944, abs=1e-4)
    assert fairness_index([13, 805, 387]) == pytest.approx(0.6066, abs=1e-4)


@pytest.mark.parametrize("bad", [[], [1, -1], [0, 0, 0]])
def test_fairness_index_rejects(bad):
    with pytest.raises(ValueError):
        fairness_index(bad)


@given(st.lists(st.floats(0, 1e9), min_size=1, max_size=30).filter(lambda v: any(v)))
def test_fairness_index_bounds(x):
    fi = fairness_index(x)
    assert 1 / len(x) - 1e-9 <= fi <= 1 + 1e-9


@given(st.lists(st.floats(1e-3, 1e6), min_size=1, max_size=30), st.floats(1e-3, 1e3))
def test_fairness_index_scale_invariant(x, k):
    assert fairness_index([v * k for v in x]) == pytest.approx(fairness_index(x), rel=1e-9)


def test_throughput():
    fs = FlowStats(1, "tcp_bulk", bytes_measured=5_000_000)
    assert throughput(fs, 40.0) == 1e6
    with pytest.raises(ValueError):
        throughput(fs, 0.0)


def test_session_throughput():
    fs = FlowStats(1, "tcp_short", bytes_delivered=20480, started_at=10.0, finished_at=10.5)
    assert session_throughput(fs, 40.0) == pytest.approx(20480 * 8 / 0.5)
    assert flow_throughput(fs, 36.0, 40.0) == session_throughput(fs, 40.0)
    unfinished = FlowStats(2, "tcp_short", bytes_delivered=1000, started_at=39.0)
    assert session_throughput(unfinished, 40.0) == pytest.approx(8000.0)
    assert session_throughput(FlowStats(3, "tcp_short"), 40.0) == 0.0


def test_ingress_rate():
    fs = FlowStats(1, "udp_cbr", ingress_first=1.0, ingress_last=2.0,
                   ingress_bits_after_first=1e6)
    assert fs.ingress_rate == 1e6
    assert FlowStats(2, "udp_cbr").ingress_rate == 0.0


def test_summarize_groups():
    stats = [
        FlowStats(1, "tcp_bulk", bytes_measured=1000, pkts_in=10),
        FlowStats(2, "tcp_bulk", bytes_measured=3000, pkts_in=30),
        FlowStats(3, "udp_cbr", bytes_measured=2000, pkts_in=5, pkts_out=7),
        FlowStats(4, "background", bytes_measured=9000),
    ]
    rows = {r.group: r for r in summarize(stats, 1.0, 1.0)}
    assert list(rows) == ["bulk_tcp", "udp", "background", "all"]
    assert rows["bulk_tcp"].mean_bps == 16000.0
    assert rows["bulk_tcp"].stddev_bps == 8000.0
    assert rows["all"].n_flows == 3
    assert rows["all"].total_in == 45 and rows["all"].total_out == 7
    assert rows["udp"].fi_throughput == 1.0
    assert math.isnan(rows["background"].fi_in_tokens)
