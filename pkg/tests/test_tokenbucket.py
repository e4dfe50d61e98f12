import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aqmark.tokenbucket import kbit_to_bytes, make_bucket


def test_refill(kern):
    b = kern.TokenBucket(1e6, 62500, 0.002, 0.0, 0.0)
    assert b.refill(0.1) == pytest.approx(12500.0)  # 1e6 * 0.1 / 8


def test_refill_zero_dt_is_noop(kern):
    b = kern.TokenBucket(1e6, 62500, 0.002, 300.0, 1.0)
    b.refill(1.0)
    assert (b.tokens, b.last_refill) == (300.0, 1.0)


def test_refill_caps_at_burst(kern):
    b = kern.TokenBucket(1e6, 62500, 0.002, -1.0, 0.0)
    b.refill(100.0)
    assert b.tokens == 62500.0


def test_refill_rejects_time_regression(kern):
    b = kern.TokenBucket(1e6, 62500, 0.002, -1.0, 5.0)
    with pytest.raises(ValueError, match="regression"):
        b.refill(4.0)


@pytest.mark.parametrize("tokens,size,ok,left", [
    (5000, 1000, True, 4000),
    (500, 1000, False, 500),
    (1000, 1000, True, 0),
])
def test_try_consume(kern, tokens, size, ok, left):
    b = kern.TokenBucket(1e6, 62500, 0.002, tokens, 0.0)
    assert b.try_consume(size) is ok
    assert b.tokens == left


def test_try_consume_rejects_nonpositive(kern):
    b = kern.TokenBucket(1e6, 62500)
    with pytest.raises(ValueError):
        b.try_consume(0)


def test_update_avg(kern):
    b = kern.TokenBucket(1e6, 62500, 1.0, 777.0)
    b.avg_tokens = 0.0
    assert b.update_avg() == 777.0
    b = kern.TokenBucket(1e6, 62500, 0.3, 100.0)
    b.avg_tokens = 100.0
    assert b.update_avg() == pytest.approx(100.0)
    b = kern.TokenBucket(1e6, 62500, 0.002, 1000.0)
    b.avg_tokens = 0.0
    assert b.update_avg() == pytest.approx(2.0)


def test_avg_converges_geometrically(kern):
    b = kern.TokenBucket(1e6, 62500, 0.1, 5000.0)
    b.avg_tokens = 0.0
    errs = []
    for _ in range(50):
        errs.append(5000.0 - b.update_avg())
    for e0, e1 in zip(errs, errs[1:]):
        assert e1 == pytest.approx(0.9 * e0)


def test_kbit_conversion():
    assert kbit_to_bytes(100) == 12500
    assert kbit_to_bytes(500) == 62500


@settings(max_examples=200, deadline=None)
@given(gaps=st.lists(st.floats(0.0, 0.05), min_size=1, max_size=300),
       sizes=st.lists(st.integers(40, 1500), min_size=1, max_size=300),
       cir=st.floats(1e4, 1e7), burst=st.floats(1500, 1e5))
def test_conservation_and_bounds(gaps, sizes, cir, burst):
    b = make_bucket(cir, burst, 0.01)
    t = 0.0
    for gap, size in zip(gaps, sizes):
        t += gap
        b.refill(t)
        b.update_avg()
        b.try_consume(size)
        assert 0.0 <= b.tokens <= burst
        assert 0.0 <= b.avg_tokens <= burst
    assert b.consumed <= cir * t / 8.0 + burst + 1e-6
