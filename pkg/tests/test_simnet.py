import pytest
from hypothesis import given
from hypothesis import strategies as st

from codedmr.errors import ParameterError
from codedmr.simnet import (
    PER_RECEIVER,
    SINGLE_SEND,
    Message,
    NetConfig,
    TransferLog,
    simulate_shuffle,
    transmit,
)


def test_single_send_counts_once():
    ev = transmit(NetConfig(rate_bps=100e6), 1, [2, 3], 1000)
    assert ev.bits == 8000
    assert ev.end == pytest.approx(8e-5)


def test_per_receiver_counts_each_copy():
    ev = transmit(NetConfig(rate_bps=100e6, multicast=PER_RECEIVER), 1, [2, 3], 1000)
    assert ev.bits == 16000
    assert ev.end == pytest.approx(1.6e-4)


def test_sender_is_sequential_and_senders_overlap():
    cfg = NetConfig(rate_bps=8.0)
    res = simulate_shuffle(cfg, [Message(1, (2,), 1), Message(1, (3,), 2), Message(2, (1,), 2)])
    starts = [(e.sender, e.start, e.end) for e in res.log.events]
    assert starts == [(1, 0.0, 1.0), (1, 1.0, 3.0), (2, 0.0, 2.0)]
    assert res.seconds == 3.0
    assert res.total_bits == 40


def test_single_sender_time_is_sum():
    cfg = NetConfig(rate_bps=1e3)
    sizes = [10, 20, 30, 40]
    res = simulate_shuffle(cfg, [Message(4, (1,), n) for n in sizes])
    assert res.seconds == pytest.approx(8 * sum(sizes) / 1e3)


def test_overhead_split():
    log = TransferLog(NetConfig(per_message_overhead=3))
    log.transmit(Message(1, (2, 3), payload=10, padding=2, header=5))
    assert (log.payload_bits, log.padding_bits, log.header_bits) == (80, 16, 64)
    assert log.overhead_bits == 80
    assert log.total_bits == 160


def test_csv_columns():
    log = TransferLog(NetConfig(rate_bps=8.0))
    log.transmit(Message(2, (1, 3), 4))
    lines = log.to_csv().splitlines()
    assert lines[0] == "sender,receiver_count,bytes,start_s,end_s,phase"
    assert lines[1] == "2,2,4,0.0,4.0,shuffle"


@pytest.mark.parametrize(
    "kwargs", [{"rate_bps": 0}, {"multicast": "broadcast"}, {"per_message_overhead": -1}]
)
def test_invalid_config(kwargs):
    with pytest.raises(ParameterError):
        NetConfig(**kwargs)


def test_empty_receivers_rejected():
    with pytest.raises(ParameterError):
        TransferLog().transmit(Message(1, (), 5))


schedules = st.lists(
    st.builds(
        Message,
        sender=st.integers(1, 4),
        receivers=st.lists(st.integers(1, 4), min_size=1, max_size=3).map(tuple),
        payload=st.integers(0, 500),
    ),
    max_size=30,
)


@given(schedules)
def test_per_receiver_dominates(schedule):
    single = simulate_shuffle(NetConfig(multicast=SINGLE_SEND), schedule)
    multi = simulate_shuffle(NetConfig(multicast=PER_RECEIVER), schedule)
    assert multi.total_bits >= single.total_bits
    all_unicast_or_empty = all(len(m.receivers) == 1 or m.nbytes == 0 for m in schedule)
    assert (multi.total_bits == single.total_bits) == all_unicast_or_empty


@given(schedules)
def test_deterministic(schedule):
    a = simulate_shuffle(NetConfig(), schedule).log
    b = simulate_shuffle(NetConfig(), schedule).log
    assert a.events == b.events
    assert a.to_csv() == b.to_csv()
