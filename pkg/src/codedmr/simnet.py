"""Rate-capped network accounting for the shuffle phase.

There is no latency or congestion model.  Each server owns one outgoing link
of ``rate_bps``; its messages go out back to back, different senders overlap,
and the phase lasts until the busiest sender is done.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from codedmr.errors import ParameterError

SINGLE_SEND = "single"
PER_RECEIVER = "per-receiver"


@dataclass(frozen=True)
class NetConfig:
    rate_bps: float = 100e6
    multicast: str = SINGLE_SEND
    per_message_overhead: int = 0

    def __post_init__(self) -> None:
        if not self.rate_bps > 0:
            raise ParameterError(f"rate must be positive, got {self.rate_bps}")
        if self.multicast not in (SINGLE_SEND, PER_RECEIVER):
            raise ParameterError(f"unknown multicast model {self.multicast!r}")
        if self.per_message_overhead < 0:
            raise ParameterError("per-message overhead cannot be negative")


@dataclass(frozen=True)
class Message:
    """One send: ``payload`` useful bytes plus ``padding`` and ``header`` bytes."""

    sender: int
    receivers: tuple[int, ...]
    payload: int
    padding: int = 0
    header: int = 0

    @property
    def nbytes(self) -> int:
        return self.payload + self.padding + self.header


@dataclass(frozen=True)
class TransferEvent:
    sender: int
    receivers: tuple[int, ...]
    nbytes: int
    bits: int
    start: float
    end: float
    phase: str


@dataclass
class TransferLog:
    cfg: NetConfig = field(default_factory=NetConfig)
    events: list[TransferEvent] = field(default_factory=list)
    busy: dict[int, float] = field(default_factory=dict)
    payload_bits: int = 0
    padding_bits: int = 0
    header_bits: int = 0

    @property
    def total_bits(self) -> int:
        return self.payload_bits + self.padding_bits + self.header_bits

    @property
    def overhead_bits(self) -> int:
        return self.padding_bits + self.header_bits

    def copies(self, receivers: Sequence[int]) -> int:
        return len(receivers) if self.cfg.multicast == PER_RECEIVER else 1

    def transmit(self, msg: Message, phase: str = "shuffle") -> TransferEvent:
        if not msg.receivers:
            raise ParameterError("a transmission needs at least one receiver")
        if min(msg.payload, msg.padding, msg.header) < 0:
            raise ParameterError("byte counts cannot be negative")
        copies = self.copies(msg.receivers)
        header = msg.header + self.cfg.per_message_overhead
        self.payload_bits += 8 * msg.payload * copies
        self.padding_bits += 8 * msg.padding * copies
        self.header_bits += 8 * header * copies
        nbytes = msg.payload + msg.padding + header
        bits = 8 * nbytes * copies
        start = self.busy.get(msg.sender, 0.0)
        end = start + bits / self.cfg.rate_bps
        self.busy[msg.sender] = end
        event = TransferEvent(msg.sender, tuple(msg.receivers), nbytes, bits, start, end, phase)
        self.events.append(event)
        return event

    @property
    def phase_seconds(self) -> float:
        return max(self.busy.values(), default=0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sender", "receiver_count", "bytes", "start_s", "end_s", "phase"])
        for e in self.events:
            w.writerow([e.sender, len(e.receivers), e.nbytes, repr(e.start), repr(e.end), e.phase])
        return buf.getvalue()


def transmit(cfg: NetConfig, sender: int, receivers: Sequence[int], nbytes: int) -> TransferEvent:
    """Account a lone send on a fresh timeline."""
    return TransferLog(cfg).transmit(Message(sender, tuple(receivers), nbytes))


@dataclass(frozen=True)
class ShuffleResult:
    seconds: float
    total_bits: int
    log: TransferLog


def simulate_shuffle(cfg: NetConfig, schedule: Iterable[Message]) -> ShuffleResult:
    log = TransferLog(cfg)
    for msg in schedule:
        log.transmit(msg)
    return ShuffleResult(log.phase_seconds, log.total_bits, log)
