"""End-to-end job execution: CodeGen, Map, Pack/Encode, Shuffle, Unpack/Decode, Reduce.

Three strategies share one pipeline and differ in placement and shuffle:

``uncoded1``
    every server maps one subfile (``N = K``) and values are unicast;
``uncodedk``
    the design's placement (each subfile on ``k`` servers), values unicast;
``coded``
    the design's placement and the XOR group shuffle.

Compute-phase seconds are proxies (records or bytes over a fixed rate), not
measurements.  Shuffle seconds come from :mod:`codedmr.simnet`.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from codedmr.design import DesignParams, build_design, generate_codeword_matrix
from codedmr.errors import ParameterError, ProtocolError
from codedmr.protocol import (
    CodedTransmission,
    Placement,
    ReduceAssignment,
    ServerId,
    assign_reducers,
    bipartite_step,
    decode_transmissions,
    encode_transmission,
    enumerate_groups,
    place_subfiles,
    proposed_load,
    server_ordinal,
    single_copy_placement,
    split_packet,
    uncoded_load,
)
from codedmr.simnet import Message, NetConfig, TransferLog
from codedmr.workloads.base import Workload

log = logging.getLogger(__name__)

UNCODED1 = "uncoded1"
UNCODEDK = "uncodedk"
CODED = "coded"
STRATEGIES = (UNCODED1, UNCODEDK, CODED)
PHASES = ("codegen", "map", "encode", "shuffle", "decode", "reduce")


@dataclass(frozen=True)
class JobParams:
    q: int
    k: int
    Q: int | None = None
    count_headers: bool = True

    @property
    def design_params(self) -> DesignParams:
        return DesignParams(self.q, self.k)

    @property
    def K(self) -> int:
        return self.q * self.k

    @property
    def functions(self) -> int:
        return self.K if self.Q is None else self.Q


@dataclass(frozen=True)
class ComputeModel:
    """Rates that turn work counts into simulated seconds."""

    records_per_second: float = 1e7
    bytes_per_second: float = 1e9
    codegen_item_seconds: float = 1e-6


@dataclass
class JobReport:
    strategy: str
    workload: str
    q: int
    k: int
    K: int
    N: int
    Q: int
    phase_seconds: dict[str, float]
    payload_bits: int
    padding_bits: int
    header_bits: int
    value_bytes: int
    analytic_load: Fraction
    output_sha256: str
    messages: int
    groups: int
    rate_bps: float
    multicast: str
    value_sources: dict[str, int] = field(default_factory=dict)
    log: TransferLog | None = field(default=None, repr=False)

    @property
    def shuffle_bits(self) -> int:
        return self.payload_bits + self.padding_bits + self.header_bits

    @property
    def overhead_bits(self) -> int:
        return self.padding_bits + self.header_bits

    @property
    def measured_load(self) -> Fraction:
        """Shuffle bits over ``Q * N * mean value size`` (in bits)."""
        if self.value_bytes == 0:
            return Fraction(0)
        return Fraction(self.shuffle_bits, 8 * self.value_bytes)

    @property
    def total_seconds(self) -> float:
        return sum(self.phase_seconds.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy,
            "workload": self.workload,
            "q": self.q,
            "k": self.k,
            "K": self.K,
            "N": self.N,
            "Q": self.Q,
            "phase_seconds": dict(self.phase_seconds),
            "shuffle_bits": self.shuffle_bits,
            "payload_bits": self.payload_bits,
            "overhead_bits": self.overhead_bits,
            "padding_bits": self.padding_bits,
            "header_bits": self.header_bits,
            "measured_load": float(self.measured_load),
            "analytic_load": float(self.analytic_load),
            "analytic_load_exact": str(self.analytic_load),
            "messages": self.messages,
            "groups": self.groups,
            "rate_bps": self.rate_bps,
            "multicast": self.multicast,
            "output_sha256": self.output_sha256,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


@dataclass(frozen=True)
class Unicast:
    sender: int
    receiver: int
    items: tuple[tuple[int, int], ...]


def uncoded_shuffle(placement: Placement, assignment: ReduceAssignment) -> list[Unicast]:
    """Send every missing ``(function, subfile)`` once from its lowest-ordinal holder.

    Values bound for the same receiver from the same sender are packed into
    one message.
    """
    holders = {n: min(placement.ordinal(s) for s in placement.holders(n)) for n in range(1, placement.N + 1)}
    packed: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(list)
    for server, points in placement.servers.items():
        me = placement.ordinal(server)
        for j in assignment.of(me):
            for n in range(1, placement.N + 1):
                if n not in points:
                    packed[(holders[n], me)].append((j, n))
    return [Unicast(s, r, tuple(items)) for (s, r), items in sorted(packed.items())]


class _Inbox:
    """Per-server store enforcing the "each needed value exactly once" rule."""

    def __init__(self) -> None:
        self.values: dict[int, dict[tuple[int, int], bytes]] = defaultdict(dict)
        self.sources: Counter[str] = Counter()

    def put(self, ordinal: int, function: int, subfile: int, value: bytes, source: str) -> None:
        box = self.values[ordinal]
        if (function, subfile) in box:
            raise ProtocolError(f"server {ordinal} received nu_{function},{subfile} twice")
        box[(function, subfile)] = value
        self.sources[source] += 1

    def take(self, ordinal: int, function: int, subfile: int) -> bytes:
        try:
            return self.values[ordinal].pop((function, subfile))
        except KeyError:
            raise ProtocolError(f"server {ordinal} never obtained nu_{function},{subfile}") from None

    def leftovers(self) -> list[tuple[int, tuple[int, int]]]:
        return [(o, key) for o, box in self.values.items() for key in box]


def run_job(
    dataset: Any,
    workload: Workload,
    strategy: str,
    params: JobParams,
    net: NetConfig | None = None,
    compute: ComputeModel | None = None,
) -> tuple[list[bytes], JobReport]:
    net = net or NetConfig()
    compute = compute or ComputeModel()
    if strategy not in STRATEGIES:
        raise ParameterError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    dp = params.design_params
    K, Q, k = dp.K, params.functions, dp.k
    if workload.num_functions != Q:
        raise ParameterError(f"workload computes {workload.num_functions} functions, job expects Q={Q}")
    assignment = assign_reducers(Q, K)

    # CodeGen
    groups = []
    if strategy == UNCODED1:
        placement = single_copy_placement(dp)
    else:
        design = build_design(generate_codeword_matrix(dp))
        placement = place_subfiles(design)
        if strategy == CODED:
            groups = enumerate_groups(design)
    N = placement.N
    ordinal = {s: server_ordinal(s, dp.q) for s in placement.servers}
    empty = workload.num_records(dataset) == 0
    if not empty:
        workload.prepare(dataset)
    subfiles = workload.split(dataset, N)
    seconds = dict.fromkeys(PHASES, 0.0)
    seconds["codegen"] = compute.codegen_item_seconds * (N + K + len(groups))

    # Map: every replica recomputes all Q functions of its subfiles
    mapped: dict[ServerId, dict[int, list[bytes]]] = {}
    work: Counter[int] = Counter()
    for server, points in placement.servers.items():
        mapped[server] = {}
        for n in sorted(points) if not empty else ():
            values = workload.map(subfiles[n - 1])
            if len(values) != Q:
                raise ProtocolError(f"map produced {len(values)} values, expected {Q}")
            mapped[server][n] = values
            work[ordinal[server]] += workload.subfile_records(subfiles[n - 1])
    seconds["map"] = max(work.values(), default=0) / compute.records_per_second

    value_bytes = 0
    for n in range(1, N + 1) if not empty else ():
        holder = placement.holders(n)[0]
        value_bytes += sum(len(v) for v in mapped[holder][n])

    traffic = TransferLog(net)
    inbox = _Inbox()
    encode_work: Counter[int] = Counter()
    decode_work: Counter[int] = Counter()
    by_ordinal = {o: s for s, o in ordinal.items()}

    if empty:
        log.debug("empty dataset: shuffle skipped")
    elif strategy == CODED:
        labelings = [bipartite_step(g) for g in groups]
        for gamma in range(Q // K):
            for g, labeling in zip(groups, labelings):
                func = {t.position: assignment.of(ordinal[t.owner])[gamma] for t in g.targets}

                def parts_at(server: ServerId, m: int) -> list[bytes]:
                    t = g.target(m)
                    return split_packet(mapped[server][t.subfile][func[m] - 1], k - 1)

                wires = {}
                for sender in g.members:
                    pos = g.position_of(sender)
                    parts = {m: parts_at(sender, m) for m in range(1, k + 1) if m != pos}
                    tx = encode_transmission(g, sender, parts, labeling)
                    wires[sender] = tx.to_bytes()
                    carried = sum(c.length for c in tx.components)
                    payload = -(-carried // (k - 1))
                    encode_work[ordinal[sender]] += carried
                    traffic.transmit(
                        Message(
                            ordinal[sender],
                            tuple(ordinal[s] for s in g.members if s != sender),
                            payload=payload,
                            padding=len(tx.payload) - payload,
                            header=tx.header_size if params.count_headers else 0,
                        )
                    )
                for receiver in g.members:
                    pos = g.position_of(receiver)
                    received = [CodedTransmission.from_bytes(w) for s, w in wires.items() if s != receiver]
                    local = {m: parts_at(receiver, m) for m in range(1, k + 1) if m != pos}
                    value = decode_transmissions(g, receiver, received, local)
                    decode_work[ordinal[receiver]] += sum(len(tx.payload) for tx in received)
                    inbox.put(ordinal[receiver], func[pos], g.target(pos).subfile, value, "decoded")
    else:
        for msg in uncoded_shuffle(placement, assignment):
            src = mapped[by_ordinal[msg.sender]]
            payload = 0
            for j, n in msg.items:
                value = src[n][j - 1]
                payload += len(value)
                inbox.put(msg.receiver, j, n, value, "unicast")
            encode_work[msg.sender] += payload
            decode_work[msg.receiver] += payload
            # values are self-delimiting and sent in an order both ends derive from the plan
            traffic.transmit(Message(msg.sender, (msg.receiver,), payload=payload))

    seconds["encode"] = max(encode_work.values(), default=0) / compute.bytes_per_second
    seconds["shuffle"] = traffic.phase_seconds
    seconds["decode"] = max(decode_work.values(), default=0) / compute.bytes_per_second

    # Reduce
    outputs: list[bytes] = [b""] * Q
    reduce_work: Counter[int] = Counter()
    for server, points in placement.servers.items():
        me = ordinal[server]
        for j in assignment.of(me):
            values = []
            if not empty:
                for n in range(1, N + 1):
                    if n in points:
                        values.append(mapped[server][n][j - 1])
                        inbox.sources["local"] += 1
                    else:
                        values.append(inbox.take(me, j, n))
            reduce_work[me] += sum(len(v) for v in values)
            outputs[j - 1] = workload.reduce(j, values)
    leftovers = inbox.leftovers()
    if leftovers:
        raise ProtocolError(f"values delivered but never reduced: {leftovers[:5]}")
    seconds["reduce"] = max(reduce_work.values(), default=0) / compute.bytes_per_second

    analytic = {
        UNCODED1: uncoded_load(K, 1),
        UNCODEDK: uncoded_load(K, k),
        CODED: proposed_load(k, K),
    }[strategy]
    report = JobReport(
        strategy=strategy,
        workload=workload.name,
        q=dp.q,
        k=k,
        K=K,
        N=N,
        Q=Q,
        phase_seconds=seconds,
        payload_bits=traffic.payload_bits,
        padding_bits=traffic.padding_bits,
        header_bits=traffic.header_bits,
        value_bytes=value_bytes,
        analytic_load=analytic,
        output_sha256=hashlib.sha256(b"".join(outputs)).hexdigest(),
        messages=len(traffic.events),
        groups=len(groups),
        rate_bps=net.rate_bps,
        multicast=net.multicast,
        value_sources=dict(inbox.sources),
        log=traffic,
    )
    return outputs, report


@dataclass(frozen=True)
class Verification:
    passed: bool
    message: str = ""
    position: int | None = None

    def __bool__(self) -> bool:
        return self.passed


def verify_output(outputs: Sequence[bytes], workload: Workload, dataset: Any) -> Verification:
    """Compare reducer outputs against the workload's single-node reference.

    ``position`` is the index of the first differing record.
    """
    problem = workload.check_outputs(outputs)
    got = b"".join(outputs)
    want = workload.reference(dataset)
    if got != want:
        limit = min(len(got), len(want))
        a = np.frombuffer(got, dtype=np.uint8, count=limit)
        b = np.frombuffer(want, dtype=np.uint8, count=limit)
        mismatch = np.flatnonzero(a != b)
        diff = int(mismatch[0]) if mismatch.size else limit
        pos = diff // workload.record_size
        return Verification(False, problem or f"output differs from reference at record {pos}", pos)
    if problem:
        return Verification(False, problem)
    return Verification(True, "output matches reference")
