"""Coded shuffle plan derived from a resolvable design.

Servers are identified by ``(class_index, level)`` pairs, i.e. the block
``B_{i,l}`` they are assigned.  Their ordinal ``(i - 1) * q + l + 1`` is the
``U_s`` numbering used for reducer assignment and network logs.
"""

from __future__ import annotations

import itertools
import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from codedmr.design import Block, DesignParams, ResolvableDesign, intersect_blocks
from codedmr.errors import ParameterError, ProtocolError

ServerId = tuple[int, int]


def server_ordinal(server: ServerId, q: int) -> int:
    class_index, level = server
    return (class_index - 1) * q + level + 1


def server_from_ordinal(ordinal: int, q: int) -> ServerId:
    return ((ordinal - 1) // q + 1, (ordinal - 1) % q)


@dataclass(frozen=True)
class Placement:
    """Which subfiles each server maps.  Keys iterate in ordinal order."""

    q: int
    N: int
    servers: Mapping[ServerId, frozenset[int]]

    def holders(self, subfile: int) -> list[ServerId]:
        return [s for s, pts in self.servers.items() if subfile in pts]

    def replication(self) -> dict[int, int]:
        counts = dict.fromkeys(range(1, self.N + 1), 0)
        for pts in self.servers.values():
            for n in pts:
                counts[n] += 1
        return counts

    def ordinal(self, server: ServerId) -> int:
        return server_ordinal(server, self.q)


def place_subfiles(d: ResolvableDesign) -> Placement:
    servers = {b.server: b.points for b in d.blocks()}
    return Placement(d.params.q, d.params.N, servers)


def single_copy_placement(params: DesignParams) -> Placement:
    """Computation load 1: server ``U_s`` maps subfile ``s`` only (N = K)."""
    servers = {}
    for s in range(1, params.K + 1):
        servers[server_from_ordinal(s, params.q)] = frozenset([s])
    return Placement(params.q, params.K, servers)


@dataclass(frozen=True)
class ReduceAssignment:
    Q: int
    K: int
    functions: Mapping[int, tuple[int, ...]]

    def of(self, ordinal: int) -> tuple[int, ...]:
        return self.functions[ordinal]

    def owner(self, function: int) -> int:
        return (function - 1) % self.K + 1


def assign_reducers(Q: int, K: int) -> ReduceAssignment:
    """Server ordinal ``s`` reduces functions ``s, s + K, s + 2K, ...``."""
    if K < 1 or Q < 1:
        raise ParameterError(f"Q and K must be positive, got Q={Q}, K={K}")
    if Q % K:
        raise ParameterError(f"K={K} must divide Q={Q}")
    functions = {s: tuple(range(s, Q + 1, K)) for s in range(1, K + 1)}
    return ReduceAssignment(Q, K, functions)


@dataclass(frozen=True)
class Target:
    """The value ``B_{position, j}`` recovers inside a group.

    ``subfile`` is the single point shared by every other member's block.
    """

    position: int
    owner: ServerId
    subfile: int


@dataclass(frozen=True)
class ShuffleGroup:
    index: int
    levels: tuple[int, ...]
    blocks: tuple[Block, ...]
    targets: tuple[Target, ...]

    @property
    def members(self) -> tuple[ServerId, ...]:
        return tuple(b.server for b in self.blocks)

    @property
    def size(self) -> int:
        return len(self.blocks)

    def position_of(self, server: ServerId) -> int:
        for pos, b in enumerate(self.blocks, start=1):
            if b.server == server:
                return pos
        raise ProtocolError(f"server {server} is not a member of group {self.index}")

    def target(self, position: int) -> Target:
        return self.targets[position - 1]


def enumerate_groups(d: ResolvableDesign) -> list[ShuffleGroup]:
    """All one-block-per-class selections with empty common intersection.

    Selections are visited in lexicographic ``(j_1, ..., j_k)`` order.
    """
    k, q = d.params.k, d.params.q
    groups = []
    for levels in itertools.product(range(q), repeat=k):
        blocks = tuple(d.block(i + 1, j) for i, j in enumerate(levels))
        if intersect_blocks(blocks):
            continue
        targets = []
        for pos in range(1, k + 1):
            others = blocks[: pos - 1] + blocks[pos:]
            (point,) = intersect_blocks(others)
            targets.append(Target(pos, blocks[pos - 1].server, point))
        groups.append(ShuffleGroup(len(groups), levels, blocks, tuple(targets)))
    return groups


@dataclass(frozen=True)
class EdgeLabeling:
    """``labels[target_position][holder_position]`` is a part index in 1..k-1."""

    labels: Mapping[int, Mapping[int, int]]

    def label(self, target_position: int, holder_position: int) -> int:
        return self.labels[target_position][holder_position]


def bipartite_step(g: ShuffleGroup) -> EdgeLabeling:
    # holders of a target are every other member; lowest class index gets label 1
    labels = {}
    for t in g.targets:
        holders = [p for p in range(1, g.size + 1) if p != t.position]
        labels[t.position] = {p: lab for lab, p in enumerate(holders, start=1)}
    return EdgeLabeling(labels)


def split_packet(value: bytes, parts: int) -> list[bytes]:
    """Cut ``value`` into ``parts`` slices of ``ceil(len / parts)`` bytes, last one short."""
    size = -(-len(value) // parts) if value else 0
    return [value[i * size : (i + 1) * size] for i in range(parts)]


def xor_bytes(chunks: Sequence[bytes]) -> bytes:
    """XOR byte strings together, zero-padding each to the longest."""
    width = max((len(c) for c in chunks), default=0)
    acc = 0
    for c in chunks:
        acc ^= int.from_bytes(c, "little")
    return acc.to_bytes(width, "little")


@dataclass(frozen=True)
class Component:
    target: int
    part: int
    length: int


_HEAD = struct.Struct("<HBBB")
_COMP = struct.Struct("<BBI")


@dataclass(frozen=True)
class CodedTransmission:
    group_index: int
    sender: ServerId
    components: tuple[Component, ...]
    payload: bytes

    @property
    def header_size(self) -> int:
        return _HEAD.size + _COMP.size * len(self.components)

    @property
    def wire_size(self) -> int:
        return self.header_size + len(self.payload)

    def to_bytes(self) -> bytes:
        if not 0 <= self.group_index < 2**16:
            raise ProtocolError(f"group index {self.group_index} does not fit in u16")
        head = _HEAD.pack(self.group_index, self.sender[0], self.sender[1], len(self.components))
        comps = b"".join(_COMP.pack(c.target, c.part, c.length) for c in self.components)
        return head + comps + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "CodedTransmission":
        if len(data) < _HEAD.size:
            raise ProtocolError("truncated transmission header")
        group_index, cls_idx, level, count = _HEAD.unpack_from(data, 0)
        offset = _HEAD.size
        comps = []
        for _ in range(count):
            if len(data) < offset + _COMP.size:
                raise ProtocolError("truncated component descriptor")
            comps.append(Component(*_COMP.unpack_from(data, offset)))
            offset += _COMP.size
        return cls(group_index, (cls_idx, level), tuple(comps), bytes(data[offset:]))


def encode_transmission(
    g: ShuffleGroup,
    sender: ServerId,
    parts: Mapping[int, Sequence[bytes]],
    labeling: EdgeLabeling | None = None,
) -> CodedTransmission:
    """Build the XOR of the parts this sender is responsible for.

    ``parts[m]`` holds the k-1 slices of target ``m``'s packet.
    """
    labeling = labeling or bipartite_step(g)
    pos = g.position_of(sender)
    comps, chunks = [], []
    for m in range(1, g.size + 1):
        if m == pos:
            continue
        idx = labeling.label(m, pos)
        try:
            chunk = parts[m][idx - 1]
        except (KeyError, IndexError):
            raise ProtocolError(
                f"group {g.index}: sender {sender} lacks part {idx} of target {m}"
            ) from None
        comps.append(Component(m, idx, len(chunk)))
        chunks.append(chunk)
    return CodedTransmission(g.index, sender, tuple(comps), xor_bytes(chunks))


def decode_transmissions(
    g: ShuffleGroup,
    receiver: ServerId,
    received: Sequence[CodedTransmission],
    local: Mapping[int, Sequence[bytes]],
) -> bytes:
    """Recover the receiver's target value from the other members' transmissions.

    ``local[m]`` holds the receiver's own slices of every other target ``m``.
    """
    pos = g.position_of(receiver)
    expected = {s for s in g.members if s != receiver}
    senders = [tx.sender for tx in received]
    if sorted(senders) != sorted(expected):
        raise ProtocolError(f"group {g.index}: receiver {receiver} got transmissions from {senders}")

    recovered: dict[int, bytes] = {}
    for tx in received:
        if tx.group_index != g.index:
            raise ProtocolError(f"transmission for group {tx.group_index} fed to group {g.index}")
        mine = [c for c in tx.components if c.target == pos]
        if len(mine) != 1:
            raise ProtocolError(
                f"group {g.index}: sender {tx.sender} carries {len(mine)} parts for target {pos}"
            )
        known = []
        for c in tx.components:
            if c.target == pos:
                continue
            try:
                chunk = local[c.target][c.part - 1]
            except (KeyError, IndexError):
                raise ProtocolError(
                    f"group {g.index}: receiver {receiver} cannot rebuild part {c.part} of target {c.target}"
                ) from None
            if len(chunk) != c.length:
                raise ProtocolError(
                    f"group {g.index}: header length {c.length} disagrees with local part ({len(chunk)})"
                )
            known.append(chunk)
        want = mine[0]
        if want.part in recovered:
            raise ProtocolError(f"group {g.index}: part {want.part} of target {pos} delivered twice")
        if want.length > len(tx.payload):
            raise ProtocolError(f"group {g.index}: header length exceeds payload")
        recovered[want.part] = xor_bytes([tx.payload, *known])[: want.length]

    if sorted(recovered) != list(range(1, g.size)):
        raise ProtocolError(f"group {g.index}: parts {sorted(recovered)} do not cover 1..{g.size - 1}")
    return b"".join(recovered[i] for i in range(1, g.size))


@dataclass(frozen=True)
class AnalyticLoads:
    K: int
    k: int
    r: int
    uncoded: Fraction
    proposed: Fraction
    prior: Fraction
    prior_subfiles: int
    prior_groups: int
    proposed_subfiles: int
    proposed_groups: int


def uncoded_load(K: int, r: int) -> Fraction:
    return 1 - Fraction(r, K)


def proposed_load(k: int, K: int) -> Fraction:
    return Fraction(1, k - 1) * (1 - Fraction(k, K))


def prior_load(K: int, r: int) -> Fraction:
    return Fraction(1, r) * (1 - Fraction(r, K))


def analytic_loads(params: DesignParams, r: int | None = None) -> AnalyticLoads:
    """Closed-form loads; ``r`` defaults to the design's computation load ``k``."""
    K, k, q = params.K, params.k, params.q
    r = k if r is None else r
    if not 1 <= r <= K:
        raise ParameterError(f"computation load r={r} outside [1, {K}]")
    return AnalyticLoads(
        K=K,
        k=k,
        r=r,
        uncoded=uncoded_load(K, r),
        proposed=proposed_load(k, K),
        prior=prior_load(K, r),
        prior_subfiles=math.comb(K, r),
        prior_groups=math.comb(K, r + 1),
        proposed_subfiles=params.N,
        proposed_groups=q ** (k - 1) * (q - 1),
    )


@dataclass(frozen=True)
class PlannedTransmission:
    """Which ``(function, subfile, part)`` slices one sender XORs together."""

    round: int
    group_index: int
    sender: ServerId
    parts: tuple[tuple[int, int, int], ...]


def plan_transmissions(
    groups: Sequence[ShuffleGroup], assignment: ReduceAssignment, q: int
) -> list[PlannedTransmission]:
    """The full coded schedule: rounds over ``Q / K``, then groups, then members."""
    plan = []
    for gamma in range(assignment.Q // assignment.K):
        for g in groups:
            labeling = bipartite_step(g)
            for sender in g.members:
                pos = g.position_of(sender)
                parts = []
                for t in g.targets:
                    if t.position == pos:
                        continue
                    func = assignment.of(server_ordinal(t.owner, q))[gamma]
                    parts.append((func, t.subfile, labeling.label(t.position, pos)))
                plan.append(PlannedTransmission(gamma, g.index, sender, tuple(parts)))
    return plan
