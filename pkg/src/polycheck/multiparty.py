"""Multi-party evaluation over a round-synchronous broadcast bus.

Every node computes one horizontal slice of Delta z as a server and checks
every other slice as a user with its own pairwise secret keys
(Lambda_{l,j}, Gamma_{l,j} = Lambda_{l,j} Delta_j). With an RS config the
slices are Reed-Solomon coded blocks, so shards that fail verification can
be erased and rebuilt from the rest.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Mapping, Sequence

from .adversary import AdversaryStrategy
from .field import Field, Matrix, Vector, make_rng
from .poly import Polynomial, decompose, power_vectors
from .protocol import ServerSetup, server_compute
from .rs import ConfigError, DecodingFailure, RSConfig, rs_encode, rs_recover

POLICIES = ("recompute", "rs-decode")


class DecodeRefused(RuntimeError):
    def __init__(self, offenders: Sequence[int]):
        self.offenders = sorted(offenders)
        super().__init__(f"decode refused; failed verification for nodes {self.offenders}")


class EquivocationError(RuntimeError):
    """A node tried to broadcast twice in one round."""


@dataclass(frozen=True)
class PairKey:
    lam: tuple[tuple[int, ...], ...] = dc_field(repr=False)  # c x h
    gamma: tuple[tuple[int, ...], ...] = dc_field(repr=False)  # c x s


@dataclass
class NodeState:
    node_id: int
    setup: ServerSetup  # this node's public (possibly coded) slice
    keys: dict[int, PairKey]
    field: Field
    strategy: AdversaryStrategy | None = None
    history: list = dc_field(default_factory=list)

    @property
    def honest(self) -> bool:
        return self.strategy is None


@dataclass
class Network:
    field_q: int
    s: int  # width of Delta
    rows: int  # padded row count (multiple of the block count)
    height: int  # rows per slice
    c: int
    slices: list[ServerSetup]  # public, indexed by node
    nodes: list[NodeState]
    rs: RSConfig | None = None

    @property
    def n(self) -> int:
        return len(self.nodes)

    def data_blocks(self) -> int:
        return self.rs.t if self.rs else self.n


class BroadcastBus:
    """Single-valued, round-synchronous mailbox.

    Sends for a round must all happen before ``close()``; receives are only
    allowed afterwards.
    """

    def __init__(self) -> None:
        self.round = 0
        self._mailbox: dict[int, Vector | None] = {}
        self._open = False

    def begin_round(self) -> None:
        self.round += 1
        self._mailbox = {}
        self._open = True

    def send(self, node_id: int, shard: Vector | None) -> None:
        if not self._open:
            raise RuntimeError("bus is not accepting sends")
        if node_id in self._mailbox:
            raise EquivocationError(f"node {node_id} already broadcast in round {self.round}")
        self._mailbox[node_id] = None if shard is None else list(shard)

    def close(self) -> None:
        self._open = False

    def receive(self) -> dict[int, Vector | None]:
        if self._open:
            raise RuntimeError("receive before the send barrier")
        return dict(self._mailbox)


def _pad_rows(matrix: Sequence[Sequence[int]], multiple: int) -> Matrix:
    rows = [list(r) for r in matrix]
    width = len(rows[0])
    while len(rows) % multiple:
        rows.append([0] * width)
    return rows


def network_init(f: Polynomial, n: int, c: int, seed: int | Sequence[int] | None = 0,
                 adversaries: Mapping[int, AdversaryStrategy] | None = None,
                 rs: RSConfig | None = None, path: tuple[int, ...] = ()) -> Network:
    """Build n nodes with their slices and n(n-1) pairwise keys.

    ``seed`` is a master seed (node i draws from the stream at ``path + (i,)``)
    or a per-node list of seeds. Node indices are 0-based.
    """
    if n < 2:
        raise ConfigError("a network needs at least two nodes")
    if c < 1:
        raise ConfigError("security parameter c must be >= 1")
    q = f.field.q
    if rs is not None:
        if rs.n != n:
            raise ConfigError(f"RS config is for {rs.n} nodes, network has {n}")
        rs.validate(q)
    adversaries = dict(adversaries or {})
    if any(not 0 <= j < n for j in adversaries):
        raise ConfigError("adversary index out of range")

    delta = decompose(f)
    blocks_count = rs.t if rs else n
    padded = _pad_rows(delta.delta, blocks_count)
    h = len(padded) // blocks_count
    blocks = [padded[i * h:(i + 1) * h] for i in range(blocks_count)]
    if rs is not None:
        blocks = rs_encode(Field(q), blocks, rs)
    slices = [ServerSetup(matrix=tuple(map(tuple, b)), q=q) for b in blocks]

    if isinstance(seed, (list, tuple)):
        if len(seed) != n:
            raise ConfigError("need one seed per node")
        rngs = [make_rng(s_) for s_ in seed]
    else:
        rngs = [make_rng(seed, *path, i) for i in range(n)]

    nodes = []
    for l in range(n):
        field = Field(q)
        keys = {}
        with field.counter.phase("init"):
            for j in range(n):
                if j == l:
                    continue
                lam = field.sample_matrix(rngs[l], c, h)
                gamma = field.matmul(lam, slices[j].matrix)
                keys[j] = PairKey(lam=tuple(map(tuple, lam)), gamma=tuple(map(tuple, gamma)))
        nodes.append(NodeState(node_id=l, setup=slices[l], keys=keys, field=field,
                               strategy=adversaries.get(l)))
    return Network(field_q=q, s=delta.s, rows=len(padded), height=h, c=c,
                   slices=slices, nodes=nodes, rs=rs)


def node_serve(node: NodeState, z: Sequence[int]) -> Vector | None:
    with node.field.counter.phase("serve"):
        if node.strategy is None:
            return server_compute(node.setup, z, node.field)
        return node.strategy.respond(node.setup, z, node.history, node.field)


def node_verify_all(node: NodeState, z: Sequence[int], shards: Mapping[int, Vector | None]
                    ) -> tuple[dict[int, int], list[int]]:
    """Bits b_{l,j} for every peer j, plus the peers whose shard was missing or malformed."""
    bits, missing = {}, []
    f = node.field
    with f.counter.phase("verify"):
        for j, key in node.keys.items():
            shard = shards.get(j)
            if shard is None or len(shard) != len(key.lam[0]):
                bits[j] = 0
                missing.append(j)
                continue
            bits[j] = int(f.matvec(key.lam, shard) == f.matvec(key.gamma, z))
    return bits, missing


def node_decode(node: NodeState, p: Sequence[int], shards: Mapping[int, Vector],
                bits: Mapping[int, int], s: int) -> int:
    """Stack the verified shards (own shard included) and contract with p."""
    offenders = [j for j, b in bits.items() if not b]
    if offenders:
        raise DecodeRefused(offenders)
    w = [v for j in sorted(shards) for v in shards[j]]
    with node.field.counter.phase("decode"):
        return node.field.dot(p, w[:s])


@dataclass
class NodeResult:
    node_id: int
    honest: bool
    bits: dict[int, int]
    dec: int | None
    offenders: list[int]
    missing: list[int]
    recomputed: list[int]
    erased: list[int]
    ops: dict[str, dict[str, int]]
    round_muls: int

    def to_record(self) -> dict:
        return {
            "node": self.node_id,
            "honest": self.honest,
            "bits": {str(j): b for j, b in sorted(self.bits.items())},
            "dec": self.dec,
            "offenders": self.offenders,
            "missing": self.missing,
            "recomputed": self.recomputed,
            "erased": self.erased,
            "round_muls": self.round_muls,
            "ops": self.ops,
        }


def _recover_honest(node: NodeState, net: Network, z: Sequence[int], p: Sequence[int],
                    shards: dict[int, Vector | None], bits: dict[int, int], policy: str
                    ) -> tuple[int, list[int], list[int]]:
    f = node.field
    failed = sorted(j for j, b in bits.items() if not b)
    good = {j: shards[j] for j in shards if j == node.node_id or bits.get(j) == 1}
    recomputed: list[int] = []
    erased: list[int] = []
    if net.rs is None:
        if policy == "rs-decode":
            raise ConfigError("rs-decode policy needs an RS config")
        with f.counter.phase("serve"):
            for j in failed:
                good[j] = server_compute(net.slices[j], z, f)
                recomputed.append(j)
        full = [v for j in range(net.n) for v in good[j]]
    else:
        erased = failed
        try:
            with f.counter.phase("decode"):
                data = rs_recover(f, good, net.rs)
        except DecodingFailure:
            # too many erasures for the code: rebuild the data blocks by hand
            with f.counter.phase("serve"):
                data = [server_compute(net.slices[m], z, f) for m in range(net.rs.t)]
            recomputed = list(range(net.rs.t))
        full = [v for block in data for v in block]
    with f.counter.phase("decode"):
        dec = f.dot(p, full[:net.s])
    return dec, recomputed, erased


def run_network_round(net: Network, bus: BroadcastBus, x: int, policy: str = "recompute"
                      ) -> list[NodeResult]:
    """One synchronous round: serve and broadcast, barrier, verify, recover, decode."""
    if policy not in POLICIES:
        raise ConfigError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    q = net.field_q
    x %= q
    before = [n.field.counter.total_muls for n in net.nodes]
    encoded = []
    for node in net.nodes:
        with node.field.counter.phase("encode"):
            encoded.append(power_vectors(node.field, x, net.s))

    bus.begin_round()
    own: dict[int, Vector | None] = {}
    for node, pv in zip(net.nodes, encoded):
        shard = node_serve(node, pv.z)
        own[node.node_id] = shard
        bus.send(node.node_id, shard)
        node.history.append((list(pv.z), None))
    bus.close()
    received = bus.receive()

    results = []
    for node, pv in zip(net.nodes, encoded):
        shards = dict(received)
        shards[node.node_id] = own[node.node_id]
        bits, missing = node_verify_all(node, pv.z, shards)
        offenders = sorted(j for j, b in bits.items() if not b)
        dec, recomputed, erased = None, [], []
        if node.honest:
            if not offenders and net.rs is None:
                dec = node_decode(node, pv.p, shards, bits, net.s)
            else:
                dec, recomputed, erased = _recover_honest(node, net, pv.z, pv.p, shards, bits, policy)
        results.append(NodeResult(
            node_id=node.node_id, honest=node.honest, bits=bits, dec=dec,
            offenders=offenders, missing=missing, recomputed=recomputed, erased=erased,
            ops=node.field.counter.snapshot(),
            round_muls=node.field.counter.total_muls - before[node.node_id],
        ))
    return results


def ver_matrix(results: Sequence[NodeResult]) -> list[list[int | None]]:
    """VER[l][j] = node l's verdict on node j; the diagonal is None."""
    n = len(results)
    return [[None if j == r.node_id else r.bits.get(j) for j in range(n)] for r in results]


def expected_node_round_muls(s: int, height: int, n: int, c: int) -> int:
    """Serve + verifications + decode: height*s + (n-1)c(s + height) + s."""
    return height * s + (n - 1) * c * (s + height) + s
