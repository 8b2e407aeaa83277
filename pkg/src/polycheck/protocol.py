"""User-server verifiable evaluation.

The user splits f into the coefficient matrix Delta, draws a secret c x s
matrix Lambda and precomputes Gamma = Lambda Delta once. Each round the
server is asked for w = Delta z with z = [1, x, ..., x^(s-1)]; the user
accepts a response w_hat iff Lambda w_hat == Gamma z and then reads off
f(x) = p . w_hat.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .field import Field, FieldElement, ShapeError, Vector
from .poly import CoeffMatrix, Polynomial, PowerVectors, decompose, power_vectors

if TYPE_CHECKING:
    from .adversary import AdversaryStrategy


class UsageError(RuntimeError):
    """An operation was invoked outside its precondition."""


@dataclass(frozen=True)
class VerificationKey:
    """The user's secret. ``lam`` is excluded from repr and from every record."""

    q: int
    c: int
    s: int
    lam: tuple[tuple[int, ...], ...] = dc_field(repr=False)
    gamma: tuple[tuple[int, ...], ...] = dc_field(repr=False)

    def check(self, delta: CoeffMatrix) -> bool:
        """Recompute Lambda Delta and compare with the stored Gamma (debug/test only)."""
        f = Field(self.q)
        return tuple(map(tuple, f.matmul(self.lam, delta.delta))) == self.gamma


@dataclass(frozen=True)
class ServerSetup:
    """What the server is shown at initialization: a public block of Delta.

    In the user-server protocol the block is all of Delta; a multi-party node
    is handed its horizontal slice.
    """

    matrix: tuple[tuple[int, ...], ...]
    q: int

    @property
    def s(self) -> int:
        """Width of the block, i.e. the length of z."""
        return len(self.matrix[0]) if self.matrix else 0

    @property
    def rows(self) -> int:
        return len(self.matrix)


@dataclass
class RoundTranscript:
    index: int
    x: int
    z: Vector
    w_hat: Vector | None
    ver: int
    dec: int | None
    user_ops: dict[str, int]
    server_ops: dict[str, int]
    shape_error: bool = False

    def to_record(self) -> dict:
        return {
            "round": self.index,
            "x": self.x,
            "z": list(self.z),
            "w_hat": None if self.w_hat is None else list(self.w_hat),
            "ver": self.ver,
            "dec": self.dec,
            "shape_error": self.shape_error,
            "user_ops": dict(self.user_ops),
            "server_ops": dict(self.server_ops),
        }


def init(f: Polynomial, c: int, rng: np.random.Generator, field: Field | None = None
         ) -> tuple[VerificationKey, ServerSetup]:
    """Draw Lambda uniformly and compute Gamma = Lambda Delta (tallied as init)."""
    if c < 1:
        raise ValueError("security parameter c must be >= 1")
    field = field if field is not None else f.field
    delta = decompose(f)
    return init_from_matrix(delta, c, rng, field), ServerSetup(matrix=delta.delta, q=field.q)


def init_from_matrix(delta: CoeffMatrix, c: int, rng: np.random.Generator,
                     field: Field, lam: Sequence[Sequence[int]] | None = None) -> VerificationKey:
    if c < 1:
        raise ValueError("security parameter c must be >= 1")
    s = delta.s
    if lam is None:
        lam = field.sample_matrix(rng, c, s)
    elif len(lam) != c or any(len(row) != s for row in lam):
        raise ShapeError(f"Lambda must be {c}x{s}")
    else:
        lam = [[int(v) % field.q for v in row] for row in lam]
    with field.counter.phase("init"):
        gamma = field.matmul(lam, delta.delta)
    return VerificationKey(q=field.q, c=c, s=s, lam=tuple(map(tuple, lam)), gamma=tuple(map(tuple, gamma)))


def server_compute(setup: ServerSetup, z: Sequence[int], field: Field) -> Vector:
    if len(z) != setup.s:
        raise ShapeError(f"z has length {len(z)}, expected {setup.s}")
    return field.matvec(setup.matrix, z)


def verify(key: VerificationKey, z: Sequence[int], w_hat: Sequence[int], field: Field) -> int:
    """1 iff Lambda w_hat == Gamma z. Raises ShapeError on malformed input."""
    if len(w_hat) != key.s:
        raise ShapeError(f"response has length {len(w_hat)}, expected {key.s}")
    if len(z) != key.s:
        raise ShapeError(f"z has length {len(z)}, expected {key.s}")
    lhs = field.matvec(key.lam, w_hat)
    rhs = field.matvec(key.gamma, z)
    return int(lhs == rhs)


def decode(field: Field, p: Sequence[int], w_hat: Sequence[int], ver: int = 1) -> FieldElement:
    if ver != 1:
        raise UsageError("refusing to decode a response that failed verification")
    return FieldElement(field.dot(p, w_hat), field)


class User:
    """Single-owner session state: the key plus a counting field."""

    def __init__(self, key: VerificationKey, field: Field | None = None) -> None:
        self.key = key
        self.field = field if field is not None else Field(key.q)
        if self.field.q != key.q:
            raise ValueError("field does not match key modulus")

    def encode(self, x: int) -> PowerVectors:
        with self.field.counter.phase("encode"):
            return power_vectors(self.field, x, self.key.s)

    def verify(self, z: Sequence[int], w_hat: Sequence[int]) -> int:
        with self.field.counter.phase("verify"):
            return verify(self.key, z, w_hat, self.field)

    def decode(self, p: Sequence[int], w_hat: Sequence[int], ver: int = 1) -> FieldElement:
        with self.field.counter.phase("decode"):
            return decode(self.field, p, w_hat, ver)


class Server:
    """A server holding the public setup and answering with a strategy."""

    def __init__(self, setup: ServerSetup, strategy: AdversaryStrategy | None = None,
                 field: Field | None = None) -> None:
        if strategy is None:
            from .adversary import Honest

            strategy = Honest()
        self.setup = setup
        self.strategy = strategy
        self.field = field if field is not None else Field(setup.q)
        self.history: list[tuple[Vector, int | None]] = []

    def respond(self, z: Sequence[int]) -> Vector | None:
        with self.field.counter.phase("serve"):
            return self.strategy.respond(self.setup, z, self.history, self.field)

    def observe(self, z: Sequence[int], ver: int | None) -> None:
        self.history.append((list(z), ver))
        if ver is not None:
            self.strategy.feedback(ver)


def _ops(counter, before_m: int, before_a: int) -> dict[str, int]:
    return {"muls": counter.total_muls - before_m, "adds": counter.total_adds - before_a}


def run_round(user: User, server: Server, x: int, *, index: int = 0,
              feedback: bool = False) -> RoundTranscript:
    uc, sc = user.field.counter, server.field.counter
    um, ua, sm, sa = uc.total_muls, uc.total_adds, sc.total_muls, sc.total_adds
    x %= user.field.q
    pv = user.encode(x)
    w_hat = server.respond(pv.z)
    shape_error = False
    try:
        if w_hat is None:
            raise ShapeError("no response")
        ver = user.verify(pv.z, w_hat)
    except ShapeError:
        ver, shape_error = 0, True
    dec = int(user.decode(pv.p, w_hat, ver)) if ver else None
    server.observe(pv.z, ver if feedback else None)
    return RoundTranscript(
        index=index, x=x, z=pv.z,
        w_hat=None if w_hat is None else list(w_hat),
        ver=ver, dec=dec,
        user_ops=_ops(uc, um, ua), server_ops=_ops(sc, sm, sa),
        shape_error=shape_error,
    )


def run_session(user: User, server: Server, xs: Iterable[int], feedback: bool = False
                ) -> list[RoundTranscript]:
    """Sequential rounds; with ``feedback`` each ver bit reaches the strategy before the next round."""
    return [run_round(user, server, x, index=i, feedback=feedback) for i, x in enumerate(xs)]

