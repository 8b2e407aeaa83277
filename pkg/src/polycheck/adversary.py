"""Server strategies used in soundness experiments.

A strategy only ever sees public data: the setup (Delta), the current z,
the query history and, when the session enables it, one accept/reject bit
per round. It never receives Lambda or Gamma.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Sequence

import numpy as np

from .field import Field, Vector, uniform_below
from .protocol import ServerSetup, server_compute

History = Sequence[tuple[Vector, "int | None"]]


class AdversaryStrategy:
    kind = "abstract"

    def respond(self, setup: ServerSetup, z: Sequence[int], history: History,
                field: Field) -> Vector | None:
        raise NotImplementedError

    def feedback(self, ver: int) -> None:
        """Receive the public verification bit of the last round."""


class Honest(AdversaryStrategy):
    kind = "honest"

    def respond(self, setup, z, history, field):
        return server_compute(setup, z, field)


class RandomForgery(AdversaryStrategy):
    """Uniform response conditioned on being wrong."""

    kind = "random-forgery"

    def __init__(self, rng: np.random.Generator) -> None:
        self.rng = rng

    def respond(self, setup, z, history, field):
        w = server_compute(setup, z, field)
        y = field.sample_nonzero_vector(self.rng, len(w))
        return field.vec_add(w, y)


class FixedOffset(AdversaryStrategy):
    """Adds the same secret nonzero offset y0 to every honest answer."""

    kind = "fixed-offset"

    def __init__(self, rng: np.random.Generator | None = None, offset: Sequence[int] | None = None):
        if offset is None and rng is None:
            raise ValueError("need an rng or an explicit offset")
        if offset is not None and not any(offset):
            raise ValueError("offset must be nonzero")
        self.rng = rng
        self.offset = None if offset is None else list(offset)

    def respond(self, setup, z, history, field):
        w = server_compute(setup, z, field)
        if self.offset is None:
            self.offset = field.sample_nonzero_vector(self.rng, len(w))
        if len(self.offset) != len(w):
            raise ValueError(f"offset length {len(self.offset)} does not match response length {len(w)}")
        return field.vec_add(w, self.offset)


def projective_points(q: int, s: int) -> list[tuple[int, ...]]:
    """One representative per line through the origin of F_q^s (leading nonzero = 1)."""
    pts = []
    for lead in range(s):
        for tail in itertools.product(range(q), repeat=s - lead - 1):
            pts.append((0,) * lead + (1,) + tail)
    return pts


@lru_cache(maxsize=32)
def _annihilation_table(q: int, c: int, s: int) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Boolean table A[key, y] = (Lambda_key y == 0) over all c x s keys and all directions y."""
    dirs = projective_points(q, s)
    ys = np.array(dirs, dtype=np.int64)  # (D, s)
    rows = np.array(list(itertools.product(range(q), repeat=s)), dtype=np.int64)  # (q^s, s)
    row_kills = (rows @ ys.T) % q == 0  # (q^s, D)
    # a key is c independent rows; it annihilates y iff every row does
    table = row_kills
    for _ in range(c - 1):
        table = (table[:, None, :] & row_kills[None, :, :]).reshape(-1, len(dirs))
    return table, dirs


class AdaptiveNullSpaceSearch(AdversaryStrategy):
    """Feedback-driven forger.

    Keeps the set of keys still consistent with the verdicts seen so far and
    each round submits the unused direction y that the largest number of
    those keys would accept. A rejection of y removes every key with
    Lambda y = 0; an acceptance keeps only those, and y is then replayed.
    When q^(c s) is too large to enumerate it falls back to fresh directions
    that are not scalar multiples of rejected ones.
    """

    kind = "adaptive"
    max_pool = 1 << 16

    def __init__(self, rng: np.random.Generator, c: int) -> None:
        if c < 1:
            raise ValueError("c must be >= 1")
        self.rng = rng
        self.c = c
        self.alive: np.ndarray | None = None
        self.used: set[int] = set()
        self.rejected: list[tuple[int, ...]] = []
        self.last: tuple[int, ...] | None = None
        self.last_index: int | None = None
        self.accepted: tuple[int, ...] | None = None
        self._shape: tuple[int, int] | None = None

    def _enumerable(self, q: int, s: int) -> bool:
        return q ** (self.c * s) <= self.max_pool

    def _choose(self, q: int, s: int) -> tuple[int, ...]:
        if self._enumerable(q, s):
            table, dirs = _annihilation_table(q, self.c, s)
            if self.alive is None:
                self.alive = np.ones(table.shape[0], dtype=bool)
            scores = self.alive.astype(np.int64) @ table
            if self.used:
                scores[list(self.used)] = -1
            best = np.flatnonzero(scores == scores.max())
            idx = int(best[uniform_below(self.rng, len(best), 1)[0]])
            self.last_index = idx
            return dirs[idx]
        self.last_index = None
        while True:
            y = tuple(uniform_below(self.rng, q, s))
            if not any(y):
                continue
            if not any(_parallel(y, r, q) for r in self.rejected):
                return y

    def respond(self, setup, z, history, field):
        w = server_compute(setup, z, field)
        q, s = field.q, len(w)
        if self._shape != (q, s):
            self._shape = (q, s)
            self.alive, self.used, self.rejected, self.accepted = None, set(), [], None
        y = self.accepted if self.accepted is not None else self._choose(q, s)
        self.last = y
        return field.vec_add(w, list(y))

    def feedback(self, ver: int) -> None:
        if self.last is None:
            return
        if self.last_index is not None and self.alive is not None:
            table, _ = _annihilation_table(self._shape[0], self.c, self._shape[1])
            column = table[:, self.last_index]
            self.alive &= column if ver else ~column
            self.used.add(self.last_index)
        if ver:
            self.accepted = self.last
        else:
            self.rejected.append(self.last)
            self.accepted = None

    def candidates(self) -> list[tuple[int, ...]]:
        """Directions still eligible for proposal (enumerable regime only)."""
        if self._shape is None:
            return []
        q, s = self._shape
        _, dirs = _annihilation_table(q, self.c, s)
        return [d for i, d in enumerate(dirs) if i not in self.used]


def _parallel(a: Sequence[int], b: Sequence[int], q: int) -> bool:
    """True iff a = k*b for some nonzero k (both nonzero)."""
    i = next(j for j, v in enumerate(b) if v)
    if a[i] == 0:
        return False
    k = a[i] * pow(b[i], q - 2, q) % q
    return all((k * bv - av) % q == 0 for av, bv in zip(a, b))


STRATEGY_KINDS = ("honest", "random-forgery", "fixed-offset", "adaptive")


def make_strategy(kind: str, rng: np.random.Generator, c: int = 1,
                  offset: Sequence[int] | None = None) -> AdversaryStrategy:
    if kind == "honest":
        return Honest()
    if kind == "random-forgery":
        return RandomForgery(rng)
    if kind == "fixed-offset":
        return FixedOffset(rng, offset)
    if kind == "adaptive":
        return AdaptiveNullSpaceSearch(rng, c)
    raise ValueError(f"unknown strategy kind {kind!r}; expected one of {STRATEGY_KINDS}")
