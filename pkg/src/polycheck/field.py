"""Prime-field arithmetic with countable operations.

Scalars are exposed as :class:`FieldElement`; vectors and matrices are plain
lists of ``int`` residues in ``[0, q)`` so the hot loops stay cheap. Every
operation routed through a :class:`Field` is tallied on its attached
:class:`OpCounter`, which is how the protocol costs are measured.
"""

from __future__ import annotations

import hashlib
import operator
from functools import lru_cache
from typing import Sequence

import numpy as np

MERSENNE_61 = (1 << 61) - 1

PHASES = ("init", "encode", "serve", "verify", "decode")
UNPHASED = "other"
_ALL_PHASES = PHASES + (UNPHASED,)

Vector = list[int]
Matrix = list[list[int]]


class FieldMismatchError(ValueError):
    """Operands belong to different fields."""


class ShapeError(ValueError):
    """Vector/matrix dimensions do not conform."""


# Deterministic Miller-Rabin witness set, valid for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


@lru_cache(maxsize=256)
def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class OpCounter:
    """Multiplication/addition tallies split by protocol phase.

    ``total_muls``/``total_adds`` are bumped at the field layer on every
    operation; the per-phase tables receive the same increments under
    whichever phase is active (``"other"`` when none is).
    """

    __slots__ = ("muls", "adds", "total_muls", "total_adds", "_phase")

    def __init__(self) -> None:
        self.muls = dict.fromkeys(_ALL_PHASES, 0)
        self.adds = dict.fromkeys(_ALL_PHASES, 0)
        self.total_muls = 0
        self.total_adds = 0
        self._phase = UNPHASED

    @property
    def current_phase(self) -> str:
        return self._phase

    def phase(self, name: str) -> _PhaseScope:
        if name not in PHASES:
            raise ValueError(f"unknown phase {name!r}; expected one of {PHASES}")
        return _PhaseScope(self, name)

    def tally(self, muls: int = 0, adds: int = 0) -> None:
        if muls:
            self.total_muls += muls
            self.muls[self._phase] += muls
        if adds:
            self.total_adds += adds
            self.adds[self._phase] += adds

    def snapshot(self) -> dict[str, dict[str, int]]:
        return {
            p: {"muls": self.muls[p], "adds": self.adds[p]}
            for p in _ALL_PHASES
            if self.muls[p] or self.adds[p]
        }

    def phase_muls(self, *phases: str) -> int:
        return sum(self.muls[p] for p in phases)

    def reset(self) -> None:
        for p in _ALL_PHASES:
            self.muls[p] = self.adds[p] = 0
        self.total_muls = 0
        self.total_adds = 0


class _PhaseScope:
    __slots__ = ("counter", "name", "previous")

    def __init__(self, counter: OpCounter, name: str) -> None:
        self.counter = counter
        self.name = name

    def __enter__(self) -> OpCounter:
        self.previous = self.counter._phase
        self.counter._phase = self.name
        return self.counter

    def __exit__(self, *exc) -> None:
        self.counter._phase = self.previous


class Field:
    """The prime field F_q, optionally bound to an :class:`OpCounter`.

    The modulus is a runtime value: tiny primes drive the exhaustive
    soundness checks, 2^61 - 1 (the default) drives the benchmarks.
    """

    __slots__ = ("q", "counter")

    def __init__(self, q: int = MERSENNE_61, counter: OpCounter | None = None) -> None:
        if not isinstance(q, int) or isinstance(q, bool):
            raise TypeError("modulus must be an int")
        if q >= 1 << 63:
            raise ValueError("modulus must be below 2^63")
        if not is_prime(q):
            raise ValueError(f"modulus {q} is not prime")
        self.q = q
        self.counter = counter if counter is not None else OpCounter()

    def counting(self) -> Field:
        """Same field, fresh counter."""
        return Field(self.q, OpCounter())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Field) and other.q == self.q

    def __hash__(self) -> int:
        return hash(("Field", self.q))

    def __repr__(self) -> str:
        return f"Field({self.q})"

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(value % self.q, self)

    def element(self, value: int) -> FieldElement:
        return self(value)

    @property
    def zero(self) -> FieldElement:
        return FieldElement(0, self)

    @property
    def one(self) -> FieldElement:
        return FieldElement(1 % self.q, self)

    # scalar ops on residues

    def add(self, a: int, b: int) -> int:
        self.counter.tally(adds=1)
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        self.counter.tally(adds=1)
        return (a - b) % self.q

    def neg(self, a: int) -> int:
        return -a % self.q

    def mul(self, a: int, b: int) -> int:
        self.counter.tally(muls=1)
        return a * b % self.q

    def inv(self, a: int) -> int:
        a %= self.q
        if a == 0:
            raise ZeroDivisionError("0 has no inverse in a field")
        # Fermat inversion costs about 2*log2(q) multiplications
        self.counter.tally(muls=2 * self.q.bit_length())
        return pow(a, self.q - 2, self.q)

    def pow(self, a: int, e: int) -> int:
        """Square-and-multiply; tallies one mul per squaring and per set bit."""
        if e < 0:
            raise ValueError("exponent must be non-negative")
        result, base = 1 % self.q, a % self.q
        muls = 0
        while e:
            if e & 1:
                result = result * base % self.q
                muls += 1
            e >>= 1
            if e:
                base = base * base % self.q
                muls += 1
        self.counter.tally(muls=muls)
        return result

    # vector ops

    def dot(self, u: Sequence[int], v: Sequence[int]) -> int:
        if len(u) != len(v):
            raise ShapeError(f"dot of lengths {len(u)} and {len(v)}")
        n = len(u)
        self.counter.tally(muls=n, adds=max(n - 1, 0))
        return sum(map(operator.mul, u, v)) % self.q

    def matvec(self, m: Sequence[Sequence[int]], v: Sequence[int]) -> Vector:
        cols = len(v)
        for row in m:
            if len(row) != cols:
                raise ShapeError(f"matrix row of length {len(row)} against vector of length {cols}")
        q = self.q
        self.counter.tally(muls=len(m) * cols, adds=len(m) * max(cols - 1, 0))
        return [sum(map(operator.mul, row, v)) % q for row in m]

    def matmul(self, a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> Matrix:
        inner = len(b)
        for row in a:
            if len(row) != inner:
                raise ShapeError(f"cannot multiply {len(a)}x{len(row)} by {inner}x?")
        cols = len(b[0]) if b else 0
        q = self.q
        bt = list(zip(*b)) if b else []
        self.counter.tally(muls=len(a) * inner * cols, adds=len(a) * cols * max(inner - 1, 0))
        return [[sum(map(operator.mul, row, col)) % q for col in bt] for row in a]

    def vec_add(self, u: Sequence[int], v: Sequence[int]) -> Vector:
        if len(u) != len(v):
            raise ShapeError(f"add of lengths {len(u)} and {len(v)}")
        self.counter.tally(adds=len(u))
        q = self.q
        return [(a + b) % q for a, b in zip(u, v)]

    def vec_scale(self, k: int, v: Sequence[int]) -> Vector:
        self.counter.tally(muls=len(v))
        q = self.q
        return [k * a % q for a in v]

    def running_powers(self, base: int, count: int) -> Vector:
        """[1, b, b^2, ..., b^(count-1)] by running products (count-1 muls)."""
        if count < 1:
            return []
        q = self.q
        out = [1 % q]
        for _ in range(count - 1):
            out.append(out[-1] * base % q)
        self.counter.tally(muls=count - 1)
        return out

    # sampling

    def sample_uniform(self, rng: np.random.Generator) -> FieldElement:
        return FieldElement(uniform_below(rng, self.q, 1)[0], self)

    def sample_vector(self, rng: np.random.Generator, n: int) -> Vector:
        return uniform_below(rng, self.q, n)

    def sample_matrix(self, rng: np.random.Generator, rows: int, cols: int) -> Matrix:
        flat = uniform_below(rng, self.q, rows * cols)
        return [flat[i * cols:(i + 1) * cols] for i in range(rows)]

    def sample_nonzero_vector(self, rng: np.random.Generator, n: int) -> Vector:
        while True:
            v = self.sample_vector(rng, n)
            if any(v):
                return v


class FieldElement:
    """An immutable residue tied to its :class:`Field`."""

    __slots__ = ("value", "field")

    def __init__(self, value: int, field: Field) -> None:
        if not 0 <= value < field.q:
            raise ValueError(f"{value} is not a residue mod {field.q}")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "field", field)

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    def _coerce(self, other: FieldElement | int) -> int:
        if isinstance(other, FieldElement):
            if other.field.q != self.field.q:
                raise FieldMismatchError(f"F_{self.field.q} vs F_{other.field.q}")
            return other.value
        if isinstance(other, int):
            return other % self.field.q
        return NotImplemented

    def _wrap(self, v: int) -> FieldElement:
        return FieldElement(v, self.field)

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self._wrap(self.field.add(self.value, o))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self._wrap(self.field.sub(self.value, o))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self._wrap(self.field.sub(o, self.value))

    def __neg__(self):
        return self._wrap(self.field.neg(self.value))

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self._wrap(self.field.mul(self.value, o))

    __rmul__ = __mul__

    def inverse(self) -> FieldElement:
        return self._wrap(self.field.inv(self.value))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self._wrap(self.field.mul(self.value, self.field.inv(o)))

    def __pow__(self, e: int):
        return self._wrap(self.field.pow(self.value, e))

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.field.q == other.field.q and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.field.q
        return NotImplemented

    def __hash__(self):
        return hash((self.field.q, self.value))

    def __int__(self):
        return self.value

    __index__ = __int__

    def __repr__(self):
        return f"{self.value} (mod {self.field.q})"


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def pow_(a: FieldElement, e: int) -> FieldElement:
    return a ** e


_U64 = 1 << 64


def uniform_below(rng: np.random.Generator, bound: int, n: int) -> list[int]:
    """n i.i.d. uniform draws from [0, bound) by rejection on raw 64-bit words.

    Words at or above the largest multiple of ``bound`` are discarded, so
    the result carries no modulo bias.
    """
    if n <= 0:
        return []
    if not 0 < bound <= _U64:
        raise ValueError("bound must lie in (0, 2^64]")
    limit = _U64 - _U64 % bound
    raw = rng.bit_generator.random_raw
    out = [w % bound for w in raw(n).tolist() if w < limit]
    while len(out) < n:
        w = int(raw())
        if w < limit:
            out.append(w % bound)
    return out


def make_rng(seed: int | None = None, *path: int) -> np.random.Generator:
    """Philox stream for ``seed`` split along ``path``.

    The master seed and the hashed path form the 128-bit Philox key, so each
    path addresses its own counter-based stream. ``seed=None`` draws OS
    entropy instead.
    """
    if seed is None:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(spawn_key=tuple(path))))
    if not 0 <= seed < _U64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    tag = hashlib.blake2b(repr(tuple(path)).encode(), digest_size=8).digest()
    key = seed | int.from_bytes(tag, "little") << 64
    return np.random.Generator(np.random.Philox(key=key))


class Substreams:
    """Counter-split sub-streams of one keyed Philox stream.

    ``at(i)`` repositions the shared generator at counter i * 2^128, so each
    index owns 2^128 blocks and its draws do not depend on earlier use.
    One instance per thread.
    """

    def __init__(self, seed: int | None, *path: int) -> None:
        self.rng = make_rng(seed, *path)
        self._state = self.rng.bit_generator.state  # fresh: buffer empty
        self._counter = self._state["state"]["counter"]

    def at(self, index: int) -> np.random.Generator:
        if not 0 <= index < 1 << 128:
            raise ValueError("sub-stream index out of range")
        self._counter[:] = (0, 0, index & (_U64 - 1), index >> 64)
        self.rng.bit_generator.state = self._state
        return self.rng
