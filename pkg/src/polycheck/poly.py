"""Univariate polynomials, the Horner reference evaluator and the coefficient matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .field import Field, FieldElement, Matrix, ShapeError, Vector


@dataclass(frozen=True)
class Polynomial:
    """``coeffs[i]`` is the coefficient of x^i; ``len(coeffs)`` is the degree bound k."""

    field: Field
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) < 1:
            raise ValueError("a polynomial needs at least one coefficient")
        q = self.field.q
        object.__setattr__(self, "coeffs", tuple(int(c) % q for c in self.coeffs))

    @classmethod
    def from_values(cls, field: Field, values: Sequence[int | FieldElement]) -> Polynomial:
        return cls(field, tuple(int(v) for v in values))

    @classmethod
    def random(cls, field: Field, k: int, rng) -> Polynomial:
        return cls(field, tuple(field.sample_vector(rng, k)))

    @property
    def k(self) -> int:
        return len(self.coeffs)

    def padded(self, extra: int) -> Polynomial:
        return Polynomial(self.field, self.coeffs + (0,) * extra)

    def dumps(self) -> str:
        """``q=<modulus>: a0 a1 ... a_{k-1}`` on a single line."""
        return f"q={self.field.q}: " + " ".join(str(c) for c in self.coeffs)

    @classmethod
    def loads(cls, text: str) -> Polynomial:
        text = text.strip()
        if "\n" in text:
            raise ValueError("polynomial record must be a single line")
        header, sep, body = text.partition(":")
        if not sep or not header.strip().startswith("q="):
            raise ValueError("missing 'q=<modulus>:' header")
        field = Field(int(header.strip()[2:]))
        values = [int(tok) for tok in body.split()]
        for v in values:
            if not 0 <= v < field.q:
                raise ValueError(f"coefficient {v} is not a residue mod {field.q}")
        return cls(field, tuple(values))


@dataclass(frozen=True)
class CoeffMatrix:
    """The s x s matrix with entry (i, j) = a_{i*s + j}, zero-padded past k."""

    delta: tuple[tuple[int, ...], ...]
    s: int
    pad_count: int

    @property
    def rows(self) -> Matrix:
        return [list(r) for r in self.delta]


@dataclass(frozen=True)
class PowerVectors:
    z: Vector  # [1, x, ..., x^(s-1)]
    p: Vector  # [1, x^s, ..., x^(s(s-1))]


def chunk_size(k: int) -> int:
    return max(1, math.isqrt(k - 1) + 1) if k > 1 else 1


def horner_eval(f: Polynomial, x: FieldElement | int) -> FieldElement:
    """Ground-truth f(x): k-1 multiplications and k-1 additions."""
    field = f.field
    xv = int(x) % field.q
    q = field.q
    acc = f.coeffs[-1]
    for a in reversed(f.coeffs[:-1]):
        acc = (acc * xv + a) % q
    field.counter.tally(muls=f.k - 1, adds=f.k - 1)
    return FieldElement(acc, field)


def decompose(f: Polynomial) -> CoeffMatrix:
    s = chunk_size(f.k)
    pad = s * s - f.k
    a = f.coeffs + (0,) * pad
    delta = tuple(tuple(a[i * s:(i + 1) * s]) for i in range(s))
    return CoeffMatrix(delta=delta, s=s, pad_count=pad)


def power_vectors(field: Field, x: FieldElement | int, s: int) -> PowerVectors:
    """Right vector z and left vector p; one square-and-multiply for x^s."""
    if s < 1:
        raise ValueError("s must be positive")
    xv = int(x) % field.q
    z = field.running_powers(xv, s)
    xs = field.pow(xv, s)
    p = field.running_powers(xs, s)
    return PowerVectors(z=z, p=p)


def matvec(field: Field, m: Sequence[Sequence[int]], v: Sequence[int]) -> Vector:
    return field.matvec(m, v)


def bilinear_eval(field: Field, delta: CoeffMatrix, x: FieldElement | int) -> FieldElement:
    """p . (delta z): the matrix route to f(x)."""
    pv = power_vectors(field, x, delta.s)
    w = field.matvec(delta.delta, pv.z)
    return FieldElement(field.dot(pv.p, w), field)


__all__ = [
    "CoeffMatrix",
    "Polynomial",
    "PowerVectors",
    "ShapeError",
    "bilinear_eval",
    "chunk_size",
    "decompose",
    "horner_eval",
    "matvec",
    "power_vectors",
]
