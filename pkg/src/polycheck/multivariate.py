"""Multivariate polynomials as a bilinear form x0^T Delta x1.

Variables are split into a first and second half. Row index i of Delta
stands for the exponent digits (base n_deg, most significant first) of the
first half, column index j for those of the second half, so
Delta[i][j] = a_{digits(i) ++ digits(j)}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .field import Field, FieldElement, Vector
from .poly import CoeffMatrix
from .protocol import User, VerificationKey, init_from_matrix, server_compute, ServerSetup


@dataclass(frozen=True)
class MultivariatePolynomial:
    """Dense coefficients in row-major digit-tuple order: index = sum d_i n^(m-i)."""

    field: Field
    m: int
    n_deg: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if self.m < 1 or self.n_deg < 1:
            raise ValueError("need m >= 1 and n_deg >= 1")
        if len(self.coeffs) != self.n_deg ** self.m:
            raise ValueError(f"expected {self.n_deg ** self.m} coefficients, got {len(self.coeffs)}")
        q = self.field.q
        object.__setattr__(self, "coeffs", tuple(int(c) % q for c in self.coeffs))

    @classmethod
    def random(cls, field: Field, m: int, n_deg: int, rng) -> MultivariatePolynomial:
        return cls(field, m, n_deg, tuple(field.sample_vector(rng, n_deg ** m)))

    def coefficient(self, digits: Sequence[int]) -> int:
        idx = 0
        for d in digits:
            idx = idx * self.n_deg + d
        return self.coeffs[idx]

    def evened(self) -> MultivariatePolynomial:
        """Append a phantom last variable (exponent 0 only) when m is odd."""
        if self.m % 2 == 0:
            return self
        out = []
        for a in self.coeffs:
            out.append(a)
            out.extend([0] * (self.n_deg - 1))
        return MultivariatePolynomial(self.field, self.m + 1, self.n_deg, tuple(out))

    def dumps(self) -> str:
        return f"q={self.field.q} m={self.m} n={self.n_deg}: " + " ".join(map(str, self.coeffs))

    @classmethod
    def loads(cls, text: str) -> MultivariatePolynomial:
        header, sep, body = text.strip().partition(":")
        if not sep:
            raise ValueError("missing header")
        fields = dict(tok.split("=", 1) for tok in header.split())
        try:
            field = Field(int(fields["q"]))
            m, n_deg = int(fields["m"]), int(fields["n"])
        except KeyError as exc:
            raise ValueError(f"header is missing {exc}") from None
        return cls(field, m, n_deg, tuple(int(v) for v in body.split()))


def brute_force_eval(f: MultivariatePolynomial, xs: Sequence[int]) -> int:
    """Term-by-term sum of a_d * prod x_i^{d_i} with independent pow calls (oracle)."""
    if len(xs) != f.m:
        raise ValueError(f"expected {f.m} inputs")
    q = f.field.q
    total = 0
    for idx, digits in enumerate(itertools.product(range(f.n_deg), repeat=f.m)):
        a = f.coeffs[idx]
        if a:
            term = a
            for x, d in zip(xs, digits):
                term = term * pow(x, d, q) % q
            total += term
    return total % q


def _pad_inputs(f: MultivariatePolynomial, xs: Sequence[int]) -> list[int]:
    if len(xs) == f.m:
        return list(xs) + ([1] if f.m % 2 else [])
    raise ValueError(f"expected {f.m} inputs, got {len(xs)}")


def mv_decompose(f: MultivariatePolynomial) -> CoeffMatrix:
    g = f.evened()
    side = g.n_deg ** (g.m // 2)
    rows = tuple(tuple(g.coeffs[i * side:(i + 1) * side]) for i in range(side))
    return CoeffMatrix(delta=rows, s=side, pad_count=0)


def _digit_vector(field: Field, values: Sequence[int], n_deg: int) -> Vector:
    """Entry i = prod values[j]^{digit_j(i)}, digits most significant first.

    Grown one variable at a time; the digit-0 entries copy their prefix, so
    only nonzero digits cost a multiplication.
    """
    q = field.q
    vec = [1 % q]
    for x in values:
        pw = field.running_powers(x % q, n_deg)
        nxt = []
        for v in vec:
            nxt.append(v)
            nxt.extend(v * pw[d] % q for d in range(1, n_deg))
        field.counter.tally(muls=len(vec) * (n_deg - 1))
        vec = nxt
    return vec


def mv_input_vectors(field: Field, xs: Sequence[int], n_deg: int) -> tuple[Vector, Vector]:
    if len(xs) % 2:
        raise ValueError("need an even number of inputs (pad odd m with a phantom variable)")
    half = len(xs) // 2
    return _digit_vector(field, xs[:half], n_deg), _digit_vector(field, xs[half:], n_deg)


@dataclass
class MultivariateResult:
    value: int | None
    ver: int
    user_muls: int
    server_muls: int


def mv_init(f: MultivariatePolynomial, c: int, rng: np.random.Generator,
            field: Field | None = None) -> tuple[VerificationKey, ServerSetup]:
    field = field if field is not None else Field(f.field.q)
    delta = mv_decompose(f)
    key = init_from_matrix(delta, c, rng, field)
    return key, ServerSetup(matrix=delta.delta, q=field.q)


def mv_eval_verified(f: MultivariatePolynomial, xs: Sequence[int], key: VerificationKey,
                     setup: ServerSetup, user: User | None = None, server_field: Field | None = None,
                     respond=None) -> MultivariateResult:
    """Delegate w = Delta x1, verify with the key, decode x0 . w.

    ``respond`` optionally replaces the honest server: it gets (setup, x1, field).
    """
    user = user if user is not None else User(key)
    server_field = server_field if server_field is not None else Field(key.q)
    uf = user.field
    u0, s0 = uf.counter.total_muls, server_field.counter.total_muls
    inputs = _pad_inputs(f, [int(x) % key.q for x in xs])
    with uf.counter.phase("encode"):
        x0, x1 = mv_input_vectors(uf, inputs, f.n_deg)
    with server_field.counter.phase("serve"):
        if respond is None:
            w_hat = server_compute(setup, x1, server_field)
        else:
            w_hat = respond(setup, x1, server_field)
    ver = user.verify(x1, w_hat)
    value = int(user.decode(x0, w_hat, ver)) if ver else None
    return MultivariateResult(value=value, ver=ver,
                              user_muls=uf.counter.total_muls - u0,
                              server_muls=server_field.counter.total_muls - s0)


def bilinear_value(field: Field, f: MultivariatePolynomial, xs: Sequence[int]) -> FieldElement:
    """x0^T Delta x1 computed directly (no protocol)."""
    delta = mv_decompose(f)
    inputs = _pad_inputs(f, [int(x) % field.q for x in xs])
    x0, x1 = mv_input_vectors(field, inputs, f.n_deg)
    return FieldElement(field.dot(x0, field.matvec(delta.delta, x1)), field)
