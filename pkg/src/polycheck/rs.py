"""Systematic Reed-Solomon code over blocks of Delta.

Data blocks D_1..D_t are the values of a degree < t (matrix-valued)
polynomial at evaluation points a_1..a_t; coded block l is its value at
a_l. Because the map block -> block z is linear, the shard results
D~_l z are a codeword too, which is what gets erasure-decoded.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Mapping, Sequence

from .field import Field, Matrix, Vector


class ConfigError(ValueError):
    """Invalid code or network parameters."""


class DecodingFailure(RuntimeError):
    """Too few shards, or no codeword within the unique-decoding radius."""


@dataclass(frozen=True)
class RSConfig:
    n: int
    t: int
    points: tuple[int, ...] = dc_field(default=())

    def __post_init__(self):
        if not self.points:
            object.__setattr__(self, "points", tuple(range(1, self.n + 1)))
        if self.n < 1 or not 1 <= self.t <= self.n:
            raise ConfigError(f"need 1 <= t <= n, got n={self.n}, t={self.t}")
        if len(self.points) != self.n:
            raise ConfigError("need exactly n evaluation points")

    def validate(self, q: int) -> None:
        if q <= self.n:
            raise ConfigError(f"field size q={q} must exceed n={self.n}")
        pts = [p % q for p in self.points]
        if 0 in pts or len(set(pts)) != self.n:
            raise ConfigError("evaluation points must be distinct and nonzero mod q")

    @property
    def unique_decoding_radius(self) -> int:
        """ceil((n - t + 1)/2) - 1 = floor((n - t)/2)."""
        return (self.n - self.t) // 2


def lagrange_row(field: Field, nodes: Sequence[int], at: int) -> Vector:
    """Coefficients c_i with P(at) = sum c_i P(nodes[i]) for every P of degree < len(nodes)."""
    q = field.q
    row = []
    for i, xi in enumerate(nodes):
        num, den = 1, 1
        for j, xj in enumerate(nodes):
            if j != i:
                num = num * (at - xj) % q
                den = den * (xi - xj) % q
        row.append(num * pow(den, q - 2, q) % q)
    # 2(t-1) muls for the products plus one inversion and one scaling per node
    field.counter.tally(muls=len(nodes) * (2 * len(nodes) - 1 + 2 * q.bit_length()))
    return row


def generator_matrix(field: Field, cfg: RSConfig) -> Matrix:
    """n x t matrix; row l maps the data blocks to coded block l. Rows 0..t-1 are the identity."""
    cfg.validate(field.q)
    data_pts = [p % field.q for p in cfg.points[:cfg.t]]
    gen = []
    for l, a in enumerate(cfg.points):
        if l < cfg.t:
            gen.append([int(m == l) for m in range(cfg.t)])
        else:
            gen.append(lagrange_row(field, data_pts, a % field.q))
    return gen


def rs_encode(field: Field, blocks: Sequence[Sequence[Sequence[int]]], cfg: RSConfig) -> list[Matrix]:
    """t equal-height data blocks -> n coded blocks (the first t unchanged)."""
    if len(blocks) != cfg.t:
        raise ConfigError(f"expected {cfg.t} data blocks, got {len(blocks)}")
    heights = {len(b) for b in blocks}
    if len(heights) != 1:
        raise ConfigError("data blocks must have equal height")
    gen = generator_matrix(field, cfg)
    q = field.q
    coded = [[list(r) for r in b] for b in blocks]
    for l in range(cfg.t, cfg.n):
        g = gen[l]
        block = []
        for rows in zip(*blocks):
            block.append([sum(gm * v for gm, v in zip(g, col)) % q for col in zip(*rows)])
        if blocks[0] and blocks[0][0]:
            h, w = len(blocks[0]), len(blocks[0][0])
            field.counter.tally(muls=cfg.t * h * w, adds=(cfg.t - 1) * h * w)
        coded.append(block)
    return coded


def rs_recover(field: Field, results: Mapping[int, Sequence[int]], cfg: RSConfig) -> list[Vector]:
    """Erasure-decode the t data vectors from any t surviving coded results.

    ``results`` maps node index (0-based) to its verified shard result;
    missing indices are erasures.
    """
    survivors = sorted(results)
    if len(survivors) < cfg.t:
        raise DecodingFailure(f"{cfg.n - len(survivors)} erasures exceed the n - t = {cfg.n - cfg.t} budget")
    use = survivors[:cfg.t]
    if use == list(range(cfg.t)):
        return [list(results[m]) for m in range(cfg.t)]
    q = field.q
    nodes = [cfg.points[i] % q for i in use]
    cols = [results[i] for i in use]
    out = []
    for m in range(cfg.t):
        if m in results:
            out.append(list(results[m]))
            continue
        coef = lagrange_row(field, nodes, cfg.points[m] % q)
        h = len(cols[0])
        out.append([sum(cf * col[r] for cf, col in zip(coef, cols)) % q for r in range(h)])
        field.counter.tally(muls=cfg.t * h, adds=(cfg.t - 1) * h)
    return out


def _solve(field: Field, a: Matrix, b: Vector) -> Vector | None:
    """One solution of a x = b over F_q (free variables set to 0), or None."""
    q = field.q
    rows, cols = len(a), len(a[0])
    m = [list(r) + [bv] for r, bv in zip(a, b)]
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if m[i][c] % q), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = pow(m[r][c], q - 2, q)
        m[r] = [v * inv % q for v in m[r]]
        for i in range(rows):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [(vi - f * vr) % q for vi, vr in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    if any(all(v == 0 for v in row[:-1]) and row[-1] for row in m):
        return None
    x = [0] * cols
    for i, c in enumerate(pivots):
        x[c] = m[i][-1]
    return x


def _poly_divmod(q: int, num: Vector, den: Vector) -> tuple[Vector, Vector]:
    """Coefficient lists, low order first; den must have a nonzero leading coefficient."""
    num = list(num)
    inv = pow(den[-1], q - 2, q)
    quot = [0] * max(len(num) - len(den) + 1, 1)
    for i in range(len(num) - len(den), -1, -1):
        coef = num[i + len(den) - 1] * inv % q
        quot[i] = coef
        for j, d in enumerate(den):
            num[i + j] = (num[i + j] - coef * d) % q
    return quot, num[:len(den) - 1]


def _eval(q: int, coeffs: Sequence[int], x: int) -> int:
    acc = 0
    for a in reversed(coeffs):
        acc = (acc * x + a) % q
    return acc


def berlekamp_welch(field: Field, values: Sequence[int], cfg: RSConfig) -> Vector:
    """Unique decoding of one coordinate without side information.

    Returns the t data symbols of the codeword within distance
    floor((n-t)/2) of ``values``; raises DecodingFailure if none exists.
    """
    q = field.q
    n, t, e = cfg.n, cfg.t, cfg.unique_decoding_radius
    pts = [p % q for p in cfg.points]
    # unknowns: E_0..E_{e-1} (E monic of degree e), Q_0..Q_{e+t-1}
    a, b = [], []
    for x, y in zip(pts, values):
        row = [(-y * pow(x, j, q)) % q for j in range(e)]
        row += [pow(x, j, q) for j in range(e + t)]
        a.append(row)
        b.append(y * pow(x, e, q) % q)
    sol = _solve(field, a, b)
    if sol is None:
        raise DecodingFailure("no error locator satisfies the key equation")
    err_loc = sol[:e] + [1]
    qpoly = sol[e:]
    poly, rem = _poly_divmod(q, qpoly, err_loc)
    if any(rem):
        raise DecodingFailure("error locator does not divide Q")
    agree = sum(_eval(q, poly, x) == y % q for x, y in zip(pts, values))
    if agree < n - e:
        raise DecodingFailure("no codeword within the unique-decoding radius")
    return [_eval(q, poly, x) for x in pts[:t]]


def rs_unique_decode(field: Field, results: Sequence[Sequence[int]], cfg: RSConfig) -> list[Vector]:
    """Decode all n shard results coordinate-wise with no error locations known."""
    if len(results) != cfg.n:
        raise DecodingFailure("unique decoding needs all n shard results")
    h = len(results[0])
    per_coord = [berlekamp_welch(field, [res[r] for res in results], cfg) for r in range(h)]
    return [[per_coord[r][m] for r in range(h)] for m in range(cfg.t)]
