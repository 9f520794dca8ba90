"""Binary linear algebra and bivariate monomial matrices.

Dense helpers work on ``numpy.uint8`` arrays holding 0/1 entries.
:class:`BitMatrix` packs rows into 64 bit words for the XOR heavy
elimination used when checking ranks of large check matrices.
"""

from __future__ import annotations

import dataclasses
import functools
import logging
import re
import typing

import numpy as np
import numpy.typing as npt

from walkingcat import CodeConstructionError, PolynomialSyntaxError

log = logging.getLogger("walkingcat.gf2")

Bits = npt.NDArray[np.uint8]

_WORD = 64


def as_bits(a: typing.Any) -> Bits:
    """Coerce ``a`` to a contiguous uint8 array of 0/1 entries."""
    return np.ascontiguousarray(np.asarray(a, dtype=np.uint8) & 1)


def row_reduce(m: typing.Any) -> tuple[Bits, list[int]]:
    """Reduced row echelon form over GF(2).

    :returns: the nonzero rows of the RREF and the pivot column of each.
    """
    a = as_bits(m).copy()
    if a.ndim != 2:
        raise ValueError("row_reduce expects a 2D array")
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        mask = a[:, c].astype(bool)
        mask[r] = False
        a[mask] ^= a[r]
        pivots.append(c)
        r += 1
    return a[:r], pivots


def rank_dense(m: typing.Any) -> int:
    return len(row_reduce(m)[1])


def nullspace(m: typing.Any) -> Bits:
    """Basis of ``{v : m v = 0}`` as the rows of the returned array."""
    a = as_bits(m)
    cols = a.shape[1]
    rref, pivots = row_reduce(a)
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, p in enumerate(pivots):
            basis[i, p] = rref[row, f]
    return basis


def inverse(m: typing.Any) -> Bits:
    """Inverse of a square matrix over GF(2).

    :raises ValueError: if the matrix is singular.
    """
    a = as_bits(m)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("inverse expects a square matrix")
    aug = np.concatenate([a, np.eye(n, dtype=np.uint8)], axis=1)
    rref, pivots = row_reduce(aug)
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular over GF(2)")
    return rref[:n, n:].copy()


def solve(m: typing.Any, rhs: typing.Any) -> typing.Optional[Bits]:
    """A solution ``x`` of ``m x = rhs`` with every free variable zero.

    Pivots are taken on the leftmost independent columns, so callers
    order columns by preference. Returns ``None`` if there is none.
    """
    a = as_bits(m)
    cols = a.shape[1]
    aug = np.concatenate([a, as_bits(rhs).reshape(-1, 1)], axis=1)
    rref, pivots = row_reduce(aug)
    if pivots and pivots[-1] == cols:
        return None
    x = np.zeros(cols, dtype=np.uint8)
    for row, p in enumerate(pivots):
        x[p] = rref[row, cols]
    return x


def matmul(a: typing.Any, b: typing.Any) -> Bits:
    """Product over GF(2) using integer accumulation."""
    prod = np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64)
    return (prod & 1).astype(np.uint8)


class Reducer:
    """Incrementally maintained echelon basis.

    ``add(v)`` reduces ``v`` against the stored rows and keeps the
    remainder when it is independent. Used to split a space into a
    subspace and a complement.
    """

    def __init__(self, ncols: int) -> None:
        self.ncols = ncols
        self.rows: list[Bits] = []
        self.pivots: list[int] = []

    def reduce(self, v: typing.Any) -> Bits:
        r = as_bits(v).copy()
        for row, p in zip(self.rows, self.pivots):
            if r[p]:
                r ^= row
        return r

    def add(self, v: typing.Any) -> bool:
        r = self.reduce(v)
        nz = np.flatnonzero(r)
        if nz.size == 0:
            return False
        p = int(nz[0])
        for i, row in enumerate(self.rows):
            if row[p]:
                self.rows[i] = row ^ r
        self.rows.append(r)
        self.pivots.append(p)
        return True

    def contains(self, v: typing.Any) -> bool:
        return not self.reduce(v).any()

    def __len__(self) -> int:
        return len(self.rows)


def complement_basis(subspace: typing.Any, space: typing.Any) -> Bits:
    """Rows of ``space`` that extend a basis of ``subspace`` to span both."""
    sub = as_bits(subspace)
    sp = as_bits(space)
    reducer = Reducer(sp.shape[1])
    for row in sub:
        reducer.add(row)
    picked = [row for row in sp if reducer.add(row)]
    if not picked:
        return np.zeros((0, sp.shape[1]), dtype=np.uint8)
    return np.array(picked, dtype=np.uint8)


class BitMatrix:
    """Binary matrix with rows packed into little endian 64 bit words."""

    rows: int
    cols: int
    words: npt.NDArray[np.uint64]

    def __init__(self, rows: int, cols: int, words: npt.NDArray[np.uint64]) -> None:
        nwords = max(1, -(-cols // _WORD))
        if words.shape != (rows, nwords):
            raise ValueError(f"word array shape {words.shape} does not fit {rows}x{cols}")
        self.rows = rows
        self.cols = cols
        self.words = words
        self.words.setflags(write=False)

    @classmethod
    def from_dense(cls, dense: typing.Any) -> BitMatrix:
        a = as_bits(dense)
        if a.ndim != 2:
            raise ValueError("BitMatrix needs a 2D array")
        rows, cols = a.shape
        nwords = max(1, -(-cols // _WORD))
        padded = np.zeros((rows, nwords * _WORD), dtype=np.uint8)
        padded[:, :cols] = a
        packed = np.packbits(padded, axis=1, bitorder="little")
        words = np.ascontiguousarray(packed).view("<u8").astype(np.uint64)
        return cls(rows, cols, words.reshape(rows, nwords))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> BitMatrix:
        return cls.from_dense(np.zeros((rows, cols), dtype=np.uint8))

    @classmethod
    def identity(cls, n: int) -> BitMatrix:
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @functools.cached_property
    def dense(self) -> Bits:
        raw = np.ascontiguousarray(self.words.astype("<u8")).view(np.uint8)
        bits = np.unpackbits(raw, axis=1, bitorder="little")
        out = np.ascontiguousarray(bits[:, : self.cols])
        out.setflags(write=False)
        return out

    def to_dense(self) -> Bits:
        return self.dense.copy()

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def row_weights(self) -> npt.NDArray[np.int64]:
        return np.bitwise_count(self.words).sum(axis=1).astype(np.int64)

    def col_weights(self) -> npt.NDArray[np.int64]:
        return self.dense.sum(axis=0).astype(np.int64)

    def rank(self) -> int:
        """Rank by XOR elimination on the packed words."""
        w = self.words.copy()
        r = 0
        for c in range(self.cols):
            if r == self.rows:
                break
            word, bit = divmod(c, _WORD)
            column = (w[r:, word] >> np.uint64(bit)) & np.uint64(1)
            nz = np.flatnonzero(column)
            if nz.size == 0:
                continue
            p = r + int(nz[0])
            if p != r:
                w[[r, p]] = w[[p, r]]
            below = (w[r + 1 :, word] >> np.uint64(bit)) & np.uint64(1)
            hit = np.flatnonzero(below) + r + 1
            if hit.size:
                w[hit] ^= w[r]
            r += 1
        return r

    def transpose(self) -> BitMatrix:
        return BitMatrix.from_dense(self.dense.T)

    @property
    def T(self) -> BitMatrix:
        return self.transpose()

    def __matmul__(self, other: BitMatrix) -> BitMatrix:
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        return BitMatrix.from_dense(matmul(self.dense, other.dense))

    def hstack(self, other: BitMatrix) -> BitMatrix:
        if self.rows != other.rows:
            raise ValueError("hstack needs equal row counts")
        return BitMatrix.from_dense(np.concatenate([self.dense, other.dense], axis=1))

    def is_zero(self) -> bool:
        return not self.words.any()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols}, nnz={int(self.row_weights().sum())})"


def rank(m: typing.Union[BitMatrix, typing.Any]) -> int:
    """Rank over GF(2) of a :class:`BitMatrix` or a dense 0/1 array."""
    if isinstance(m, BitMatrix):
        return m.rank()
    return BitMatrix.from_dense(m).rank()


# monomials


@dataclasses.dataclass(frozen=True, order=True)
class Monomial:
    """The group element ``x^i y^j`` of Z_ℓ × Z_m."""

    i: int
    j: int = 0

    def transpose(self, ell: int, m: int) -> Monomial:
        return Monomial((-self.i) % ell, (-self.j) % m)

    def times(self, other: Monomial, ell: int, m: int) -> Monomial:
        return Monomial((self.i + other.i) % ell, (self.j + other.j) % m)

    def format(self) -> str:
        if self.i == 0 and self.j == 0:
            return "1"
        out = ""
        if self.i:
            out += "x" if self.i == 1 else f"x{self.i}"
        if self.j:
            out += "y" if self.j == 1 else f"y{self.j}"
        return out

    def __str__(self) -> str:
        return self.format()


_TERM = re.compile(r"^(?:x\^?(\d*))?(?:y\^?(\d*))?$")


def parse_monomial(term: str, ell: int, m: int, spec: str = "") -> Monomial:
    """Parse ``1``, ``x3``, ``y``, ``x2y4`` or ``x^2y^4``.

    :raises PolynomialSyntaxError: naming the term when it does not match.
    """
    t = term.strip()
    if t == "1":
        return Monomial(0, 0)
    match = _TERM.match(t)
    if t == "" or match is None:
        raise PolynomialSyntaxError(term, spec or term)
    has_x = "x" in t
    has_y = "y" in t
    i = (int(match.group(1)) if match.group(1) else 1) if has_x else 0
    j = (int(match.group(2)) if match.group(2) else 1) if has_y else 0
    if has_y and m == 1 and j % m != 0:
        raise PolynomialSyntaxError(term, spec or term)
    return Monomial(i % ell, j % m)


class MonomialPolynomial:
    """Sum of distinct monomials in F2[Z_ℓ × Z_m].

    The term order is kept as given; schedules refer to the i-th term as
    ``A_{i+1}``.
    """

    ell: int
    m: int
    terms: tuple[Monomial, ...]

    def __init__(self, ell: int, m: int, terms: typing.Iterable[Monomial]) -> None:
        if ell < 1 or m < 1:
            raise CodeConstructionError(f"ring sizes must be positive, got {ell}x{m}")
        self.ell = ell
        self.m = m
        normalized = tuple(Monomial(t.i % ell, t.j % m) for t in terms)
        if len(set(normalized)) != len(normalized):
            raise CodeConstructionError(
                f"repeated monomial in {' + '.join(t.format() for t in normalized)}"
            )
        self.terms = normalized

    @classmethod
    def parse(cls, spec: str, ell: int, m: int = 1) -> MonomialPolynomial:
        """Parse a comma or plus separated list of monomials.

        :raises PolynomialSyntaxError: for a malformed or repeated term.
        """
        parts = [p for p in re.split(r"[,+]", spec.replace(" ", ""))]
        if any(p == "" for p in parts):
            raise PolynomialSyntaxError("", spec)
        seen: set[Monomial] = set()
        terms: list[Monomial] = []
        for part in parts:
            mono = parse_monomial(part, ell, m, spec)
            if mono in seen:
                raise PolynomialSyntaxError(part, spec)
            seen.add(mono)
            terms.append(mono)
        return cls(ell, m, terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> typing.Iterator[Monomial]:
        return iter(self.terms)

    def __getitem__(self, index: int) -> Monomial:
        return self.terms[index]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MonomialPolynomial):
            return NotImplemented
        return (self.ell, self.m, frozenset(self.terms)) == (
            other.ell,
            other.m,
            frozenset(other.terms),
        )

    def __hash__(self) -> int:
        return hash((self.ell, self.m, frozenset(self.terms)))

    def transpose(self) -> MonomialPolynomial:
        return MonomialPolynomial(
            self.ell, self.m, [t.transpose(self.ell, self.m) for t in self.terms]
        )

    def shifted(self, g: Monomial) -> MonomialPolynomial:
        """The product ``g · self``."""
        return MonomialPolynomial(
            self.ell, self.m, [g.times(t, self.ell, self.m) for t in self.terms]
        )

    def __mul__(self, other: MonomialPolynomial) -> MonomialPolynomial:
        if (self.ell, self.m) != (other.ell, other.m):
            raise ValueError("polynomials live in different rings")
        counts: dict[Monomial, int] = {}
        for a in self.terms:
            for b in other.terms:
                prod = a.times(b, self.ell, self.m)
                counts[prod] = counts.get(prod, 0) ^ 1
        return MonomialPolynomial(
            self.ell, self.m, sorted(t for t, c in counts.items() if c)
        )

    def index(self, g: Monomial) -> int:
        return g.i * self.m + g.j

    def expand(self) -> BitMatrix:
        return expand(self)

    def format(self) -> str:
        return ",".join(t.format() for t in self.terms)

    def __str__(self) -> str:
        return " + ".join(t.format() for t in self.terms) or "0"

    def __repr__(self) -> str:
        return f"MonomialPolynomial({self.ell}, {self.m}, {self.format()!r})"


def expand(p: MonomialPolynomial) -> BitMatrix:
    """Sum of the permutation matrices ``S_ℓ^i ⊗ S_m^j`` over the terms.

    ``x`` is the cyclic shift whose first row is ``(0, 1, 0, …)``, so the
    entry ``(g, g + (i, j))`` is set for every group element ``g``.
    """
    size = p.ell * p.m
    dense = np.zeros((size, size), dtype=np.uint8)
    gi, gj = np.divmod(np.arange(size), p.m)
    for t in p.terms:
        cols = ((gi + t.i) % p.ell) * p.m + (gj + t.j) % p.m
        dense[np.arange(size), cols] ^= 1
    return BitMatrix.from_dense(dense)


# Pauli operators


class PauliOperator:
    """The operator ``i^phase · X^x · Z^z`` on ``n`` qubits."""

    x: Bits
    z: Bits
    phase: int

    def __init__(self, x: typing.Any, z: typing.Any, phase: int = 0) -> None:
        self.x = as_bits(x).copy()
        self.z = as_bits(z).copy()
        if self.x.shape != self.z.shape or self.x.ndim != 1:
            raise ValueError("x and z parts must be equal length vectors")
        self.phase = phase % 4
        self.x.setflags(write=False)
        self.z.setflags(write=False)

    @classmethod
    def identity(cls, n: int) -> PauliOperator:
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    @classmethod
    def x_type(cls, bits: typing.Any) -> PauliOperator:
        b = as_bits(bits)
        return cls(b, np.zeros_like(b))

    @classmethod
    def z_type(cls, bits: typing.Any) -> PauliOperator:
        b = as_bits(bits)
        return cls(np.zeros_like(b), b)

    @classmethod
    def from_string(cls, text: str) -> PauliOperator:
        """Parse ``"+XIZY"`` style strings; ``Y`` carries a factor ``i``."""
        sign = 0
        body = text.strip()
        if body.startswith("-"):
            sign, body = 2, body[1:]
        elif body.startswith("+"):
            body = body[1:]
        x = np.array([c in "XY" for c in body], dtype=np.uint8)
        z = np.array([c in "ZY" for c in body], dtype=np.uint8)
        if any(c not in "IXYZ_" for c in body):
            raise ValueError(f"invalid Pauli string {text!r}")
        return cls(x, z, sign + int(np.sum(x & z)))

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def support(self) -> npt.NDArray[np.intp]:
        return np.flatnonzero(self.x | self.z)

    @property
    def vector(self) -> Bits:
        """The symplectic vector ``(x | z)``."""
        return np.concatenate([self.x, self.z])

    @property
    def sign(self) -> int:
        """``0`` or ``1`` for Hermitian operators written as ``±P``."""
        return ((self.phase - int(np.sum(self.x & self.z))) % 4) // 2

    def __mul__(self, other: PauliOperator) -> PauliOperator:
        if self.n != other.n:
            raise ValueError("operators act on different qubit counts")
        cross = int(np.sum(self.z & other.x))
        return PauliOperator(
            self.x ^ other.x, self.z ^ other.z, self.phase + other.phase + 2 * cross
        )

    def commutes(self, other: PauliOperator) -> bool:
        return symplectic_product(self.vector, other.vector) == 0

    def is_identity(self) -> bool:
        return not (self.x.any() or self.z.any())

    def unsigned(self) -> PauliOperator:
        return PauliOperator(self.x, self.z, int(np.sum(self.x & self.z)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliOperator):
            return NotImplemented
        return (
            self.phase == other.phase
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __hash__(self) -> int:
        return hash((self.phase, self.x.tobytes(), self.z.tobytes()))

    def __str__(self) -> str:
        letters = "".join("IXZY"[int(a) + 2 * int(b)] for a, b in zip(self.x, self.z))
        return ("-" if self.sign else "+") + letters

    def __repr__(self) -> str:
        return f"PauliOperator({self})"


def symplectic_product(a: typing.Any, b: typing.Any) -> int:
    """``a_x · b_z + a_z · b_x`` mod 2 for stacked vectors ``(x | z)``."""
    va = as_bits(a)
    vb = as_bits(b)
    n = va.shape[-1] // 2
    return int((np.sum(va[:n] & vb[n:]) + np.sum(va[n:] & vb[:n])) & 1)


def symplectic_form(n: int) -> Bits:
    """Ω = [[0, I], [I, 0]]."""
    eye = np.eye(n, dtype=np.uint8)
    zero = np.zeros((n, n), dtype=np.uint8)
    return np.block([[zero, eye], [eye, zero]]).astype(np.uint8)


@dataclasses.dataclass(frozen=True)
class SymplecticBasis:
    """Logical operators ``X̄_i``, ``Z̄_i`` stored as symplectic vectors.

    ``xs[i]`` and ``zs[i]`` are rows of length ``2n``; ``xs[i]``
    anticommutes with ``zs[i]`` and commutes with every other row.
    """

    n: int
    xs: Bits
    zs: Bits

    @property
    def k(self) -> int:
        return int(self.xs.shape[0])

    def is_css(self) -> bool:
        n = self.n
        return not (self.xs[:, n:].any() or self.zs[:, :n].any())

    @property
    def lx(self) -> Bits:
        """X parts of the X logicals, meaningful for CSS bases."""
        return self.xs[:, : self.n]

    @property
    def lz(self) -> Bits:
        return self.zs[:, self.n :]

    def operators(self) -> list[PauliOperator]:
        """``[X̄_1, Z̄_1, …, X̄_k, Z̄_k]`` with Hermitian phases."""
        out: list[PauliOperator] = []
        n = self.n
        for xv, zv in zip(self.xs, self.zs):
            for v in (xv, zv):
                out.append(PauliOperator(v[:n], v[n:], int(np.sum(v[:n] & v[n:]))))
        return out

    def x_op(self, i: int) -> PauliOperator:
        v = self.xs[i]
        return PauliOperator(v[: self.n], v[self.n :], int(np.sum(v[: self.n] & v[self.n :])))

    def z_op(self, i: int) -> PauliOperator:
        v = self.zs[i]
        return PauliOperator(v[: self.n], v[self.n :], int(np.sum(v[: self.n] & v[self.n :])))

    def gram(self) -> Bits:
        """Symplectic Gram matrix of ``xs`` stacked over ``zs``."""
        rows = np.concatenate([self.xs, self.zs])
        n = self.n
        swapped = np.concatenate([rows[:, n:], rows[:, :n]], axis=1)
        return matmul(rows, swapped.T)

    def is_valid(self) -> bool:
        k = self.k
        expected = symplectic_form(k)
        return bool(np.array_equal(self.gram(), expected))

    def replace(self, xs: Bits, zs: Bits) -> SymplecticBasis:
        return SymplecticBasis(self.n, as_bits(xs), as_bits(zs))


def stabilizer_rows(hx: typing.Any, hz: typing.Any) -> Bits:
    """Stack CSS checks as symplectic rows ``(x | z)``."""
    hx_d = hx.dense if isinstance(hx, BitMatrix) else as_bits(hx)
    hz_d = hz.dense if isinstance(hz, BitMatrix) else as_bits(hz)
    n = hx_d.shape[1]
    top = np.concatenate([hx_d, np.zeros((hx_d.shape[0], n), np.uint8)], axis=1)
    bottom = np.concatenate([np.zeros((hz_d.shape[0], n), np.uint8), hz_d], axis=1)
    return np.concatenate([top, bottom]).astype(np.uint8)


def symplectic_basis(
    hx: typing.Union[BitMatrix, typing.Any],
    hz: typing.Union[BitMatrix, typing.Any],
    css: bool = True,
) -> SymplecticBasis:
    """Find logical operators for the CSS code with checks ``hx``, ``hz``.

    With ``css`` set, ``X̄_i`` are X type (in ker HZ modulo rowspace HX)
    and ``Z̄_i`` are Z type, paired by inverting their overlap matrix.
    Otherwise a symplectic Gram-Schmidt runs over the whole normalizer
    and the result may mix X and Z parts.

    :raises CodeConstructionError: if the checks do not commute.
    """
    hx_d = hx.dense if isinstance(hx, BitMatrix) else as_bits(hx)
    hz_d = hz.dense if isinstance(hz, BitMatrix) else as_bits(hz)
    n = hx_d.shape[1]
    if hz_d.shape[1] != n:
        raise CodeConstructionError("HX and HZ have different column counts")
    if matmul(hx_d, hz_d.T).any():
        raise CodeConstructionError("X and Z checks do not commute (HX·HZᵀ ≠ 0)")

    if css:
        lx = complement_basis(hx_d, nullspace(hz_d))
        lz = complement_basis(hz_d, nullspace(hx_d))
        k = lx.shape[0]
        if lz.shape[0] != k:
            raise CodeConstructionError("inconsistent logical dimensions")
        if k == 0:
            empty = np.zeros((0, 2 * n), dtype=np.uint8)
            return SymplecticBasis(n, empty, empty.copy())
        overlap = matmul(lx, lz.T)
        lz = matmul(inverse(overlap).T, lz)
        zeros = np.zeros((k, n), dtype=np.uint8)
        xs = np.concatenate([lx, zeros], axis=1)
        zs = np.concatenate([zeros, lz], axis=1)
        log.debug("CSS symplectic basis with k=%d on n=%d", k, n)
        return SymplecticBasis(n, xs, zs)

    stabs = stabilizer_rows(hx_d, hz_d)
    # v is in the normalizer iff stabs_x·v_z + stabs_z·v_x = 0
    swapped = np.concatenate([stabs[:, n:], stabs[:, :n]], axis=1)
    pool = [row.copy() for row in nullspace(swapped)]
    xs_list: list[Bits] = []
    zs_list: list[Bits] = []
    while pool:
        a = pool.pop(0)
        partner = next((i for i, b in enumerate(pool) if symplectic_product(a, b)), None)
        if partner is None:
            continue  # a lies in the radical, i.e. the stabilizer group
        b = pool.pop(partner)
        for i, v in enumerate(pool):
            if symplectic_product(v, b):
                v = v ^ a
            if symplectic_product(v, a):
                v = v ^ b
            pool[i] = v
        xs_list.append(a)
        zs_list.append(b)
    k = len(xs_list)
    xs = np.array(xs_list, dtype=np.uint8).reshape(k, 2 * n)
    zs = np.array(zs_list, dtype=np.uint8).reshape(k, 2 * n)
    log.debug("symplectic Gram-Schmidt basis with k=%d on n=%d", k, n)
    return SymplecticBasis(n, xs, zs)
