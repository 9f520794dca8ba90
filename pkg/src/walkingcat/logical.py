"""Logical operators of three-ring codes.

Low weight representatives, Tabu search over symplectic bases, the
accessible set lookup table, Clifford frame tracking and the logical
action of cyclic shift gates.
"""

from __future__ import annotations

import dataclasses
import functools
import itertools
import logging
import math
import typing

import numpy as np
import numpy.typing as npt

from walkingcat import WalkingCatError
from walkingcat.codes import ThreeRingCode, pack_rows, span_table
from walkingcat.gf2 import (
    BitMatrix,
    Bits,
    Monomial,
    PauliOperator,
    SymplecticBasis,
    as_bits,
    inverse,
    matmul,
    row_reduce,
    symplectic_form,
)

log = logging.getLogger("walkingcat.logical")

EXACT_RANK_LIMIT = 24
"""Stabilizer ranks up to this bound are searched exhaustively."""

REDUCED_BASIS_WEIGHTS: dict[str, int] = {"Q54": 11, "Q70": 9, "Q102": 12}
"""Maximum weight of a weight-reduced single-qubit logical basis."""

MAX_Y_WEIGHT: dict[str, int] = {"Q102": 20}

BLOCK_WIDTHS: dict[str, tuple[int, int]] = {
    "Q54": (2, 16),
    "Q70": (6, 18),
    "Q102": (3, 30),
}
"""Published ``(logical width, block width)`` pairs."""


@dataclasses.dataclass(frozen=True)
class Representative:
    """A physical representative found by :func:`stabilizer_optimized`."""

    pauli: PauliOperator
    weight: int
    exact: bool


COSET_TRIES = 256
"""Random information sets drawn per CSS half above :data:`EXACT_RANK_LIMIT`."""

_PAIR_POOL = 64
_GUIDED_TRIES = 4


class _Stabilizers:
    """Reduced X and Z stabilizer generators of a code."""

    def __init__(self, code: ThreeRingCode) -> None:
        self.n = code.n
        self.gx, _ = row_reduce(code.hx.dense)
        self.gz, _ = row_reduce(code.hz.dense)
        self.hx = code.hx.dense
        self.hz = code.hz.dense

    @property
    def rank(self) -> int:
        return int(self.gx.shape[0] + self.gz.shape[0])

    def check_commutes(self, p: PauliOperator) -> None:
        if matmul(self.hz, p.x).any() or matmul(self.hx, p.z).any():
            raise WalkingCatError(f"{p} anticommutes with a stabilizer")


@functools.lru_cache(maxsize=64)
def _stabilizers(code: ThreeRingCode) -> _Stabilizers:
    return _Stabilizers(code)


def _systematic(gens: Bits, order: npt.NDArray[np.intp]) -> tuple[npt.NDArray[np.intp], Bits]:
    """Generators in systematic form on pivots taken greedily along ``order``."""
    rref, pivots = row_reduce(gens[:, order])
    rows = np.empty_like(rref)
    rows[:, order] = rref
    return order[pivots], rows


def _clear(vec: Bits, pivots: npt.NDArray[np.intp], rows: Bits) -> Bits:
    """Coset members of ``vec`` zero on the pivots, then with one row flipped.

    ``pivots`` and ``rows`` may carry a leading axis of information sets.
    Parity survives the uint8 wrap of the product.
    """
    bits = vec[pivots]
    cleared = vec ^ (np.matmul(bits[..., None, :], rows)[..., 0, :] & 1)
    flipped = cleared[..., None, :] ^ rows
    return np.concatenate([cleared.reshape(-1, vec.size), flipped.reshape(-1, vec.size)])


class _CosetSearch:
    """Randomized information set search over one CSS half of the group.

    A coset member of minimum weight is found whenever at most one of its
    support bits falls on the pivots of some drawn information set.
    """

    def __init__(self, gens: Bits, tries: int, rng: np.random.Generator) -> None:
        r, n = gens.shape
        self.gens = gens
        self.pivots = np.zeros((tries, r), dtype=np.intp)
        self.rows = np.zeros((tries, r, n), dtype=np.uint8)
        for t in range(tries if r else 0):
            self.pivots[t], self.rows[t] = _systematic(gens, rng.permutation(n))

    def pool(self, vec: Bits) -> Bits:
        if self.gens.shape[0] == 0:
            return vec[None, :].copy()
        return np.concatenate([vec[None, :], _clear(vec, self.pivots, self.rows)])

    def guided(self, vec: Bits, free: Bits, tries: int, rng: np.random.Generator) -> Bits:
        """Members found with pivots drawn first from columns outside ``free``.

        Bits left on ``free`` columns cost nothing in a joint weight.
        """
        if self.gens.shape[0] == 0:
            return vec[None, :].copy()
        outside = np.flatnonzero(free == 0)
        inside = np.flatnonzero(free)
        out = []
        for _ in range(tries):
            order = np.concatenate([rng.permutation(outside), rng.permutation(inside)])
            pivots, rows = _systematic(self.gens, order)
            out.append(_clear(vec, pivots, rows))
        return np.concatenate(out)


@functools.lru_cache(maxsize=64)
def _coset_search(code: ThreeRingCode, tries: int, seed: int) -> tuple[_CosetSearch, _CosetSearch]:
    stabs = _stabilizers(code)
    rng = np.random.default_rng(seed)
    return _CosetSearch(stabs.gx, tries, rng), _CosetSearch(stabs.gz, tries, rng)


def _lightest(pool: Bits, count: int) -> Bits:
    weights = np.count_nonzero(pool, axis=1)
    head = pool[np.argsort(weights, kind="stable")[: 4 * count]]
    unique = np.unique(head, axis=0)
    return unique[np.argsort(np.count_nonzero(unique, axis=1), kind="stable")[:count]]


def _exact_minimum(vec: Bits, stabs: _Stabilizers) -> Bits:
    n = stabs.n
    tx = span_table(pack_rows(stabs.gx)) ^ BitMatrix.from_dense(vec[None, :n]).words[0]
    tz = span_table(pack_rows(stabs.gz)) ^ BitMatrix.from_dense(vec[None, n:]).words[0]
    rows_per_chunk = max(1, (1 << 22) // (tz.shape[0] * tz.shape[1]))
    best = (n + 1, 0, 0)
    for start in range(0, tx.shape[0], rows_per_chunk):
        block = tx[start : start + rows_per_chunk]
        weights = np.bitwise_count(block[:, None, :] | tz[None, :, :]).sum(axis=2)
        flat = int(np.argmin(weights))
        i, j = divmod(flat, tz.shape[0])
        if weights[i, j] < best[0]:
            best = (int(weights[i, j]), start + i, j)
    _, bi, bj = best

    def combine(gens: Bits, mask: int, base: Bits) -> Bits:
        out = base.copy()
        for g in range(gens.shape[0]):
            if mask >> g & 1:
                out ^= gens[g]
        return out

    return np.concatenate([combine(stabs.gx, bi, vec[:n]), combine(stabs.gz, bj, vec[n:])])


def _searched_minimum(vec: Bits, code: ThreeRingCode, tries: int, seed: int) -> tuple[Bits, int]:
    """Lowest weight ``P·S`` found by information set search.

    X and Z halves are searched independently. Mixed operators pair the
    lightest members of both halves, then alternately re-search one half
    against the support of the other until the joint weight stops falling.
    """
    n = code.n
    xsearch, zsearch = _coset_search(code, tries, seed)
    x, z = vec[:n], vec[n:]
    if not z.any() or not x.any():
        search, half = (xsearch, x) if x.any() else (zsearch, z)
        pool = search.pool(half)
        best = pool[int(np.argmin(np.count_nonzero(pool, axis=1)))]
        out = np.concatenate([best, z]) if x.any() else np.concatenate([x, best])
        return out, int(np.count_nonzero(best))

    pools = [xsearch.pool(x), zsearch.pool(z)]
    lx = _lightest(pools[0], _PAIR_POOL)
    lz = _lightest(pools[1], _PAIR_POOL)
    union = np.count_nonzero(lx[:, None, :] | lz[None, :, :], axis=2)
    i, j = np.unravel_index(int(np.argmin(union)), union.shape)
    halves = [lx[i], lz[j]]
    weight = int(union[i, j])
    rng = np.random.default_rng(seed)
    searches = (xsearch, zsearch)
    improved = True
    while improved:
        improved = False
        for side in (0, 1):
            other = halves[1 - side]
            pool = np.concatenate(
                [pools[side], searches[side].guided(halves[side], other, _GUIDED_TRIES, rng)]
            )
            extra = np.count_nonzero(pool > other, axis=1)
            best = int(np.argmin(extra))
            joint = int(np.count_nonzero(other)) + int(extra[best])
            if joint < weight:
                halves[side], weight, improved = pool[best], joint, True
    return np.concatenate(halves), weight


def _with_stabilizer(p: PauliOperator, target: Bits) -> PauliOperator:
    """``p·S`` for the stabilizer ``S`` that turns ``p`` into ``target``."""
    n = p.n
    sx = p.x ^ target[:n]
    sz = p.z ^ target[n:]
    return p * PauliOperator(sx, np.zeros(n, np.uint8)) * PauliOperator(np.zeros(n, np.uint8), sz)


def stabilizer_optimized(
    p: PauliOperator,
    code: ThreeRingCode,
    tries: int = COSET_TRIES,
    seed: int = 0,
) -> Representative:
    """Minimum weight representative ``P·S`` over the stabilizer group.

    Exact when the stabilizer rank is at most :data:`EXACT_RANK_LIMIT`,
    otherwise the best member seen over ``tries`` random information sets
    of each CSS half, never heavier than ``P`` itself.

    :raises WalkingCatError: if ``P`` anticommutes with a stabilizer.
    """
    stabs = _stabilizers(code)
    stabs.check_commutes(p)
    vec = p.vector
    if stabs.rank <= EXACT_RANK_LIMIT:
        best = _exact_minimum(vec, stabs)
        rep = _with_stabilizer(p, best)
        return Representative(rep, rep.weight, True)

    best, weight = _searched_minimum(vec, code, tries, seed)
    if weight > p.weight:
        best, weight = vec, p.weight
    rep = _with_stabilizer(p, best)
    return Representative(rep, weight, False)


# Tabu search


@dataclasses.dataclass(frozen=True)
class ReducedBasis:
    basis: SymplecticBasis
    weights: tuple[int, ...]
    """Weights of ``X̄_1, Z̄_1, …`` after stabilizer optimization."""

    @property
    def max_weight(self) -> int:
        return max(self.weights, default=0)


def _operator_weight(vec: Bits, code: ThreeRingCode, tries: int, seed: int) -> tuple[Bits, int]:
    n = code.n
    p = PauliOperator(vec[:n], vec[n:])
    rep = stabilizer_optimized(p, code, tries=tries, seed=seed)
    return rep.pauli.vector, rep.weight


def _basis_cost(weights: typing.Sequence[int]) -> tuple[int, int]:
    return (max(weights, default=0), sum(weights))


def _apply_move(
    xs: Bits, zs: Bits, move: tuple[int, ...]
) -> tuple[Bits, Bits, tuple[int, ...]]:
    """Return new ``xs``, ``zs`` and the indices of changed operators.

    Changed indices are ``2i`` for ``X̄_i`` and ``2i + 1`` for ``Z̄_i``.
    """
    xs2 = xs.copy()
    zs2 = zs.copy()
    if len(move) == 2:
        u, v = move
        xs2[u] ^= xs[v]
        zs2[v] ^= zs[u]
        return xs2, zs2, (2 * u, 2 * v + 1)
    total_x = np.bitwise_xor.reduce(xs[list(move)], axis=0)
    total_z = np.bitwise_xor.reduce(zs[list(move)], axis=0)
    changed: list[int] = []
    for j in move:
        xs2[j] = total_x ^ xs[j]
        zs2[j] = total_z ^ zs[j]
        changed.extend((2 * j, 2 * j + 1))
    return xs2, zs2, tuple(changed)


def tabu_reduce_basis(
    basis: SymplecticBasis,
    code: ThreeRingCode,
    steps: int = 200,
    tabu_len: int = 50,
    preserve_self_similarity: bool = False,
    tries: int = COSET_TRIES,
    seed: int = 0,
) -> ReducedBasis:
    """Lower the maximum representative weight of a symplectic basis.

    Each step moves to the best non-tabu neighbour. A ``(u, v)`` move
    replaces ``X̄_u`` by ``X̄_u X̄_v`` and ``Z̄_v`` by ``Z̄_u Z̄_v``. With
    ``preserve_self_similarity`` a ``(u, v, s, t)`` move replaces each of
    the four pairs by the product of the other three. A tabu move is
    still taken when it beats the best basis seen so far.

    The returned basis is never worse than the input.
    """
    k = basis.k
    if k == 0:
        return ReducedBasis(basis, ())
    if preserve_self_similarity and k < 4:
        raise WalkingCatError("self-similar moves need at least four logical qubits")

    cache: dict[bytes, tuple[Bits, int]] = {}

    def weight_of(vec: Bits) -> tuple[Bits, int]:
        key = vec.tobytes()
        hit = cache.get(key)
        if hit is None:
            hit = _operator_weight(vec, code, tries, seed)
            cache[key] = hit
        return hit

    def evaluate(xs: Bits, zs: Bits) -> list[int]:
        out: list[int] = []
        for i in range(k):
            out.append(weight_of(xs[i])[1])
            out.append(weight_of(zs[i])[1])
        return out

    if preserve_self_similarity:
        moves: list[tuple[int, ...]] = list(itertools.combinations(range(k), 4))
    else:
        moves = [(u, v) for u in range(k) for v in range(k) if u != v]

    xs, zs = basis.xs.copy(), basis.zs.copy()
    weights = evaluate(xs, zs)
    best = (xs, zs, list(weights))
    best_cost = _basis_cost(weights)
    tabu: dict[tuple[int, ...], int] = {}
    log.info("tabu search start: max weight %d over %d operators", best_cost[0], 2 * k)

    for step in range(steps):
        candidate: typing.Optional[tuple[typing.Any, ...]] = None
        for move in moves:
            xs2, zs2, changed = _apply_move(xs, zs, move)
            w2 = list(weights)
            for idx in changed:
                row = xs2[idx // 2] if idx % 2 == 0 else zs2[idx // 2]
                w2[idx] = weight_of(row)[1]
            cost = _basis_cost(w2)
            is_tabu = tabu.get(move, -1) >= step
            if is_tabu and not cost < best_cost:
                continue
            if candidate is None or cost < candidate[0]:
                candidate = (cost, move, xs2, zs2, w2)
        if candidate is None:
            log.debug("tabu search step %d: every move is tabu", step)
            continue
        cost, move, xs, zs, weights = candidate
        tabu[move] = step + tabu_len
        if cost < best_cost:
            best_cost = cost
            best = (xs.copy(), zs.copy(), list(weights))
            log.info("tabu search step %d: max weight %d (sum %d)", step, *cost)

    bxs, bzs, bweights = best
    # swap in the optimized representatives
    out_x = np.array([weight_of(row)[0] for row in bxs], dtype=np.uint8)
    out_z = np.array([weight_of(row)[0] for row in bzs], dtype=np.uint8)
    reduced = basis.replace(out_x, out_z)
    if not reduced.is_valid():
        raise AssertionError("tabu search produced an invalid symplectic basis")
    return ReducedBasis(reduced, tuple(bweights))


# accessible set


@dataclasses.dataclass(frozen=True)
class AccessibleSet:
    """Lookup table from logical Pauli strings to physical representatives."""

    logical_width: int
    table: dict[str, Representative]

    @property
    def block_width(self) -> int:
        return max((rep.weight for rep in self.table.values()), default=0)

    def __len__(self) -> int:
        return len(self.table)

    def __getitem__(self, key: str) -> Representative:
        return self.table[key]


def accessible_count(k: int, w: int) -> int:
    """Number of non-identity logical Paulis of logical weight at most ``w``."""
    return sum(math.comb(k, j) * 3**j for j in range(1, min(w, k) + 1))


def logical_paulis(k: int, w: int) -> typing.Iterator[str]:
    for j in range(1, min(w, k) + 1):
        for support in itertools.combinations(range(k), j):
            for letters in itertools.product("XYZ", repeat=j):
                chars = ["I"] * k
                for pos, letter in zip(support, letters):
                    chars[pos] = letter
                yield "".join(chars)


def physical_operator(basis: SymplecticBasis, key: str) -> PauliOperator:
    """Product of basis operators for a logical string such as ``"XIZ"``.

    ``Ȳ_i`` is taken as ``i·X̄_i Z̄_i``.
    """
    op = PauliOperator.identity(basis.n)
    for i, letter in enumerate(key):
        if letter in "XY":
            op = op * basis.x_op(i)
        if letter in "ZY":
            op = op * basis.z_op(i)
        if letter == "Y":
            op = PauliOperator(op.x, op.z, op.phase + 1)
    return op


def accessible_set(
    code: ThreeRingCode,
    basis: SymplecticBasis,
    w: int,
    tries: int = COSET_TRIES,
    seed: int = 0,
) -> AccessibleSet:
    """Representatives for every logical Pauli of logical weight ``≤ w``.

    :raises WalkingCatError: if ``w`` exceeds the number of logical qubits.
    """
    if w > basis.k or w < 1:
        raise WalkingCatError(f"logical width must be in 1..{basis.k}, got {w}")
    table: dict[str, Representative] = {}
    for key in logical_paulis(basis.k, w):
        table[key] = stabilizer_optimized(
            physical_operator(basis, key), code, tries=tries, seed=seed
        )
    result = AccessibleSet(w, table)
    log.info(
        "accessible set of %r: %d operators, block width %d",
        code,
        len(result),
        result.block_width,
    )
    return result


def logical_class(basis: SymplecticBasis, p: PauliOperator) -> str:
    """The logical string whose representative differs from ``p`` by a stabilizer."""
    out = []
    vec = p.vector
    for i in range(basis.k):
        anti_z = _sp(vec, basis.zs[i])
        anti_x = _sp(vec, basis.xs[i])
        out.append("IXZY"[anti_z + 2 * anti_x])
    return "".join(out)


def _sp(a: Bits, b: Bits) -> int:
    n = a.shape[0] // 2
    return int((np.sum(a[:n] & b[n:]) + np.sum(a[n:] & b[:n])) & 1)


# Clifford frame


def _hermitian(x: Bits, z: Bits, sign: int = 0) -> PauliOperator:
    return PauliOperator(x, z, int(np.sum(x & z)) + 2 * sign)


class CliffordFrame:
    """A k-qubit Clifford ``U`` tracked in software.

    Row ``r`` of :attr:`matrix` is the image of generator ``r`` under
    ``P -> U P U†``, with generators ordered ``X_0 .. X_{k-1}``,
    ``Z_0 .. Z_{k-1}``. :attr:`signs` holds one sign bit per image.
    """

    def __init__(self, matrix: typing.Any, signs: typing.Any) -> None:
        self.matrix = as_bits(matrix).copy()
        self.signs = as_bits(signs).copy()
        self.k = self.matrix.shape[0] // 2
        if self.matrix.shape != (2 * self.k, 2 * self.k):
            raise ValueError("frame matrix must be 2k x 2k")

    @classmethod
    def identity(cls, k: int) -> CliffordFrame:
        return cls(np.eye(2 * k, dtype=np.uint8), np.zeros(2 * k, np.uint8))

    @classmethod
    def hadamard(cls, k: int, q: int) -> CliffordFrame:
        f = cls.identity(k)
        f.matrix[[q, k + q]] = f.matrix[[k + q, q]]
        return f

    @classmethod
    def phase(cls, k: int, q: int) -> CliffordFrame:
        """``S``: ``X -> Y``, ``Z -> Z``."""
        f = cls.identity(k)
        f.matrix[q, k + q] = 1
        return f

    @classmethod
    def cnot(cls, k: int, control: int, target: int) -> CliffordFrame:
        if control == target:
            raise ValueError("control and target must differ")
        f = cls.identity(k)
        f.matrix[control, target] = 1
        f.matrix[k + target, k + control] = 1
        return f

    @classmethod
    def random(cls, k: int, rng: np.random.Generator, depth: typing.Optional[int] = None) -> CliffordFrame:
        """Product of ``depth`` random H, S and CNOT frames."""
        frame = cls.identity(k)
        for _ in range(depth if depth is not None else 8 * k):
            kind = int(rng.integers(3 if k > 1 else 2))
            q = int(rng.integers(k))
            if kind == 0:
                gate = cls.hadamard(k, q)
            elif kind == 1:
                gate = cls.phase(k, q)
            else:
                t = int((q + 1 + rng.integers(k - 1)) % k)
                gate = cls.cnot(k, q, t)
            frame = frame.update(gate)
        return frame

    def image(self, r: int) -> PauliOperator:
        row = self.matrix[r]
        return _hermitian(row[: self.k], row[self.k :], int(self.signs[r]))

    def apply(self, p: PauliOperator) -> PauliOperator:
        """``U P U†``."""
        if p.n != self.k:
            raise ValueError(f"expected a {self.k}-qubit logical Pauli")
        out = PauliOperator(np.zeros(self.k, np.uint8), np.zeros(self.k, np.uint8), p.phase)
        for j in np.flatnonzero(p.x):
            out = out * self.image(int(j))
        for j in np.flatnonzero(p.z):
            out = out * self.image(self.k + int(j))
        return out

    def update(self, v: CliffordFrame) -> CliffordFrame:
        """The frame of ``V U``."""
        images = [v.apply(self.image(r)) for r in range(2 * self.k)]
        matrix = np.array([img.vector for img in images], dtype=np.uint8)
        signs = np.array([img.sign for img in images], dtype=np.uint8)
        return CliffordFrame(matrix, signs)

    def inverse(self) -> CliffordFrame:
        inv = inverse(self.matrix)
        images = []
        signs = []
        for r in range(2 * self.k):
            cand = _hermitian(inv[r, : self.k], inv[r, self.k :])
            mapped = self.apply(cand)
            images.append(inv[r])
            signs.append(mapped.sign)
        return CliffordFrame(np.array(images), np.array(signs, dtype=np.uint8))

    def conjugate(self, p: PauliOperator) -> PauliOperator:
        """``U† P U``, the retargeted measurement."""
        return self.inverse().apply(p)

    def is_symplectic(self) -> bool:
        omega = symplectic_form(self.k)
        return bool(np.array_equal(matmul(matmul(self.matrix, omega), self.matrix.T), omega))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CliffordFrame):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix) and np.array_equal(
            self.signs, other.signs
        )


def frame_update(frame: CliffordFrame, v: CliffordFrame) -> CliffordFrame:
    return frame.update(v)


def frame_conjugate(frame: CliffordFrame, p: PauliOperator) -> PauliOperator:
    return frame.conjugate(p)


# cyclic gates


def _qubit_permutation(code: ThreeRingCode, shift: tuple[int, int, int]) -> npt.NDArray[np.intp]:
    a, i, j = shift
    g = Monomial(i % code.ell, j % code.m)
    moved = code.shift_indices(g)
    half = code.group_size
    left = moved
    right = moved + half
    perm = np.concatenate([left, right])
    if a % 2:
        perm = np.concatenate([right, left])
    return perm


def cyclic_gate_action(
    code: ThreeRingCode,
    basis: SymplecticBasis,
    shift: tuple[int, int, int],
) -> Bits:
    """Logical symplectic matrix of the qubit permutation ``(a, i, j)``.

    Qubit ``(h, g)`` moves to ``(h + a, g + x^i y^j)``. The result is
    ``diag(G, (G⁻¹)ᵀ)`` with ``G = L'_X L_Zᵀ``.

    :raises WalkingCatError: if the permutation does not preserve the
        stabilizer group or the basis is not CSS.
    """
    if not basis.is_css():
        raise WalkingCatError("cyclic gate action needs a CSS symplectic basis")
    perm = _qubit_permutation(code, shift)
    n = code.n

    def permute(rows: Bits) -> Bits:
        out = np.zeros_like(rows)
        out[:, perm] = rows
        return out

    hx = code.hx.dense
    hz = code.hz.dense
    for h in (hx, hz):
        moved = permute(h)
        if {r.tobytes() for r in moved} != {r.tobytes() for r in h}:
            raise WalkingCatError(f"shift {shift} does not preserve the stabilizers")
    lx_moved = permute(basis.lx)
    g = matmul(lx_moved, basis.lz.T)
    k = basis.k
    action = np.zeros((2 * k, 2 * k), dtype=np.uint8)
    action[:k, :k] = g
    action[k:, k:] = inverse(g).T
    log.debug("cyclic shift %s on n=%d acts with order %d", shift, n, logical_order(action))
    return action


def logical_order(matrix: typing.Any, limit: int = 10_000) -> int:
    """Smallest ``t ≥ 1`` with ``M^t = I``.

    :raises WalkingCatError: if no such ``t ≤ limit`` exists.
    """
    m = as_bits(matrix)
    eye = np.eye(m.shape[0], dtype=np.uint8)
    cur = m.copy()
    for t in range(1, limit + 1):
        if np.array_equal(cur, eye):
            return t
        cur = matmul(cur, m)
    raise WalkingCatError(f"logical action has order above {limit}")


def format_basis(code: ThreeRingCode, basis: SymplecticBasis) -> list[dict[str, str]]:
    """Each logical operator as L and R polynomials over the group ring."""
    out: list[dict[str, str]] = []
    half = code.group_size

    def poly(bits: Bits) -> str:
        terms = [code.group_element(int(i)).format() for i in np.flatnonzero(bits)]
        return ",".join(terms) or "0"

    for idx, op in enumerate(basis.operators()):
        kind = "X" if idx % 2 == 0 else "Z"
        bits = op.x if kind == "X" else op.z
        out.append(
            {
                "operator": f"{kind}{idx // 2 + 1}",
                "weight": str(op.weight),
                "L": poly(bits[:half]),
                "R": poly(bits[half:]),
            }
        )
    return out
