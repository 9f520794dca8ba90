"""Three-ring codes: construction, parameters, distance and the database."""

from __future__ import annotations

import concurrent.futures
import dataclasses
import enum
import functools
import importlib.resources
import logging
import re
import typing

import numpy as np
import numpy.typing as npt

from walkingcat import BudgetExceeded, CodeConstructionError, Settings, WalkingCatError
from walkingcat.gf2 import (
    BitMatrix,
    Bits,
    Monomial,
    MonomialPolynomial,
    SymplecticBasis,
    matmul,
    nullspace,
    row_reduce,
    symplectic_basis,
)

log = logging.getLogger("walkingcat.codes")


class Family(str, enum.Enum):
    GB = "GB"
    """Generalized bicycle, the special case ``m = 1``."""
    BB = "BB"
    """Bivariate bicycle."""
    HGP = "HGP"
    """Cyclic hypergraph product: ``A`` in powers of x, ``B`` in powers of y."""


PolynomialLike = typing.Union[str, MonomialPolynomial]


class ThreeRingCode:
    """CSS code on Z_2 × Z_ℓ × Z_m with ``HX = [A | B]``, ``HZ = [Bᵀ | Aᵀ]``.

    Data qubits ``0 .. ℓm-1`` form the left (L) half, ``ℓm .. 2ℓm-1``
    the right (R) half. Group element ``x^i y^j`` has index ``i·m + j``.
    """

    def __init__(
        self,
        family: Family,
        a: MonomialPolynomial,
        b: MonomialPolynomial,
        name: typing.Optional[str] = None,
        d: typing.Optional[int] = None,
        d_exact: bool = True,
    ) -> None:
        self.family = family
        self.a = a
        self.b = b
        self.name = name
        self.d = d
        self.d_exact = d_exact
        self.ell = a.ell
        self.m = a.m
        amat = a.expand()
        bmat = b.expand()
        self.hx: BitMatrix = amat.hstack(bmat)
        self.hz: BitMatrix = bmat.transpose().hstack(amat.transpose())
        if not (self.hx @ self.hz.transpose()).is_zero():
            raise AssertionError("three-ring construction produced non-commuting checks")
        self.rank_x = self.hx.rank()
        self.rank_z = self.hz.rank()

    @property
    def group_size(self) -> int:
        return self.ell * self.m

    @property
    def rings(self) -> tuple[int, int, int]:
        """The cyclic factor sizes ``(a, b, c)``."""
        return (2, self.ell, self.m)

    @property
    def n(self) -> int:
        return 2 * self.group_size

    @property
    def k(self) -> int:
        return self.n - self.rank_x - self.rank_z

    @property
    def check_weight(self) -> int:
        return len(self.a) + len(self.b)

    def group_index(self, g: Monomial) -> int:
        return (g.i % self.ell) * self.m + (g.j % self.m)

    def group_element(self, index: int) -> Monomial:
        return Monomial(index // self.m, index % self.m)

    def shift_indices(self, g: Monomial, sign: int = 1) -> npt.NDArray[np.intp]:
        """``h -> h + sign·g`` for every group index ``h``."""
        idx = np.arange(self.group_size)
        hi, hj = np.divmod(idx, self.m)
        return ((hi + sign * g.i) % self.ell) * self.m + (hj + sign * g.j) % self.m

    @functools.cached_property
    def basis(self) -> SymplecticBasis:
        """A CSS symplectic basis of the logical operators."""
        return symplectic_basis(self.hx, self.hz, css=True)

    def parameters(self) -> tuple[int, int, typing.Optional[int]]:
        return (self.n, self.k, self.d)

    def __repr__(self) -> str:
        label = self.name or f"{self.family.value} l={self.ell} m={self.m}"
        d = "?" if self.d is None else (str(self.d) if self.d_exact else f"<={self.d}")
        return f"ThreeRingCode({label}, [[{self.n},{self.k},{d}]])"


def _as_polynomial(p: PolynomialLike, ell: int, m: int) -> MonomialPolynomial:
    if isinstance(p, MonomialPolynomial):
        if (p.ell, p.m) != (ell, m):
            raise CodeConstructionError(
                f"polynomial ring {p.ell}x{p.m} does not match {ell}x{m}"
            )
        return p
    return MonomialPolynomial.parse(p, ell, m)


def construct(
    family: typing.Union[Family, str],
    ell: int,
    m: int,
    a: PolynomialLike,
    b: PolynomialLike,
    name: typing.Optional[str] = None,
    d: typing.Optional[int] = None,
    d_exact: bool = True,
) -> ThreeRingCode:
    """Build and validate a three-ring code.

    :param family: ``GB``, ``BB`` or ``HGP``.
    :param ell: Size of the x ring.
    :param m: Size of the y ring; ``1`` for GB codes.
    :param a: Terms of ``A`` as a polynomial or ``"x2,y,x3y"`` string.
    :param b: Terms of ``B``.

    :raises CodeConstructionError: for empty polynomials, a GB code with
        ``m > 1`` or an HGP code mixing x and y in one polynomial.
    :raises PolynomialSyntaxError: for unparsable terms.
    """
    try:
        fam = family if isinstance(family, Family) else Family(family.upper())
    except ValueError as exc:
        raise CodeConstructionError(f"unknown code family {family!r}") from exc
    if ell < 1 or m < 1:
        raise CodeConstructionError(f"ring sizes must be positive, got l={ell}, m={m}")
    pa = _as_polynomial(a, ell, m)
    pb = _as_polynomial(b, ell, m)
    if len(pa) == 0 or len(pb) == 0:
        raise CodeConstructionError("A and B must both have at least one term")
    if fam is Family.GB and m != 1:
        raise CodeConstructionError("GB codes need m = 1")
    if fam is Family.HGP:
        if any(t.j for t in pa) or any(t.i for t in pb):
            raise CodeConstructionError(
                "cyclic HGP codes need A in powers of x and B in powers of y"
            )
    code = ThreeRingCode(fam, pa, pb, name=name, d=d, d_exact=d_exact)
    log.debug("constructed %r", code)
    return code


def four_two_two() -> ThreeRingCode:
    """The [[4,2,2]] code as the GB code ``A = B = 1 + x`` with ``ℓ = 2``."""
    return construct(Family.GB, 2, 1, "1,x", "1,x", name="C422", d=2)


def toy_bb18() -> ThreeRingCode:
    """The [[18,2,3]] bivariate bicycle toy, ``A = 1 + x``, ``B = 1 + xy``."""
    return construct(Family.BB, 3, 3, "1,x", "1,xy", name="BB18", d=3)


# distance


@dataclasses.dataclass(frozen=True)
class DistanceResult:
    d: int
    is_upper_bound: bool
    dx: int
    dz: int


def pack_rows(rows: Bits) -> npt.NDArray[np.uint64]:
    if rows.shape[0] == 0:
        return np.zeros((0, max(1, -(-rows.shape[1] // 64))), dtype=np.uint64)
    return BitMatrix.from_dense(rows).words


def span_table(gens: npt.NDArray[np.uint64]) -> npt.NDArray[np.uint64]:
    """All ``2^g`` sums of ``g`` packed generators in Gray-like doubling order."""
    g, nwords = gens.shape
    table = np.zeros((1 << g, nwords), dtype=np.uint64)
    for i in range(g):
        table[1 << i : 1 << (i + 1)] = table[: 1 << i] ^ gens[i]
    return table


def _min_coset_weight(
    stabilizers: Bits, logicals: Bits, chunk_elems: int = 1 << 22
) -> int:
    """Minimum weight over ``L + S`` for every nonzero logical class ``L``.

    The stabilizer span is split into two halves whose span tables are
    XOR-combined block by block.
    """
    stab_basis, _ = row_reduce(stabilizers)
    s = stab_basis.shape[0]
    half = s // 2
    left = span_table(pack_rows(stab_basis[:half]))
    right = span_table(pack_rows(stab_basis[half:]))
    classes = span_table(pack_rows(logicals))[1:]
    nwords = right.shape[1]
    rows_per_chunk = max(1, chunk_elems // (right.shape[0] * nwords))
    best = np.iinfo(np.int64).max
    for cls_word in classes:
        shifted = left ^ cls_word
        for start in range(0, shifted.shape[0], rows_per_chunk):
            block = shifted[start : start + rows_per_chunk]
            weights = np.bitwise_count(block[:, None, :] ^ right[None, :, :]).sum(axis=2)
            best = min(best, int(weights.min()))
    return int(best)


def _exact_budget(code: ThreeRingCode) -> int:
    return (1 << max(code.rank_x, code.rank_z)) * ((1 << code.k) - 1)


def _exact_distance(code: ThreeRingCode, budget: int) -> DistanceResult:
    needed = _exact_budget(code)
    if needed > budget:
        raise BudgetExceeded(
            f"exact distance of {code!r} needs {needed:.3e} vectors, budget is {budget:.3e}"
        )
    basis = code.basis
    dx = _min_coset_weight(code.hx.dense, basis.lx)
    dz = _min_coset_weight(code.hz.dense, basis.lz)
    log.info("exact distance of %r: dX=%d dZ=%d", code, dx, dz)
    return DistanceResult(min(dx, dz), False, dx, dz)


def _information_set_round(
    kernel: Bits, conjugates: Bits, iters: int, seed: np.random.SeedSequence
) -> int:
    """Best nontrivial weight seen over ``iters`` random information sets."""
    rng = np.random.default_rng(seed)
    n = kernel.shape[1]
    best = n + 1
    for _ in range(iters):
        perm = rng.permutation(n)
        rref, _ = row_reduce(kernel[:, perm])
        rows = np.empty_like(rref)
        rows[:, perm] = rref
        nontrivial = matmul(rows, conjugates.T).any(axis=1)
        if not nontrivial.any():
            continue
        weights = rows[nontrivial].sum(axis=1)
        best = min(best, int(weights.min()))
    return best


def _randomized_distance(
    code: ThreeRingCode, iters: int, rounds: int, seed: int, threads: int
) -> DistanceResult:
    basis = code.basis
    results: dict[str, int] = {}
    for label, check_other, conjugates in (
        ("X", code.hz.dense, basis.lz),
        ("Z", code.hx.dense, basis.lx),
    ):
        kernel = nullspace(check_other)
        best = code.n + 1
        for rnd in range(rounds):
            seeds = np.random.SeedSequence([seed, rnd, ord(label)]).spawn(threads)
            shares = [iters // threads + (1 if i < iters % threads else 0) for i in range(threads)]
            with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
                found = list(
                    pool.map(
                        lambda args: _information_set_round(kernel, conjugates, *args),
                        [(s, ss) for s, ss in zip(shares, seeds) if s > 0],
                    )
                )
            best = min([best, *found])
            log.info("randomized %s distance round %d: <= %d", label, rnd + 1, best)
        results[label] = best
    d = min(results.values())
    return DistanceResult(d, True, results["X"], results["Z"])


def distance(
    code: ThreeRingCode,
    mode: str = "exact",
    iters: int = 10**5,
    rounds: int = 2,
    seed: int = 0,
    budget: int = 1 << 29,
    threads: typing.Optional[int] = None,
) -> DistanceResult:
    """Code distance, exact or as a randomized upper bound.

    :param mode: ``exact`` enumerates every coset of every nontrivial
        logical class; ``randomized`` harvests low weight codewords from
        random information sets.
    :param iters: Information sets per round in randomized mode.
    :param rounds: Independent rounds in randomized mode.
    :param budget: Maximum number of vectors visited in exact mode.

    :raises BudgetExceeded: if the exact enumeration is over budget.
    """
    if code.k == 0:
        raise WalkingCatError(f"{code!r} encodes no logical qubit")
    if mode == "exact":
        return _exact_distance(code, budget)
    if mode == "randomized":
        workers = threads or Settings.from_env().threads
        workers = max(1, min(workers, iters))
        return _randomized_distance(code, iters, rounds, seed, workers)
    raise ValueError(f"unknown distance mode {mode!r}")


# structure tests


def is_self_orthogonal(code: ThreeRingCode) -> typing.Optional[Monomial]:
    """A monomial ``g`` with ``g·A(x, y) = B(x⁻¹, y⁻¹)``, if one exists."""
    target = frozenset(code.b.transpose().terms)
    if len(code.a) != len(code.b):
        return None
    for idx in range(code.group_size):
        g = code.group_element(idx)
        if frozenset(code.a.shifted(g).terms) == target:
            return g
    return None


def biplanar_obstructed(code: ThreeRingCode) -> bool:
    """True when every check touches at least eight qubits."""
    degrees = np.concatenate([code.hx.row_weights(), code.hz.row_weights()])
    return bool(degrees.min() >= 8)


# database


@dataclasses.dataclass(frozen=True)
class CodeRecord:
    family: Family
    w: int
    ell: int
    m: int
    a_terms: str
    b_terms: str
    n: int
    k: int
    d: int
    d_exact: bool
    name: typing.Optional[str] = None

    def build(self) -> ThreeRingCode:
        return construct(
            self.family,
            self.ell,
            self.m,
            self.a_terms,
            self.b_terms,
            name=self.name,
            d=self.d,
            d_exact=self.d_exact,
        )

    def format(self) -> str:
        d = str(self.d) if self.d_exact else f"<={self.d}"
        return " ".join(
            [
                self.family.value,
                str(self.w),
                str(self.ell),
                str(self.m),
                self.a_terms,
                self.b_terms,
                str(self.n),
                str(self.k),
                d,
                self.name or "-",
            ]
        )


def parse_record(line: str) -> CodeRecord:
    fields = line.split()
    if len(fields) != 10:
        raise WalkingCatError(f"malformed code record: {line!r}")
    family, w, ell, m, a_terms, b_terms, n, k, d, name = fields
    exact = not d.startswith("<=")
    return CodeRecord(
        family=Family(family),
        w=int(w),
        ell=int(ell),
        m=int(m),
        a_terms=a_terms,
        b_terms=b_terms,
        n=int(n),
        k=int(k),
        d=int(d.removeprefix("<=")),
        d_exact=exact,
        name=None if name == "-" else name,
    )


@functools.lru_cache(maxsize=1)
def load_database() -> tuple[CodeRecord, ...]:
    text = importlib.resources.files("walkingcat").joinpath("codes.db").read_text("utf-8")
    records = tuple(
        parse_record(line)
        for line in text.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    )
    log.debug("loaded %d code records", len(records))
    return records


_PARAMS = re.compile(r"^\[*\s*(\d+)\s*,\s*(\d+)\s*(?:,\s*(\d+))?\s*\]*$")


def lookup(spec: str) -> CodeRecord:
    """Find a record by name (``Q70``) or parameters (``[[70,6,9]]``).

    :raises WalkingCatError: if nothing or more than one record matches
        a parameter query.
    """
    records = load_database()
    for rec in records:
        if rec.name and rec.name.lower() == spec.strip().lower():
            return rec
    match = _PARAMS.match(spec.strip())
    if match is None:
        raise WalkingCatError(f"unknown code {spec!r}")
    n, k = int(match.group(1)), int(match.group(2))
    d = int(match.group(3)) if match.group(3) else None
    hits = [r for r in records if r.n == n and r.k == k and (d is None or r.d == d)]
    if not hits:
        raise WalkingCatError(f"no code with parameters {spec!r} in the database")
    if len(hits) > 1:
        named = [r for r in hits if r.name]
        if len(named) == 1:
            return named[0]
        log.warning("%d codes match %s, using the first", len(hits), spec)
    return hits[0]


@functools.lru_cache(maxsize=32)
def get_code(name: str) -> ThreeRingCode:
    """Construct a named or parameter-addressed database code."""
    if name.upper() in ("C422", "[[4,2,2]]"):
        return four_two_two()
    if name.upper() == "BB18":
        return toy_bb18()
    return lookup(name).build()


def info(code: ThreeRingCode) -> dict[str, typing.Any]:
    witness = is_self_orthogonal(code)
    return {
        "name": code.name,
        "family": code.family.value,
        "l": code.ell,
        "m": code.m,
        "A": code.a.format(),
        "B": code.b.format(),
        "n": code.n,
        "k": code.k,
        "d": code.d,
        "d_exact": code.d_exact if code.d is not None else None,
        "w": code.check_weight,
        "self_orthogonal": witness is not None,
        "self_orthogonal_witness": None if witness is None else witness.format(),
        "biplanar_obstructed": biplanar_obstructed(code),
    }


def self_orthogonal_bicycle(ell: int, a: str) -> ThreeRingCode:
    """Bicycle code with ``b(x) = a(x⁻¹)``."""
    pa = MonomialPolynomial.parse(a, ell, 1)
    return construct(Family.GB, ell, 1, pa, pa.transpose())



SELF_ORTHOGONAL_EXAMPLES: dict[str, tuple[int, str]] = {
    "[[66,6,8]]": (33, "1,x,x3,x10"),
    "[[72,12,6]]": (36, "1,x,x4,x9"),
    "[[100,12,8]]": (50, "1,x,x5,x16"),
}
"""Weight-8 bicycle codes built from a single polynomial ``a(x)``."""


def logical_operators(code: ThreeRingCode) -> SymplecticBasis:
    """The CSS symplectic basis ``X̄_i, Z̄_i`` of ``code``."""
    return code.basis
