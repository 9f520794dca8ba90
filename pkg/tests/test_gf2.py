import numpy as np
import pytest

from walkingcat import CodeConstructionError, PolynomialSyntaxError
from walkingcat.gf2 import (
    BitMatrix,
    Monomial,
    MonomialPolynomial,
    PauliOperator,
    inverse,
    matmul,
    nullspace,
    parse_monomial,
    rank,
    rank_dense,
    row_reduce,
    solve,
    symplectic_basis,
    symplectic_form,
    symplectic_product,
)


def random_bits(rows: int, cols: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, size=(rows, cols), dtype=np.uint8)


class TestDense:
    def test_row_reduce(self) -> None:
        rref, pivots = row_reduce([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
        assert pivots == [0, 1]
        assert rref.tolist() == [[1, 0, 1], [0, 1, 1]]

    def test_nullspace_dimension_and_kernel(self) -> None:
        m = random_bits(7, 12, seed=1)
        basis = nullspace(m)
        assert basis.shape[0] == 12 - rank_dense(m)
        assert not matmul(m, basis.T).any()
        assert rank_dense(basis) == basis.shape[0]

    def test_inverse(self) -> None:
        seed = 0
        while True:
            m = random_bits(9, 9, seed)
            if rank_dense(m) == 9:
                break
            seed += 1
        inv = inverse(m)
        assert np.array_equal(matmul(m, inv), np.eye(9, dtype=np.uint8))

    def test_inverse_singular(self) -> None:
        with pytest.raises(ValueError, match="singular"):
            inverse([[1, 1], [1, 1]])

    def test_solve(self) -> None:
        m = random_bits(6, 10, seed=3)
        x = random_bits(1, 10, seed=4)[0]
        rhs = matmul(m, x)
        found = solve(m, rhs)
        assert found is not None
        assert np.array_equal(matmul(m, found), rhs)

    def test_solve_inconsistent(self) -> None:
        assert solve([[1, 1], [1, 1]], [1, 0]) is None


class TestBitMatrix:
    def test_dense_round_trip_across_words(self) -> None:
        dense = random_bits(5, 130, seed=2)
        bm = BitMatrix.from_dense(dense)
        assert bm.shape == (5, 130)
        assert bm.words.shape == (5, 3)
        assert np.array_equal(bm.to_dense(), dense)

    def test_rank_matches_dense_elimination(self) -> None:
        for seed in range(5):
            dense = random_bits(20, 70, seed)
            dense[5] = dense[1] ^ dense[2]
            assert rank(dense) == rank_dense(dense)

    def test_product_transpose_hstack(self) -> None:
        a = random_bits(4, 6, seed=5)
        b = random_bits(6, 3, seed=6)
        ba, bb = BitMatrix.from_dense(a), BitMatrix.from_dense(b)
        assert np.array_equal((ba @ bb).dense, matmul(a, b))
        assert np.array_equal(ba.T.dense, a.T)
        assert ba.hstack(ba).shape == (4, 12)

    def test_weights(self) -> None:
        bm = BitMatrix.from_dense([[1, 1, 0], [0, 0, 1]])
        assert bm.row_weights().tolist() == [2, 1]
        assert bm.col_weights().tolist() == [1, 1, 1]

    def test_equality_and_hash(self) -> None:
        a = BitMatrix.from_dense([[1, 0], [0, 1]])
        assert a == BitMatrix.identity(2)
        assert hash(a) == hash(BitMatrix.identity(2))
        assert a != BitMatrix.zeros(2, 2)
        assert BitMatrix.zeros(2, 2).is_zero()

    def test_shape_mismatch(self) -> None:
        with pytest.raises(ValueError):
            BitMatrix.identity(2) @ BitMatrix.identity(3)


class TestMonomials:
    def test_parse_variants(self) -> None:
        assert parse_monomial("1", 6, 6) == Monomial(0, 0)
        assert parse_monomial("x2y4", 6, 6) == Monomial(2, 4)
        assert parse_monomial("x^2y^4", 6, 6) == Monomial(2, 4)
        assert parse_monomial("y", 6, 6) == Monomial(0, 1)
        assert parse_monomial("x9", 7, 1) == Monomial(2, 0)

    def test_bad_term_is_named(self) -> None:
        with pytest.raises(PolynomialSyntaxError) as info:
            MonomialPolynomial.parse("1,x2q,y", 6, 6)
        assert info.value.term == "x2q"
        assert "x2q" in str(info.value)

    def test_y_in_a_one_ring(self) -> None:
        with pytest.raises(PolynomialSyntaxError):
            parse_monomial("y", 7, 1)

    def test_repeated_term(self) -> None:
        with pytest.raises(PolynomialSyntaxError):
            MonomialPolynomial.parse("x,x8", 7)
        with pytest.raises(CodeConstructionError):
            MonomialPolynomial(7, 1, [Monomial(1), Monomial(8)])

    def test_plus_and_comma(self) -> None:
        assert MonomialPolynomial.parse("1+x+x3", 7) == MonomialPolynomial.parse("1,x,x3", 7)

    def test_format_keeps_term_order(self) -> None:
        p = MonomialPolynomial.parse("y2,x2,x3,x4", 7, 5)
        assert p.format() == "y2,x2,x3,x4"
        assert p[0] == Monomial(0, 2)

    def test_product_in_characteristic_two(self) -> None:
        p = MonomialPolynomial.parse("1,x", 5)
        assert p * p == MonomialPolynomial.parse("1,x2", 5)

    def test_transpose_inverts_exponents(self) -> None:
        p = MonomialPolynomial.parse("x,x2y", 5, 3)
        assert p.transpose() == MonomialPolynomial.parse("x4,x3y2", 5, 3)

    def test_expand_shift_convention(self) -> None:
        x = MonomialPolynomial.parse("x", 3).expand().dense
        assert x[0].tolist() == [0, 1, 0]

    def test_expand_is_a_homomorphism(self) -> None:
        a = MonomialPolynomial.parse("1,y,x3y2", 6, 4)
        b = MonomialPolynomial.parse("x,x2,y3", 6, 4)
        assert (a * b).expand() == a.expand() @ b.expand()
        assert a.transpose().expand() == a.expand().transpose()


class TestPauli:
    def test_from_string(self) -> None:
        p = PauliOperator.from_string("XIZY")
        assert p.weight == 3
        assert p.support().tolist() == [0, 2, 3]
        assert str(p) == "+XIZY"
        assert str(PauliOperator.from_string("-ZZ")) == "-ZZ"

    def test_invalid_string(self) -> None:
        with pytest.raises(ValueError):
            PauliOperator.from_string("XQ")

    def test_products_track_phase(self) -> None:
        x = PauliOperator.from_string("X")
        z = PauliOperator.from_string("Z")
        y = PauliOperator.from_string("Y")
        assert (y * y).is_identity() and (y * y).phase == 0
        assert (z * x).phase == (y.phase + 1) % 4
        assert (x * z).phase == (y.phase + 3) % 4

    def test_commutation(self) -> None:
        assert not PauliOperator.from_string("XI").commutes(PauliOperator.from_string("ZI"))
        assert PauliOperator.from_string("XX").commutes(PauliOperator.from_string("ZZ"))

    def test_symplectic_product(self) -> None:
        assert symplectic_product([1, 0, 0, 0], [0, 0, 1, 0]) == 1
        assert symplectic_form(2).tolist() == [
            [0, 0, 1, 0],
            [0, 0, 0, 1],
            [1, 0, 0, 0],
            [0, 1, 0, 0],
        ]


class TestSymplecticBasis:
    hx = np.array([[1, 1, 1, 1]], dtype=np.uint8)
    hz = np.array([[1, 1, 1, 1]], dtype=np.uint8)

    def test_css_basis(self) -> None:
        basis = symplectic_basis(self.hx, self.hz)
        assert basis.k == 2
        assert basis.is_css()
        assert basis.is_valid()

    def test_general_basis(self) -> None:
        basis = symplectic_basis(self.hx, self.hz, css=False)
        assert basis.k == 2
        assert basis.is_valid()

    def test_non_commuting_checks(self) -> None:
        with pytest.raises(CodeConstructionError):
            symplectic_basis([[1, 0, 0, 0]], [[1, 1, 0, 0]])
