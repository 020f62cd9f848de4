import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from koszulcoh import exactlin
from koszulcoh.errors import ConfigurationError
from koszulcoh.exactlin import FieldSpec, SparseMatrix

from oracles import rank_mod_p, rank_q


def int_matrices(max_side=6, lo=-3, hi=3):
    return st.integers(1, max_side).flatmap(
        lambda r: st.integers(1, max_side).flatmap(
            lambda c: st.lists(
                st.lists(st.integers(lo, hi), min_size=c, max_size=c), min_size=r, max_size=r
            )
        )
    )


def sparse_like(max_side=8):
    """Mostly-zero matrices, so that several connected components show up."""
    return st.integers(1, max_side).flatmap(
        lambda r: st.integers(1, max_side).flatmap(
            lambda c: st.lists(
                st.lists(
                    st.one_of(st.just(0), st.just(0), st.just(0), st.integers(-5, 5)),
                    min_size=c,
                    max_size=c,
                ),
                min_size=r,
                max_size=r,
            )
        )
    )


PRIMES = [2, 3, 7, 32003, 65537]


@given(sparse_like(), st.sampled_from(PRIMES))
def test_rank_matches_reference_elimination(rows, p):
    m = SparseMatrix.from_dense(rows)
    assert exactlin.rank(m, FieldSpec.prime(p)) == rank_mod_p(rows, p)


@given(int_matrices(), st.sampled_from(PRIMES))
def test_rank_bounds_and_rank_nullity(rows, p):
    m = SparseMatrix.from_dense(rows)
    f = FieldSpec.prime(p)
    r = exactlin.rank(m, f)
    assert 0 <= r <= min(m.shape)
    assert r + exactlin.kernel_dim(m, f) == m.n_cols
    assert exactlin.rank(m.transpose(), f) == r


@given(int_matrices(), st.sampled_from(PRIMES))
def test_rational_rank_dominates_prime_rank(rows, p):
    m = SparseMatrix.from_dense(rows)
    rq = exactlin.rank(m, FieldSpec.rationals())
    assert rq == rank_q(rows)
    assert rq >= exactlin.rank(m, FieldSpec.prime(p))


@given(int_matrices(max_side=6, lo=-3, hi=3))
def test_certified_rank_is_rational_rank(rows):
    # every minor is far below 32003 * 65537, so the two primes cannot both miss one
    m = SparseMatrix.from_dense(rows)
    assert exactlin.rank_certified(m) == rank_q(rows)


def test_certification_escalates_on_disagreement():
    m = SparseMatrix.from_dense([[32003, 0], [0, 1]])
    rep = exactlin.rank_certified_report(m)
    assert rep.prime_ranks == (1, 2)
    assert rep.escalated
    assert rep.rank == 2


def test_certification_needs_two_primes():
    with pytest.raises(ConfigurationError):
        exactlin.rank_certified_report(SparseMatrix.identity(2), (7, 7))


@given(sparse_like())
def test_blocks_partition_the_entries(rows):
    m = SparseMatrix.from_dense(rows)
    seen = []
    for block, rid, cid in exactlin.blocks(m):
        r, c = np.nonzero(block)
        seen += [(int(rid[i]), int(cid[j]), int(block[i, j])) for i, j in zip(r, c)]
    assert sorted(seen) == sorted(m.entries())
    firsts = [int(rid[0]) for _, rid, _ in exactlin.blocks(m)]
    assert firsts == sorted(firsts)


@given(int_matrices(max_side=7), st.sampled_from([3, 32003]))
def test_kernel_basis_is_a_kernel_basis(rows, p):
    a = np.array(rows, dtype=np.int64)
    k = exactlin.kernel_basis_mod_p(a, p)
    assert k.shape[0] == a.shape[1] - rank_mod_p(rows, p)
    if k.shape[0]:
        assert not np.any((a @ k.T) % p)
        assert exactlin.dense_rank_mod_p(k, p) == k.shape[0]


@given(int_matrices(max_side=6), st.sampled_from([5, 32003]))
def test_rref_is_reduced(rows, p):
    r, piv = exactlin.rref_mod_p(np.array(rows, dtype=np.int64), p)
    assert len(piv) == rank_mod_p(rows, p)
    for i, c in enumerate(piv):
        col = r[:, c] % p
        assert col[i] == 1 and np.count_nonzero(col) == 1


def test_dense_round_trip_and_equality():
    rows = [[0, 2, 0], [1, 0, -1]]
    m = SparseMatrix.from_dense(rows)
    assert m.to_dense().tolist() == rows
    assert m == SparseMatrix.from_entries(2, 3, [(1, 2, -1), (0, 1, 2), (1, 0, 1)])
    assert m.transpose().transpose() == m
    assert m.nnz == 3


def test_identity_and_zero():
    assert exactlin.rank(SparseMatrix.identity(5)) == 5
    assert exactlin.rank(SparseMatrix.zero(4, 3)) == 0
    assert exactlin.kernel_dim(SparseMatrix.zero(4, 3)) == 3


@pytest.mark.parametrize(
    "rows, cols, vals",
    [
        ([0, 0], [0, 0], [1, 2]),  # duplicate
        ([0], [0], [0]),  # stored zero
        ([5], [0], [1]),  # out of range
        ([0], [0, 1], [1]),  # ragged
    ],
)
def test_malformed_sparse_input_is_rejected(rows, cols, vals):
    with pytest.raises(ConfigurationError):
        SparseMatrix(2, 2, np.array(rows), np.array(cols), np.array(vals))


def test_from_entries_drops_zeros():
    assert SparseMatrix.from_entries(2, 2, [(0, 0, 0), (1, 1, 3)]).nnz == 1


@pytest.mark.parametrize("modulus", [1, 4, 32001 * 3, 2**31 + 11])
def test_field_must_be_a_small_prime(modulus):
    with pytest.raises(ConfigurationError):
        FieldSpec.prime(modulus)


def test_field_names():
    assert str(FieldSpec.prime(7)) == "GF(7)"
    assert str(FieldSpec.rationals()) == "QQ"


def test_bareiss_on_singular_matrix():
    assert exactlin.bareiss_rank([[1, 2, 3], [2, 4, 6], [1, 0, 1]]) == 2
    assert exactlin.bareiss_rank([]) == 0
