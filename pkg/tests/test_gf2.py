import numpy as np
import pytest

from genuscode import gf2


# Independent oracle: plain uint8 Gaussian elimination, no packing.
def dense_rref(A):
    A = (np.array(A, dtype=np.uint8) & 1).copy()
    nrows, ncols = A.shape
    pivots = []
    r = 0
    for c in range(ncols):
        if r >= nrows:
            break
        rows = np.nonzero(A[r:, c])[0]
        if rows.size == 0:
            continue
        p = r + rows[0]
        A[[r, p]] = A[[p, r]]
        for i in range(nrows):
            if i != r and A[i, c]:
                A[i] ^= A[r]
        pivots.append(c)
        r += 1
    return A, pivots


def random_dense(rng, nrows, ncols, density=0.4):
    return (rng.random((nrows, ncols)) < density).astype(np.uint8)


@pytest.mark.parametrize("seed", range(8))
def test_pack_roundtrip(seed):
    rng = np.random.default_rng(seed)
    nrows = rng.integers(1, 12)
    ncols = rng.integers(1, 200)
    A = random_dense(rng, nrows, ncols)
    assert np.array_equal(gf2.unpack(gf2.pack(A), ncols), A)


@pytest.mark.parametrize("seed", range(12))
def test_rank_matches_dense_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    nrows = int(rng.integers(1, 40))
    ncols = int(rng.integers(1, 150))
    A = random_dense(rng, nrows, ncols)
    _, piv = dense_rref(A)
    assert gf2.rank(gf2.pack(A), ncols) == len(piv)


@pytest.mark.parametrize("seed", range(12))
def test_rref_agrees_with_dense_oracle(seed):
    rng = np.random.default_rng(200 + seed)
    nrows = int(rng.integers(1, 30))
    ncols = int(rng.integers(1, 100))
    A = random_dense(rng, nrows, ncols)
    R, piv = gf2.row_reduce(gf2.pack(A), ncols)
    D, dpiv = dense_rref(A)
    assert piv == dpiv
    assert np.array_equal(gf2.unpack(R, ncols), D)


@pytest.mark.parametrize("seed", range(10))
def test_nullspace_annihilates_and_has_right_dimension(seed):
    rng = np.random.default_rng(300 + seed)
    nrows = int(rng.integers(1, 25))
    ncols = int(rng.integers(1, 80))
    A = random_dense(rng, nrows, ncols)
    M = gf2.pack(A)
    NS = gf2.nullspace(M, ncols)
    assert NS.shape[0] == ncols - gf2.rank(M, ncols)
    for v in NS:
        assert not gf2.parity_dot(M, v).any()
    # Basis vectors are independent.
    assert gf2.rank(NS, ncols) == NS.shape[0]


@pytest.mark.parametrize("seed", range(10))
def test_rowspace_membership(seed):
    rng = np.random.default_rng(400 + seed)
    nrows = int(rng.integers(2, 20))
    ncols = int(rng.integers(nrows, 60))
    A = random_dense(rng, nrows, ncols)
    M = gf2.pack(A)
    R, piv = gf2.row_reduce(M, ncols)
    # Random row combinations are in the span.
    for _ in range(5):
        coeffs = rng.integers(0, 2, nrows).astype(np.uint8)
        v = gf2.pack(coeffs @ A % 2)[0]
        assert gf2.in_rowspace(R, piv, v)
        used = gf2.coordinates_in_rowspace(R, piv, v)
        assert used is not None
        rebuilt = np.zeros_like(v)
        for i in used:
            rebuilt ^= R[i]
        assert np.array_equal(rebuilt, v)
    # A vector with support outside the span fails when rank < ncols.
    if len(piv) < ncols:
        free = [c for c in range(ncols) if c not in set(piv)]
        v = gf2.row_from_indices([free[0]], ncols)
        res = gf2.reduce_vector(R, piv, v)
        assert res.any() or gf2.in_rowspace(R, piv, v)


@pytest.mark.parametrize("seed", range(8))
def test_inverse(seed):
    rng = np.random.default_rng(500 + seed)
    n = int(rng.integers(1, 40))
    # Build a guaranteed-invertible matrix: random upper triangular with unit
    # diagonal times random lower triangular with unit diagonal.
    U = np.triu(random_dense(rng, n, n), 1)
    Lo = np.tril(random_dense(rng, n, n), -1)
    np.fill_diagonal(U, 1)
    np.fill_diagonal(Lo, 1)
    A = (Lo @ U) % 2
    M = gf2.pack(A)
    inv = gf2.inverse(M, n)
    assert inv is not None
    prod = (gf2.unpack(inv, n) @ A) % 2
    assert np.array_equal(prod, np.eye(n, dtype=np.uint8))


def test_inverse_singular_returns_none():
    A = np.array([[1, 1], [1, 1]], dtype=np.uint8)
    assert gf2.inverse(gf2.pack(A), 2) is None


def test_gram_matches_dense():
    rng = np.random.default_rng(7)
    A = random_dense(rng, 9, 70)
    B = random_dense(rng, 5, 70)
    G = gf2.gram(gf2.pack(A), gf2.pack(B))
    assert np.array_equal(G, (A @ B.T) % 2)


def test_row_from_indices_and_back():
    row = gf2.row_from_indices([3, 70, 3, 128], 200)
    assert gf2.indices_of(row, 200) == [3, 70, 128]
    assert gf2.weight(row)[0] == 3
