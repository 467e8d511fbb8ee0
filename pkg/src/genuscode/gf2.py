"""Dense GF(2) linear algebra on bit-packed rows.

A matrix is a 2-d uint64 array: one row per matrix row, 64 columns per
word, column j living in word j >> 6 at bit j & 63.  Everything is plain
Gaussian elimination with whole-row XOR sweeps; the matrices this package
meets stay small enough (a few thousand columns) that packed numpy is
plenty fast and nothing sparse is needed.
"""

from __future__ import annotations

import numpy as np

_ONE = np.uint64(1)


def nwords(ncols: int) -> int:
    return max(1, (ncols + 63) >> 6)


def zeros(nrows: int, ncols: int) -> np.ndarray:
    return np.zeros((nrows, nwords(ncols)), dtype=np.uint64)


def pack(dense) -> np.ndarray:
    """Pack a dense 0/1 array (any int dtype) into rows of uint64 words."""
    dense = np.asarray(dense, dtype=np.uint8) & 1
    if dense.ndim == 1:
        dense = dense[None, :]
    nrows, ncols = dense.shape
    out = zeros(nrows, ncols)
    rows, cols = np.nonzero(dense)
    np.bitwise_or.at(out, (rows, cols >> 6), _ONE << (cols & 63).astype(np.uint64))
    return out


def unpack(packed: np.ndarray, ncols: int) -> np.ndarray:
    packed = np.atleast_2d(packed)
    j = np.arange(ncols)
    return ((packed[:, j >> 6] >> (j & 63).astype(np.uint64)) & _ONE).astype(np.uint8)


def set_bit(row: np.ndarray, j: int) -> None:
    row[j >> 6] |= _ONE << np.uint64(j & 63)


def get_bit(row: np.ndarray, j: int) -> int:
    return int((row[j >> 6] >> np.uint64(j & 63)) & _ONE)


def row_from_indices(indices, ncols: int) -> np.ndarray:
    row = np.zeros(nwords(ncols), dtype=np.uint64)
    idx = np.asarray(sorted(set(int(i) for i in indices)), dtype=np.int64)
    if idx.size:
        np.bitwise_or.at(row, idx >> 6, _ONE << (idx & 63).astype(np.uint64))
    return row


def indices_of(row: np.ndarray, ncols: int) -> list[int]:
    dense = unpack(row, ncols)[0]
    return [int(j) for j in np.nonzero(dense)[0]]


def weight(rows: np.ndarray) -> np.ndarray:
    """Per-row popcount."""
    return np.bitwise_count(np.atleast_2d(rows)).sum(axis=1)


def parity_dot(rows: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Parity of <row_i, v> for every row; v is one packed row."""
    return (np.bitwise_count(np.atleast_2d(rows) & v).sum(axis=1) & 1).astype(np.uint8)


def gram(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix of pairwise parities <A_i, B_j>, shape (len(A), len(B))."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.uint8)
    for i in range(A.shape[0]):
        out[i] = (np.bitwise_count(B & A[i]).sum(axis=1) & 1).astype(np.uint8)
    return out


def row_reduce(M: np.ndarray, ncols: int):
    """Reduced row echelon form.

    Returns (R, pivots) where R is a new array in RREF and pivots lists the
    pivot column of each leading row, in order.  Rows below len(pivots) are
    zero.
    """
    R = np.atleast_2d(M).copy()
    nrows = R.shape[0]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r >= nrows:
            break
        w = c >> 6
        mask = _ONE << np.uint64(c & 63)
        below = np.nonzero((R[r:, w] & mask) != 0)[0]
        if below.size == 0:
            continue
        p = r + int(below[0])
        if p != r:
            R[[r, p]] = R[[p, r]]
        hit = np.nonzero((R[:, w] & mask) != 0)[0]
        hit = hit[hit != r]
        if hit.size:
            R[hit] ^= R[r]
        pivots.append(c)
        r += 1
    return R, pivots


def rank(M: np.ndarray, ncols: int) -> int:
    return len(row_reduce(M, ncols)[1])


def reduce_vector(R: np.ndarray, pivots, v: np.ndarray) -> np.ndarray:
    """Residual of v after elimination against RREF rows R."""
    res = v.copy()
    for i, c in enumerate(pivots):
        if get_bit(res, c):
            res ^= R[i]
    return res


def in_rowspace(R: np.ndarray, pivots, v: np.ndarray) -> bool:
    return not reduce_vector(R, pivots, v).any()


def coordinates_in_rowspace(R: np.ndarray, pivots, v: np.ndarray):
    """Express v as an XOR of RREF rows; None if v is outside the span.

    Returns the list of row indices used.  Only valid for R in RREF (each
    pivot column has a single 1, so the coefficient of row i is just bit
    pivots[i] of v).
    """
    res = v.copy()
    used = []
    for i, c in enumerate(pivots):
        if get_bit(res, c):
            res ^= R[i]
            used.append(i)
    if res.any():
        return None
    return used


def nullspace(M: np.ndarray, ncols: int) -> np.ndarray:
    """Basis of {x : M x = 0}, one packed row per basis vector."""
    R, pivots = row_reduce(M, ncols)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = zeros(len(free), ncols)
    for bi, fc in enumerate(free):
        set_bit(basis[bi], fc)
        # Back-substitute: pivot row i forces x[pivots[i]] = sum of its
        # free-column bits.
        for i, pc in enumerate(pivots):
            if get_bit(R[i], fc):
                set_bit(basis[bi], pc)
    return basis


def inverse(M: np.ndarray, n: int):
    """Inverse of an n x n matrix, or None if singular."""
    M = np.atleast_2d(M)
    aug = zeros(n, 2 * n)
    w = nwords(n)
    aug[:, :w] = M[:, :w]
    for i in range(n):
        set_bit(aug[i], n + i)
    R, pivots = row_reduce(aug, 2 * n)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        return None
    inv = zeros(n, n)
    for i in range(n):
        for j in range(n):
            if get_bit(R[i], n + j):
                set_bit(inv[i], j)
    return inv
