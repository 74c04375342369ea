"""Known banded sparsity pattern of the grid Koopman matrix.

A matrix entry (l, s) is admissible when the grid multi-indices of l and s
differ by at most the window radius in every dimension; states can only
move to neighboring grid cells within one sampling step. Entries are kept
sorted lexicographically by (row, col), which groups them by row and makes
scatter/gather and binary-search lookup deterministic.
"""

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass
class SparsityPattern:
    basis: object
    radius: np.ndarray  # per-dimension window radius
    rows: np.ndarray  # (z,) flat row indices, lexicographically sorted
    cols: np.ndarray  # (z,) flat col indices
    row_ptr: np.ndarray  # (N+1,) CSR-style offsets into rows/cols

    @property
    def size(self):
        """Number of admissible entries z."""
        return len(self.rows)

    @property
    def n(self):
        return self.basis.size

    def __len__(self):
        return self.size


@dataclass
class PatternVector:
    pattern: SparsityPattern
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.pattern.size,):
            raise ValueError(
                f"expected {self.pattern.size} values, got shape {vals.shape}"
            )
        self.values = vals


def _band_pairs(per_dim, radius):
    # All (a, b) with |a - b| <= radius, sorted by (a, b).
    width = np.minimum(per_dim - 1, np.arange(per_dim) + radius) - np.maximum(
        0, np.arange(per_dim) - radius
    ) + 1
    a = np.repeat(np.arange(per_dim), width)
    b = np.concatenate(
        [
            np.arange(max(0, i - radius), min(per_dim - 1, i + radius) + 1)
            for i in range(per_dim)
        ]
    )
    return a.astype(np.int64), b.astype(np.int64)


def neighbor_pattern(basis, radius):
    """Pattern of all (l, s) within the per-dimension neighbor window.

    ``radius`` is a scalar or one value per dimension; a window that spans
    the whole grid yields the full N x N pattern.
    """
    n = basis.state_dim
    nb = basis.per_dim
    radius = np.broadcast_to(np.asarray(radius, dtype=np.int64), (n,)).copy()
    if np.any(radius < 0):
        raise ValueError("radius must be nonnegative")
    rows = np.zeros(1, dtype=np.int64)
    cols = np.zeros(1, dtype=np.int64)
    for d in range(n):
        a, b = _band_pairs(nb, int(radius[d]))
        rows = (rows[:, None] * nb + a[None, :]).ravel()
        cols = (cols[:, None] * nb + b[None, :]).ravel()
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    counts = np.bincount(rows, minlength=basis.size)
    row_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return SparsityPattern(basis, radius, rows, cols, row_ptr)


def auto_radius(model, basis, dt, input_scale=1.0, probe_per_dim=15):
    """Per-dimension radius ceil(max |f_d + g_d u| * dt / h_d).

    The speed bound is taken over a coarse probe grid of the domain and the
    zero/one-hot inputs; the radius is floored at 1.
    """
    from .dynamics import eval_rhs

    axes = [
        np.linspace(basis.domain[d, 0], basis.domain[d, 1], probe_per_dim)
        for d in range(basis.state_dim)
    ]
    pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    speed = np.zeros(basis.state_dim)
    inputs = [np.zeros(model.input_dim)]
    for k in range(model.input_dim):
        e = np.zeros(model.input_dim)
        e[k] = input_scale
        inputs.append(e)
    for x in pts:
        for u in inputs:
            speed = np.maximum(speed, np.abs(eval_rhs(model, x, u)))
    rad = np.ceil(speed * dt / basis.spacing).astype(np.int64)
    return np.maximum(rad, 1)


def scatter(v):
    """Sparse N x N matrix with v placed at the pattern positions."""
    pat = v.pattern
    return sp.csr_matrix(
        (v.values, (pat.rows, pat.cols)), shape=(pat.n, pat.n)
    )


def gather(pattern, matrix):
    """Adjoint of scatter: extract the pattern positions into a vector."""
    if sp.issparse(matrix):
        from . import kernels

        vals = kernels.csr_gather(matrix.tocsr(), pattern.rows, pattern.cols)
    else:
        matrix = np.asarray(matrix)
        vals = matrix[pattern.rows, pattern.cols].astype(np.float64)
    return PatternVector(pattern, vals)


def locate(pattern, i):
    """(row, col) of the i-th entry in sorted order."""
    if not 0 <= i < pattern.size:
        raise ValueError(f"entry index {i} out of range [0, {pattern.size})")
    return int(pattern.rows[i]), int(pattern.cols[i])


def position_of(pattern, row, col):
    """Index of entry (row, col) via binary search, or -1 when absent."""
    lo, hi = pattern.row_ptr[row], pattern.row_ptr[row + 1]
    j = lo + np.searchsorted(pattern.cols[lo:hi], col)
    if j < hi and pattern.cols[j] == col:
        return int(j)
    return -1


def pattern_to_csv(pattern, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col"])
        for r, c in zip(pattern.rows, pattern.cols):
            writer.writerow([int(r), int(c)])


def system_indices(pattern):
    """Index arrays for assembling the reduced normal matrix S.

    S[j, i] = G[cols[i], cols[j]] when entries i and j share a row, so all
    intra-row entry pairs are enumerated. Returns (s_rows, s_cols, g_rows,
    g_cols) where S has value G[g_rows, g_cols] at (s_rows, s_cols).
    """
    counts = np.diff(pattern.row_ptr)
    total = int(np.sum(counts * counts))
    # entry index repeated once per member of its row block
    reps = np.repeat(counts, counts)
    s_cols = np.repeat(np.arange(pattern.size, dtype=np.int64), reps)
    # grouped arange covering each row block once per block member
    starts = np.repeat(pattern.row_ptr[:-1], counts * counts)
    offset = np.arange(total, dtype=np.int64) - np.repeat(
        np.cumsum(np.concatenate([[0], reps[:-1]])), reps
    )
    s_rows = starts + offset
    g_rows = pattern.cols[s_cols]
    g_cols = pattern.cols[s_rows]
    return s_rows, s_cols, g_rows, g_cols
