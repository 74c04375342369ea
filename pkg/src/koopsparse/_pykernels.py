"""Pure NumPy implementations of the hot kernels.

Mirrors the compiled extension ``koopsparse._kernels``; the two must stay
semantically identical (same cutoff, same summation/multiplication order)
so that either backend produces the same numbers.
"""

import numpy as np

# Per-dimension RBF exponent floor. Arguments below this underflow to an
# exact 0.0 instead of crawling through subnormals, which is catastrophically
# slow on x86. exp(-170) ~ 6.6e-74, far below any tolerance used anywhere.
EXP_ARG_MIN = -170.0

COMPILED = False


def _axis_factor(delta, sigma):
    a = -(delta * delta) / (2.0 * sigma * sigma)
    return np.where(a <= EXP_ARG_MIN, 0.0, np.exp(np.maximum(a, EXP_ARG_MIN)))


def lift_dense(points, lo, spacing, per_dim, sigma):
    """Evaluate all grid RBFs at each point.

    points: (M, n) states; lo/spacing: per-dim grid origin and step.
    Returns (M, per_dim**n) with columns in row-major (C) grid order.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    M, n = pts.shape
    out = None
    for d in range(n):
        centers = lo[d] + spacing[d] * np.arange(per_dim)
        E = _axis_factor(pts[:, d : d + 1] - centers[None, :], sigma)
        if out is None:
            out = E
        else:
            out = (out[:, :, None] * E[:, None, :]).reshape(M, -1)
    return out


def _window_offsets(w, n):
    # C-order offset tuples in [-w, w]^n; for a fixed anchor this enumerates
    # candidate centers in increasing flat-index order.
    axes = [np.arange(-w, w + 1)] * n
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def lift_sparse(points, lo, spacing, per_dim, sigma, keep):
    """Evaluate the ``keep`` nearest grid RBFs at each point.

    Nearest by Euclidean distance, ties broken by lower flat index. Returns
    (idx, val) of shape (M, keep) with idx sorted ascending per row.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    M, n = pts.shape
    N = per_dim**n
    keep = int(keep)
    if keep >= N:
        dense = lift_dense(pts, lo, spacing, per_dim, sigma)
        idx = np.broadcast_to(np.arange(N, dtype=np.int64), (M, N)).copy()
        return idx, dense

    strides = np.array([per_dim ** (n - 1 - d) for d in range(n)], dtype=np.int64)
    anchor = np.rint((pts - lo) / spacing).astype(np.int64)
    np.clip(anchor, 0, per_dim - 1, out=anchor)

    idx_out = np.empty((M, keep), dtype=np.int64)
    val_out = np.empty((M, keep), dtype=np.float64)
    pending = np.arange(M)
    w = max(1, int(np.ceil((keep ** (1.0 / n) - 1.0) / 2.0)) + 1)
    hmin = float(np.min(spacing))
    while pending.size:
        sub_pts = pts[pending]
        offs = _window_offsets(w, n)
        cand = anchor[pending][:, None, :] + offs[None, :, :]
        valid = np.all((cand >= 0) & (cand < per_dim), axis=2)
        cand_safe = np.clip(cand, 0, per_dim - 1)
        d2 = np.zeros((len(pending), offs.shape[0]))
        for d in range(n):
            delta = sub_pts[:, d : d + 1] - (lo[d] + spacing[d] * cand_safe[:, :, d])
            d2 += delta * delta
        d2[~valid] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")[:, :keep]
        rowsel = np.arange(len(pending))[:, None]
        d2_k = d2[rowsel, order]
        covers_all = w >= per_dim - 1
        bound = ((w + 0.5) * hmin) ** 2
        ok = covers_all | (d2_k[:, -1] < bound)
        if np.any(ok):
            done = pending[ok]
            cidx = cand_safe[rowsel[ok.nonzero()[0]], order[ok]]
            flat = cidx @ strides
            vals = np.ones(flat.shape)
            for d in range(n):
                delta = sub_pts[ok][:, d : d + 1] - (
                    lo[d] + spacing[d] * cidx[:, :, d]
                )
                vals *= _axis_factor(delta, sigma)
            srt = np.argsort(flat, axis=1, kind="stable")
            rsel = np.arange(len(done))[:, None]
            idx_out[done] = flat[rsel, srt]
            val_out[done] = vals[rsel, srt]
        pending = pending[~ok]
        w += 1
    return idx_out, val_out


def csr_gather(indptr, indices, data, rows, cols, n_cols):
    """Values of a CSR matrix at (rows[i], cols[i]); structural zeros give 0."""
    indptr = np.asarray(indptr)
    nnz_rows = np.repeat(
        np.arange(len(indptr) - 1, dtype=np.int64), np.diff(indptr)
    )
    key = nnz_rows * np.int64(n_cols) + indices
    query = np.asarray(rows, dtype=np.int64) * np.int64(n_cols) + np.asarray(
        cols, dtype=np.int64
    )
    pos = np.searchsorted(key, query)
    out = np.zeros(len(query))
    inside = pos < len(key)
    hit = np.zeros(len(query), dtype=bool)
    hit[inside] = key[pos[inside]] == query[inside]
    out[hit] = data[pos[hit]]
    return out
