"""Backend selection for the hot numerical kernels.

The compiled Cython extension is preferred when importable; the pure NumPy
twin in ``_pykernels`` is the fallback. Set ``KOOPSPARSE_PURE=1`` to force
the fallback (used by the benchmark and the parity tests).
"""

import os

import numpy as np

from . import _pykernels

_FORCE_PURE = os.environ.get("KOOPSPARSE_PURE", "") not in ("", "0")

if not _FORCE_PURE:
    try:
        from . import _kernels as _impl

        COMPILED = True
    except ImportError:
        _impl = _pykernels
        COMPILED = False
else:
    _impl = _pykernels
    COMPILED = False


def backend_name():
    return "compiled" if COMPILED else "pure"


def _prep(points, lo, spacing):
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    return (
        pts,
        np.ascontiguousarray(lo, dtype=np.float64),
        np.ascontiguousarray(spacing, dtype=np.float64),
    )


def lift_dense(points, lo, spacing, per_dim, sigma, backend=None):
    pts, lo, spacing = _prep(points, lo, spacing)
    impl = _select(backend)
    return impl.lift_dense(pts, lo, spacing, int(per_dim), float(sigma))


def lift_sparse(points, lo, spacing, per_dim, sigma, keep, backend=None):
    pts, lo, spacing = _prep(points, lo, spacing)
    impl = _select(backend)
    return impl.lift_sparse(pts, lo, spacing, int(per_dim), float(sigma), int(keep))


def csr_gather(mat, rows, cols):
    """mat[rows[i], cols[i]] for a scipy CSR matrix, structural zeros -> 0."""
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    return _impl.csr_gather(
        np.ascontiguousarray(mat.indptr, dtype=np.int64),
        np.ascontiguousarray(mat.indices, dtype=np.int64),
        np.ascontiguousarray(mat.data, dtype=np.float64),
        rows,
        cols,
        mat.shape[1],
    )


def _select(backend):
    if backend is None:
        return _impl
    if backend == "pure":
        return _pykernels
    if backend == "compiled":
        if not COMPILED:
            raise RuntimeError("compiled kernels are not available")
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {backend!r}")
