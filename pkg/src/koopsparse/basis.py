"""Uniform Gaussian-RBF grid basis and data lifting.

The basis is a tensor grid of isotropic Gaussians over an axis-aligned box.
Flat indices follow row-major (C) order of the grid multi-indices. Lifted
datasets accumulate the Gram products needed by both the dense pseudo-inverse
solve and the reduced sparse system; no 1/M scaling is applied since it
cancels in both.
"""

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import kernels


@dataclass(frozen=True)
class GridBasis:
    domain: np.ndarray  # (n, 2)
    per_dim: int
    sigma: float

    def __post_init__(self):
        dom = np.asarray(self.domain, dtype=np.float64)
        dom = dom.reshape(-1, 2)
        object.__setattr__(self, "domain", dom)
        if self.per_dim < 2:
            raise ValueError("per_dim must be at least 2")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def state_dim(self):
        return self.domain.shape[0]

    @property
    def size(self):
        return self.per_dim**self.state_dim

    @property
    def spacing(self):
        return (self.domain[:, 1] - self.domain[:, 0]) / (self.per_dim - 1)

    @property
    def shape(self):
        return (self.per_dim,) * self.state_dim

    def axes(self):
        return [
            np.linspace(self.domain[d, 0], self.domain[d, 1], self.per_dim)
            for d in range(self.state_dim)
        ]

    def centers(self):
        """(N, n) grid centers in flat order."""
        grids = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def flat_index(self, multi):
        return int(np.ravel_multi_index(tuple(np.asarray(multi).T), self.shape))

    def multi_index(self, flat):
        return np.array(np.unravel_index(flat, self.shape))


def make_grid(domain, per_dim, sigma_factor=1.0):
    """Uniform grid basis with sigma = sigma_factor * max spacing."""
    domain = np.asarray(domain, dtype=np.float64).reshape(-1, 2)
    if per_dim < 2:
        raise ValueError("per_dim must be at least 2")
    spacing = (domain[:, 1] - domain[:, 0]) / (per_dim - 1)
    return GridBasis(domain, int(per_dim), float(sigma_factor * spacing.max()))


def lift(basis, x):
    """Dense lift Psi(x): component j is the Gaussian at center j."""
    x = np.asarray(x, dtype=np.float64)
    out = kernels.lift_dense(
        x.reshape(1, -1), basis.domain[:, 0], basis.spacing, basis.per_dim, basis.sigma
    )
    return out[0]


def lift_sparse(basis, x, keep):
    """Top-``keep`` lift: the nearest centers keep their value, rest are 0.

    Returns (indices, values) with indices sorted ascending; ties in the
    nearest-center selection go to the lower flat index.
    """
    if not 1 <= keep <= basis.size:
        raise ValueError("keep must be in [1, N]")
    x = np.asarray(x, dtype=np.float64)
    idx, val = kernels.lift_sparse(
        x.reshape(1, -1),
        basis.domain[:, 0],
        basis.spacing,
        basis.per_dim,
        basis.sigma,
        keep,
    )
    return idx[0], val[0]


def lift_points(basis, points, keep=None):
    """Lift many points. Dense (N, M) array, or CSC (N, M) when keep is set."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    M = points.shape[0]
    if keep is None:
        out = kernels.lift_dense(
            points, basis.domain[:, 0], basis.spacing, basis.per_dim, basis.sigma
        )
        return np.ascontiguousarray(out.T)
    if not 1 <= keep <= basis.size:
        raise ValueError("keep must be in [1, N]")
    idx, val = kernels.lift_sparse(
        points, basis.domain[:, 0], basis.spacing, basis.per_dim, basis.sigma, keep
    )
    indptr = np.arange(0, (M + 1) * keep, keep)
    return sp.csc_matrix(
        (val.ravel(), idx.ravel(), indptr), shape=(basis.size, M)
    )


@dataclass
class LiftedData:
    """Lifted snapshot pairs and their accumulated products.

    gram_xx = Psi_x Psi_x^T and cross_yx = Psi_y Psi_x^T (no 1/M). psi_x and
    psi_y are (N, M), dense ndarray or CSC depending on ``keep``.
    """

    basis: GridBasis
    gram_xx: object
    cross_yx: object
    psi_x: object
    psi_y: object
    keep: int | None
    sample_count: int

    @property
    def is_sparse(self):
        return self.keep is not None


def lift_dataset(basis, data, keep=None):
    """Lift a snapshot set and accumulate gram_xx / cross_yx."""
    if data.sample_count == 0:
        raise ValueError("snapshot set is empty")
    psi_x = lift_points(basis, data.x_points, keep)
    psi_y = lift_points(basis, data.y_points, keep)
    if keep is None:
        gram = psi_x @ psi_x.T
        cross = psi_y @ psi_x.T
    else:
        gram = (psi_x @ psi_x.T).tocsr()
        cross = (psi_y @ psi_x.T).tocsr()
    return LiftedData(
        basis, gram, cross, psi_x, psi_y, keep, data.sample_count
    )


def lift_label_family(basis, snapshot_sets, keep=None):
    """Lift sets sharing the same x draw, reusing Psi_x and gram_xx.

    Returns a list of LiftedData, one per set, in the given order.
    """
    sets = list(snapshot_sets)
    psi_x = lift_points(basis, sets[0].x_points, keep)
    if keep is None:
        gram = psi_x @ psi_x.T
    else:
        gram = (psi_x @ psi_x.T).tocsr()
    out = []
    for snap in sets:
        psi_y = lift_points(basis, snap.y_points, keep)
        cross = psi_y @ psi_x.T
        if keep is not None:
            cross = cross.tocsr()
        out.append(
            LiftedData(basis, gram, cross, psi_x, psi_y, keep, snap.sample_count)
        )
    return out


def save_matrix_market(matrix, path):
    """Write a matrix (sparse or dense) as Matrix Market coordinate/array."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix) if sp.issparse(matrix) else matrix)


def prediction_error(koopman, lifted):
    """Residual ||K Psi_x - Psi_y||_F^2 and its value relative to ||Psi_y||_F^2."""
    diff = koopman @ lifted.psi_x - lifted.psi_y
    if sp.issparse(diff):
        raw = sp.linalg.norm(diff) ** 2
        ynorm = sp.linalg.norm(lifted.psi_y) ** 2
    else:
        raw = float(np.linalg.norm(diff) ** 2)
        ynorm = float(np.linalg.norm(lifted.psi_y) ** 2)
    return raw, raw / ynorm
