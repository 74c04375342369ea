"""Quadrature for the constant integral vectors of the control program.

A midpoint tensor rule over the basis domain evaluates I_psi = int Psi,
I_q = int q Psi, the unsafe-set indicator integral, optional off-road cost
integrals, and the basis Gram matrix Lambda = int Psi Psi^T. Since both the
rule and the Gaussians are tensor products, Lambda factors into a Kronecker
product of per-dimension Grams, which avoids any N x N x nodes work.
"""

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import RankError
from . import kernels


@dataclass(frozen=True)
class QuadGrid:
    """Midpoint tensor-product rule: q_per_dim cells per dimension."""

    domain: np.ndarray  # (n, 2)
    q_per_dim: tuple

    def __post_init__(self):
        dom = np.asarray(self.domain, dtype=np.float64).reshape(-1, 2)
        object.__setattr__(self, "domain", dom)
        q = tuple(int(v) for v in np.broadcast_to(self.q_per_dim, (dom.shape[0],)))
        object.__setattr__(self, "q_per_dim", q)

    @property
    def state_dim(self):
        return self.domain.shape[0]

    @property
    def node_count(self):
        return int(np.prod(self.q_per_dim))

    @property
    def cell_volume(self):
        widths = (self.domain[:, 1] - self.domain[:, 0]) / np.array(self.q_per_dim)
        return float(np.prod(widths))

    def axis_nodes(self, d):
        lo, hi = self.domain[d]
        q = self.q_per_dim[d]
        step = (hi - lo) / q
        return lo + step * (np.arange(q) + 0.5)

    def iter_chunks(self, chunk=16384):
        """Yield (nodes, volume) blocks of the tensor grid in C order."""
        axes = [self.axis_nodes(d) for d in range(self.state_dim)]
        total = self.node_count
        vol = self.cell_volume
        shape = self.q_per_dim
        for start in range(0, total, chunk):
            stop = min(start + chunk, total)
            flat = np.arange(start, stop)
            multi = np.unravel_index(flat, shape)
            nodes = np.stack(
                [axes[d][multi[d]] for d in range(self.state_dim)], axis=1
            )
            yield nodes, vol


def make_quad_grid(basis, q_per_dim=None):
    if q_per_dim is None:
        q_per_dim = 4 * basis.per_dim
    return QuadGrid(basis.domain, q_per_dim)


def integrate_weighted(basis, weight, grid, chunk=16384):
    """Vector of int w(x) psi_j(x) dx under the midpoint rule.

    ``weight`` is a callable mapping (B, n) points to (B,) values, or None
    for the constant 1 (which integrates the basis itself).
    """
    out = np.zeros(basis.size)
    for nodes, vol in grid.iter_chunks(chunk):
        psi = kernels.lift_dense(
            nodes, basis.domain[:, 0], basis.spacing, basis.per_dim, basis.sigma
        )
        if weight is None:
            out += vol * psi.sum(axis=0)
        else:
            w = np.asarray(weight(nodes), dtype=np.float64)
            out += vol * (w @ psi)
    return out


def _axis_gram(basis, grid, d):
    nodes = grid.axis_nodes(d)
    centers = np.linspace(basis.domain[d, 0], basis.domain[d, 1], basis.per_dim)
    a = -((nodes[:, None] - centers[None, :]) ** 2) / (2.0 * basis.sigma**2)
    E = np.where(a <= -170.0, 0.0, np.exp(np.maximum(a, -170.0)))
    step = (basis.domain[d, 1] - basis.domain[d, 0]) / grid.q_per_dim[d]
    return (E.T @ E) * step


def gram_lambda(basis, grid, drop_tol=1e-14):
    """Basis Gram Lambda = int Psi Psi^T dx, sparse with tiny entries dropped.

    Computed as the Kronecker product of per-dimension quadrature Grams;
    the result is symmetric by construction.
    """
    lam = None
    for d in range(basis.state_dim):
        g = _axis_gram(basis, grid, d)
        lam = g if lam is None else np.kron(lam, g)
    lam = 0.5 * (lam + lam.T)
    cutoff = drop_tol * np.abs(lam).max()
    lam[np.abs(lam) < cutoff] = 0.0
    return sp.csr_matrix(lam)


def diagonal_dominance_margin(lam):
    """min_i (Lambda_ii - sum_{j != i} |Lambda_ij|); positive means strict."""
    lam = sp.csr_matrix(lam)
    diag = lam.diagonal()
    abs_row = np.asarray(np.abs(lam).sum(axis=1)).ravel()
    return float(np.min(2 * diag - abs_row))


def project_density(basis, lam, weight, grid):
    """L2-best coefficients C with C^T Psi approximating the field.

    Solves Lambda C = int w Psi.
    """
    rhs = integrate_weighted(basis, weight, grid)
    lam = sp.csc_matrix(lam)
    try:
        solve = spla.factorized(lam)
        coeff = solve(rhs)
    except RuntimeError as exc:
        raise RankError("basis Gram matrix is singular") from exc
    if not np.all(np.isfinite(coeff)):
        raise RankError("basis Gram matrix is numerically singular")
    return coeff


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(
            self, "center", np.asarray(self.center, dtype=np.float64)
        )
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    def contains(self, points):
        pts = np.atleast_2d(points)
        d2 = np.sum((pts - self.center) ** 2, axis=1)
        return d2 <= self.radius**2


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=np.float64))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=np.float64))
        if not np.all(self.hi > self.lo):
            raise ValueError("box is degenerate")

    @property
    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def contains(self, points):
        pts = np.atleast_2d(points)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)


@dataclass
class CostMap:
    """Piecewise-constant raster of nonnegative off-road costs.

    The raster covers the square [lo, hi]^2 with nx x ny cells in row-major
    order (x varies over rows).
    """

    values: np.ndarray  # (nx, ny)
    lo: float
    hi: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if np.any(self.values < 0):
            raise ValueError("cost map values must be nonnegative")

    def __call__(self, points):
        pts = np.atleast_2d(points)
        nx, ny = self.values.shape
        span = self.hi - self.lo
        ix = np.clip(((pts[:, 0] - self.lo) / span * nx).astype(int), 0, nx - 1)
        iy = np.clip(((pts[:, 1] - self.lo) / span * ny).astype(int), 0, ny - 1)
        return self.values[ix, iy]


def save_cost_map(cmap, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        nx, ny = cmap.values.shape
        writer.writerow([nx, ny, repr(cmap.lo), repr(cmap.hi)])
        for row in cmap.values:
            writer.writerow([repr(v) for v in row])


def load_cost_map(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        nx, ny, lo, hi = next(reader)
        values = np.array([[float(v) for v in row] for row in reader])
    if values.shape != (int(nx), int(ny)):
        raise ValueError(
            f"cost map shape {values.shape} does not match header ({nx}, {ny})"
        )
    return CostMap(values, float(lo), float(hi))


@dataclass
class RegionSpec:
    """Initial boxes, unsafe balls, the target ball, optional cost map."""

    initial_sets: list
    unsafe_sets: list
    target_set: Ball
    cost_map: CostMap | None = None

    def initial_density(self, points):
        """Uniform density over the union of initial boxes, total mass 1."""
        pts = np.atleast_2d(points)
        inside = np.zeros(len(pts), dtype=bool)
        for box in self.initial_sets:
            inside |= box.contains(pts)
        volume = sum(box.volume for box in self.initial_sets)
        return inside.astype(np.float64) / volume

    def unsafe_indicator(self, points):
        pts = np.atleast_2d(points)
        inside = np.zeros(len(pts), dtype=bool)
        for ball in self.unsafe_sets:
            inside |= ball.contains(pts)
        return inside.astype(np.float64)


@dataclass
class LpIntegrals:
    """The constant vectors entering the control program."""

    i_q: np.ndarray
    i_psi: np.ndarray
    i_xu: np.ndarray
    i_m: np.ndarray


def compute_integrals(basis, grid, regions, state_cost, cost_map=None):
    """All constant integral vectors in one pass configuration.

    ``state_cost`` maps (B, n) points to nonnegative costs; ``cost_map``
    defaults to the region's raster when present, else the zero vector.
    """
    i_q = integrate_weighted(basis, state_cost, grid)
    i_psi = integrate_weighted(basis, None, grid)
    if regions.unsafe_sets:
        i_xu = integrate_weighted(basis, regions.unsafe_indicator, grid)
    else:
        i_xu = np.zeros(basis.size)
    cmap = cost_map if cost_map is not None else regions.cost_map
    if cmap is not None:
        i_m = integrate_weighted(basis, cmap, grid)
    else:
        i_m = np.zeros(basis.size)
    return LpIntegrals(i_q, i_psi, i_xu, i_m)
