"""Koopman matrix estimation: dense pseudo-inverse and the reduced sparse path.

The dense baseline solves K = (Psi_y Psi_x^T)(Psi_x Psi_x^T)^+. The sparse
path restricts K to a known pattern with z admissible entries collected in a
vector v, and solves the stationarity system S v = gather(Psi_y Psi_x^T)
where column i of S gathers row-l of the Gram matrix selected by entry
i = (l, s); entries sharing a row couple, so S is block diagonal in the
row-grouped entry order and inherits symmetry and positive semidefiniteness
from the Gram matrix. Conjugate gradients solve the reduced system.
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NumericError, RankError
from .sparsity import PatternVector, gather, scatter, system_indices
from . import kernels

DENSE_PINV = "dense-pinv"
SPARSE_CG = "sparse-cg"

PF_DIAGONAL = "diagonal"  # treat Lambda as diagonal dominant: P^T = K
PF_FULL = "full"  # P^T = Lambda^{-1} K Lambda

VARIANT_DIFFERENCE = "difference"  # input block -(P_i - P_0)^T / dt
VARIANT_LITERAL = "literal"  # input block (I - (P_i - P_0)^T) / dt


def default_ridge(gram):
    return 1e-10 * float(np.trace(gram) if not sp.issparse(gram) else gram.diagonal().sum()) / gram.shape[0]


def dense_edmd(lifted, ridge=None):
    """Least-squares Koopman matrix via the Gram pseudo-inverse.

    ridge > 0 solves (G + ridge I) K^T = C^T; ridge = 0 uses a truncated-SVD
    pseudo-inverse with cutoff 1e-12 * sigma_max. ridge=None picks the
    default 1e-10 * tr(G) / N.
    """
    gram = lifted.gram_xx
    cross = lifted.cross_yx
    if sp.issparse(gram):
        gram = gram.toarray()
    if sp.issparse(cross):
        cross = cross.toarray()
    if ridge is None:
        ridge = default_ridge(gram)
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    if ridge > 0:
        n = gram.shape[0]
        return np.linalg.solve(gram + ridge * np.eye(n), cross.T).T
    u, s, vt = np.linalg.svd(gram, hermitian=True)
    keep = s > 1e-12 * s[0]
    if not np.any(keep):
        raise RankError("gram matrix has no usable singular values")
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return cross @ (u[:, keep] * inv[keep]) @ vt[keep]


def build_sparse_system(pattern, lifted):
    """Reduced normal matrix S (z x z CSR) and right-hand side gather(C).

    Column i of S equals gather(scatter(e_i) @ G) without forming any N x N
    product: scatter(e_i) has a single 1 at (l, s), so the product selects
    row s of G placed at row l, and gathering keeps that row's pattern
    positions.
    """
    s_rows, s_cols, g_rows, g_cols = system_indices(pattern)
    gram = lifted.gram_xx
    if sp.issparse(gram):
        vals = kernels.csr_gather(gram.tocsr(), g_rows, g_cols)
    else:
        vals = np.asarray(gram)[g_rows, g_cols]
    z = pattern.size
    S = sp.csr_matrix((vals, (s_rows, s_cols)), shape=(z, z))
    rhs = gather(pattern, lifted.cross_yx)
    return S, rhs


@dataclass
class CgResult:
    x: np.ndarray
    iterations: int
    residual: float  # relative to ||rhs||
    converged: bool
    residual_history: np.ndarray


def _check_symmetry(S, samples=200, seed=0):
    rng = np.random.default_rng(seed)
    z = S.shape[0]
    i = rng.integers(0, z, size=min(samples, z * z))
    j = rng.integers(0, z, size=len(i))
    a = kernels.csr_gather(S, i, j)
    b = kernels.csr_gather(S, j, i)
    scale = max(np.abs(S.data).max() if S.nnz else 0.0, 1e-300)
    if np.max(np.abs(a - b)) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric to 1e-10 on sampled entries")


def cg_solve(S, rhs, tol=1e-10, max_iter=None, precondition=True):
    """Conjugate gradients for S v = rhs with zero initial guess.

    Terminates when ||S v - rhs|| <= tol * ||rhs|| or at max_iter (default
    10 z); non-convergence returns the best iterate flagged. Jacobi
    preconditioning uses the diagonal of S where positive.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    if not np.all(np.isfinite(rhs)):
        raise ValueError("rhs contains non-finite values")
    S = S.tocsr()
    _check_symmetry(S)
    z = S.shape[0]
    if max_iter is None:
        max_iter = 10 * z
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return CgResult(np.zeros(z), 0, 0.0, True, np.zeros(0))
    diag = S.diagonal()
    inv_diag = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 1.0)

    x = np.zeros(z)
    r = rhs.copy()
    history = []
    zvec = inv_diag * r if precondition else r
    p = zvec.copy()
    rz = float(r @ zvec)
    best_x, best_res = x.copy(), np.linalg.norm(r) / bnorm
    it = 0
    while it < max_iter:
        res = np.linalg.norm(r) / bnorm
        history.append(res)
        if res < best_res:
            best_res, best_x = res, x.copy()
        if res <= tol:
            return CgResult(x, it, res, True, np.array(history))
        Sp = S @ p
        pSp = float(p @ Sp)
        if pSp <= 0.0:
            if pSp < -1e-14 * float(p @ p) * max(np.abs(S.data).max(), 1.0):
                raise NumericError("conjugate gradient breakdown: p^T S p < 0")
            # numerically zero curvature: cannot advance further
            break
        alpha = rz / pSp
        x = x + alpha * p
        r = r - alpha * Sp
        zvec = inv_diag * r if precondition else r
        rz_new = float(r @ zvec)
        p = zvec + (rz_new / rz) * p
        rz = rz_new
        it += 1
    res = np.linalg.norm(rhs - S @ x) / bnorm
    history.append(res)
    if res < best_res:
        best_res, best_x = res, x
    return CgResult(best_x, it, best_res, best_res <= tol, np.array(history))


@dataclass
class SparseSolveInfo:
    pattern_size: int
    iterations: int
    residual: float
    converged: bool
    seconds: float


def sparse_edmd(pattern, lifted, tol=1e-10, max_iter=None, precondition=True,
                return_info=False):
    """Pattern-restricted Koopman matrix: build S, run CG, scatter v."""
    t0 = time.perf_counter()
    S, rhs = build_sparse_system(pattern, lifted)
    result = cg_solve(S, rhs.values, tol=tol, max_iter=max_iter,
                      precondition=precondition)
    K = scatter(PatternVector(pattern, result.x))
    info = SparseSolveInfo(
        pattern.size, result.iterations, result.residual, result.converged,
        time.perf_counter() - t0,
    )
    if return_info:
        return K, info
    return K


def pf_from_koopman(K, lam=None, mode=PF_DIAGONAL):
    """Transfer (PF) matrix from the Koopman matrix.

    mode 'diagonal' uses the diagonal-dominant approximation P^T = K; mode
    'full' solves Lambda P^T = K Lambda for the exact finite-dimensional
    dual.
    """
    if mode == PF_DIAGONAL:
        return K.T.tocsr() if sp.issparse(K) else np.asarray(K).T.copy()
    if mode != PF_FULL:
        raise ValueError(f"unknown mode {mode!r}")
    if lam is None:
        raise ValueError("mode 'full' requires the basis Gram matrix")
    lam_d = lam.toarray() if sp.issparse(lam) else np.asarray(lam)
    K_d = K.toarray() if sp.issparse(K) else np.asarray(K)
    try:
        pt = np.linalg.solve(lam_d, K_d @ lam_d)
    except np.linalg.LinAlgError as exc:
        raise RankError("basis Gram matrix is singular") from exc
    return pt.T


@dataclass
class KoopmanSet:
    """Koopman matrices K_0..K_m, one per input label."""

    matrices: list
    dt: float
    pattern: object
    method: str


@dataclass
class GeneratorSet:
    """Transfer-operator generator blocks entering the control program.

    drift_block = (I - P_0^T) / dt. Input block i is -(P_i - P_0)^T / dt for
    the 'difference' variant (generator subtraction) or
    (I - (P_i - P_0)^T) / dt for the 'literal' variant.
    """

    pf_matrices: list
    drift_block: object
    input_blocks: list
    dt: float
    variant: str
    lambda_mode: str


def make_generators(ks, lam=None, variant=VARIANT_DIFFERENCE, lambda_mode=PF_DIAGONAL):
    if variant not in (VARIANT_DIFFERENCE, VARIANT_LITERAL):
        raise ValueError(f"unknown variant {variant!r}")
    pf = [pf_from_koopman(K, lam=lam, mode=lambda_mode) for K in ks.matrices]
    pf = [sp.csr_matrix(P) for P in pf]
    n = pf[0].shape[0]
    eye = sp.identity(n, format="csr")
    dt = ks.dt
    drift = ((eye - pf[0].T) / dt).tocsr()
    inputs = []
    for P in pf[1:]:
        diff = (P - pf[0]).T
        if variant == VARIANT_DIFFERENCE:
            inputs.append((-diff / dt).tocsr())
        else:
            inputs.append(((eye - diff) / dt).tocsr())
    return GeneratorSet(pf, drift, inputs, dt, variant, lambda_mode)


def fit_koopman_set(basis, pattern, snapshot_sets, keep=None, method=SPARSE_CG,
                    ridge=None, tol=1e-10, max_iter=None):
    """Solve for K_0..K_m from one-hot snapshot families.

    The sparse path builds S once (it depends only on Psi_x) and reuses it
    across labels.
    """
    from .basis import lift_label_family

    sets = sorted(snapshot_sets, key=lambda s: s.inputs_label)
    lifted = lift_label_family(basis, sets, keep=keep)
    mats = []
    if method == SPARSE_CG:
        S, _ = build_sparse_system(pattern, lifted[0])
        for lf in lifted:
            rhs = gather(pattern, lf.cross_yx)
            result = cg_solve(S, rhs.values, tol=tol, max_iter=max_iter)
            mats.append(scatter(PatternVector(pattern, result.x)))
    elif method == DENSE_PINV:
        for lf in lifted:
            mats.append(sp.csr_matrix(dense_edmd(lf, ridge=ridge)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return KoopmanSet(mats, sets[0].dt, pattern, method), lifted
