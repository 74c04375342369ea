"""Primal-dual interior-point solver for sparse linear programs.

Solves  min c^T x  s.t.  A x = b,  G x <= h  with free x, using Mehrotra's
predictor-corrector on the slack form G x + s = h, s >= 0. Each iteration
reduces the Newton system to the quasi-definite KKT matrix

    [ G^T (z/s) G + dp I   A^T  ] [dx]   [rhs]
    [ A                   -dd I ] [dy] = [rhs]

factored with sparse LU. Rows of [A; G] are equilibrated to unit inf-norm
up front; the tiny regularization dp/dd keeps the factorization stable.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration-limit"

_STEP_SCALE = 0.9995
_REG = 1e-9


@dataclass
class IpResult:
    x: np.ndarray
    y: np.ndarray  # equality multipliers
    z: np.ndarray  # inequality multipliers
    slack: np.ndarray
    status: str
    iterations: int
    primal_residual: float  # relative, inf-norm, original scaling
    dual_residual: float
    gap: float
    objective: float
    trace: list = field(default_factory=list)


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def _residuals(c, A, b, G, h, x, y, z, s):
    r_d = c + A.T @ y + G.T @ z
    r_p = A @ x - b
    r_g = G @ x + s - h
    return r_d, r_p, r_g


def _solve_equality_only(c, A, b, tol, max_iter):
    # Degenerate case with no inequality rows: least-squares primal/dual.
    x, *_ = np.linalg.lstsq(A.toarray(), b, rcond=None)
    y, *_ = np.linalg.lstsq(A.toarray().T, -c, rcond=None)
    r_p = np.linalg.norm(A @ x - b, np.inf) / (1.0 + np.linalg.norm(b, np.inf))
    r_d = np.linalg.norm(c + A.T @ y, np.inf) / (1.0 + np.linalg.norm(c, np.inf))
    status = OPTIMAL if max(r_p, r_d) <= tol else INFEASIBLE
    return IpResult(
        x, y, np.zeros(0), np.zeros(0), status, 0, r_p, r_d, 0.0, float(c @ x)
    )


def solve(c, a_eq, b_eq, a_ub, b_ub, tol=1e-8, max_iter=200, collect_trace=False):
    c = np.asarray(c, dtype=np.float64)
    nvar = len(c)
    A = sp.csr_matrix(a_eq, dtype=np.float64) if a_eq is not None else sp.csr_matrix((0, nvar))
    b = np.asarray(b_eq, dtype=np.float64) if b_eq is not None else np.zeros(0)
    G = sp.csr_matrix(a_ub, dtype=np.float64) if a_ub is not None else sp.csr_matrix((0, nvar))
    h = np.asarray(b_ub, dtype=np.float64) if b_ub is not None else np.zeros(0)
    p, q = A.shape[0], G.shape[0]

    if q == 0:
        return _solve_equality_only(c, A, b, tol, max_iter)

    # Row equilibration: unit inf-norm rows; solution x is unchanged, the
    # multipliers are rescaled back at the end.
    def row_scale(M, rhs):
        norms = np.asarray(abs(M).max(axis=1).todense()).ravel() if M.nnz else np.ones(M.shape[0])
        norms = np.where(norms > 0, norms, 1.0)
        D = sp.diags(1.0 / norms)
        return D @ M, rhs / norms, norms

    A_s, b_s, a_norms = row_scale(A, b) if p else (A, b, np.ones(0))
    G_s, h_s, g_norms = row_scale(G, h)
    c_scale = max(np.abs(c).max(), 1.0)
    c_s = c / c_scale

    Gt = G_s.T.tocsr()

    x = np.zeros(nvar)
    s = np.maximum(h_s - G_s @ x, 1.0)
    z = np.ones(q)
    y = np.zeros(p)

    b_ref = 1.0 + (np.linalg.norm(b, np.inf) if p else 0.0)
    h_ref = 1.0 + np.linalg.norm(h, np.inf)
    c_ref = 1.0 + np.linalg.norm(c, np.inf)

    trace = []
    best = None
    status = ITERATION_LIMIT
    iters_done = 0
    reg = _REG
    metric = np.inf

    for it in range(max_iter):
        r_d, r_p, r_g = _residuals(c_s, A_s, b_s, G_s, h_s, x, y, z, s)
        mu = float(s @ z) / q

        # unscaled convergence metrics
        rel_p = np.linalg.norm(r_p * a_norms, np.inf) / b_ref if p else 0.0
        rel_g = np.linalg.norm(r_g * g_norms, np.inf) / h_ref
        rel_d = np.linalg.norm(r_d * c_scale, np.inf) / c_ref
        obj = float(c @ x)
        dual_obj = -float(b_s @ y) - float(h_s @ z)
        gap = abs(obj / c_scale - dual_obj) / (1.0 + abs(obj / c_scale))
        metric = max(rel_p, rel_g, rel_d, gap)
        if collect_trace:
            trace.append(
                {"iter": it, "mu": mu, "primal": max(rel_p, rel_g),
                 "dual": rel_d, "gap": gap, "objective": obj}
            )
        if best is None or metric < best[0]:
            best = (metric, x.copy(), y.copy(), z.copy(), s.copy(), it)
        if max(rel_p, rel_g) <= tol and rel_d <= tol and gap <= tol:
            status = OPTIMAL
            iters_done = it
            break

        # Farkas-style certificate of primal infeasibility: dual ray with
        # A^T y + G^T z ~ 0, z >= 0 and b^T y + h^T z < 0.
        yz_scale = max(np.linalg.norm(y, np.inf) if p else 0.0,
                       np.linalg.norm(z, np.inf), 1.0)
        ray_obj = (float(b_s @ y) if p else 0.0) + float(h_s @ z)
        ray_res = np.linalg.norm((A_s.T @ y if p else 0.0) + Gt @ z, np.inf)
        if yz_scale > 1e8 and ray_obj < -1e-8 * yz_scale and ray_res <= 1e-8 * yz_scale:
            status = INFEASIBLE
            iters_done = it
            break
        if not np.isfinite(metric) or metric > 1e60:
            status = INFEASIBLE
            iters_done = it
            break

        d = z / s
        H = Gt @ G_s.multiply(d[:, None])
        kkt = sp.bmat(
            [
                [H + reg * sp.identity(nvar), A_s.T if p else None],
                [A_s if p else None, -reg * sp.identity(p) if p else None],
            ],
            format="csc",
        )
        try:
            lu = spla.splu(kkt)
        except RuntimeError:
            reg *= 100.0
            continue

        def newton(t):
            # complementarity target t: Z ds + S dz = t - s*z
            w = (t - s * z) / s
            rhs_x = -r_d - Gt @ (w + d * r_g)
            rhs = np.concatenate([rhs_x, -r_p]) if p else rhs_x
            sol = lu.solve(rhs)
            dx = sol[:nvar]
            dy = sol[nvar:] if p else np.zeros(0)
            ds = -r_g - G_s @ dx
            dz = w + d * (G_s @ dx)
            return dx, dy, ds, dz

        # predictor
        dx_a, dy_a, ds_a, dz_a = newton(np.zeros(q))
        ap = _max_step(s, ds_a)
        ad = _max_step(z, dz_a)
        mu_aff = float((s + ap * ds_a) @ (z + ad * dz_a)) / q
        sigma = min(1.0, max(0.0, (mu_aff / mu))) ** 3

        # corrector
        dx, dy, ds, dz = newton(sigma * mu - ds_a * dz_a)
        ap = _STEP_SCALE * _max_step(s, ds)
        ad = _STEP_SCALE * _max_step(z, dz)
        if ap < 1e-12 and ad < 1e-12:
            iters_done = it
            break
        x = x + ap * dx
        s = s + ap * ds
        y = y + ad * dy
        z = z + ad * dz
        iters_done = it + 1
    else:
        iters_done = max_iter

    if status != OPTIMAL and best is not None and best[0] < metric:
        _, x, y, z, s, _ = best

    # report on original scaling
    y_orig = (y / a_norms * c_scale) if p else y
    z_orig = z / g_norms * c_scale
    r_d = c + (A.T @ y_orig if p else 0.0) + G.T @ z_orig
    rel_p = np.linalg.norm(A @ x - b, np.inf) / b_ref if p else 0.0
    rel_g = np.linalg.norm(np.maximum(G @ x - h, 0.0), np.inf) / h_ref
    rel_d = np.linalg.norm(r_d, np.inf) / c_ref
    gap = float(s @ z) / q if q else 0.0
    return IpResult(
        x, y_orig, z_orig, s, status, iters_done,
        max(rel_p, rel_g), rel_d, gap, float(c @ x), trace,
    )
