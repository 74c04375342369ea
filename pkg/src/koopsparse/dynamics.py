"""Benchmark control-affine systems and snapshot-pair generation.

Two model families are provided: the n-dimensional single integrator
(xdot = u, one input per state) and the controlled Van der Pol oscillator.
Snapshot sets pair sampled states x with their image y one sampling step
later, under zero input and under each one-hot input.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import NumericError

INTEGRATOR = "integrator"
VANDERPOL = "vanderpol"


@dataclass(frozen=True)
class SystemModel:
    kind: str
    state_dim: int
    input_dim: int
    domain: np.ndarray  # (n, 2) rows of [lo, hi]

    def __post_init__(self):
        dom = np.asarray(self.domain, dtype=np.float64).reshape(self.state_dim, 2)
        object.__setattr__(self, "domain", dom)
        if self.kind == INTEGRATOR:
            if self.input_dim != self.state_dim:
                raise ValueError("integrator requires input_dim == state_dim")
        elif self.kind == VANDERPOL:
            if self.state_dim != 2 or self.input_dim != 1:
                raise ValueError("vanderpol requires state_dim=2, input_dim=1")
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not np.all(dom[:, 1] > dom[:, 0]):
            raise ValueError("domain box is degenerate (hi <= lo)")

    def input_matrix(self):
        """Constant input matrix g of xdot = f(x) + g u."""
        if self.kind == INTEGRATOR:
            return np.eye(self.state_dim)
        return np.array([[0.0], [1.0]])


def integrator(dim, domain):
    return SystemModel(INTEGRATOR, dim, dim, np.asarray(domain, dtype=np.float64))


def vanderpol(domain=((-5.0, 5.0), (-5.0, 5.0))):
    return SystemModel(VANDERPOL, 2, 1, np.asarray(domain, dtype=np.float64))


@dataclass
class SnapshotSet:
    """M pairs (x, y) with y one step of duration dt after x under input u_k.

    ``inputs_label`` 0 means the autonomous system; label k >= 1 means the
    one-hot input e_k (scaled by ``input_scale``).
    """

    inputs_label: int
    x_points: np.ndarray  # (M, n)
    y_points: np.ndarray  # (M, n)
    dt: float
    input_scale: float = 1.0

    @property
    def sample_count(self):
        return self.x_points.shape[0]

    def __post_init__(self):
        if self.x_points.shape != self.y_points.shape or self.sample_count == 0:
            raise ValueError("x_points and y_points must be equal nonempty shapes")


def eval_rhs(model, x, u):
    """Right-hand side f(x) + g(x) u of the model dynamics."""
    x = np.asarray(x, dtype=np.float64)
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    if x.shape != (model.state_dim,) or u.shape != (model.input_dim,):
        raise ValueError(
            f"expected x of shape ({model.state_dim},) and u of shape "
            f"({model.input_dim},), got {x.shape} and {u.shape}"
        )
    if model.kind == INTEGRATOR:
        return u.copy()
    x1, x2 = x
    return np.array([x2, -x1 + x2 * (1.0 - x1 * x1) + u[0]])


def step(model, x, u, dt):
    """One classical RK4 step with the input held constant."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    k1 = eval_rhs(model, x, u)
    k2 = eval_rhs(model, x + 0.5 * dt * k1, u)
    k3 = eval_rhs(model, x + 0.5 * dt * k2, u)
    k4 = eval_rhs(model, x + dt * k3, u)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericError(f"integration produced non-finite state {out}")
    return out


def _step_batch(model, x, u, dt):
    # RK4 on (M, n) states under one shared constant input.
    def rhs(xs):
        if model.kind == INTEGRATOR:
            return np.broadcast_to(u, xs.shape).copy()
        x1, x2 = xs[:, 0], xs[:, 1]
        return np.stack([x2, -x1 + x2 * (1.0 - x1 * x1) + u[0]], axis=1)

    k1 = rhs(x)
    k2 = rhs(x + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt * k2)
    k4 = rhs(x + dt * k3)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericError("integration produced non-finite states")
    return out


def generate_snapshots(model, dt, count, seed, input_scale=1.0):
    """Snapshot sets for labels 0..m, reusing the same x draw for each label.

    States are drawn uniformly over the model domain with the given seed.
    """
    if count <= 0:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    lo, hi = model.domain[:, 0], model.domain[:, 1]
    x = rng.uniform(lo, hi, size=(count, model.state_dim))
    sets = []
    for label in range(model.input_dim + 1):
        u = np.zeros(model.input_dim)
        if label > 0:
            u[label - 1] = input_scale
        y = _step_batch(model, x, u, dt)
        sets.append(
            SnapshotSet(label, x.copy(), y, dt=float(dt), input_scale=input_scale)
        )
    return sets


def save_snapshots_csv(sets, path):
    """Write snapshot sets to CSV with header ``k,x1..xn,y1..yn``.

    Floats are written with repr so values round-trip exactly.
    """
    sets = list(sets)
    n = sets[0].x_points.shape[1]
    header = (
        ["k"]
        + [f"x{i + 1}" for i in range(n)]
        + [f"y{i + 1}" for i in range(n)]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for snap in sets:
            for xv, yv in zip(snap.x_points, snap.y_points):
                writer.writerow(
                    [snap.inputs_label] + [repr(v) for v in xv] + [repr(v) for v in yv]
                )


def load_snapshots_csv(path, dt, input_scale=1.0):
    """Read snapshot sets written by :func:`save_snapshots_csv`."""
    by_label = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n = (len(header) - 1) // 2
        for row in reader:
            label = int(row[0])
            vals = [float(v) for v in row[1:]]
            by_label.setdefault(label, []).append((vals[:n], vals[n:]))
    sets = []
    for label in sorted(by_label):
        xs, ys = zip(*by_label[label])
        sets.append(
            SnapshotSet(
                label,
                np.array(xs),
                np.array(ys),
                dt=float(dt),
                input_scale=input_scale,
            )
        )
    return sets
