"""Box-constrained SVM dual with an average-margin shifted lower bound.

The solver works with dual coefficients ``c`` and minimizes

    D(c) = c^T Q c / (4 lam) - a^T c,   lower <= c <= upper,   [sum_i y_i c_i = 0]

where ``Q_ij = y_i y_j k(x_i, x_j)`` and ``a`` holds per-point margin targets
(all ones for the hinge loss). For AM regularization ``lower = mu/n`` and
``upper = (1 + mu)/n``. This is the Lagrangian dual of

    lam ||beta||^2 + sum_i (upper_i - lower_i) (a_i - y_i f_i)_+ - sum_i lower_i y_i f_i

with ``beta = sum_i c_i y_i phi(x_i) / (2 lam)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Dataset, Hyperparams, KernelModel, KernelSpec
from .errors import ConvergenceError, InfeasibleError, InvalidInputError

DEFAULT_TOL = 1e-6
TIGHT_TOL = 1e-10
DEFAULT_MAX_ITER = 10**7
_FLAT_CURVATURE = 1e-12


@dataclass(frozen=True)
class DualProblem:
    gram: np.ndarray
    labels: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    lam: float
    equality: bool = True
    targets: Optional[np.ndarray] = None

    def __post_init__(self):
        Q = np.array(self.gram, dtype=np.float64)
        y = np.array(self.labels, dtype=np.float64)
        n = y.shape[0]
        lo = np.broadcast_to(np.asarray(self.lower, dtype=np.float64), (n,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=np.float64), (n,)).copy()
        a = np.ones(n) if self.targets is None else np.array(self.targets, dtype=np.float64)
        if Q.shape != (n, n) or a.shape != (n,):
            raise InvalidInputError(f"gram shape {Q.shape} does not match {n} labels")
        if not ((y == 1) | (y == -1)).all():
            raise InvalidInputError("labels must be +1 or -1")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise InvalidInputError(f"lam must be positive, got {self.lam}")
        if not (lo < hi).all():
            raise InvalidInputError("every lower bound must be strictly below its upper bound")
        scale = max(1.0, float(np.abs(Q).max()))
        if np.abs(Q - Q.T).max() > 1e-12 * scale:
            raise InvalidInputError("gram matrix is not symmetric")
        rng = np.random.default_rng(0)
        probes = rng.standard_normal((n, 8))
        forms = np.einsum("ik,ij,jk->k", probes, Q, probes)
        if (forms < -1e-10 * scale * (probes * probes).sum(0)).any():
            raise InvalidInputError("gram matrix is not positive semidefinite")
        for name, arr in (("gram", Q), ("labels", y), ("lower", lo), ("upper", hi), ("targets", a)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @classmethod
    def from_data(cls, data: Dataset, kernel: KernelSpec, hyper: Hyperparams, targets=None):
        """AM-regularized dual for ``data``: box [mu/n, (1 + mu)/n]."""
        K = kernel.matrix(data.features, data.features)
        K = 0.5 * (K + K.T)
        y = data.labels
        n = data.n
        return cls(
            gram=y[:, None] * y[None, :] * K,
            labels=y,
            lower=np.full(n, hyper.mu / n),
            upper=np.full(n, (1.0 + hyper.mu) / n),
            lam=hyper.lam,
            equality=hyper.fit_intercept,
            targets=targets,
        )

    def objective(self, c) -> float:
        c = np.asarray(c, dtype=np.float64)
        return float(c @ self.gram @ c / (4.0 * self.lam) - self.targets @ c)


@dataclass(frozen=True)
class DualSolution:
    coefs: np.ndarray
    objective: float
    kkt_violation: float
    iterations: int
    gap: float
    intercept: float = 0.0
    trace: tuple = field(default=(), repr=False)


def _initial_point(p: DualProblem) -> np.ndarray:
    lo, hi, y = p.lower, p.upper, p.labels
    if not p.equality:
        return lo.copy()
    pos, neg = y > 0, y < 0
    lo_pos, lo_neg = lo[pos].sum(), lo[neg].sum()
    hi_pos, hi_neg = hi[pos].sum(), hi[neg].sum()
    total = max(lo_pos, lo_neg)
    if total > min(hi_pos, hi_neg) * (1 + 1e-14) + 1e-300:
        raise InfeasibleError(
            "no coefficients in the box satisfy sum_i y_i c_i = 0: "
            f"class sums range over [{lo_pos:.6g}, {hi_pos:.6g}] (+1) and [{lo_neg:.6g}, {hi_neg:.6g}] (-1)"
        )
    c = lo.copy()
    for mask, lo_sum, hi_sum in ((pos, lo_pos, hi_pos), (neg, lo_neg, hi_neg)):
        if mask.any() and hi_sum > lo_sum:
            frac = min(1.0, (total - lo_sum) / (hi_sum - lo_sum))
            c[mask] = lo[mask] + frac * (hi[mask] - lo[mask])
    return c


def _margins_without_intercept(p: DualProblem, c: np.ndarray) -> np.ndarray:
    # y_i * sum_j c_j y_j k(x_j, x_i) / (2 lam)
    return p.gram @ c / (2.0 * p.lam)


def recover_intercept(p: DualProblem, c: np.ndarray) -> float:
    """Intercept from KKT conditions.

    Mean over interior coefficients of the value putting that point exactly on
    its margin target; without interior points, midpoint of the interval that
    keeps every bound coefficient KKT-consistent.
    """
    if not p.equality:
        return 0.0
    y, lo, hi = p.labels, p.lower, p.upper
    m = _margins_without_intercept(p, c)
    # b_i solves y_i (g_i + b) = a_i
    b_target = y * (p.targets - m)
    iota = 1e-8 * (hi - lo)
    interior = (c > lo + iota) & (c < hi - iota)
    if interior.any():
        return float(np.mean(b_target[interior]))
    at_lower = c <= lo + iota
    # at lower: y_i b >= a_i - m_i, at upper: y_i b <= a_i - m_i
    ge = (at_lower & (y > 0)) | (~at_lower & (y < 0))
    lo_b = b_target[ge].max() if ge.any() else -math.inf
    hi_b = b_target[~ge].min() if (~ge).any() else math.inf
    if math.isinf(lo_b) and math.isinf(hi_b):
        return 0.0
    if math.isinf(lo_b):
        return float(hi_b)
    if math.isinf(hi_b):
        return float(lo_b)
    return 0.5 * float(lo_b + hi_b)


def primal_value(p: DualProblem, c: np.ndarray, b: float) -> float:
    """Primal objective at the weights implied by ``c`` and intercept ``b``."""
    m = _margins_without_intercept(p, c) + p.labels * b
    weight = p.upper - p.lower
    reg = float(c @ p.gram @ c) / (4.0 * p.lam)
    return reg + float(weight @ np.maximum(0.0, p.targets - m)) - float(p.lower @ m)


def duality_gap(p: DualProblem, c: np.ndarray, b: float) -> float:
    dual_value = -p.objective(c) - float(p.lower @ p.targets)
    return primal_value(p, c, b) - dual_value


def _violation(p: DualProblem, c: np.ndarray, grad: np.ndarray):
    """Maximal KKT violation and the working set realizing it."""
    lo, hi, y = p.lower, p.upper, p.labels
    below = c < hi
    above = c > lo
    if p.equality:
        v = -y * grad
        up = (below & (y > 0)) | (above & (y < 0))
        low = (below & (y < 0)) | (above & (y > 0))
        if not up.any() or not low.any():
            return 0.0, -1, -1
        vu = np.where(up, v, -np.inf)
        vl = np.where(low, v, np.inf)
        i = int(np.argmax(vu))
        j = int(np.argmin(vl))
        return max(0.0, float(vu[i] - vl[j])), i, j
    viol = np.maximum(np.where(below, -grad, 0.0), np.where(above, grad, 0.0))
    i = int(np.argmax(viol))
    return float(viol[i]), i, -1


def kkt_violation(p: DualProblem, c) -> float:
    c = np.asarray(c, dtype=np.float64)
    grad = p.gram @ c / (2.0 * p.lam) - p.targets
    return _violation(p, c, grad)[0]


def solve_dual(problem: DualProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
               record_trace: bool = False) -> DualSolution:
    """Minimize the dual by maximal-violating-pair SMO.

    With the equality constraint, pairs (i, j) move along ``c_i += y_i t``,
    ``c_j -= y_j t``; without it, single coordinates are updated. Each step is
    an exact line minimization clipped to the box, so the objective never
    increases. On success ``kkt_violation <= tol`` and the duality gap at the
    recovered intercept is at most ``tol * (1 + |objective|)``.
    """
    if not tol > 0:
        raise InvalidInputError(f"tol must be positive, got {tol}")
    p = problem
    n = p.n
    H = p.gram / (2.0 * p.lam)
    diag = np.diag(H).copy()
    y, lo, hi = p.labels, p.lower, p.upper
    c = _initial_point(p)
    grad = H @ c - p.targets
    trace = []
    it = 0
    inner_tol = tol
    sweep = max(n, 1)

    def objective():
        return float(0.5 * c @ (grad - p.targets))

    def snapshot(viol):
        b = recover_intercept(p, c)
        obj = objective()
        return DualSolution(c.copy(), obj, viol, it, duality_gap(p, c, b), b, tuple(trace))

    if record_trace:
        trace.append(objective())
    while True:
        viol, i, j = _violation(p, c, grad)
        if viol <= inner_tol:
            sol = snapshot(viol)
            if sol.gap <= tol * (1.0 + abs(sol.objective)) or inner_tol < 1e-15:
                return sol
            inner_tol *= 0.1
            continue
        if it >= max_iter:
            best = snapshot(viol)
            raise ConvergenceError(
                f"SMO stopped after {it} updates with KKT violation {viol:.3e} > tol {tol:.1e}", best=best)
        it += 1
        if p.equality:
            yi, yj = y[i], y[j]
            curv = diag[i] + diag[j] - 2.0 * yi * yj * H[i, j]
            # room along +t for c_i += yi t and c_j -= yj t
            room_i = hi[i] - c[i] if yi > 0 else c[i] - lo[i]
            room_j = c[j] - lo[j] if yj > 0 else hi[j] - c[j]
            t_max = min(room_i, room_j)
            t = viol / curv if curv > _FLAT_CURVATURE else math.inf
            if t >= t_max:
                t = t_max
                ci = c[i] + yi * t
                cj = c[j] - yj * t
                if room_i <= room_j:
                    ci = hi[i] if yi > 0 else lo[i]
                if room_j <= room_i:
                    cj = lo[j] if yj > 0 else hi[j]
            else:
                ci = c[i] + yi * t
                cj = c[j] - yj * t
            di, dj = ci - c[i], cj - c[j]
            c[i], c[j] = ci, cj
            grad += H[:, i] * di + H[:, j] * dj
        else:
            g = grad[i]
            if diag[i] > _FLAT_CURVATURE:
                ci = min(hi[i], max(lo[i], c[i] - g / diag[i]))
            else:
                ci = hi[i] if g < 0 else lo[i]
            di = ci - c[i]
            c[i] = ci
            grad += H[:, i] * di
        if record_trace and it % sweep == 0:
            trace.append(objective())


def recover_primal(problem: DualProblem, solution: DualSolution, data: Dataset, kernel: KernelSpec,
                   hyper: Optional[Hyperparams] = None) -> KernelModel:
    """Package a dual solution as a :class:`KernelModel`."""
    if data.n != problem.n:
        raise InvalidInputError(f"dual has {problem.n} coefficients but data has {data.n} points")
    if hyper is None:
        hyper = Hyperparams(lam=problem.lam, mu=float(problem.lower[0]) * problem.n,
                            fit_intercept=problem.equality)
    b = recover_intercept(problem, solution.coefs) if problem.equality else 0.0
    return KernelModel(solution.coefs, data.features, data.labels, kernel, b, hyper)


def z_scaled_problem(data: Dataset, kernel: KernelSpec, hyper: Hyperparams) -> DualProblem:
    """The same dual written in rescaled z-variables.

    ``min z^T Q z - 1^T z`` over ``mu/(1+mu) / (lam n) <= z <= 1/(lam n)``
    (with ``y^T z = 0`` when fitting an intercept). Encoded for :func:`solve_dual`
    as a problem with ``lam = 1/4``. Its solution maps to c-space by
    ``c = (1 + mu) lam z``, which solves the c-space dual at ``lam (1 + mu) / 4``.
    """
    base = DualProblem.from_data(data, kernel, hyper)
    n = data.n
    return DualProblem(
        gram=base.gram,
        labels=base.labels,
        lower=np.full(n, hyper.mu / ((1.0 + hyper.mu) * hyper.lam * n)),
        upper=np.full(n, 1.0 / (hyper.lam * n)),
        lam=0.25,
        equality=hyper.fit_intercept,
    )
