"""Deterministic primal optimizers shared by the linear trainers.

``barrier_hinge`` is the default: a log-barrier path-following Newton method
for the hinge-family objective of :mod:`avgmargin.objectives`. Every hinge
slack gets two barrier terms, the l1 penalty is split with bounds
``-u <= beta <= u`` and the adversarial norm goes through the second-order
cone ``||beta|| <= t``. Slacks and l1 bounds are eliminated blockwise, so each
Newton step solves one system of size d (+1 intercept, +1 cone variable).

``subgradient_hinge`` is plain full-batch subgradient descent with step
``step0 / (1 + t/1000)`` and iterate averaging over the final quarter.

``newton_logistic`` handles the smooth logistic objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DivergenceError, InvalidInputError

B_CLIP = 1e6


@dataclass(frozen=True)
class OptimizerConfig:
    """Optimizer choice and knobs.

    ``kind`` is ``"barrier"`` (default) or ``"subgradient"``; ``step0``,
    ``iters`` and ``averaging`` only affect the subgradient method.
    """

    kind: str = "barrier"
    gap_tol: float = 1e-12
    step0: float = 1.0
    iters: int = 200_000
    averaging: bool = True

    def __post_init__(self):
        if self.kind not in ("barrier", "subgradient"):
            raise InvalidInputError(f"unknown optimizer {self.kind!r}")
        if not self.step0 > 0:
            raise InvalidInputError(f"step0 must be positive, got {self.step0}")
        if int(self.iters) < 1:
            raise InvalidInputError(f"iters must be at least 1, got {self.iters}")
        if not self.gap_tol > 0:
            raise InvalidInputError(f"gap_tol must be positive, got {self.gap_tol}")


@dataclass
class OptimResult:
    beta: np.ndarray
    intercept: float
    objective: float
    trace: list = field(default_factory=list)
    iterations: int = 0


def intercept_unbounded(y: np.ndarray, mu: float) -> bool:
    """True when the average-margin term drives the intercept to infinity.

    Far out along +b the loss grows at rate n_neg/n while the margin reward
    grows at mu (n_pos - n_neg)/n; symmetric for -b.
    """
    n_pos = float(np.count_nonzero(y > 0))
    n_neg = float(y.shape[0]) - n_pos
    return mu * (n_pos - n_neg) > n_neg or mu * (n_neg - n_pos) > n_pos


def _hinge_value(terms, X, y, beta, b):
    yf = y * (X @ beta + b)
    norm = math.sqrt(float(beta @ beta))
    slack = np.maximum(0.0, terms.targets - yf + terms.adv * norm)
    val = terms.ridge * float(beta @ beta) + float(np.mean(slack)) - terms.mu * float(np.mean(yf))
    if terms.l1:
        val += terms.l1 * float(np.abs(beta).sum())
    return val


def _solve_spd(H, rhs):
    try:
        factor = scipy.linalg.cho_factor(H, lower=True, check_finite=False)
        sol = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
        if np.isfinite(sol).all():
            return sol
    except (np.linalg.LinAlgError, ValueError):
        pass
    return np.linalg.lstsq(H, rhs, rcond=None)[0]


def barrier_hinge(terms, X, y, gap_tol: float = 1e-12, growth: float = 10.0,
                  max_newton: int = 5000) -> OptimResult:
    """Minimize the hinge-family objective to absolute duality gap ``gap_tol``."""
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    a = terms.targets
    has_b = terms.fit_intercept
    has_t = terms.adv > 0
    has_u = terms.l1 > 0
    ridge, adv = terms.ridge, terms.adv
    w = 1.0 / n
    lin_beta = -(terms.mu / n) * (y @ X)
    lin_b = -(terms.mu / n) * float(y.sum())

    cols = [y[:, None] * X]
    if has_b:
        cols.append(y[:, None])
    if has_t:
        cols.append(np.full((n, 1), -adv))
    C = np.hstack(cols)
    p = C.shape[1]
    ib = d if has_b else None
    it = p - 1 if has_t else None

    v = np.zeros(p)
    if has_t:
        v[it] = 1.0
    u = np.ones(d) if has_u else None
    s = np.maximum(0.0, a - C @ v) + 1.0
    nu = 2 * n + (2 if has_t else 0) + (2 * d if has_u else 0) + (2 if has_b else 0)

    def slack_r(v_, s_):
        return s_ - a + C @ v_

    def feasible(v_, s_, u_):
        if not (s_ > 0).all() or not (slack_r(v_, s_) > 0).all():
            return False
        beta_ = v_[:d]
        if has_t and not (v_[it] > 0 and v_[it] ** 2 - beta_ @ beta_ > 0):
            return False
        if has_u and not ((u_ - beta_ > 0).all() and (u_ + beta_ > 0).all()):
            return False
        if has_b and not abs(v_[ib]) < B_CLIP:
            return False
        return True

    def newton_step(tau):
        beta = v[:d]
        r = slack_r(v, s)
        g_s = tau * w - 1.0 / s - 1.0 / r
        g_v = -(C.T @ (1.0 / r))
        g_v[:d] += tau * (2.0 * ridge * beta + lin_beta)
        denom = r * r + s * s
        H = C.T @ (C * (1.0 / denom)[:, None])
        H[np.arange(d), np.arange(d)] += 2.0 * tau * ridge
        rhs_extra = C.T @ (g_s * s * s / denom)
        if has_b:
            bb = v[ib]
            g_v[ib] += tau * lin_b + 1.0 / (B_CLIP - bb) - 1.0 / (B_CLIP + bb)
            H[ib, ib] += 1.0 / (B_CLIP - bb) ** 2 + 1.0 / (B_CLIP + bb) ** 2
        if has_t:
            tt = v[it]
            delta = tt * tt - beta @ beta
            g_v[:d] += 2.0 * beta / delta
            g_v[it] += -2.0 * tt / delta
            H[:d, :d] += (2.0 / delta) * np.eye(d) + (4.0 / delta**2) * np.outer(beta, beta)
            cross = -4.0 * tt * beta / delta**2
            H[:d, it] += cross
            H[it, :d] += cross
            H[it, it] += -2.0 / delta + 4.0 * tt * tt / delta**2
        g_u = Du = Cu = None
        if has_u:
            lo_gap, hi_gap = u - beta, u + beta
            g_v[:d] += 1.0 / lo_gap - 1.0 / hi_gap
            g_u = tau * terms.l1 - 1.0 / lo_gap - 1.0 / hi_gap
            Du = 1.0 / lo_gap**2 + 1.0 / hi_gap**2
            Cu = -1.0 / lo_gap**2 + 1.0 / hi_gap**2
            H[np.arange(d), np.arange(d)] += Du - Cu * Cu / Du
            rhs_extra[:d] += Cu * g_u / Du
        dv = _solve_spd(H, -g_v + rhs_extra)
        ds = (-g_s * r * r * s * s - (C @ dv) * s * s) / denom
        decrement = -(g_v @ dv + g_s @ ds)
        du = None
        if has_u:
            du = (-g_u - Cu * dv[:d]) / Du
            decrement -= g_u @ du
        return dv, ds, du, decrement

    trace = []
    tau = 1.0
    newton = 0
    while True:
        for _ in range(200):
            dv, ds, du, dec = newton_step(tau)
            newton += 1
            if not math.isfinite(dec):
                raise DivergenceError("barrier Newton step became non-finite")
            if dec <= 1e-10:
                break
            step = 1.0 if dec < 0.0625 else 1.0 / (1.0 + math.sqrt(dec))
            for _ in range(60):
                nv, ns = v + step * dv, s + step * ds
                nu_ = u + step * du if has_u else None
                if feasible(nv, ns, nu_):
                    break
                step *= 0.5
            else:
                break
            v, s = nv, ns
            if has_u:
                u = nu_
            if newton >= max_newton:
                break
        beta = v[:d].copy()
        b = float(v[ib]) if has_b else 0.0
        trace.append(_hinge_value(terms, X, y, beta, b))
        if nu / tau <= gap_tol or newton >= max_newton:
            break
        tau *= growth
    if has_b and abs(b) >= B_CLIP * (1.0 - 1e-3):
        raise DivergenceError(f"intercept reached the clip |b| = {B_CLIP:g}; the objective is unbounded in b")
    return OptimResult(beta, b, _hinge_value(terms, X, y, beta, b), trace, newton)


def _hinge_subgradient(terms, X, y, beta, b):
    n = X.shape[0]
    yf = y * (X @ beta + b)
    norm = math.sqrt(float(beta @ beta))
    active = (terms.targets - yf + terms.adv * norm) > 0
    frac = np.count_nonzero(active) / n
    g_beta = -(y[active] @ X[active]) / n - terms.mu * (y @ X) / n
    g_beta = g_beta + 2.0 * terms.ridge * beta
    if terms.adv and norm > 0:
        g_beta = g_beta + terms.adv * frac * beta / norm
    if terms.l1:
        g_beta = g_beta + terms.l1 * np.sign(beta)
    g_b = -(float(y[active].sum()) + terms.mu * float(y.sum())) / n
    return g_beta, g_b


def subgradient_hinge(terms, X, y, step0: float = 1.0, iters: int = 200_000, averaging: bool = True,
                      epochs: int = 100) -> OptimResult:
    """Full-batch subgradient descent; returns the best epoch candidate.

    Candidates are the running average over the final quarter of iterations
    (or the raw iterate before that window / without averaging).
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    beta = np.zeros(d)
    b = 0.0
    start_avg = iters - max(1, iters // 4)
    avg_beta = np.zeros(d)
    avg_b = 0.0
    count = 0
    epoch_len = max(1, iters // epochs)
    best = (_hinge_value(terms, X, y, beta, b), beta.copy(), b)
    trace = [best[0]]
    for t in range(iters):
        g_beta, g_b = _hinge_subgradient(terms, X, y, beta, b)
        eta = step0 / (1.0 + t / 1000.0)
        beta = beta - eta * g_beta
        if terms.fit_intercept:
            b = min(B_CLIP, max(-B_CLIP, b - eta * g_b))
        if averaging and t >= start_avg:
            count += 1
            avg_beta += (beta - avg_beta) / count
            avg_b += (b - avg_b) / count
        if (t + 1) % epoch_len == 0 or t + 1 == iters:
            cand_beta, cand_b = (avg_beta, avg_b) if (averaging and count) else (beta, b)
            val = _hinge_value(terms, X, y, cand_beta, cand_b)
            if not math.isfinite(val):
                raise DivergenceError(f"objective became non-finite with step0 = {step0:g}")
            if val < best[0]:
                best = (val, cand_beta.copy(), float(cand_b))
            trace.append(best[0])
    val, beta, b = best
    if terms.fit_intercept and abs(b) >= B_CLIP:
        raise DivergenceError(f"intercept reached the clip |b| = {B_CLIP:g}")
    return OptimResult(beta, b, val, trace, iters)


def _logistic_parts(X1, y, mu, lam, z, d):
    yf = y * (X1 @ z)
    n = X1.shape[0]
    sig = 0.5 * (1.0 - np.tanh(0.5 * yf))  # 1 / (1 + exp(yf))
    value = float(np.mean(np.logaddexp(0.0, -yf)) - mu * np.mean(yf)) + lam * float(z[:d] @ z[:d])
    grad = -(X1.T @ (y * (sig + mu))) / n
    grad[:d] += 2.0 * lam * z[:d]
    curv = sig * (1.0 - sig) / n
    return value, grad, curv


def newton_logistic(X, y, mu: float, lam: float, fit_intercept: bool, gtol: float = 1e-10,
                    max_iter: int = 500) -> OptimResult:
    """Damped Newton with Armijo backtracking for the logistic AM objective."""
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    X1 = np.hstack([X, np.ones((n, 1))]) if fit_intercept else X
    p = X1.shape[1]
    z = np.zeros(p)
    value, grad, curv = _logistic_parts(X1, y, mu, lam, z, d)
    trace = [value]
    k = 0
    for k in range(1, max_iter + 1):
        if np.linalg.norm(grad) <= gtol:
            break
        H = X1.T @ (X1 * curv[:, None])
        H[np.arange(d), np.arange(d)] += 2.0 * lam
        H[np.arange(p), np.arange(p)] += 1e-14 * (1.0 + np.abs(np.diag(H)))
        step = _solve_spd(H, -grad)
        slope = float(grad @ step)
        if slope >= 0:
            step, slope = -grad, -float(grad @ grad)
        alpha = 1.0
        while True:
            cand = z + alpha * step
            cval, cgrad, ccurv = _logistic_parts(X1, y, mu, lam, cand, d)
            if cval <= value + 1e-4 * alpha * slope or alpha < 1e-12:
                break
            alpha *= 0.5
        if not math.isfinite(cval):
            raise DivergenceError("logistic objective became non-finite")
        improved = cval < value
        z, value, grad, curv = cand, cval, cgrad, ccurv
        trace.append(value)
        if fit_intercept and abs(z[-1]) >= B_CLIP:
            raise DivergenceError(f"intercept reached the clip |b| = {B_CLIP:g}")
        if not improved and alpha < 1e-12:
            break
    b = float(z[-1]) if fit_intercept else 0.0
    return OptimResult(z[:d].copy(), b, value, trace, k)
