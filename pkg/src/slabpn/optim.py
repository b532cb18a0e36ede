"""First-order optimizers used for network training.

Adam follows the standard bias-corrected update.  L-BFGS uses the
two-loop recursion with a strong-Wolfe line search; a line-search
failure is not fatal, the best parameters seen so far are returned with
a flagged status.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    """Moment estimates and hyperparameters of one Adam run."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 2.5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps_stab: float = 1e-8


def adam_init(n_params, lr=2.5e-4, beta1=0.9, beta2=0.999, eps_stab=1e-8):
    return AdamState(np.zeros(n_params), np.zeros(n_params), 0,
                     lr, beta1, beta2, eps_stab)


def adam_step(state, params, grad):
    """One bias-corrected Adam update; returns (new_state, new_params)."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.m.shape or grad.shape != np.shape(params):
        raise ValueError("shape mismatch between state, params and gradient")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps_stab)
    new_state = AdamState(m, v, t, state.lr, state.beta1, state.beta2,
                          state.eps_stab)
    return new_state, new_params


@dataclass
class LbfgsResult:
    params: np.ndarray
    fun: float
    grad_norm: float
    n_iters: int
    converged: bool
    status: str = "converged"
    history: list = field(default_factory=list)


def _strong_wolfe(fun, x, f0, g0, direction, c1, c2, alpha_init=1.0,
                  max_evals=25):
    """Line search satisfying the strong Wolfe conditions.

    Returns (alpha, f, g) or None if no acceptable step was found.
    """
    dphi0 = float(g0 @ direction)
    if dphi0 >= 0.0:
        return None

    def phi(alpha):
        f, g = fun(x + alpha * direction)
        return f, g, float(g @ direction)

    def zoom(a_lo, a_hi, f_lo, dphi_lo, f_hi, budget):
        for _ in range(budget):
            # safeguarded quadratic step, bisection fallback
            d = a_hi - a_lo
            denom = f_hi - f_lo - dphi_lo * d
            a = a_lo + 0.5 * (-dphi_lo) * d * d / denom if denom != 0.0 else 0.0
            lo, hi = min(a_lo, a_hi), max(a_lo, a_hi)
            if not (lo + 0.1 * (hi - lo) <= a <= hi - 0.1 * (hi - lo)):
                a = 0.5 * (a_lo + a_hi)
            f, g, dphi = phi(a)
            if f > f0 + c1 * a * dphi0 or f >= f_lo:
                a_hi, f_hi = a, f
            else:
                if abs(dphi) <= -c2 * dphi0:
                    return a, f, g
                if dphi * (a_hi - a_lo) >= 0.0:
                    a_hi, f_hi = a_lo, f_lo
                a_lo, f_lo, dphi_lo = a, f, dphi
            if abs(a_hi - a_lo) < 1e-16 * max(1.0, abs(a_lo)):
                return None
        return None

    a_prev, f_prev, dphi_prev = 0.0, f0, dphi0
    alpha = alpha_init
    for i in range(max_evals):
        f, g, dphi = phi(alpha)
        if f > f0 + c1 * alpha * dphi0 or (i > 0 and f >= f_prev):
            return zoom(a_prev, alpha, f_prev, dphi_prev, f, max_evals)
        if abs(dphi) <= -c2 * dphi0:
            return alpha, f, g
        if dphi >= 0.0:
            return zoom(alpha, a_prev, f, dphi, f_prev, max_evals)
        a_prev, f_prev, dphi_prev = alpha, f, dphi
        alpha *= 2.0
    return None


def lbfgs_minimize(fun, x0, memory=10, max_iters=200, gtol=1e-8,
                   c1=1e-4, c2=0.9, callback=None):
    """Minimize fun(x) -> (value, gradient) by limited-memory BFGS.

    Parameters
    ----------
    fun : callable
        Returns the objective value and its gradient at x.
    x0 : ndarray
        Starting point.
    memory : int
        Number of (s, y) correction pairs retained.
    max_iters : int
        Iteration cap.
    gtol : float
        Terminate when the gradient max-norm drops below this.

    Returns
    -------
    LbfgsResult
        Best parameters seen; ``status`` is "line_search_failed" when the
        search stalled before meeting the tolerance.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = fun(x)
    best_x, best_f = x.copy(), f
    s_hist, y_hist, rho_hist = [], [], []
    status = "max_iterations"
    converged = False
    k = 0
    for k in range(1, max_iters + 1):
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= gtol:
            status, converged = "converged", True
            break
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_hist), reversed(y_hist),
                             reversed(rho_hist)):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if y_hist:
            gamma = (s_hist[-1] @ y_hist[-1]) / (y_hist[-1] @ y_hist[-1])
            q *= gamma
        for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist),
                                  reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        direction = -q

        step = _strong_wolfe(fun, x, f, g, direction, c1, c2)
        if step is None and y_hist:
            # retry along steepest descent with a fresh memory
            s_hist, y_hist, rho_hist = [], [], []
            step = _strong_wolfe(fun, x, f, g, -g, c1, c2,
                                 alpha_init=1.0 / max(1.0, np.linalg.norm(g)))
        if step is None:
            status, converged = "line_search_failed", False
            break
        alpha, f_new, g_new = step
        s = alpha * direction
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > memory:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)
        x = x + s
        f, g = f_new, g_new
        if f < best_f:
            best_f, best_x = f, x.copy()
        if callback is not None:
            callback(k, x, f, g)
    else:
        k = max_iters

    if f <= best_f:
        best_f, best_x = f, x
    return LbfgsResult(best_x, best_f, float(np.max(np.abs(g))), k,
                       converged, status)
