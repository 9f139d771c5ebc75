"""Damped least squares (Levenberg-Marquardt) with Marquardt diagonal scaling."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConvergenceError


@dataclass
class LMResult:
    params: np.ndarray
    cost: float                 # 0.5 * sum(residual**2)
    covariance: np.ndarray
    jacobian: np.ndarray
    residual: np.ndarray
    iterations: int
    converged_by: str
    cost_history: list = field(default_factory=list)


def levenberg_marquardt(residual, jacobian, p0, damping=1e-3, shrink=0.5, grow=4.0,
                        max_iter=500, ftol=1e-10, xtol=1e-12, max_damping=1e16):
    """Minimise 0.5*|residual(p)|^2.

    Each step solves (J^T J + lam*diag(J^T J)) dp = -J^T r. An accepted step
    multiplies ``lam`` by ``shrink``, a rejected one by ``grow``, so the cost
    never increases along ``cost_history``. Iteration stops when an accepted
    step changes the cost by less than ``ftol`` relative, or when the step is
    below ``xtol`` relative to the parameters.
    """
    p = np.array(p0, dtype=float)
    r = residual(p)
    cost = 0.5 * float(r @ r)
    history = [cost]
    lam = damping
    J = jacobian(p)
    converged_by = None
    it = 0
    while it < max_iter:
        it += 1
        JtJ = J.T @ J
        g = J.T @ r
        diag = np.diag(JtJ).copy()
        diag[diag <= 0] = 1.0
        while True:
            A = JtJ + lam * np.diag(diag)
            try:
                step = -np.linalg.solve(A, g)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(A, g, rcond=None)[0]
            p_new = p + step
            r_new = residual(p_new)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                break
            lam *= grow
            if lam > max_damping:
                converged_by = "stalled"
                break
        if converged_by == "stalled":
            break
        small_step = np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol)
        rel_change = (cost - cost_new) / cost if cost > 0 else 0.0
        p, r, cost = p_new, r_new, cost_new
        history.append(cost)
        lam = max(lam * shrink, 1e-15)
        J = jacobian(p)
        if cost == 0.0 or rel_change < ftol:
            converged_by = "ftol"
            break
        if small_step:
            converged_by = "xtol"
            break
    else:
        raise ConvergenceError(f"no convergence after {max_iter} iterations (cost {cost:.6g})",
                               best=p, cost=cost, iterations=it)

    m, n = J.shape
    JtJ = J.T @ J
    dof = max(m - n, 1)
    s2 = 2.0 * cost / dof
    try:
        cov = np.linalg.inv(JtJ) * s2
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(JtJ) * s2
    return LMResult(p, cost, cov, J, r, it, converged_by, history)
