"""
Augmented-Lagrangian solver for

    min 0.5 ||z_config - target||^2   s.t.   c(z) = 0,  g(z) <= 0

Inequalities enter as squared hinges (PHR form). Every subproblem is a
nonlinear least-squares problem solved with damped Gauss-Newton and a
backtracking line search.
"""

from dataclasses import dataclass

import numpy as np

from stability.residuals import BoundProgram
from stability.types import SolverSettings

_ARMIJO = 1e-4
_MIN_STEP = 1e-10
_LM_DAMPING = 1e-9


@dataclass
class SolveResult:
    z: np.ndarray
    converged: bool
    residual_norm: float   # max |c|
    max_violation: float   # max(0, g)
    grad_norm: float       # stationarity of the last subproblem
    outer_iterations: int
    inner_iterations: int


def _violations(c: np.ndarray, g: np.ndarray) -> tuple[float, float]:
    eq = float(np.max(np.abs(c))) if c.size else 0.0
    ineq = float(max(0.0, np.max(g))) if g.size else 0.0
    return eq, ineq


class _Subproblem:
    """0.5 ||r(z)||^2 for fixed multipliers and penalty."""

    def __init__(self, program: BoundProgram, target: np.ndarray, lam: np.ndarray, mu: np.ndarray, rho: float):
        self.program = program
        self.target = target
        self.lam = lam
        self.mu = mu
        self.rho = rho
        self.root = np.sqrt(rho)

    def _stack(self, z, c, g):
        shifted = g + self.mu / self.rho
        hinge = np.maximum(shifted, 0.0)
        residual = np.concatenate([z[:self.program.n_config] - self.target,
                                   self.root * (c + self.lam / self.rho),
                                   self.root * hinge])
        return residual, shifted > 0.0

    def merit(self, z: np.ndarray) -> float:
        c, g = self.program.constraints(z)
        residual, _ = self._stack(z, c, g)
        return 0.5 * float(residual @ residual)

    def linearize(self, z: np.ndarray):
        c, g, jc, jg = self.program.evaluate(z)
        residual, active = self._stack(z, c, g)
        selector = np.zeros((self.program.n_config, z.shape[0]))
        selector[:, :self.program.n_config] = np.eye(self.program.n_config)
        jacobian = np.vstack([selector, self.root * jc, self.root * jg * active[:, None]])
        return residual, jacobian


def _minimize(sub: _Subproblem, z: np.ndarray, settings: SolverSettings) -> tuple[np.ndarray, float, int]:
    """Damped Gauss-Newton on one subproblem. Returns (z, final gradient norm, iterations)."""
    grad_norm = np.inf
    for iteration in range(1, settings.max_inner + 1):
        residual, jacobian = sub.linearize(z)
        grad = jacobian.T @ residual
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm <= settings.grad_tol:
            return z, grad_norm, iteration
        hessian = jacobian.T @ jacobian
        damping = _LM_DAMPING * max(1.0, float(np.max(np.diag(hessian))))
        try:
            direction = np.linalg.solve(hessian + damping * np.eye(z.shape[0]), -grad)
        except np.linalg.LinAlgError:
            direction = np.linalg.lstsq(hessian, -grad, rcond=None)[0]

        merit = 0.5 * float(residual @ residual)
        slope = float(grad @ direction)
        t = 1.0
        while t >= _MIN_STEP:
            trial = z + t * direction
            if sub.merit(trial) <= merit + _ARMIJO * t * slope:
                break
            t *= 0.5
        else:
            # no decrease possible along the Gauss-Newton direction
            return z, grad_norm, iteration
        z = trial
        if t * np.max(np.abs(direction)) <= 1e-14 * (1.0 + np.max(np.abs(z))):
            return z, grad_norm, iteration
    return z, grad_norm, settings.max_inner


def solve_augmented_lagrangian(program: BoundProgram, z0: np.ndarray, target: np.ndarray,
                               settings: SolverSettings) -> SolveResult:
    """
    Run the outer multiplier/penalty loop.

    The start point is accepted as is when it is already feasible and the
    objective gradient vanishes there.
    """
    z = np.asarray(z0, dtype=float).copy()
    lam = np.zeros(program.n_eq)
    mu = np.zeros(program.n_ineq)
    rho = settings.initial_penalty

    c, g = program.constraints(z)
    eq, ineq = _violations(c, g)
    objective_grad = float(np.max(np.abs(z[:program.n_config] - target)))
    if eq <= settings.eq_tol and ineq <= settings.ineq_tol and objective_grad <= settings.grad_tol:
        return SolveResult(z, True, eq, ineq, objective_grad, 0, 0)

    previous = max(eq, ineq)
    inner_total = 0
    grad_norm = np.inf
    for outer in range(1, settings.max_outer + 1):
        z, grad_norm, inner = _minimize(_Subproblem(program, target, lam, mu, rho), z, settings)
        inner_total += inner
        c, g = program.constraints(z)
        eq, ineq = _violations(c, g)
        if eq <= settings.eq_tol and ineq <= settings.ineq_tol:
            return SolveResult(z, True, eq, ineq, grad_norm, outer, inner_total)

        lam = lam + rho * c
        mu = np.maximum(0.0, mu + rho * g)
        violation = max(eq, ineq)
        if violation > 0.5 * previous:
            if rho >= settings.max_penalty:
                # stalled at the largest penalty: the assignment has no equilibrium nearby
                return SolveResult(z, False, eq, ineq, grad_norm, outer, inner_total)
            rho = min(rho * settings.penalty_growth, settings.max_penalty)
        previous = violation
    return SolveResult(z, False, eq, ineq, grad_norm, settings.max_outer, inner_total)
