"""Principal eigenpair of the discrete r-Laplacian and the linear spectrum."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import splu

from .energy import (
    DEFAULT_EPS,
    apply_r_operator,
    discrete_norm,
    grad_rnorm,
    lr_norm,
    signed_power,
    stiffness,
)
from .errors import NonConvergence
from .mesh import DiscreteFunction, Mesh, bump

log = logging.getLogger(__name__)

ROUNDING = 8 * np.finfo(float).eps


@dataclass
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 50000
    step0: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    seed: int = 0
    restarts: int = 1
    weak_tol: float = 1e-8

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtracking factor must lie in (0, 1)")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")


@dataclass
class EigenPair:
    r: float
    lam1: float
    u1: DiscreteFunction
    iterations: int
    residual: float
    converged: bool = True
    trace: list[float] = field(default_factory=list, repr=False)


def rayleigh_quotient(u: DiscreteFunction, r: float) -> float:
    denom = lr_norm(u, r)
    if denom == 0:
        raise ValueError("Rayleigh quotient undefined for the zero function")
    return grad_rnorm(u, r) / denom


def normalize(u: DiscreteFunction, r: float) -> DiscreteFunction:
    """Scale to unit L^r norm with positive nodal sum."""
    scale = lr_norm(u, r) ** (1.0 / r)
    if np.sum(u.values) < 0:
        scale = -scale
    return u * (1.0 / scale)


def eigen_residual(u: DiscreteFunction, r: float, lam: float, eps: float = 0.0) -> float:
    return discrete_norm(apply_r_operator(u, r, eps) - lam * signed_power(u, r, eps))


def _sufficient_decrease(f_trial: float, f: float, predicted: float) -> bool:
    """Armijo test that stays meaningful once f stops resolving the decrease."""
    if f_trial <= f + predicted:
        return True
    # predicted change below a few ulps of f: accept any non-increase up to rounding
    slack = ROUNDING * abs(f)
    return -predicted < slack and f_trial <= f + slack


def principal_eigenpair(
    mesh: Mesh, r: float, opts: SolverOptions | None = None, eps: float = DEFAULT_EPS
) -> EigenPair:
    """Minimize the Rayleigh quotient by preconditioned projected descent.

    Each step moves along -H^{-1} grad R, where H = (r-1) K and K is the
    frozen-coefficient r-Laplacian at the current iterate (H is the Hessian
    of the gradient term). Armijo backtracking keeps R non-increasing.
    Iterates are renormalized to unit L^r norm.
    """
    if not r > 1:
        raise ValueError(f"exponent must exceed 1, got {r}")
    opts = opts or SolverOptions()
    mu = mesh.node_measure
    u = normalize(bump(mesh), r)
    R = rayleigh_quotient(u, r)
    trace = [R]
    res = np.inf
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        A = apply_r_operator(u, r, eps)
        s = signed_power(u, r, eps)
        L = lr_norm(u, r)
        defect = A - R * s
        res = discrete_norm(defect)
        # mu-weighted gradient of R is r * defect / L
        K = stiffness(u, {r: r - 1.0})
        d = -mu * splu(K).solve(defect.values)
        slope = r / L * mu * float(defect.values @ d)
        if slope >= 0:
            break
        step = opts.step0
        while True:
            trial = u + step * DiscreteFunction(mesh, d)
            if not trial.is_zero():
                R_trial = rayleigh_quotient(trial, r)
                if _sufficient_decrease(R_trial, R, opts.armijo * step * slope):
                    break
            step *= opts.backtrack
            if step < 1e-14:
                trial = None
                break
        if trial is None:
            # no decrease possible at working precision
            converged = res <= 1e-8 * R
            break
        u = normalize(trial, r)
        R_new = rayleigh_quotient(u, r)
        decrease = (R - R_new) / R
        R = R_new
        trace.append(R)
        if decrease < opts.tol:
            res = eigen_residual(u, r, R, eps)
            if res <= 1e-8 * R:
                converged = True
                break
    res = eigen_residual(u, r, R, eps)
    pair = EigenPair(r, R, u, it, res, converged, trace)
    if not converged:
        raise NonConvergence(
            f"principal eigenpair for r={r} not converged after {it} iterations "
            f"(residual {res:.3e})",
            pair,
        )
    if not np.all(u.values > 0):
        raise NonConvergence("principal eigenfunction is not strictly positive", pair)
    log.debug("r=%g lam1=%.12g after %d iterations", r, R, it)
    return pair


def linear_spectrum(mesh: Mesh, K: int) -> list[float]:
    """K smallest Dirichlet Laplacian eigenvalues on the grid, from the closed form."""
    if not 1 <= K <= mesh.size:
        raise ValueError(f"K must lie in [1, {mesh.size}], got {K}")
    per_axis = []
    for k, h, a in zip(mesh.n, mesh.h, mesh.extent):
        j = np.arange(1, k + 1)
        per_axis.append(4.0 / h**2 * np.sin(j * np.pi * h / (2 * a)) ** 2)
    if mesh.dim == 1:
        vals = per_axis[0]
    else:
        vals = np.add.outer(per_axis[1], per_axis[0]).ravel()
    return [float(v) for v in np.sort(vals)[:K]]
