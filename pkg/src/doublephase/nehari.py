"""Eigenfunctions of the double-phase problem as constrained energy minimizers.

For p < q the energy is minimized over the Nehari set, where it reduces to
alpha (1/p - 1/q) ||Du||_p^p. For q < p it is coercive and minimized
directly. Both branches start from the principal eigenfunction of the
q-Laplacian, whose projectability also decides feasibility of lambda.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu, spsolve

from .eigen import ROUNDING, EigenPair, SolverOptions, _sufficient_decrease, principal_eigenpair
from .energy import (
    EnergyParams,
    apply_r_operator,
    discrete_norm,
    grad_rnorm,
    lr_norm,
    operator_jacobian,
    phi,
    phi_grad,
    phi_pairing,
    signed_power,
    stiffness,
)
from .errors import InfeasibleLambda, NonConvergence, NotProjectable
from .mesh import DiscreteFunction, Mesh

log = logging.getLogger(__name__)

# acceptance level for the weak-form defect when the line search stalls
WEAK_ACCEPT = 1e-6


@dataclass
class SolveResult:
    u_hat: DiscreteFunction
    m_lambda: float
    constraint_residual: float
    weak_residual: float
    iterations: int
    converged: bool
    branch: str
    lam: float
    threshold: float
    sign_changes: int = 0
    # (phi, reduced objective) per accepted iterate; reduced is phi itself on the coercive branch
    trace: list[tuple[float, float]] = field(default_factory=list, repr=False)


def reduced_energy(u: DiscreteFunction, params: EnergyParams) -> float:
    """Energy on the Nehari set: alpha (1/p - 1/q) ||Du||_p^p."""
    return params.alpha * (1.0 / params.p - 1.0 / params.q) * grad_rnorm(u, params.p)


def constraint_residual(u: DiscreteFunction, params: EnergyParams) -> float:
    """|<phi'(u), u>| relative to the gradient terms."""
    scale = params.alpha * grad_rnorm(u, params.p) + params.beta * grad_rnorm(u, params.q)
    if scale == 0:
        raise ValueError("constraint residual undefined for the zero function")
    return abs(phi_pairing(u, params)) / scale


def projection_margin(u: DiscreteFunction, params: EnergyParams) -> float:
    """lambda ||u||_q^q - beta ||Du||_q^q; positive iff u can be scaled onto the Nehari set."""
    return params.lam * lr_norm(u, params.q) - params.beta * grad_rnorm(u, params.q)


def is_projectable(u: DiscreteFunction, params: EnergyParams) -> bool:
    """Positive projection margin, beyond rounding in lambda ||u||_q^q."""
    return projection_margin(u, params) > ROUNDING * params.lam * lr_norm(u, params.q)


def project(u: DiscreteFunction, params: EnergyParams) -> DiscreteFunction:
    """Scale u onto the Nehari set (p < q).

    The fibering map t -> <phi'(tu), tu> = t^p a - t^q c with a, c > 0 has a
    single positive root t0 = (a / c)^(1/(q-p)).
    """
    if not params.p < params.q:
        raise ValueError("Nehari projection needs p < q")
    if u.is_zero():
        raise ValueError("cannot project the zero function")
    a = params.alpha * grad_rnorm(u, params.p)
    c = projection_margin(u, params)
    if not is_projectable(u, params):
        raise NotProjectable(
            f"lambda*||u||_q^q - beta*||Du||_q^q = {c:.6g} <= 0: no positive root"
        )
    t0 = (a / c) ** (1.0 / (params.q - params.p))
    return u * t0


def verify_eigenpair(u: DiscreteFunction, params: EnergyParams) -> float:
    """Relative weak-form defect of (lambda, u), unregularized."""
    if u.is_zero():
        raise ValueError("eigenfunction must be nonzero")
    rhs = params.lam * signed_power(u, params.q)
    lhs = DiscreteFunction.zeros(u.mesh)
    if params.alpha:
        lhs = lhs + params.alpha * apply_r_operator(u, params.p, 0.0)
    if params.beta:
        lhs = lhs + params.beta * apply_r_operator(u, params.q, 0.0)
    return discrete_norm(lhs - rhs) / discrete_norm(rhs)


def sign_changes(u: DiscreteFunction) -> int:
    """Adjacent node pairs (along each axis) with strictly opposite signs."""
    s = np.sign(u.values).reshape(tuple(reversed(u.mesh.n)))
    count = 0
    for axis in range(s.ndim):
        a = np.moveaxis(s, axis, 0)
        count += int(np.sum(a[1:] * a[:-1] < 0))
    return count


def _check_public(params: EnergyParams):
    if params.harness:
        raise ValueError("harness parameters (alpha or beta = 0) are not accepted by solvers")


def _principal_q(params, mesh, opts, eig):
    if eig is None:
        return principal_eigenpair(mesh, params.q, opts, params.eps_reg)
    if eig.r != params.q or eig.u1.mesh != mesh:
        raise ValueError("supplied eigenpair does not match q and mesh")
    return eig


def _restart_inits(u1: DiscreteFunction, opts: SolverOptions):
    yield u1
    rng = np.random.default_rng(opts.seed)
    for _ in range(opts.restarts - 1):
        yield DiscreteFunction(u1.mesh, u1.values * rng.uniform(0.5, 1.5, u1.mesh.size))


def solve(
    params: EnergyParams, mesh: Mesh, opts: SolverOptions | None = None, eig: EigenPair | None = None
) -> SolveResult:
    """Minimize the energy over the Nehari set (p < q)."""
    _check_public(params)
    if not params.p < params.q:
        raise ValueError("the Nehari branch needs p < q; use solve_coercive for q < p")
    opts = opts or SolverOptions()
    eig = _principal_q(params, mesh, opts, eig)
    threshold = params.beta * eig.lam1
    if not is_projectable(eig.u1, params):
        raise InfeasibleLambda(
            f"lambda={params.lam:.10g} is not above beta*lambda1(q)={threshold:.10g}", threshold
        )
    best = None
    for init in _restart_inits(eig.u1, opts):
        try:
            start = project(init, params)
        except NotProjectable:
            continue
        res = _descend(start, params, opts, threshold, nehari=True)
        if best is None or (res.converged, -res.m_lambda) > (best.converged, -best.m_lambda):
            best = res
    return _finish(best)


def solve_coercive(
    params: EnergyParams, mesh: Mesh, opts: SolverOptions | None = None, eig: EigenPair | None = None
) -> SolveResult:
    """Minimize the coercive energy directly (q < p)."""
    _check_public(params)
    if not params.q < params.p:
        raise ValueError("the coercive branch needs q < p; use solve for p < q")
    opts = opts or SolverOptions()
    eig = _principal_q(params, mesh, opts, eig)
    threshold = params.beta * eig.lam1
    best = None
    for init in _restart_inits(eig.u1, opts):
        start = _negative_start(init, params)
        if start is None:
            if best is None:
                raise InfeasibleLambda(
                    f"phi >= 0 along u1(q): lambda={params.lam:.10g} is not above "
                    f"beta*lambda1(q)={threshold:.10g}",
                    threshold,
                )
            continue
        res = _descend(start, params, opts, threshold, nehari=False)
        if best is None or (res.converged, -res.m_lambda) > (best.converged, -best.m_lambda):
            best = res
    return _finish(best)


def solve_any(params, mesh, opts=None, eig=None) -> SolveResult:
    """Dispatch on the exponent order."""
    if params.p < params.q:
        return solve(params, mesh, opts, eig)
    return solve_coercive(params, mesh, opts, eig)


def _negative_start(u: DiscreteFunction, params: EnergyParams):
    # phi(t u) = t^p a/p - t^q c/q; its minimizer over t > 0 is t = (c/a)^(1/(p-q))
    if not is_projectable(u, params):
        return None
    c = projection_margin(u, params)
    a = params.alpha * grad_rnorm(u, params.p)
    t = (c / a) ** (1.0 / (params.p - params.q))
    start = u * t
    return start if phi(start, params) < 0 else None


def _descend(u, params, opts, threshold, nehari):
    """Armijo descent in the metric of the frozen-coefficient operator Hessian."""
    mesh = u.mesh
    mu = mesh.node_measure
    metric = {params.p: params.alpha * (params.p - 1), params.q: params.beta * (params.q - 1)}

    def objective(v):
        return reduced_energy(v, params) if nehari else phi(v, params)

    f = objective(u)
    trace = [(phi(u, params), f)]
    decrease = np.inf
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        weak = verify_eigenpair(u, params)
        if decrease < opts.tol:
            # energy stagnated; the polish below handles a remaining weak defect
            converged = weak <= opts.weak_tol
            break
        g = phi_grad(u, params)
        H = stiffness(u, metric)
        d = DiscreteFunction(mesh, -mu * splu(H).solve(g.values))
        slope = mu * float(g.values @ d.values)
        if not slope < 0:
            converged = weak <= WEAK_ACCEPT
            break
        step = opts.step0
        accepted = None
        while step >= 1e-14:
            try:
                trial = u + step * d
                if nehari:
                    trial = project(trial, params)
                f_trial = objective(trial)
                if _sufficient_decrease(f_trial, f, opts.armijo * step * slope):
                    accepted = trial
                    break
            except (NotProjectable, ValueError):
                pass
            step *= opts.backtrack
        if accepted is None:
            # stalled at working precision
            converged = weak <= WEAK_ACCEPT
            break
        u = accepted
        decrease = (f - f_trial) / abs(f) if f else 0.0
        f = f_trial
        trace.append((phi(u, params), f))
    else:
        it = opts.max_iter
    if verify_eigenpair(u, params) > opts.weak_tol:
        u, extra = _polish(u, params, nehari, opts.weak_tol)
        it += extra
        weak = verify_eigenpair(u, params)
        converged = weak <= WEAK_ACCEPT
        if extra:
            trace.append((phi(u, params), objective(u)))
    m = phi(u, params)
    return SolveResult(
        u_hat=u,
        m_lambda=m,
        constraint_residual=constraint_residual(u, params),
        weak_residual=verify_eigenpair(u, params),
        iterations=it,
        converged=converged,
        branch="nehari" if nehari else "coercive",
        lam=params.lam,
        threshold=threshold,
        sign_changes=sign_changes(u),
        trace=trace,
    )


def _polish(u, params, nehari, target, max_steps=50):
    """Damped Newton on the unregularized weak form, accepting residual decrease only.

    Energy descent cannot resolve defects in cells where the p-flux is
    non-smooth; the Newton system sees them directly. On the Nehari branch
    each iterate is reprojected (the critical point lies on the Nehari set).
    """
    mesh = u.mesh
    mu = mesh.node_measure
    exact = EnergyParams.for_harness(params.alpha, params.beta, params.p, params.q, params.lam)
    weak = verify_eigenpair(u, params)
    steps = 0
    for steps in range(1, max_steps + 1):
        F = phi_grad(u, exact)
        J = params.alpha * operator_jacobian(u, params.p) + params.beta * operator_jacobian(u, params.q)
        mass = params.lam * (params.q - 1) * mu * np.abs(u.values) ** (params.q - 2)
        J = (J - sp.diags(mass)).tocsc()
        delta = spsolve(J, -mu * F.values)
        if not np.all(np.isfinite(delta)):
            break
        step, improved = 1.0, False
        while step >= 1.0 / 64:
            try:
                trial = u + step * DiscreteFunction(mesh, delta)
                if nehari:
                    trial = project(trial, params)
                w = verify_eigenpair(trial, params)
            except (NotProjectable, ValueError):
                w = np.inf
            if w < weak:
                u, weak, improved = trial, w, True
                break
            step /= 2
        if not improved or weak <= target:
            break
    return u, steps


def _finish(res: SolveResult) -> SolveResult:
    if not res.converged:
        raise NonConvergence(
            f"{res.branch} solve not converged after {res.iterations} iterations "
            f"(weak residual {res.weak_residual:.3e})",
            res,
        )
    log.debug("%s: m=%.12g weak=%.3e iters=%d", res.branch, res.m_lambda, res.weak_residual, res.iterations)
    return res
