"""Invariant checks run by ``doublephase check`` on a single configuration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigen import SolverOptions, principal_eigenpair, rayleigh_quotient
from .energy import (
    EnergyParams,
    apply_r_operator,
    grad_rnorm,
    lr_norm,
    phi,
    phi_grad,
    phi_pairing,
)
from .mesh import DiscreteFunction, Mesh, cell_gradients
from .nehari import project, reduced_energy, solve_any
from .errors import NotProjectable


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.value = float(self.value)


def _random_functions(mesh: Mesh, rng, count: int):
    out = []
    while len(out) < count:
        u = DiscreteFunction(mesh, rng.standard_normal(mesh.size))
        if np.all(cell_gradients(u).norms()[mesh.active_cells] > 1e-3):
            out.append(u)
    return out


def run_checks(params: EnergyParams, mesh: Mesh, opts: SolverOptions | None = None,
               samples: int = 20) -> list[CheckResult]:
    opts = opts or SolverOptions()
    rng = np.random.default_rng(opts.seed)
    funcs = _random_functions(mesh, rng, samples)
    results = []

    worst = 0.0
    for u in funcs:
        t = rng.uniform(0.1, 10.0)
        for r in (params.p, params.q):
            for norm in (grad_rnorm, lr_norm):
                a, b = norm(t * u, r), t**r * norm(u, r)
                worst = max(worst, abs(a - b) / abs(b))
    results.append(CheckResult("homogeneity", worst <= 1e-12, worst, 1e-12))

    worst = 0.0
    for u in funcs:
        for r in (params.p, params.q):
            lhs = apply_r_operator(u, r, 0.0).inner(u)
            worst = max(worst, abs(lhs - grad_rnorm(u, r)) / grad_rnorm(u, r))
    results.append(CheckResult("green_identity", worst <= 1e-12, worst, 1e-12))

    exact = EnergyParams.for_harness(params.alpha, params.beta, params.p, params.q, params.lam)
    worst = 0.0
    for u in funcs:
        h = DiscreteFunction(mesh, rng.standard_normal(mesh.size))
        delta = 1e-6 * np.max(np.abs(u.values))
        fd = (phi(u + delta * h, exact) - phi(u - delta * h, exact)) / (2 * delta)
        an = phi_grad(u, exact).inner(h)
        worst = max(worst, abs(fd - an) / (1 + abs(phi(u, exact))))
    results.append(CheckResult("gradient_fd", worst <= 1e-6, worst, 1e-6))

    eig = principal_eigenpair(mesh, params.q, opts, params.eps_reg)
    worst = np.inf
    for u in funcs:
        worst = min(worst, (rayleigh_quotient(u, params.q) - eig.lam1) / eig.lam1)
    results.append(CheckResult("rayleigh_lower_bound", worst >= -1e-8, worst, -1e-8))

    if params.p < params.q:
        worst = 0.0
        for u in funcs:
            try:
                v = project(u, params)
            except NotProjectable:
                continue
            scale = params.alpha * grad_rnorm(v, params.p) + params.beta * grad_rnorm(v, params.q)
            worst = max(worst, abs(phi_pairing(v, params)) / scale)
        results.append(CheckResult("projection_root", worst <= 1e-12, worst, 1e-12))

    res = solve_any(params, mesh, opts, eig)
    results.append(CheckResult("weak_residual", res.weak_residual < 1e-6, res.weak_residual, 1e-6))
    if res.branch == "nehari":
        gap = abs(res.m_lambda - reduced_energy(res.u_hat, params)) / res.m_lambda
        results.append(CheckResult("reduced_energy_identity", gap <= 1e-8, gap, 1e-8))
        results.append(CheckResult("m_lambda_positive", res.m_lambda > 0, res.m_lambda, 0.0))
    else:
        results.append(CheckResult("m_lambda_negative", res.m_lambda < 0, res.m_lambda, 0.0))
    return results
