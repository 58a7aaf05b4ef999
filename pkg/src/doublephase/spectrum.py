"""Spectrum-level experiments: lambda scans, beta sweeps, half-line distances.

For p != q the spectrum of -alpha Delta_p - beta Delta_q is the open
half-line above beta * lambda1(q). With alpha = 1 - beta and q = 2 the
endpoint moves continuously in beta on (0, 1), while at beta = 1 the
operator is linear and its spectrum is the discrete sequence lambda_k(2).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .eigen import EigenPair, SolverOptions, linear_spectrum, principal_eigenpair
from .energy import DEFAULT_EPS, EnergyParams
from .errors import InfeasibleLambda, SolverError
from .mesh import Mesh
from .nehari import WEAK_ACCEPT, SolveResult, is_projectable, solve_any

log = logging.getLogger(__name__)


@dataclass
class ScanRow:
    lam: float
    feasible: bool
    m_lambda: Optional[float] = None
    weak_residual: Optional[float] = None
    error: str = ""


@dataclass
class SpectrumScan:
    alpha: float
    beta: float
    p: float
    q: float
    mesh: Mesh
    rows: list[ScanRow]
    threshold_estimate: Optional[float]
    threshold_predicted: float
    lam1: float
    # feasibility flips exactly once, from infeasible to feasible, or never
    monotone: bool = True
    # "below" when every row is feasible, "above" when none is
    threshold_outside_grid: str = ""
    anomalies: list[str] = field(default_factory=list)


@dataclass
class BetaEntry:
    beta: float
    alpha: float
    endpoint: float


@dataclass
class BetaSweep:
    p: float
    q: float
    mesh: Mesh
    lam1: float
    entries: list[BetaEntry]
    linear_spectrum_at_one: list[float]


def threshold(alpha, beta, p, q, mesh: Mesh, opts: SolverOptions | None = None,
              eps: float = DEFAULT_EPS) -> float:
    """beta * lambda1(q) on the given mesh; alpha and p do not enter."""
    EnergyParams(alpha, beta, p, q, 1.0, eps)
    return beta * principal_eigenpair(mesh, q, opts, eps).lam1


def is_feasible(result: SolveResult) -> bool:
    if not result.converged or not result.weak_residual < WEAK_ACCEPT:
        return False
    if result.branch == "nehari":
        return result.m_lambda > 0
    return result.m_lambda < 0


def solve_row(params: EnergyParams, mesh: Mesh, opts: SolverOptions, eig: EigenPair) -> ScanRow:
    try:
        res = solve_any(params, mesh, opts, eig)
    except InfeasibleLambda:
        return ScanRow(params.lam, False, error="InfeasibleLambda")
    except SolverError as exc:
        partial = getattr(exc, "result", None)
        if partial is not None:
            return ScanRow(params.lam, False, partial.m_lambda, partial.weak_residual,
                           type(exc).__name__)
        return ScanRow(params.lam, False, error=type(exc).__name__)
    return ScanRow(params.lam, is_feasible(res), res.m_lambda, res.weak_residual)


def scan_lambda(alpha, beta, p, q, mesh: Mesh, lambda_grid: Sequence[float],
                opts: SolverOptions | None = None, eps: float = DEFAULT_EPS,
                eig: EigenPair | None = None) -> SpectrumScan:
    """Solve on every grid value of lambda and locate the feasibility threshold.

    The flip between the last infeasible and first feasible grid value is
    refined by bisection on projectability of u1(q), which holds exactly for
    lambda above beta * lambda1(q).
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("lambda grid must be a non-empty 1-D sequence")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("lambda grid must be positive and strictly increasing")
    opts = opts or SolverOptions()
    base = EnergyParams(alpha, beta, p, q, float(grid[0]), eps)
    if eig is None:
        eig = principal_eigenpair(mesh, q, opts, eps)
    rows = [solve_row(base.with_lambda(float(lam)), mesh, opts, eig) for lam in grid]

    flags = [r.feasible for r in rows]
    flips = sum(a != b for a, b in zip(flags, flags[1:]))
    monotone = flips == 0 or (flips == 1 and not flags[0])
    anomalies = []
    if not monotone:
        anomalies.append(f"feasibility changes {flips} times along the grid")
        log.warning("non-monotone feasibility in lambda scan: %s", flags)

    estimate, outside = None, ""
    if all(flags):
        outside = "below"
    elif not any(flags):
        outside = "above"
    else:
        first = flags.index(True)
        lo = max((i for i in range(first) if not flags[i]), default=None)
        if lo is not None:
            estimate = _bisect_threshold(base, eig, grid[lo], grid[first], 1e-4 * eig.lam1)
    return SpectrumScan(alpha, beta, p, q, mesh, rows, estimate, beta * eig.lam1, eig.lam1,
                        monotone, outside, anomalies)


def _bisect_threshold(params: EnergyParams, eig: EigenPair, lo: float, hi: float,
                      tol: float) -> float:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if is_projectable(eig.u1, params.with_lambda(mid)):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def sweep_beta(p, q, mesh: Mesh, betas: Sequence[float], K: int = 0,
               opts: SolverOptions | None = None, eps: float = DEFAULT_EPS) -> BetaSweep:
    """Half-line endpoints beta * lambda1(q) for alpha = 1 - beta, plus the beta = 1 spectrum."""
    if K > 0 and q != 2:
        raise ValueError("the linear spectrum at beta = 1 is only available for q = 2")
    betas = [float(b) for b in betas]
    if any(not 0 < b < 1 for b in betas):
        raise ValueError("betas must lie in the open interval (0, 1)")
    EnergyParams(0.5, 0.5, p, q, 1.0, eps)
    lam1 = principal_eigenpair(mesh, q, opts, eps).lam1
    entries = [BetaEntry(b, 1.0 - b, b * lam1) for b in betas]
    at_one = linear_spectrum(mesh, K) if K > 0 else []
    return BetaSweep(p, q, mesh, lam1, entries, at_one)


def hausdorff_halfline(a: float, b: float) -> float:
    """Hausdorff distance between the half-lines (a, inf) and (b, inf)."""
    return abs(a - b)


@dataclass
class DiscontinuityWitness:
    lam_star: float
    gap: float
    distance_to_spectrum: float
    betas: list[float]
    feasible: list[bool]
    weak_residuals: list[Optional[float]]
    linear_spectrum: list[float]

    @property
    def holds(self) -> bool:
        return all(self.feasible) and self.distance_to_spectrum > self.gap / 4


def discontinuity_witness(p, mesh: Mesh, betas: Sequence[float], K: int = 3,
                          opts: SolverOptions | None = None,
                          eps: float = DEFAULT_EPS) -> DiscontinuityWitness:
    """Check that the midpoint of (lambda1(2), lambda2(2)) is an eigenvalue for beta < 1
    (with alpha = 1 - beta) but is far from every eigenvalue of the Laplacian."""
    if K < 2:
        raise ValueError("need at least two linear eigenvalues")
    opts = opts or SolverOptions()
    spec = linear_spectrum(mesh, K)
    lam_star = 0.5 * (spec[0] + spec[1])
    eig = principal_eigenpair(mesh, 2.0, opts, eps)
    rows = [
        solve_row(EnergyParams(1.0 - b, b, p, 2.0, lam_star, eps), mesh, opts, eig)
        for b in betas
    ]
    return DiscontinuityWitness(
        lam_star=lam_star,
        gap=spec[1] - spec[0],
        distance_to_spectrum=min(abs(lam_star - v) for v in spec),
        betas=[float(b) for b in betas],
        feasible=[r.feasible for r in rows],
        weak_residuals=[r.weak_residual for r in rows],
        linear_spectrum=spec,
    )
