"""Discrete norms, the double-phase energy and its derivatives.

Energies use exact powers of the cell gradients. The regularization width
``eps`` enters only the assembled fluxes ``(|g|^2 + eps^2)^((r-2)/2) g``
and the lower-order term ``|u|^(q-2) u`` when ``q < 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import DiscreteFunction, cell_gradients

DEFAULT_EPS = 1e-8


@dataclass(frozen=True)
class EnergyParams:
    alpha: float
    beta: float
    p: float
    q: float
    lam: float
    eps_reg: float = DEFAULT_EPS
    # relaxes alpha/beta > 0 and p != q; only verification utilities build these
    harness: bool = False

    def __post_init__(self):
        for name in ("p", "q"):
            if not getattr(self, name) > 1:
                raise ValueError(f"{name} must lie in (1, inf), got {getattr(self, name)}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.eps_reg >= 0:
            raise ValueError(f"eps_reg must be nonnegative, got {self.eps_reg}")
        if self.harness:
            if self.alpha < 0 or self.beta < 0:
                raise ValueError("harness weights must be nonnegative")
            return
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if self.p == self.q:
            raise ValueError("exponents must satisfy p ≠ q")

    @classmethod
    def for_harness(cls, alpha, beta, p, q, lam, eps_reg=0.0) -> EnergyParams:
        return cls(alpha, beta, p, q, lam, eps_reg, harness=True)

    def with_lambda(self, lam: float) -> EnergyParams:
        return EnergyParams(self.alpha, self.beta, self.p, self.q, lam, self.eps_reg, self.harness)


def _check_exponent(r: float):
    if not r > 1:
        raise ValueError(f"exponent must exceed 1, got {r}")


def grad_rnorm(u: DiscreteFunction, r: float) -> float:
    """Sum over cells of measure * |grad u|^r (no root taken)."""
    _check_exponent(r)
    cg = cell_gradients(u)
    return cg.measure * float(np.sum(cg.norms() ** r))


def lr_norm(u: DiscreteFunction, r: float) -> float:
    """Nodal quadrature of |u|^r; returns the r-th power of the norm."""
    if not r >= 1:
        raise ValueError(f"exponent must be at least 1, got {r}")
    return u.mesh.node_measure * float(np.sum(np.abs(u.values) ** r))


def phi(u: DiscreteFunction, params: EnergyParams) -> float:
    a, b, p, q = params.alpha, params.beta, params.p, params.q
    return a / p * grad_rnorm(u, p) + b / q * grad_rnorm(u, q) - params.lam / q * lr_norm(u, q)


def phi_pairing(u: DiscreteFunction, params: EnergyParams) -> float:
    """<phi'(u), u>; vanishes exactly on the Nehari set."""
    return (
        params.alpha * grad_rnorm(u, params.p)
        + params.beta * grad_rnorm(u, params.q)
        - params.lam * lr_norm(u, params.q)
    )


def _power_weight(s: np.ndarray, r: float, eps: float) -> np.ndarray:
    # weight w with flux w*g; at s = 0 and eps = 0 the flux limit is 0 for r > 1
    if eps > 0:
        return (s * s + eps * eps) ** ((r - 2) / 2)
    if r == 2:
        return np.ones_like(s)
    out = np.zeros_like(s)
    nz = s > 0
    out[nz] = s[nz] ** (r - 2)
    return out


def apply_r_operator(u: DiscreteFunction, r: float, eps: float = 0.0) -> DiscreteFunction:
    """Nodal representative of the r-Laplacian -div(|Du|^(r-2) Du)."""
    _check_exponent(r)
    mesh = u.mesh
    cg = cell_gradients(u)
    w = cg.measure * _power_weight(cg.norms(), r, eps)
    out = np.zeros(mesh.size)
    for k, D in enumerate(mesh.difference_operators):
        out += D.T @ (w * cg.vectors[:, k])
    return DiscreteFunction(mesh, out / mesh.node_measure)


def signed_power(u: DiscreteFunction, r: float, eps: float = 0.0) -> DiscreteFunction:
    """|u|^(r-2) u, regularized for r < 2."""
    v = u.values
    if r >= 2:
        return DiscreteFunction(u.mesh, np.abs(v) ** (r - 2) * v)
    return DiscreteFunction(u.mesh, _power_weight(np.abs(v), r, eps) * v)


def phi_grad(u: DiscreteFunction, params: EnergyParams) -> DiscreteFunction:
    eps = params.eps_reg
    return (
        params.alpha * apply_r_operator(u, params.p, eps)
        + params.beta * apply_r_operator(u, params.q, eps)
        - params.lam * signed_power(u, params.q, eps)
    )


def discrete_norm(u: DiscreteFunction) -> float:
    return float(np.sqrt(u.inner(u)))


def stiffness(u: DiscreteFunction, weights: dict[float, float], floor: float = 1e-4) -> sp.csc_matrix:
    """Frozen-coefficient SPD matrix sum_r c_r D^T diag(m w_r) D.

    ``weights`` maps exponent r to its coefficient. Cell weights use
    (|g|^2 + delta^2)^((r-2)/2) with delta = floor * rms(|g|), so the
    matrix stays definite where the gradient vanishes. Used as a metric for
    descent steps, never for energies.
    """
    mesh = u.mesh
    cg = cell_gradients(u)
    s = cg.norms()
    rms = float(np.sqrt(np.mean(s * s)))
    delta = floor * rms if rms > 0 else 1.0
    w = np.zeros_like(s)
    for r, c in weights.items():
        if c:
            w += c * (s * s + delta * delta) ** ((r - 2) / 2)
    W = sp.diags(cg.measure * w)
    K = None
    for D in mesh.difference_operators:
        term = D.T @ W @ D
        K = term if K is None else K + term
    return K.tocsc()


def operator_jacobian(u: DiscreteFunction, r: float, floor: float = 1e-12) -> sp.csc_matrix:
    """Derivative of ``node_measure * apply_r_operator(u, r, 0)`` in the nodal values.

    The flux |g|^(r-2) g has derivative |g|^(r-2) (I + (r-2) g g^T / |g|^2);
    cells with vanishing gradient get a width floor * rms(|g|) to stay finite.
    """
    mesh = u.mesh
    cg = cell_gradients(u)
    s = cg.norms()
    rms = float(np.sqrt(np.mean(s * s)))
    d2 = (floor * rms if rms > 0 else 1.0) ** 2
    den = s * s + d2
    live = den > 0
    den = np.where(live, den, 1.0)
    base = np.where(live, den ** ((r - 2) / 2), 0.0)
    ops = mesh.difference_operators
    J = None
    for a, Da in enumerate(ops):
        for b, Db in enumerate(ops):
            coef = (r - 2) * cg.vectors[:, a] * cg.vectors[:, b] / den
            if a == b:
                coef = coef + 1.0
            term = Da.T @ sp.diags(cg.measure * base * coef) @ Db
            J = term if J is None else J + term
    return J.tocsc()
