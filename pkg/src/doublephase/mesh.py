"""Uniform tensor grids on intervals and rectangles with zero Dirichlet data.

Only interior nodes carry unknowns. Nodes are ordered lexicographically
with x fastest; cells are ordered the same way by their lower-left corner.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Mesh:
    dim: int
    n: tuple[int, ...]
    extent: tuple[float, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if len(self.n) != self.dim or len(self.extent) != self.dim:
            raise ValueError("n and extent need one entry per axis")
        for k in self.n:
            if int(k) != k or k < 1:
                raise ValueError(f"interior node count must be a positive integer, got {k}")
        for a in self.extent:
            if not a > 0:
                raise ValueError(f"extent must be positive, got {a}")

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(a / (k + 1) for a, k in zip(self.extent, self.n))

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def ncells(self) -> int:
        return int(np.prod([k + 1 for k in self.n]))

    @property
    def node_measure(self) -> float:
        return float(np.prod(self.h))

    # one cell per interior-node spacing, same measure as a node
    cell_measure = node_measure

    def axis_coords(self, axis: int) -> np.ndarray:
        k, hk = self.n[axis], self.h[axis]
        return hk * np.arange(1, k + 1)

    def coordinates(self) -> np.ndarray:
        """Interior node coordinates, shape (size, dim), x fastest."""
        if self.dim == 1:
            return self.axis_coords(0)[:, None]
        X, Y = np.meshgrid(self.axis_coords(0), self.axis_coords(1), indexing="xy")
        return np.column_stack([X.ravel(), Y.ravel()])

    @cached_property
    def difference_operators(self) -> tuple[sp.csr_matrix, ...]:
        """Sparse maps from interior values to per-cell forward differences."""
        if self.dim == 1:
            return (_forward_difference(self.n[0], self.h[0]),)
        nx, ny = self.n
        hx, hy = self.h
        # the cell at corner (i, j) reads nodes (i, j), (i+1, j), (i, j+1)
        gx = sp.kron(_corner_selector(ny), _forward_difference(nx, hx))
        gy = sp.kron(_forward_difference(ny, hy), _corner_selector(nx))
        return (gx.tocsr(), gy.tocsr())


    @cached_property
    def active_cells(self) -> np.ndarray:
        """Mask of cells whose stencil touches an interior node.

        In 2D the cell at the domain's lower-left corner reads only boundary
        values, so its gradient vanishes identically.
        """
        touched = np.zeros(self.ncells, dtype=bool)
        for D in self.difference_operators:
            touched |= np.diff(D.indptr) > 0
        return touched


def _forward_difference(n: int, h: float) -> sp.csr_matrix:
    # (n+1) x n; row c is (u_{c+1} - u_c)/h with u_0 = u_{n+1} = 0
    ones = np.ones(n)
    return sp.diags([ones, -ones], [0, -1], shape=(n + 1, n), format="csr") / h


def _corner_selector(n: int) -> sp.csr_matrix:
    # (n+1) x n; cell row c reads interior node c (node 0 is boundary)
    return sp.eye(n + 1, n, k=-1, format="csr")


def build_mesh(dim: int, n, extent=None) -> Mesh:
    """Build a uniform mesh; `n` and `extent` may be scalars or per-axis sequences."""
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    ns = _per_axis(n, dim, "n")
    if extent is None:
        extent = 1.0
    ext = tuple(float(a) for a in _per_axis(extent, dim, "extent"))
    return Mesh(dim, tuple(int(k) if int(k) == k else k for k in ns), ext)


def _per_axis(value, dim: int, name: str) -> tuple:
    if isinstance(value, (int, float, np.integer, np.floating)):
        return (value,) * dim
    value = tuple(value)
    if len(value) == 1:
        return value * dim
    if len(value) != dim:
        raise ValueError(f"{name} needs {dim} entries, got {len(value)}")
    return value


@dataclass(frozen=True, eq=False)
class DiscreteFunction:
    """Interior nodal values of a field that vanishes on the boundary."""

    mesh: Mesh
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.size,):
            raise ValueError(
                f"expected {self.mesh.size} interior values, got shape {v.shape}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, mesh: Mesh) -> DiscreteFunction:
        return cls(mesh, np.zeros(mesh.size))

    @classmethod
    def from_callable(cls, mesh: Mesh, f) -> DiscreteFunction:
        x = mesh.coordinates()
        return cls(mesh, f(*x.T))

    def _wrap(self, values) -> DiscreteFunction:
        return DiscreteFunction(self.mesh, values)

    def __add__(self, other: DiscreteFunction) -> DiscreteFunction:
        return self._wrap(self.values + other.values)

    def __sub__(self, other: DiscreteFunction) -> DiscreteFunction:
        return self._wrap(self.values - other.values)

    def __mul__(self, t: float) -> DiscreteFunction:
        return self._wrap(t * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> DiscreteFunction:
        return self._wrap(-self.values)

    def inner(self, other: DiscreteFunction) -> float:
        """Discrete L2 pairing with the nodal quadrature weight."""
        return self.mesh.node_measure * float(self.values @ other.values)

    def is_zero(self) -> bool:
        return not np.any(self.values)


class CellGradients(NamedTuple):
    vectors: np.ndarray  # (ncells, dim)
    measure: float

    def norms(self) -> np.ndarray:
        if self.vectors.shape[1] == 1:
            return np.abs(self.vectors[:, 0])
        return np.sqrt(np.sum(self.vectors**2, axis=1))


def cell_gradients(u: DiscreteFunction) -> CellGradients:
    ops = u.mesh.difference_operators
    g = np.column_stack([D @ u.values for D in ops])
    return CellGradients(g, u.mesh.cell_measure)


def bump(mesh: Mesh) -> DiscreteFunction:
    """Positive product-of-sines profile sampled at interior nodes."""
    vals = np.ones(mesh.size)
    x = mesh.coordinates()
    for axis, a in enumerate(mesh.extent):
        vals = vals * np.sin(np.pi * x[:, axis] / a)
    return DiscreteFunction(mesh, vals)


def as_function(mesh: Mesh, values: Sequence[float]) -> DiscreteFunction:
    return DiscreteFunction(mesh, np.asarray(values, dtype=float))
