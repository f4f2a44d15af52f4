"""Uniform tensor grids, trapezoidal quadrature and finite-difference operators.

Every field lives on a :class:`Grid`, a box ``center + [-R, R]^N`` sampled with
an odd number of nodes per axis so that the box center is itself a node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "build_grid",
    "sample",
    "integrate",
    "gradient",
    "laplacian",
    "laplacian4",
    "edge_energy",
    "edge_inner",
    "zero_boundary",
    "boundary_mask",
]


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform tensor grid on ``center + [-R, R]^N`` with ``M`` nodes per axis."""

    N: int
    R: float
    M: int
    center: tuple[float, ...] = ()
    axis: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.N not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.N}")
        if not self.R > 0:
            raise ValueError(f"radius must be positive, got {self.R}")
        if self.M < 3 or self.M % 2 == 0:
            raise ValueError(f"nodes per axis must be odd and >= 3, got {self.M}")
        center = tuple(float(c) for c in self.center) or (0.0,) * self.N
        if len(center) != self.N:
            raise ValueError("center has the wrong dimension")
        object.__setattr__(self, "center", center)
        lin = np.linspace(-self.R, self.R, self.M)
        axis = 0.5 * (lin - lin[::-1])  # exactly antisymmetric about the center
        w1 = np.full(self.M, self.h)
        w1[0] = w1[-1] = 0.5 * self.h
        w = w1
        for _ in range(self.N - 1):
            w = np.multiply.outer(w, w1)
        axis.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "weights", w)

    @property
    def h(self) -> float:
        return 2.0 * self.R / (self.M - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) * self.N

    @property
    def size(self) -> int:
        return self.M**self.N

    @property
    def origin_index(self) -> tuple[int, ...]:
        return (self.M // 2,) * self.N

    def offsets(self) -> np.ndarray:
        """Node positions relative to the box center, shape ``(*shape, N)``."""
        mesh = np.meshgrid(*([self.axis] * self.N), indexing="ij")
        return np.stack(mesh, axis=-1)

    def points(self) -> np.ndarray:
        """Absolute node coordinates, shape ``(*shape, N)``."""
        return self.offsets() + np.asarray(self.center)

    def refine(self) -> "Grid":
        """Same box with half the spacing."""
        return Grid(self.N, self.R, 2 * self.M - 1, self.center)

    def enlarge(self, factor: int = 2) -> "Grid":
        """Box of radius ``factor * R`` at the same spacing."""
        return Grid(self.N, factor * self.R, factor * (self.M - 1) + 1, self.center)

    def describe(self) -> dict:
        return {"N": self.N, "R": self.R, "M": self.M, "h": self.h, "center": list(self.center)}

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (self.N, self.R, self.M, self.center) == (other.N, other.R, other.M, other.center)

    def __hash__(self):
        return hash((self.N, self.R, self.M, self.center))


def build_grid(N: int, R: float, M: int, center: Sequence[float] = ()) -> Grid:
    return Grid(int(N), float(R), int(M), tuple(center))


def _check_finite(values: np.ndarray, grid: Grid, what: str):
    bad = ~np.isfinite(values)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        x = grid.points()[idx]
        raise ValueError(f"non-finite {what} at node {idx}, x = {x.tolist()}")


class ScalarField:
    """Node values of a real function on a grid.

    Supports the arithmetic needed to combine fields living on the same grid.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            values = np.broadcast_to(values, grid.shape)
        _check_finite(values, grid, "field value")
        values = np.array(values, dtype=float)
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def _other(self, other):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._other(other))

    def __rsub__(self, other):
        return self.with_values(self._other(other) - self.values)

    def __mul__(self, other):
        return self.with_values(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.with_values(self.values / self._other(other))

    def __neg__(self):
        return self.with_values(-self.values)

    def __abs__(self):
        return self.with_values(np.abs(self.values))

    def __pow__(self, exponent):
        return self.with_values(self.values**exponent)

    def __repr__(self):
        return f"ScalarField(grid={self.grid!r}, max|u|={np.abs(self.values).max():.3g})"


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    components: np.ndarray  # shape (N, *grid.shape)

    def __post_init__(self):
        if self.components.shape != (self.grid.N, *self.grid.shape):
            raise ValueError("component array has the wrong shape")
        if not np.isfinite(self.components).all():
            raise ValueError("non-finite vector component")

    def norm_squared(self) -> ScalarField:
        return ScalarField(self.grid, np.sum(self.components**2, axis=0))

    def dot(self, other: "VectorField") -> ScalarField:
        return ScalarField(self.grid, np.sum(self.components * other.components, axis=0))


def sample(f: Callable[[np.ndarray], np.ndarray], g: Grid) -> ScalarField:
    """Evaluate ``f`` at the grid nodes; ``f`` maps ``(..., N)`` points to values."""
    values = np.asarray(f(g.points()), dtype=float)
    values = np.broadcast_to(values, g.shape)
    _check_finite(values, g, "sample")
    return ScalarField(g, values)


def integrate(f: ScalarField) -> float:
    return float(np.sum(f.grid.weights * f.values))


def gradient(u: ScalarField) -> VectorField:
    # central differences inside, second-order one-sided at the faces
    g = u.grid
    parts = np.gradient(u.values, g.h, edge_order=2)
    if g.N == 1:
        parts = [parts]
    return VectorField(g, np.stack(parts))


def _padded(values: np.ndarray, width: int = 1) -> np.ndarray:
    return np.pad(values, width, mode="constant")


def laplacian(u: ScalarField) -> ScalarField:
    """(2N+1)-point Laplacian; values outside the box are zero."""
    g = u.grid
    p = _padded(u.values)
    inner = tuple(slice(1, -1) for _ in range(g.N))
    out = -2.0 * g.N * u.values
    for ax in range(g.N):
        lo = list(inner)
        hi = list(inner)
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        out = out + p[tuple(lo)] + p[tuple(hi)]
    return ScalarField(g, out / g.h**2)


def laplacian4(u: ScalarField) -> ScalarField:
    """Fourth-order 4N+1 point Laplacian, zero extension outside the box.

    Used as an independent, higher-order residual probe for fields computed
    with the standard stencil.
    """
    g = u.grid
    p = _padded(u.values, 2)
    inner = tuple(slice(2, -2) for _ in range(g.N))
    out = -2.5 * g.N * u.values
    for ax in range(g.N):
        for shift, coef in ((1, 4.0 / 3.0), (2, -1.0 / 12.0)):
            for sgn in (-1, 1):
                sl = list(inner)
                start = 2 + sgn * shift
                sl[ax] = slice(start, start + g.M)
                out = out + coef * p[tuple(sl)]
    return ScalarField(g, out / g.h**2)


def edge_energy(u: ScalarField) -> float:
    """Discrete ``int |grad u|^2`` from squared differences along grid edges.

    Only edges inside the box are summed. For fields vanishing on the faces
    its variation in a direction that also vanishes there is exactly
    ``-2 * laplacian(u)`` against the nodal measure ``h^N``.
    """
    g = u.grid
    total = 0.0
    for ax in range(g.N):
        total += float(np.sum(np.diff(u.values, axis=ax) ** 2))
    return total * g.h ** (g.N - 2)


def edge_inner(u: ScalarField, v: ScalarField) -> float:
    """Bilinear form of :func:`edge_energy`: discrete ``int grad u . grad v``."""
    g = u.grid
    if v.grid != g:
        raise ValueError("fields live on different grids")
    total = 0.0
    for ax in range(g.N):
        total += float(np.sum(np.diff(u.values, axis=ax) * np.diff(v.values, axis=ax)))
    return total * g.h ** (g.N - 2)


def boundary_mask(g: Grid) -> np.ndarray:
    mask = np.zeros(g.shape, dtype=bool)
    for ax in range(g.N):
        sl = [slice(None)] * g.N
        sl[ax] = 0
        mask[tuple(sl)] = True
        sl[ax] = -1
        mask[tuple(sl)] = True
    return mask


def zero_boundary(u: ScalarField) -> ScalarField:
    """Restrict to the homogeneous-Dirichlet space: zero on the box faces."""
    v = np.array(u.values)
    v[boundary_mask(u.grid)] = 0.0
    return u.with_values(v)
