"""Uniform Cartesian grids with homogeneous Dirichlet boundary.

Fields are plain float arrays holding the interior nodes only; the boundary
zeros are never stored.  In 2D the interior index of node (i, j), with i
running along x and j along y, is ``i * n + j`` (C order of an (n, n) array).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, GridMismatchError

INTERVAL = "interval"
RECTANGLE = "rectangle"


@dataclass(frozen=True)
class Grid:
    kind: str
    n: int
    lengths: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(L / (self.n + 1) for L in self.lengths)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def cell_volume(self) -> float:
        return math.prod(self.h)

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(hx * np.arange(1, self.n + 1) for hx in self.h)

    @cached_property
    def coords(self) -> np.ndarray:
        """Interior node coordinates, shape (size, dim), in storage order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def sample(self, fn) -> np.ndarray:
        """Evaluate ``fn(x)`` or ``fn(x, y)`` on the interior nodes."""
        cols = self.coords.T
        return np.asarray(fn(*cols), dtype=float) * np.ones(self.size)

    def check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.size,):
            raise GridMismatchError(
                f"field of shape {f.shape} does not match grid with {self.size} interior nodes"
            )
        return f

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """Discrete L2 inner product (midpoint rule)."""
        return float(np.dot(self.check(f), self.check(g)) * self.cell_volume)


def build_grid(kind: str = INTERVAL, n: int = 200, lengths=None) -> Grid:
    """Build an interval or square-lattice rectangle grid.

    ``lengths`` defaults to pi per axis, the domain on which the continuum
    principal eigenvalue of the interval is exactly 1.
    """
    kind = kind.lower()
    if kind not in (INTERVAL, RECTANGLE):
        raise ConfigurationError(f"unknown grid kind {kind!r}")
    dim = 1 if kind == INTERVAL else 2
    if lengths is None:
        lengths = (math.pi,) * dim
    elif np.isscalar(lengths):
        lengths = (float(lengths),) * dim
    lengths = tuple(float(L) for L in lengths)
    if len(lengths) != dim:
        raise ConfigurationError(f"{kind} grid needs {dim} length(s), got {len(lengths)}")
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 2:
        raise ConfigurationError(f"need at least 2 interior nodes per axis, got n={n!r}")
    if any(not (L > 0 and math.isfinite(L)) for L in lengths):
        raise ConfigurationError(f"domain lengths must be positive, got {lengths}")
    return Grid(kind, int(n), lengths)


def apply_laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Second-order central difference Laplacian with zero ghost values."""
    f = grid.check(f)
    if grid.dim == 1:
        (hx,) = grid.h
        p = np.pad(f, 1)
        return (p[:-2] - 2.0 * p[1:-1] + p[2:]) / hx**2
    hx, hy = grid.h
    p = np.pad(f.reshape(grid.shape), 1)
    c = p[1:-1, 1:-1]
    lap = (p[:-2, 1:-1] - 2.0 * c + p[2:, 1:-1]) / hx**2
    lap += (p[1:-1, :-2] - 2.0 * c + p[1:-1, 2:]) / hy**2
    return lap.ravel()


@lru_cache(maxsize=32)
def laplacian_matrix(grid: Grid) -> sp.csr_matrix:
    """Sparse matrix of ``apply_laplacian`` (symmetric, negative definite)."""
    n = grid.n
    ones = np.ones(n)

    def d2(hx):
        return sp.diags([ones[:-1], -2.0 * ones, ones[:-1]], [-1, 0, 1]) / hx**2

    if grid.dim == 1:
        return sp.csr_matrix(d2(grid.h[0]))
    eye = sp.identity(n)
    hx, hy = grid.h
    return sp.csr_matrix(sp.kron(d2(hx), eye) + sp.kron(eye, d2(hy)))


def write_field_csv(path, grid: Grid, values: np.ndarray) -> None:
    values = grid.check(values)
    header = ["x", "value"] if grid.dim == 1 else ["x", "y", "value"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for xy, val in zip(grid.coords, values):
            w.writerow([f"{c:.17g}" for c in xy] + [f"{val:.17g}"])


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Return (coords, values) from a field dump."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :-1], data[:, -1]
