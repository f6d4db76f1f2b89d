"""Cell-centred box meshes on intervals and rectangles, and fields on them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class BoxMesh:
    dim: int
    extents: tuple
    origins: tuple
    n_cells: tuple

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        for name in ("extents", "origins", "n_cells"):
            if len(getattr(self, name)) != self.dim:
                raise ValueError(f"{name} needs {self.dim} entries")
        if any(not (L > 0.0) for L in self.extents):
            raise ValueError(f"extents must be positive, got {self.extents}")
        if any(n < 3 for n in self.n_cells):
            raise ValueError(f"need at least 3 cells per axis, got {self.n_cells}")

    @property
    def h(self) -> tuple:
        return tuple(L / n for L, n in zip(self.extents, self.n_cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def size(self) -> int:
        return int(np.prod(self.n_cells))

    @property
    def shape(self) -> tuple:
        return tuple(self.n_cells)

    @property
    def measure(self) -> float:
        return float(np.prod(self.extents))

    @property
    def max_h(self) -> float:
        return max(self.h)

    def axis_centers(self, axis: int) -> np.ndarray:
        o, h, n = self.origins[axis], self.h[axis], self.n_cells[axis]
        return o + (np.arange(n) + 0.5) * h

    def centers(self) -> tuple:
        """Cell-centre coordinate arrays, each of shape ``self.shape``."""
        if self.dim == 1:
            return (self.axis_centers(0),)
        return tuple(np.meshgrid(self.axis_centers(0), self.axis_centers(1), indexing="ij"))

    def contains_ball(self, center, radius) -> bool:
        center = np.atleast_1d(np.asarray(center, dtype=float))
        return all(
            o < c - radius and c + radius < o + L
            for o, L, c in zip(self.origins, self.extents, center)
        )

    def refined(self) -> "BoxMesh":
        return BoxMesh(self.dim, self.extents, self.origins, tuple(2 * n for n in self.n_cells))


def make_mesh(dim, extents, origins=None, n_cells=None) -> BoxMesh:
    extents = tuple(float(L) for L in np.atleast_1d(extents))
    origins = (0.0,) * dim if origins is None else tuple(float(o) for o in np.atleast_1d(origins))
    n_cells = tuple(int(n) for n in np.atleast_1d(n_cells))
    return BoxMesh(int(dim), extents, origins, n_cells)


@dataclass
class Field:
    """Cell averages on ``mesh``, flattened in C order, at time ``time``."""

    mesh: BoxMesh
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size != self.mesh.size:
            raise ValueError(f"expected {self.mesh.size} values, got {self.values.size}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        if not self.time >= 0.0:
            raise ValueError(f"time must be non-negative, got {self.time}")

    def grid(self) -> np.ndarray:
        return self.values.reshape(self.mesh.shape)

    def copy(self) -> "Field":
        return Field(self.mesh, self.values.copy(), self.time)


def integral(f: Field) -> float:
    return f.mesh.cell_volume * float(np.sum(f.values))


def mean(f: Field) -> float:
    return integral(f) / f.mesh.measure


def project_function(mesh: BoxMesh, func, time: float = 0.0) -> Field:
    """Sample ``func(*coords)`` at the cell centres.

    ``func`` receives one coordinate array per axis and must be vectorised.
    """
    coords = mesh.centers()
    vals = np.broadcast_to(np.asarray(func(*coords), dtype=float), mesh.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("projected function produced non-finite samples")
    return Field(mesh, vals.copy(), time)


def _laplacian_1d(n: int, h: float) -> sp.csr_matrix:
    main = np.full(n, -2.0)
    main[0] = main[-1] = -1.0
    off = np.ones(n - 1)
    return (sp.diags([off, main, off], [-1, 0, 1]) / h**2).tocsr()


def neumann_laplacian(mesh: BoxMesh) -> sp.csr_matrix:
    """Five-point (three-point in 1D) zero-flux Laplacian on the cell centres."""
    if mesh.dim == 1:
        return _laplacian_1d(mesh.n_cells[0], mesh.h[0])
    (nx, ny), (hx, hy) = mesh.n_cells, mesh.h
    Lx, Ly = _laplacian_1d(nx, hx), _laplacian_1d(ny, hy)
    return (sp.kron(Lx, sp.identity(ny)) + sp.kron(sp.identity(nx), Ly)).tocsr()
