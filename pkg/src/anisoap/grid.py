"""Structured Cartesian meshes with biquadratic node layout.

A grid with ``nx`` by ``ny`` intervals carries ``(nx+1)*(ny+1)`` nodes,
numbered lexicographically (row-major in x), and ``(nx/2)*(ny/2)``
biquadratic elements, each covering a 3x3 patch of nodes.  Boundary nodes
and element edges are classified by the sign of ``b . n`` into Dirichlet
(tangent field), inflow and outflow parts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

# Boundary labels.  0 is reserved for interior nodes.
DIRICHLET = 1
INFLOW = 2
OUTFLOW = 3

_SIDES = ("left", "right", "bottom", "top")
_NORMALS = {"left": (-1.0, 0.0), "right": (1.0, 0.0),
            "bottom": (0.0, -1.0), "top": (0.0, 1.0)}


@dataclass(frozen=True)
class Grid:
    """Uniform tensor mesh of an axis-aligned rectangle.

    ``nx`` and ``ny`` are the interval counts per direction and must be even
    so that every biquadratic element spans two intervals.
    """

    nx: int
    ny: int
    xmin: float = 0.0
    xmax: float = 1.0
    ymin: float = 0.0
    ymax: float = 1.0

    @property
    def hx(self) -> float:
        return (self.xmax - self.xmin) / self.nx

    @property
    def hy(self) -> float:
        return (self.ymax - self.ymin) / self.ny

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elx(self) -> int:
        return self.nx // 2

    @property
    def n_ely(self) -> int:
        return self.ny // 2

    @property
    def n_elements(self) -> int:
        return self.n_elx * self.n_ely

    @property
    def xs(self) -> np.ndarray:
        return self.xmin + self.hx * np.arange(self.nx + 1)

    @property
    def ys(self) -> np.ndarray:
        return self.ymin + self.hy * np.arange(self.ny + 1)

    def node_index(self, i, j):
        """Global index of node (i, j): lexicographic, row-major in x."""
        return j * (self.nx + 1) + i

    def node_coords(self):
        """Coordinates of all nodes as flat arrays (X, Y) in global node order."""
        X, Y = np.meshgrid(self.xs, self.ys)
        return X.ravel(), Y.ravel()


def build_grid(nx: int, ny: int, rect=None) -> Grid:
    """Build a grid with ``nx`` x ``ny`` intervals on ``rect=(xmin,xmax,ymin,ymax)``.

    Defaults to the unit square.  Raises ConfigurationError for odd or
    non-positive interval counts or a degenerate rectangle.
    """
    if nx < 2 or ny < 2 or nx % 2 or ny % 2:
        raise ConfigurationError(
            f"interval counts must be positive even integers, got nx={nx}, ny={ny}")
    if rect is None:
        rect = (0.0, 1.0, 0.0, 1.0)
    xmin, xmax, ymin, ymax = map(float, rect)
    if not (xmax > xmin and ymax > ymin):
        raise ConfigurationError(f"degenerate rectangle {rect}")
    return Grid(nx, ny, xmin, xmax, ymin, ymax)


def element_nodes(grid: Grid, ex: int, ey: int) -> np.ndarray:
    """The 9 global node indices of element (ex, ey), lexicographic local order."""
    if not (0 <= ex < grid.n_elx and 0 <= ey < grid.n_ely):
        raise IndexError(f"element ({ex}, {ey}) out of range")
    i0, j0 = 2 * ex, 2 * ey
    return np.array([grid.node_index(i0 + di, j0 + dj)
                     for dj in range(3) for di in range(3)])


def element_connectivity(grid: Grid) -> np.ndarray:
    """Node indices of all elements, shape (n_elements, 9).

    Element order is row-major in x (element e = ey * n_elx + ex), matching
    the node numbering convention; assembly relies on this being stable.
    """
    ex = np.arange(grid.n_elx)
    ey = np.arange(grid.n_ely)
    i0 = 2 * ex[None, :]                     # (1, n_elx)
    j0 = 2 * ey[:, None]                     # (n_ely, 1)
    base = (j0 * (grid.nx + 1) + i0).ravel()  # (n_elements,)
    offsets = np.array([dj * (grid.nx + 1) + di
                        for dj in range(3) for di in range(3)])
    return base[:, None] + offsets[None, :]


@dataclass(frozen=True)
class BoundaryClass:
    """Classification of boundary nodes and boundary element edges.

    ``node_label`` holds one entry per grid node: 0 for interior nodes and
    DIRICHLET/INFLOW/OUTFLOW on the boundary.  ``edge_label`` maps each side
    of the rectangle to the labels of its element edges (classified at edge
    midpoints).  Corner nodes take the Dirichlet label as soon as one of
    their two sides classifies them as Dirichlet.
    """

    node_label: np.ndarray
    edge_label: dict = field(default_factory=dict)

    def nodes_with(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.node_label == label)

    @property
    def dirichlet_nodes(self) -> np.ndarray:
        return self.nodes_with(DIRICHLET)

    @property
    def inflow_nodes(self) -> np.ndarray:
        return self.nodes_with(INFLOW)

    @property
    def outflow_nodes(self) -> np.ndarray:
        return self.nodes_with(OUTFLOW)

    @property
    def boundary_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.node_label > 0)


def _side_points(grid: Grid, side: str):
    """Node coordinates and global indices along one side of the rectangle."""
    xs, ys = grid.xs, grid.ys
    if side == "left":
        i = np.zeros(grid.ny + 1, dtype=int)
        j = np.arange(grid.ny + 1)
    elif side == "right":
        i = np.full(grid.ny + 1, grid.nx)
        j = np.arange(grid.ny + 1)
    elif side == "bottom":
        i = np.arange(grid.nx + 1)
        j = np.zeros(grid.nx + 1, dtype=int)
    else:
        i = np.arange(grid.nx + 1)
        j = np.full(grid.nx + 1, grid.ny)
    return xs[i], ys[j], grid.node_index(i, j)


def _labels_from_dot(dot: np.ndarray, tol: float) -> np.ndarray:
    lab = np.full(dot.shape, OUTFLOW, dtype=np.int8)
    lab[dot < -tol] = INFLOW
    lab[np.abs(dot) <= tol] = DIRICHLET
    return lab


def classify_boundary(grid: Grid, b, tol_bn: float = 1e-12) -> BoundaryClass:
    """Label every boundary node and element edge by the sign of ``b . n``.

    ``b`` is a direction field evaluable as ``b(x, y) -> (bx, by)``; it is
    expected to be (close to) unit length, and the classification only sees
    the sign of ``b . n``, so any positive rescaling gives the same result.
    Corners prefer Dirichlet over inflow/outflow so that the homogeneous
    Dirichlet constraint wins where the two meet.
    """
    node_label = np.zeros(grid.n_nodes, dtype=np.int8)
    priority = {DIRICHLET: 3, INFLOW: 2, OUTFLOW: 1, 0: 0}
    edge_label = {}
    for side in _SIDES:
        x, y, idx = _side_points(grid, side)
        n1, n2 = _NORMALS[side]
        b1, b2 = b(x, y)
        lab = _labels_from_dot(np.asarray(b1) * n1 + np.asarray(b2) * n2, tol_bn)
        for k, node in enumerate(idx):
            if priority[int(lab[k])] > priority[int(node_label[node])]:
                node_label[node] = lab[k]
        # element edges: classify at edge midpoints (the odd nodes of the side)
        mid = slice(1, None, 2)
        bm1, bm2 = b(x[mid], y[mid])
        edge_label[side] = _labels_from_dot(
            np.asarray(bm1) * n1 + np.asarray(bm2) * n2, tol_bn)
    return BoundaryClass(node_label=node_label, edge_label=edge_label)
