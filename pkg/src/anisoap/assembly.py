"""Sparse assembly of the bilinear forms and the scheme block systems.

Degrees of freedom live on grid nodes; Dirichlet data is imposed by
eliminating constrained nodes, so assembled systems act on compactly
indexed free unknowns only.  Two trial/test spaces appear throughout:

    V : nodes free except on the Dirichlet boundary,
    L : V with the inflow boundary constrained as well.

The element loop is fully vectorized; contributions are accumulated in a
fixed element order, so assembled matrices are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import ConfigurationError
from .fem import QuadRule, shape_table
from .fields import AnisotropySpec
from .grid import DIRICHLET, INFLOW, BoundaryClass, Grid, element_connectivity

FORM_KINDS = ("perp", "par", "par_eps", "par_inv_eps", "mass")


@dataclass(frozen=True)
class DofMap:
    """Compact numbering of the free nodes of one space.

    ``full_to_free`` has one entry per grid node: the free index, or -1
    where the node is constrained to zero.
    """

    space: str
    full_to_free: np.ndarray
    free_to_full: np.ndarray

    @property
    def n_free(self) -> int:
        return len(self.free_to_full)


def build_dofmap(grid: Grid, bc: BoundaryClass, space: str) -> DofMap:
    """Number the free nodes of space ``'V'`` or ``'L'`` lexicographically."""
    if space == "V":
        constrained = bc.node_label == DIRICHLET
    elif space == "L":
        constrained = (bc.node_label == DIRICHLET) | (bc.node_label == INFLOW)
    else:
        raise ConfigurationError(f"unknown space {space!r}")
    full_to_free = np.full(grid.n_nodes, -1, dtype=np.int64)
    free = np.flatnonzero(~constrained)
    full_to_free[free] = np.arange(len(free))
    return DofMap(space=space, full_to_free=full_to_free, free_to_full=free)


def free_dofmap(grid: Grid) -> DofMap:
    """A map with no constraints (all nodes free); useful for diagnostics."""
    idx = np.arange(grid.n_nodes, dtype=np.int64)
    return DofMap(space="V", full_to_free=idx, free_to_full=idx)


def _qp_coords(grid: Grid, rule: QuadRule):
    """Global quadrature point coordinates, shape (n_elements, n_qp) each."""
    xc = grid.xmin + grid.hx * (2 * np.arange(grid.n_elx) + 1)
    yc = grid.ymin + grid.hy * (2 * np.arange(grid.n_ely) + 1)
    XC, YC = np.meshgrid(xc, yc)
    xq = XC.ravel()[:, None] + grid.hx * rule.points[None, :, 0]
    yq = YC.ravel()[:, None] + grid.hy * rule.points[None, :, 1]
    return xq, yq


def _scatter(local, conn, row_map: DofMap, col_map: DofMap) -> sp.csr_matrix:
    """Accumulate per-element 9x9 blocks into a CSR matrix on free dofs."""
    ne = conn.shape[0]
    if local.ndim == 2:
        local = np.broadcast_to(local, (ne, 9, 9))
    rfree = row_map.full_to_free[conn]
    cfree = col_map.full_to_free[conn]
    R = np.broadcast_to(rfree[:, :, None], (ne, 9, 9))
    C = np.broadcast_to(cfree[:, None, :], (ne, 9, 9))
    mask = (R >= 0) & (C >= 0)
    K = sp.coo_matrix((local[mask], (R[mask], C[mask])),
                      shape=(row_map.n_free, col_map.n_free))
    return K.tocsr()


def assemble_form(grid: Grid, spec: AnisotropySpec, rule: QuadRule,
                  row_map: DofMap, col_map: DofMap, kind: str) -> sp.csr_matrix:
    """Assemble one bilinear form between ``row_map`` and ``col_map`` spaces.

    Kinds:
      ``perp``         transverse diffusion (A_perp on projected gradients),
      ``par``          A_par (b.grad u)(b.grad v),
      ``par_eps``      same with the intensity eps(x) inside the integral,
      ``par_inv_eps``  same with 1/eps(x) inside the integral,
      ``mass``         plain L2 pairing.
    """
    if kind not in FORM_KINDS:
        raise ConfigurationError(f"unknown form kind {kind!r}")
    conn = element_connectivity(grid)
    N, dXi, dEta = shape_table(rule)
    gx, gy = dXi / grid.hx, dEta / grid.hy          # (nq, 9), element-independent
    det = grid.hx * grid.hy
    wq = rule.weights * det

    if kind == "mass":
        local = np.einsum("q,qi,qj->ij", wq, N, N)
        return _scatter(local, conn, row_map, col_map)

    xq, yq = _qp_coords(grid, rule)
    b1, b2 = spec.b(xq, yq)
    bg = b1[:, :, None] * gx[None, :, :] + b2[:, :, None] * gy[None, :, :]

    if kind == "perp" and spec.a_perp is None:
        # identity A_perp: projected-gradient product = full product minus
        # the parallel part, and the full (Laplace) block is element-independent
        lap = np.einsum("q,qi,qj->ij", wq, gx, gx) + np.einsum("q,qi,qj->ij", wq, gy, gy)
        par = np.einsum("q,eqi,eqj->eij", wq, bg, bg)
        return _scatter(lap[None, :, :] - par, conn, row_map, col_map)

    if kind == "perp":
        a11, a12, a22 = spec.a_perp(xq, yq)
        pgx = gx[None, :, :] - bg * b1[:, :, None]
        pgy = gy[None, :, :] - bg * b2[:, :, None]
        tx = a11[:, :, None] * pgx + a12[:, :, None] * pgy
        ty = a12[:, :, None] * pgx + a22[:, :, None] * pgy
        local = (np.einsum("q,eqi,eqj->eij", rule.weights, pgx, tx)
                 + np.einsum("q,eqi,eqj->eij", rule.weights, pgy, ty)) * det
        return _scatter(local, conn, row_map, col_map)

    wt = np.broadcast_to(wq, xq.shape).copy()
    if spec.a_par is not None:
        wt *= spec.a_par(xq, yq)
    if kind == "par_eps":
        wt *= spec.eps(xq, yq)
    elif kind == "par_inv_eps":
        wt /= spec.eps(xq, yq)
    local = np.einsum("eq,eqi,eqj->eij", wt, bg, bg)
    return _scatter(local, conn, row_map, col_map)


def assemble_load(grid: Grid, f, rule: QuadRule, dmap: DofMap) -> np.ndarray:
    """Load vector with entries integral(f * basis) over the free dofs."""
    conn = element_connectivity(grid)
    N, _, _ = shape_table(rule)
    xq, yq = _qp_coords(grid, rule)
    fv = f(xq, yq)
    contrib = (rule.weights[None, :] * fv) @ N * (grid.hx * grid.hy)  # (ne, 9)
    idx = dmap.full_to_free[conn]
    vec = np.zeros(dmap.n_free)
    mask = idx >= 0
    np.add.at(vec, idx[mask], contrib[mask])
    return vec


@dataclass(frozen=True)
class SparseSystem:
    """Assembled block system with its unknown layout.

    ``blocks`` lists (field name, DofMap) in unknown order; offsets into the
    global vector follow from the free counts.
    """

    matrix: sp.csr_matrix
    blocks: tuple
    symmetric: bool = False

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def offsets(self):
        sizes = [m.n_free for _, m in self.blocks]
        return np.concatenate([[0], np.cumsum(sizes)])

    def split(self, x: np.ndarray) -> dict:
        off = self.offsets()
        return {name: x[off[k]:off[k + 1]]
                for k, (name, _) in enumerate(self.blocks)}


def _patch_zeros(grid: Grid, dmap: DofMap, halo: int = 2) -> sp.coo_matrix:
    """Explicitly stored zeros on the full (2*halo+1)^2 index-patch pattern.

    Mirrors a banded allocation that reserves every node pair within index
    distance ``halo`` per direction, whether or not the pair shares an
    element; used to reproduce the storage footprint reported for the
    single-field scheme.
    """
    lab = dmap.full_to_free.reshape(grid.ny + 1, grid.nx + 1)
    rows, cols = [], []
    nyn, nxn = lab.shape
    for dj in range(-halo, halo + 1):
        for di in range(-halo, halo + 1):
            r = lab[max(0, -dj):nyn - max(0, dj), max(0, -di):nxn - max(0, di)]
            c = lab[max(0, dj):nyn - max(0, -dj), max(0, di):nxn - max(0, -di)]
            m = (r >= 0) & (c >= 0)
            rows.append(r[m])
            cols.append(c[m])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    return sp.coo_matrix((np.zeros(len(rows)), (rows, cols)),
                         shape=(dmap.n_free, dmap.n_free))


def build_p_system(grid: Grid, spec: AnisotropySpec, rule: QuadRule,
                   vmap: DofMap) -> SparseSystem:
    """Single-field system (1/eps-weighted parallel form plus transverse form)."""
    K = (assemble_form(grid, spec, rule, vmap, vmap, "par_inv_eps")
         + assemble_form(grid, spec, rule, vmap, vmap, "perp"))
    K = (K + _patch_zeros(grid, vmap)).tocsr()
    return SparseSystem(matrix=K, blocks=(("u", vmap),), symmetric=True)


def build_mm_system(grid: Grid, spec: AnisotropySpec, rule: QuadRule,
                    vmap: DofMap, lmap: DofMap) -> SparseSystem:
    """Two-field system in (u, q); the intensity sits inside the (q,q) block.

    The coupling block is assembled once and reused transposed, so the
    matrix is symmetric exactly.
    """
    a_perp = assemble_form(grid, spec, rule, vmap, vmap, "perp")
    a_par_vl = assemble_form(grid, spec, rule, vmap, lmap, "par")
    a_par_eps_ll = assemble_form(grid, spec, rule, lmap, lmap, "par_eps")
    K = sp.bmat([[a_perp, a_par_vl],
                 [a_par_vl.T, -a_par_eps_ll]], format="csr")
    return SparseSystem(matrix=K, blocks=(("u", vmap), ("q", lmap)),
                        symmetric=True)


def build_db_system(grid: Grid, spec: AnisotropySpec, rule: QuadRule,
                    vmap: DofMap, lmap: DofMap) -> SparseSystem:
    """Five-field system in (p, lambda, q, l, mu) with mass-coupled multipliers.

    Requires a constant intensity; the variable case is only formulated for
    the two-field scheme.
    """
    if not spec.eps.is_constant:
        raise ConfigurationError("five-field scheme needs constant eps")
    eps = spec.eps.value
    a_perp = assemble_form(grid, spec, rule, vmap, vmap, "perp")
    a_par_vv = assemble_form(grid, spec, rule, vmap, vmap, "par")
    a_par_vl = assemble_form(grid, spec, rule, vmap, lmap, "par")
    mass = assemble_form(grid, spec, rule, vmap, vmap, "mass")
    K = sp.bmat([
        [a_perp,       a_par_vl, a_perp,                   None,     None],
        [a_par_vl.T,   None,     None,                     None,     None],
        [eps * a_perp, None,     a_par_vv + eps * a_perp,  mass,     None],
        [None,         None,     mass,                     None,     a_par_vl],
        [None,         None,     None,                     a_par_vl.T, None],
    ], format="csr")
    blocks = (("p", vmap), ("lam", lmap), ("q", vmap), ("l", vmap), ("mu", lmap))
    return SparseSystem(matrix=K, blocks=blocks, symmetric=False)


def assemble_scheme_matrix(scheme: str, grid: Grid, spec: AnisotropySpec,
                           rule: QuadRule, vmap: DofMap,
                           lmap: Optional[DofMap] = None) -> SparseSystem:
    """Dispatch to the block assembler for ``'p'``, ``'mm'`` or ``'db'``."""
    s = scheme.lower()
    if s == "p":
        return build_p_system(grid, spec, rule, vmap)
    if s in ("mm", "mm_var_eps", "limit"):
        return build_mm_system(grid, spec, rule, vmap, lmap)
    if s == "db":
        return build_db_system(grid, spec, rule, vmap, lmap)
    raise ConfigurationError(f"unknown scheme {scheme!r}")


def export_matrix_market(path, system_or_matrix) -> None:
    """Write a matrix (or a system's matrix) in Matrix Market coordinate form."""
    K = getattr(system_or_matrix, "matrix", system_or_matrix)
    scipy.io.mmwrite(str(path), K)
