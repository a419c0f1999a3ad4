"""Quasi-static linear elasticity on P1 tetrahedra.

Assembly uses per-element precomputed lambda- and mu-matrices so that the
time loop only rescales and re-sums them; the sparsity pattern is built once
per mesh.  Mixed boundary conditions are handled by symmetric elimination,
the pure-Neumann case by conjugate gradients re-orthogonalized against the
six rigid-body modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import materials
from .linalg import CGResult, jacobi_cg, rigid_body_modes
from .materials import ElasticTensorSpec
from .mesh import ElasticRole, Mesh, REGION_FIXATEUR, REGION_SCAFFOLD
from .validation import SolverError

MODE_ELIMINATED = "eliminated"
MODE_RIGID_PROJECTED = "rigid_projected"


@dataclass
class DisplacementSolution:
    """Displacement field with its elementwise strain and solver stats."""

    u: np.ndarray             # (n, 3), mm
    strain: np.ndarray        # (m, 3, 3), symmetric, dimensionless
    strain_norm: np.ndarray   # (m,), Frobenius norm of the strain
    cg_iterations: int
    residual: float
    rhs_norm: float


@dataclass
class ReducedSystem:
    """Linear system after boundary treatment, ready for the CG solve."""

    matrix: sparse.csr_matrix
    load: np.ndarray
    mode: str                       # MODE_ELIMINATED or MODE_RIGID_PROJECTED
    full_size: int
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray
    modes: np.ndarray | None = None  # orthonormal rigid modes (pure Neumann)

    def expand(self, reduced: np.ndarray) -> np.ndarray:
        if self.mode == MODE_RIGID_PROJECTED:
            return reduced
        full = np.zeros(self.full_size)
        full[self.free] = reduced
        full[self.fixed] = self.fixed_values
        return full


def _element_geometry(mesh: Mesh):
    """P1 gradient table, volumes and scaled element matrices (cached)."""
    if "elastic_geom" in mesh._cache:
        return mesh._cache["elastic_geom"]
    p = mesh.nodes[mesh.tets]                      # (m, 4, 3)
    ones = np.ones((len(p), 4, 1))
    A = np.concatenate([ones, p], axis=2)          # rows: [1, x, y, z]
    C = np.linalg.inv(A)                           # columns: basis coefficients
    grads = np.transpose(C[:, 1:4, :], (0, 2, 1))  # (m, 4, 3), grads[e, i] = grad phi_i
    vols = np.abs(np.linalg.det(A)) / 6.0

    gdot = np.einsum("mia,mja->mij", grads, grads)
    eye = np.eye(3)
    # scale by the volume only after forming the (exactly symmetric) outer
    # products, so K - K^T vanishes to the bit
    scale = vols[:, None, None]
    k_lam = (scale * np.einsum("mia,mjb->miajb", grads, grads)
             .reshape(-1, 12, 12))
    k_mu = (scale * (np.einsum("mij,ab->miajb", gdot, eye)
                     + np.einsum("mib,mja->miajb", grads, grads))
            .reshape(-1, 12, 12))

    dofs = (3 * mesh.tets[:, :, None] + np.arange(3)).reshape(-1, 12)
    ndof = 3 * mesh.n_nodes
    keys = (dofs[:, :, None].astype(np.int64) * ndof + dofs[:, None, :]).ravel()
    unique_keys, inverse = np.unique(keys, return_inverse=True)
    indices = (unique_keys % ndof).astype(np.int32)
    row_of = unique_keys // ndof
    indptr = np.searchsorted(row_of, np.arange(ndof + 1)).astype(np.int64)

    geom = {
        "grads": grads, "vols": vols, "k_lam": k_lam, "k_mu": k_mu,
        "inverse": inverse, "indices": indices, "indptr": indptr, "ndof": ndof,
        "nnz": len(unique_keys),
    }
    mesh._cache["elastic_geom"] = geom
    return geom


def assemble_elasticity(mesh: Mesh, rho_field: np.ndarray, sig: float,
                        b_field: np.ndarray, spec: ElasticTensorSpec) -> sparse.csr_matrix:
    """P1 stiffness matrix with element-averaged composite coefficients.

    Scaffold elements use the weighted bone+polymer law, fixateur elements
    the titanium tensor.  The matrix is symmetric and, before boundary
    conditions, positive semi-definite with the rigid motions as kernel.
    """
    rho_field = np.asarray(rho_field, dtype=float)
    b_field = np.asarray(b_field, dtype=float)
    scaffold_nodes = np.unique(mesh.tets[mesh.element_region == REGION_SCAFFOLD])
    excess = b_field[scaffold_nodes] - (1.0 - rho_field[scaffold_nodes])
    if np.any(excess > 1e-12):
        bad = scaffold_nodes[excess > 1e-12]
        raise ValueError(f"inadmissible fields: b > 1 - rho at {bad.size} node(s), "
                         f"first {bad[:5].tolist()}")

    geom = _element_geometry(mesh)
    rho_e = rho_field[mesh.tets].mean(axis=1)
    b_e = b_field[mesh.tets].mean(axis=1)
    lam_e, mu_e = materials.composite_lame(rho_e, sig, b_e, spec)
    fix = mesh.element_region == REGION_FIXATEUR
    lam_e, mu_e = np.array(lam_e), np.array(mu_e)
    lam_e[fix] = spec.lambda_fix
    mu_e[fix] = spec.mu_fix

    vals = (lam_e[:, None, None] * geom["k_lam"] + mu_e[:, None, None] * geom["k_mu"])
    data = np.bincount(geom["inverse"], weights=vals.ravel(), minlength=geom["nnz"])
    return sparse.csr_matrix((data, geom["indices"], geom["indptr"]),
                             shape=(geom["ndof"], geom["ndof"]))


def traction_load(mesh: Mesh, traction: float) -> np.ndarray:
    """Consistent P1 load of a downward axial traction on the loaded boundary.

    Each loaded triangle spreads traction*area/3 onto its nodes in -z.
    """
    f = np.zeros(3 * mesh.n_nodes)
    areas = mesh.tri_areas()
    for tri, tag, area in zip(mesh.boundary_tris, mesh.tri_tags, areas):
        if tag.elastic is ElasticRole.NEUMANN_LOADED:
            f[3 * tri + 2] -= traction * area / 3.0
    return f


def dirichlet_dofs(mesh: Mesh, components=(True, True, True)) -> np.ndarray:
    """DOF indices clamped on the elastic Dirichlet boundary."""
    nodes = mesh.boundary_nodes(elastic=ElasticRole.DIRICHLET)
    comps = [k for k, on in enumerate(components) if on]
    if nodes.size == 0 or not comps:
        return np.empty(0, dtype=int)
    return np.sort((3 * nodes[:, None] + np.array(comps)).ravel())


def reduce_system(matrix: sparse.csr_matrix, load: np.ndarray,
                  fixed_dofs: np.ndarray, fixed_values: np.ndarray | float = 0.0
                  ) -> ReducedSystem:
    """Symmetric elimination of the fixed DOFs (prescribed values lifted
    into the right-hand side)."""
    ndof = matrix.shape[0]
    fixed_dofs = np.asarray(fixed_dofs, dtype=int)
    fixed_values = np.broadcast_to(np.asarray(fixed_values, dtype=float),
                                   fixed_dofs.shape).copy()
    free = np.setdiff1d(np.arange(ndof), fixed_dofs, assume_unique=False)
    k_ff = matrix[free][:, free].tocsr()
    rhs = load[free].astype(float).copy()
    if fixed_dofs.size and np.any(fixed_values != 0.0):
        rhs -= matrix[free][:, fixed_dofs] @ fixed_values
    return ReducedSystem(matrix=k_ff, load=rhs, mode=MODE_ELIMINATED,
                         full_size=ndof, free=free, fixed=fixed_dofs,
                         fixed_values=fixed_values)


def apply_elastic_bcs(matrix: sparse.csr_matrix, mesh: Mesh, traction: float,
                      dirichlet_value=(0.0, 0.0, 0.0)) -> ReducedSystem:
    """Standard scenario boundary treatment.

    Traction goes on the loaded cap, the Dirichlet cap is clamped to the
    given displacement (all components).  Without any Dirichlet boundary the
    system is flagged for the rigid-mode-projected solve instead.
    """
    load = traction_load(mesh, traction)
    fixed = dirichlet_dofs(mesh)
    if fixed.size == 0:
        modes = rigid_body_modes(mesh.nodes)
        return ReducedSystem(matrix=matrix.tocsr(), load=load,
                             mode=MODE_RIGID_PROJECTED, full_size=matrix.shape[0],
                             free=np.arange(matrix.shape[0]),
                             fixed=fixed, fixed_values=np.empty(0), modes=modes)
    values = np.tile(np.asarray(dirichlet_value, dtype=float),
                     fixed.size // 3)
    return reduce_system(matrix, load, fixed, values)


def element_strain(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    """Symmetrized displacement gradient, constant per element."""
    geom = _element_geometry(mesh)
    grad_u = np.einsum("eia,eib->eab", u[mesh.tets], geom["grads"])
    return 0.5 * (grad_u + np.transpose(grad_u, (0, 2, 1)))


def solve_cg(system: ReducedSystem, tol: float = 1e-9,
             max_iter: int | None = None, x0: np.ndarray | None = None,
             mesh: Mesh | None = None) -> DisplacementSolution:
    """Solve the reduced system and derive the strain fields.

    In the rigid-projected mode the load must be self-equilibrated
    (orthogonal to all six rigid modes); the returned displacement is the
    minimum-norm representative.
    """
    if max_iter is None:
        max_iter = max(200, int(20 * math.sqrt(system.matrix.shape[0])))
    if system.mode == MODE_RIGID_PROJECTED:
        assert system.modes is not None
        load_norm = np.linalg.norm(system.load)
        incompat = np.abs(system.modes @ system.load).max()
        if load_norm > 0 and incompat > 1e-8 * load_norm:
            raise SolverError(
                f"load is not self-equilibrated: rigid-mode component {incompat:.3e} "
                f"exceeds 1e-8 * |f| = {1e-8 * load_norm:.3e}")
        result: CGResult = jacobi_cg(system.matrix, system.load, tol, max_iter,
                                     x0=x0, modes=system.modes)
    else:
        result = jacobi_cg(system.matrix, system.load, tol, max_iter, x0=x0)
    u_nodes = system.expand(result.x).reshape(-1, 3)

    if mesh is None:
        strain = np.empty((0, 3, 3))
        norm = np.empty(0)
    else:
        strain = element_strain(mesh, u_nodes)
        norm = np.atleast_1d(materials.strain_norm_delta(strain))
    return DisplacementSolution(u=u_nodes, strain=strain, strain_norm=norm,
                                cg_iterations=result.iterations,
                                residual=result.residual, rhs_norm=result.rhs_norm)


def element_strain_stimulus(solution: DisplacementSolution, mesh: Mesh,
                            mode: str = materials.DELTA_EUCLIDEAN,
                            delta_max: float | None = None):
    """Per-element strain stimulus and its volume-weighted nodal projection."""
    elem = materials.strain_norm_delta(solution.strain, mode, delta_max)
    elem = np.atleast_1d(elem)
    vols = mesh.tet_volumes()
    num = np.zeros(mesh.n_nodes)
    den = np.zeros(mesh.n_nodes)
    np.add.at(num, mesh.tets.ravel(), np.repeat(vols * elem, 4))
    np.add.at(den, mesh.tets.ravel(), np.repeat(vols, 4))
    nodal = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return elem, nodal
