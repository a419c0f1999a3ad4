"""Implicit-Euler reaction-diffusion stepping for the signalling molecules.

Each molecule solves (M + dt*A + dt*k3*M) a(n+1) = M (a(n) + dt*k2*source)
with the source (strain stimulus times osteoblast density) frozen at the old
time level, Dirichlet nodes pinned to the bone-adjacent saturation value and
natural no-flux conditions elsewhere.  Diffusion and decay are implicit, so
each step is one symmetric positive definite solve per molecule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .linalg import jacobi_cg
from .materials import ParameterSet, diffusivity
from .mesh import DiffusionRole, Mesh
from .validation import ValidationReport

POSITIVITY_EPS = 1e-10


@dataclass
class MoleculeState:
    """Nodal concentrations of the N molecules, stacked along axis 0."""

    a: np.ndarray             # (N, n_nodes)
    k2: tuple[float, ...]
    k3: tuple[float, ...]

    @property
    def n_molecules(self) -> int:
        return self.a.shape[0]

    @classmethod
    def initial(cls, mesh: Mesh, params: ParameterSet,
                dirichlet_nodes: np.ndarray | None = None,
                dirichlet_value: float = 1.0) -> "MoleculeState":
        """Zero interior concentration; Dirichlet nodes start at their value."""
        a = np.zeros((params.n_molecules, mesh.n_nodes))
        if dirichlet_nodes is not None and len(dirichlet_nodes):
            a[:, dirichlet_nodes] = dirichlet_value
        return cls(a=a, k2=tuple(params.k2), k3=tuple(params.k3))


def _scalar_pattern(mesh: Mesh):
    """Canonical CSR structure for nodal scalar operators (cached).

    Summing element contributions through bincount keeps the accumulation
    order identical for (i, j) and (j, i), so assembled operators are
    symmetric to the bit."""
    if "scalar_pattern" in mesh._cache:
        return mesh._cache["scalar_pattern"]
    n = mesh.n_nodes
    rows = np.repeat(mesh.tets, 4, axis=1).ravel().astype(np.int64)
    cols = np.tile(mesh.tets, (1, 4)).ravel().astype(np.int64)
    keys = rows * n + cols
    unique_keys, inverse = np.unique(keys, return_inverse=True)
    indices = (unique_keys % n).astype(np.int32)
    indptr = np.searchsorted(unique_keys // n, np.arange(n + 1)).astype(np.int64)
    pattern = {"inverse": inverse, "indices": indices, "indptr": indptr,
               "nnz": len(unique_keys), "n": n}
    mesh._cache["scalar_pattern"] = pattern
    return pattern


def _assemble_scalar(mesh: Mesh, element_matrices: np.ndarray) -> sparse.csr_matrix:
    pat = _scalar_pattern(mesh)
    data = np.bincount(pat["inverse"], weights=element_matrices.ravel(),
                       minlength=pat["nnz"])
    return sparse.csr_matrix((data, pat["indices"], pat["indptr"]),
                             shape=(pat["n"], pat["n"]))


def assemble_diffusion(mesh: Mesh, rho_field: np.ndarray, k5: float):
    """Consistent P1 mass matrix and diffusion stiffness with per-element
    diffusivity k5*(1-mean rho)."""
    from .elasticity import _element_geometry  # shares the cached gradients

    geom = _element_geometry(mesh)
    grads, vols = geom["grads"], geom["vols"]
    rho_e = np.asarray(rho_field, dtype=float)[mesh.tets].mean(axis=1)
    d_e = diffusivity(rho_e, k5)

    # scale by D*V after the (exactly symmetric) gradient products
    a_el = (d_e * vols)[:, None, None] * np.einsum("mia,mja->mij", grads, grads)
    m_base = (np.ones((4, 4)) + np.eye(4)) / 20.0
    m_el = vols[:, None, None] * m_base
    return _assemble_scalar(mesh, m_el), _assemble_scalar(mesh, a_el)


class DiffusionSystem:
    """Owns the assembled matrices and the Dirichlet bookkeeping for one mesh."""

    def __init__(self, mesh: Mesh, rho_field: np.ndarray, params: ParameterSet,
                 dirichlet_value: float = 1.0,
                 dirichlet_nodes: np.ndarray | None = None):
        self.mesh = mesh
        self.params = params
        self.dirichlet_value = dirichlet_value
        self.mass, self.stiffness = assemble_diffusion(mesh, rho_field, params.k5)
        if dirichlet_nodes is None:
            dirichlet_nodes = mesh.boundary_nodes(diffusion=DiffusionRole.DIRICHLET_BONE)
        self.dirichlet_nodes = np.asarray(dirichlet_nodes, dtype=int)
        self.free = np.setdiff1d(np.arange(mesh.n_nodes), self.dirichlet_nodes)
        self._reduced: dict[tuple[float, float], tuple] = {}

    def _system_for(self, dt: float, k3: float):
        """Reduced step operator for one (dt, k3) pair, cached."""
        key = (dt, k3)
        if key not in self._reduced:
            full = (self.mass * (1.0 + dt * k3) + dt * self.stiffness).tocsr()
            k_ff = full[self.free][:, self.free].tocsr()
            k_fd = full[self.free][:, self.dirichlet_nodes].tocsr()
            self._reduced[key] = (k_ff, k_fd)
        return self._reduced[key]

    def step_single(self, a: np.ndarray, k2: float, k3: float,
                    source: np.ndarray, dt: float,
                    dirichlet_values: np.ndarray | float | None = None,
                    tol: float | None = None) -> np.ndarray:
        """Advance one molecule by one implicit Euler step.

        `source` is the nodal product stimulus*c at the old time level;
        Dirichlet nodes are pinned to `dirichlet_values` (defaults to the
        system's saturation value).
        """
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if tol is None:
            tol = self.params.cg_tol
        if dirichlet_values is None:
            dirichlet_values = self.dirichlet_value
        g = np.broadcast_to(np.asarray(dirichlet_values, dtype=float),
                            self.dirichlet_nodes.shape)
        rhs_full = self.mass @ (a + dt * k2 * source)
        k_ff, k_fd = self._system_for(dt, k3)
        rhs = rhs_full[self.free]
        if self.dirichlet_nodes.size:
            rhs = rhs - k_fd @ g
        max_iter = max(200, int(20 * math.sqrt(max(1, len(self.free)))))
        result = jacobi_cg(k_ff, rhs, tol, max_iter, x0=a[self.free].copy())
        out = np.empty_like(a)
        out[self.free] = result.x
        if self.dirichlet_nodes.size:
            out[self.dirichlet_nodes] = g
        return out

    def step(self, state: MoleculeState, stimulus: np.ndarray, c: np.ndarray,
             dt: float, executor=None) -> MoleculeState:
        """Advance all molecules; they are mutually independent within a step."""
        source = np.asarray(stimulus, dtype=float) * np.asarray(c, dtype=float)
        if executor is None:
            new = [self.step_single(state.a[i], state.k2[i], state.k3[i], source, dt)
                   for i in range(state.n_molecules)]
        else:
            futures = [executor.submit(self.step_single, state.a[i], state.k2[i],
                                       state.k3[i], source, dt)
                       for i in range(state.n_molecules)]
            new = [f.result() for f in futures]
        return MoleculeState(a=np.stack(new), k2=state.k2, k3=state.k3)


def diffusion_step(system: DiffusionSystem, state: MoleculeState,
                   stimulus: np.ndarray, c: np.ndarray, dt: float) -> MoleculeState:
    """Functional entry point for one coupled reaction-diffusion step."""
    return system.step(state, stimulus, c, dt)


def positivity_report(state: MoleculeState, eps: float = POSITIVITY_EPS) -> ValidationReport:
    """List nodes where any molecule concentration dips below -eps."""
    report = ValidationReport()
    for i in range(state.n_molecules):
        bad = np.flatnonzero(state.a[i] < -eps)
        if bad.size:
            report.add("negative-concentration",
                       f"molecule {i + 1} below -{eps:g} at {bad.size} node(s), "
                       f"min {state.a[i].min():.3e}", bad.tolist())
    return report
