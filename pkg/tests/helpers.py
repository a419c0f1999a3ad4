"""Shared test utilities: reference meshes, manufactured solutions, and the
independent error norms used for convergence studies."""

from __future__ import annotations

import numpy as np

from ossify import build_cylinder_mesh
from ossify.diffusion import assemble_diffusion
from ossify.mesh import (Mesh, REGION_SCAFFOLD, _extract_boundary,
                         _tag_triangles)

MMS_EDGES = (5.0, 2.5, 1.25)


def reference_tet_mesh() -> Mesh:
    """Single unit reference tetrahedron as a minimal valid mesh."""
    nodes = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                      [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    tets = np.array([[0, 1, 2, 3]])
    boundary = _extract_boundary(tets)
    tags = _tag_triangles(nodes, boundary, 1.0)
    return Mesh(nodes=nodes, tets=tets, boundary_tris=boundary, tri_tags=tags,
                element_region=np.array([REGION_SCAFFOLD], dtype=np.int8))


def boundary_node_set(mesh: Mesh) -> np.ndarray:
    return np.unique(mesh.boundary_tris.ravel())


def scalar_mass_matrix(mesh: Mesh):
    mass, _ = assemble_diffusion(mesh, np.zeros(mesh.n_nodes), 1.0)
    return mass


def l2_error_scalar(mesh: Mesh, nodal: np.ndarray, exact) -> float:
    """Mass-matrix norm of the nodal error against the exact solution."""
    err = nodal - exact(mesh.nodes)
    mass = scalar_mass_matrix(mesh)
    return float(np.sqrt(err @ (mass @ err)))


def l2_error_vector(mesh: Mesh, nodal: np.ndarray, exact) -> float:
    err = nodal - exact(mesh.nodes)
    mass = scalar_mass_matrix(mesh)
    return float(np.sqrt(sum(err[:, k] @ (mass @ err[:, k]) for k in range(3))))


def observed_rate(errors, factor: float = 2.0) -> float:
    """Convergence rate from the finest pair of a refinement sequence."""
    return float(np.log(errors[-2] / errors[-1]) / np.log(factor))


def nodal_volumes(mesh: Mesh) -> np.ndarray:
    return mesh.node_volumes()


# --- manufactured solutions -------------------------------------------------
# Quadratic displacement field: all second derivatives are constant, so the
# matching body force is constant and the consistent load V/4 per node is
# exact -- the convergence study is free of quadrature crimes.

MMS_SCALE = 1e-4


def mms_displacement(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    u = np.empty_like(x, dtype=float)
    u[:, 0] = x[:, 0] ** 2 + x[:, 1] * x[:, 2]
    u[:, 1] = x[:, 1] ** 2 + x[:, 2] * x[:, 0]
    u[:, 2] = x[:, 2] ** 2 + x[:, 0] * x[:, 1]
    return MMS_SCALE * u


def mms_body_force(lam: float, mu: float) -> np.ndarray:
    # f = -(lam + mu) grad(div u) - mu laplacian(u); for the field above
    # div u = 2(x + y + z) and laplacian(u) = (2, 2, 2)
    return -MMS_SCALE * (2.0 * (lam + mu) + 2.0 * mu) * np.ones(3)


def constant_body_load(mesh: Mesh, f: np.ndarray) -> np.ndarray:
    """Consistent load of a constant body force: V/4 per tet node, exact."""
    load = np.zeros(3 * mesh.n_nodes)
    vols = mesh.tet_volumes()
    for comp in range(3):
        np.add.at(load, (3 * mesh.tets + comp).ravel(),
                  np.repeat(vols / 4.0 * f[comp], 4))
    return load


def mms_scalar(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    return (x[:, 0] ** 2 + 2.0 * x[:, 1] ** 2 + 3.0 * x[:, 2] ** 2
            + x[:, 0] * x[:, 1]) / 100.0


MMS_SCALAR_LAPLACIAN = 12.0 / 100.0


def meshes_for_mms(edges=MMS_EDGES):
    return [build_cylinder_mesh(30.0, 10.0, e) for e in edges]
