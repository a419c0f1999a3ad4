import numpy as np
import pytest

from ossify import build_cylinder_mesh
from ossify import elasticity as el
from ossify.linalg import jacobi_cg, rigid_body_modes
from ossify.materials import ElasticTensorSpec, lame_from_E_nu
from ossify.mesh import ElasticRole
from ossify.validation import SolverError

from helpers import (boundary_node_set, constant_body_load, l2_error_vector,
                     mms_body_force, mms_displacement, observed_rate,
                     reference_tet_mesh)

BONE = lame_from_E_nu(5.0, 0.3)
SPEC = ElasticTensorSpec(lambda_b=BONE[0], mu_b=BONE[1],
                         lambda_rho=1.97, mu_rho=0.17,
                         lambda_fix=52.9, mu_fix=38.2)


def uniform_fields(mesh, b=1.0, rho=0.0):
    n = mesh.n_nodes
    return np.full(n, rho), np.full(n, b)


def hand_assembled_reference(lam, mu):
    """Element stiffness of the unit reference tet, assembled with plain
    loops straight from the bilinear form (independent of the package)."""
    grads = np.array([[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0],
                      [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    volume = 1.0 / 6.0
    K = np.zeros((12, 12))
    for i in range(4):
        for a in range(3):
            for j in range(4):
                for b in range(3):
                    val = lam * grads[i, a] * grads[j, b]
                    val += mu * grads[i, b] * grads[j, a]
                    if a == b:
                        val += mu * grads[i] @ grads[j]
                    K[3 * i + a, 3 * j + b] = volume * val
    return K


def test_single_tet_matches_hand_assembly():
    mesh = reference_tet_mesh()
    rho, b = uniform_fields(mesh)
    K = el.assemble_elasticity(mesh, rho, 1.0, b, SPEC).toarray()
    expected = hand_assembled_reference(SPEC.lambda_b, SPEC.mu_b)
    assert np.allclose(K, expected, atol=1e-13)


def test_stiffness_symmetric(desk_mesh):
    rho, b = uniform_fields(desk_mesh, b=0.2, rho=0.13)
    K = el.assemble_elasticity(desk_mesh, rho, 0.8, b, SPEC)
    assert abs(K - K.T).max() == 0.0


def test_rigid_modes_in_kernel(desk_mesh):
    rho, b = uniform_fields(desk_mesh, b=0.4, rho=0.13)
    K = el.assemble_elasticity(desk_mesh, rho, 0.7, b, SPEC)
    scale = np.abs(K).max()
    n = desk_mesh.n_nodes
    translation = np.zeros(3 * n)
    translation[1::3] = 1.0
    assert np.abs(K @ translation).max() <= 1e-9 * scale
    rotation = np.zeros(3 * n)
    rotation[0::3] = -desk_mesh.nodes[:, 1]
    rotation[1::3] = desk_mesh.nodes[:, 0]
    rotation /= np.abs(rotation).max()
    assert np.abs(K @ rotation).max() <= 1e-9 * scale


def test_kernel_is_exactly_six_dimensional():
    mesh = build_cylinder_mesh(4.0, 2.0, 1.2)
    rho, b = uniform_fields(mesh)
    K = el.assemble_elasticity(mesh, rho, 1.0, b, SPEC).toarray()
    eigvals = np.linalg.eigvalsh(K)
    scale = eigvals[-1]
    assert np.all(np.abs(eigvals[:6]) <= 1e-10 * scale)
    assert eigvals[6] > 1e-6 * scale


def test_rejects_inadmissible_bone_fraction(desk_mesh):
    rho = np.full(desk_mesh.n_nodes, 0.13)
    b = np.full(desk_mesh.n_nodes, 0.95)  # exceeds 1 - rho
    with pytest.raises(ValueError):
        el.assemble_elasticity(desk_mesh, rho, 1.0, b, SPEC)


def test_traction_resultant(desk_mesh):
    from ossify import boundary_area
    f = el.traction_load(desk_mesh, 0.001)
    area = boundary_area(desk_mesh,
                         lambda t: t.elastic is ElasticRole.NEUMANN_LOADED)
    assert f[2::3].sum() == pytest.approx(-0.001 * area, rel=1e-12)
    assert np.all(f[0::3] == 0.0) and np.all(f[1::3] == 0.0)


def test_zero_traction_zero_load(desk_mesh):
    assert np.all(el.traction_load(desk_mesh, 0.0) == 0.0)


def test_reduction_preserves_symmetry(desk_mesh):
    rho, b = uniform_fields(desk_mesh)
    K = el.assemble_elasticity(desk_mesh, rho, 1.0, b, SPEC)
    system = el.apply_elastic_bcs(K, desk_mesh, 0.001)
    assert system.mode == el.MODE_ELIMINATED
    assert abs(system.matrix - system.matrix.T).max() == 0.0


def test_zero_load_zero_displacement(desk_mesh):
    rho, b = uniform_fields(desk_mesh)
    K = el.assemble_elasticity(desk_mesh, rho, 1.0, b, SPEC)
    system = el.apply_elastic_bcs(K, desk_mesh, 0.0)
    sol = el.solve_cg(system, mesh=desk_mesh)
    assert np.all(sol.u == 0.0)


def axial_patch_system(mesh, traction=0.001):
    """Uniaxial compression: bottom held axially plus the minimal in-plane
    pins consistent with the exact solution."""
    rho, b = uniform_fields(mesh)
    K = el.assemble_elasticity(mesh, rho, 1.0, b, SPEC)
    f = el.traction_load(mesh, traction)
    bottom = mesh.boundary_nodes(elastic=ElasticRole.DIRICHLET)
    fixed = [3 * n + 2 for n in bottom]
    center = bottom[np.argmin(np.linalg.norm(mesh.nodes[bottom, :2], axis=1))]
    fixed += [3 * center, 3 * center + 1]
    on_x = [n for n in bottom
            if abs(mesh.nodes[n, 1]) < 1e-9 and mesh.nodes[n, 0] > 1.0]
    fixed.append(3 * on_x[0] + 1)
    return K, el.reduce_system(K, f, np.array(sorted(fixed)))


def test_uniaxial_patch(desk_mesh):
    _, system = axial_patch_system(desk_mesh)
    sol = el.solve_cg(system, tol=1e-10, mesh=desk_mesh)
    expected = -0.001 / 5.0
    assert np.all(np.abs(sol.strain[:, 2, 2] - expected) <= 0.01 * abs(expected))
    lateral = 0.3 * 0.001 / 5.0
    assert np.all(np.abs(sol.strain[:, 0, 0] - lateral) <= 0.02 * lateral)


def test_patch_stimulus_matches_analytic(desk_mesh):
    _, system = axial_patch_system(desk_mesh)
    sol = el.solve_cg(system, tol=1e-10, mesh=desk_mesh)
    _, nodal = el.element_strain_stimulus(sol, desk_mesh)
    expected = (0.001 / 5.0) * np.sqrt(1.0 + 2.0 * 0.3 ** 2)
    assert np.all(np.abs(nodal - expected) <= 0.02 * expected)


def test_energy_identity(desk_mesh):
    _, system = axial_patch_system(desk_mesh)
    sol = el.solve_cg(system, tol=1e-10, mesh=desk_mesh)
    u_red = sol.u.ravel()[system.free]
    energy = 0.5 * u_red @ (system.matrix @ u_red)
    work = 0.5 * system.load @ u_red
    assert abs(energy - work) <= 10 * 1e-10 * abs(work)


def test_rigid_projected_solve(coarse_mesh):
    rho, b = uniform_fields(coarse_mesh)
    K = el.assemble_elasticity(coarse_mesh, rho, 1.0, b, SPEC)
    modes = rigid_body_modes(coarse_mesh.nodes)
    rng = np.random.default_rng(5)
    f = rng.normal(size=3 * coarse_mesh.n_nodes)
    f -= modes.T @ (modes @ f)  # self-equilibrate
    system = el.ReducedSystem(matrix=K, load=f, mode=el.MODE_RIGID_PROJECTED,
                              full_size=K.shape[0],
                              free=np.arange(K.shape[0]),
                              fixed=np.empty(0, dtype=int),
                              fixed_values=np.empty(0), modes=modes)
    sol = el.solve_cg(system, tol=1e-10, mesh=coarse_mesh)
    assert np.abs(modes @ sol.u.ravel()).max() <= 1e-9
    residual = f - K @ sol.u.ravel()
    assert np.linalg.norm(residual) <= 1e-9 * np.linalg.norm(f)


def test_rigid_projected_rejects_incompatible_load(coarse_mesh):
    rho, b = uniform_fields(coarse_mesh)
    K = el.assemble_elasticity(coarse_mesh, rho, 1.0, b, SPEC)
    f = el.traction_load(coarse_mesh, 0.001)  # net resultant, incompatible
    modes = rigid_body_modes(coarse_mesh.nodes)
    system = el.ReducedSystem(matrix=K, load=f, mode=el.MODE_RIGID_PROJECTED,
                              full_size=K.shape[0],
                              free=np.arange(K.shape[0]),
                              fixed=np.empty(0, dtype=int),
                              fixed_values=np.empty(0), modes=modes)
    with pytest.raises(SolverError):
        el.solve_cg(system, mesh=coarse_mesh)


def test_pure_neumann_flagged(coarse_mesh):
    # strip the Dirichlet tags: every face free
    from ossify.mesh import Mesh, TAG_LATERAL
    free_mesh = Mesh(nodes=coarse_mesh.nodes, tets=coarse_mesh.tets,
                     boundary_tris=coarse_mesh.boundary_tris,
                     tri_tags=[TAG_LATERAL] * len(coarse_mesh.tri_tags),
                     element_region=coarse_mesh.element_region)
    rho, b = uniform_fields(free_mesh)
    K = el.assemble_elasticity(free_mesh, rho, 1.0, b, SPEC)
    system = el.apply_elastic_bcs(K, free_mesh, 0.0)
    assert system.mode == el.MODE_RIGID_PROJECTED


def test_nonconvergence_raises(desk_mesh):
    _, system = axial_patch_system(desk_mesh)
    with pytest.raises(SolverError) as err:
        el.solve_cg(system, tol=1e-14, max_iter=2)
    assert err.value.residual is not None


def test_stimulus_zero_for_rigid_translation(desk_mesh):
    u = np.tile(np.array([0.3, -0.2, 0.9]), (desk_mesh.n_nodes, 1))
    strain = el.element_strain(desk_mesh, u)
    assert np.abs(strain).max() <= 1e-12


def test_stimulus_exact_for_linear_field(desk_mesh):
    M = np.array([[2e-4, 1e-4, 0.0], [1e-4, -1e-4, 5e-5], [0.0, 5e-5, 3e-4]])
    u = desk_mesh.nodes @ M.T
    strain = el.element_strain(desk_mesh, u)
    sol = el.DisplacementSolution(u=u, strain=strain,
                                  strain_norm=np.zeros(len(strain)),
                                  cg_iterations=0, residual=0.0, rhs_norm=0.0)
    elem, _ = el.element_strain_stimulus(sol, desk_mesh)
    assert np.allclose(elem, np.linalg.norm(M), rtol=1e-12)


def test_stimulus_invariant_under_rigid_modes(desk_mesh):
    _, system = axial_patch_system(desk_mesh)
    sol = el.solve_cg(system, tol=1e-10, mesh=desk_mesh)
    elem0, nodal0 = el.element_strain_stimulus(sol, desk_mesh)
    shifted = sol.u + np.array([0.5, -0.1, 0.2])
    rot = np.cross(np.array([1e-3, -2e-3, 5e-4]), desk_mesh.nodes)
    shifted = shifted + rot
    strain = el.element_strain(desk_mesh, shifted)
    sol2 = el.DisplacementSolution(u=shifted, strain=strain,
                                   strain_norm=np.zeros(len(strain)),
                                   cg_iterations=0, residual=0.0, rhs_norm=0.0)
    elem1, nodal1 = el.element_strain_stimulus(sol2, desk_mesh)
    assert np.abs(elem1 - elem0).max() <= 1e-10
    assert np.abs(nodal1 - nodal0).max() <= 1e-10


def test_monotone_stiffening(desk_mesh):
    rho = np.full(desk_mesh.n_nodes, 0.13)
    compliances = []
    for level in (0.0, 0.3):
        b = np.full(desk_mesh.n_nodes, level)
        K = el.assemble_elasticity(desk_mesh, rho, 1.0, b, SPEC)
        system = el.apply_elastic_bcs(K, desk_mesh, 0.001)
        sol = el.solve_cg(system, tol=1e-10, mesh=desk_mesh)
        compliances.append(system.load @ sol.u.ravel()[system.free])
    assert compliances[1] < compliances[0]


def solve_mms(mesh):
    """Pure-Dirichlet manufactured problem with a constant body force."""
    rho, b = uniform_fields(mesh)
    K = el.assemble_elasticity(mesh, rho, 1.0, b, SPEC)
    load = constant_body_load(mesh, mms_body_force(SPEC.lambda_b, SPEC.mu_b))
    bnodes = boundary_node_set(mesh)
    fixed = (3 * bnodes[:, None] + np.arange(3)).ravel()
    values = mms_displacement(mesh.nodes[bnodes]).ravel()
    system = el.reduce_system(K, load, fixed, values)
    sol = el.solve_cg(system, tol=1e-11, mesh=mesh)
    return l2_error_vector(mesh, sol.u, mms_displacement)


def test_mms_error_shrinks():
    errors = [solve_mms(build_cylinder_mesh(30.0, 10.0, e)) for e in (5.0, 2.5)]
    assert errors[1] < errors[0] / 3.0


def test_mms_second_order():
    errors = [solve_mms(build_cylinder_mesh(30.0, 10.0, e))
              for e in (5.0, 2.5, 1.25)]
    rate = observed_rate(errors)
    assert rate == pytest.approx(2.0, abs=0.3)
