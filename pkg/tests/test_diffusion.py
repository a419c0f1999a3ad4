import numpy as np
import pytest

from ossify import build_cylinder_mesh
from ossify.diffusion import (DiffusionSystem, MoleculeState,
                              assemble_diffusion, diffusion_step,
                              positivity_report)
from ossify.materials import ParameterSet

from helpers import (MMS_SCALAR_LAPLACIAN, boundary_node_set, mms_scalar,
                     observed_rate, reference_tet_mesh, scalar_mass_matrix)


def no_flux_system(mesh, params, rho=None):
    if rho is None:
        rho = np.full(mesh.n_nodes, params.rho_const)
    return DiffusionSystem(mesh, rho, params,
                           dirichlet_nodes=np.array([], dtype=int))


def test_constants_in_stiffness_kernel(desk_mesh, rho_desk, params):
    _, A = assemble_diffusion(desk_mesh, rho_desk, params.k5)
    ones = np.ones(desk_mesh.n_nodes)
    assert np.abs(A @ ones).max() <= 1e-9 * abs(A).max()


def test_total_mass_is_volume(desk_mesh, rho_desk, params):
    M, _ = assemble_diffusion(desk_mesh, rho_desk, params.k5)
    ones = np.ones(desk_mesh.n_nodes)
    volume = desk_mesh.tet_volumes().sum()
    assert ones @ (M @ ones) == pytest.approx(volume, rel=1e-9)


def test_reference_tet_hand_assembly():
    mesh = reference_tet_mesh()
    rho = np.zeros(4)
    M, A = assemble_diffusion(mesh, rho, 2.0)
    volume = 1.0 / 6.0
    grads = np.array([[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0],
                      [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    a_ref = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            a_ref[i, j] = 2.0 * volume * grads[i] @ grads[j]
    m_ref = volume / 20.0 * (np.ones((4, 4)) + np.eye(4))
    assert np.allclose(A.toarray(), a_ref, atol=1e-14)
    assert np.allclose(M.toarray(), m_ref, atol=1e-14)


def test_equilibrium_fixed_point(coarse_mesh, params):
    """Uniform no-flux setting with production balancing decay keeps a = 1."""
    system = no_flux_system(coarse_mesh, params)
    ones = np.ones(coarse_mesh.n_nodes)
    for i in range(2):
        stimulus = np.full(coarse_mesh.n_nodes, params.k3[i] / params.k2[i])
        a_next = system.step_single(ones, params.k2[i], params.k3[i],
                                    stimulus * 1.0, params.dt, tol=1e-12)
        assert np.abs(a_next - 1.0).max() <= 1e-8


def heat_series(z, t, length, diff, terms=200):
    """Analytic 1D relaxation 0 -> 1 with both ends held at 1 (no decay)."""
    out = np.ones_like(z)
    for k in range(1, 2 * terms, 2):
        lam = diff * (k * np.pi / length) ** 2
        out -= 4.0 / (k * np.pi) * np.sin(k * np.pi * z / length) * np.exp(-lam * t)
    return out


def relax_run(edge, dt, t_end, params):
    mesh = build_cylinder_mesh(30.0, 10.0, edge)
    rho = np.full(mesh.n_nodes, params.rho_const)
    system = DiffusionSystem(mesh, rho, params)
    a = np.zeros(mesh.n_nodes)
    a[system.dirichlet_nodes] = 1.0
    zero = np.zeros(mesh.n_nodes)
    steps = round(t_end / dt)
    prev = a
    for _ in range(steps):
        nxt = system.step_single(prev, 0.0, 0.0, zero, dt)
        assert np.all(nxt >= prev - 1e-8)
        assert nxt.min() >= -1e-8 and nxt.max() <= 1.0 + 1e-8
        prev = nxt
    return mesh, prev


def test_dirichlet_relaxation_matches_heat_series(params):
    diff = params.k5 * (1.0 - params.rho_const)
    t_end = 0.5
    errors = []
    for edge, dt in ((2.5, 1.0 / 16.0), (1.25, 1.0 / 64.0)):
        mesh, a = relax_run(edge, dt, t_end, params)
        exact = heat_series(mesh.nodes[:, 2], t_end, 30.0, diff)
        errors.append(np.abs(a - exact).max())
    assert errors[1] < 0.5 * errors[0]
    assert errors[1] < 0.02


def test_small_dt_step_is_small(desk_mesh, rho_desk, params):
    system = no_flux_system(desk_mesh, params)
    a = 0.5 + 0.1 * np.cos(np.pi * desk_mesh.nodes[:, 2] / 30.0)
    stimulus = np.full(desk_mesh.n_nodes, 1e-3)
    c = np.full(desk_mesh.n_nodes, 0.5)
    a_next = system.step_single(a, params.k2[0], params.k3[0],
                                stimulus * c, 1e-6)
    assert np.abs(a_next - a).max() <= 1e-4


def test_positivity_report_cases(desk_mesh, params):
    state = MoleculeState.initial(desk_mesh, params)
    assert positivity_report(state).ok
    state.a[0, 17] = -1e-6
    report = positivity_report(state)
    assert not report.ok
    assert 17 in report.violations[0].indices
    zero = MoleculeState(a=np.zeros((2, desk_mesh.n_nodes)),
                         k2=params.k2, k3=params.k3)
    assert positivity_report(zero).ok


def test_step_operator_symmetric_and_deterministic(coarse_mesh, params):
    system = DiffusionSystem(coarse_mesh, np.full(coarse_mesh.n_nodes, 0.13), params)
    k_ff, _ = system._system_for(params.dt, params.k3[0])
    assert abs(k_ff - k_ff.T).max() == 0.0
    state = MoleculeState.initial(coarse_mesh, params, system.dirichlet_nodes)
    stim = np.full(coarse_mesh.n_nodes, 2e-3)
    c = np.full(coarse_mesh.n_nodes, 0.4)
    one = system.step(state, stim, c, params.dt)
    two = system.step(state, stim, c, params.dt)
    assert np.array_equal(one.a, two.a)


def test_molecule_order_permutation_is_bitwise_neutral(coarse_mesh, params):
    rho = np.full(coarse_mesh.n_nodes, 0.13)
    system = DiffusionSystem(coarse_mesh, rho, params)
    rng = np.random.default_rng(2)
    a = rng.uniform(0.2, 0.8, size=(2, coarse_mesh.n_nodes))
    a[:, system.dirichlet_nodes] = 1.0
    stim = rng.uniform(0.0, 1e-3, size=coarse_mesh.n_nodes)
    c = rng.uniform(0.0, 0.8, size=coarse_mesh.n_nodes)
    fwd = system.step(MoleculeState(a=a, k2=params.k2, k3=params.k3),
                      stim, c, params.dt)
    rev = system.step(MoleculeState(a=a[::-1].copy(), k2=params.k2[::-1],
                                    k3=params.k3[::-1]), stim, c, params.dt)
    assert np.array_equal(fwd.a, rev.a[::-1])


def test_functional_entry_point(coarse_mesh, params):
    system = DiffusionSystem(coarse_mesh, np.full(coarse_mesh.n_nodes, 0.13), params)
    state = MoleculeState.initial(coarse_mesh, params, system.dirichlet_nodes)
    stim = np.zeros(coarse_mesh.n_nodes)
    out = diffusion_step(system, state, stim, stim, params.dt)
    assert out.a.shape == state.a.shape
    assert np.all(out.a[:, system.dirichlet_nodes] == 1.0)


def test_rejects_nonpositive_dt(coarse_mesh, params):
    system = no_flux_system(coarse_mesh, params)
    a = np.ones(coarse_mesh.n_nodes)
    with pytest.raises(ValueError):
        system.step_single(a, 1.0, 1.0, a, -0.1)


# --- manufactured solutions -------------------------------------------------

def mms_spatial_error(mesh, params, steps, t_end=0.1):
    """Time-dependent manufactured solution a = 1 + exp(-t) q(x) with the
    matching source, Dirichlet everywhere from the exact values."""
    diff = params.k5 * (1.0 - params.rho_const)
    k3 = 2.0
    bnodes = boundary_node_set(mesh)
    rho = np.full(mesh.n_nodes, params.rho_const)
    system = DiffusionSystem(mesh, rho, params, dirichlet_nodes=bnodes)
    q = mms_scalar(mesh.nodes)

    def exact(t):
        return 1.0 + np.exp(-t) * q

    def source(t):
        # d_t a - div(D grad a) + k3 a, evaluated nodally
        return (-np.exp(-t) * q - diff * np.exp(-t) * MMS_SCALAR_LAPLACIAN
                + k3 * (1.0 + np.exp(-t) * q))

    dt = t_end / steps
    a = exact(0.0)
    for n in range(steps):
        t_new = (n + 1) * dt
        a = system.step_single(a, 1.0, k3, source(n * dt), dt,
                               dirichlet_values=exact(t_new)[bnodes], tol=1e-12)
    err = a - exact(t_end)
    mass = scalar_mass_matrix(mesh)
    return float(np.sqrt(err @ (mass @ err)))


def test_mms_spatial_second_order(params):
    errors = []
    for edge, steps in ((5.0, 2), (2.5, 8), (1.25, 32)):
        mesh = build_cylinder_mesh(30.0, 10.0, edge)
        errors.append(mms_spatial_error(mesh, params, steps))
    rate = observed_rate(errors, factor=2.0)
    assert rate == pytest.approx(2.0, abs=0.3)


def test_mms_temporal_first_order(coarse_mesh, params):
    """Linear-in-space manufactured solution isolates the time error."""
    diff = params.k5 * (1.0 - params.rho_const)
    del diff  # no curvature: the diffusion term vanishes exactly
    k3 = 2.0
    bnodes = boundary_node_set(coarse_mesh)
    rho = np.full(coarse_mesh.n_nodes, params.rho_const)
    system = DiffusionSystem(coarse_mesh, rho, params, dirichlet_nodes=bnodes)
    q = coarse_mesh.nodes[:, 2] / 30.0

    def exact(t):
        return 1.0 + np.exp(-t) * q

    t_end = 0.5
    errors = []
    for steps in (4, 8, 16):
        dt = t_end / steps
        a = exact(0.0)
        for n in range(steps):
            src = -np.exp(-n * dt) * q + k3 * exact(n * dt)
            a = system.step_single(a, 1.0, k3, src, dt,
                                   dirichlet_values=exact((n + 1) * dt)[bnodes],
                                   tol=1e-13)
        errors.append(np.abs(a - exact(t_end)).max())
    rate = observed_rate(errors, factor=2.0)
    assert rate == pytest.approx(1.0, abs=0.3)
