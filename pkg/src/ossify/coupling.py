"""Orchestration of the coupled system.

One time step solves, in order: mechanical equilibrium with the current bone
density, the reaction-diffusion update for the molecules (source frozen at
the old time level), the osteoblast update, then the bone update -- both
logistic updates reading the old-time values of each other's field.  The
same successive-solve map, applied to a whole candidate trajectory instead
of marching in time, is the fixed-point iteration whose contraction the
Picard diagnostics measure.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import elasticity, materials
from .diffusion import DiffusionSystem, MoleculeState, POSITIVITY_EPS
from .elasticity import DisplacementSolution
from .materials import ElasticTensorSpec, ParameterSet, validate_parameters
from .mesh import Mesh
from .ode import TissueState, bone_step, cell_step
from .validation import ConfigError, SolverError

log = logging.getLogger("ossify.coupling")


@dataclass
class SimulationState:
    """Everything known at one stored time point."""

    t: float
    sigma: float
    displacement: DisplacementSolution
    molecules: MoleculeState
    tissue: TissueState
    stimulus_elem: np.ndarray   # |eps(u)|_delta per element
    stimulus_nodal: np.ndarray  # volume-weighted nodal projection
    strain_energy: float        # 0.5 * integral of C eps : eps (kN mm)


@dataclass
class Trajectory:
    states: list[SimulationState]
    dt: float
    params: ParameterSet

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def state_at(self, t: float) -> SimulationState:
        idx = int(round(t / self.dt))
        if not (0 <= idx < len(self.states)) or abs(idx * self.dt - t) > 1e-9:
            raise KeyError(f"no stored state at t={t} (dt={self.dt})")
        return self.states[idx]


@dataclass
class PicardReport:
    """Convergence record of the fixed-point iteration."""

    window: float
    distances: list[float] = field(default_factory=list)
    tol: float = 0.0
    max_iter: int = 0

    @property
    def contraction_factors(self) -> list[float]:
        out = []
        for prev, cur in zip(self.distances, self.distances[1:]):
            out.append(cur / prev if prev > 0 else 0.0)
        return out

    @property
    def converged(self) -> bool:
        return bool(self.distances) and self.distances[-1] <= self.tol

    @property
    def iterations(self) -> int:
        return len(self.distances)


def contraction_factor(report: PicardReport) -> float:
    """Geometric mean of the tail (last half) of the contraction factors."""
    if len(report.distances) < 2:
        raise ValueError("need at least 3 iterates (2 distances) to estimate "
                         "a contraction factor")
    if any(d == 0.0 for d in report.distances):
        return 0.0
    factors = report.contraction_factors
    tail = factors[len(factors) // 2:]
    return float(np.exp(np.mean(np.log(tail))))


def _n_workers() -> int:
    try:
        return max(1, int(os.environ.get("OSSIFY_THREADS", "1")))
    except ValueError:
        return 1


class CoupledSystem:
    """Shared machinery between the time-marching run and the Picard mode."""

    def __init__(self, mesh: Mesh, params: ParameterSet, scenario):
        report = validate_parameters(params)
        if not report.ok:
            raise ConfigError("invalid parameters: " + str(report), report.messages())
        self.mesh = mesh
        self.params = params
        self.scenario = scenario
        self.rho = np.full(mesh.n_nodes, params.rho_const)
        self.spec = ElasticTensorSpec.from_parameters(params)
        self.active = ~mesh.fixateur_node_mask()
        self.diffusion = DiffusionSystem(
            mesh, self.rho, params, dirichlet_value=scenario.molecule_dirichlet)
        self._prev_u: np.ndarray | None = None

    def initial_molecules(self) -> MoleculeState:
        return MoleculeState.initial(self.mesh, self.params,
                                     self.diffusion.dirichlet_nodes,
                                     self.scenario.molecule_dirichlet)

    def solve_elastic(self, t: float, b: np.ndarray, warm: bool = True):
        """Equilibrium solve at time t with bone density b; returns the full
        state ingredients (solution, stimulus fields, strain energy)."""
        sig = materials.sigma(t, self.params.k1)
        matrix = elasticity.assemble_elasticity(self.mesh, self.rho, sig, b, self.spec)
        system = elasticity.apply_elastic_bcs(matrix, self.mesh, self.scenario.traction)
        x0 = None
        if warm and self._prev_u is not None:
            x0 = self._prev_u.ravel()[system.free] if system.mode == "eliminated" \
                else self._prev_u.ravel()
        sol = elasticity.solve_cg(system, tol=self.params.cg_tol, x0=x0, mesh=self.mesh)
        self._prev_u = sol.u
        stim_elem, stim_nodal = elasticity.element_strain_stimulus(
            sol, self.mesh, self.params.delta_mode, self.params.delta_max)
        u_flat = sol.u.ravel()
        energy = 0.5 * float(u_flat @ (matrix @ u_flat))
        return sol, stim_elem, stim_nodal, energy, sig

    def make_state(self, t: float, molecules: MoleculeState, tissue: TissueState,
                   warm: bool = True) -> SimulationState:
        sol, stim_e, stim_n, energy, sig = self.solve_elastic(t, tissue.b, warm)
        return SimulationState(t=t, sigma=sig, displacement=sol,
                               molecules=molecules, tissue=tissue,
                               stimulus_elem=stim_e, stimulus_nodal=stim_n,
                               strain_energy=energy)

    def advance_tissue(self, tissue: TissueState, molecules: MoleculeState,
                       dt: float) -> TissueState:
        """Osteoblast then bone update, both reading the old-time fields."""
        c_next = cell_step(tissue, molecules, self.rho, self.params, dt, self.active).c
        b_next = bone_step(tissue, molecules, self.rho, self.params, dt, self.active).b
        if np.any(c_next < tissue.c) or np.any(b_next < tissue.b):
            raise SolverError("tissue fields decreased within a step; "
                              "the barrier update is broken")
        return TissueState(c=c_next, b=b_next)

    def check_molecules(self, molecules: MoleculeState) -> None:
        low = molecules.a.min()
        if low < -POSITIVITY_EPS:
            raise SolverError(
                f"molecule concentration fell below -{POSITIVITY_EPS:g}: {low:.3e}")


def _step_count(total: float, dt: float, what: str) -> int:
    n = round(total / dt)
    if n < 1 or abs(n * dt - total) > 1e-9 * max(1.0, total):
        raise ConfigError(f"dt={dt} does not divide the {what} {total} evenly")
    return n


def run_simulation(mesh: Mesh, params: ParameterSet, scenario) -> Trajectory:
    """March the staggered scheme from 0 to T, storing every step."""
    system = CoupledSystem(mesh, params, scenario)
    n_steps = _step_count(params.T, params.dt, "period T")
    dt = params.dt

    molecules = system.initial_molecules()
    tissue = TissueState.initial(mesh.n_nodes)
    states = [system.make_state(0.0, molecules, tissue, warm=False)]

    workers = _n_workers()
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for n in range(n_steps):
            prev = states[-1]
            molecules = system.diffusion.step(molecules, prev.stimulus_nodal,
                                              tissue.c, dt, executor)
            system.check_molecules(molecules)
            tissue = system.advance_tissue(tissue, molecules, dt)
            t_next = (n + 1) * dt
            state = system.make_state(t_next, molecules, tissue)
            states.append(state)
            log.info("step %3d  t=%7.3f  cg=%4d  |a|max=%.3f  c:[%.4f,%.4f]  "
                     "b:[%.4f,%.4f]", n + 1, t_next,
                     state.displacement.cg_iterations, molecules.a.max(),
                     tissue.c.min(), tissue.c.max(), tissue.b.min(), tissue.b.max())
    finally:
        if executor is not None:
            executor.shutdown()
    return Trajectory(states=states, dt=dt, params=params)


def apply_iteration_operator(system: CoupledSystem, c_traj: np.ndarray,
                             b_traj: np.ndarray, dt: float):
    """One application of the successive-solve map to a candidate trajectory.

    c_traj/b_traj hold the input tissue trajectories at the grid times
    0..m*dt (shape (m+1, n)).  Elasticity and the molecule sources read the
    input data; the returned tissue trajectories evolve from zero under the
    rates built from the freshly solved molecule fields.
    """
    m = c_traj.shape[0] - 1
    n_nodes = c_traj.shape[1]
    molecules = system.initial_molecules()
    c_new = np.zeros_like(c_traj)
    b_new = np.zeros_like(b_traj)
    tissue_bar = TissueState.initial(n_nodes)
    system._prev_u = None
    last = None
    for k in range(m):
        _, _, stim_nodal, _, _ = system.solve_elastic(k * dt, b_traj[k])
        molecules = system.diffusion.step(molecules, stim_nodal, c_traj[k], dt)
        system.check_molecules(molecules)
        data = TissueState(c=c_traj[k].copy(), b=b_traj[k].copy())
        # evolving fields carry their own history; rate data comes from the
        # input trajectory, mirroring the successive-solve order
        c_bar = cell_step(TissueState(c=tissue_bar.c, b=data.b), molecules,
                          system.rho, system.params, dt, system.active).c
        b_bar = bone_step(TissueState(c=data.c, b=tissue_bar.b), molecules,
                          system.rho, system.params, dt, system.active).b
        tissue_bar = TissueState(c=c_bar, b=b_bar)
        c_new[k + 1] = c_bar
        b_new[k + 1] = b_bar
        last = molecules
    final_state = system.make_state(m * dt, last, tissue_bar)
    return c_new, b_new, final_state


def picard_iterate(mesh: Mesh, params: ParameterSet, scenario, window: float,
                   max_iter: int = 20, tol: float | None = None):
    """Iterate the successive-solve map over [0, window] until the tissue
    trajectories stop moving; returns the end state and the distance record."""
    if window > params.T + 1e-12:
        raise ConfigError(f"window {window} exceeds the period T={params.T}")
    if tol is None:
        tol = params.picard_tol
    system = CoupledSystem(mesh, params, scenario)
    m = _step_count(window, params.dt, "window")

    c_traj = np.zeros((m + 1, mesh.n_nodes))
    b_traj = np.zeros((m + 1, mesh.n_nodes))
    report = PicardReport(window=window, tol=tol, max_iter=max_iter)
    final_state = None
    for it in range(max_iter):
        c_new, b_new, final_state = apply_iteration_operator(system, c_traj, b_traj,
                                                             params.dt)
        dist = max(float(np.abs(c_new - c_traj).max()),
                   float(np.abs(b_new - b_traj).max()))
        report.distances.append(dist)
        c_traj, b_traj = c_new, b_new
        log.info("picard iterate %2d  distance %.3e", it + 1, dist)
        if dist <= tol:
            break
    return final_state, report
