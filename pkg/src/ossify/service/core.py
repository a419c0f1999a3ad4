"""Service operations shared by the HTTP routes (and exercised by the CLI
through them): everything works on a TOML config document."""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .. import postprocess, vtk_io
from ..coupling import contraction_factor, picard_iterate, run_simulation
from ..mesh import ElasticRole, REGION_FIXATEUR, boundary_area, validate_mesh
from ..scenario import dump_config, load_config_data
from ..validation import ConfigError


def parse_config(config_toml: str):
    try:
        data = tomllib.loads(config_toml)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"TOML parse error: {err}")
    return load_config_data(data)


def _build_mesh(scenario):
    try:
        return scenario.mesh.build()
    except ValueError as err:
        raise ConfigError(f"mesh generation rejected the configuration: {err}")


def mesh_report(config_toml: str, out_path: str | None = None) -> dict:
    scenario, _ = parse_config(config_toml)
    mesh = _build_mesh(scenario)
    report = validate_mesh(mesh)
    top = boundary_area(mesh, lambda tag: tag.elastic is ElasticRole.NEUMANN_LOADED)
    if out_path:
        vtk_io.export_mesh_vtk(mesh, out_path)
    return {
        "nodes": mesh.n_nodes,
        "tets": mesh.n_tets,
        "fixateur_tets": int((mesh.element_region == REGION_FIXATEUR).sum()),
        "boundary_tris": len(mesh.boundary_tris),
        "valid": report.ok,
        "violations": report.messages(),
        "top_cap_area_mm2": top,
        "out_path": out_path,
    }


def run_job(config_toml: str, out_dir: str, output_every: int | None = None) -> dict:
    scenario, params = parse_config(config_toml)
    cadence = output_every or scenario.output_every
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    mesh = _build_mesh(scenario)
    trajectory = run_simulation(mesh, params, scenario)
    rho = np.full(mesh.n_nodes, params.rho_const)

    outputs = []
    for idx, state in enumerate(trajectory.states):
        if idx % cadence == 0 or idx == len(trajectory.states) - 1:
            path = target / f"state_{idx:04d}.vtk"
            vtk_io.export_vtk(state, mesh, str(path))
            outputs.append(str(path))
    csv_path = target / "timeseries.csv"
    postprocess.export_timeseries(trajectory, mesh, str(csv_path))
    outputs.append(str(csv_path))

    months = [m for m in (3.0, 12.0)
              if m <= params.T + 1e-9 and abs(round(m / params.dt) * params.dt - m) < 1e-9]
    if not months:
        months = [trajectory.states[-1].t]
    # keep one axial node plane per slice so no bin comes up empty
    n_planes = len(np.unique(np.round(mesh.nodes[:, 2], 9)))
    n_slices = min(12, max(2, n_planes - 1))
    slices_path = target / "slices.csv"
    postprocess.export_slice_profiles(trajectory, mesh, rho, str(slices_path),
                                      months, n_slices=n_slices)
    outputs.append(str(slices_path))

    config_path = target / "config.toml"
    config_path.write_text(dump_config(scenario, params))
    outputs.append(str(config_path))

    final = trajectory.states[-1]
    means = postprocess.mean_fields(final, mesh)
    return {
        "steps": len(trajectory.states) - 1,
        "nodes": mesh.n_nodes,
        "tets": mesh.n_tets,
        "runtime_seconds": time.perf_counter() - started,
        "final_t_months": final.t,
        "final_sigma": final.sigma,
        "final_mean_b": means["mean_b"],
        "final_max_b": means["max_b"],
        "outputs": outputs,
    }


def picard_job(config_toml: str, window: float, max_iter: int = 20) -> dict:
    scenario, params = parse_config(config_toml)
    mesh = _build_mesh(scenario)
    _, report = picard_iterate(mesh, params, scenario, window, max_iter=max_iter)
    tail = None
    if len(report.distances) >= 2:
        tail = contraction_factor(report)
    return {
        "converged": report.converged,
        "iterations": report.iterations,
        "window": report.window,
        "distances": report.distances,
        "contraction_factors": report.contraction_factors,
        "tail_contraction_factor": tail,
    }
