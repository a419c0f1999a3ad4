"""Slice-average profiles and CSV time-series export."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling import SimulationState, Trajectory
from .mesh import Mesh, REGION_SCAFFOLD

_FMT = "%.17g"


@dataclass
class SliceProfile:
    """Relative bone density b/(1-rho) averaged over axial slices."""

    centers: np.ndarray   # slice mid-positions along the axis, mm
    values: np.ndarray    # volume-weighted slice means, in [0, 1]
    t: float              # months


def _scaffold_weights(mesh: Mesh) -> np.ndarray:
    """Nodal volumes restricted to scaffold elements; fixateur-only nodes
    get weight zero and drop out of every average."""
    return mesh.node_volumes(region=REGION_SCAFFOLD)


def slice_average(state: SimulationState, mesh: Mesh, rho_field: np.ndarray,
                  n_slices: int) -> SliceProfile:
    """Partition the axis into equal bins and average b/(1-rho) per bin."""
    if n_slices < 2:
        raise ValueError(f"need at least 2 slices, got {n_slices}")
    z = mesh.nodes[:, 2]
    length = float(z.max())
    weights = _scaffold_weights(mesh)
    relative = state.tissue.b / (1.0 - np.asarray(rho_field, dtype=float))
    bins = np.clip((z / length * n_slices).astype(int), 0, n_slices - 1)
    wsum = np.bincount(bins, weights=weights, minlength=n_slices)
    vsum = np.bincount(bins, weights=weights * relative, minlength=n_slices)
    if np.any(wsum <= 0):
        empty = np.flatnonzero(wsum <= 0)
        raise ValueError(f"slice bin(s) {empty.tolist()} contain no scaffold "
                         "volume; the mesh is too coarse for this slice count")
    centers = (np.arange(n_slices) + 0.5) * length / n_slices
    return SliceProfile(centers=centers, values=vsum / wsum, t=state.t)


def mean_fields(state: SimulationState, mesh: Mesh) -> dict[str, float]:
    """Volume-weighted means over the scaffold region plus global extrema."""
    w = _scaffold_weights(mesh)
    total = w.sum()
    out = {
        "mean_b": float(w @ state.tissue.b / total),
        "max_b": float(state.tissue.b.max()),
        "mean_c": float(w @ state.tissue.c / total),
    }
    for i in range(state.molecules.n_molecules):
        out[f"mean_a{i + 1}"] = float(w @ state.molecules.a[i] / total)
    return out


def export_timeseries(trajectory: Trajectory, mesh: Mesh, path: str) -> None:
    """One CSV row per stored step: t, sigma, tissue/molecule means, energy."""
    if not trajectory.states:
        raise ValueError("empty trajectory")
    n_mol = trajectory.states[0].molecules.n_molecules
    header = ["t_months", "sigma", "mean_b", "max_b", "mean_c"]
    header += [f"mean_a{i + 1}" for i in range(n_mol)]
    header += ["total_strain_energy"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for state in trajectory.states:
            means = mean_fields(state, mesh)
            row = [state.t, state.sigma, means["mean_b"], means["max_b"],
                   means["mean_c"]]
            row += [means[f"mean_a{i + 1}"] for i in range(n_mol)]
            row += [state.strain_energy]
            if not np.all(np.isfinite(row)):
                raise ValueError(f"non-finite value in timeseries row t={state.t}")
            fh.write(",".join(_FMT % v for v in row) + "\n")


def export_slice_profiles(trajectory: Trajectory, mesh: Mesh,
                          rho_field: np.ndarray, path: str,
                          months: list[float], n_slices: int = 12) -> None:
    """Long-format CSV of slice profiles at the requested months."""
    rows = []
    for month in months:
        state = trajectory.state_at(month)
        profile = slice_average(state, mesh, rho_field, n_slices)
        for center, value in zip(profile.centers, profile.values):
            if not np.isfinite(value):
                raise ValueError(f"non-finite slice value at t={month}")
            rows.append((month, center, value))
    with open(path, "w") as fh:
        fh.write("t_months,slice_center_mm,relative_bone_density\n")
        for row in rows:
            fh.write(",".join(_FMT % v for v in row) + "\n")
