"""VTK legacy ASCII export/import (UNSTRUCTURED_GRID, version 3.0).

States export the displacement as point vectors, molecules and tissue
fields as point scalars, and the element region plus strain stimulus as
cell data.  Numbers are written with 17 significant digits so re-reading a
file reproduces the values exactly.
"""

from __future__ import annotations

import numpy as np

from .mesh import Mesh, REGION_SCAFFOLD
from .validation import ValidationReport

_FMT = "%.17g"
VTK_TET = 10


def _write_array(fh, arr: np.ndarray, per_line: int):
    flat = np.asarray(arr, dtype=float).ravel()
    for start in range(0, len(flat), per_line):
        fh.write(" ".join(_FMT % v for v in flat[start:start + per_line]) + "\n")


def _check_finite(name: str, arr: np.ndarray):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"refusing to export non-finite values in {name}")


def _write_header(fh, mesh: Mesh, title: str):
    fh.write("# vtk DataFile Version 3.0\n")
    fh.write(title + "\n")
    fh.write("ASCII\n")
    fh.write("DATASET UNSTRUCTURED_GRID\n")
    fh.write(f"POINTS {mesh.n_nodes} double\n")
    _check_finite("points", mesh.nodes)
    _write_array(fh, mesh.nodes, 3)
    fh.write(f"CELLS {mesh.n_tets} {5 * mesh.n_tets}\n")
    for tet in mesh.tets:
        fh.write("4 %d %d %d %d\n" % tuple(tet))
    fh.write(f"CELL_TYPES {mesh.n_tets}\n")
    for _ in range(mesh.n_tets):
        fh.write(f"{VTK_TET}\n")


def export_mesh_vtk(mesh: Mesh, path: str) -> None:
    """Mesh-only export with the region labels as cell data."""
    with open(path, "w") as fh:
        _write_header(fh, mesh, "ossify mesh")
        fh.write(f"CELL_DATA {mesh.n_tets}\n")
        fh.write("SCALARS region int 1\nLOOKUP_TABLE default\n")
        for r in mesh.element_region:
            fh.write(f"{int(r)}\n")


def export_vtk(state, mesh: Mesh, path: str) -> None:
    """Full state export (point data: u, a_i, c, b; cell data: region,
    strain stimulus)."""
    n = mesh.n_nodes
    with open(path, "w") as fh:
        _write_header(fh, mesh, f"ossify state t={state.t}")
        fh.write(f"POINT_DATA {n}\n")
        fh.write("VECTORS displacement double\n")
        _check_finite("displacement", state.displacement.u)
        _write_array(fh, state.displacement.u, 3)
        for i in range(state.molecules.n_molecules):
            fh.write(f"SCALARS a{i + 1} double 1\nLOOKUP_TABLE default\n")
            _check_finite(f"a{i + 1}", state.molecules.a[i])
            _write_array(fh, state.molecules.a[i], 6)
        for name, values in (("c", state.tissue.c), ("b", state.tissue.b)):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            _check_finite(name, values)
            _write_array(fh, values, 6)
        fh.write(f"CELL_DATA {mesh.n_tets}\n")
        fh.write("SCALARS region int 1\nLOOKUP_TABLE default\n")
        for r in mesh.element_region:
            fh.write(f"{int(r)}\n")
        fh.write("SCALARS strain_stimulus double 1\nLOOKUP_TABLE default\n")
        _check_finite("strain_stimulus", state.stimulus_elem)
        _write_array(fh, state.stimulus_elem, 6)


class VTKFile:
    """Parsed legacy VTK file: points, cells, and the named data arrays."""

    def __init__(self, points, cells, point_data, cell_data):
        self.points = points
        self.cells = cells
        self.point_data = point_data
        self.cell_data = cell_data


def read_vtk(path: str) -> VTKFile:
    """Read back the subset of legacy VTK that this package writes."""
    with open(path) as fh:
        tokens = fh.read().split()
    pos = 0

    def take(k):
        nonlocal pos
        out = tokens[pos:pos + k]
        pos += k
        return out

    def expect(word):
        got = take(1)[0]
        if got.upper() != word:
            raise ValueError(f"expected {word}, got {got!r}")

    if tokens[0] != "#" or tokens[1].lower() != "vtk":
        raise ValueError("not a VTK legacy file")
    # header line: "# vtk DataFile Version 3.0" then a free-form title line;
    # token-wise we just scan forward to ASCII
    while tokens[pos].upper() != "ASCII":
        pos += 1
    expect("ASCII")
    expect("DATASET")
    expect("UNSTRUCTURED_GRID")
    expect("POINTS")
    n_pts = int(take(1)[0])
    take(1)  # dtype
    points = np.array(take(3 * n_pts), dtype=float).reshape(n_pts, 3)
    expect("CELLS")
    n_cells = int(take(1)[0])
    total = int(take(1)[0])
    raw = np.array(take(total), dtype=int)
    cells = []
    i = 0
    for _ in range(n_cells):
        k = raw[i]
        cells.append(raw[i + 1:i + 1 + k])
        i += 1 + k
    cells = np.array(cells, dtype=int)
    expect("CELL_TYPES")
    take(1)
    take(n_cells)

    point_data: dict[str, np.ndarray] = {}
    cell_data: dict[str, np.ndarray] = {}
    target, count = None, 0
    while pos < len(tokens):
        word = take(1)[0].upper()
        if word == "POINT_DATA":
            count = int(take(1)[0])
            target = point_data
        elif word == "CELL_DATA":
            count = int(take(1)[0])
            target = cell_data
        elif word == "VECTORS":
            name = take(1)[0]
            take(1)  # dtype
            target[name] = np.array(take(3 * count), dtype=float).reshape(count, 3)
        elif word == "SCALARS":
            name = take(1)[0]
            dtype = take(1)[0]
            take(1)  # components
            expect("LOOKUP_TABLE")
            take(1)  # table name
            vals = np.array(take(count),
                            dtype=int if dtype == "int" else float)
            target[name] = vals
        else:
            raise ValueError(f"unsupported VTK section {word!r}")
    return VTKFile(points, cells, point_data, cell_data)


def import_mesh_vtk(path: str) -> Mesh:
    """Reconstruct a Mesh from a VTK file written by an external mesher.

    Boundary triangles are re-extracted from the tet connectivity and tags
    re-derived from the axial extent of the imported points (the geometry is
    assumed to be axis-aligned like the generated cylinders).  Region labels
    are taken from the `region` cell array when present.
    """
    from .mesh import _extract_boundary, _tag_triangles, _signed_volumes

    data = read_vtk(path)
    if data.cells.shape[1] != 4:
        raise ValueError("expected a pure tetrahedral mesh")
    tets = data.cells.copy()
    vols = _signed_volumes(data.points[tets])
    flip = vols < 0
    tets[flip] = tets[flip][:, (0, 2, 1, 3)]
    region = data.cell_data.get(
        "region", np.full(len(tets), REGION_SCAFFOLD)).astype(np.int8)
    boundary = _extract_boundary(tets)
    z = data.points[:, 2]
    shifted = data.points.copy()
    shifted[:, 2] -= z.min()
    length = float(z.max() - z.min())
    tags = _tag_triangles(shifted, boundary, length)
    return Mesh(nodes=data.points, tets=tets, boundary_tris=boundary,
                tri_tags=tags, element_region=region)


def finiteness_report(arrays: dict[str, np.ndarray]) -> ValidationReport:
    report = ValidationReport()
    for name, arr in arrays.items():
        if not np.all(np.isfinite(arr)):
            report.add("non-finite", f"{name} contains NaN or Inf")
    return report
