"""Tetrahedral meshes for the cylindrical defect scenario.

The mesher is structured and fully deterministic: a polar disc triangulation
(ring i carries 8*i nodes, so the node set is exactly invariant under
quarter-turn rotations) is extruded along the axis into prisms, and each
prism is split into three tetrahedra with an index-based diagonal rule that
keeps shared quad faces conforming.  The optional fixateur is a radially
extruded band of the lateral surface, so it shares its contact nodes with
the cylinder by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .validation import ValidationReport

REGION_SCAFFOLD = 0
REGION_FIXATEUR = 1


class ElasticRole(Enum):
    DIRICHLET = "dirichlet"
    NEUMANN_LOADED = "neumann_loaded"
    NEUMANN_FREE = "neumann_free"


class DiffusionRole(Enum):
    DIRICHLET_BONE = "dirichlet_bone"
    NO_FLUX = "no_flux"


@dataclass(frozen=True)
class BoundaryTag:
    elastic: ElasticRole
    diffusion: DiffusionRole


TAG_BOTTOM = BoundaryTag(ElasticRole.DIRICHLET, DiffusionRole.DIRICHLET_BONE)
TAG_TOP = BoundaryTag(ElasticRole.NEUMANN_LOADED, DiffusionRole.DIRICHLET_BONE)
TAG_LATERAL = BoundaryTag(ElasticRole.NEUMANN_FREE, DiffusionRole.NO_FLUX)


@dataclass(frozen=True)
class FixateurSpec:
    """Plate hugging the lateral surface: height along the axis, arc width
    along the circumference, thickness radially outward (all mm)."""

    height: float = 30.0
    arc_width: float = 10.0
    thickness: float = 4.0
    center_angle: float = 0.0

    def __post_init__(self):
        if self.height <= 0 or self.arc_width <= 0 or self.thickness <= 0:
            raise ValueError("fixateur dimensions must be positive")


@dataclass
class Mesh:
    """Immutable-by-convention tetrahedral mesh with tagged boundary."""

    nodes: np.ndarray             # (n, 3) float, mm
    tets: np.ndarray              # (m, 4) int
    boundary_tris: np.ndarray     # (k, 3) int, outward-oriented
    tri_tags: list[BoundaryTag]   # one per boundary triangle
    element_region: np.ndarray    # (m,) int, REGION_SCAFFOLD / REGION_FIXATEUR

    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    def tet_volumes(self) -> np.ndarray:
        if "tet_volumes" not in self._cache:
            p = self.nodes[self.tets]
            self._cache["tet_volumes"] = _signed_volumes(p)
        return self._cache["tet_volumes"]

    def tri_areas(self) -> np.ndarray:
        if "tri_areas" not in self._cache:
            p = self.nodes[self.boundary_tris]
            cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
            self._cache["tri_areas"] = 0.5 * np.linalg.norm(cross, axis=1)
        return self._cache["tri_areas"]

    def node_volumes(self, region: int | None = None) -> np.ndarray:
        """Lumped nodal volumes (each tet contributes V/4 to its nodes),
        optionally restricted to one element region."""
        key = ("node_volumes", region)
        if key not in self._cache:
            vols = self.tet_volumes()
            sel = slice(None) if region is None else self.element_region == region
            out = np.zeros(self.n_nodes)
            np.add.at(out, self.tets[sel].ravel(), np.repeat(vols[sel] / 4.0, 4))
            self._cache[key] = out
        return self._cache[key]

    def fixateur_node_mask(self) -> np.ndarray:
        """Nodes all of whose adjacent elements lie in the fixateur region."""
        if "fixateur_node_mask" not in self._cache:
            touches_scaffold = np.zeros(self.n_nodes, dtype=bool)
            touches_any = np.zeros(self.n_nodes, dtype=bool)
            scaffold = self.element_region == REGION_SCAFFOLD
            touches_scaffold[self.tets[scaffold].ravel()] = True
            touches_any[self.tets.ravel()] = True
            self._cache["fixateur_node_mask"] = touches_any & ~touches_scaffold
        return self._cache["fixateur_node_mask"]

    def boundary_nodes(self, elastic: ElasticRole | None = None,
                       diffusion: DiffusionRole | None = None) -> np.ndarray:
        """Sorted unique node indices on boundary triangles matching the roles."""
        keep = [i for i, tag in enumerate(self.tri_tags)
                if (elastic is None or tag.elastic is elastic)
                and (diffusion is None or tag.diffusion is diffusion)]
        if not keep:
            return np.empty(0, dtype=int)
        return np.unique(self.boundary_tris[keep].ravel())


def _signed_volumes(p: np.ndarray) -> np.ndarray:
    """Signed volumes of tets given as (..., 4, 3) corner coordinates."""
    d = p[..., 1:, :] - p[..., :1, :]
    return np.linalg.det(d) / 6.0


# ---------------------------------------------------------------------------
# disc triangulation and prism subdivision


def _disc(radius: float, target_edge: float):
    """Polar triangulation of a disc; ring i holds 8*i nodes."""
    n_rings = max(1, math.ceil(radius / target_edge))
    pts = [(0.0, 0.0)]
    ring_start = [0]
    for i in range(1, n_rings + 1):
        ring_start.append(len(pts))
        r_i = radius * i / n_rings
        count = 8 * i
        ang = 2.0 * np.pi * np.arange(count) / count
        pts.extend(zip(r_i * np.cos(ang), r_i * np.sin(ang)))
    tris = []
    for i in range(n_rings):
        n_in, n_out = 8 * i, 8 * (i + 1)
        s_in, s_out = ring_start[i], ring_start[i + 1]
        for sector in range(8):
            if i == 0:
                inner = [0] * 2
            else:
                inner = [s_in + (sector * i + t) % n_in for t in range(i + 1)]
            outer = [s_out + (sector * (i + 1) + t) % n_out for t in range(i + 2)]
            for t in range(i + 1):
                tris.append((outer[t], outer[t + 1], inner[t]))
            for t in range(i):
                tris.append((inner[t], outer[t + 1], inner[t + 1]))
    return np.array(pts), np.array(tris, dtype=int), n_rings


# Rotations of a triangular prism (bottom v0 v1 v2, top v3 v4 v5) that keep
# vertical pairs intact; the last three flip top and bottom.
_PRISM_ROTATIONS = (
    (0, 1, 2, 3, 4, 5),
    (1, 2, 0, 4, 5, 3),
    (2, 0, 1, 5, 3, 4),
    (3, 5, 4, 0, 2, 1),
    (4, 3, 5, 1, 0, 2),
    (5, 4, 3, 2, 1, 0),
)


def _split_prism(v: tuple[int, ...]) -> list[tuple[int, int, int, int]]:
    """Split one prism into 3 tets; quad diagonals always pass through the
    smallest global index of the quad, so adjacent prisms conform."""
    lowest = min(v)
    for perm in _PRISM_ROTATIONS:
        w = tuple(v[p] for p in perm)
        if w[0] == lowest:
            break
    if min(w[1], w[5]) < min(w[2], w[4]):
        return [(w[0], w[1], w[2], w[5]), (w[0], w[1], w[5], w[4]),
                (w[0], w[4], w[5], w[3])]
    return [(w[0], w[1], w[2], w[4]), (w[0], w[4], w[2], w[5]),
            (w[0], w[4], w[5], w[3])]


# Faces of tet (0,1,2,3) ordered so normals point outward for positive volume.
_TET_FACES = ((1, 2, 3), (0, 3, 2), (0, 1, 3), (0, 2, 1))


def _extract_boundary(tets: np.ndarray) -> np.ndarray:
    """Outward-oriented faces that belong to exactly one tet."""
    faces = tets[:, _TET_FACES].reshape(-1, 3)
    keys = np.sort(faces, axis=1)
    order = np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0]))
    sorted_keys = keys[order]
    new_group = np.ones(len(sorted_keys), dtype=bool)
    new_group[1:] = np.any(sorted_keys[1:] != sorted_keys[:-1], axis=1)
    group_id = np.cumsum(new_group) - 1
    counts = np.bincount(group_id)
    boundary = counts[group_id] == 1
    return faces[order][boundary]


def _tag_triangles(nodes: np.ndarray, tris: np.ndarray, length: float) -> list[BoundaryTag]:
    tol = 1e-6 * length
    z = nodes[:, 2]
    tags = []
    for tri in tris:
        tz = z[tri]
        if np.all(tz <= tol):
            tags.append(TAG_BOTTOM)
        elif np.all(tz >= length - tol):
            tags.append(TAG_TOP)
        else:
            tags.append(TAG_LATERAL)
    return tags


def build_cylinder_mesh(length: float, radius: float, target_edge: float,
                        fixateur: FixateurSpec | None = None) -> Mesh:
    """Mesh the cylindrical defect (axis along z, base at z=0).

    Boundary tagging is purely geometric: z=0 plane -> elastic Dirichlet +
    molecule Dirichlet, z=L plane -> loaded Neumann + molecule Dirichlet,
    everything else -> free / no-flux.  When a fixateur is requested, its
    plate shares the contact-band nodes with the cylinder and its end faces
    participate in the same plane tagging.
    """
    if length <= 0 or radius <= 0 or target_edge <= 0:
        raise ValueError("length, radius and target_edge must all be positive")
    if target_edge >= radius:
        raise ValueError(
            f"target_edge={target_edge} must be smaller than radius={radius} "
            "to resolve the cross-section")

    disc_pts, disc_tris, _ = _disc(radius, target_edge)
    n_layers = max(1, math.ceil(length / target_edge))
    n_disc = len(disc_pts)
    zs = length * np.arange(n_layers + 1) / n_layers
    nodes = np.concatenate([
        np.column_stack([np.tile(disc_pts[:, 0], n_layers + 1),
                         np.tile(disc_pts[:, 1], n_layers + 1),
                         np.repeat(zs, n_disc)])
    ])

    tets: list[tuple[int, int, int, int]] = []
    for layer in range(n_layers):
        lo, hi = layer * n_disc, (layer + 1) * n_disc
        for a, b, c in disc_tris:
            tets.extend(_split_prism((lo + a, lo + b, lo + c, hi + a, hi + b, hi + c)))
    region = [REGION_SCAFFOLD] * len(tets)

    if fixateur is not None:
        nodes, extra_tets = _attach_fixateur(nodes, np.array(tets, dtype=int),
                                             length, radius, target_edge, fixateur)
        tets.extend(map(tuple, extra_tets))
        region.extend([REGION_FIXATEUR] * len(extra_tets))

    tet_arr = np.array(tets, dtype=int)
    vols = _signed_volumes(nodes[tet_arr])
    flip = vols < 0
    tet_arr[flip] = tet_arr[flip][:, (0, 2, 1, 3)]

    boundary = _extract_boundary(tet_arr)
    tags = _tag_triangles(nodes, boundary, length)
    return Mesh(nodes=nodes, tets=tet_arr, boundary_tris=boundary,
                tri_tags=tags, element_region=np.array(region, dtype=np.int8))


def _attach_fixateur(nodes: np.ndarray, tets: np.ndarray, length: float,
                     radius: float, target_edge: float, spec: FixateurSpec):
    """Extrude the lateral contact band radially outward into the plate."""
    boundary = _extract_boundary(tets)
    tags = _tag_triangles(nodes, boundary, length)

    half_angle = 0.5 * spec.arc_width / radius
    z_lo = max(0.0, 0.5 * (length - spec.height))
    z_hi = min(length, 0.5 * (length + spec.height))
    tol = 1e-9 * max(length, radius)

    r_xy = np.hypot(nodes[:, 0], nodes[:, 1])
    theta = np.arctan2(nodes[:, 1], nodes[:, 0])
    dtheta = np.arctan2(np.sin(theta - spec.center_angle),
                        np.cos(theta - spec.center_angle))
    in_band = ((np.abs(r_xy - radius) <= 1e-6 * radius)
               & (np.abs(dtheta) <= half_angle + 1e-9)
               & (nodes[:, 2] >= z_lo - tol) & (nodes[:, 2] <= z_hi + tol))

    band_tris = [tri for tri, tag in zip(boundary, tags)
                 if tag is TAG_LATERAL and in_band[tri].all()]
    if not band_tris:
        raise ValueError("fixateur band is too narrow for the mesh resolution; "
                         "refine target_edge or widen arc_width")

    band_nodes = np.unique(np.concatenate(band_tris))
    n_radial = max(1, math.ceil(spec.thickness / target_edge))
    radial_dir = np.zeros((len(band_nodes), 3))
    radial_dir[:, 0] = nodes[band_nodes, 0] / r_xy[band_nodes]
    radial_dir[:, 1] = nodes[band_nodes, 1] / r_xy[band_nodes]

    # layer 0 = the existing band nodes; layers 1..n_radial are new
    layer_ids = [band_nodes]
    new_nodes = [nodes]
    next_id = len(nodes)
    for k in range(1, n_radial + 1):
        offset = spec.thickness * k / n_radial
        coords = nodes[band_nodes] + offset * radial_dir
        layer_ids.append(np.arange(next_id, next_id + len(band_nodes)))
        new_nodes.append(coords)
        next_id += len(band_nodes)
    all_nodes = np.concatenate(new_nodes)

    local = {int(n): i for i, n in enumerate(band_nodes)}
    plate_tets = []
    for k in range(n_radial):
        inner, outer = layer_ids[k], layer_ids[k + 1]
        for tri in band_tris:
            li = [local[int(n)] for n in tri]
            prism = (int(inner[li[0]]), int(inner[li[1]]), int(inner[li[2]]),
                     int(outer[li[0]]), int(outer[li[1]]), int(outer[li[2]]))
            plate_tets.extend(_split_prism(prism))
    return all_nodes, np.array(plate_tets, dtype=int)


def validate_mesh(mesh: Mesh) -> ValidationReport:
    """Check every mesh invariant; an empty report means the mesh is valid."""
    report = ValidationReport()
    n = mesh.n_nodes

    if mesh.tets.size and (mesh.tets.min() < 0 or mesh.tets.max() >= n):
        bad = np.flatnonzero((mesh.tets < 0).any(axis=1) | (mesh.tets >= n).any(axis=1))
        report.add("index-range", "tet node indices out of range", bad.tolist())
        return report
    if mesh.boundary_tris.size and (mesh.boundary_tris.min() < 0
                                    or mesh.boundary_tris.max() >= n):
        bad = np.flatnonzero((mesh.boundary_tris < 0).any(axis=1)
                             | (mesh.boundary_tris >= n).any(axis=1))
        report.add("index-range", "boundary triangle indices out of range", bad.tolist())
        return report

    vols = mesh.tet_volumes()
    inverted = np.flatnonzero(vols <= 0)
    if inverted.size:
        report.add("inverted-tet",
                   f"{inverted.size} tet(s) with non-positive volume", inverted.tolist())

    # stored boundary must coincide with the faces owned by exactly one tet
    actual = _extract_boundary(mesh.tets)
    actual_keys = {tuple(f) for f in np.sort(actual, axis=1)}
    stored_keys = [tuple(f) for f in np.sort(mesh.boundary_tris, axis=1)]
    seen = set()
    for i, key in enumerate(stored_keys):
        if key not in actual_keys:
            report.add("not-a-boundary-face",
                       "stored triangle is not the face of exactly one tet", (i,))
        if key in seen:
            report.add("duplicate-boundary-face", "triangle stored twice", (i,))
        seen.add(key)
    missing = actual_keys - seen
    if missing:
        report.add("missing-boundary-face",
                   f"{len(missing)} boundary face(s) of the tet mesh are untracked")

    # closed surface: every edge of the stored triangles borders exactly two
    edge_count: dict[tuple[int, int], int] = {}
    for tri in mesh.boundary_tris:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (int(min(a, b)), int(max(a, b)))
            edge_count[key] = edge_count.get(key, 0) + 1
    open_edges = [e for e, cnt in edge_count.items() if cnt != 2]
    if open_edges:
        report.add("open-surface",
                   f"{len(open_edges)} boundary edge(s) not shared by exactly "
                   "two triangles", tuple(open_edges[:16]))

    if len(mesh.tri_tags) != len(mesh.boundary_tris):
        report.add("tag-count", "tag list does not match boundary triangle count")
    if len(mesh.element_region) != mesh.n_tets:
        report.add("region-count", "element_region does not match tet count")
    return report


def boundary_area(mesh: Mesh, predicate) -> float:
    """Total area of boundary triangles whose tag satisfies the predicate."""
    areas = mesh.tri_areas()
    keep = np.fromiter((bool(predicate(tag)) for tag in mesh.tri_tags),
                       dtype=bool, count=len(mesh.tri_tags))
    return float(areas[keep].sum())
