"""Axis-aligned quadtree (binary tree in 1D) meshes with 2:1 face balance.

Cells are addressed by integer keys ``(level, i[, j])``: cell ``(l, i, j)``
covers ``[x0 + i hx/2^l, x0 + (i+1) hx/2^l] x ...`` where ``hx`` is the
base-grid spacing. Faces between cells of different levels are stored as
subfaces: the fine cell sees its whole side, the coarse cell sees one half
of its side (``sub = 1`` lower half, ``sub = 2`` upper half).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

Key = Tuple[int, ...]

WALL = "wall"
PERIODIC = "periodic"


@dataclass
class FaceGroup:
    """Interior faces with the same direction and subface layout.

    ``L`` is the cell on the low-coordinate side, ``R`` on the high side,
    so the unit normal pointing from L to R is ``e_dir``. Within one group
    every cell appears at most once on each side, which allows scatter-adds
    without collisions.
    """

    dir: int
    subL: int
    subR: int
    cellL: np.ndarray
    cellR: np.ndarray
    measure: np.ndarray

    @property
    def size(self) -> int:
        return len(self.cellL)


@dataclass
class BoundaryGroup:
    """Boundary faces of direction ``dir`` on the ``side`` (0 low, 1 high) of the domain."""

    dir: int
    side: int
    cells: np.ndarray
    measure: np.ndarray
    tag: str

    @property
    def normal_sign(self) -> float:
        return 1.0 if self.side == 1 else -1.0

    @property
    def size(self) -> int:
        return len(self.cells)


@dataclass
class RefinementPlan:
    refine_set: set = field(default_factory=set)
    coarsen_set: set = field(default_factory=set)
    min_diam: float = 0.0
    max_diam: float = np.inf


class AdaptiveMesh:
    """Active leaves of a forest of quadtrees over a Cartesian base grid.

    Parameters
    ----------
    lower, upper : sequences of length d
        Domain corners.
    nel : sequence of int
        Base-grid cells per direction.
    periodic : sequence of bool
        Periodicity per direction.
    boundary_tags : dict, optional
        Maps ``(dir, side)`` to a tag; defaults to ``"wall"``.
    keys : iterable of keys, optional
        Active leaves; defaults to the full base grid.
    """

    def __init__(self, lower, upper, nel, periodic=None, boundary_tags=None, keys=None):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.dim = len(self.lower)
        if self.dim not in (1, 2):
            raise ValueError("only 1D and 2D meshes are supported")
        self.nel = np.asarray(nel, dtype=int)
        if np.any(self.nel < 1):
            raise ValueError("nel_per_dim must be >= 1")
        self.periodic = tuple(bool(p) for p in (periodic if periodic is not None else [False] * self.dim))
        self.boundary_tags = dict(boundary_tags or {})
        self.h0 = (self.upper - self.lower) / self.nel
        if keys is None:
            grids = np.meshgrid(*[np.arange(n) for n in self.nel], indexing="ij")
            keys = [(0,) + tuple(int(g.flat[m]) for g in grids) for m in range(grids[0].size)]
        self.keys: List[Key] = sorted(keys, key=self._sort_key)
        self.index: Dict[Key, int] = {k: n for n, k in enumerate(self.keys)}
        self.last_clip_count = 0
        self._faces = None
        self._geometry()

    # ------------------------------------------------------------------
    def _sort_key(self, key: Key):
        # order leaves by their position on the finest possible integer grid
        lvl = key[0]
        return tuple(int(i) << (30 - lvl) for i in reversed(key[1:])) + (lvl,)

    def _geometry(self):
        lv = np.array([k[0] for k in self.keys], dtype=int)
        idx = np.array([k[1:] for k in self.keys], dtype=int).reshape(len(self.keys), self.dim)
        scale = 2.0 ** (-lv)
        self.level = lv
        self.h = self.h0[None, :] * scale[:, None]
        self.lo = self.lower[None, :] + idx * self.h

    @property
    def n_cells(self) -> int:
        return len(self.keys)

    @property
    def volume(self) -> np.ndarray:
        return np.prod(self.h, axis=1)

    @property
    def centers(self) -> np.ndarray:
        return self.lo + 0.5 * self.h

    def tag(self, d: int, side: int) -> str:
        if self.periodic[d]:
            return PERIODIC
        return self.boundary_tags.get((d, side), WALL)

    def copy_with_keys(self, keys) -> "AdaptiveMesh":
        return AdaptiveMesh(self.lower, self.upper, self.nel, self.periodic, self.boundary_tags, keys)

    # ------------------------------------------------------------------
    def n_at_level(self, level: int) -> np.ndarray:
        return self.nel * (1 << level)

    def _wrap(self, level: int, idx: Sequence[int]) -> Optional[Tuple[int, ...]]:
        n = self.n_at_level(level)
        out = []
        for d, i in enumerate(idx):
            if i < 0 or i >= n[d]:
                if not self.periodic[d]:
                    return None
                i %= n[d]
            out.append(int(i))
        return tuple(out)

    def active_ancestor(self, key: Key) -> Optional[Key]:
        """The active leaf containing ``key`` (itself or an ancestor), or None if ``key`` is refined."""
        lvl, idx = key[0], list(key[1:])
        while lvl >= 0:
            k = (lvl,) + tuple(idx)
            if k in self.index:
                return k
            lvl -= 1
            idx = [i >> 1 for i in idx]
        return None

    # ------------------------------------------------------------------
    @property
    def faces(self):
        if self._faces is None:
            self._faces = self._build_faces()
        return self._faces

    def _build_faces(self):
        groups: Dict[Tuple[int, int, int], list] = {}
        bnd: Dict[Tuple[int, int], list] = {}
        for c, key in enumerate(self.keys):
            lvl, idx = key[0], key[1:]
            for d in range(self.dim):
                t = 1 - d if self.dim == 2 else None
                tang_len = self.h[c, t] if t is not None else 1.0
                for s in (0, 1):
                    nb = list(idx)
                    nb[d] += 1 if s == 1 else -1
                    w = self._wrap(lvl, nb)
                    if w is None:
                        bnd.setdefault((d, s), []).append((c, tang_len))
                        continue
                    nkey = (lvl,) + w
                    if nkey in self.index:
                        if s == 1:
                            groups.setdefault((d, 0, 0), []).append((c, self.index[nkey], tang_len))
                        continue
                    if lvl == 0:
                        continue
                    pkey = (lvl - 1,) + tuple(i >> 1 for i in w)
                    if pkey not in self.index:
                        continue  # finer neighbour owns the face
                    sub = 0 if t is None else 1 + (idx[t] & 1)
                    pc = self.index[pkey]
                    if s == 1:
                        groups.setdefault((d, 0, sub), []).append((c, pc, tang_len))
                    else:
                        groups.setdefault((d, sub, 0), []).append((pc, c, tang_len))
        interior = []
        for (d, sL, sR), rows in sorted(groups.items()):
            arr = np.array(rows, dtype=float)
            interior.append(FaceGroup(d, sL, sR, arr[:, 0].astype(int), arr[:, 1].astype(int), arr[:, 2]))
        boundary = []
        for (d, s), rows in sorted(bnd.items()):
            arr = np.array(rows, dtype=float)
            boundary.append(BoundaryGroup(d, s, arr[:, 0].astype(int), arr[:, 1], self.tag(d, s)))
        return interior, boundary

    @property
    def interior_faces(self) -> List[FaceGroup]:
        return self.faces[0]

    @property
    def boundary_faces(self) -> List[BoundaryGroup]:
        return self.faces[1]

    def n_hanging_faces(self) -> int:
        """Number of coarse-cell sides split into two subfaces."""
        seen = set()
        for g in self.interior_faces:
            if g.subL:
                seen.update((int(c), 2 * g.dir + 1) for c in g.cellL)
            if g.subR:
                seen.update((int(c), 2 * g.dir) for c in g.cellR)
        return len(seen)

    # ------------------------------------------------------------------
    def is_balanced(self) -> bool:
        return not self._balance_violations()

    def _balance_violations(self) -> set:
        bad = set()
        for key in self.keys:
            lvl, idx = key[0], key[1:]
            if lvl < 2:
                continue
            for d in range(self.dim):
                for step in (-1, 1):
                    nb = list(idx)
                    nb[d] += step
                    w = self._wrap(lvl, nb)
                    if w is None:
                        continue
                    anc = self.active_ancestor((lvl,) + w)
                    if anc is not None and anc[0] < lvl - 1:
                        bad.add(anc)
        return bad


def build_cartesian(extents, nel_per_dim, periodic=None, boundary_tags=None) -> AdaptiveMesh:
    """Uniform level-0 mesh.

    ``extents`` is a sequence of ``(lo, hi)`` pairs, one per direction.
    """
    extents = [tuple(map(float, e)) for e in extents]
    dim = len(extents)
    nel = np.broadcast_to(np.asarray(nel_per_dim, dtype=int), (dim,))
    return AdaptiveMesh([e[0] for e in extents], [e[1] for e in extents], nel, periodic, boundary_tags)


def children(key: Key) -> List[Key]:
    lvl, idx = key[0], key[1:]
    if len(idx) == 1:
        return [(lvl + 1, 2 * idx[0] + a) for a in (0, 1)]
    return [(lvl + 1, 2 * idx[0] + a, 2 * idx[1] + b) for b in (0, 1) for a in (0, 1)]


def parent(key: Key) -> Key:
    return (key[0] - 1,) + tuple(i >> 1 for i in key[1:])


def cell_size(mesh: AdaptiveMesh) -> np.ndarray:
    """Smallest side length of every active cell."""
    return mesh.h.min(axis=1)


def min_diameter(mesh: AdaptiveMesh) -> float:
    """Smallest cell size ``H`` over the active cells (side length of square cells)."""
    return float(cell_size(mesh).min())


def apply_refinement(mesh: AdaptiveMesh, plan: RefinementPlan) -> AdaptiveMesh:
    """Refine and coarsen, then restore 2:1 balance.

    ``plan`` holds active-cell indices. Refinement is dropped when the
    children would be smaller than ``min_diam``; coarsening needs all
    siblings marked and a parent no larger than ``max_diam``. The number of
    dropped requests is stored in ``last_clip_count`` of the result.
    """
    if plan.refine_set & plan.coarsen_set:
        raise ValueError("refine and coarsen sets must be disjoint")
    size = cell_size(mesh)
    clip = 0
    active = set(mesh.keys)
    refine_keys = set()
    for c in plan.refine_set:
        if 0.5 * size[c] < plan.min_diam * (1 - 1e-12):
            clip += 1
            continue
        refine_keys.add(mesh.keys[c])
    for k in refine_keys:
        active.discard(k)
        active.update(children(k))

    work = mesh.copy_with_keys(active)
    # balance: refine coarse cells adjacent to much finer ones
    while True:
        bad = work._balance_violations()
        if not bad:
            break
        for k in bad:
            active.discard(k)
            active.update(children(k))
        work = mesh.copy_with_keys(active)

    # coarsening: unanimous siblings, size bound, keep balance
    marked = {mesh.keys[c] for c in plan.coarsen_set}
    parents: Dict[Key, int] = {}
    for k in marked:
        if k[0] == 0 or k not in active:
            continue
        parents[parent(k)] = parents.get(parent(k), 0) + 1
    nsib = 1 << mesh.dim
    for pk, count in sorted(parents.items()):
        kids = children(pk)
        if count != nsib or not all(k in active for k in kids):
            continue
        psize = float(np.min(mesh.h0 * 2.0 ** (-pk[0])))
        if psize > plan.max_diam * (1 + 1e-12):
            clip += 1
            continue
        trial = (active - set(kids)) | {pk}
        tmesh = mesh.copy_with_keys(trial)
        if tmesh._balance_violations():
            continue
        active = trial
    out = mesh.copy_with_keys(active)
    out.last_clip_count = clip
    return out


# --------------------------------------------------------------------------
# VTK output


def write_vtk(path, mesh: AdaptiveMesh, point_fields=None, cell_fields=None, title="imexdg"):
    """Legacy ASCII unstructured grid; every cell owns its corner points.

    ``point_fields`` maps names to arrays of shape ``(n_cells, n_corners)``
    (scalars) or ``(n_cells, n_corners, 3)`` (vectors), so discontinuous
    data is preserved. ``cell_fields`` maps names to ``(n_cells,)`` arrays.
    """
    point_fields = point_fields or {}
    cell_fields = cell_fields or {}
    n = mesh.n_cells
    if mesh.dim == 1:
        corners = [(0.0,), (1.0,)]
        ctype = 3
    else:
        corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        ctype = 9
    nc = len(corners)
    pts = np.zeros((n, nc, 3))
    for m, ref in enumerate(corners):
        pts[:, m, : mesh.dim] = mesh.lo + np.asarray(ref) * mesh.h
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {n * nc} double"]
    lines += [f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}" for p in pts.reshape(-1, 3)]
    lines.append(f"CELLS {n} {n * (nc + 1)}")
    lines += [" ".join([str(nc)] + [str(c * nc + m) for m in range(nc)]) for c in range(n)]
    lines.append(f"CELL_TYPES {n}")
    lines += [str(ctype)] * n
    if point_fields:
        lines.append(f"POINT_DATA {n * nc}")
        for name, arr in point_fields.items():
            arr = np.asarray(arr, dtype=float)
            if arr.ndim == 3:
                vec = np.zeros((n * nc, 3))
                vec[:, : arr.shape[2]] = arr.reshape(n * nc, -1)
                lines.append(f"VECTORS {name} double")
                lines += [f"{v[0]:.12g} {v[1]:.12g} {v[2]:.12g}" for v in vec]
            else:
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                lines += [f"{v:.12g}" for v in arr.reshape(-1)]
    if cell_fields:
        lines.append(f"CELL_DATA {n}")
        for name, arr in cell_fields.items():
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines += [f"{v:.12g}" for v in np.asarray(arr, dtype=float).reshape(-1)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
