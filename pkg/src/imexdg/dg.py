"""Nodal tensor-product DG building blocks on axis-aligned cells.

Coefficient layout: scalar fields are ``(n_cells, n_dofs)`` arrays, vector
fields ``(d, n_cells, n_dofs)``. Values at volume quadrature points follow
the same layout with ``n_q`` in place of ``n_dofs``.

The basis is the Lagrange basis on Gauss-Lobatto-Legendre nodes of the unit
cell. Volume and face integrals use ``r + 1`` Gauss points per direction by
default, which integrates the mass matrix exactly; ``quadrature="gll"``
switches the volume rule to the collocated GLL points (diagonal mass).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import ZeroNorm
from .mesh import AdaptiveMesh


# --------------------------------------------------------------------------
# one-dimensional rules on [0, 1]


def gauss_rule(n: int):
    x, w = npleg.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def gll_rule(n: int):
    """Gauss-Lobatto-Legendre points and weights on [0, 1] (``n >= 2``)."""
    if n < 2:
        raise ValueError("GLL rule needs at least two points")
    N = n - 1
    inner = npleg.Legendre.basis(N).deriv().roots() if N > 1 else np.array([])
    x = np.concatenate([[-1.0], np.sort(inner.real), [1.0]])
    PN = npleg.legval(x, [0] * N + [1])
    w = 2.0 / (N * (N + 1) * PN**2)
    return 0.5 * (x + 1.0), 0.5 * w


def gll_nodes(degree: int) -> np.ndarray:
    if degree == 0:
        return np.array([0.5])
    return gll_rule(degree + 1)[0]


def lagrange_1d(nodes: np.ndarray, x: np.ndarray):
    """Values and first derivatives of the Lagrange basis at points ``x``.

    Returns arrays of shape ``(len(x), len(nodes))``.
    """
    x = np.asarray(x, dtype=float)
    n = len(nodes)
    V = np.ones((len(x), n))
    D = np.zeros((len(x), n))
    for j in range(n):
        others = [m for m in range(n) if m != j]
        denom = np.prod([nodes[j] - nodes[m] for m in others]) if others else 1.0
        for m in others:
            V[:, j] *= x - nodes[m]
        V[:, j] /= denom
        for k in others:
            term = np.ones(len(x))
            for m in others:
                if m != k:
                    term *= x - nodes[m]
            D[:, j] += term
        D[:, j] /= denom
    return V, D


# --------------------------------------------------------------------------
# reference element


SUB_INTERVALS = {0: (0.0, 1.0), 1: (0.0, 0.5), 2: (0.5, 1.0)}


class ReferenceElement:
    """Basis tabulations on the unit cell and on its (sub)faces."""

    def __init__(self, degree: int, dim: int, n_quad: Optional[int] = None, rule: str = "gauss"):
        self.degree = int(degree)
        self.dim = int(dim)
        self.rule = rule
        self.nodes1d = gll_nodes(self.degree)
        nq1 = n_quad if n_quad is not None else self.degree + 1
        if rule == "gll":
            if self.degree == 0:
                qx, qw = gauss_rule(1)
            else:
                qx, qw = gll_rule(nq1)
        elif rule == "gauss":
            qx, qw = gauss_rule(nq1)
        else:
            raise ValueError(f"unknown quadrature rule {rule!r}")
        self.qx1, self.qw1 = qx, qw
        self.n1 = len(self.nodes1d)
        self.ndofs = self.n1**dim
        V1, D1 = lagrange_1d(self.nodes1d, qx)
        if dim == 1:
            self.V = V1
            self.G = D1[None]
            self.W = qw.copy()
            self.points = qx[:, None]
        else:
            self.V = np.kron(V1, V1)
            self.G = np.stack([np.kron(V1, D1), np.kron(D1, V1)])
            self.W = np.kron(qw, qw)
            X, Y = np.meshgrid(qx, qx, indexing="xy")
            self.points = np.stack([X.ravel(), Y.ravel()], axis=1)
        self.nq = len(self.W)
        # face rule: Gauss with the volume point count (tangential direction)
        fx, fw = gauss_rule(max(self.degree + 1, 1) if n_quad is None else n_quad)
        self.face_x1, self.face_w = (np.array([0.0]), np.array([1.0])) if dim == 1 else (fx, fw)
        self.nfq = len(self.face_w)
        self.Tf = {}
        self.Gf = {}
        self.face_points = {}
        subs = (0,) if dim == 1 else (0, 1, 2)
        for side in range(2 * dim):
            k, s = divmod(side, 2)
            for sub in subs:
                a, b = SUB_INTERVALS[sub]
                Vs, Ds = lagrange_1d(self.nodes1d, np.array([float(s)]))
                if dim == 1:
                    self.Tf[side, sub] = Vs
                    self.Gf[side, sub] = Ds[None]
                    self.face_points[side, sub] = np.array([[float(s)]])
                    continue
                t = a + (b - a) * self.face_x1
                Vt, Dt = lagrange_1d(self.nodes1d, t)
                if k == 0:
                    # points (s, t): x index from the fixed coordinate
                    T = np.kron(Vt, Vs)
                    Gx = np.kron(Vt, Ds)
                    Gy = np.kron(Dt, Vs)
                    pts = np.stack([np.full_like(t, s), t], axis=1)
                else:
                    T = np.kron(Vs, Vt)
                    Gx = np.kron(Vs, Dt)
                    Gy = np.kron(Ds, Vt)
                    pts = np.stack([t, np.full_like(t, s)], axis=1)
                self.Tf[side, sub] = T
                self.Gf[side, sub] = np.stack([Gx, Gy])
                self.face_points[side, sub] = pts
        self.mass = (self.V.T * self.W) @ self.V
        self.mass_inv = np.linalg.inv(self.mass)

    def nodal_points(self) -> np.ndarray:
        if self.dim == 1:
            return self.nodes1d[:, None]
        X, Y = np.meshgrid(self.nodes1d, self.nodes1d, indexing="xy")
        return np.stack([X.ravel(), Y.ravel()], axis=1)

    def eval_at(self, ref_points: np.ndarray):
        """Basis values and reference gradients at arbitrary reference points ``(m, dim)``."""
        ref_points = np.atleast_2d(ref_points)
        Vx, Dx = lagrange_1d(self.nodes1d, ref_points[:, 0])
        if self.dim == 1:
            return Vx, Dx[None]
        Vy, Dy = lagrange_1d(self.nodes1d, ref_points[:, 1])
        n1 = self.n1
        V = (Vy[:, :, None] * Vx[:, None, :]).reshape(len(ref_points), n1 * n1)
        Gx = (Vy[:, :, None] * Dx[:, None, :]).reshape(len(ref_points), n1 * n1)
        Gy = (Dy[:, :, None] * Vx[:, None, :]).reshape(len(ref_points), n1 * n1)
        return V, np.stack([Gx, Gy])


# --------------------------------------------------------------------------
# jump and average algebra (face-local, arrays broadcast over points)


def jump_scalar(tp, tm, normal):
    """``[[phi]] = phi+ n+ + phi- n-`` with ``n- = -n+``; ``tm=None`` on boundary faces."""
    normal = np.asarray(normal, dtype=float)
    tp = np.asarray(tp, dtype=float)
    diff = tp if tm is None else tp - np.asarray(tm, dtype=float)
    return diff[..., None] * normal


def average_scalar(tp, tm=None):
    tp = np.asarray(tp, dtype=float)
    return tp if tm is None else 0.5 * (tp + np.asarray(tm, dtype=float))


def jump_vector_normal(up, um, normal):
    """``[[u]] = u+ . n+ + u- . n-`` (a scalar)."""
    up = np.asarray(up, dtype=float)
    diff = up if um is None else up - np.asarray(um, dtype=float)
    return np.sum(diff * np.asarray(normal, dtype=float), axis=-1)


def average_vector(up, um=None):
    return average_scalar(up, um)


def tensor_jump(up, um, normal):
    """``<<u>> = u+ (x) n+ + u- (x) n-``."""
    up = np.asarray(up, dtype=float)
    diff = up if um is None else up - np.asarray(um, dtype=float)
    return diff[..., :, None] * np.asarray(normal, dtype=float)[..., None, :]


def sip_penalty(face_length: float, cell_diameters, degree: int, definition: str = "diameter",
                normal_widths=None) -> float:
    """Interior-penalty coefficient of a face.

    ``definition="diameter"`` gives ``sigma_K = (r+1)^2 diam(face)/diam(K)``
    with ``diam(K)`` the cell diagonal. ``definition="inverse_length"`` gives
    ``(r+1)^2 / h_K`` with ``h_K`` the cell width normal to the face, which is
    the scaling used inside the assembled operators. Interior faces average
    the two cell values; boundary faces (one cell) return the cell value.
    """
    r1 = (degree + 1) ** 2
    if definition == "diameter":
        sig = [r1 * face_length / d for d in np.atleast_1d(cell_diameters)]
    elif definition == "inverse_length":
        sig = [r1 / w for w in np.atleast_1d(normal_widths)]
    else:
        raise ValueError(definition)
    return float(np.mean(sig))


# --------------------------------------------------------------------------
# space bound to a mesh


@dataclass
class FaceSideOps:
    cells: np.ndarray
    T: np.ndarray  # (nfq, ndofs)
    G: np.ndarray  # (dim, nfq, ndofs) reference gradients
    side: int
    sub: int


class DgSpace:
    """``Q_r`` on an :class:`AdaptiveMesh`.

    Parameters
    ----------
    mesh : AdaptiveMesh
    degree : int
    quadrature : {"gauss", "gll"}
        Volume rule (both use ``r + 1`` points per direction).
    """

    def __init__(self, mesh: AdaptiveMesh, degree: int, quadrature: str = "gauss"):
        self.mesh = mesh
        self.degree = int(degree)
        self.dim = mesh.dim
        self.quadrature = quadrature
        self.ref = ReferenceElement(degree, mesh.dim, rule=quadrature)
        self.ref_hi = ReferenceElement(degree, mesh.dim, n_quad=degree + 3, rule="gauss")
        self.h = mesh.h
        self.J = np.prod(mesh.h, axis=1)
        self.n_cells = mesh.n_cells
        self.ndofs = self.ref.ndofs
        self.nq = self.ref.nq
        self._wJ = self.ref.W[None, :] * self.J[:, None]

    # ------------------------------------------------------------------ volume
    @cached_property
    def quad_points(self) -> np.ndarray:
        """Physical volume quadrature points ``(dim, n_cells, nq)``."""
        return np.stack([self.mesh.lo[:, k, None] + self.ref.points[None, :, k] * self.h[:, k, None]
                         for k in range(self.dim)])

    @cached_property
    def nodal_points(self) -> np.ndarray:
        P = self.ref.nodal_points()
        return np.stack([self.mesh.lo[:, k, None] + P[None, :, k] * self.h[:, k, None] for k in range(self.dim)])

    @property
    def quad_weights(self) -> np.ndarray:
        """Physical weights ``(n_cells, nq)``."""
        return self._wJ

    def eval(self, c: np.ndarray) -> np.ndarray:
        return c @ self.ref.V.T

    def grad(self, c: np.ndarray) -> np.ndarray:
        """Physical gradient at quadrature points, shape ``(dim,) + c.shape[:-1] + (nq,)``."""
        out = []
        for k in range(self.dim):
            g = c @ self.ref.G[k].T
            out.append(g / self.h[:, k, None])
        return np.stack(out)

    def integrate(self, f: np.ndarray) -> np.ndarray:
        """Test against every basis function: ``int f phi_i``."""
        return (f * self._wJ) @ self.ref.V

    def integrate_grad(self, F: np.ndarray) -> np.ndarray:
        """``int F . grad(phi_i)`` for ``F`` of shape ``(dim, ..., n_cells, nq)``."""
        out = 0.0
        for k in range(self.dim):
            out = out + ((F[k] * self._wJ) / self.h[:, k, None]) @ self.ref.G[k]
        return out

    def mass_apply(self, c: np.ndarray) -> np.ndarray:
        return (c @ self.ref.mass) * self.J[:, None]

    def mass_solve(self, b: np.ndarray) -> np.ndarray:
        return (b @ self.ref.mass_inv) / self.J[:, None]

    def weighted_mass_blocks(self, w: np.ndarray) -> np.ndarray:
        """Cell blocks ``int w phi_j phi_i`` for a weight ``w`` given at quadrature points."""
        V = self.ref.V
        return np.einsum("qi,cq,qj->cij", V, w * self._wJ, V, optimize=True)

    # ------------------------------------------------------------------ faces
    @cached_property
    def interior(self):
        """List of ``(FaceGroup, left ops, right ops)``."""
        out = []
        for g in self.mesh.interior_faces:
            sL, sR = 2 * g.dir + 1, 2 * g.dir
            L = FaceSideOps(g.cellL, self.ref.Tf[sL, g.subL], self.ref.Gf[sL, g.subL], sL, g.subL)
            R = FaceSideOps(g.cellR, self.ref.Tf[sR, g.subR], self.ref.Gf[sR, g.subR], sR, g.subR)
            out.append((g, L, R))
        return out

    @cached_property
    def boundary(self):
        out = []
        for g in self.mesh.boundary_faces:
            side = 2 * g.dir + g.side
            out.append((g, FaceSideOps(g.cells, self.ref.Tf[side, 0], self.ref.Gf[side, 0], side, 0)))
        return out

    def face_weights(self, g) -> np.ndarray:
        return g.measure[:, None] * self.ref.face_w[None, :]

    @staticmethod
    def trace(c: np.ndarray, ops: FaceSideOps) -> np.ndarray:
        return c[..., ops.cells, :] @ ops.T.T

    def grad_trace(self, c: np.ndarray, ops: FaceSideOps) -> np.ndarray:
        out = []
        for k in range(self.dim):
            out.append((c[..., ops.cells, :] @ ops.G[k].T) / self.h[ops.cells, k, None])
        return np.stack(out)

    @staticmethod
    def scatter(out: np.ndarray, vals: np.ndarray, ops: FaceSideOps, sign: float = 1.0) -> None:
        """``out[cells] += sign * vals @ T`` (vals already include face weights)."""
        contrib = vals @ ops.T
        if sign == 1.0:
            out[..., ops.cells, :] += contrib
        else:
            out[..., ops.cells, :] -= contrib

    def scatter_grad(self, out: np.ndarray, vals: np.ndarray, ops: FaceSideOps, sign: float = 1.0) -> None:
        """``out[cells] += sign * sum_k vals_k @ dphi/dx_k`` for ``vals`` of shape ``(dim, ..., nf, nfq)``."""
        contrib = 0.0
        for k in range(self.dim):
            contrib = contrib + (vals[k] / self.h[ops.cells, k, None]) @ ops.G[k]
        out[..., ops.cells, :] += sign * contrib

    def face_quad_points(self, g, ops: FaceSideOps) -> np.ndarray:
        P = self.ref.face_points[ops.side, ops.sub]
        c = ops.cells
        return np.stack([self.mesh.lo[c, k, None] + P[None, :, k] * self.h[c, k, None] for k in range(self.dim)])

    # ------------------------------------------------------------------ projection & norms
    def hi_points(self) -> np.ndarray:
        r = self.ref_hi
        return np.stack([self.mesh.lo[:, k, None] + r.points[None, :, k] * self.h[:, k, None]
                         for k in range(self.dim)])

    def hi_eval(self, c: np.ndarray) -> np.ndarray:
        V, _ = self.ref.eval_at(self.ref_hi.points)
        return c @ V.T

    def project_values(self, vals_hi: np.ndarray) -> np.ndarray:
        """L2 projection of data given at the high-order points."""
        V, _ = self.ref.eval_at(self.ref_hi.points)
        wJ = self.ref_hi.W[None, :] * self.J[:, None]
        return self.mass_solve((vals_hi * wJ) @ V)

    def project_quad(self, vals_q: np.ndarray) -> np.ndarray:
        """L2 projection of data given at the working quadrature points."""
        return self.mass_solve(self.integrate(vals_q))

    def interpolate(self, fn: Callable) -> np.ndarray:
        X = self.nodal_points
        return np.asarray(fn(*X), dtype=float)

    def cell_means(self, c: np.ndarray) -> np.ndarray:
        return (self.eval(c) * self.ref.W).sum(axis=-1)


def project(fn: Callable, space: DgSpace) -> np.ndarray:
    """Cellwise L2 projection of ``fn(x[, y])``; vector-valued ``fn`` return a leading component axis."""
    X = space.hi_points()
    vals = np.asarray(fn(*X), dtype=float)
    return space.project_values(vals)


def l2_norm_values(space: DgSpace, vals_hi: np.ndarray) -> float:
    wJ = space.ref_hi.W[None, :] * space.J[:, None]
    sq = vals_hi**2
    if sq.ndim == 3:
        sq = sq.sum(axis=0)
    return float(np.sqrt((sq * wJ).sum()))


def l2_error(space: DgSpace, coeffs: np.ndarray, exact_fn: Callable, relative: bool = False) -> float:
    """L2 distance between a DG field and ``exact_fn`` (scalar or vector valued)."""
    X = space.hi_points()
    ex = np.asarray(exact_fn(*X), dtype=float)
    num = space.hi_eval(coeffs)
    err = l2_norm_values(space, num - ex)
    if not relative:
        return err
    nrm = l2_norm_values(space, ex)
    if nrm == 0.0:
        raise ZeroNorm("exact solution has zero norm")
    return err / nrm
