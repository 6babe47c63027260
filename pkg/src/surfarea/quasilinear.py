"""Quasi-linear (continuous piecewise-affine) functions and their elementary area."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .fields import Domain, Regularity, ScalarField

DEGENERATE_RTOL = 1e-15
COVER_TOL = 1e-12


class Triangle2D(NamedTuple):
    p1: tuple[float, float]
    p2: tuple[float, float]
    p3: tuple[float, float]


def _as_vertices(t) -> np.ndarray:
    v = np.asarray(t, dtype=float)
    if v.shape[-2:] != (3, 2):
        raise ValueError(f"triangle vertices must have shape (..., 3, 2), got {v.shape}")
    return v


def tri_area_2d(t) -> np.ndarray | float:
    """Half the absolute determinant of the homogeneous vertex matrix.

    Works on a single triangle or a stack of shape ``(n, 3, 2)``.
    """
    v = _as_vertices(t)
    det = ((v[..., 1, 0] - v[..., 0, 0]) * (v[..., 2, 1] - v[..., 0, 1])
           - (v[..., 2, 0] - v[..., 0, 0]) * (v[..., 1, 1] - v[..., 0, 1]))
    area = 0.5 * np.abs(det)
    return float(area) if area.ndim == 0 else area


def lifted_tri_area(t, a, b):
    """Area of the graph of an affine function with slopes ``(a, b)`` over ``t``."""
    return tri_area_2d(t) * np.sqrt(1.0 + np.asarray(a, float) ** 2 + np.asarray(b, float) ** 2)


def affine_coefficients(vertices: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Solve ``a u + b v + c = value`` at the three vertices of each triangle."""
    vertices = _as_vertices(vertices)
    values = np.asarray(values, dtype=float)
    mats = np.concatenate([vertices, np.ones(vertices.shape[:-1] + (1,))], axis=-1)
    return np.linalg.solve(mats, values[..., None])[..., 0]


@dataclass(frozen=True)
class TriDecomposition:
    """Nonoverlapping triangles covering a domain; ``vertices`` has shape (n, 3, 2)."""

    vertices: np.ndarray
    domain: Domain

    def __post_init__(self):
        v = _as_vertices(self.vertices).copy()
        if v.ndim != 3:
            raise ValueError("expected a stack of triangles")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        self.validate()

    def __len__(self):
        return self.vertices.shape[0]

    @property
    def areas(self) -> np.ndarray:
        return tri_area_2d(self.vertices)

    def triangles(self) -> list[Triangle2D]:
        return [Triangle2D(*(tuple(p) for p in tri)) for tri in self.vertices]

    def validate(self) -> None:
        dom = self.domain
        v = self.vertices
        if not np.all(dom.contains(v[..., 0], v[..., 1], tol=COVER_TOL)):
            raise ValueError("triangle vertex outside the domain")
        areas = self.areas
        if np.any(areas < DEGENERATE_RTOL * dom.area):
            raise ValueError(f"degenerate triangle (index {int(np.argmin(areas))})")
        total = float(np.sum(areas))
        if abs(total - dom.area) > COVER_TOL * max(1.0, dom.area):
            raise ValueError(f"triangles cover area {total!r}, domain has {dom.area!r} (overlap or gap)")


@dataclass(frozen=True)
class QuasiLinearFn:
    """Continuous function affine on each triangle: ``a_i x + b_i y + c_i`` on ``T_i``.

    ``grid`` records ``(nx, ny, diagonal)`` for meshes built on a uniform
    grid; it enables fast point location and mesh overlay.
    """

    mesh: TriDecomposition
    coeffs: np.ndarray
    grid: tuple[int, int, str] | None = None

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).copy()
        if c.shape != (len(self.mesh), 3):
            raise ValueError(f"coeffs must have shape ({len(self.mesh)}, 3), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        self._check_continuity()

    @property
    def domain(self) -> Domain:
        return self.mesh.domain

    @classmethod
    def from_vertex_values(cls, mesh: TriDecomposition, values, grid=None) -> "QuasiLinearFn":
        return cls(mesh, affine_coefficients(mesh.vertices, values), grid)

    def vertex_values(self) -> np.ndarray:
        v = self.mesh.vertices
        c = self.coeffs
        return c[:, None, 0] * v[..., 0] + c[:, None, 1] * v[..., 1] + c[:, None, 2]

    def _check_continuity(self, tol: float = 1e-9) -> None:
        # adjacent pieces must agree at the endpoints of every shared edge
        v = self.mesh.vertices
        vals = self.vertex_values()
        scale = max(1.0, float(np.max(np.abs(vals))) if vals.size else 1.0)
        key = np.round(v.reshape(-1, 2) / (self.domain.diameter * 1e-10)).astype(np.int64)
        _, group = np.unique(key, axis=0, return_inverse=True)
        group = group.reshape(-1)
        flat = vals.reshape(-1)
        lo = np.full(group.max() + 1, np.inf)
        hi = np.full(group.max() + 1, -np.inf)
        np.minimum.at(lo, group, flat)
        np.maximum.at(hi, group, flat)
        bad = hi - lo > tol * scale
        if bad.any():
            where = v.reshape(-1, 2)[np.argmax(bad[group])]
            raise ValueError(f"quasi-linear pieces disagree at vertex {tuple(where)} (discontinuous)")

    def __add__(self, other: "QuasiLinearFn") -> "QuasiLinearFn":
        _require_same_mesh(self, other)
        return QuasiLinearFn(self.mesh, self.coeffs + other.coeffs, self.grid)

    def scaled(self, s: float) -> "QuasiLinearFn":
        return QuasiLinearFn(self.mesh, s * self.coeffs, self.grid)

    def __call__(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        idx = self.locate(x, y)
        c = self.coeffs[idx]
        return c[..., 0] * x + c[..., 1] * y + c[..., 2]

    def locate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Index of a triangle containing each point."""
        if self.grid is not None:
            return _grid_locate(self.domain, self.grid, x, y)
        # brute force barycentric search, chunked over points
        v = self.mesh.vertices
        flat_x, flat_y = x.ravel(), y.ravel()
        out = np.empty(flat_x.size, dtype=np.int64)
        e = 1e-12 * self.domain.diameter
        for start in range(0, flat_x.size, 4096):
            px = flat_x[start:start + 4096, None]
            py = flat_y[start:start + 4096, None]
            inside = np.ones((px.shape[0], len(v)), bool)
            for k in range(3):
                a, b = v[:, k], v[:, (k + 1) % 3]
                third = v[:, (k + 2) % 3]
                side = lambda qx, qy: (b[:, 0] - a[:, 0]) * (qy - a[:, 1]) - (b[:, 1] - a[:, 1]) * (qx - a[:, 0])
                orient = np.sign(side(third[:, 0], third[:, 1]))
                inside &= orient * side(px, py) >= -e
            if not inside.any(axis=1).all():
                raise ValueError("point outside every triangle")
            out[start:start + 4096] = np.argmax(inside, axis=1)
        return out.reshape(x.shape)

    def as_field(self, name: str = "quasilinear") -> ScalarField:
        def grad(x, y):
            x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
            c = self.coeffs[self.locate(x, y)]
            return c[..., 0], c[..., 1]
        return ScalarField(self.domain, self.__call__, grad, Regularity.CONTINUOUS, name)

    def dumps(self) -> str:
        """Debug dump, one ``x1 y1 x2 y2 x3 y3 a b c`` line per triangle."""
        rows = np.concatenate([self.mesh.vertices.reshape(-1, 6), self.coeffs], axis=1)
        return "".join(" ".join(f"{v:.17g}" for v in row) + "\n" for row in rows)


def _require_same_mesh(p: QuasiLinearFn, q: QuasiLinearFn) -> None:
    if p.mesh.vertices.shape != q.mesh.vertices.shape or not np.array_equal(p.mesh.vertices, q.mesh.vertices):
        raise ValueError("quasi-linear functions live on incompatible meshes")


def elementary_area(pi: QuasiLinearFn) -> float:
    """Sum of the lifted triangle areas."""
    c = pi.coeffs
    return float(np.sum(lifted_tri_area(pi.mesh.vertices, c[:, 0], c[:, 1])))


# ---------------------------------------------------------------- grid meshes

DIAGONALS = ("main", "anti", "cross")


def grid_mesh(domain: Domain, nx: int, ny: int, diagonal: str = "main") -> np.ndarray:
    """Triangles of an ``nx`` by ``ny`` cell grid.

    ``main`` splits each cell along its lower-left to upper-right diagonal,
    ``anti`` along the other one, ``cross`` along both (four triangles).
    Ordering is cell-major with cells in x-fastest order.
    """
    if diagonal not in DIAGONALS:
        raise ValueError(f"diagonal must be one of {DIAGONALS}")
    xs = np.linspace(domain.a, domain.b, nx + 1)
    ys = np.linspace(domain.c, domain.d, ny + 1)
    X0, Y0 = np.meshgrid(xs[:-1], ys[:-1])
    X1, Y1 = np.meshgrid(xs[1:], ys[1:])
    ll = np.stack([X0, Y0], -1).reshape(-1, 2)
    lr = np.stack([X1, Y0], -1).reshape(-1, 2)
    ur = np.stack([X1, Y1], -1).reshape(-1, 2)
    ul = np.stack([X0, Y1], -1).reshape(-1, 2)
    if diagonal == "main":
        tris = [np.stack([ll, lr, ur], 1), np.stack([ll, ur, ul], 1)]
    elif diagonal == "anti":
        tris = [np.stack([ll, lr, ul], 1), np.stack([lr, ur, ul], 1)]
    else:
        ctr = (ll + ur) / 2
        tris = [np.stack([ll, lr, ctr], 1), np.stack([lr, ur, ctr], 1),
                np.stack([ur, ul, ctr], 1), np.stack([ul, ll, ctr], 1)]
    return np.stack(tris, axis=1).reshape(-1, 3, 2)


def _grid_locate(domain: Domain, grid, x, y) -> np.ndarray:
    nx, ny, diagonal = grid
    u = np.clip((x - domain.a) / domain.width * nx, 0, nx)
    v = np.clip((y - domain.c) / domain.height * ny, 0, ny)
    i = np.minimum(np.floor(u).astype(np.int64), nx - 1)
    j = np.minimum(np.floor(v).astype(np.int64), ny - 1)
    s, t = u - i, v - j
    cell = j * nx + i
    if diagonal == "main":
        local = np.where(t <= s, 0, 1)
        return cell * 2 + local
    if diagonal == "anti":
        local = np.where(s + t <= 1, 0, 1)
        return cell * 2 + local
    below_main = t <= s
    below_anti = s + t <= 1
    local = np.where(below_main & below_anti, 0,
                     np.where(below_main, 1, np.where(below_anti, 3, 2)))
    return cell * 4 + local


def quasilinear_from_grid(values, domain: Domain, diagonal: str = "main") -> QuasiLinearFn:
    """Quasi-linear interpolant of node values ``values[i, j]`` on a uniform grid.

    For ``cross`` the cell-center value is the average along the main
    diagonal, so the result coincides with the ``main`` interpolant.
    """
    values = np.asarray(values, dtype=float)
    nx, ny = values.shape[0] - 1, values.shape[1] - 1
    if nx < 1 or ny < 1:
        raise ValueError("need at least one cell")
    verts = grid_mesh(domain, nx, ny, diagonal)
    V00 = values[:-1, :-1].T.reshape(-1)
    V10 = values[1:, :-1].T.reshape(-1)
    V11 = values[1:, 1:].T.reshape(-1)
    V01 = values[:-1, 1:].T.reshape(-1)
    if diagonal == "main":
        vv = [np.stack([V00, V10, V11], 1), np.stack([V00, V11, V01], 1)]
    elif diagonal == "anti":
        vv = [np.stack([V00, V10, V01], 1), np.stack([V10, V11, V01], 1)]
    else:
        C = (V00 + V11) / 2
        vv = [np.stack([V00, V10, C], 1), np.stack([V10, V11, C], 1),
              np.stack([V11, V01, C], 1), np.stack([V01, V00, C], 1)]
    vals = np.stack(vv, axis=1).reshape(-1, 3)
    mesh = TriDecomposition(verts, domain)
    return QuasiLinearFn.from_vertex_values(mesh, vals, grid=(nx, ny, diagonal))


def interpolate_quasilinear(f: ScalarField, k: int, diagonal: str = "main") -> QuasiLinearFn:
    """Interpolate ``f`` at the ``(2**k + 1)**2`` uniform nodes."""
    if k < 0:
        raise ValueError("refinement level must be >= 0")
    n = 2 ** k
    dom = f.domain
    xs = np.linspace(dom.a, dom.b, n + 1)
    ys = np.linspace(dom.c, dom.d, n + 1)
    return quasilinear_from_grid(np.array(f.evaluate(xs[:, None], ys[None, :])), dom, diagonal)


def refine_to_level(pi: QuasiLinearFn, k: int) -> QuasiLinearFn:
    """Same function re-expressed on the finer nested grid of level ``k``.

    Only for grid-generated ``main`` meshes on square grids, which are nested
    under dyadic refinement.
    """
    if pi.grid is None or pi.grid[2] != "main" or pi.grid[0] != pi.grid[1]:
        raise ValueError("refinement needs a square grid-generated 'main' mesh")
    n = 2 ** k
    if n % pi.grid[0]:
        raise ValueError("target level must refine the current grid")
    dom = pi.domain
    xs = np.linspace(dom.a, dom.b, n + 1)
    ys = np.linspace(dom.c, dom.d, n + 1)
    return quasilinear_from_grid(pi(xs[:, None], ys[None, :]), dom, "main")


def sup_distance(f: ScalarField, g: ScalarField, m: int, rect=None) -> float:
    """Max of ``|f - g|`` on the ``(m + 1)**2`` uniform grid over ``rect``."""
    a, b, c, d = (rect or f.domain).bounds
    xs = np.linspace(a, b, m + 1)[:, None]
    ys = np.linspace(c, d, m + 1)[None, :]
    return float(np.max(np.abs(f(xs, ys) - g(xs, ys))))
