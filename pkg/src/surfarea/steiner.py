"""Steiner's midpoint inequality for the area functional."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .fields import ScalarField, eval_grad
from .geocze import DEFAULT_ORDER, Subdivision, geocze_sum
from .quasilinear import QuasiLinearFn, refine_to_level, tri_area_2d

NORM_SLACK = 1e-12


def vector_norm_superadditivity(vs: Sequence[Sequence[float]]) -> tuple[float, float, bool]:
    """``(sum |v_i|, |sum v_i|, holds)`` for a nonempty list of 3-vectors."""
    v = np.asarray(vs, dtype=float)
    if v.ndim != 2 or v.shape[0] == 0 or v.shape[1] != 3:
        raise ValueError("need a nonempty list of (a, b, c) triples")
    lhs = float(np.sum(np.linalg.norm(v, axis=1)))
    rhs = float(np.linalg.norm(v.sum(axis=0)))
    return lhs, rhs, lhs >= rhs - NORM_SLACK


def midpoint(f1: ScalarField, f2: ScalarField) -> ScalarField:
    """``(f1 + f2) / 2`` pointwise, tagged with the weaker regularity of the pair."""
    if f1.domain.bounds != f2.domain.bounds:
        raise ValueError(f"fields live on different domains: {f1.domain.bounds} vs {f2.domain.bounds}")

    def func(x, y):
        return 0.5 * (f1(x, y) + f2(x, y))

    grad = None
    if f1.grad is not None and f2.grad is not None:
        def grad(x, y):
            g1, g2 = f1.grad(x, y), f2.grad(x, y)
            return 0.5 * (g1[0] + g2[0]), 0.5 * (g1[1] + g2[1])

    breaks = None
    if f1.x_breaks is not None or f2.x_breaks is not None:
        breaks = np.union1d(*(np.asarray([] if b is None else b) for b in (f1.x_breaks, f2.x_breaks)))
    return ScalarField(f1.domain, func, grad, f1.regularity.weaker(f2.regularity),
                       f"mid({f1.name},{f2.name})", breaks)


def steiner_areas_subdivision(f1: ScalarField, f2: ScalarField, D: Subdivision, panels: int = 4,
                              order: int = DEFAULT_ORDER) -> tuple[float, float, float]:
    """Geöcze sums of ``f1``, ``f2`` and their midpoint over ``D``."""
    mid = midpoint(f1, f2)
    return (geocze_sum(f1, D, panels, order), geocze_sum(f2, D, panels, order),
            geocze_sum(mid, D, panels, order))


def steiner_gap_subdivision(f1: ScalarField, f2: ScalarField, D: Subdivision, panels: int = 4,
                            order: int = DEFAULT_ORDER) -> float:
    """``(G(f1; D) + G(f2; D)) / 2 - G((f1 + f2) / 2; D)``."""
    g1, g2, gm = steiner_areas_subdivision(f1, f2, D, panels, order)
    return 0.5 * (g1 + g2) - gm


def common_refinement(p: QuasiLinearFn, q: QuasiLinearFn) -> tuple[QuasiLinearFn, QuasiLinearFn]:
    """Bring two grid-generated functions onto the finer of their two dyadic grids."""
    if p.mesh.vertices.shape == q.mesh.vertices.shape and np.array_equal(p.mesh.vertices, q.mesh.vertices):
        return p, q
    if p.grid is None or q.grid is None or p.domain.bounds != q.domain.bounds:
        raise ValueError("meshes differ and cannot be overlaid (need grid meshes on one domain)")
    n = max(p.grid[0], q.grid[0])
    k = int(round(np.log2(n)))
    if 2 ** k != n:
        raise ValueError("overlay needs dyadic grid sizes")
    return refine_to_level(p, k), refine_to_level(q, k)


def steiner_gap_terms(p: QuasiLinearFn, q: QuasiLinearFn) -> np.ndarray:
    """Per-triangle gaps ``|T| (|v1| + |v2| - |v1 + v2|)`` with ``v = (1/2, a/2, b/2)``."""
    if not (p.mesh.vertices.shape == q.mesh.vertices.shape and np.array_equal(p.mesh.vertices, q.mesh.vertices)):
        raise ValueError("quasi-linear functions live on incompatible meshes")
    v1 = np.column_stack([np.full(len(p.coeffs), 0.5), 0.5 * p.coeffs[:, :2]])
    v2 = np.column_stack([np.full(len(q.coeffs), 0.5), 0.5 * q.coeffs[:, :2]])
    gap = np.linalg.norm(v1, axis=1) + np.linalg.norm(v2, axis=1) - np.linalg.norm(v1 + v2, axis=1)
    return tri_area_2d(p.mesh.vertices) * gap


def steiner_gap_quasilinear(p: QuasiLinearFn, q: QuasiLinearFn, overlay: bool = False) -> float:
    """``(a(p) + a(q)) / 2 - a((p + q) / 2)`` on a common triangulation.

    With ``overlay`` grid-generated inputs on different dyadic grids are
    first refined to the finer grid.
    """
    if overlay:
        p, q = common_refinement(p, q)
    return float(np.sum(steiner_gap_terms(p, q)))


def equality_flatness_residual(f1: ScalarField, f2: ScalarField, samples: int = 33) -> float:
    """Max of ``|grad f1 - grad f2|`` over a ``samples x samples`` grid of the domain."""
    if f1.domain.bounds != f2.domain.bounds:
        raise ValueError("fields live on different domains")
    dom = f1.domain
    xs = np.linspace(dom.a, dom.b, samples)[:, None]
    ys = np.linspace(dom.c, dom.d, samples)[None, :]
    g1 = eval_grad(f1, xs, ys)
    g2 = eval_grad(f2, xs, ys)
    return float(np.max(np.hypot(g1[0] - g2[0], g1[1] - g2[1])))
