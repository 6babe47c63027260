"""Integral means over a square window and their derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    Domain,
    GridField,
    OrientedRect,
    Regularity,
    ScalarField,
    composite_nodes,
    integrate_rect,
)

WINDOW_PANELS = 4
ROUGH_WINDOW_PANELS = 16
WINDOW_ORDER = 8
_CHUNK_EVALS = 2 ** 21


def window_panels(f: ScalarField) -> int:
    return ROUGH_WINDOW_PANELS if f.regularity is Regularity.INTEGRABLE else WINDOW_PANELS


def shrunken_domain(dom: OrientedRect, h: float) -> Domain:
    if not 0.0 < h < min(dom.width, dom.height) / 2:
        raise ValueError(f"h={h} must lie in (0, {min(dom.width, dom.height) / 2})")
    return Domain(dom.a + h, dom.b - h, dom.c + h, dom.d - h)


def _dependence(f: ScalarField) -> tuple[bool, bool]:
    """Which coordinates ``f`` actually varies with, read from its broadcast shape."""
    dom = f.domain
    xs = np.linspace(dom.a, dom.b, 3)[:, None]
    ys = np.linspace(dom.c, dom.d, 3)[None, :]
    shape = np.shape(f(xs, ys))
    shape = (1,) * (2 - len(shape)) + shape
    return shape[0] > 1, shape[1] > 1


def _window_mean(f: ScalarField, x, y, h: float, panels: int, order: int, dep) -> np.ndarray:
    """Vectorized window average; returns an array broadcastable to ``shape(x, y)``."""
    dx, dy = dep
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    # keep only the coordinates the source depends on
    if dx and not dy:
        shape = x.shape
        x, y = x.ravel(), np.full(x.size, f.domain.c + f.domain.height / 2)
    elif dy and not dx:
        shape = y.shape
        y, x = y.ravel(), np.full(y.size, f.domain.a + f.domain.width / 2)
    elif not dx and not dy:
        return np.asarray(f(x, y), float)
    else:
        shape = np.broadcast(x, y).shape
        x, y = (a.ravel() for a in np.broadcast_arrays(x, y))
    t, w = composite_nodes([-h, h], panels, order)
    w = w / (2 * h)
    out = np.empty(x.size)
    step = max(1, _CHUNK_EVALS // (t.size * t.size))
    for s in range(0, x.size, step):
        xs = x[s:s + step, None, None] + t[None, :, None]
        ys = y[s:s + step, None, None] + t[None, None, :]
        vals = np.asarray(f(xs, ys), float)
        vals = vals.reshape((1,) * (3 - vals.ndim) + vals.shape)
        vals = vals[..., 0] if vals.shape[2] == 1 else vals @ w
        vals = vals[:, 0] if vals.shape[1] == 1 else vals @ w
        out[s:s + step] = vals
    return out.reshape(shape)


def _boundary_partials(f: ScalarField, x, y, h, panels, order):
    t, w = composite_nodes([-h, h], panels, order)
    x = np.asarray(x, float)[..., None]
    y = np.asarray(y, float)[..., None]
    scale = 4 * h * h
    fx = (np.broadcast_to(f(x + h, y + t), np.broadcast(x, y + t).shape)
          - np.broadcast_to(f(x - h, y + t), np.broadcast(x, y + t).shape)) @ w / scale
    fy = (np.broadcast_to(f(x + t, y + h), np.broadcast(x + t, y).shape)
          - np.broadcast_to(f(x + t, y - h), np.broadcast(x + t, y).shape)) @ w / scale
    return fx, fy


@dataclass(frozen=True, repr=False)
class MollifiedField(ScalarField):
    """``f_h``: the mean of ``source`` over ``[x-h, x+h] x [y-h, y+h]``, living on ``Q_h``."""

    source: ScalarField | None = None
    h: float = 0.0
    panels: int = WINDOW_PANELS
    order: int = WINDOW_ORDER
    mode: str = "exact"

    def __repr__(self):
        return f"MollifiedField({self.source.name!r}, h={self.h}, mode={self.mode})"


def integral_mean(f: ScalarField, h: float, panels: int | None = None, order: int = WINDOW_ORDER,
                  grid_level: int | None = None) -> MollifiedField:
    """The integral mean ``f_h`` on the shrunken domain.

    By default every evaluation recomputes the window quadrature.  With
    ``grid_level`` the mean is sampled once on a ``(2**k + 1)**2`` grid and
    interpolated bilinearly (mode ``grid``).
    """
    dom = shrunken_domain(f.domain, h)
    panels = window_panels(f) if panels is None else panels
    dep = _dependence(f)

    def func(x, y):
        return _window_mean(f, x, y, h, panels, order, dep)

    def grad(x, y):
        return _boundary_partials(f, x, y, h, panels, order)

    name = f"{f.name}_h[{h:g}]"
    mode = "exact"
    if grid_level is not None:
        n = 2 ** grid_level + 1
        xs = np.linspace(dom.a, dom.b, n)[:, None]
        ys = np.linspace(dom.c, dom.d, n)[None, :]
        grid = GridField(np.broadcast_to(func(xs, ys), (n, n)), dom)
        func, grad, mode = grid.__call__, None, f"grid{grid_level}"
    return MollifiedField(dom, func, grad, Regularity.C1, name, source=f, h=h, panels=panels,
                          order=order, mode=mode)


def integral_mean_partials(f: ScalarField, h: float, x: float, y: float, panels: int | None = None,
                           order: int = WINDOW_ORDER) -> tuple[float, float]:
    """Exact partials of ``f_h`` as boundary-difference integrals over ``4 h**2``."""
    dom = shrunken_domain(f.domain, h)
    if not dom.contains(x, y):
        raise ValueError(f"point ({x}, {y}) outside Q_h = {dom.bounds}")
    panels = window_panels(f) if panels is None else panels
    fx, fy = _boundary_partials(f, x, y, h, panels, order)
    return float(fx), float(fy)


def l1_norm(f: ScalarField, R: OrientedRect | None = None, panels: int = 16, order: int = 8) -> float:
    R = f.domain if R is None else R
    if not f.domain.contains_rect(R):
        raise ValueError(f"rectangle {R.bounds} not inside field domain {f.domain.bounds}")
    return integrate_rect(lambda x, y: np.abs(f(x, y)), R, panels, order, f.x_breaks)


def l1_distance(f: ScalarField, g: ScalarField, R: OrientedRect, panels: int = 16, order: int = 8) -> float:
    """``int_R |f - g|``; ``R`` must lie in both domains."""
    for s in (f, g):
        if not s.domain.contains_rect(R):
            raise ValueError(f"rectangle {R.bounds} not inside {s.domain.bounds}")
    return integrate_rect(lambda x, y: np.abs(f(x, y) - g(x, y)), R, panels, order)
