"""Geöcze edge integrals, rectangle functional and dyadic sums.

For a rectangle ``R = [a, b] x [c, d]``::

    G_X(f; R) = int_a^b |f(x, d) - f(x, c)| dx
    G_Y(f; R) = int_c^d |f(b, y) - f(a, y)| dy
    Gamma(f; R) = sqrt(G_X**2 + G_Y**2 + |R|**2)

and the Geöcze sum of a subdivision is the sum of ``Gamma`` over its cells.
Its supremum over subdivisions is the Lebesgue area, approached here from
below by nested dyadic subdivisions.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .fields import OrientedRect, Regularity, ScalarField, composite_nodes, gauss_legendre

DEFAULT_ORDER = 6
DEFAULT_TOL = 1e-4
MONOTONE_SLACK = 1e-9
ROOT_TOL = 1e-12
# evaluation budget (points) per chunk of lines
_CHUNK_POINTS = 1 << 21


@dataclass(frozen=True)
class Subdivision:
    """Grid of cuts ``xs`` by ``ys``; the induced cells tile the rectangle."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        for name in ("xs", "ys"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            if arr.ndim != 1 or arr.size < 2 or np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} must be a strictly increasing list of at least two cuts")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def dyadic(cls, rect, k: int) -> "Subdivision":
        if k < 0:
            raise ValueError("level must be >= 0")
        a, b, c, d = rect.bounds
        n = 2 ** k
        return cls(np.linspace(a, b, n + 1), np.linspace(c, d, n + 1))

    @property
    def rect(self) -> OrientedRect:
        return OrientedRect(self.xs[0], self.xs[-1], self.ys[0], self.ys[-1])

    @property
    def shape(self) -> tuple[int, int]:
        """``(rows, columns)``: cells along y, cells along x."""
        return (self.ys.size - 1, self.xs.size - 1)

    @property
    def cells(self) -> int:
        return (self.xs.size - 1) * (self.ys.size - 1)

    def rects(self) -> list[OrientedRect]:
        return [OrientedRect(self.xs[i], self.xs[i + 1], self.ys[j], self.ys[j + 1])
                for j in range(self.ys.size - 1) for i in range(self.xs.size - 1)]

    @property
    def max_diameter(self) -> float:
        return float(math.hypot(np.max(np.diff(self.xs)), np.max(np.diff(self.ys))))


def _compact_widths(cuts: np.ndarray):
    """Interval widths, collapsed to a scalar when they are all identical."""
    w = np.diff(cuts)
    return w[0] if np.all(w == w[0]) else w


def _line_chunks(nlines: int, npoints: int):
    step = max(2, _CHUNK_POINTS // max(npoints, 1))
    start = 0
    while start < nlines - 1:
        stop = min(nlines, start + step)
        yield start, stop
        start = stop - 1


def _sample(f: ScalarField, along: str, lines, t):
    """Values on lines (axis 0) at abscissae ``t`` (axis 1), possibly compacted."""
    lines = np.asarray(lines, float)[:, None]
    t = np.asarray(t, float)[None, :]
    vals = f(t, lines) if along == "x" else f(lines, t)
    vals = np.asarray(vals, float)
    if vals.ndim < 2:
        vals = vals.reshape((1,) * (2 - vals.ndim) + vals.shape)
    return vals


def _pointwise(f: ScalarField, along: str, line, t):
    return f.evaluate(t, line) if along == "x" else f.evaluate(line, t)


def trace_difference_integrals(f: ScalarField, along: str, lines, cuts, panels: int, order: int):
    """Integrals of ``|f(line_{j+1}) - f(line_j)|`` over each interval of ``cuts``.

    ``along="x"`` integrates in x between horizontal lines ``y = lines[j]``
    (the G_X pieces); ``along="y"`` integrates in y between vertical lines.
    Returns an array broadcastable to ``(len(lines) - 1, len(cuts) - 1)``.

    The absolute value makes the integrand kink where the difference changes
    sign; such panels are split at the sign change (located by bisection)
    before the Gauss rule is applied.
    """
    lines = np.asarray(lines, float)
    cuts = np.asarray(cuts, float)
    ncell = cuts.size - 1
    widths = _compact_widths(cuts)
    probe = _sample(f, along, lines[:2], cuts[:2])
    if probe.shape[0] == 1:
        # independent of the line coordinate: every difference vanishes
        return np.zeros((1, 1))
    if probe.shape[1] == 1:
        # constant along the lines: one sample per line suffices
        vals = np.concatenate([_sample(f, along, lines[i:i + _CHUNK_POINTS], cuts[:1]).reshape(-1)
                               for i in range(0, lines.size, _CHUNK_POINTS)])
        return np.abs(np.diff(vals))[:, None] * widths
    nodes, weights = composite_nodes(cuts, panels, order)
    frac = np.arange(panels + 1) / panels
    edges = (cuts[:-1, None] + np.diff(cuts)[:, None] * frac[None, :])
    # panel edges: per cell panels+1 points (shared edges duplicated, harmless)
    edges = edges.reshape(-1)
    pts = np.concatenate([nodes, edges])
    nn = nodes.size

    pieces = []
    for start, stop in _line_chunks(lines.size, pts.size):
        vals = _sample(f, along, lines[start:stop], pts)
        nl = stop - start
        if vals.shape[0] == 1 and nl > 1:
            # independent of the line coordinate: every difference vanishes
            return np.zeros((1, 1))
        diff = vals[1:] - vals[:-1]
        if diff.shape[1] == 1:
            # constant along the lines
            pieces.append(np.abs(diff) * widths)
            continue
        dn = diff[:, :nn]
        de = diff[:, nn:].reshape(nl - 1, ncell, panels + 1)
        contrib = (np.abs(dn) * weights).reshape(nl - 1, ncell, panels, order).sum(-1)
        contrib = _fix_sign_changes(f, along, lines[start:stop], nodes, weights, dn, de,
                                    contrib, cuts, panels, order)
        pieces.append(contrib.sum(-1))
    if not pieces:
        return np.zeros((1, 1))
    shapes = {p.shape[1] for p in pieces}
    if len(pieces) > 1 and len(shapes) > 1:
        pieces = [np.broadcast_to(p, (p.shape[0], ncell)) for p in pieces]
    return np.concatenate(pieces, axis=0)


def _fix_sign_changes(f, along, lines, nodes, weights, dn, de, contrib, cuts, panels, order):
    nl1 = dn.shape[0]
    ncell = cuts.size - 1
    dn4 = dn.reshape(nl1, ncell, panels, order)
    left = de[:, :, :-1, None]
    right = de[:, :, 1:, None]
    seq = np.concatenate([left, dn4, right], axis=-1)  # (nl1, ncell, panels, order+2)
    sgn = np.sign(seq)
    change = sgn[..., :-1] * sgn[..., 1:] < 0
    flagged = change.any(-1)
    if not flagged.any():
        return contrib
    r, ci, p = np.nonzero(flagged)
    gx, gw = gauss_legendre(order)
    frac = np.arange(panels + 1) / panels
    lo_cut = cuts[ci]
    wcell = cuts[ci + 1] - cuts[ci]
    plo = lo_cut + wcell * frac[p]
    phi = lo_cut + wcell * frac[p + 1]
    node_t = nodes.reshape(ncell, panels, order)[ci, p]
    samples_t = np.concatenate([plo[:, None], node_t, phi[:, None]], axis=1)  # (F, order+2)
    seg_change = change[r, ci, p]  # (F, order+1)
    seg_lo = samples_t[:, :-1]
    seg_hi = samples_t[:, 1:]
    seg_slo = sgn[r, ci, p][:, :-1]

    line_lo = lines[r]
    line_hi = lines[r + 1]
    fr, fs = np.nonzero(seg_change)
    a = seg_lo[fr, fs].copy()
    b = seg_hi[fr, fs].copy()
    s_a = seg_slo[fr, fs]
    l0 = line_lo[fr]
    l1 = line_hi[fr]

    def delta(t):
        return _pointwise(f, along, l1, t) - _pointwise(f, along, l0, t)

    n_iter = int(np.ceil(np.log2(max(float(np.max(b - a)), ROOT_TOL) / ROOT_TOL))) + 1 if a.size else 0
    for _ in range(n_iter):
        m = 0.5 * (a + b)
        same = np.sign(delta(m)) == s_a
        a = np.where(same, m, a)
        b = np.where(same, b, m)
    breaks = seg_lo.copy()
    breaks[fr, fs] = 0.5 * (a + b)
    bp = np.concatenate([plo[:, None], breaks, phi[:, None]], axis=1)  # sorted, (F, order+3)
    sub_lo, sub_hi = bp[:, :-1], bp[:, 1:]
    half = (sub_hi - sub_lo) / 2
    t = (sub_lo + half)[..., None] + half[..., None] * gx
    w = half[..., None] * gw
    L0 = np.broadcast_to(line_lo[:, None, None], t.shape)
    L1 = np.broadcast_to(line_hi[:, None, None], t.shape)
    vals = np.abs(_pointwise(f, along, L1, t) - _pointwise(f, along, L0, t))
    fixed = (vals * w).sum(axis=(-1, -2))
    contrib = contrib.copy()
    contrib[r, ci, p] = fixed
    return contrib


def _edge_integrals(f: ScalarField, D: Subdivision, panels: int, order: int):
    gx = trace_difference_integrals(f, "x", D.ys, D.xs, panels, order)  # (rows, cols)
    gy = trace_difference_integrals(f, "y", D.xs, D.ys, panels, order).T  # (rows, cols)
    return gx, gy


def _check_inside(f: ScalarField, rect) -> None:
    if not f.domain.contains_rect(rect):
        raise ValueError(f"rectangle {rect.bounds} not inside field domain {f.domain.bounds}")


def g_x(f: ScalarField, R: OrientedRect, panels: int = 16, order: int = DEFAULT_ORDER) -> float:
    _check_inside(f, R)
    val = trace_difference_integrals(f, "x", [R.c, R.d], [R.a, R.b], panels, order)
    return float(np.broadcast_to(val, (1, 1))[0, 0])


def g_y(f: ScalarField, R: OrientedRect, panels: int = 16, order: int = DEFAULT_ORDER) -> float:
    _check_inside(f, R)
    val = trace_difference_integrals(f, "y", [R.a, R.b], [R.c, R.d], panels, order)
    return float(np.broadcast_to(val, (1, 1))[0, 0])


def gamma(f: ScalarField, R: OrientedRect, panels: int = 16, order: int = DEFAULT_ORDER) -> float:
    return math.sqrt(g_x(f, R, panels, order) ** 2 + g_y(f, R, panels, order) ** 2 + R.area ** 2)


def gamma_cells(f: ScalarField, D: Subdivision, panels: int = 4, order: int = DEFAULT_ORDER):
    """Per-cell ``Gamma`` values, broadcastable to ``D.shape``."""
    _check_inside(f, D.rect)
    gx, gy = _edge_integrals(f, D, panels, order)
    dx = _compact_widths(D.xs)
    dy = _compact_widths(D.ys)
    area = np.multiply.outer(np.atleast_1d(dy), np.atleast_1d(dx))
    if area.size == 1:
        area = area.reshape(1, 1)
    return np.sqrt(gx * gx + gy * gy + area * area)


def _broadcast_sum(a: np.ndarray, shape) -> float:
    a = np.asarray(a)
    full = int(np.prod(shape))
    return float(np.sum(a)) * (full // a.size)


def geocze_sum(f: ScalarField, D: Subdivision, panels: int = 4, order: int = DEFAULT_ORDER) -> float:
    """``sum over cells of Gamma(f; R)``; panels are per cell edge."""
    return _broadcast_sum(gamma_cells(f, D, panels, order), D.shape)


def ladder_panels(k: int) -> int:
    """Edge panels at dyadic level ``k``: fixed panel size until 4 per edge."""
    return max(4, 256 // 2 ** k)


@dataclass(frozen=True)
class LadderLevel:
    level: int
    cells: int
    G: float
    delta: float


@dataclass
class GeoczeLadder:
    levels: list[LadderLevel] = field(default_factory=list)
    estimate: float = float("nan")
    converged: bool = False
    converged_level: int | None = None
    field_name: str = ""

    def values(self) -> np.ndarray:
        return np.array([lv.G for lv in self.levels])

    def is_monotone(self, slack: float = MONOTONE_SLACK) -> bool:
        g = self.values()
        return bool(np.all(np.diff(g) >= -slack))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "cells", "G", "delta"])
        for lv in self.levels:
            w.writerow([lv.level, lv.cells, repr(lv.G), repr(lv.delta)])
        return buf.getvalue()


def geocze_area(f: ScalarField, max_level: int, panels: int | None = None, order: int = DEFAULT_ORDER,
                tol: float = DEFAULT_TOL, rect=None, extend_to: int | None = None) -> GeoczeLadder:
    """Dyadic Geöcze ladder ``G_0 <= G_1 <= ... <= G_max_level`` over ``rect``.

    ``tol`` is relative.  ``converged`` means the last increment is below it
    (the last three increments for fields tagged Integrable), and
    ``converged_level`` is the first level already within ``tol`` of the
    estimate.  With ``extend_to`` an unconverged ladder keeps refining, one
    level at a time, up to that level.  Divergent ladders are reported,
    never raised.
    """
    if max_level < 0:
        raise ValueError("max_level must be >= 0")
    rect = rect or f.domain
    ladder = GeoczeLadder(field_name=f.name)
    last = max_level if extend_to is None else max(max_level, extend_to)
    for k in range(last + 1):
        D = Subdivision.dyadic(rect, k)
        p = ladder_panels(k) if panels is None else panels
        G = geocze_sum(f, D, p, order)
        ladder.levels.append(LadderLevel(k, D.cells, G, D.max_diameter))
        if k >= max_level:
            _settle(ladder, f.regularity, tol)
            if ladder.converged:
                break
    return ladder


def _settle(ladder: GeoczeLadder, regularity: Regularity, tol: float) -> None:
    g = ladder.values()
    ladder.estimate = float(g[-1])
    scale = max(abs(ladder.estimate), 1e-300)
    incr = np.diff(g) / scale
    need = 3 if regularity is Regularity.INTEGRABLE else 1
    tail = incr[-need:]
    ladder.converged = bool(g.size > 1 and tail.size == need and np.all(np.abs(tail) < tol))
    within = np.nonzero(np.abs(g[-1] - g) < tol * scale)[0]
    ladder.converged_level = int(within[0]) if ladder.converged else None
