"""Scalar fields on rectangles, the builtin catalog, gradients and quadrature.

Fields are vectorized: ``f(x, y)`` accepts numpy arrays and returns an array
that is *broadcastable* to ``np.broadcast(x, y).shape``.  A field that ignores
one coordinate may return the smaller shape; this keeps evaluation on tensor
grids cheap (the Cantor sheets are evaluated once per abscissa, not once per
grid node).  Use :meth:`ScalarField.evaluate` when the full shape is needed.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

ArrayFunc = Callable[[np.ndarray, np.ndarray], np.ndarray]
GradFunc = Callable[[np.ndarray, np.ndarray], tuple]

DEFAULT_FD_STEP = 1e-5
CANTOR_DIGITS = 64


class Regularity(enum.Enum):
    C1 = "C1"
    CONTINUOUS = "Continuous"
    INTEGRABLE = "Integrable"

    def weaker(self, other: "Regularity") -> "Regularity":
        order = [Regularity.C1, Regularity.CONTINUOUS, Regularity.INTEGRABLE]
        return order[max(order.index(self), order.index(other))]


@dataclass(frozen=True)
class OrientedRect:
    """Closed axis-aligned rectangle ``[a, b] x [c, d]``."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (self.a < self.b and self.c < self.d):
            raise ValueError(f"degenerate rectangle [{self.a},{self.b}]x[{self.c},{self.d}]")

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def height(self) -> float:
        return self.d - self.c

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def diameter(self) -> float:
        return math.hypot(self.width, self.height)

    def contains_rect(self, other, tol: float = 1e-12) -> bool:
        a, b, c, d = other.bounds
        return (a >= self.a - tol and b <= self.b + tol
                and c >= self.c - tol and d <= self.d + tol)

    def contains(self, x, y, tol: float = 1e-12):
        x = np.asarray(x)
        y = np.asarray(y)
        return ((x >= self.a - tol) & (x <= self.b + tol)
                & (y >= self.c - tol) & (y <= self.d + tol))

    def centered_subrect(self, fraction: float = 0.5) -> "OrientedRect":
        """Concentric rectangle scaled by ``fraction`` (``[1/4, 3/4]^2`` for Q)."""
        mx, my = (self.a + self.b) / 2, (self.c + self.d) / 2
        hw, hh = fraction * self.width / 2, fraction * self.height / 2
        return OrientedRect(mx - hw, mx + hw, my - hh, my + hh)

    def shrink(self, h: float) -> "OrientedRect":
        return OrientedRect(self.a + h, self.b - h, self.c + h, self.d - h)


@dataclass(frozen=True)
class Domain(OrientedRect):
    """Rectangle a field lives on; the unit square by default."""

    a: float = 0.0
    b: float = 1.0
    c: float = 0.0
    d: float = 1.0

    @property
    def x_lo(self) -> float:
        return self.a

    @property
    def x_hi(self) -> float:
        return self.b

    @property
    def y_lo(self) -> float:
        return self.c

    @property
    def y_hi(self) -> float:
        return self.d

    @classmethod
    def of(cls, rect) -> "Domain":
        return cls(*rect.bounds)


UNIT_SQUARE = Domain()


@dataclass(frozen=True)
class ScalarField:
    domain: Domain
    func: ArrayFunc
    grad: GradFunc | None = None
    regularity: Regularity = Regularity.C1
    name: str = "field"
    # abscissae where the field or its gradient may jump; quadrature cuts there
    x_breaks: np.ndarray | None = field(default=None, compare=False)

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.asarray(self.func(x, y), dtype=float)

    def evaluate(self, x, y) -> np.ndarray:
        """Evaluate and broadcast to the full shape of ``(x, y)``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        return np.broadcast_to(self(x, y), shape)

    def without_grad(self) -> "ScalarField":
        return ScalarField(self.domain, self.func, None, self.regularity, self.name, self.x_breaks)

    def __repr__(self):
        return f"ScalarField({self.name!r}, {self.domain.bounds}, {self.regularity.value})"


# ---------------------------------------------------------------- Cantor

def cantor(x, depth: int | None = None) -> np.ndarray:
    """Cantor function by ternary digit expansion.

    With ``depth=None`` the digits are consumed until a digit 1 is met or
    ``CANTOR_DIGITS`` digits are used.  With an integer ``depth`` the
    remainder after ``depth`` digits is interpolated linearly, which is the
    piecewise-linear staircase approximant; it is within ``2**-depth`` of the
    exact function.

    >>> float(cantor(0.25))
    0.3333333333333333
    """
    x = np.asarray(x, dtype=float)
    t = np.clip(x, 0.0, 1.0)
    top = t >= 1.0
    t = np.where(top, 0.0, t)
    out = np.zeros_like(t)
    active = ~top
    scale = 0.5
    ndig = CANTOR_DIGITS if depth is None else depth
    for _ in range(ndig):
        if not active.any():
            break
        t = 3.0 * t
        digit = np.floor(t)
        t = t - digit
        out = out + np.where(active & (digit >= 1.0), scale, 0.0)
        active = active & (digit != 1.0)
        scale *= 0.5
    if depth is not None:
        # unresolved tail: linear interpolation inside the current triadic cell
        out = out + np.where(active, 2.0 * scale * t, 0.0)
    out = np.where(top, 1.0, out)
    return out


def _cantor_depth(param) -> int | None:
    if param in (None, "exact"):
        return None
    depth = int(param)
    if depth != param or depth < 0:
        raise ValueError(f"cantor depth must be a nonnegative integer or 'exact', got {param!r}")
    return depth


# ---------------------------------------------------------------- catalog

def _const(c):
    c = float(c)
    return ScalarField(UNIT_SQUARE, lambda x, y: np.full((1,) * max(x.ndim, y.ndim), c),
                       lambda x, y: (np.zeros(np.broadcast(x, y).shape), np.zeros(np.broadcast(x, y).shape)),
                       Regularity.C1, f"const({c:g})")


def _plane(alpha, beta, gamma):
    alpha, beta, gamma = float(alpha), float(beta), float(gamma)

    def grad(x, y):
        shape = np.broadcast(x, y).shape
        return np.full(shape, alpha), np.full(shape, beta)

    return ScalarField(UNIT_SQUARE, lambda x, y: alpha * x + beta * y + gamma, grad,
                       Regularity.C1, f"plane({alpha:g},{beta:g},{gamma:g})")


def _paraboloid():
    return ScalarField(UNIT_SQUARE, lambda x, y: x * x + y * y,
                       lambda x, y: np.broadcast_arrays(2 * x, 2 * y),
                       Regularity.C1, "paraboloid")


def _cylinder_sq():
    return ScalarField(UNIT_SQUARE, lambda x, y: x * x,
                       lambda x, y: np.broadcast_arrays(2 * x, 0 * y),
                       Regularity.C1, "cylinder_sq")


def _step_x(s):
    s = float(s)
    if not 0.0 < s < 1.0:
        raise ValueError(f"step location {s} must lie inside (0, 1)")
    # left limit at the jump abscissa
    return ScalarField(UNIT_SQUARE, lambda x, y: np.where(x > s, 1.0, 0.0), None,
                       Regularity.INTEGRABLE, f"step_x({s:g})", np.array([s]))


MAX_BREAKS = 10 ** 6


def _staircase_breaks(k: int | None, shift: float = 0.0) -> np.ndarray | None:
    """Kinks of the depth-``k`` staircase (the triadic grid); none for the exact function."""
    if k is None or 3 ** k > MAX_BREAKS:
        return None
    return shift + np.arange(3 ** k + 1) / 3 ** k


def _cantor_field(depth=None):
    k = _cantor_depth(depth)
    label = "exact" if k is None else str(k)
    return ScalarField(UNIT_SQUARE, lambda x, y: cantor(x, k), None,
                       Regularity.CONTINUOUS, f"cantor({label})", _staircase_breaks(k))


def _cantor_sheet(depth=None):
    k = _cantor_depth(depth)
    label = "exact" if k is None else str(k)
    return ScalarField(Domain(0.0, 1.0, 0.0, 2.0), lambda x, y: cantor(x, k), None,
                       Regularity.CONTINUOUS, f"cantor_sheet({label})", _staircase_breaks(k))


STEINER_DOMAIN = Domain(0.0, 2.0, 0.0, 2.0)


def _steiner_f1(depth=None):
    k = _cantor_depth(depth)
    label = "exact" if k is None else str(k)
    return ScalarField(STEINER_DOMAIN, lambda x, y: cantor(x - 1.0, k), None,
                       Regularity.CONTINUOUS, f"steiner_f1({label})", _staircase_breaks(k, 1.0))


def _steiner_f2(depth=None):
    k = _cantor_depth(depth)
    label = "exact" if k is None else str(k)
    # cantor() saturates at 1 for x >= 1, which is the flat right half
    return ScalarField(STEINER_DOMAIN, lambda x, y: cantor(x, k), None,
                       Regularity.CONTINUOUS, f"steiner_f2({label})", _staircase_breaks(k))


def _wiggle(x):
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, x * np.sin(1.0 / (safe * safe)), 0.0)


def _wiggle_dx(x):
    safe = np.where(x > 0, x, 1.0)
    u = 1.0 / (safe * safe)
    return np.where(x > 0, np.sin(u) - 2.0 * u * np.cos(u), 0.0)


def _bvt_counterexample():
    """x sin(1/x^2): continuous, every horizontal section of unbounded variation."""
    return ScalarField(UNIT_SQUARE, lambda x, y: _wiggle(x),
                       lambda x, y: np.broadcast_arrays(_wiggle_dx(x), 0 * y),
                       Regularity.CONTINUOUS, "bvt_counterexample")


_CATALOG: dict[str, tuple[Callable[..., ScalarField], tuple[int, ...]]] = {
    "const": (_const, (1,)),
    "plane": (_plane, (3,)),
    "paraboloid": (_paraboloid, (0,)),
    "cylinder_sq": (_cylinder_sq, (0,)),
    "step_x": (_step_x, (1,)),
    "cantor": (_cantor_field, (1,)),
    "cantor_sheet": (_cantor_sheet, (0, 1)),
    "steiner_f1": (_steiner_f1, (0, 1)),
    "steiner_f2": (_steiner_f2, (0, 1)),
    "bvt_counterexample": (_bvt_counterexample, (0,)),
}
_SYMBOLIC_OK = {"cantor", "cantor_sheet", "steiner_f1", "steiner_f2"}

CATALOG_NAMES = tuple(_CATALOG)


def make_builtin(name: str, params: Sequence = ()) -> ScalarField:
    """Build a catalog field, e.g. ``make_builtin("plane", [1, 2, 0])``."""
    if name not in _CATALOG:
        raise ValueError(f"unknown field {name!r}; known: {', '.join(_CATALOG)}")
    factory, arities = _CATALOG[name]
    params = list(params)
    if len(params) not in arities:
        raise ValueError(f"{name} takes {' or '.join(map(str, arities))} parameter(s), got {len(params)}")
    parsed = []
    for p in params:
        if isinstance(p, str) and p == "exact" and name in _SYMBOLIC_OK:
            parsed.append(p)
        else:
            try:
                value = float(p)
            except (TypeError, ValueError):
                raise ValueError(f"bad parameter {p!r} for {name}") from None
            if not math.isfinite(value):
                raise ValueError(f"non-finite parameter {p!r} for {name}")
            parsed.append(value)
    return factory(*parsed)


_DESCRIPTOR = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$")


def parse_descriptor(text: str) -> ScalarField:
    """Parse ``name(p1,p2,...)`` (``name`` alone means no parameters).

    ``grid:<path>`` loads a grid field file instead.
    """
    if text.startswith("grid:"):
        return load_grid_field(text[5:]).to_field()
    m = _DESCRIPTOR.match(text)
    if not m:
        raise ValueError(f"unparseable field descriptor {text!r}")
    name, body = m.group(1), m.group(2)
    params = [] if body is None or not body.strip() else [p.strip() for p in body.split(",")]
    return make_builtin(name, params)


def catalog_fields() -> list[ScalarField]:
    """Representative instance of every catalog entry."""
    return [
        make_builtin("const", [1]),
        make_builtin("plane", [1, 2, 0]),
        make_builtin("paraboloid"),
        make_builtin("cylinder_sq"),
        make_builtin("step_x", [0.5]),
        make_builtin("cantor", ["exact"]),
        make_builtin("cantor", [8]),
        make_builtin("cantor_sheet", ["exact"]),
        make_builtin("steiner_f1"),
        make_builtin("steiner_f2"),
        make_builtin("bvt_counterexample"),
    ]


# ---------------------------------------------------------------- grid fields

class GridFormatError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class GridField:
    """Samples ``values[i, j]`` at ``(x_lo + i*dx, y_lo + j*dy)``, bilinearly interpolated."""

    values: np.ndarray
    domain: Domain = UNIT_SQUARE

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 2 or v.shape[1] < 2:
            raise ValueError(f"grid needs at least 2x2 nodes, got shape {v.shape}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    def __call__(self, x, y) -> np.ndarray:
        dom = self.domain
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        u = (x - dom.a) / dom.width * (self.nx - 1)
        v = (y - dom.c) / dom.height * (self.ny - 1)
        i = np.clip(np.floor(u).astype(int), 0, self.nx - 2)
        j = np.clip(np.floor(v).astype(int), 0, self.ny - 2)
        s = u - i
        t = v - j
        g = self.values
        return ((1 - s) * (1 - t) * g[i, j] + s * (1 - t) * g[i + 1, j]
                + (1 - s) * t * g[i, j + 1] + s * t * g[i + 1, j + 1])

    def to_field(self, name: str = "grid") -> ScalarField:
        return ScalarField(self.domain, self.__call__, None, Regularity.CONTINUOUS,
                           f"{name}[{self.nx}x{self.ny}]")

    @classmethod
    def sample(cls, f: ScalarField, nx: int, ny: int | None = None) -> "GridField":
        ny = nx if ny is None else ny
        dom = f.domain
        xs = np.linspace(dom.a, dom.b, nx)
        ys = np.linspace(dom.c, dom.d, ny)
        return cls(np.array(f.evaluate(xs[:, None], ys[None, :])), dom)

    def dumps(self) -> str:
        d = self.domain
        lines = [f"{self.nx} {self.ny} {d.a!r} {d.b!r} {d.c!r} {d.d!r}"]
        for j in range(self.ny):
            lines.append(" ".join(repr(float(v)) for v in self.values[:, j]))
        return "\n".join(lines) + "\n"


def parse_grid_field(text: str) -> GridField:
    """Parse the plain-text grid format (header, then x-fastest values)."""
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        for m in re.finditer(r"\S+", line):
            tokens.append((m.group(0), lineno, m.start() + 1))
    if len(tokens) < 6:
        raise GridFormatError("header needs 'nx ny x_lo x_hi y_lo y_hi'", 1, 1)

    def num(k, kind=float):
        tok, ln, col = tokens[k]
        try:
            val = kind(tok)
        except ValueError:
            raise GridFormatError(f"expected {'integer' if kind is int else 'number'}, got {tok!r}", ln, col) from None
        return val

    nx, ny = num(0, int), num(1, int)
    if nx < 2 or ny < 2:
        raise GridFormatError("node counts must be >= 2", tokens[0][1], tokens[0][2])
    bounds = [num(k) for k in range(2, 6)]
    body = tokens[6:]
    if len(body) != nx * ny:
        ln, col = (body[nx * ny][1], body[nx * ny][2]) if len(body) > nx * ny else (tokens[-1][1], tokens[-1][2])
        raise GridFormatError(f"expected {nx * ny} values, found {len(body)}", ln, col)
    vals = np.array([num(6 + k) for k in range(nx * ny)])
    try:
        dom = Domain(*bounds)
    except ValueError as exc:
        raise GridFormatError(str(exc), tokens[2][1], tokens[2][2]) from None
    return GridField(vals.reshape(ny, nx).T, dom)


def load_grid_field(path) -> GridField:
    return parse_grid_field(Path(path).read_text())


# ---------------------------------------------------------------- gradients

def eval_grad(f: ScalarField, x, y, h: float = DEFAULT_FD_STEP):
    """Gradient of ``f``: analytic when available, else finite differences.

    Central differences at interior points; second-order one-sided stencils
    for points within ``h`` of the boundary.  Accepts scalars or arrays.
    """
    gx, gy = eval_grad_compact(f, x, y, h)
    shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
    gx = np.broadcast_to(gx, shape)
    gy = np.broadcast_to(gy, shape)
    return (float(gx), float(gy)) if gx.ndim == 0 else (gx, gy)


def eval_grad_compact(f: ScalarField, x, y, h: float = DEFAULT_FD_STEP):
    """Like :func:`eval_grad` but each component may be a broadcastable (smaller) array."""
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dom = f.domain
    if not np.all(dom.contains(x, y)):
        raise ValueError(f"point outside domain {dom.bounds}")
    if f.grad is not None:
        gx, gy = f.grad(x, y)
        return np.asarray(gx, float), np.asarray(gy, float)
    return (_fd_axis(f, x, y, h, dom.a, dom.b, axis=0),
            _fd_axis(f, x, y, h, dom.c, dom.d, axis=1))


def _fd_axis(f, x, y, h, lo, hi, axis):
    t = x if axis == 0 else y

    def at(offset):
        return f(x + offset, y) if axis == 0 else f(x, y + offset)

    central = (at(h) - at(-h)) / (2 * h)
    near_lo = t - h < lo
    near_hi = t + h > hi
    if near_lo.any() or near_hi.any():
        fwd = (-3 * f(x, y) + 4 * at(h) - at(2 * h)) / (2 * h)
        bwd = (3 * f(x, y) - 4 * at(-h) + at(-2 * h)) / (2 * h)
        central = np.where(near_lo, fwd, np.where(near_hi, bwd, central))
    return central


def gradient_norm_integrand(f: ScalarField, h: float = DEFAULT_FD_STEP) -> ArrayFunc:
    """``(x, y) -> sqrt(1 + f_x^2 + f_y^2)`` as a vectorized callable."""
    def integrand(x, y):
        gx, gy = eval_grad(f, x, y, h)
        return np.sqrt(1.0 + np.asarray(gx) ** 2 + np.asarray(gy) ** 2)
    return integrand


# ---------------------------------------------------------------- quadrature

@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1] (read-only arrays)."""
    if not 1 <= order <= 32:
        raise ValueError(f"Gauss order must be in 1..32, got {order}")
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_nodes(cuts, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss nodes/weights over every interval of ``cuts``.

    Each interval is split into ``panels`` equal panels.  Returned arrays are
    flat and ordered interval by interval, so they reshape to
    ``(len(cuts) - 1, panels * order)``.
    """
    if panels < 1:
        raise ValueError("panels must be >= 1")
    cuts = np.asarray(cuts, dtype=float)
    gx, gw = gauss_legendre(order)
    frac = np.arange(panels + 1) / panels
    lo, hi = cuts[:-1], cuts[1:]
    edges = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    left, width = edges[:, :-1], np.diff(edges, axis=1)
    nodes = left[..., None] + width[..., None] * (gx + 1.0) / 2.0
    weights = width[..., None] * gw / 2.0
    return nodes.ravel(), weights.ravel()


def integrate_line(g: Callable, a: float, b: float, panels: int = 16, order: int = 8) -> float:
    """Composite Gauss-Legendre approximation of the integral of ``g`` over [a, b]."""
    if a > b:
        raise ValueError("need a <= b")
    if not 2 <= order <= 16:
        raise ValueError(f"Gauss order must be in 2..16, got {order}")
    if a == b:
        return 0.0
    nodes, weights = composite_nodes([a, b], panels, order)
    vals = np.broadcast_to(np.asarray(g(nodes), dtype=float), nodes.shape)
    return float(weights @ vals)


def rect_nodes(lo: float, hi: float, panels: int, order: int, breaks=None):
    """Composite nodes over [lo, hi]; interior ``breaks`` become extra panel edges."""
    if breaks is None:
        return composite_nodes([lo, hi], panels, order)
    b = np.asarray(breaks, dtype=float)
    cuts = np.union1d(np.linspace(lo, hi, panels + 1), b[(b > lo) & (b < hi)])
    return composite_nodes(cuts, 1, order)


def weighted_sum(vals, xw: np.ndarray, yw: np.ndarray) -> float:
    """``xw @ vals @ yw`` for ``vals`` broadcastable to ``(xw.size, yw.size)``."""
    vals = np.asarray(vals, dtype=float)
    vals = vals.reshape((1,) * (2 - vals.ndim) + vals.shape)
    col = vals @ yw if vals.shape[1] > 1 else vals[:, 0] * yw.sum()
    return float(xw @ col) if col.size > 1 else float(col[0] * xw.sum())


def integrate_rect(F: ArrayFunc, R, panels: int = 16, order: int = 8, x_breaks=None) -> float:
    """Tensor-product composite Gauss quadrature of ``F(x, y)`` over ``R``.

    ``x_breaks`` adds panel edges at known jumps of ``F`` in ``x``.
    """
    if not 2 <= order <= 16:
        raise ValueError(f"Gauss order must be in 2..16, got {order}")
    a, b, c, d = R.bounds
    xn, xw = rect_nodes(a, b, panels, order, x_breaks)
    yn, yw = composite_nodes([c, d], panels, order)
    return weighted_sum(F(xn[:, None], yn[None, :]), xw, yw)
