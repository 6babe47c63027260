"""The Schwarz lantern: inscribed polyhedra of the unit cylinder."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

ORACLE_LIMIT = 10 ** 6
DIVERGENCE_FACTOR = 2.0


@dataclass(frozen=True)
class LanternSpec:
    """``m`` height slices and ``n`` angular sectors of the unit cylinder of height 1."""

    m: int
    n: int

    def __post_init__(self):
        for name in ("m", "n"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ValueError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")

    @property
    def triangles(self) -> int:
        return 2 * self.m * self.n


def lantern_triangle_area(spec: LanternSpec) -> float:
    """``sin(pi/n) * sqrt((1 - cos(pi/n))**2 + 1/m**2)``, exact trig."""
    t = math.pi / spec.n
    # 1 - cos t written as 2 sin^2(t/2) to keep precision for large n
    sag = 2.0 * math.sin(t / 2) ** 2
    return math.sin(t) * math.hypot(sag, 1.0 / spec.m)


def lantern_area(spec: LanternSpec) -> float:
    return 2.0 * spec.m * spec.n * lantern_triangle_area(spec)


def lantern_vertices(spec: LanternSpec) -> np.ndarray:
    """Ring vertices, shape ``(m + 1, n, 3)``; ring ``k`` is turned by ``k * pi / n``."""
    m, n = spec.m, spec.n
    k = np.arange(m + 1)[:, None]
    theta = 2 * np.pi * np.arange(n)[None, :] / n + k * np.pi / n
    z = np.broadcast_to(k / m, theta.shape)
    return np.stack([np.cos(theta), np.sin(theta), z], axis=-1)


def lantern_triangles(spec: LanternSpec) -> np.ndarray:
    """All ``2 m n`` triangles, shape ``(2 m n, 3, 3)``."""
    if spec.m * spec.n > ORACLE_LIMIT:
        raise ValueError(f"m*n = {spec.m * spec.n} exceeds the oracle limit {ORACLE_LIMIT}")
    v = lantern_vertices(spec)
    lo, hi = v[:-1], v[1:]
    lo_next = np.roll(lo, -1, axis=1)
    hi_next = np.roll(hi, -1, axis=1)
    # the upper vertex hi[j] sits halfway between lo[j] and lo[j+1]
    up = np.stack([lo, lo_next, hi], axis=2)
    down = np.stack([hi, hi_next, lo_next], axis=2)
    return np.concatenate([up, down], axis=1).reshape(-1, 3, 3)


def lantern_vertex_oracle(spec: LanternSpec) -> float:
    """Brute-force polyhedron area from explicit vertices (cross products)."""
    tri = lantern_triangles(spec)
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    return float(0.5 * np.sum(np.linalg.norm(cross, axis=1)))


def prism_lower_bound(n: int) -> float:
    """Lateral area of the inscribed n-gon prism, ``2 n sin(pi/n)``."""
    return 2.0 * n * math.sin(math.pi / n)


class PathKind(enum.Enum):
    N_FIRST = "n_first"
    M_FIRST = "m_first"
    DIAGONAL = "diagonal"
    PARABOLIC = "parabolic"


def parabolic_m(n: int, c: float) -> int:
    """Slice count keeping ``m * pi**2 / (2 n**2)`` near ``c``; at least 1."""
    return max(1, round(2.0 * c * n * n / math.pi ** 2))


@dataclass(frozen=True)
class LanternPath:
    kind: PathKind
    steps: int
    c: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PathKind(self.kind))
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.kind is PathKind.PARABOLIC and not self.c >= 0:
            raise ValueError("parabolic path needs c >= 0")

    def specs(self) -> list[LanternSpec]:
        k = self.kind
        if k is PathKind.DIAGONAL:
            return [LanternSpec(2 ** j, 2 ** j) for j in range(2, self.steps + 1)]
        if k is PathKind.N_FIRST:
            return [LanternSpec(2 ** j, 4 ** j) for j in range(1, self.steps + 1)]
        if k is PathKind.M_FIRST:
            return [LanternSpec(100 ** j, 8) for j in range(1, self.steps + 1)]
        return [LanternSpec(parabolic_m(2 ** j, self.c), 2 ** j) for j in range(2, self.steps + 1)]

    def expected_limit(self) -> float:
        if self.kind is PathKind.M_FIRST:
            return math.inf
        if self.kind is PathKind.PARABOLIC:
            return 2 * math.pi * math.sqrt(self.c ** 2 + 1)
        return 2 * math.pi


@dataclass
class LanternLimit:
    sequence: list[tuple[int, int, float]] = field(default_factory=list)
    divergent: bool = False
    limit: float = math.nan
    spread: float = math.nan

    def to_csv(self) -> str:
        rows = ["m,n,area"] + [f"{m},{n},{a!r}" for m, n, a in self.sequence]
        rows.append("# limit=divergent" if self.divergent else f"# limit={self.limit:.4f}")
        return "\n".join(rows) + "\n"


def classify_tail(values) -> tuple[bool, float, float]:
    """``(divergent, limit, spread)`` from the last three values of a sequence."""
    tail = [float(v) for v in values][-3:]
    if len(tail) == 3 and all(b > DIVERGENCE_FACTOR * a for a, b in zip(tail, tail[1:])):
        return True, math.inf, math.inf
    return False, tail[-1], max(tail) - min(tail)


def lantern_limit(path: LanternPath) -> LanternLimit:
    seq = [(s.m, s.n, lantern_area(s)) for s in path.specs()]
    divergent, limit, spread = classify_tail([a for _, _, a in seq])
    return LanternLimit(seq, divergent, limit, spread)
