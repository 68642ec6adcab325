"""Zero-set extraction for manifold scalars.

Scalars are sampled on regular lattices; {m = level} is then pulled out
as polylines (2-D, marching squares with a center-sample rule for the
two ambiguous saddle cases) or as a triangle mesh (3-D, marching cubes
over the classic 256-case table).  Vertices produced on a shared cell
edge use one canonical key, so meshes are watertight up to the open
boundary at the grid faces.  A damped Newton projector moves individual
points onto the zero set exactly.
"""

from collections import defaultdict
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from ._mc_tables import EDGE_CUTS, TRIANGLES
from .errors import ConvergenceError, FlowCurvError, VanishingGradientError
from .manifold import ManifoldScalar

__all__ = [
    "ScalarGrid",
    "LevelSet",
    "sample_grid",
    "extract_levelset",
    "project_to_manifold",
]

_CHUNK = 1 << 17


@dataclass(eq=False)
class ScalarGrid:
    """Scalar samples on a regular lattice.

    values[i0, i1(, i2)] is the scalar at coordinate (axes[0][i0],
    axes[1][i1], ...), so the array shape is resolution + 1 per axis
    (resolution counts cells, not samples).  The sampled callable is
    kept so extraction can consult true scalar values inside ambiguous
    cells.
    """

    bounds: np.ndarray
    resolution: tuple
    values: np.ndarray
    scalar: object = dataclass_field(default=None, repr=False)

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=float)
        if self.bounds.ndim != 2 or self.bounds.shape[1] != 2:
            raise ValueError("bounds must have shape (dim, 2)")
        if self.bounds.shape[0] not in (2, 3):
            raise ValueError("grids are 2-D or 3-D")
        if np.any(self.bounds[:, 0] >= self.bounds[:, 1]):
            raise ValueError("each axis needs min < max")
        self.resolution = tuple(int(r) for r in self.resolution)
        if len(self.resolution) != self.bounds.shape[0]:
            raise ValueError("resolution and bounds dimensions differ")
        if any(r < 2 for r in self.resolution):
            raise ValueError("resolution must be at least 2 cells per axis")
        want = tuple(r + 1 for r in self.resolution)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != want:
            raise ValueError(
                f"values shape {self.values.shape} does not match lattice {want}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")

    @property
    def dimension(self):
        return self.bounds.shape[0]

    @property
    def steps(self):
        return (self.bounds[:, 1] - self.bounds[:, 0]) / np.array(self.resolution)

    def axes(self):
        return [
            np.linspace(self.bounds[i, 0], self.bounds[i, 1], self.resolution[i] + 1)
            for i in range(self.dimension)
        ]

    def cell_diagonal(self):
        return float(np.sqrt(np.sum(self.steps**2)))


@dataclass(eq=False)
class LevelSet:
    """Extracted zero set with the grid metadata it came from.

    2-D: polylines is a list of (k, 2) arrays; a closed loop repeats
    its first point at the end.  3-D: vertices (nv, 3) and triangles
    (nt, 3) vertex indices.
    """

    dimension: int
    level: float
    bounds: np.ndarray
    resolution: tuple
    polylines: list = None
    vertices: np.ndarray = None
    triangles: np.ndarray = None

    @property
    def is_empty(self):
        if self.dimension == 2:
            return not self.polylines
        return self.vertices is None or len(self.vertices) == 0


def _evaluate_batch(scalar, pts):
    """pts is (n, dim); returns (n,) values, preferring a vectorized
    path when the scalar exposes one."""
    if hasattr(scalar, "value_many"):
        return np.asarray(scalar.value_many(pts.T), dtype=float)
    return np.array([float(scalar(p)) for p in pts])


def sample_grid(scalar, bounds, resolution):
    """Evaluate scalar(point) on the lattice spanning bounds.

    bounds is ((lo, hi), ...) per axis; resolution is cells per axis
    (a single int is broadcast).  Evaluation failures are re-raised
    with the offending lattice index attached.
    """
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2 or bounds.shape[0] not in (2, 3):
        raise ValueError("bounds must be ((lo, hi), ...) for 2 or 3 axes")
    dim = bounds.shape[0]
    if np.isscalar(resolution):
        resolution = (int(resolution),) * dim
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) != dim or any(r < 2 for r in resolution):
        raise ValueError("resolution must be at least 2 cells per axis")

    axes = [
        np.linspace(bounds[i, 0], bounds[i, 1], resolution[i] + 1)
        for i in range(dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    shape = tuple(r + 1 for r in resolution)

    values = np.empty(len(pts))
    for lo in range(0, len(pts), _CHUNK):
        hi = min(lo + _CHUNK, len(pts))
        try:
            values[lo:hi] = _evaluate_batch(scalar, pts[lo:hi])
        except FlowCurvError:
            # redo one point at a time to name the failing lattice site
            for n in range(lo, hi):
                try:
                    values[n] = float(scalar(pts[n]))
                except FlowCurvError as exc:
                    idx = np.unravel_index(n, shape)
                    exc.args = (
                        f"{exc.args[0] if exc.args else exc} "
                        f"at lattice index {tuple(int(i) for i in idx)}",
                    )
                    raise
    return ScalarGrid(bounds, resolution, values.reshape(shape), scalar=scalar)


# -- marching squares ----------------------------------------------------

# Cell corners counterclockwise from the lower-left lattice point:
# c0=(i,j) c1=(i+1,j) c2=(i+1,j+1) c3=(i,j+1); the case index sets bit
# k when the value at corner k is below the level.  Edges by index:
# 0 bottom, 1 right, 2 top, 3 left.  Each table entry pairs the edges
# joined by one segment; cases 5 and 10 depend on the cell center.
_SQUARE_SEGMENTS = {
    0: (),
    1: ((3, 0),),
    2: ((0, 1),),
    3: ((3, 1),),
    4: ((1, 2),),
    5: None,
    6: ((0, 2),),
    7: ((2, 3),),
    8: ((2, 3),),
    9: ((0, 2),),
    10: None,
    11: ((1, 2),),
    12: ((1, 3),),
    13: ((0, 1),),
    14: ((3, 0),),
    15: (),
}


def _square_edge_key(edge, i, j):
    if edge == 0:
        return ("h", i, j)
    if edge == 1:
        return ("v", i + 1, j)
    if edge == 2:
        return ("h", i, j + 1)
    return ("v", i, j)


def _extract_squares(grid, level):
    s = grid.values - level
    neg = s < 0
    mask = (
        neg[:-1, :-1].astype(np.uint8)
        + 2 * neg[1:, :-1]
        + 4 * neg[1:, 1:]
        + 8 * neg[:-1, 1:]
    )
    active = np.argwhere((mask != 0) & (mask != 15))
    ax, ay = grid.axes()
    dx, dy = grid.steps

    vertex = {}

    def vertex_at(key):
        if key not in vertex:
            kind, i, j = key
            if kind == "h":
                t = s[i, j] / (s[i, j] - s[i + 1, j])
                vertex[key] = (ax[i] + t * dx, ay[j])
            else:
                t = s[i, j] / (s[i, j] - s[i, j + 1])
                vertex[key] = (ax[i], ay[j] + t * dy)
        return key

    segments = []
    for i, j in active:
        case = int(mask[i, j])
        pairs = _SQUARE_SEGMENTS[case]
        if pairs is None:
            # saddle: connect around the corner pair that the true
            # scalar at the cell center groups with the level side
            if grid.scalar is not None:
                center = float(
                    grid.scalar(np.array([ax[i] + 0.5 * dx, ay[j] + 0.5 * dy]))
                ) - level
            else:
                center = float(
                    s[i, j] + s[i + 1, j] + s[i + 1, j + 1] + s[i, j + 1]
                ) / 4.0
            inside = center < 0
            if case == 5:
                pairs = ((0, 1), (2, 3)) if inside else ((3, 0), (1, 2))
            else:
                pairs = ((3, 0), (1, 2)) if inside else ((0, 1), (2, 3))
        for a, b in pairs:
            segments.append(
                (
                    vertex_at(_square_edge_key(a, i, j)),
                    vertex_at(_square_edge_key(b, i, j)),
                )
            )

    polylines = []
    for chain in _chain(segments):
        pts = [vertex[k] for k in chain]
        deduped = [pts[0]]
        for p in pts[1:]:
            if p != deduped[-1]:
                deduped.append(p)
        if len(deduped) >= 2:
            polylines.append(np.array(deduped))
    return polylines


def _chain(segments):
    """Join segments sharing edge keys into ordered key chains.  Open
    chains start at degree-1 keys; leftover cycles close on themselves
    (first key reappears at the end)."""
    adjacency = defaultdict(list)
    for sid, (a, b) in enumerate(segments):
        adjacency[a].append((sid, b))
        adjacency[b].append((sid, a))
    used = [False] * len(segments)

    def walk(start):
        chain = [start]
        current = start
        while True:
            step = None
            for sid, other in adjacency[current]:
                if not used[sid]:
                    used[sid] = True
                    step = other
                    break
            if step is None:
                return chain
            chain.append(step)
            current = step

    chains = []
    for key, links in adjacency.items():
        if len(links) == 1 and not used[links[0][0]]:
            chains.append(walk(key))
    for sid, (a, _) in enumerate(segments):
        if not used[sid]:
            chains.append(walk(a))
    return chains


# -- marching cubes --------------------------------------------------------

# Edge index -> (axis, corner offset) of the canonical lattice edge, in
# the corner convention of the case tables (see _mc_tables).
_CUBE_EDGE_KEY = (
    ("x", 0, 0, 0),
    ("y", 1, 0, 0),
    ("x", 0, 1, 0),
    ("y", 0, 0, 0),
    ("x", 0, 0, 1),
    ("y", 1, 0, 1),
    ("x", 0, 1, 1),
    ("y", 0, 0, 1),
    ("z", 0, 0, 0),
    ("z", 1, 0, 0),
    ("z", 1, 1, 0),
    ("z", 0, 1, 0),
)
_AXIS_OFFSET = {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}


def _extract_cubes(grid, level):
    s = grid.values - level
    neg = s < 0
    mask = (
        neg[:-1, :-1, :-1].astype(np.uint8)
        + 2 * neg[1:, :-1, :-1]
        + 4 * neg[1:, 1:, :-1]
        + 8 * neg[:-1, 1:, :-1]
        + 16 * neg[:-1, :-1, 1:]
        + 32 * neg[1:, :-1, 1:]
        + 64 * neg[1:, 1:, 1:]
        + 128 * neg[:-1, 1:, 1:]
    )
    active = np.argwhere((mask != 0) & (mask != 255))
    axes = grid.axes()
    steps = grid.steps

    vert_index = {}
    verts = []
    tris = []

    def vertex_id(key):
        vid = vert_index.get(key)
        if vid is None:
            axis, i, j, k = key
            oi, oj, ok = _AXIS_OFFSET[axis]
            a = s[i, j, k]
            t = a / (a - s[i + oi, j + oj, k + ok])
            pos = np.array([axes[0][i], axes[1][j], axes[2][k]])
            pos[("x", "y", "z").index(axis)] += t * steps[
                ("x", "y", "z").index(axis)
            ]
            vid = len(verts)
            vert_index[key] = vid
            verts.append(pos)
        return vid

    for i, j, k in active:
        case = int(mask[i, j, k])
        row = TRIANGLES[case]
        local = {}
        for e in set(row):
            axis, di, dj, dk = _CUBE_EDGE_KEY[e]
            local[e] = vertex_id((axis, i + di, j + dj, k + dk))
        for n in range(0, len(row), 3):
            a, b, c = local[row[n]], local[row[n + 1]], local[row[n + 2]]
            if a == b or b == c or a == c:
                continue
            # table winding is clockwise seen from the positive side;
            # swap to make normals point toward increasing scalar
            tris.append((a, c, b))

    if not verts:
        return np.empty((0, 3)), np.empty((0, 3), dtype=np.intp)
    verts = np.array(verts)
    tris = np.array(tris, dtype=np.intp)
    if len(tris):
        e1 = verts[tris[:, 1]] - verts[tris[:, 0]]
        e2 = verts[tris[:, 2]] - verts[tris[:, 0]]
        area = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
        cell_area = float(steps[0] * steps[1])
        tris = tris[area > 1e-12 * cell_area]
    return verts, tris


def extract_levelset(grid, level=0.0):
    """Extract {scalar = level} from a sampled grid.

    A grid whose samples all sit on one side of the level yields an
    empty LevelSet.
    """
    if not isinstance(grid, ScalarGrid):
        raise TypeError("extract_levelset expects a ScalarGrid")
    if grid.dimension == 2:
        polylines = _extract_squares(grid, level)
        return LevelSet(
            2, float(level), grid.bounds.copy(), grid.resolution, polylines=polylines
        )
    verts, tris = _extract_cubes(grid, level)
    return LevelSet(
        3,
        float(level),
        grid.bounds.copy(),
        grid.resolution,
        vertices=verts,
        triangles=tris,
    )


# -- Newton projection -------------------------------------------------------

def project_to_manifold(field, X, max_iters=50):
    """Move X onto {m = 0} by damped Newton steps along the gradient.

    field is a VectorField (its manifold scalar is used) or any object
    with value(X) and gradient(X).  Success means |m| has dropped to
    1e-10 * (1 + |m(X)|) of the starting magnitude.
    """
    scalar = (
        field
        if hasattr(field, "value") and hasattr(field, "gradient")
        else ManifoldScalar(field)
    )
    x = np.asarray(X, dtype=float).copy()
    m = float(scalar.value(x))
    tol = 1e-10 * (1.0 + abs(m))
    for _ in range(max_iters):
        g = np.asarray(scalar.gradient(x), dtype=float)
        gg = float(np.dot(g, g))
        if gg == 0.0:
            raise VanishingGradientError(
                f"gradient vanishes at {x.tolist()}; cannot project"
            )
        if abs(m) <= tol:
            return x
        step = -(m / gg) * g
        lam = 1.0
        for _ in range(40):
            trial = x + lam * step
            m_trial = float(scalar.value(trial))
            if abs(m_trial) < abs(m):
                x, m = trial, m_trial
                break
            lam *= 0.5
        else:
            raise ConvergenceError(
                f"projection stalled at |m| = {abs(m):.3e} (target {tol:.3e})"
            )
    if abs(m) <= tol:
        return x
    raise ConvergenceError(
        f"projection did not reach |m| <= {tol:.3e} in {max_iters} iterations "
        f"(final |m| = {abs(m):.3e})"
    )
