"""Finite-support experimental designs on compact box domains.

A design is a probability measure with finitely many support points. This
module holds the measure-level toolbox the exchange algorithm is built on:
validation, mixing a design with a point mass, collapsing/pruning support,
exact Kantorovich-Wasserstein (order-1) distances, and affine images of
designs. Designs are immutable values and every operation here is a pure
function.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from .errors import DomainError, SingularMapError

# Support points closer than this in max-norm are considered the same point.
DUPLICATE_TOL = 1e-12
# Slack allowed on box membership checks.
BOX_SLACK = 1e-12
# Tolerance on the weight-sum-one invariant.
WEIGHT_TOL = 1e-12


def _as_matrix(points) -> np.ndarray:
    """Coerce point data to a float (n, q) array; 1-D input is n points in q=1."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts[:, None]
    elif pts.ndim != 2:
        raise ValueError(f"points must be at most 2-dimensional, got shape {pts.shape}")
    return pts


def _as_vector(x, q: int, what: str = "point") -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if v.size != q:
        raise DomainError(f"{what} has dimension {v.size}, expected {q}")
    return v


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DesignSpace:
    """Compact nondegenerate box [lower, upper] ⊂ R^q of experimental conditions."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float)).ravel()
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float)).ravel()
        if lo.size != hi.size or lo.size < 1:
            raise ValueError("lower and upper must be vectors of equal length >= 1")
        if not np.all(lo < hi):
            raise ValueError("box must satisfy lower[i] < upper[i] for all i")
        object.__setattr__(self, "lower", _freeze(lo))
        object.__setattr__(self, "upper", _freeze(hi))

    @property
    def q(self) -> int:
        return self.lower.size

    @property
    def diameter(self) -> float:
        """Euclidean length of the box diagonal."""
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, points, slack: float = BOX_SLACK) -> np.ndarray:
        pts = _as_matrix(points)
        return np.all((pts >= self.lower - slack) & (pts <= self.upper + slack), axis=1)

    def clip(self, points) -> np.ndarray:
        return np.clip(_as_matrix(points), self.lower, self.upper)

    def corners(self) -> np.ndarray:
        """All 2^q box corners, one per row."""
        grids = np.meshgrid(*[(self.lower[j], self.upper[j]) for j in range(self.q)],
                            indexing="ij")
        return np.column_stack([g.ravel() for g in grids])

    def grid(self, points_per_dim: int) -> np.ndarray:
        """Equispaced lattice with `points_per_dim` nodes per axis, shape (m^q, q)."""
        if points_per_dim < 2:
            raise ValueError("points_per_dim must be >= 2")
        axes = [np.linspace(self.lower[j], self.upper[j], points_per_dim)
                for j in range(self.q)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([g.ravel() for g in grids])


@dataclass(frozen=True)
class Design:
    """Probability measure with finite support: points (n, q) and weights (n,)."""

    space: DesignSpace
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = _as_matrix(self.points)
        w = np.atleast_1d(np.asarray(self.weights, dtype=float)).ravel()
        if pts.shape[0] != w.size:
            raise ValueError(f"{pts.shape[0]} points but {w.size} weights")
        if pts.shape[0] < 1:
            raise ValueError("a design needs at least one support point")
        if pts.shape[1] != self.space.q:
            raise DomainError(
                f"points have dimension {pts.shape[1]}, space has dimension {self.space.q}")
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "weights", _freeze(w))

    @property
    def q(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        """Number of support points."""
        return self.points.shape[0]

    def weight_at(self, x, tol: float = DUPLICATE_TOL) -> float:
        """Total weight on support points equal to x (within the duplicate tolerance)."""
        x = _as_vector(x, self.q)
        match = np.max(np.abs(self.points - x), axis=1) <= tol
        return float(self.weights[match].sum())

    def as_dict(self) -> dict:
        """JSON-ready representation; floats keep full double precision."""
        return {
            "space": {"lower": self.space.lower.tolist(),
                      "upper": self.space.upper.tolist()},
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Design":
        space = DesignSpace(data["space"]["lower"], data["space"]["upper"])
        return cls(space, data["points"], data["weights"])


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...] = ()


def validate_design(design: Design, space: DesignSpace | None = None) -> ValidationReport:
    """Check the design invariants and report every violation found.

    Checks box membership (1e-12 slack), nonnegative weights, weight sum one
    (1e-12), and pairwise-distinct support points (1e-12 max-norm).
    """
    space = space or design.space
    bad = []
    if design.q != space.q:
        return ValidationReport(False, (f"points dimension {design.q} != space dimension {space.q}",))
    inside = space.contains(design.points)
    for i in np.nonzero(~inside)[0]:
        bad.append(f"point {i} = {design.points[i].tolist()} outside box")
    for i in np.nonzero(design.weights < 0.0)[0]:
        bad.append(f"negative weight {design.weights[i]:.12g} at index {i}")
    total = float(design.weights.sum())
    if abs(total - 1.0) > WEIGHT_TOL:
        bad.append(f"weight sum {total:.12g} != 1")
    if design.size > 1:
        dist = cdist(design.points, design.points, metric="chebyshev")
        iu = np.triu_indices(design.size, k=1)
        for i, j in zip(*iu):
            if dist[i, j] <= DUPLICATE_TOL:
                bad.append(f"points {i} and {j} coincide (within {DUPLICATE_TOL:g})")
    return ValidationReport(len(bad) == 0, tuple(bad))


def mix_design(design: Design, new_point, alpha: float) -> Design:
    """Mixture (1-alpha)*design + alpha*delta_{new_point}.

    Merges the new point into an existing support point when they coincide
    within the duplicate tolerance. alpha=0 returns the design unchanged.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    x = _as_vector(new_point, design.q)
    if not design.space.contains(x)[0]:
        raise DomainError(f"point {x.tolist()} outside the design space")
    if alpha == 0.0:
        return design
    w = design.weights * (1.0 - alpha)
    match = np.max(np.abs(design.points - x), axis=1) <= DUPLICATE_TOL
    if match.any():
        w = w.copy()
        w[np.argmax(match)] += alpha
        pts = design.points
    else:
        pts = np.vstack([design.points, x])
        w = np.append(w, alpha)
    keep = w > 0.0  # alpha=1 zeroes every old weight
    return Design(design.space, pts[keep], w[keep])


def blend_designs(first: Design, second: Design, alpha: float) -> Design:
    """Mixture (1-alpha)*first + alpha*second, merging coincident support points."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if first.q != second.q:
        raise DomainError(f"dimension mismatch: {first.q} vs {second.q}")
    if alpha == 0.0:
        return first
    if alpha == 1.0:
        return second
    base_w = first.weights * (1.0 - alpha)
    extra_pts, extra_w = [], []
    near = cdist(second.points, first.points, metric="chebyshev")
    for i in range(second.size):
        j = int(np.argmin(near[i]))
        if near[i, j] <= DUPLICATE_TOL:
            base_w[j] += alpha * second.weights[i]
        else:
            extra_pts.append(second.points[i])
            extra_w.append(alpha * second.weights[i])
    if extra_pts:
        return Design(first.space, np.vstack([first.points, np.asarray(extra_pts)]),
                      np.concatenate([base_w, np.asarray(extra_w)]))
    return Design(first.space, first.points, base_w)


def collapse_support(design: Design, anchor, radius: float,
                     anchor_weight_factor: float = 1.0) -> Design:
    """Merge all support points within `radius` (Euclidean) of `anchor`.

    The merged points are replaced by their weighted barycenter; the anchor's
    own weight is multiplied by `anchor_weight_factor` in the barycenter
    computation only. The merged weight is the plain sum of the merged
    weights. The barycenter is clipped to the design-space box.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    if anchor_weight_factor < 1.0:
        raise ValueError("anchor_weight_factor must be >= 1")
    x = _as_vector(anchor, design.q, "anchor")
    dist = np.linalg.norm(design.points - x, axis=1)
    mask = dist <= radius
    if not mask.any():
        return design
    pts_in = design.points[mask]
    w_in = design.weights[mask]
    bary_w = w_in.copy()
    exact = np.max(np.abs(pts_in - x), axis=1) <= DUPLICATE_TOL
    if exact.any():
        bary_w[np.argmax(exact)] *= anchor_weight_factor
    bary = design.space.clip(bary_w @ pts_in / bary_w.sum())[0]
    if mask.sum() == 1 and np.max(np.abs(pts_in[0] - bary)) <= DUPLICATE_TOL:
        return design
    keep_pts = design.points[~mask]
    keep_w = design.weights[~mask]
    merged_w = float(w_in.sum())
    if keep_pts.shape[0]:
        near = np.max(np.abs(keep_pts - bary), axis=1) <= DUPLICATE_TOL
        if near.any():
            keep_w = keep_w.copy()
            keep_w[np.argmax(near)] += merged_w
            return Design(design.space, keep_pts, keep_w)
        return Design(design.space, np.vstack([keep_pts, bary]),
                      np.append(keep_w, merged_w))
    return Design(design.space, bary[None, :], np.array([merged_w]))


def prune_support(design: Design, abs_threshold: float = 0.0,
                  rel_threshold: float = 0.0) -> Design:
    """Drop low-weight support points and renormalize.

    A point is dropped when its weight is below `abs_threshold`, or below
    `rel_threshold` times the mean weight of the other points. The last
    remaining point is never dropped.
    """
    if abs_threshold < 0.0 or rel_threshold < 0.0:
        raise ValueError("thresholds must be >= 0")
    n = design.size
    if n == 1:
        return design
    w = design.weights
    mean_others = (w.sum() - w) / (n - 1)
    drop = (w < abs_threshold) | (w < rel_threshold * mean_others)
    if not drop.any():
        return design
    keep = ~drop
    if not keep.any():
        keep = np.zeros(n, dtype=bool)
        keep[int(np.argmax(w))] = True
    w_kept = w[keep]
    return Design(design.space, design.points[keep], w_kept / w_kept.sum())


def _wasserstein_1d(x1: np.ndarray, w1: np.ndarray,
                    x2: np.ndarray, w2: np.ndarray) -> float:
    # Order-1 transport on the line: integral of |F1 - F2| over the union grid.
    o1, o2 = np.argsort(x1), np.argsort(x2)
    s1, c1 = x1[o1], np.cumsum(w1[o1])
    s2, c2 = x2[o2], np.cumsum(w2[o2])
    grid = np.sort(np.concatenate([s1, s2]))
    if grid.size < 2:
        return 0.0
    mid = grid[:-1]
    i1 = np.searchsorted(s1, mid, side="right")
    i2 = np.searchsorted(s2, mid, side="right")
    f1 = np.where(i1 > 0, c1[np.maximum(i1 - 1, 0)], 0.0)
    f2 = np.where(i2 > 0, c2[np.maximum(i2 - 1, 0)], 0.0)
    return float(np.sum(np.abs(f1 - f2) * np.diff(grid)))


def wasserstein_distance_lp(d1: Design, d2: Design) -> float:
    """Exact order-1 transport distance via the dense linear program.

    Supports in this algorithm stay small, so the (n1*n2)-variable LP with
    Euclidean ground cost is solved exactly; no entropic approximation.
    """
    if d1.q != d2.q:
        raise DomainError(f"dimension mismatch: {d1.q} vs {d2.q}")
    n1, n2 = d1.size, d2.size
    cost = cdist(d1.points, d2.points, metric="euclidean")
    a_eq = np.zeros((n1 + n2, n1 * n2))
    for i in range(n1):
        a_eq[i, i * n2:(i + 1) * n2] = 1.0
    for j in range(n2):
        a_eq[n1 + j, j::n2] = 1.0
    b_eq = np.concatenate([d1.weights, d2.weights])
    # One marginal constraint is redundant; dropping it keeps the system full rank.
    res = linprog(cost.ravel(), A_eq=a_eq[:-1], b_eq=b_eq[:-1],
                  bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(res.fun)


def wasserstein_distance(d1: Design, d2: Design) -> float:
    """Exact Kantorovich-Wasserstein (order-1) distance between two designs.

    Uses the quantile/CDF formula for q=1 and the discrete transport LP
    otherwise.
    """
    if d1.q != d2.q:
        raise DomainError(f"dimension mismatch: {d1.q} vs {d2.q}")
    if d1.q == 1:
        return _wasserstein_1d(d1.points.ravel(), d1.weights,
                               d2.points.ravel(), d2.weights)
    return wasserstein_distance_lp(d1, d2)


@dataclass(frozen=True)
class AffineMap:
    """Scale-position transform z = offset + matrix @ x with a nonsingular matrix."""

    offset: np.ndarray
    matrix: np.ndarray
    inverse_matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.offset, dtype=float)).ravel()
        b = np.asarray(self.matrix, dtype=float)
        if b.ndim == 0:
            b = b.reshape(1, 1)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError(f"matrix must be square, got shape {b.shape}")
        if a.size != b.shape[0]:
            raise ValueError("offset and matrix dimensions disagree")
        row_norms = np.linalg.norm(b, axis=1)
        if np.any(row_norms == 0.0) or abs(np.linalg.det(b / row_norms[:, None])) <= 1e-12:
            raise SingularMapError("map matrix is singular or nearly singular")
        object.__setattr__(self, "offset", _freeze(a))
        object.__setattr__(self, "matrix", _freeze(b))
        object.__setattr__(self, "inverse_matrix", _freeze(np.linalg.inv(b)))

    @classmethod
    def identity(cls, q: int) -> "AffineMap":
        return cls(np.zeros(q), np.eye(q))

    @property
    def q(self) -> int:
        return self.offset.size

    def apply(self, points) -> np.ndarray:
        return _as_matrix(points) @ self.matrix.T + self.offset

    def invert(self, points) -> np.ndarray:
        return (_as_matrix(points) - self.offset) @ self.inverse_matrix.T

    def inverted(self) -> "AffineMap":
        return AffineMap(-self.inverse_matrix @ self.offset, self.inverse_matrix)

    def image_box(self, space: DesignSpace) -> DesignSpace:
        # Bounding box of the transformed corners; exact for q=1.
        img = self.apply(space.corners())
        return DesignSpace(img.min(axis=0), img.max(axis=0))


def transform_design(design: Design, amap: AffineMap) -> Design:
    """Push the design forward through z = a + Bx; weights are unchanged."""
    if amap.q != design.q:
        raise DomainError(f"map dimension {amap.q} != design dimension {design.q}")
    new_space = amap.image_box(design.space)
    pts = new_space.clip(amap.apply(design.points))
    return Design(new_space, pts, design.weights.copy())
