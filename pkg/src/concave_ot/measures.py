"""Discrete measures on R^d and their lattice operations.

A :class:`DiscreteMeasure` is a weighted point cloud with nonnegative
weights and pairwise-distinct atoms (exact duplicates are merged on
construction, atoms of zero weight dropped).  The lattice operations --
the common part ``mu /\\ nu`` and the positive residuals -- use exact
coordinate equality: the common mass between two measures is a
measure-theoretic object, and fuzzy matching would silently change the
problem.

Also provides generators for the standard experiment instances (uniform
boxes, hyperplane-supported samples, and the three-parallel-segments
instance where no transport map can be optimal) plus CSV/JSON file I/O.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DiscreteMeasure",
    "MassDecomposition",
    "MeasureFormatError",
    "meet",
    "mutually_singular",
    "three_segments",
    "uniform_box",
    "translate",
    "snap",
    "hyperplane_sample",
    "save_measure",
    "load_measure",
]

MASS_TOL = 1e-9


class MeasureFormatError(ValueError):
    """Raised when a measure file fails to parse or validate."""


class DiscreteMeasure:
    """Finitely supported nonnegative measure on R^d.

    Atoms are stored in lexicographic order of their coordinates, which
    makes equal measures array-equal regardless of construction order.
    Arrays are frozen after construction; all operations return new
    measures.
    """

    def __init__(self, points, weights, dim=None):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        weights = np.asarray(weights, dtype=float).ravel()
        if points.shape[0] != weights.shape[0]:
            raise ValueError(
                f"got {points.shape[0]} points but {weights.shape[0]} weights"
            )
        if points.size and not np.all(np.isfinite(points)):
            raise ValueError("points must be finite")
        if weights.size and not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        if np.any(weights < 0):
            raise ValueError(f"weights must be >= 0, got minimum {weights.min()!r}")
        if points.shape[0] == 0:
            if dim is None:
                raise ValueError("an empty measure needs an explicit dim")
            points = points.reshape(0, int(dim))
        elif dim is not None and points.shape[1] != dim:
            raise ValueError(f"points have dim {points.shape[1]}, expected {dim}")

        points = points + 0.0  # canonicalize -0.0 so byte keys are unique
        keep = weights > 0.0
        points, weights = points[keep], weights[keep]
        if len(points):
            points, inverse = np.unique(points, axis=0, return_inverse=True)
            merged = np.zeros(len(points))
            np.add.at(merged, inverse.ravel(), weights)
            weights = merged
        self.points = points
        self.weights = weights
        self.points.flags.writeable = False
        self.weights.flags.writeable = False

    @classmethod
    def empty(cls, dim):
        return cls(np.empty((0, dim)), np.empty(0), dim=dim)

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def total_mass(self):
        return float(self.weights.sum())

    def __len__(self):
        return self.points.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, DiscreteMeasure)
            and self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    def __repr__(self):
        return (
            f"DiscreteMeasure({len(self)} atoms, dim={self.dim}, "
            f"mass={self.total_mass:.6g})"
        )

    def require_probability(self, tol=MASS_TOL):
        deficit = self.total_mass - 1.0
        if abs(deficit) > tol:
            raise MeasureFormatError(
                f"weights must sum to 1, got {self.total_mass!r} "
                f"(deficit {-deficit:+.6g})"
            )
        return self

    def _keys(self):
        """Hashable per-atom keys for exact-coordinate matching."""
        return [row.tobytes() for row in self.points]


@dataclass(frozen=True)
class MassDecomposition:
    """Split of a pair (mu, nu) into common part and positive residuals."""

    common: DiscreteMeasure
    mu_residual: DiscreteMeasure
    nu_residual: DiscreteMeasure


def _check_same_dim(mu, nu):
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")


def meet(mu, nu):
    """Atomwise lattice meet: common part and both positive residuals.

    For each point carried by both measures the common weight is the
    minimum of the two weights; residuals keep the atomwise excess.  The
    two residuals never share an atom.
    """
    _check_same_dim(mu, nu)
    nu_index = {k: j for j, k in enumerate(nu._keys())}
    common_at = {}  # nu atom index -> common weight
    m_pts, m_wts = [], []
    a_pts, a_wts = [], []
    for i, key in enumerate(mu._keys()):
        j = nu_index.get(key)
        if j is None:
            a_pts.append(mu.points[i])
            a_wts.append(mu.weights[i])
            continue
        w = min(mu.weights[i], nu.weights[j])
        common_at[j] = w
        m_pts.append(mu.points[i])
        m_wts.append(w)
        if mu.weights[i] > w:
            a_pts.append(mu.points[i])
            a_wts.append(mu.weights[i] - w)
    b_pts, b_wts = [], []
    for j in range(len(nu)):
        w = common_at.get(j, 0.0)
        if nu.weights[j] > w:
            b_pts.append(nu.points[j])
            b_wts.append(nu.weights[j] - w)
    d = mu.dim

    def build(pts, wts):
        if not pts:
            return DiscreteMeasure.empty(d)
        return DiscreteMeasure(np.asarray(pts), np.asarray(wts), dim=d)

    return MassDecomposition(
        common=build(m_pts, m_wts),
        mu_residual=build(a_pts, a_wts),
        nu_residual=build(b_pts, b_wts),
    )


def mutually_singular(mu, nu):
    """True iff no point carries positive weight under both measures."""
    _check_same_dim(mu, nu)
    return not set(mu._keys()) & set(nu._keys())


def three_segments(n):
    """Midpoint discretization of the three-parallel-segments instance.

    The source is a vertical unit segment at abscissa 0 split into ``2n``
    equal atoms; the target puts ``n`` atoms each on the unit segments at
    abscissas 1 and -1.  Every source atom is at horizontal distance
    exactly 1 from every target atom, so the transport cost is bounded
    below by the cost of a unit displacement while maps can only approach
    that bound as ``n`` grows.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ya = (np.arange(2 * n) + 0.5) / (2 * n)
    mu = DiscreteMeasure(
        np.column_stack([np.zeros(2 * n), ya]), np.full(2 * n, 1.0 / (2 * n))
    )
    yb = (np.arange(n) + 0.5) / n
    pts = np.vstack(
        [
            np.column_stack([np.ones(n), yb]),
            np.column_stack([-np.ones(n), yb]),
        ]
    )
    nu = DiscreteMeasure(pts, np.full(2 * n, 1.0 / (2 * n)))
    return mu, nu


def uniform_box(n, dim, corner_lo=None, corner_hi=None, seed=0):
    """n i.i.d. uniform atoms of weight 1/n in an axis-aligned box."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lo = np.zeros(dim) if corner_lo is None else np.asarray(corner_lo, dtype=float)
    hi = np.ones(dim) if corner_hi is None else np.asarray(corner_hi, dtype=float)
    if lo.shape != (dim,) or hi.shape != (dim,):
        raise ValueError("corners must match dim")
    if np.any(hi <= lo):
        raise ValueError("degenerate box: need corner_lo < corner_hi componentwise")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(n, dim))
    return DiscreteMeasure(pts, np.full(n, 1.0 / n))


def translate(mu, e):
    """Push every atom forward by the vector e."""
    e = np.asarray(e, dtype=float).ravel()
    if e.shape != (mu.dim,):
        raise ValueError(f"translation vector has dim {e.shape[0]}, expected {mu.dim}")
    return DiscreteMeasure(mu.points + e, mu.weights, dim=mu.dim)


def snap(mu, nu, tol):
    """Relocate nu-atoms onto mu-atoms closer than ``tol``.

    Common mass is matched by exact coordinate equality, so atoms meant
    to coincide but separated by rounding never meet.  Snapping moves
    each nu-atom onto its nearest mu-atom when that atom is within
    ``tol``; the returned measure merges any collisions.  Off by default
    everywhere; opt in deliberately, since it changes the instance.
    """
    from scipy.spatial import cKDTree

    _check_same_dim(mu, nu)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if len(mu) == 0 or len(nu) == 0:
        return nu
    d, idx = cKDTree(mu.points).query(nu.points, k=1)
    pts = nu.points.copy()
    close = d <= tol
    pts[close] = mu.points[idx[close]]
    return DiscreteMeasure(pts, nu.weights, dim=nu.dim)


def hyperplane_sample(n, dim, seed=0):
    """n uniform atoms on the slab {x_d = 0} of the unit box (dim >= 2)."""
    if dim < 2:
        raise ValueError("hyperplane_sample needs dim >= 2")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 1.0, size=(n, dim))
    pts[:, -1] = 0.0
    return DiscreteMeasure(pts, np.full(n, 1.0 / n))


def save_measure(measure, path):
    """Write a measure to ``path``; format chosen by suffix (.csv or .json)."""
    path = Path(path)
    if path.suffix == ".csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for x, w in zip(measure.points, measure.weights):
                writer.writerow([repr(float(v)) for v in x] + [repr(float(w))])
    elif path.suffix == ".json":
        doc = {
            "dim": measure.dim,
            "atoms": [
                {"x": [float(v) for v in x], "w": float(w)}
                for x, w in zip(measure.points, measure.weights)
            ],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh)
    else:
        raise MeasureFormatError(f"unsupported measure format {path.suffix!r}")


def load_measure(path, require_probability=True):
    """Read a measure written by :func:`save_measure`; validates weights.

    CSV rows are ``x_1, ..., x_d, weight``; the JSON form is
    ``{"dim": d, "atoms": [{"x": [...], "w": ...}]}``.  Parse failures
    report the offending line; negative weights and a total mass away
    from 1 are validation errors.
    """
    path = Path(path)
    if path.suffix == ".csv":
        pts, wts = [], []
        width = None
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                try:
                    vals = [float(v) for v in row]
                except ValueError as exc:
                    raise MeasureFormatError(f"{path}: line {lineno}: {exc}") from exc
                if len(vals) < 2:
                    raise MeasureFormatError(
                        f"{path}: line {lineno}: need at least one coordinate and a weight"
                    )
                if width is None:
                    width = len(vals)
                elif len(vals) != width:
                    raise MeasureFormatError(
                        f"{path}: line {lineno}: expected {width} columns, got {len(vals)}"
                    )
                pts.append(vals[:-1])
                wts.append(vals[-1])
        if not pts:
            raise MeasureFormatError(f"{path}: no atoms found")
        try:
            measure = DiscreteMeasure(np.asarray(pts), np.asarray(wts))
        except ValueError as exc:
            raise MeasureFormatError(f"{path}: {exc}") from exc
    elif path.suffix == ".json":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise MeasureFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
        try:
            atoms = doc["atoms"]
            pts = np.asarray([a["x"] for a in atoms], dtype=float)
            wts = np.asarray([a["w"] for a in atoms], dtype=float)
            measure = DiscreteMeasure(pts, wts, dim=int(doc["dim"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise MeasureFormatError(f"{path}: {exc}") from exc
    else:
        raise MeasureFormatError(f"unsupported measure format {path.suffix!r}")
    if require_probability:
        measure.require_probability()
    return measure
