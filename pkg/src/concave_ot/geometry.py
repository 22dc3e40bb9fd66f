"""Cone geometry and the empirical isotropy audit.

A measure that gives no mass to (d-1)-rectifiable sets concentrates on
points whose every cone -- any direction, any opening, any radius --
carries positive mass.  Discretely the property can only be probed above
the sample's resolution scale: for each sampled atom and each grid cell
``(direction, opening, radius)`` the audit asks whether any *other* atom
lies in the cone.  Diffuse samples fail only near the boundary of their
support; measures concentrated on a hyperplane fail massively in the
normal directions, which is the audit's negative control.

For the downward direction the cone membership test is equivalent to a
half-space test below the graph of a Lipschitz function with constant
``k(delta) = (1 - delta) / sqrt(delta * (2 - delta))``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import norm, qmc

__all__ = [
    "Cone",
    "IsotropyReport",
    "cone_contains",
    "k_delta",
    "halfspace_equivalence",
    "direction_grid",
    "resolution_scale",
    "isotropy_audit",
]


@dataclass(frozen=True)
class Cone:
    """Closed cone with apex x, axis u, opening delta, radius eps.

    Membership: ``<y - x, u> >= (1 - delta) * |y - x|`` and
    ``|y - x| <= eps``; ``eps = inf`` gives the unbounded cone.
    """

    apex: np.ndarray
    direction: np.ndarray
    opening: float
    radius: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "apex", np.asarray(self.apex, dtype=float).ravel())
        u = np.asarray(self.direction, dtype=float).ravel()
        nrm = np.linalg.norm(u)
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"direction must be a unit vector, |u| = {nrm!r}")
        object.__setattr__(self, "direction", u)
        if not 0.0 < self.opening < 1.0:
            raise ValueError(f"opening must lie in (0, 1), got {self.opening}")
        if not self.radius > 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")


def cone_contains(cone, y):
    """Membership test; accepts a single point or an (n, d) array."""
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    if y.shape[1] != cone.apex.shape[0]:
        raise ValueError("dimension mismatch between cone and points")
    w = y - cone.apex
    r = np.linalg.norm(w, axis=1)
    inside = (w @ cone.direction >= (1.0 - cone.opening) * r) & (r <= cone.radius)
    return bool(inside[0]) if single else inside


def k_delta(delta):
    """Lipschitz constant ``(1 - delta) / sqrt(delta * (2 - delta))``.

    Strictly decreasing on (0, 1): blows up as the cone closes and
    vanishes as it opens to a half-space.
    """
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return (1.0 - delta) / math.sqrt(delta * (2.0 - delta))


def halfspace_equivalence(x, delta, y):
    """Both forms of the downward-cone test; the pair must always agree.

    With the axis fixed to ``u = (0, ..., 0, -1)``, membership of ``y``
    in the unbounded cone at ``x`` is equivalent to
    ``y_d <= x_d - k(delta) * |y' - x'|`` where the prime drops the last
    coordinate.  Returns (cone_test, halfspace_test).
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    u = np.zeros(len(x))
    u[-1] = -1.0
    cone = Cone(apex=x, direction=u, opening=float(delta))
    in_cone = cone_contains(cone, y)
    in_half = y[-1] <= x[-1] - k_delta(delta) * np.linalg.norm(y[:-1] - x[:-1])
    return bool(in_cone), bool(in_half)


def direction_grid(dim, count):
    """Deterministic unit directions: uniform angles on the circle for
    d = 2, a Halton point set pushed through the Gaussian map for d >= 3."""
    if dim < 1 or count < 1:
        raise ValueError("dim and count must be positive")
    if dim == 1:
        return np.array([[1.0], [-1.0]][: min(count, 2)])
    if dim == 2:
        ang = 2.0 * math.pi * np.arange(count) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    halton = qmc.Halton(d=dim, scramble=False)
    halton.fast_forward(1)  # skip the origin sample
    pts = halton.random(count)
    pts = np.clip(pts, 1e-12, 1.0 - 1e-12)
    g = norm.ppf(pts)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def resolution_scale(measure):
    """Median nearest-neighbor distance of the support."""
    if len(measure) < 2:
        return math.inf
    tree = cKDTree(measure.points)
    d, _ = tree.query(measure.points, k=2)
    return float(np.median(d[:, 1]))


@dataclass
class IsotropyReport:
    failing_mass_fraction: float
    worst_witness: tuple | None  # (apex, direction, delta, eps)
    sampled_atoms: np.ndarray
    atom_failed: np.ndarray
    fail_counts: np.ndarray
    distance_to_boundary: np.ndarray
    resolution: float
    deltas: tuple
    epsilons: tuple
    n_directions: int
    resolution_warning: bool

    def to_dict(self):
        witness = None
        if self.worst_witness is not None:
            x, u, dl, ep = self.worst_witness
            witness = {
                "apex": [float(v) for v in x],
                "direction": [float(v) for v in u],
                "delta": float(dl),
                "eps": float(ep),
            }
        return {
            "failing_mass_fraction": self.failing_mass_fraction,
            "worst_witness": witness,
            "sampled_atoms": self.sampled_atoms.tolist(),
            "atom_failed": self.atom_failed.tolist(),
            "fail_counts": self.fail_counts.tolist(),
            "distance_to_boundary": self.distance_to_boundary.tolist(),
            "resolution": self.resolution,
            "deltas": list(self.deltas),
            "epsilons": list(self.epsilons),
            "n_directions": self.n_directions,
            "resolution_warning": self.resolution_warning,
        }


def isotropy_audit(
    measure,
    directions=16,
    deltas=(0.2, 0.5, 0.8),
    epsilons=None,
    point_sample=500,
    seed=0,
):
    """Probe whether every cone at (sampled) atoms carries other mass.

    ``epsilons`` are absolute radii; by default 10x/30x/100x the
    resolution scale.  Atoms are sampled by mass.  The apex atom itself
    never counts: the question is whether *nearby* mass exists in every
    direction.  Failing mass is reported relative to the sampled mass;
    per-atom failure counts and the distance to the support's bounding
    box are included so boundary effects can be filtered downstream.
    """
    res = resolution_scale(measure)
    if epsilons is None:
        epsilons = tuple(m * res for m in (10.0, 30.0, 100.0))
    epsilons = tuple(float(e) for e in epsilons)
    deltas = tuple(float(d) for d in deltas)
    for d in deltas:
        if not 0.0 < d < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {d}")
    res_warning = any(e < res for e in epsilons) or len(measure) < 2
    if res_warning:
        warnings.warn(
            "isotropy audit has epsilons below the resolution scale "
            f"({res:.3g}); cone positivity is not meaningful there",
            stacklevel=2,
        )

    n = len(measure)
    rng = np.random.default_rng(seed)
    if point_sample >= n:
        sample = np.arange(n)
    else:
        sample = np.sort(
            rng.choice(n, size=point_sample, replace=False, p=measure.weights)
        )
    U = direction_grid(measure.dim, directions)

    pts = measure.points
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    fail_counts = np.zeros(len(sample), dtype=int)
    atom_failed = np.zeros(len(sample), dtype=bool)
    dist_boundary = np.zeros(len(sample))
    worst = None
    eps_arr = np.asarray(epsilons)
    for t, i in enumerate(sample):
        x = pts[i]
        dist_boundary[t] = float(np.minimum(x - lo, hi - x).min())
        w = pts - x
        r = np.linalg.norm(w, axis=1)
        others = r > 0.0
        dots = w @ U.T  # (n, directions)
        for dl in deltas:
            dir_ok = dots >= (1.0 - dl) * r[:, None]
            for ep in eps_arr:
                hit = (dir_ok & others[:, None] & (r <= ep)[:, None]).any(axis=0)
                misses = np.flatnonzero(~hit)
                if misses.size:
                    fail_counts[t] += misses.size
                    atom_failed[t] = True
                    if worst is None:
                        worst = (x.copy(), U[misses[0]].copy(), dl, float(ep))
    sampled_mass = measure.weights[sample].sum()
    failing_mass = measure.weights[sample[atom_failed]].sum()
    return IsotropyReport(
        failing_mass_fraction=float(failing_mass / sampled_mass) if sampled_mass else 1.0,
        worst_witness=worst,
        sampled_atoms=sample,
        atom_failed=atom_failed,
        fail_counts=fail_counts,
        distance_to_boundary=dist_boundary,
        resolution=res,
        deltas=deltas,
        epsilons=epsilons,
        n_directions=len(U),
        resolution_warning=bool(res_warning),
    )
