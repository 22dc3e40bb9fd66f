"""Exact and entropic solvers for the discrete transport problem.

``solve_exact`` runs a primal network simplex on the dense bipartite
transportation polytope.  It returns a vertex plan together with exact
dual potentials (phi, psi), which downstream structure checks need: the
potentials certify optimality through feasibility and complementary
slackness, with a duality gap at rounding level.

Pricing combines a block search (block size ~ sqrt(m*n), blocks visited
cyclically) with Dantzig's rule inside each block; the leaving arc is the
last blocking arc around the pivot cycle, which preserves strong
feasibility and prevents cycling on the (heavily degenerate) uniform
instances.  The tree is kept as parent/size/thread arrays so subtree
reattachment and potential updates stay linear in the subtree size.

``solve_entropic`` is a log-domain Sinkhorn loop with epsilon-scaling for
instances too large for the dense exact solver; its output is rounded
onto the transport polytope so the returned plan has exact marginals.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .costs import cost_matrix
from .measures import DiscreteMeasure

__all__ = [
    "TransportPlan",
    "DualPotentials",
    "Certificate",
    "ExactSolution",
    "EntropicSolution",
    "SolverError",
    "solve_exact",
    "solve_entropic",
    "certify",
    "save_plan",
    "load_plan",
    "save_potentials",
]

MARGINAL_TOL = 1e-9
OPT_TOL_SCALE = 1e-12
MAX_DENSE_ENTRIES = 50_000_000


class SolverError(RuntimeError):
    """Solver failure: oversized instance or exhausted pivot budget."""


@dataclass
class TransportPlan:
    """Sparse coupling between two discrete measures.

    ``entries`` are parallel arrays (src_idx, tgt_idx, mass) indexing the
    atoms of ``source`` and ``target``.  Row/column sums reproduce the
    marginal weights; a basic LP solution carries at most m+n-1 entries.
    """

    source: DiscreteMeasure
    target: DiscreteMeasure
    src_idx: np.ndarray
    tgt_idx: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        self.src_idx = np.asarray(self.src_idx, dtype=np.int64).ravel()
        self.tgt_idx = np.asarray(self.tgt_idx, dtype=np.int64).ravel()
        self.mass = np.asarray(self.mass, dtype=float).ravel()
        if not (len(self.src_idx) == len(self.tgt_idx) == len(self.mass)):
            raise ValueError("entry arrays must have equal length")
        if np.any(self.mass < 0):
            raise ValueError("entry masses must be >= 0")
        if len(self.src_idx) and (
            self.src_idx.min() < 0
            or self.src_idx.max() >= len(self.source)
            or self.tgt_idx.min() < 0
            or self.tgt_idx.max() >= len(self.target)
        ):
            raise ValueError("entry indices out of range")

    @property
    def n_entries(self):
        return len(self.mass)

    def row_marginals(self):
        return np.bincount(self.src_idx, weights=self.mass, minlength=len(self.source))

    def col_marginals(self):
        return np.bincount(self.tgt_idx, weights=self.mass, minlength=len(self.target))

    def displacements(self):
        """Per-entry vectors y_j - x_i."""
        return self.target.points[self.tgt_idx] - self.source.points[self.src_idx]

    def distances(self):
        return np.linalg.norm(self.displacements(), axis=1)

    def transport_cost(self, cost):
        if self.n_entries == 0:
            return 0.0
        return float(np.dot(self.mass, cost.value(self.distances())))

    def validate(self, tol=MARGINAL_TOL, basic=False):
        """Check marginal consistency (and entry count for basic plans)."""
        row_err = np.abs(self.row_marginals() - self.source.weights).max(initial=0.0)
        col_err = np.abs(self.col_marginals() - self.target.weights).max(initial=0.0)
        if row_err > tol or col_err > tol:
            raise ValueError(
                f"plan marginals violate tolerance {tol:g} "
                f"(row {row_err:.3g}, col {col_err:.3g})"
            )
        if basic and self.n_entries > len(self.source) + len(self.target) - 1:
            raise ValueError(
                f"basic plan has {self.n_entries} entries > m+n-1 ="
                f" {len(self.source) + len(self.target) - 1}"
            )
        return self


@dataclass
class DualPotentials:
    """Dual variables: phi on source atoms, psi on target atoms."""

    phi: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float).ravel()
        self.psi = np.asarray(self.psi, dtype=float).ravel()

    def objective(self, mu, nu):
        return float(np.dot(self.phi, mu.weights) + np.dot(self.psi, nu.weights))


@dataclass(frozen=True)
class Certificate:
    feasible_dual: bool
    slack_ok: bool
    gap: float
    max_feasibility_violation: float
    max_slack_residual: float

    @property
    def ok(self):
        return self.feasible_dual and self.slack_ok


class ExactSolution(NamedTuple):
    plan: TransportPlan
    potentials: DualPotentials
    objective: float


class EntropicSolution(NamedTuple):
    plan: TransportPlan
    iterations: int
    converged: bool


def _check_pair(mu, nu):
    if len(mu) == 0 or len(nu) == 0:
        raise ValueError("both measures must be nonempty")
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if abs(mu.total_mass - nu.total_mass) > MARGINAL_TOL * max(1.0, mu.total_mass):
        raise ValueError(
            f"unbalanced problem: masses {mu.total_mass!r} vs {nu.total_mass!r}"
        )


def solve_exact(mu, nu, cost, pivot_budget=None):
    """Solve the transport LP exactly; returns (plan, potentials, objective).

    The duality gap is at rounding level and the potentials satisfy
    feasibility and complementary slackness within ``MARGINAL_TOL``; the
    potentials are normalized so phi vanishes at the first source atom.
    Ties between optimal vertices resolve by pivot order, so which
    optimal plan is returned is not canonical; only the objective is.
    """
    _check_pair(mu, nu)
    m, n = len(mu), len(nu)
    if m * n > MAX_DENSE_ENTRIES:
        raise SolverError(
            f"dense instance with {m}x{n} entries exceeds {MAX_DENSE_ENTRIES:g};"
            " use solve_entropic"
        )
    C = cost_matrix(mu, nu, cost)
    flows_by_node, parc, pi, pivots = _network_simplex(
        mu.weights, nu.weights, C, pivot_budget=pivot_budget
    )
    keep = flows_by_node > 0.0
    arc_ids = parc[keep]
    plan = TransportPlan(
        source=mu,
        target=nu,
        src_idx=arc_ids // n,
        tgt_idx=arc_ids % n,
        mass=flows_by_node[keep],
    ).validate(basic=True)
    potentials = DualPotentials(phi=pi[:m], psi=-pi[m:])
    objective = plan.transport_cost(cost)
    return ExactSolution(plan, potentials, objective)


def _initial_staircase(a, b):
    """Northwest-corner basic feasible solution: m+n-1 tree arcs."""
    m, n = len(a), len(b)
    ra, rb = a.copy(), b.copy()
    arcs = np.empty(m + n - 1, dtype=np.int64)
    flows = np.empty(m + n - 1, dtype=float)
    i = j = 0
    for k in range(m + n - 1):
        arcs[k] = i * n + j
        f = min(ra[i], rb[j])
        f = f if f > 0.0 else 0.0
        flows[k] = f
        ra[i] -= f
        rb[j] -= f
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return arcs, flows


def _network_simplex(a, b, C, pivot_budget=None):
    """Primal network simplex on the dense bipartite transportation LP.

    Node ids: sources 0..m-1, targets m..m+n-1; arc k = i*n + j runs from
    source i to target node m+j.  Returns per-node flows on the arcs to
    parents, the arc ids, node potentials pi (pi[root]=0), and the pivot
    count.  Reduced costs are c_ij - pi[i] + pi[m+j].
    """
    m, n = len(a), len(b)
    num_nodes = m + n
    num_arcs = m * n
    cflat = np.ascontiguousarray(C, dtype=float).ravel()
    opt_tol = OPT_TOL_SCALE * max(cflat.max(), 1e-300)
    if pivot_budget is None:
        pivot_budget = 10 * num_nodes * num_nodes

    i_of = np.repeat(np.arange(m, dtype=np.int64), n)
    jn_of = np.tile(np.arange(m, num_nodes, dtype=np.int64), m)

    # --- initial spanning tree from the staircase basis ---------------
    arcs0, flows0 = _initial_staircase(np.asarray(a, float), np.asarray(b, float))
    adj = [[] for _ in range(num_nodes)]
    for arc, fl in zip(arcs0.tolist(), flows0.tolist()):
        u = arc // n
        v = m + arc % n
        adj[u].append((v, arc, fl))
        adj[v].append((u, arc, fl))

    parent = [-1] * num_nodes
    parc = [0] * num_nodes  # arc id to parent (child-indexed)
    parc_flow = [0.0] * num_nodes
    children = [[] for _ in range(num_nodes)]
    order = []  # BFS/DFS preorder from the root (source 0)
    stack = [0]
    seen = [False] * num_nodes
    seen[0] = True
    while stack:
        u = stack.pop()
        order.append(u)
        for v, arc, fl in adj[u]:
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                parc[v] = arc
                parc_flow[v] = fl
                children[u].append(v)
                stack.append(v)
    if len(order) != num_nodes:
        raise SolverError("initial basis is not spanning (internal error)")

    # DFS preorder thread: next_/prev_ cycle through all nodes, last[v] is
    # the final node of v's subtree, size[v] its subtree size.
    size = [1] * num_nodes
    last = list(range(num_nodes))
    dfs = []
    stack = [(0, False)]
    while stack:
        u, processed = stack.pop()
        if processed:
            for v in children[u]:
                size[u] += size[v]
            last[u] = dfs[-1] if children[u] else u
            continue
        dfs.append(u)
        stack.append((u, True))
        for v in reversed(children[u]):
            stack.append((v, False))
    next_ = [0] * num_nodes
    prev_ = [0] * num_nodes
    for t, v in enumerate(dfs):
        next_[v] = dfs[(t + 1) % num_nodes]
        prev_[v] = dfs[t - 1]

    # node potentials from tree equalities, root pinned at 0
    pi = np.zeros(num_nodes)
    for v in dfs[1:]:
        u = parent[v]
        c = cflat[parc[v]]
        pi[v] = pi[u] - c if v >= m else pi[u] + c

    # --- pricing -------------------------------------------------------
    block = int(math.ceil(math.sqrt(num_arcs)))
    n_blocks = (num_arcs + block - 1) // block
    f_ptr = 0

    def find_entering():
        nonlocal f_ptr
        misses = 0
        while misses < n_blocks:
            lo = f_ptr
            hi = min(lo + block, num_arcs)
            f_ptr = hi % num_arcs
            rc = cflat[lo:hi] - pi[i_of[lo:hi]] + pi[jn_of[lo:hi]]
            t = int(np.argmin(rc))
            if rc[t] < -opt_tol:
                return lo + t
            misses += 1
        return -1

    # --- tree surgery (child-indexed arcs move with their child) -------
    def trace_path(v, w):
        nodes = [v]
        arcs = []
        while v != w:
            arcs.append(v)
            v = parent[v]
            nodes.append(v)
        return nodes, arcs

    def find_apex(p, q):
        sp, sq = size[p], size[q]
        while True:
            while sp < sq:
                p = parent[p]
                sp = size[p]
            while sp > sq:
                q = parent[q]
                sq = size[q]
            if sp == sq:
                if p != q:
                    p = parent[p]
                    sp = size[p]
                    q = parent[q]
                    sq = size[q]
                else:
                    return p

    def subtree(v):
        yield v
        stop = last[v]
        while v != stop:
            v = next_[v]
            yield v

    def remove_edge(s, t):
        # detach subtree rooted at t (parent[t] == s)
        size_t = size[t]
        prev_t = prev_[t]
        last_t = last[t]
        next_last_t = next_[last_t]
        parent[t] = -1
        next_[prev_t] = next_last_t
        prev_[next_last_t] = prev_t
        next_[last_t] = t
        prev_[t] = last_t
        while s != -1:
            size[s] -= size_t
            if last[s] == last_t:
                last[s] = prev_t
            s = parent[s]

    def make_root(q):
        ancestors = []
        v = q
        while v != -1:
            ancestors.append(v)
            v = parent[v]
        ancestors.reverse()
        for p, w in zip(ancestors, ancestors[1:]):
            size_p = size[p]
            last_p = last[p]
            prev_w = prev_[w]
            last_w = last[w]
            next_last_w = next_[last_w]
            parent[p] = w
            parent[w] = -1
            parc[p] = parc[w]
            parc_flow[p] = parc_flow[w]
            size[p] = size_p - size[w]
            size[w] = size_p
            next_[prev_w] = next_last_w
            prev_[next_last_w] = prev_w
            next_[last_w] = w
            prev_[w] = last_w
            if last_p == last_w:
                last[p] = prev_w
                last_p = prev_w
            prev_[p] = last_w
            next_[last_w] = p
            next_[last_p] = w
            prev_[w] = last_p
            last[w] = last_p

    def add_edge(arc, p, q, flow):
        # attach the tree rooted at q under p via the given arc
        last_p = last[p]
        next_last_p = next_[last_p]
        size_q = size[q]
        last_q = last[q]
        parent[q] = p
        parc[q] = arc
        parc_flow[q] = flow
        next_[last_p] = q
        prev_[q] = last_p
        prev_[next_last_p] = last_q
        next_[last_q] = next_last_p
        while p != -1:
            size[p] += size_q
            if last[p] == last_p:
                last[p] = last_q
            p = parent[p]

    # --- pivot loop ------------------------------------------------------
    pivots = 0
    while True:
        arc = find_entering()
        if arc < 0:
            break
        pivots += 1
        if pivots > pivot_budget:
            raise SolverError(
                f"pivot budget {pivot_budget} exhausted (numeric degeneracy?)"
            )
        p_ent = arc // n
        q_ent = m + arc % n
        c_ent = cflat[arc]

        apex = find_apex(p_ent, q_ent)
        wn, we = trace_path(p_ent, apex)
        wn.reverse()
        we.reverse()
        we.append(-1)  # entering arc sentinel
        wn_r, we_r = trace_path(q_ent, apex)
        del wn_r[-1]
        wn += wn_r
        we += we_r

        # signs: +1 where travel direction (from wn[k]) matches the arc's
        # source->target orientation, -1 otherwise; flow moves by +/- theta
        signs = []
        for key, from_node in zip(we, wn):
            if key == -1:
                signs.append(1)
            else:
                src_node = key if key < m else parent[key]
                signs.append(1 if from_node == src_node else -1)

        theta = math.inf
        leave_pos = -1
        for pos in range(len(we) - 1, -1, -1):
            if signs[pos] < 0:
                fl = parc_flow[we[pos]]
                if fl < theta:
                    theta = fl
                    leave_pos = pos
        if leave_pos < 0:
            raise SolverError("no leaving arc found (internal error)")
        if theta > 0.0:
            for key, sg in zip(we, signs):
                if key != -1:
                    parc_flow[key] += sg * theta

        t_leave = we[leave_pos]  # child endpoint of the leaving arc
        s_leave = parent[t_leave]
        pos_enter = len(wn) - 1 - len(wn_r)  # index of the entering arc in we
        p_att, q_att = p_ent, q_ent
        if pos_enter > leave_pos:
            p_att, q_att = q_ent, p_ent

        remove_edge(s_leave, t_leave)
        make_root(q_att)
        add_edge(arc, p_att, q_att, theta)
        d = pi[p_att] - c_ent - pi[q_att] if q_att >= m else pi[p_att] + c_ent - pi[q_att]
        if d != 0.0:
            for w in subtree(q_att):
                pi[w] += d

    return (
        np.array([parc_flow[v] for v in range(1, num_nodes)]),
        np.array([parc[v] for v in range(1, num_nodes)], dtype=np.int64),
        pi,
        pivots,
    )


def certify(plan, potentials, cost, tol=MARGINAL_TOL):
    """Optimality certificate for a (plan, potentials) pair.

    ``feasible_dual`` checks phi_i + psi_j <= c_ij everywhere;
    ``slack_ok`` checks equality on the plan's support; ``gap`` is the
    primal minus dual objective.
    """
    mu, nu = plan.source, plan.target
    phi, psi = potentials.phi, potentials.psi
    if phi.shape != (len(mu),) or psi.shape != (len(nu),):
        raise ValueError("potential shapes do not match the plan's measures")
    C = cost_matrix(mu, nu, cost)
    viol = (phi[:, None] + psi[None, :]) - C
    max_viol = float(viol.max())
    if plan.n_entries:
        slack = np.abs(
            phi[plan.src_idx] + psi[plan.tgt_idx] - C[plan.src_idx, plan.tgt_idx]
        )
        max_slack = float(slack.max())
    else:
        max_slack = 0.0
    primal = plan.transport_cost(cost)
    dual = potentials.objective(mu, nu)
    return Certificate(
        feasible_dual=max_viol <= tol,
        slack_ok=max_slack <= tol,
        gap=float(primal - dual),
        max_feasibility_violation=max_viol,
        max_slack_residual=max_slack,
    )


def _logsumexp(M, axis):
    mx = M.max(axis=axis, keepdims=True)
    out = np.log(np.exp(M - mx).sum(axis=axis)) + mx.squeeze(axis)
    return out


def _round_to_polytope(P, a, b):
    """Altschuler-style rounding of a positive matrix onto Pi(a, b)."""
    r = P.sum(axis=1)
    P = P * np.minimum(1.0, a / np.where(r > 0, r, 1.0))[:, None]
    c = P.sum(axis=0)
    P = P * np.minimum(1.0, b / np.where(c > 0, c, 1.0))[None, :]
    da = np.maximum(a - P.sum(axis=1), 0.0)
    db = np.maximum(b - P.sum(axis=0), 0.0)
    s = db.sum()
    if s > 0:
        P = P + np.outer(da, db) / s
    return P


def solve_entropic(mu, nu, cost, epsilon, max_iter=10_000, marginal_tol=1e-6):
    """Log-domain Sinkhorn with epsilon-scaling; returns a rounded plan.

    The regularization is annealed by halving from the mean cost down to
    ``epsilon``.  The returned plan has exact marginals (it is rounded onto
    the transport polytope); ``converged`` reports whether the fixed-point
    iteration reached ``marginal_tol`` in total variation before rounding.
    """
    _check_pair(mu, nu)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    C = cost_matrix(mu, nu, cost)
    a, b = mu.weights, nu.weights
    loga, logb = np.log(a), np.log(b)
    f = np.zeros(len(a))
    g = np.zeros(len(b))

    eps_ladder = []
    e = max(float(C.mean()), epsilon)
    while e > epsilon * 1.0000001:
        eps_ladder.append(e)
        e /= 2.0
    eps_ladder.append(epsilon)

    iterations = 0
    converged = False
    for level, eps in enumerate(eps_ladder):
        final = level == len(eps_ladder) - 1
        target = marginal_tol if final else 1e-3
        check_every = 10 if final else 2
        while iterations < max_iter:
            f = eps * loga - eps * _logsumexp((g[None, :] - C) / eps, axis=1)
            g = eps * logb - eps * _logsumexp((f[:, None] - C) / eps, axis=0)
            iterations += 1
            if iterations % check_every:
                continue
            # row error after the g-update measures the fixed-point residual
            row = np.exp(f / eps + _logsumexp((g[None, :] - C) / eps, axis=1))
            err = float(np.abs(row - a).sum())
            if err <= target:
                converged = final
                break
        if iterations >= max_iter:
            break

    eps = eps_ladder[-1]
    P = np.exp((f[:, None] + g[None, :] - C) / eps)
    P = _round_to_polytope(P, a, b)
    ii, jj = np.nonzero(P)
    plan = TransportPlan(
        source=mu, target=nu, src_idx=ii, tgt_idx=jj, mass=P[ii, jj]
    ).validate()
    return EntropicSolution(plan, iterations, converged)


def save_plan(plan, basepath, objective=None, gap=None, stats=None):
    """Write ``basepath.csv`` (i, j, mass rows) and ``basepath.json`` header.

    The JSON header embeds both measures so the plan file round-trips on
    its own.  Returns the two paths.
    """
    basepath = Path(basepath)
    csv_path = basepath.with_suffix(".csv")
    json_path = basepath.with_suffix(".json")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "mass"])
        for i, j, w in zip(plan.src_idx, plan.tgt_idx, plan.mass):
            writer.writerow([int(i), int(j), repr(float(w))])
    header = {
        "format": "transport-plan",
        "entries_csv": csv_path.name,
        "objective": objective,
        "gap": gap,
        "stats": stats or {},
        "mu": _measure_dict(plan.source),
        "nu": _measure_dict(plan.target),
    }
    with open(json_path, "w") as fh:
        json.dump(header, fh)
    return csv_path, json_path


def load_plan(json_path):
    """Read a plan written by :func:`save_plan`; returns (plan, header)."""
    json_path = Path(json_path)
    with open(json_path) as fh:
        header = json.load(fh)
    if header.get("format") != "transport-plan":
        raise ValueError(f"{json_path}: not a transport-plan header")
    mu = _measure_from_dict(header["mu"])
    nu = _measure_from_dict(header["nu"])
    csv_path = json_path.parent / header["entries_csv"]
    ii, jj, ww = [], [], []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        head = next(reader, None)
        if head != ["i", "j", "mass"]:
            raise ValueError(f"{csv_path}: expected header i,j,mass")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ii.append(int(row[0]))
                jj.append(int(row[1]))
                ww.append(float(row[2]))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{csv_path}: line {lineno}: {exc}") from exc
    plan = TransportPlan(source=mu, target=nu, src_idx=ii, tgt_idx=jj, mass=ww)
    return plan, header


def save_potentials(potentials, basepath):
    """Write phi/psi as (index, value) CSV files; returns the two paths."""
    basepath = Path(basepath)
    paths = []
    for name, vec in (("phi", potentials.phi), ("psi", potentials.psi)):
        path = basepath.parent / f"{basepath.name}_{name}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "value"])
            for k, v in enumerate(vec):
                writer.writerow([k, repr(float(v))])
        paths.append(path)
    return tuple(paths)


def _measure_dict(measure):
    return {
        "dim": measure.dim,
        "points": [[float(v) for v in row] for row in measure.points],
        "weights": [float(w) for w in measure.weights],
    }


def _measure_from_dict(doc):
    return DiscreteMeasure(
        np.asarray(doc["points"], dtype=float),
        np.asarray(doc["weights"], dtype=float),
        dim=int(doc["dim"]),
    )
