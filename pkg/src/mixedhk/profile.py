"""Opinion profile graphs and the geometry behind their predicates.

The profile at time t is the undirected graph on agents with an edge wherever
two opinions are within epsilon of each other. This module builds profiles,
computes convex-hull diameters and distances, decides delta-triviality and
delta-equilibrium, and detects merge events along a trajectory.

Edges are computed here directly from the squared-distance rule rather than
through the dynamics module's neighborhoods; the two routes are cross-checked
by tests (consistency is an invariant, not an accident of shared code).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import OpinionState, squared_distances
from .errors import NumericalFailure


@dataclass(frozen=True)
class Profile:
    """Undirected epsilon-proximity graph on n agents at time t."""

    t: int
    n: int
    edges: frozenset  # frozenset of (i, j) tuples with i < j
    component_ids: tuple  # component label per agent, labels are 0..m-1 by first member

    @classmethod
    def from_edges(cls, n: int, edges, t: int = 0) -> "Profile":
        """Build a profile directly from an edge list (for graph-level checks)."""
        norm = set()
        for i, j in edges:
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"bad edge ({i}, {j}) for n={n}")
            norm.add((min(i, j), max(i, j)))
        return cls(t, n, frozenset(norm), tuple(_components(n, norm)))

    @property
    def num_components(self) -> int:
        return 1 + max(self.component_ids) if self.n else 0

    def components(self) -> list[list[int]]:
        """Agent indices grouped by component, ordered by label."""
        groups = [[] for _ in range(self.num_components)]
        for i, c in enumerate(self.component_ids):
            groups[c].append(i)
        return groups

    def degree(self, i: int) -> int:
        return sum(1 for e in self.edges if i in e)

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n))
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = 1.0
        return adj

    def is_connected(self) -> bool:
        return self.num_components == 1


def _components(n: int, edges) -> list[int]:
    # union-find, labels renumbered by first occurrence
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    labels = {}
    out = []
    for i in range(n):
        r = find(i)
        if r not in labels:
            labels[r] = len(labels)
        out.append(labels[r])
    return out


def build_profile(state: OpinionState) -> Profile:
    """Profile of a state: edges exactly where the epsilon rule holds."""
    d2 = squared_distances(state.x)
    eps2 = state.epsilon * state.epsilon
    edges = set()
    n = state.n
    for i in range(n):
        for j in range(i + 1, n):
            if d2[i, j] <= eps2:
                edges.add((i, j))
    return Profile(state.t, n, frozenset(edges), tuple(_components(n, edges)))


def diameter(points: np.ndarray) -> float:
    """Maximum pairwise Euclidean distance of a point set.

    This equals the diameter of the convex hull: any two hull points are
    zero-sum combinations of the vertices, so their distance is bounded by
    the largest vertex-pair distance.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise ValueError("diameter of an empty point set is undefined")
    if pts.shape[0] == 1:
        return 0.0
    d2 = squared_distances(pts)
    return float(np.sqrt(d2.max()))


def is_delta_trivial(points: np.ndarray, delta: float) -> bool:
    """True iff all points are pairwise within delta (hull diameter <= delta)."""
    if not (delta > 0):
        raise ValueError(f"delta must be positive, got {delta}")
    return diameter(points) <= delta


def _affine_minimizer(Vs: np.ndarray) -> np.ndarray:
    """Weights mu (summing to 1, sign-free) minimizing ||mu @ Vs||."""
    m = Vs.shape[0]
    A = np.empty((m + 1, m + 1))
    A[:m, :m] = Vs @ Vs.T
    A[:m, m] = 1.0
    A[m, :m] = 1.0
    A[m, m] = 0.0
    b = np.zeros(m + 1)
    b[m] = 1.0
    try:
        sol = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(A, b, rcond=None)[0]
    return sol[:m]


def hull_distance(P: np.ndarray, Q: np.ndarray, *, atol: float = 1e-9, max_iter: int = 1000) -> float:
    """Euclidean distance between the convex hulls of two point sets.

    Minimizes ||sum_i lam_i p_i - sum_j mu_j q_j|| over the two weight
    simplices, cast as the min-norm point of the pairwise difference set and
    solved with Wolfe's corral algorithm (iterative conditional-gradient
    vertex selection plus exact affine minimization over the active set),
    which terminates at machine precision on desk-scale inputs; ``atol`` is
    the accepted distance tolerance if termination is only approximate.
    Returns 0.0 when the hulls intersect. Raises NumericalFailure carrying
    the best value and a gap bound if the duality gap never closes.
    """
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    if P.shape[0] == 0 or Q.shape[0] == 0:
        raise ValueError("hull_distance needs two nonempty point sets")
    if P.shape[1] != Q.shape[1]:
        raise ValueError(f"dimension mismatch: {P.shape[1]} vs {Q.shape[1]}")
    # vertices of the difference set {p - q}
    V = (P[:, None, :] - Q[None, :, :]).reshape(-1, P.shape[1])
    norms2 = np.einsum("ij,ij->i", V, V)
    scale2 = float(norms2.max())
    scale = float(np.sqrt(scale2))
    zero_tol = 1e-12 * (1.0 + scale)
    gap_tol = 1e-14 * max(scale2, 1e-300)

    corral = [int(np.argmin(norms2))]
    lam = np.array([1.0])
    x = V[corral[0]].copy()
    gap = float("inf")

    for _ in range(max_iter):
        nrm = float(np.linalg.norm(x))
        if nrm <= zero_tol:
            return 0.0
        dots = V @ x
        s = int(np.argmin(dots))
        gap = float(x @ x - dots[s])
        if gap <= gap_tol:
            return nrm
        if s in corral:
            # the corral cannot improve further; accept within contract
            if gap <= atol * (nrm + atol):
                return nrm
            break
        corral.append(s)
        lam = np.append(lam, 0.0)
        # minor loop: pull the corral back to a feasible affine minimizer
        while True:
            Vs = V[corral]
            mu = _affine_minimizer(Vs)
            if np.all(mu > 1e-12):
                lam = mu
                x = mu @ Vs
                break
            neg = np.flatnonzero(mu <= 1e-12)
            thetas = lam[neg] / (lam[neg] - mu[neg])
            pick = int(np.argmin(thetas))
            theta = min(1.0, max(0.0, float(thetas[pick])))
            lam = theta * mu + (1.0 - theta) * lam
            drop = int(neg[pick])
            keep = np.ones(len(corral), dtype=bool)
            keep[drop] = False
            keep &= ~(lam <= 1e-14)
            if not keep.any():
                keep[int(np.argmax(lam))] = True
            corral = [corral[i] for i in range(len(corral)) if keep[i]]
            lam = lam[keep]
            lam = lam / lam.sum()
            x = lam @ V[corral]
            if len(corral) == 1:
                break
    nrm = float(np.linalg.norm(x))
    if nrm <= zero_tol:
        return 0.0
    gap = float(x @ x - (V @ x).min())  # fresh bound for the final verdict
    if gap <= atol * (nrm + atol):
        return nrm
    raise NumericalFailure(
        f"hull_distance did not converge in {max_iter} iterations "
        f"(best {nrm}, gap bound {gap})",
        best=nrm,
        gap=gap,
    )


@dataclass
class EquilibriumVerdict:
    """Outcome of a delta-equilibrium check at one state.

    ``partition`` holds the canonical candidate groups (agent indices).
    ``witness`` explains a negative verdict: the group whose diameter exceeds
    delta, with its diameter.
    """

    exists: bool
    partition: Optional[list]
    witness: Optional[dict]


# Relative guard band around epsilon for the strict hull-separation test:
# values within the band count as NOT exceeding epsilon, so a pair at
# distance exactly epsilon robustly fails the separation requirement.
SEPARATION_GUARD = 1e-9


def check_delta_equilibrium(state: OpinionState, delta: float) -> EquilibriumVerdict:
    """Decide whether the state is a delta-equilibrium.

    A delta-equilibrium is a partition of the opinions into groups whose
    convex hulls are pairwise more than epsilon apart and whose diameters are
    at most delta. Only one candidate partition needs testing: connected
    components of the profile, merged transitively while any two groups'
    hulls are within epsilon. Every epsilon-connected pair must share a group
    and hulls within epsilon force a merge in any valid partition, so each
    candidate group lies inside a single group of any valid partition; since
    coarsening cannot shrink a diameter, the candidate succeeds iff any
    partition does. The one-group partition is allowed (pairwise conditions
    are then vacuous).
    """
    if not (delta > 0):
        raise ValueError(f"delta must be positive, got {delta}")
    profile = build_profile(state)
    groups = [list(g) for g in profile.components()]
    eps_cut = state.epsilon * (1.0 + SEPARATION_GUARD)

    merged = True
    while merged and len(groups) > 1:
        merged = False
        for gi in range(len(groups)):
            for gj in range(gi + 1, len(groups)):
                dist = hull_distance(state.x[groups[gi]], state.x[groups[gj]])
                if dist <= eps_cut:
                    groups[gi] = sorted(groups[gi] + groups[gj])
                    del groups[gj]
                    merged = True
                    break
            if merged:
                break

    for g in groups:
        diam = diameter(state.x[g])
        if diam > delta:
            return EquilibriumVerdict(False, [sorted(g) for g in groups],
                                      {"group": sorted(g), "diameter": diam, "delta": delta})
    return EquilibriumVerdict(True, [sorted(g) for g in groups], None)


def opinions_equal(a: np.ndarray, b: np.ndarray, rel: float = 1e-14) -> bool:
    """Merge-detection equality: bitwise fast path, then a relative hair of slack.

    Identical arithmetic paths merge bitwise; the tolerance covers rounding
    drift when two agents converge through different intermediate values.
    """
    if a.tobytes() == b.tobytes():
        return True
    scale = max(float(np.abs(a).max()), float(np.abs(b).max()))
    return float(np.abs(a - b).max()) <= rel * scale


@dataclass(frozen=True)
class MergeEvent:
    t: int
    i: int
    j: int
    departed_later: bool

    def as_record(self) -> dict:
        return {"type": "merge", "t": self.t, "i": self.i, "j": self.j,
                "departed": self.departed_later}


def detect_merge_events(states: list) -> list[MergeEvent]:
    """Find every (t, i, j) where two distinct opinions coincide at t.

    ``states`` is a trajectory's list of (n, d) opinion arrays. A pair merges
    at t if it is equal at t (see opinions_equal) and unequal at t-1; the
    event is flagged if the pair separates again at any later recorded time.
    """
    if len(states) < 2:
        raise ValueError("merge detection needs a trajectory of length >= 2")
    n = states[0].shape[0]
    events = []
    for t in range(1, len(states)):
        x_prev, x_now = states[t - 1], states[t]
        for i in range(n):
            for j in range(i + 1, n):
                if opinions_equal(x_now[i], x_now[j]) and not opinions_equal(x_prev[i], x_prev[j]):
                    departed = any(
                        not opinions_equal(states[s][i], states[s][j])
                        for s in range(t + 1, len(states))
                    )
                    events.append(MergeEvent(t, i, j, departed))
    return events
