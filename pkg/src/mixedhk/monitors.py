"""Online and post-hoc verification of the model's quantitative guarantees.

Each monitor turns one proved inequality into a per-step numeric check with
an explicit slack (1e-9 scaled by the quantity's natural magnitude unless a
tighter contract is stated):

* capped-energy descent with its displacement-weighted lower bound,
* diameter contraction on epsilon-trivial profiles and unconditional
  non-expansion,
* the geometric consensus envelope under recurring contraction,
* per-agent movement budgets bounding total displacement,
* the displacement floor on delta-nontrivial components,
* settling times (first time every component is delta-trivial) against their
  closed-form bound, and the equivalence of the three component-interaction
  conditions.

Where a statement is asymptotic, the monitor evaluates a finite-horizon
surrogate and says so; a verdict here is evidence, not proof.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import OpinionState, neighbor_matrix, squared_distances
from .profile import build_profile, detect_merge_events, diameter, hull_distance
from .trajectory import Trajectory

ENERGY_SLACK = 1e-9  # relative to n^2 eps^2
DIAM_SLACK = 1e-12  # absolute, diameters are O(eps) at desk scale


def energy(state: OpinionState) -> float:
    """Capped pairwise energy: sum over ordered pairs of min(dist^2, eps^2)."""
    d2 = squared_distances(state.x)
    return float(np.minimum(d2, state.epsilon * state.epsilon).sum())


def energy_drop_bound(state: OpinionState, next_state: OpinionState, alpha: np.ndarray) -> float:
    """Lower bound on Z(t) - Z(t+1) in terms of per-agent displacements.

    The coefficient of agent i's squared displacement is
    4 * (1 + |N_i| * alpha_i / (1 - alpha_i)) for alpha_i < 1 and plain 4 at
    alpha_i = 1 (where the displacement is identically zero anyway).
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    counts = neighbor_matrix(state).sum(axis=1).astype(np.float64)
    disp_sq = ((next_state.x - state.x) ** 2).sum(axis=1)
    coeff = np.ones(state.n)
    movable = alpha < 1.0
    coeff[movable] += counts[movable] * (alpha[movable] / (1.0 - alpha[movable]))
    return float(4.0 * (coeff * disp_sq).sum())


def contraction_coefficient(alpha: np.ndarray) -> float:
    """Sharp one-step diameter contraction factor on epsilon-trivial profiles.

    Maximum of a_i - (a_i - a_j)/n over ordered pairs of DISTINCT agents with
    a_i >= a_j; equals a(1) - (a(1) - a(2))/n for the two largest entries.
    The distinct-pair choice is pinned by the two-agent half-stubborn
    configuration, where the factor 1/2 is attained exactly.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    n = alpha.shape[0]
    if n < 2:
        raise ValueError("contraction coefficient needs at least two agents")
    top = np.sort(alpha)[::-1]
    a1, a2 = float(top[0]), float(top[1])
    return a1 - (a1 - a2) / n


def component_diameters(state: OpinionState) -> list[float]:
    """Diameter of each connected component of the state's profile."""
    prof = build_profile(state)
    return [diameter(state.x[grp]) for grp in prof.components()]


@dataclass
class ContractionVerdict:
    applicable: bool  # profile was epsilon-trivial, so the sharp factor binds
    contraction_ok: Optional[bool]
    nonexpansion_ok: bool
    coefficient: Optional[float]
    diam_before: float
    diam_after: float


def contraction_check(state: OpinionState, next_state: OpinionState,
                      alpha: np.ndarray) -> ContractionVerdict:
    """Check diam(t+1) <= beta * diam(t) on epsilon-trivial profiles and the
    unconditional non-expansion diam(t+1) <= diam(t)."""
    d_before = diameter(state.x)
    d_after = diameter(next_state.x)
    nonexp = d_after <= d_before + DIAM_SLACK
    if state.n >= 2 and d_before <= state.epsilon:
        coeff = contraction_coefficient(alpha)
        ok = d_after <= coeff * d_before + DIAM_SLACK
        return ContractionVerdict(True, ok, nonexp, coeff, d_before, d_after)
    return ContractionVerdict(False, None, nonexp, None, d_before, d_after)


def components_interact(state: OpinionState, next_state: OpinionState) -> bool:
    """True iff an edge of the next profile joins two different components
    of the current profile."""
    prof_now = build_profile(state)
    prof_next = build_profile(next_state)
    labels = prof_now.component_ids
    return any(labels[i] != labels[j] for i, j in prof_next.edges)


@dataclass
class StepMetrics:
    """Derived quantities for one recorded step t -> t+1."""

    t: int
    energy: float
    energy_next: float
    energy_drop: float
    energy_drop_bound: float
    energy_ok: bool
    contraction_coeff: Optional[float]
    diam_global: float
    diam_per_component: tuple
    displacement_sq: tuple
    epsilon_trivial: bool
    contraction_ok: Optional[bool]
    nonexpansion_ok: bool
    interaction: Optional[bool] = None
    hull_ok: Optional[bool] = None

    def as_record(self) -> dict:
        return {
            "t": self.t,
            "energy": self.energy,
            "energy_next": self.energy_next,
            "energy_drop": self.energy_drop,
            "energy_drop_bound": self.energy_drop_bound,
            "energy_ok": self.energy_ok,
            "contraction_coeff": self.contraction_coeff,
            "diam_global": self.diam_global,
            "diam_per_component": list(self.diam_per_component),
            "displacement_sq": list(self.displacement_sq),
            "epsilon_trivial": self.epsilon_trivial,
            "contraction_ok": self.contraction_ok,
            "nonexpansion_ok": self.nonexpansion_ok,
            "interaction": self.interaction,
            "hull_ok": self.hull_ok,
        }


def _hull_containment_ok(state: OpinionState, next_state: OpinionState,
                         tol: float = 1e-12) -> bool:
    mask = neighbor_matrix(state)
    return all(
        hull_distance(next_state.x[i][None, :], state.x[np.flatnonzero(mask[i])]) <= tol
        for i in range(state.n)
    )


def compute_step_metrics(state: OpinionState, next_state: OpinionState,
                         alpha: np.ndarray, *, interaction: bool = False,
                         hull: bool = False) -> StepMetrics:
    """Evaluate the per-step monitors for one transition."""
    z_now = energy(state)
    z_next = energy(next_state)
    drop = z_now - z_next
    bound = energy_drop_bound(state, next_state, alpha)
    slack = ENERGY_SLACK * state.n**2 * state.epsilon**2
    cv = contraction_check(state, next_state, alpha)
    disp_sq = ((next_state.x - state.x) ** 2).sum(axis=1)
    return StepMetrics(
        t=state.t,
        energy=z_now,
        energy_next=z_next,
        energy_drop=drop,
        energy_drop_bound=bound,
        energy_ok=drop >= bound - slack,
        contraction_coeff=cv.coefficient,
        diam_global=cv.diam_before,
        diam_per_component=tuple(component_diameters(state)),
        displacement_sq=tuple(float(v) for v in disp_sq),
        epsilon_trivial=cv.applicable,
        contraction_ok=cv.contraction_ok,
        nonexpansion_ok=cv.nonexpansion_ok,
        interaction=components_interact(state, next_state) if interaction else None,
        hull_ok=_hull_containment_ok(state, next_state) if hull else None,
    )


def consensus_envelope_check(traj: Trajectory, beta_cap: float) -> dict:
    """Finite-horizon surrogate for consensus under recurring contraction.

    From the first recorded epsilon-trivial state t1, the diameter must stay
    under the running product of contraction coefficients, and under
    beta_cap^k where k counts steps with coefficient <= beta_cap. The
    hypothesis ("infinitely many contracting steps") is reported as the
    within-horizon count; the verdict is labeled a surrogate.
    """
    if not (0.0 < beta_cap < 1.0):
        raise ValueError(f"beta_cap must lie in (0, 1), got {beta_cap}")
    t1 = None
    for t in range(len(traj.states)):
        if diameter(traj.states[t]) <= traj.epsilon:
            t1 = t
            break
    if t1 is None or traj.n < 2:
        return {"applicable": False, "surrogate": True}
    d0 = diameter(traj.states[t1])
    slack = 1e-9 * max(d0, 1.0)
    prod = 1.0
    capped = 0
    envelope_ok = True
    power_ok = True
    for t in range(t1, traj.steps):
        coeff = contraction_coefficient(traj.alphas[t])
        prod *= coeff
        if coeff <= beta_cap:
            capped += 1
        d_next = diameter(traj.states[t + 1])
        if d_next > prod * d0 + slack:
            envelope_ok = False
        if d_next > beta_cap**capped * d0 + slack:
            power_ok = False
    final = diameter(traj.states[-1])
    return {
        "applicable": True,
        "surrogate": True,
        "t_trivial": t1,
        "hypothesis_met": capped > 0,
        "contracting_steps": capped,
        "envelope_ok": envelope_ok,
        "power_envelope_ok": power_ok,
        "final_diameter": final,
    }


@dataclass
class MovementBudget:
    """Per-agent summability data: the movement-bounding terms and their sums."""

    agent: int
    terms: tuple
    partial_sums: tuple
    bound_ok: tuple  # step-wise: movement <= term + slack
    violations: int


def movement_budget_terms(traj: Trajectory, agent: int) -> MovementBudget:
    """Terms (1 - a_i(t)) (1 - 1/|N_i(t)|) max_{j in N_i} dist(i, j), whose
    partial sums bound the agent's total movement; the step-wise inequality
    ||x_i(t) - x_i(t+1)|| <= term is checked with 1e-12 slack."""
    if not (0 <= agent < traj.n):
        raise ValueError(f"agent {agent} out of range for n={traj.n}")
    terms = []
    sums = []
    ok = []
    running = 0.0
    violations = 0
    for t in range(traj.steps):
        state = traj.state_at(t)
        mask = neighbor_matrix(state)[agent]
        idx = np.flatnonzero(mask)
        count = len(idx)
        if count <= 1:
            spread = 0.0
        else:
            diffs = state.x[idx] - state.x[agent]
            spread = float(np.sqrt((diffs * diffs).sum(axis=1).max()))
        a = float(traj.alphas[t][agent])
        term = (1.0 - a) * (1.0 - 1.0 / count) * spread
        movement = float(np.linalg.norm(traj.states[t + 1][agent] - traj.states[t][agent]))
        good = movement <= term + DIAM_SLACK
        if not good:
            violations += 1
        terms.append(term)
        running += term
        sums.append(running)
        ok.append(good)
    return MovementBudget(agent, tuple(terms), tuple(sums), tuple(ok), violations)


@dataclass
class FloorVerdict:
    applicable: bool
    ok: Optional[bool]
    displacement_sq_sum: Optional[float]
    floor: Optional[float]
    reason: str


def displacement_floor_check(state: OpinionState, next_state: OpinionState,
                             alpha: np.ndarray, delta: float) -> FloorVerdict:
    """Check sum_i ||x_i(t) - x_i(t+1)||^2 > 2 delta^2 (1 - max alpha)^2 / n^8.

    Applicable whenever some component of the current profile is
    delta-nontrivial and every stubbornness entry is below one (restricting
    to a delta-nontrivial component reduces to the connected case, and both
    the component size and its maximum stubbornness only tighten the bound).
    Inapplicable steps return an explicit not-applicable verdict.
    """
    if not (delta > 0):
        raise ValueError(f"delta must be positive, got {delta}")
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(alpha >= 1.0):
        return FloorVerdict(False, None, None, None, "some alpha_i = 1")
    diams = component_diameters(state)
    if all(dm <= delta for dm in diams):
        return FloorVerdict(False, None, None, None, "every component delta-trivial")
    n = state.n
    lhs = float(((next_state.x - state.x) ** 2).sum())
    floor = 2.0 * delta**2 * (1.0 - float(alpha.max())) ** 2 / n**8
    return FloorVerdict(True, lhs > floor * (1.0 - 1e-9), lhs, floor, "applicable")


def settling_time(traj: Trajectory, delta: float) -> Optional[int]:
    """First recorded t at which every component's diameter is <= delta."""
    if not (delta > 0):
        raise ValueError(f"delta must be positive, got {delta}")
    for t in range(len(traj.states)):
        if all(dm <= delta for dm in component_diameters(traj.state_at(t))):
            return t
    return None


def settling_bounds(n: int, epsilon: float, delta: float, sup_alpha: float) -> tuple[float, float]:
    """Closed-form bounds: the settling-time bound
    n^10 (eps/delta)^2 / (8 (1 - sup_alpha)^2) and the bound
    n^10 / (2 (1 - sup_alpha)^2) on how many first-interaction times can occur.
    """
    if not (0.0 <= sup_alpha < 1.0):
        raise ValueError(f"bounds need sup_alpha in [0, 1), got {sup_alpha}")
    if not (0.0 < delta <= epsilon):
        raise ValueError(f"bounds need 0 < delta <= epsilon, got delta={delta}, epsilon={epsilon}")
    tau_bound = n**10 / (8.0 * (1.0 - sup_alpha) ** 2) * (epsilon / delta) ** 2
    interaction_bound = n**10 / (2.0 * (1.0 - sup_alpha) ** 2)
    return tau_bound, interaction_bound


def interaction_equivalence(traj: Trajectory, delta: float) -> dict:
    """Check, at each step whose profile has only delta-trivial components,
    that these three conditions agree:

      (1) some component of the next profile is delta-nontrivial;
      (2) distinct components of the current profile interact at the next
          step (an edge of the next profile joins agents from different
          current components);
      (3) some component of the next profile is (epsilon/2)-nontrivial.

    Requires delta <= epsilon/4.
    """
    if not (0.0 < delta <= traj.epsilon / 4.0):
        raise ValueError(f"equivalence needs 0 < delta <= epsilon/4, got {delta}")
    half_eps = traj.epsilon / 2.0
    steps = []
    mismatches = 0
    interaction_steps = []
    for t in range(traj.steps):
        state = traj.state_at(t)
        if not all(dm <= delta for dm in component_diameters(state)):
            continue
        next_state = traj.state_at(t + 1)
        next_diams = component_diameters(next_state)
        c1 = any(dm > delta for dm in next_diams)
        c2 = components_interact(state, next_state)
        c3 = any(dm > half_eps for dm in next_diams)
        equal = c1 == c2 == c3
        if not equal:
            mismatches += 1
        if c2:
            interaction_steps.append(t)
        steps.append({"t": t, "next_nontrivial": c1, "interaction": c2,
                      "half_eps_nontrivial": c3, "equivalent": equal})
    return {"delta": delta, "steps": steps, "mismatches": mismatches,
            "interaction_steps": interaction_steps}


def first_interaction_times(traj: Trajectory, *, m_max: int = 64) -> list[int]:
    """Surrogate for the set of first-interaction times.

    For m = 4, 5, ..., with tau_m the settling time at delta = epsilon/m,
    collect the first t in [tau_m, tau_{m+1}) at which some component is
    (epsilon/m)-nontrivial. Windows truncated at the horizon; evaluation
    stops at the first m whose settling time is not reached.
    """
    horizon = len(traj.states)
    times = set()
    comp_cache = [component_diameters(traj.state_at(t)) for t in range(horizon)]
    taus = {}

    def tau(m: int) -> Optional[int]:
        if m not in taus:
            thr = traj.epsilon / m
            taus[m] = next(
                (t for t in range(horizon) if all(dm <= thr for dm in comp_cache[t])),
                None,
            )
        return taus[m]

    for m in range(4, m_max + 1):
        t_m = tau(m)
        if t_m is None:
            break
        t_next = tau(m + 1)
        right = t_next if t_next is not None else horizon
        thr = traj.epsilon / m
        for t in range(t_m, right):
            if any(dm > thr for dm in comp_cache[t]):
                times.add(t)
                break
    return sorted(times)


def hull_containment_violations(traj: Trajectory, *, tol: float = 1e-12) -> int:
    """Count (step, agent) pairs where the new opinion strays farther than
    ``tol`` from the convex hull of the agent's previous neighbors."""
    bad = 0
    for t in range(traj.steps):
        state = traj.state_at(t)
        mask = neighbor_matrix(state)
        for i in range(traj.n):
            hull_pts = state.x[np.flatnonzero(mask[i])]
            if hull_distance(traj.states[t + 1][i][None, :], hull_pts) > tol:
                bad += 1
    return bad


@dataclass
class ConvergenceVerdict:
    """Summary of the post-hoc checks over one trajectory."""

    tau_delta: Optional[int]
    delta: float
    tau_bound: Optional[float]
    sup_alpha: float
    consensus_reached: bool
    final_diameter: float
    partial_sums: tuple  # per-agent movement-budget totals
    interaction_times: list
    interaction_bound: Optional[float]


def check_trajectory(traj: Trajectory, delta: Optional[float] = None,
                     *, hull: bool = True) -> dict:
    """Recompute every monitor over a stored trajectory.

    Returns a JSON-ready report: per-step records, violation counters (all
    zero on a healthy run), merge events, settling data, and the
    first-interaction surrogate. ``delta`` defaults to epsilon/4.
    """
    if delta is None:
        delta = traj.epsilon / 4.0
    per_step = []
    violations = {"energy_descent": 0, "contraction": 0, "nonexpansion": 0,
                  "movement_bound": 0, "equivalence": 0, "hull": 0,
                  "displacement_floor": 0}
    for t in range(traj.steps):
        m = compute_step_metrics(traj.state_at(t), traj.state_at(t + 1),
                                 traj.alphas[t], interaction=True)
        if not m.energy_ok:
            violations["energy_descent"] += 1
        if m.contraction_ok is False:
            violations["contraction"] += 1
        if not m.nonexpansion_ok:
            violations["nonexpansion"] += 1
        fv = displacement_floor_check(traj.state_at(t), traj.state_at(t + 1),
                                      traj.alphas[t], delta)
        if fv.applicable and not fv.ok:
            violations["displacement_floor"] += 1
        per_step.append(m.as_record())
    budgets = [movement_budget_terms(traj, i) for i in range(traj.n)]
    violations["movement_bound"] = sum(b.violations for b in budgets)
    if hull:
        violations["hull"] = hull_containment_violations(traj)
    if delta <= traj.epsilon / 4.0:
        equiv = interaction_equivalence(traj, delta)
        violations["equivalence"] = equiv["mismatches"]
    else:
        equiv = {"skipped": f"delta={delta} exceeds epsilon/4", "mismatches": 0}
    events = [e.as_record() for e in detect_merge_events(traj.states)] if len(traj.states) >= 2 else []
    tau = settling_time(traj, delta)
    sup_a = traj.sup_alpha()
    tau_bound = interaction_bound = None
    if sup_a < 1.0 and delta <= traj.epsilon:
        tau_bound, interaction_bound = settling_bounds(traj.n, traj.epsilon, delta, sup_a)
    interaction_times = first_interaction_times(traj)
    final_diam = diameter(traj.states[-1])
    summary = ConvergenceVerdict(
        tau_delta=tau,
        delta=delta,
        tau_bound=tau_bound,
        sup_alpha=sup_a,
        consensus_reached=all(dm <= traj.consensus_tol
                              for dm in component_diameters(traj.state_at(len(traj.states) - 1))),
        final_diameter=final_diam,
        partial_sums=tuple(b.partial_sums[-1] if b.partial_sums else 0.0 for b in budgets),
        interaction_times=interaction_times,
        interaction_bound=interaction_bound,
    )
    total = sum(violations.values())
    return {
        "header": traj.header(),
        "delta": delta,
        "violations": violations,
        "total_violations": total,
        "energy_descent_violations": violations["energy_descent"],
        "contraction_violations": violations["contraction"],
        "tau_delta": summary.tau_delta,
        "tau_bound": summary.tau_bound,
        "sup_alpha": summary.sup_alpha,
        "consensus_reached": summary.consensus_reached,
        "final_diameter": summary.final_diameter,
        "partial_sums": list(summary.partial_sums),
        "interaction_times": list(summary.interaction_times),
        "interaction_bound": summary.interaction_bound,
        "merge_events": events,
        "interaction_equivalence": {"mismatches": equiv["mismatches"]},
        "per_step": per_step,
        "ok": total == 0,
    }
