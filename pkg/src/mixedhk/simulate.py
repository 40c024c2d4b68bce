"""Drive the update rule from a configuration to a full trajectory."""

from __future__ import annotations

import numpy as np

from .dynamics import ModelConfig, OpinionState, step
from .monitors import component_diameters, compute_step_metrics
from .profile import detect_merge_events
from .trajectory import Trajectory


def simulate(config: ModelConfig) -> Trajectory:
    """Run the dynamics for at most ``config.max_steps`` steps.

    Stops early when consecutive states are byte-identical ("steady": an
    exact steady state can fail to exist, so this is a detector, not a
    guarantee) or when every component's diameter falls to ``consensus_tol``
    ("consensus"). The run is a pure function of the config: the asynchronous
    schedule draws from a counter-based stream keyed by (seed, t).
    """
    state = OpinionState(0, config.initial.copy(), config.epsilon)
    states = [state.x]
    alphas: list[np.ndarray] = []
    flags = set(config.monitors)
    metrics = [] if (flags & {"energy", "contraction", "interaction", "hull"}) else None
    stop_reason = "horizon"

    for t in range(config.max_steps):
        alpha = config.schedule.alpha_at(t, config.n, config.seed)
        nxt = step(state, alpha)
        alphas.append(alpha)
        states.append(nxt.x)
        if metrics is not None:
            metrics.append(compute_step_metrics(state, nxt, alpha,
                                                interaction="interaction" in flags,
                                                hull="hull" in flags))
        if nxt.x.tobytes() == state.x.tobytes():
            stop_reason = "steady"
            state = nxt
            break
        state = nxt
        if all(dm <= config.consensus_tol for dm in component_diameters(state)):
            stop_reason = "consensus"
            break

    traj = Trajectory(
        n=config.n,
        d=config.d,
        epsilon=config.epsilon,
        schedule=config.schedule.descriptor(),
        seed=config.seed,
        states=states,
        alphas=alphas,
        stop_reason=stop_reason,
        consensus_tol=config.consensus_tol,
        metrics=metrics,
    )
    if "merge" in config.monitors and len(states) >= 2:
        traj.events = [e.as_record() for e in detect_merge_events(states)]
    return traj
