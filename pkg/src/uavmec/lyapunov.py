"""Virtual energy queues and the drift-plus-penalty slot objective.

Each SUAV carries two backlogs, one for compute energy and one for propulsion
energy, each charged against a per-slot budget.  Keeping both queues stable
makes the long-term average energy respect the budget, which is what lets a
per-slot controller honor a long-horizon constraint.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class QueueState:
    """Per-SUAV backlogs (J) plus the budgets they are charged against."""
    q_c: np.ndarray        # compute-energy queue
    q_p: np.ndarray        # propulsion-energy queue
    budget_c: np.ndarray   # per-slot compute budget
    budget_p: np.ndarray   # per-slot propulsion budget


def init_queues(n_suavs: int, budget_c, budget_p) -> QueueState:
    """Empty queues (the slot-1 state) with broadcastable budgets."""
    return QueueState(
        q_c=np.zeros(n_suavs),
        q_p=np.zeros(n_suavs),
        budget_c=np.broadcast_to(np.asarray(budget_c, dtype=float),
                                 (n_suavs,)).copy(),
        budget_p=np.broadcast_to(np.asarray(budget_p, dtype=float),
                                 (n_suavs,)).copy(),
    )


def update_queues(state: QueueState, e_c, e_p) -> QueueState:
    """q' = max(q + E - budget, 0), elementwise per SUAV."""
    e_c = np.asarray(e_c, dtype=float)
    e_p = np.asarray(e_p, dtype=float)
    if np.any(e_c < 0) or np.any(e_p < 0):
        raise ValueError("slot energies must be nonnegative")
    return QueueState(
        q_c=np.maximum(state.q_c + e_c - state.budget_c, 0.0),
        q_p=np.maximum(state.q_p + e_p - state.budget_p, 0.0),
        budget_c=state.budget_c,
        budget_p=state.budget_p,
    )


def dpp_objective(q_c, q_p, e_c, e_p, total_cost: float, v: float,
                  violations=()) -> float:
    """Queue-weighted energy plus V-weighted slot cost.

    ``violations`` is the (possibly empty) list of constraint-check messages
    for the decision being priced; pricing an infeasible decision is a
    caller bug, so any entry raises.
    """
    if violations:
        raise ValueError(f"infeasible decision: {violations[0]}")
    if v <= 0:
        raise ValueError("v must be positive")
    drift = float(np.dot(np.asarray(q_c, dtype=float), e_c)
                  + np.dot(np.asarray(q_p, dtype=float), e_p))
    return drift + v * float(total_cost)


def drift_bound_constant(config) -> float:
    """The constant W bounding the one-slot Lyapunov drift (diagnostic).

    Uses the per-slot worst cases: every task at maximum size executed on one
    SUAV (compute) and a full slot at top speed (propulsion).
    """
    from .compute import propulsion_power

    e_max_c = (config.num_uds * config.suav_energy_per_cycle
               * config.cycles_per_bit_range[1] * config.data_bits_range[1])
    e_max_p = propulsion_power(
        config.suav_max_speed, config.prop_blade, config.prop_induced,
        config.prop_speed4, config.prop_parasite,
        config.prop_tip_speed) * config.slot_duration
    eb_c, eb_p = config.budget_split()
    n = config.num_suavs
    w_c = 0.5 * n * max(eb_c ** 2, (e_max_c - eb_c) ** 2)
    w_p = 0.5 * n * max(eb_p ** 2, (e_max_p - eb_p) ** 2)
    return float(w_c + w_p)
