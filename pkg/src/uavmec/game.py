"""Per-slot task-offloading game and its best-response solver.

Strategies are encoded as integers: LOCAL (-1) or a server index 0..S-1 where
indices 0..N-1 are SUAVs and index N is the LUAV.  Edge utilities are
evaluated under the closed-form optimal shares, which reduces them to

    U_m(s, A) = qw_s * e_c[m] + beta[s,m] * sum_beta + phi[s,m] * sum_phi

with beta/phi the square-root weights of the allocation module and the sums
running over the members of s (m included).  That form is what makes the
ordered-double-sum potential below exact.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .allocation import allocate, uniform_allocation, AllocationResult

LOCAL = -1
DEADLINE_SLACK = 1e-12


@dataclass
class GameContext:
    """Immutable per-slot snapshot consumed by stage 1.

    ``rates`` holds full-band transmission rates, shape (S, M) with the LUAV
    last.  ``queue_weight`` is Q_n^c/V for SUAV rows and 0 for the LUAV.
    """
    n_suavs: int
    data_bits: np.ndarray
    cycles_per_bit: np.ndarray
    deadline: np.ndarray
    ud_compute: np.ndarray
    rates: np.ndarray
    f_max: np.ndarray
    bandwidth: np.ndarray
    queue_weight: np.ndarray
    tx_power: np.ndarray
    gamma_time: float
    gamma_energy: float
    capacitance: float
    energy_per_cycle: float
    allow_local: bool = True
    uniform_shares: bool = False
    tiebreak_rng: np.random.Generator | None = None

    # derived arrays, filled in __post_init__
    beta: np.ndarray = field(init=False, repr=False)
    phi: np.ndarray = field(init=False, repr=False)
    edge_energy: np.ndarray = field(init=False, repr=False)
    local_cost: np.ndarray = field(init=False, repr=False)
    local_exec: np.ndarray = field(init=False, repr=False)
    trans_base: np.ndarray = field(init=False, repr=False)
    exec_base: np.ndarray = field(init=False, repr=False)
    member_cost: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = self.data_bits
        eta = self.cycles_per_bit
        load = self.gamma_time * d + self.gamma_energy * self.tx_power * d
        self.beta = np.sqrt(self.gamma_time * eta * d
                            / self.f_max[:, None])
        self.phi = np.sqrt(load[None, :] / self.rates)
        self.edge_energy = self.energy_per_cycle * eta * d
        self.local_exec = eta * d / self.ud_compute
        self.local_cost = (self.gamma_time * self.local_exec
                           + self.gamma_energy * self.capacitance
                           * self.ud_compute ** 2 * eta * d)
        # per-member building blocks: D/r and eta*D/F
        self.trans_base = d[None, :] / self.rates
        self.exec_base = (eta * d)[None, :] / self.f_max[:, None]
        # uniform-share mode: utility = queue + |M_s| * member_cost
        self.member_cost = (self.gamma_time
                            * (self.trans_base + self.exec_base)
                            + self.gamma_energy
                            * (self.tx_power * d)[None, :] / self.rates)

    @property
    def n_servers(self) -> int:
        return self.n_suavs + 1

    @property
    def n_uds(self) -> int:
        return len(self.data_bits)


def _member_sums(profile: np.ndarray, ctx: GameContext):
    """Per-server sums of beta/phi/count over current members."""
    onehot = profile[None, :] == np.arange(ctx.n_servers)[:, None]
    sum_b = (ctx.beta * onehot).sum(axis=1)
    sum_p = (ctx.phi * onehot).sum(axis=1)
    counts = onehot.sum(axis=1)
    return sum_b, sum_p, counts, onehot


def utility(m: int, strategy: int, profile: np.ndarray,
            ctx: GameContext) -> float:
    """Utility (a cost; lower is better) of UD m playing ``strategy``."""
    if strategy == LOCAL:
        return float(ctx.local_cost[m])
    s = strategy
    mask = profile == s
    mask = mask.copy()
    mask[m] = True
    queue_term = ctx.queue_weight[s] * ctx.edge_energy[m]
    if ctx.uniform_shares:
        return float(queue_term + mask.sum() * ctx.member_cost[s, m])
    sum_b = ctx.beta[s][mask].sum()
    sum_p = ctx.phi[s][mask].sum()
    return float(queue_term + ctx.beta[s, m] * sum_b + ctx.phi[s, m] * sum_p)


def edge_delay_at(m: int, s: int, sum_b: float, sum_p: float, count: int,
                  ctx: GameContext) -> float:
    """Completion delay of m on server s given joined member sums."""
    if ctx.data_bits[m] == 0:
        return 0.0
    if ctx.uniform_shares:
        return float(count * (ctx.trans_base[s, m] + ctx.exec_base[s, m]))
    w_share = ctx.phi[s, m] / sum_p if sum_p > 0 else 1.0 / count
    z_share = ctx.beta[s, m] / sum_b if sum_b > 0 else 1.0 / count
    return float(ctx.trans_base[s, m] / w_share
                 + ctx.exec_base[s, m] / z_share)


@dataclass
class BestResponse:
    best: tuple            # all minimizers, ascending strategy order
    best_utility: float
    candidates: tuple      # feasible strategies (deadline-checked)
    utilities: dict        # strategy -> utility over the candidates
    fallback: bool = False  # no feasible edge and local disallowed


def best_response(m: int, profile: np.ndarray,
                  ctx: GameContext) -> BestResponse:
    """Best strategies for UD m holding everyone else fixed.

    Edge candidates must meet the task deadline under the re-derived shares
    with m as a member; local computing is always a candidate when allowed.
    When nothing is feasible (entire-offloading mode under pressure) every
    edge option becomes a candidate and the result is flagged.
    """
    sum_b, sum_p, counts, onehot = _member_sums(profile, ctx)
    in_s = onehot[:, m]
    joined_b = sum_b + np.where(in_s, 0.0, ctx.beta[:, m])
    joined_p = sum_p + np.where(in_s, 0.0, ctx.phi[:, m])
    joined_n = counts + np.where(in_s, 0, 1)

    utilities: dict[int, float] = {}
    feasible: list[int] = []
    for s in range(ctx.n_servers):
        queue_term = ctx.queue_weight[s] * ctx.edge_energy[m]
        if ctx.uniform_shares:
            u = queue_term + joined_n[s] * ctx.member_cost[s, m]
        else:
            u = queue_term + ctx.beta[s, m] * joined_b[s] \
                + ctx.phi[s, m] * joined_p[s]
        utilities[s] = float(u)
        delay = edge_delay_at(m, s, joined_b[s], joined_p[s], joined_n[s],
                              ctx)
        if delay <= ctx.deadline[m] + DEADLINE_SLACK:
            feasible.append(s)

    candidates = list(feasible)
    fallback = False
    if ctx.allow_local:
        utilities[LOCAL] = float(ctx.local_cost[m])
        candidates = [LOCAL] + candidates
    elif not candidates:
        candidates = list(range(ctx.n_servers))
        fallback = True

    best_u = min(utilities[a] for a in candidates)
    best = tuple(sorted(a for a in candidates if utilities[a] == best_u))
    return BestResponse(best=best, best_utility=best_u,
                        candidates=tuple(candidates),
                        utilities={a: utilities[a] for a in utilities
                                   if a in candidates or a == LOCAL},
                        fallback=fallback)


def potential(profile: np.ndarray, ctx: GameContext) -> float:
    """Exact potential of the offloading game (optimal-share utilities).

    Sum of local costs of local players, plus per-server queue terms and the
    ordered double sums sum_i x_i * sum_{j<=i} x_j of the beta/phi weights,
    with UD index as the order.
    """
    if ctx.uniform_shares:
        raise ValueError("potential is defined for the optimal-share game")
    total = float(ctx.local_cost[profile == LOCAL].sum())
    for s in range(ctx.n_servers):
        idx = np.flatnonzero(profile == s)
        if len(idx) == 0:
            continue
        b = ctx.beta[s, idx]
        p = ctx.phi[s, idx]
        total += ctx.queue_weight[s] * ctx.edge_energy[idx].sum()
        total += float(np.dot(b, np.cumsum(b)) + np.dot(p, np.cumsum(p)))
    return total


@dataclass
class MoveRecord:
    ud: int
    old: int
    new: int
    delta_utility: float
    delta_potential: float | None
    forced: bool


@dataclass
class Stage1Result:
    profile: np.ndarray
    allocation: AllocationResult
    sweeps: int
    moves: list
    converged: bool
    deadline_fallbacks: list  # (ud, server) pairs that had no feasible edge


def run_stage1(ctx: GameContext,
               initial: np.ndarray | None = None) -> Stage1Result:
    """Best-response sweeps from the all-local profile to a fixed point.

    UDs are visited in ascending index order (Gauss-Seidel: every accepted
    move is visible to the next UD).  A UD moves only when a candidate
    strictly improves on its current utility, except when its current choice
    has become deadline-infeasible, in which case the move is forced.  Ties
    among new best strategies are broken with the context RNG.

    For the optimal-share game the potential must strictly decrease at each
    non-forced move (checked; a violation means the utility algebra is
    broken) and sweeps must reach a fixed point within the cap.  The
    uniform-share variant has no such guarantee, so hitting the cap there
    just returns the current profile flagged unconverged.
    """
    m_total = ctx.n_uds
    profile = (np.full(m_total, LOCAL, dtype=int) if initial is None
               else np.asarray(initial, dtype=int).copy())
    moves: list[MoveRecord] = []
    fallbacks: list[tuple[int, int]] = []
    max_sweeps = 10 * m_total + 10
    converged = False
    sweeps = 0
    track_potential = not ctx.uniform_shares

    for _ in range(max_sweeps):
        sweeps += 1
        changed = False
        for m in range(m_total):
            br = best_response(m, profile, ctx)
            cur = int(profile[m])
            if cur in br.best:
                continue
            if len(br.best) == 1:
                target = br.best[0]
            elif ctx.tiebreak_rng is not None:
                target = br.best[int(ctx.tiebreak_rng.integers(len(br.best)))]
            else:
                target = br.best[0]
            forced = cur not in br.candidates
            du = br.best_utility - br.utilities.get(
                cur, utility(m, cur, profile, ctx))
            dphi = None
            if track_potential:
                before = potential(profile, ctx)
                profile[m] = target
                dphi = potential(profile, ctx) - before
                if not forced and not dphi < 0.0:
                    raise RuntimeError(
                        f"potential failed to decrease on move of UD {m} "
                        f"({cur} -> {target}, delta={dphi:.3e})")
            else:
                profile[m] = target
            if br.fallback:
                fallbacks.append((m, target))
            moves.append(MoveRecord(m, cur, target, float(du), dphi, forced))
            changed = True
        if not changed:
            converged = True
            break

    if not converged and not ctx.uniform_shares:
        raise RuntimeError(
            "FIP violation: best-response sweeps exceeded the cap; "
            "the potential-game property should make this unreachable")

    alloc = (uniform_allocation(profile, ctx) if ctx.uniform_shares
             else allocate(profile, ctx))
    return Stage1Result(profile=profile, allocation=alloc, sweeps=sweeps,
                        moves=moves, converged=converged,
                        deadline_fallbacks=fallbacks)


def is_nash(profile: np.ndarray, ctx: GameContext):
    """(True, None) if no UD has a strictly improving feasible deviation.

    Raises when the profile itself is infeasible (some member's deadline is
    already violated), since equilibrium is defined over feasible profiles.
    """
    profile = np.asarray(profile, dtype=int)
    for m in range(ctx.n_uds):
        br = best_response(m, profile, ctx)
        cur = int(profile[m])
        if cur not in br.candidates:
            raise ValueError(
                f"profile infeasible: UD {m} misses its deadline on {cur}")
        if br.best_utility < br.utilities[cur]:
            return False, (m, br.best[0])
    return True, None


@dataclass
class PoaResult:
    poa: float
    bound: float
    optimum_value: float
    worst_nash_value: float
    n_feasible: int
    n_nash: int
    optimum_profile: tuple
    worst_nash_profile: tuple


def _queue_potential_term(profile: np.ndarray, ctx: GameContext) -> float:
    """Sum over SUAVs of qw_s * total member compute energy (the G term
    of the PoA bound 3 - (G(worst) + G(opt)) / U(opt))."""
    total = 0.0
    for s in range(ctx.n_suavs):
        idx = profile == s
        total += ctx.queue_weight[s] * ctx.edge_energy[idx].sum()
    return float(total)


def poa_measure(ctx: GameContext, max_profiles: int = 1_000_000) -> PoaResult:
    """Exhaustive price-of-anarchy measurement on a small instance.

    Enumerates every profile, keeps the feasible ones (all members meet
    deadlines under the implied shares), finds the social optimum of the
    utility sum and every Nash equilibrium, and returns the PoA together
    with its upper bound 3 - (G(worst) + G(opt)) / U(opt).
    """
    strategies = ([LOCAL] if ctx.allow_local else []) \
        + list(range(ctx.n_servers))
    m_total = ctx.n_uds
    n_profiles = len(strategies) ** m_total
    if n_profiles > max_profiles:
        raise ValueError(f"enumeration of {n_profiles} profiles exceeds cap")

    best_value = None
    best_profile = None
    n_feasible = 0
    nash: list[tuple[float, tuple]] = []
    for combo in itertools.product(strategies, repeat=m_total):
        profile = np.array(combo, dtype=int)
        total = 0.0
        feasible = True
        equilibrium = True
        for m in range(m_total):
            br = best_response(m, profile, ctx)
            cur = int(profile[m])
            if cur not in br.candidates:
                feasible = False
                break
            u_cur = br.utilities[cur]
            total += u_cur
            if br.best_utility < u_cur:
                equilibrium = False
        if not feasible:
            continue
        n_feasible += 1
        if best_value is None or total < best_value:
            best_value, best_profile = total, combo
        if equilibrium:
            nash.append((total, combo))

    if best_value is None:
        raise ValueError("no feasible profile exists")
    if best_value <= 0.0:
        raise ValueError("degenerate instance: optimum utility is zero")
    if not nash:
        raise RuntimeError("no Nash equilibrium found (theory violated)")

    worst_value, worst_profile = max(nash, key=lambda t: t[0])
    g_worst = _queue_potential_term(np.array(worst_profile), ctx)
    g_opt = _queue_potential_term(np.array(best_profile), ctx)
    bound = 3.0 - (g_worst + g_opt) / best_value
    return PoaResult(poa=worst_value / best_value, bound=bound,
                     optimum_value=best_value, worst_nash_value=worst_value,
                     n_feasible=n_feasible, n_nash=len(nash),
                     optimum_profile=tuple(best_profile),
                     worst_nash_profile=tuple(worst_profile))
