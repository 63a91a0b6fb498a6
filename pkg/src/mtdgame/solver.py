"""Exact solver for the cost-aware Bayesian Stackelberg switching game.

The defender commits to a mixed strategy x over configurations; each
attacker type then plays the single arsenal action maximizing its own
expected reward, with ties broken in the defender's favor (strong
Stackelberg).  The defender objective is

    sum_t P_t * E[defender reward under type t's best response]
        - alpha * sum_ij K_ij x_i x_j

where the second term is the expected switching cost of re-randomizing
between deployments.  With each type's action fixed, the feasible x
region is a polytope (the chosen action must dominate every alternative
in expected attacker reward) and the objective is linear minus a small
bilinear form, so each subproblem is solved exactly by enumerating
stationary points on every face of the region polytope.  A depth-first
branch-and-bound over per-type action choices yields the global optimum;
the all-zero defender rewards of NO-OP make 0 a valid bound for
undecided types.

The reported w matrix is the exact outer product x xT: it satisfies
0 <= w_ij <= min(x_i, x_j), unit total, and row/column sums equal to x,
and it makes the reported cost term identical to the exact expected
switching cost (the transportation-polytope lower bound is exposed
separately through evaluate_strategy's transport_min mode).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .game import NO_OP, GameSpec
from .lp import LpStatus, lp_maximize

STRATEGY_SUM_TOL = 1e-8
REGION_FEAS_TOL = 1e-8
TIE_TOL = 1e-9
PRUNE_TOL = 1e-12


@dataclass(frozen=True)
class BestResponse:
    """One attacker type's pure best response to a defender strategy."""

    type_name: str
    action_id: str
    action_index: int
    value: float
    defender_term: float


@dataclass(frozen=True)
class SolveResult:
    strategy: np.ndarray
    responses: tuple[BestResponse, ...]
    w_matrix: np.ndarray
    objective: float
    defender_reward_term: float
    mccormick_cost_term: float
    exact_cost_term: float
    alpha: float
    nodes_explored: int


@dataclass(frozen=True)
class StrategyEvaluation:
    strategy: np.ndarray
    responses: tuple[BestResponse, ...]
    defender_term: float
    cost_term: float
    objective: float
    w_matrix: np.ndarray
    w_mode: str
    alpha: float


def uniform_strategy(game: GameSpec) -> np.ndarray:
    """The uniform random switching strategy, p_c = 1/|C|."""
    n = game.n_configs
    return np.full(n, 1.0 / n)


def validate_strategy(game: GameSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (game.n_configs,):
        raise ValueError(f"strategy must have {game.n_configs} components")
    if np.any(x < -1e-9) or np.any(x > 1.0 + 1e-9):
        raise ValueError("strategy components must lie in [0, 1]")
    if abs(x.sum() - 1.0) > STRATEGY_SUM_TOL:
        raise ValueError(f"strategy components must sum to 1, got {x.sum()!r}")
    return x


def best_response(game: GameSpec, type_index: int, x) -> BestResponse:
    """Argmax over the type's arsenal of expected attacker reward.

    Ties are broken by maximal expected defender reward, then by lowest
    arsenal position (NO-OP sits last).
    """
    x = validate_strategy(game, x)
    t = game.types[type_index]
    attacker_values = game.rewards.attacker[type_index] @ x
    defender_values = game.rewards.defender[type_index] @ x
    v_max = attacker_values.max()
    tied = attacker_values >= v_max - TIE_TOL
    d_max = defender_values[tied].max()
    tied &= defender_values >= d_max - TIE_TOL
    idx = int(np.flatnonzero(tied)[0])
    return BestResponse(
        type_name=t.name,
        action_id=t.arsenal[idx],
        action_index=idx,
        value=float(attacker_values[idx]),
        defender_term=float(defender_values[idx]),
    )


def exact_switching_cost(game: GameSpec, x) -> float:
    """Expected switching cost sum_ij K_ij x_i x_j."""
    x = np.asarray(x, dtype=float)
    return float(x @ game.switch_cost @ x)


def transport_min_cost(game: GameSpec, x) -> tuple[float, np.ndarray]:
    """Minimum of sum K_ij w_ij over the transportation polytope at x.

    The polytope (nonnegative w with row and column sums x) is exactly
    the feasible set the w constraints carve out; the product matrix
    x xT is always feasible, so this is a lower bound on the exact cost.
    """
    x = validate_strategy(game, x)
    n = game.n_configs
    k_flat = game.switch_cost.reshape(-1)
    a_eq = np.zeros((2 * n, n * n))
    for i in range(n):
        a_eq[i, i * n : (i + 1) * n] = 1.0  # row sums
        a_eq[n + i, i::n] = 1.0  # column sums
    b_eq = np.concatenate([x, x])
    solution = lp_maximize(-k_flat, a_eq=a_eq, b_eq=b_eq, bounds=(0, None))
    if solution.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"transport cost LP came back {solution.status}")
    w = solution.x.reshape(n, n)
    return float(-solution.value), w


def evaluate_strategy(game: GameSpec, x, w_mode: str = "exact") -> StrategyEvaluation:
    """Objective decomposition for a fixed strategy with best responses.

    w_mode 'exact' prices switching at sum K_ij x_i x_j; 'transport_min'
    at the transportation-polytope minimum (never larger).
    """
    x = validate_strategy(game, x)
    if w_mode not in ("exact", "transport_min"):
        raise ValueError(f"unknown w_mode {w_mode!r}")
    responses = tuple(best_response(game, ti, x) for ti in range(len(game.types)))
    defender_term = float(
        sum(t.probability * r.defender_term for t, r in zip(game.types, responses))
    )
    if w_mode == "exact":
        cost = exact_switching_cost(game, x)
        w = np.outer(x, x)
    else:
        cost, w = transport_min_cost(game, x)
    return StrategyEvaluation(
        strategy=x,
        responses=responses,
        defender_term=defender_term,
        cost_term=cost,
        objective=defender_term - game.alpha * cost,
        w_matrix=w,
        w_mode=w_mode,
        alpha=game.alpha,
    )


# ---------------------------------------------------------------------------
# Exact region subproblem: maximize c.x - alpha * x'Kx over a polytope slice
# of the simplex.
# ---------------------------------------------------------------------------


def _region_maximize(
    c: np.ndarray,
    g_rows: np.ndarray,
    h: np.ndarray,
    k_sym: np.ndarray,
    alpha: float,
) -> tuple[float, np.ndarray] | None:
    """Global max of c.x - alpha*x'Kx over {x in simplex, Gx <= h}.

    Returns (value, x) or None when the region is empty.  The maximum is
    found by enumerating, for every face of the polytope (every active
    constraint subset up to full dimension), the stationary points of
    the objective restricted to that face, plus all vertices; candidate
    systems are solved with batched SVD pseudo-inverses so rank-deficient
    faces degrade gracefully.
    """
    n = c.shape[0]
    if n == 1:
        x = np.ones(1)
        if g_rows.size and np.any(g_rows @ x > h + REGION_FEAS_TOL):
            return None
        return float(c[0]), x

    d = n - 1
    # Reduced coordinates: x = (t_1..t_d, 1 - sum t), eliminating the simplex
    # equality.
    basis = np.vstack([np.eye(d), -np.ones((1, d))])
    x_last = np.zeros(n)
    x_last[-1] = 1.0

    blocks = [
        np.hstack([-np.eye(d), np.zeros((d, 1))]),
        np.hstack([np.ones((1, d)), np.ones((1, 1))]),
    ]
    if g_rows.size:
        blocks.append(
            np.hstack([g_rows @ basis, (h - g_rows @ x_last)[:, None]])
        )
    rows = np.vstack(blocks)

    # Normalize row scales, drop trivial rows, detect trivially empty regions.
    scale = np.abs(rows[:, :d]).max(axis=1)
    trivial = scale < 1e-12
    if np.any(rows[trivial, d] < -1e-9):
        return None
    rows = rows[~trivial] / scale[~trivial, None]
    rows = np.unique(np.round(rows, 12), axis=0)
    a_mat, b_vec = rows[:, :d], rows[:, d]
    m = a_mat.shape[0]

    k_last = k_sym[n - 1, : n - 1]
    lin = (c[:d] - c[d]) - 2.0 * alpha * k_last
    quad = alpha * (basis.T @ k_sym @ basis)
    base = float(c[d])

    best_value = -np.inf
    best_t: np.ndarray | None = None
    for k in range(0, d + 1):
        if k > m:
            break
        idx = np.array(list(itertools.combinations(range(m), k)), dtype=int)
        count = idx.shape[0] if k else 1
        size = d + k
        systems = np.zeros((count, size, size))
        rhs = np.zeros((count, size))
        systems[:, :d, :d] = 2.0 * quad
        rhs[:, :d] = lin
        if k:
            sub = a_mat[idx]
            systems[:, :d, d:] = sub.transpose(0, 2, 1)
            systems[:, d:, :d] = sub
            rhs[:, d:] = b_vec[idx]

        u, s, vt = np.linalg.svd(systems)
        cutoff = s[:, :1] * 1e-11
        s_inv = np.divide(1.0, s, out=np.zeros_like(s), where=s > np.maximum(cutoff, 1e-300))
        z = np.einsum("nji,nj->ni", u, rhs) * s_inv
        sols = np.einsum("nji,nj->ni", vt, z)
        residual = np.abs(np.einsum("nij,nj->ni", systems, sols) - rhs).max(axis=1)
        consistent = residual <= 1e-7 * (1.0 + np.abs(rhs).max(axis=1))

        t_cand = sols[consistent, :d]
        if not t_cand.size:
            continue
        feasible = np.all(t_cand @ a_mat.T <= b_vec + REGION_FEAS_TOL, axis=1)
        t_cand = t_cand[feasible]
        if not t_cand.size:
            continue
        values = (
            t_cand @ lin
            - np.einsum("ni,ij,nj->n", t_cand, quad, t_cand)
            + base
        )
        top = int(np.argmax(values))
        if values[top] > best_value:
            best_value = float(values[top])
            best_t = t_cand[top]

    if best_t is None:
        return None
    x = np.append(best_t, 1.0 - best_t.sum())
    # Clip float dust so downstream strategy validation holds exactly.
    x = np.clip(x, 0.0, 1.0)
    x /= x.sum()
    return best_value, x


# ---------------------------------------------------------------------------
# Branch and bound over per-type pure responses.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _SearchType:
    """Search-reduced view of one attacker type."""

    index: int
    probability: float
    actions: tuple[int, ...]  # arsenal indices surviving dedup/domination
    distinct_attacker_rows: np.ndarray  # one per distinct attacker-reward row


def _search_types(game: GameSpec) -> list[_SearchType]:
    out = []
    for ti, t in enumerate(game.types):
        ra = game.rewards.attacker[ti]
        rd = game.rewards.defender[ti]
        groups: dict[bytes, list[int]] = {}
        for ai in range(len(t.arsenal)):
            groups.setdefault(np.round(ra[ai], 12).tobytes(), []).append(ai)
        kept: list[int] = []
        distinct_rows = []
        for key in sorted(groups):
            members = groups[key]
            distinct_rows.append(ra[members[0]])
            for ai in members:
                dominated = any(
                    aj != ai
                    and np.all(rd[aj] >= rd[ai] - 1e-12)
                    and (np.any(rd[aj] > rd[ai] + 1e-12) or aj < ai)
                    for aj in members
                )
                if not dominated:
                    kept.append(ai)
        out.append(
            _SearchType(
                index=ti,
                probability=t.probability,
                actions=tuple(sorted(kept)),
                distinct_attacker_rows=np.vstack(distinct_rows),
            )
        )
    # High-probability types first: they weigh most on the objective, so
    # their constraints prune earliest.
    out.sort(key=lambda st: (-st.probability, st.index))
    return out


def _response_region_rows(
    game: GameSpec, st: _SearchType, action: int
) -> tuple[np.ndarray, np.ndarray]:
    """Inequalities forcing `action` to be attacker-optimal for this type."""
    chosen = game.rewards.attacker[st.index][action]
    diff = st.distinct_attacker_rows - chosen
    keep = np.abs(diff).max(axis=1) > 1e-12
    g = diff[keep]
    return g, np.zeros(len(g))


def solve_bsg(game: GameSpec) -> SolveResult:
    """Globally optimal cost-aware switching strategy.

    Searches per-type pure responses depth-first; each node solves the
    exact region subproblem for the decided types, with undecided types
    bounded by zero (their defender rewards are never positive and NO-OP
    is always available).  Ties among optimal attacker actions resolve
    in the defender's favor automatically, since the search maximizes
    over all response profiles.
    """
    n = game.n_configs
    k_sym = 0.5 * (game.switch_cost + game.switch_cost.T)
    search_types = _search_types(game)
    n_types = len(search_types)

    incumbent_value = -np.inf
    incumbent_x: np.ndarray | None = None
    warm_starts = [uniform_strategy(game)] + [
        np.eye(n)[i] for i in range(n)
    ]
    for x0 in warm_starts:
        value = evaluate_strategy(game, x0, "exact").objective
        if value > incumbent_value:
            incumbent_value = value
            incumbent_x = x0

    nodes_explored = 0
    empty_rows = np.zeros((0, n))

    def expand(depth: int, c_vec: np.ndarray, g_rows: np.ndarray, h: np.ndarray):
        nonlocal incumbent_value, incumbent_x, nodes_explored
        nodes_explored += 1
        solved = _region_maximize(c_vec, g_rows, h, k_sym, game.alpha)
        if solved is None:
            return
        bound, x_opt = solved
        if depth == n_types:
            if bound > incumbent_value + PRUNE_TOL:
                incumbent_value = bound
                incumbent_x = x_opt
            return
        if bound <= incumbent_value + PRUNE_TOL:
            return
        st = search_types[depth]
        rd = game.rewards.defender[st.index]
        # Least damaging actions first (NO-OP's all-zero row leads) to find
        # strong incumbents early.
        order = sorted(st.actions, key=lambda ai: (-rd[ai].max(), ai))
        for action in order:
            g_new, h_new = _response_region_rows(game, st, action)
            expand(
                depth + 1,
                c_vec + st.probability * rd[action],
                np.vstack([g_rows, g_new]),
                np.concatenate([h, h_new]),
            )

    expand(0, np.zeros(n), empty_rows, np.zeros(0))

    assert incumbent_x is not None  # simplex is never empty
    x_star = validate_strategy(game, incumbent_x)
    responses = tuple(
        best_response(game, ti, x_star) for ti in range(len(game.types))
    )
    defender_term = float(
        sum(t.probability * r.defender_term for t, r in zip(game.types, responses))
    )
    cost = exact_switching_cost(game, x_star)
    objective = defender_term - game.alpha * cost
    if abs(objective - incumbent_value) > 1e-6 * (1.0 + abs(incumbent_value)):
        raise RuntimeError(
            "solver certificate mismatch: "
            f"search value {incumbent_value!r} vs re-evaluated {objective!r}"
        )
    return SolveResult(
        strategy=x_star,
        responses=responses,
        w_matrix=np.outer(x_star, x_star),
        objective=objective,
        defender_reward_term=defender_term,
        mccormick_cost_term=cost,
        exact_cost_term=cost,
        alpha=game.alpha,
        nodes_explored=nodes_explored,
    )
