"""Independent brute-force solver used only by tests.

Enumerates every joint pure-response profile (no pruning, no action
dedup) and maximizes the full objective over each profile's
best-response region, working in the full x-space with an explicit
simplex-equality multiplier -- deliberately a different construction
from the production solver's reduced-space search.  alpha = 0 profiles
are additionally cross-checked against an LP solved by scipy/HiGHS, and
the winning profile against a deterministic simplex-lattice scan.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

FEAS_TOL = 1e-8


def _profile_region(game, profile):
    """(c_lin, G) for a joint profile: defender objective and region rows."""
    n = game.n_configs
    c = np.zeros(n)
    g_rows = []
    for ti, action in enumerate(profile):
        ra = game.rewards.attacker[ti]
        c = c + game.types[ti].probability * game.rewards.defender[ti][action]
        for other in range(ra.shape[0]):
            if other != action:
                g_rows.append(ra[other] - ra[action])
    g = np.vstack(g_rows) if g_rows else np.zeros((0, n))
    return c, g


def _region_max_full_space(c, g, k_sym, alpha):
    """Exact max of c.x - alpha x'Kx over {x in simplex, Gx <= 0}."""
    n = c.shape[0]
    ineq_rows = np.vstack([-np.eye(n), g])  # rows r with r.x <= 0 or <= b
    ineq_rhs = np.concatenate([np.zeros(n), np.zeros(len(g))])

    ones = np.ones(n)
    best = None
    m = len(ineq_rows)
    for size in range(0, n):
        for subset in itertools.combinations(range(m), size):
            rows = ineq_rows[list(subset)] if subset else np.zeros((0, n))
            rhs_act = ineq_rhs[list(subset)] if subset else np.zeros(0)
            n_lam = 1 + len(rows)
            dim = n + n_lam
            system = np.zeros((dim, dim))
            system[:n, :n] = 2.0 * alpha * k_sym
            system[:n, n] = ones
            system[n, :n] = ones
            if len(rows):
                system[:n, n + 1 :] = rows.T
                system[n + 1 :, :n] = rows
            rhs = np.concatenate([c, [1.0], rhs_act])
            sol, *_ = np.linalg.lstsq(system, rhs, rcond=1e-11)
            if np.abs(system @ sol - rhs).max() > 1e-7 * (1.0 + np.abs(rhs).max()):
                continue
            x = sol[:n]
            if np.any(x < -FEAS_TOL) or abs(x.sum() - 1.0) > FEAS_TOL:
                continue
            if len(g) and np.any(g @ x > FEAS_TOL):
                continue
            value = float(c @ x - alpha * x @ k_sym @ x)
            if best is None or value > best[0]:
                best = (value, np.clip(x, 0.0, None) / np.clip(x, 0.0, None).sum())
    return best


def _region_max_lp(c, g):
    """alpha = 0 cross-check: plain LP over the region."""
    result = linprog(
        -c,
        A_ub=g if len(g) else None,
        b_ub=np.zeros(len(g)) if len(g) else None,
        A_eq=np.ones((1, len(c))),
        b_eq=[1.0],
        bounds=(0, 1),
        method="highs",
    )
    if result.status == 0:
        return float(-result.fun), np.asarray(result.x)
    return None


def _lattice_points(n, resolution):
    """All points of the simplex lattice {k/resolution}."""
    for combo in itertools.combinations_with_replacement(range(n), resolution):
        counts = np.bincount(np.asarray(combo, dtype=int), minlength=n)
        yield counts / resolution


def oracle_solve(game, lattice_check=True):
    """Global optimum via exhaustive joint-profile enumeration.

    Returns (objective, x, profile_indices).
    """
    k_sym = 0.5 * (game.switch_cost + game.switch_cost.T)
    arsenal_sizes = [len(t.arsenal) for t in game.types]
    best = None
    for profile in itertools.product(*(range(s) for s in arsenal_sizes)):
        c, g = _profile_region(game, profile)
        solved = _region_max_full_space(c, g, k_sym, game.alpha)
        if game.alpha == 0.0:
            lp = _region_max_lp(c, g)
            if (lp is None) != (solved is None):
                raise AssertionError(
                    f"oracle internal mismatch (feasibility) on profile {profile}"
                )
            if lp is not None and abs(lp[0] - solved[0]) > 1e-6 * (1 + abs(lp[0])):
                raise AssertionError(
                    f"oracle internal mismatch on profile {profile}: "
                    f"enumeration {solved[0]!r} vs LP {lp[0]!r}"
                )
        if solved is not None and (best is None or solved[0] > best[0]):
            best = (solved[0], solved[1], profile)

    assert best is not None, "simplex is never empty; some profile must be feasible"
    if lattice_check and game.n_configs <= 4:
        value, _, profile = best
        c, g = _profile_region(game, profile)
        grid_best = -np.inf
        for x in _lattice_points(game.n_configs, 24):
            if len(g) and np.any(g @ x > FEAS_TOL):
                continue
            grid_best = max(
                grid_best, float(c @ x - game.alpha * x @ k_sym @ x)
            )
        if grid_best > value + 1e-6:
            raise AssertionError(
                f"oracle candidate enumeration missed a lattice point: "
                f"{grid_best!r} > {value!r}"
            )
    return best


def oracle_best_response(game, type_index, x):
    """Exhaustive argmax over one type's arsenal (attacker-value only)."""
    x = np.asarray(x, dtype=float)
    values = game.rewards.attacker[type_index] @ x
    return int(np.argmax(values)), float(values.max())


def oracle_kcv(game, k, solver):
    """Independent k-CV enumeration; `solver` maps a game to an objective."""
    from mtdgame.analysis import remove_attacks

    pool = game.attack_pool()
    outcomes = {}
    for subset in itertools.combinations(pool, k):
        outcomes[frozenset(subset)] = solver(remove_attacks(game, set(subset)))
    best = max(outcomes.values())
    winners = {s for s, v in outcomes.items() if v >= best - 1e-8}
    return best, winners, outcomes
